"""
CLI for molunfold: inspect molecules, build HUBO objectives, solve, benchmark
and run the QAOA experiment.

Every subcommand reads defaults from [tool.molunfold] / molunfold.yaml;
flags given on the command line win.
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import numpy as np

from molunfold import export
from molunfold.bench import run_benchmark, write_report
from molunfold.config import UnfoldConfig, load_config
from molunfold.molgraph import load_molecule, prepare, to_xyz_bonds
from molunfold.plugins import get_registered_solvers, get_solver
from molunfold.polynomial import Polynomial, prune_threshold, term_stats
from molunfold.problem import UnfoldingProblem
from molunfold.qaoa import (
    QaoaParams,
    build_circuit,
    build_diagonal,
    grid_axis,
    rescale,
    solve_qaoa,
)
from molunfold.validation import validate_run_config

logger = logging.getLogger("molunfold")

MOLECULE_SUFFIXES = (".mol", ".sdf", ".xyz")


def _configure_logging(verbose: bool, quiet: bool) -> None:
    level = logging.DEBUG if verbose else logging.ERROR if quiet else logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger("molunfold").setLevel(level)


def _resolve_config(args: argparse.Namespace) -> UnfoldConfig:
    """Config file values overridden by any flag that was given."""
    cfg = load_config(getattr(args, "config", None))
    overrides = {
        name: getattr(args, name, None)
        for name in (
            "encoding", "d", "solver", "steps", "dt", "a0", "c0", "samples", "seed",
            "prune", "rescale", "grid", "jobs", "include_hydrogens", "shots",
            "cooling_factor", "rounds", "reference", "windows", "out",
        )
    }
    return cfg.updated(**overrides)


def _check(cfg: UnfoldConfig, **kwargs: Any) -> None:
    errors = validate_run_config(cfg, **kwargs)
    if errors:
        raise SystemExit("; ".join(errors))


def _seed(cfg: UnfoldConfig) -> int:
    """The configured seed, or a fresh one that gets recorded in the outputs."""
    if cfg.seed is not None:
        return cfg.seed
    seed = int(np.random.SeedSequence().entropy % 2**32)
    logger.info(f"no seed given, using {seed}")
    return seed


def _solver_options(cfg: UnfoldConfig, args: argparse.Namespace) -> dict[str, Any]:
    return {
        "steps": cfg.steps,
        "dt": cfg.dt,
        "a0": cfg.a0,
        "c0": cfg.c0,
        "cooling_factor": cfg.cooling_factor,
        "rounds": cfg.rounds,
        "jobs": cfg.jobs,
        "printed_table": bool(getattr(args, "printed_table", False)),
    }


def cmd_inspect(args: argparse.Namespace) -> None:
    """Print atom/bond counts, rotatable bonds and fragment sizes."""
    path = Path(args.path)
    if not path.exists():
        raise SystemExit(f"input not found: {path}")
    mol = load_molecule(path)
    fd = prepare(mol)
    heavy = sum(1 for a in mol.atoms if a.is_heavy)
    print(f"name: {mol.name or path.stem}")
    print(f"atoms: {mol.num_atoms} (heavy {heavy})")
    print(f"bonds: {len(mol.bonds)}")
    print(f"rotatable bonds: {fd.num_torsions}")
    for rb in fd.rotatable:
        print(f"  torsion {rb.torsion_index}: bond {rb.bond_index} ({rb.static_end} -> {rb.mobile_end})")
    sizes = ", ".join(str(len(m)) for m in fd.members)
    print(f"fragments: {fd.fragment_count} (sizes {sizes})")


def cmd_hubo(args: argparse.Namespace) -> None:
    """Build the objective polynomial and write it as HUBO JSON plus a term-stats CSV."""
    cfg = _resolve_config(args)
    _check(cfg.updated(solver="brute"), inputs=[args.path])
    problem = UnfoldingProblem.load(args.path, cfg.d, include_hydrogens=cfg.include_hydrogens)
    registry = problem.registry(cfg.encoding, printed_table=args.printed_table)
    poly = problem.objective(registry, prune=cfg.prune, jobs=cfg.jobs)
    stats = term_stats(poly)
    output = Path(args.output) if args.output else Path(cfg.out) / f"{problem.name}_{cfg.encoding}.json"
    sidecar = output.with_name(f"{output.stem}_terms.csv")
    export.write_json(output, poly.to_json(registry.to_dict()))
    export.write_term_stats(sidecar, stats)
    print(f"variables: {poly.num_vars}, terms: {stats['num_terms']}, max degree: {stats['max_degree']}")
    print(f"Wrote {output}")
    print(f"Wrote {sidecar}")


def cmd_solve(args: argparse.Namespace) -> None:
    """Solve one molecule and write the result JSON, best-so-far trace and unfolded conformer."""
    cfg = _resolve_config(args)
    _check(cfg, inputs=[args.path])
    seed = _seed(cfg)
    problem = UnfoldingProblem.load(args.path, cfg.d, include_hydrogens=cfg.include_hydrogens)
    if problem.num_torsions == 0:
        raise SystemExit(f"{problem.name}: no rotatable bonds, nothing to optimize")
    result = get_solver(cfg.solver)(problem, seed=seed, **_solver_options(cfg, args))
    unfolded = problem.unfolded(result.grid_indices)
    out = Path(cfg.out)
    written = [
        export.write_json(out / f"{problem.name}_result.json", result),
        export.write_trace(out / f"{problem.name}_trace.csv", result.trace),
        export.atomic_write_text(out / f"{problem.name}_unfolded.xyz", to_xyz_bonds(unfolded)),
    ]
    print(f"best volume: {result.best_volume:.6f}")
    print(f"grid indices: {result.grid_indices}")
    for path in written:
        print(f"Wrote {path}")


def _dataset(path: Path) -> list[Path]:
    if path.is_file():
        return [path]
    if not path.is_dir():
        raise SystemExit(f"input not found: {path}")
    files = sorted(p for p in path.iterdir() if p.suffix.lower() in MOLECULE_SUFFIXES)
    if not files:
        raise SystemExit(f"no molecule files ({', '.join(MOLECULE_SUFFIXES)}) in {path}")
    return files


def cmd_bench(args: argparse.Namespace) -> None:
    """Benchmark solvers over a directory of molecules and write the report CSVs."""
    cfg = _resolve_config(args)
    solvers = [s.strip() for s in args.solvers.split(",") if s.strip()]
    _check(cfg, inputs=[args.dataset], solvers=solvers)
    files = _dataset(Path(args.dataset))
    problems = [
        UnfoldingProblem.load(f, cfg.d, include_hydrogens=cfg.include_hydrogens) for f in files
    ]
    options = _solver_options(cfg, args)
    report = run_benchmark(
        problems,
        solvers,
        cfg.samples,
        cfg.windows,
        seed=_seed(cfg),
        options=options,
        reference=cfg.reference,  # type: ignore[arg-type]
        jobs=cfg.jobs,
        align_rmsd=args.align,
    )
    for summary in report.windows:
        ttt = "NA" if summary.median_ttt is None else f"{summary.median_ttt:.4g}s"
        print(f"{summary.solver} window {summary.window}: median TTT {ttt}, median p {summary.p_median:.3f}")
    for path in write_report(report, cfg.out):
        print(f"Wrote {path}")


def cmd_qaoa(args: argparse.Namespace) -> None:
    """Single-layer QAOA on a HUBO JSON: prune, rescale, grid scan, refine, sample."""
    cfg = _resolve_config(args)
    _check(cfg.updated(solver="brute"), inputs=[args.hubo])
    poly = Polynomial.from_json(Path(args.hubo).read_text())
    before = len(poly)
    if cfg.prune > 0:
        poly = prune_threshold(poly, cfg.prune)
        print(f"pruned at {cfg.prune}: {before} -> {len(poly)} terms")
    _check(cfg.updated(solver="brute"), n_qubits=poly.num_vars)
    if cfg.rescale:
        poly = rescale(poly)  # type: ignore[assignment]
    h = build_diagonal(poly)
    report = solve_qaoa(h, cfg.grid, cfg.shots, _seed(cfg))
    out = Path(cfg.out)
    written = [
        export.write_landscape(out / "landscape.csv", grid_axis(cfg.grid), np.array(report.landscape)),
        export.write_histogram(out / "histogram.csv", report.histogram),
        export.write_json(out / "qaoa_report.json", report),
    ]
    if args.circuit:
        circuit = build_circuit(poly, QaoaParams(gamma=report.gamma, beta=report.beta))
        written.append(export.atomic_write_text(out / "circuit.txt", circuit.to_text()))
    print(f"qubits: {report.n_qubits}, terms: {len(poly)}")
    print(f"ground energy: {report.ground_energy:.6g} at {report.ground_state}")
    print(f"mode: {report.mode} (p={report.mode_probability:.4f})")
    for path in written:
        print(f"Wrote {path}")


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Config file (.toml or .yaml); default: discovery")
    common.add_argument("--encoding", choices=["phase", "onehot"])
    common.add_argument("--d", type=int, help="Grid points per torsion")
    common.add_argument("--solver", help=f"Solver ({', '.join(get_registered_solvers())})")
    common.add_argument("--steps", type=int)
    common.add_argument("--dt", type=float)
    common.add_argument("--a0", type=float)
    common.add_argument("--c0", type=float, help="Gradient weight; automatic when omitted")
    common.add_argument("--samples", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--prune", type=float, help="Drop terms with |coefficient| below this")
    common.add_argument("--rescale", action="store_true", default=None)
    common.add_argument("--grid", type=int, help="Landscape resolution per axis")
    common.add_argument("--jobs", type=int)
    common.add_argument("--shots", type=int)
    common.add_argument("--cooling-factor", dest="cooling_factor", type=float)
    common.add_argument("--rounds", type=int, help="Greedy sweep rounds")
    common.add_argument("--reference", choices=["brute", "greedy"])
    common.add_argument(
        "--windows",
        type=lambda s: tuple(int(x) for x in s.split(",")),
        help="Comma-separated step windows, e.g. 10,50,100",
    )
    common.add_argument("--printed-table", dest="printed_table", action="store_true")
    hydrogens = common.add_mutually_exclusive_group()
    hydrogens.add_argument("--include-h", dest="include_hydrogens", action="store_true", default=None)
    hydrogens.add_argument("--exclude-h", dest="include_hydrogens", action="store_false")
    common.add_argument("--out", help="Output directory")
    return common


def main(argv: Sequence[str] | None = None) -> None:
    parser = argparse.ArgumentParser(prog="molunfold")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="Errors only")
    subparsers = parser.add_subparsers(dest="command", required=True)
    common = _common_parser()

    inspect_parser = subparsers.add_parser("inspect", help="Summarize a molecule file")
    inspect_parser.add_argument("path")
    inspect_parser.set_defaults(func=cmd_inspect)

    hubo_parser = subparsers.add_parser("hubo", parents=[common], help="Write the HUBO objective")
    hubo_parser.add_argument("path")
    hubo_parser.add_argument("-o", "--output", help="Output JSON file")
    hubo_parser.set_defaults(func=cmd_hubo)

    solve_parser = subparsers.add_parser("solve", parents=[common], help="Unfold one molecule")
    solve_parser.add_argument("path")
    solve_parser.set_defaults(func=cmd_solve)

    bench_parser = subparsers.add_parser("bench", parents=[common], help="Benchmark solvers on a dataset")
    bench_parser.add_argument("dataset", help="Directory of .mol/.sdf/.xyz files")
    bench_parser.add_argument("--solvers", default="bsb,sa", help="Comma-separated solver names")
    bench_parser.add_argument("--align", action="store_true", help="Kabsch-align before RMSD")
    bench_parser.set_defaults(func=cmd_bench)

    qaoa_parser = subparsers.add_parser("qaoa", parents=[common], help="QAOA experiment on a HUBO JSON")
    qaoa_parser.add_argument("hubo")
    qaoa_parser.add_argument("--circuit", action="store_true", help="Also write the gate list")
    qaoa_parser.set_defaults(func=cmd_qaoa)

    args = parser.parse_args(argv)
    _configure_logging(args.verbose, args.quiet)
    try:
        args.func(args)
    except (ValueError, RuntimeError, OSError) as exc:
        message = " ".join(str(exc).split())
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1) from exc


if __name__ == "__main__":
    main()
