"""
Benchmark metrics and the experiment driver.

Volume ratio α = O / O_ref, time-to-target
TTT = (T/N)·log(1 - 0.99)/log(1 - p) against 99.7% of the reference volume,
and TTS, the same formula with p the probability of hitting the exact grid
optimum. Jobs are seeded from (master seed, molecule, solver, sample), so
results do not depend on scheduling.
"""

from __future__ import annotations

import hashlib
import logging
import math
import time
from collections import defaultdict
from collections.abc import Iterable, Mapping, Sequence
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, Field

from molunfold import export
from molunfold.encoding import EncodingKind
from molunfold.geometry import Conformation, rmsd
from molunfold.molgraph import to_xyz_bonds
from molunfold.plugins import get_solver
from molunfold.polynomial import term_stats
from molunfold.problem import UnfoldingProblem
from molunfold.solvers import DEFAULT_CAP, CapExceededError, SolveResult, greedy_geodock, run_brute

logger = logging.getLogger(__name__)

SUCCESS_FRACTION = 0.997
CONFIDENCE = 0.99
TARGET_SLACK = 1e-9

Reference = Literal["brute", "greedy"]


class BoxplotStats(BaseModel):
    min: float
    q1: float
    median: float
    q3: float
    max: float
    count: int

    @classmethod
    def from_values(cls, values: Iterable[float]) -> BoxplotStats:
        """Quartiles by linear interpolation between order statistics."""
        data = np.asarray(list(values), dtype=float)
        if data.size == 0:
            raise ValueError("boxplot statistics need at least one value")
        q = np.percentile(data, [0, 25, 50, 75, 100], method="linear")
        return cls(
            min=float(q[0]),
            q1=float(q[1]),
            median=float(q[2]),
            q3=float(q[3]),
            max=float(q[4]),
            count=int(data.size),
        )


class TttResult(BaseModel):
    solver: str
    molecule: str
    window: int
    T: float
    N: int
    p: float
    ttt: float | None


class VolumeRatioSeries(BaseModel):
    solver: str
    mean_ratio: list[float]
    samples: int
    molecules: list[str]


class WindowSummary(BaseModel):
    solver: str
    window: int
    median_ttt: float | None
    p_median: float
    ttt_excluded: int
    median_tts: float | None
    p_opt_median: float
    tts_excluded: int


class GroupStats(BaseModel):
    group: str
    stats: BoxplotStats


class BenchmarkManifest(BaseModel):
    master_seed: int
    solvers: list[str]
    samples: int
    windows: list[int]
    d: int
    reference: str
    options: dict[str, Any]
    inputs: list[dict[str, Any]]
    skipped: list[str] = Field(default_factory=list)


class BenchmarkReport(BaseModel):
    ratio_series: list[VolumeRatioSeries]
    windows: list[WindowSummary]
    ttt: list[TttResult]
    tts: list[TttResult]
    rmsd: list[GroupStats]
    terms: list[GroupStats]
    manifest: BenchmarkManifest
    build_seconds: dict[str, float] = Field(default_factory=dict)


# --- metrics ---


def volume_ratio(volume: float | SolveResult, reference: float) -> float:
    if reference <= 0:
        raise ValueError(f"reference volume must be positive, got {reference}")
    value = volume.best_volume if isinstance(volume, SolveResult) else volume
    return float(value) / reference


def ttt(T: float, N: int, p: float) -> float | None:
    """Expected time to reach the target with 99% confidence; None when p = 0."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"success probability must be in [0, 1], got {p}")
    if T <= 0:
        raise ValueError(f"total time must be positive, got {T}")
    if N < 1:
        raise ValueError(f"sample count must be >= 1, got {N}")
    if p == 1.0:
        return T / N
    if p == 0.0:
        return None
    return (T / N) * math.log(1.0 - CONFIDENCE) / math.log(1.0 - p)


def tts(T: float, N: int, p_opt: float) -> float | None:
    """TTT with p the probability of finding the optimum."""
    return ttt(T, N, p_opt)


def meets(volume: float, target: float) -> bool:
    return volume >= target - TARGET_SLACK * max(1.0, abs(target))


def success_probability(results: Sequence[SolveResult | float], target: float) -> float:
    if not results:
        raise ValueError("success probability needs at least one result")
    values = [r.best_volume if isinstance(r, SolveResult) else float(r) for r in results]
    return sum(meets(v, target) for v in values) / len(values)


def _median(values: Sequence[float | None]) -> tuple[float | None, int]:
    defined = [v for v in values if v is not None]
    excluded = len(values) - len(defined)
    return (float(np.median(defined)) if defined else None), excluded


def rmsd_report(
    pairs: Iterable[tuple[str, Conformation | np.ndarray, Conformation | np.ndarray]],
    *,
    align: bool = False,
    atoms: Sequence[int] | None = None,
) -> list[GroupStats]:
    """Boxplot statistics of RMSD values per group label, groups sorted by label."""
    groups: dict[str, list[float]] = defaultdict(list)
    for group, a, b in pairs:
        groups[group].append(rmsd(a, b, align=align, atoms=atoms))
    return [GroupStats(group=g, stats=BoxplotStats.from_values(v)) for g, v in sorted(groups.items())]


def term_count_report(
    problems: Sequence[UnfoldingProblem],
    encodings: Sequence[EncodingKind | str] = (EncodingKind.PHASE,),
    *,
    jobs: int = 1,
) -> list[GroupStats]:
    """Non-constant term counts of built objectives, grouped by encoding and M."""
    groups: dict[tuple[str, int], list[float]] = defaultdict(list)
    for problem in problems:
        if problem.num_torsions == 0:
            continue
        for kind in encodings:
            registry = problem.registry(kind)
            stats = term_stats(problem.objective(registry, jobs=jobs))
            groups[(registry.kind.value, problem.num_torsions)].append(stats["num_terms"])
    return [
        GroupStats(group=f"{enc}:M={m}", stats=BoxplotStats.from_values(v))
        for (enc, m), v in sorted(groups.items())
    ]


# --- orchestration ---


def job_seed(master: int, molecule: int, solver: int, sample: int) -> int:
    return int(np.random.SeedSequence([master, molecule, solver, sample]).generate_state(1)[0])


def _run_job(args: tuple[int, UnfoldingProblem, str, int, dict[str, Any]]) -> SolveResult:
    _, problem, name, seed, options = args
    return get_solver(name)(problem, seed=seed, **options)


_SOLVER_ENCODINGS = {"bsb": EncodingKind.PHASE, "sa": EncodingKind.ONEHOT}


def input_hash(problem: UnfoldingProblem) -> str:
    return hashlib.sha256(to_xyz_bonds(problem.molecule).encode("utf-8")).hexdigest()


def run_benchmark(
    problems: Sequence[UnfoldingProblem],
    solvers: Sequence[str],
    samples: int,
    windows: Sequence[int],
    *,
    seed: int = 0,
    options: Mapping[str, Any] | None = None,
    reference: Reference = "brute",
    jobs: int = 1,
    cap: int = DEFAULT_CAP,
    align_rmsd: bool = False,
) -> BenchmarkReport:
    """
    Run every solver ``samples`` times on every molecule and aggregate.

    Molecules whose exhaustive search exceeds ``cap``, or without rotatable
    bonds, are skipped with a warning. ``reference="greedy"`` measures ratios
    and targets against the greedy sweep instead of the exact optimum.
    """
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    if not windows or min(windows) < 1:
        raise ValueError(f"windows must be positive step counts, got {list(windows)}")
    if reference not in ("brute", "greedy"):
        raise ValueError(f"reference must be 'brute' or 'greedy', got {reference!r}")
    for name in solvers:
        get_solver(name)
    opts = dict(options or {})

    kept: list[tuple[int, UnfoldingProblem]] = []
    optimum: dict[int, float] = {}
    ref: dict[int, float] = {}
    optimal_conf: dict[int, Conformation] = {}
    skipped: list[str] = []
    build_seconds: dict[str, float] = {}
    for idx, problem in enumerate(problems):
        if problem.num_torsions == 0:
            logger.warning(f"skipping {problem.name}: no rotatable bonds")
            skipped.append(problem.name)
            continue
        try:
            exact = run_brute(problem, cap=cap)
        except CapExceededError as exc:
            logger.warning(f"skipping {problem.name}: {exc}")
            skipped.append(problem.name)
            continue
        kept.append((idx, problem))
        optimum[idx] = exact.best_volume
        optimal_conf[idx] = problem.conformation(exact.grid_indices)
        if reference == "greedy":
            ref[idx] = greedy_geodock(
                problem.molecule,
                problem.decomposition,
                problem.grid,
                opts.get("rounds", 5),
                include_hydrogens=problem.include_hydrogens,
            ).best_volume
        else:
            ref[idx] = exact.best_volume
        for name in solvers:
            kind = _SOLVER_ENCODINGS.get(name)
            if kind is not None:
                started = time.perf_counter()
                problem.objective(problem.registry(kind), jobs=opts.get("jobs", 1))
                build_seconds[f"{problem.name}:{kind.value}"] = time.perf_counter() - started

    tasks = [
        (idx, problem, name, job_seed(seed, idx, s_idx, sample), opts)
        for idx, problem in kept
        for s_idx, name in enumerate(solvers)
        for sample in range(samples)
    ]
    logger.info(f"benchmark: {len(kept)} molecules, {len(solvers)} solvers, {len(tasks)} runs")
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_job, tasks))
    else:
        outcomes = [_run_job(t) for t in tasks]

    results: dict[tuple[int, str], list[SolveResult]] = defaultdict(list)
    for (idx, _, name, _, _), outcome in zip(tasks, outcomes):
        results[(idx, name)].append(outcome)

    horizon = max(windows)
    names = [p.name for _, p in kept]
    ratio_series: list[VolumeRatioSeries] = []
    summaries: list[WindowSummary] = []
    ttt_rows: list[TttResult] = []
    tts_rows: list[TttResult] = []
    for name in solvers:
        ratios = np.zeros(horizon)
        count = 0
        for idx, _ in kept:
            for r in results[(idx, name)]:
                ratios += [volume_ratio(r.volume_at(step), ref[idx]) for step in range(1, horizon + 1)]
                count += 1
        if count:
            ratio_series.append(
                VolumeRatioSeries(
                    solver=name, mean_ratio=(ratios / count).tolist(), samples=samples, molecules=names
                )
            )
        for window in windows:
            per_ttt: list[TttResult] = []
            per_tts: list[TttResult] = []
            for idx, problem in kept:
                runs = results[(idx, name)]
                T = max(sum(r.time_at(window) for r in runs), 1e-12)
                volumes = [r.volume_at(window) for r in runs]
                p = success_probability(volumes, SUCCESS_FRACTION * ref[idx])
                p_opt = success_probability(volumes, optimum[idx])
                per_ttt.append(
                    TttResult(solver=name, molecule=problem.name, window=window, T=T, N=len(runs), p=p, ttt=ttt(T, len(runs), p))
                )
                per_tts.append(
                    TttResult(solver=name, molecule=problem.name, window=window, T=T, N=len(runs), p=p_opt, ttt=tts(T, len(runs), p_opt))
                )
            if not per_ttt:
                continue
            median_ttt, ttt_excluded = _median([r.ttt for r in per_ttt])
            median_tts, tts_excluded = _median([r.ttt for r in per_tts])
            summaries.append(
                WindowSummary(
                    solver=name,
                    window=window,
                    median_ttt=median_ttt,
                    p_median=float(np.median([r.p for r in per_ttt])),
                    ttt_excluded=ttt_excluded,
                    median_tts=median_tts,
                    p_opt_median=float(np.median([r.p for r in per_tts])),
                    tts_excluded=tts_excluded,
                )
            )
            ttt_rows.extend(per_ttt)
            tts_rows.extend(per_tts)

    rmsd_stats = rmsd_report(
        (
            (
                f"M={problem.num_torsions}",
                optimal_conf[idx].positions[problem.atoms],
                problem.molecule.positions[problem.atoms],
            )
            for idx, problem in kept
        ),
        align=align_rmsd,
    )
    encodings = sorted({_SOLVER_ENCODINGS[n] for n in solvers if n in _SOLVER_ENCODINGS}, key=lambda k: k.value)
    terms = term_count_report([p for _, p in kept], encodings) if encodings else []

    manifest = BenchmarkManifest(
        master_seed=seed,
        solvers=list(solvers),
        samples=samples,
        windows=list(windows),
        d=kept[0][1].d if kept else (problems[0].d if problems else 0),
        reference=reference,
        options=opts,
        inputs=[
            {"name": p.name, "sha256": input_hash(p), "num_torsions": p.num_torsions}
            for p in problems
        ],
        skipped=skipped,
    )
    return BenchmarkReport(
        ratio_series=ratio_series,
        windows=summaries,
        ttt=ttt_rows,
        tts=tts_rows,
        rmsd=rmsd_stats,
        terms=terms,
        manifest=manifest,
        build_seconds=build_seconds,
    )


def _stats_row(group: GroupStats) -> list[Any]:
    s = group.stats
    return [group.group, s.min, s.q1, s.median, s.q3, s.max, s.count]


STATS_HEADER = ["group", "min", "q1", "median", "q3", "max", "count"]


def write_report(report: BenchmarkReport, out_dir: str | Path) -> list[Path]:
    """Emit the benchmark CSVs and manifest into ``out_dir``."""
    out = Path(out_dir)
    written = [
        export.write_csv(
            out / "ratio_trace.csv",
            ["solver", "step", "mean_ratio"],
            (
                (series.solver, step + 1, value)
                for series in report.ratio_series
                for step, value in enumerate(series.mean_ratio)
            ),
        ),
        export.write_csv(
            out / "ttt.csv",
            ["solver", "window", "median_ttt_s", "p_median", "excluded"],
            ((w.solver, w.window, w.median_ttt, w.p_median, w.ttt_excluded) for w in report.windows),
        ),
        export.write_csv(
            out / "tts.csv",
            ["solver", "window", "median_tts_s", "p_opt_median", "excluded"],
            ((w.solver, w.window, w.median_tts, w.p_opt_median, w.tts_excluded) for w in report.windows),
        ),
        export.write_csv(out / "rmsd.csv", STATS_HEADER, (_stats_row(g) for g in report.rmsd)),
        export.write_csv(out / "terms.csv", STATS_HEADER, (_stats_row(g) for g in report.terms)),
        export.write_json(out / "manifest.json", report.manifest),
        export.write_json(
            out / "timings.json",
            {
                "build_seconds": report.build_seconds,
                "runs": [r.model_dump() for r in report.ttt],
            },
        ),
    ]
    logger.info(f"benchmark report written to {out}")
    return written
