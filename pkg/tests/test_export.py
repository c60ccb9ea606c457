"""Unit tests for molunfold.export writers."""

import json

import numpy as np
from pydantic import BaseModel

from molunfold.export import (
    UNDEFINED,
    atomic_write_text,
    format_value,
    term_stats_rows,
    write_csv,
    write_histogram,
    write_json,
    write_landscape,
    write_term_stats,
    write_trace,
)


def test_format_value():
    assert format_value(None) == UNDEFINED
    assert format_value(True) == "true"
    assert format_value(np.int64(3)) == "3"
    assert format_value(0.1 + 0.2) == "0.3"
    assert format_value(np.float64(1e-20)) == "1e-20"
    assert format_value("M=3") == "M=3"


def test_atomic_write_creates_parents_and_leaves_no_temp_files(tmp_path):
    target = tmp_path / "a" / "b" / "out.txt"
    atomic_write_text(target, "hello")
    assert target.read_text() == "hello"
    assert [p.name for p in target.parent.iterdir()] == ["out.txt"]


def test_write_csv(tmp_path):
    path = write_csv(tmp_path / "t.csv", ["x", "y"], [(1, None), (2.5, "a")])
    assert path.read_text() == "x,y\n1,NA\n2.5,a\n"


def test_write_json_variants(tmp_path):
    class Point(BaseModel):
        x: int

    write_json(tmp_path / "m.json", Point(x=1))
    write_json(tmp_path / "d.json", {"b": 1, "a": 2})
    write_json(tmp_path / "s.json", '{"raw": true}')
    assert json.loads((tmp_path / "m.json").read_text()) == {"x": 1}
    assert (tmp_path / "d.json").read_text().index('"a"') < (tmp_path / "d.json").read_text().index('"b"')
    assert (tmp_path / "s.json").read_text() == '{"raw": true}\n'


def test_write_trace(tmp_path):
    write_trace(tmp_path / "trace.csv", [1.0, 2.0])
    assert (tmp_path / "trace.csv").read_text() == "step,best_volume\n1,1\n2,2\n"


def test_write_landscape_rows_are_gamma_major(tmp_path):
    axis = np.array([0.0, 1.0])
    values = np.array([[1.0, 2.0], [3.0, 4.0]])
    write_landscape(tmp_path / "l.csv", axis, values)
    lines = (tmp_path / "l.csv").read_text().splitlines()
    assert lines == ["gamma,beta,expectation", "0,0,1", "0,1,2", "1,0,3", "1,1,4"]


def test_write_histogram(tmp_path):
    write_histogram(tmp_path / "h.csv", {"11": 3, "01": 1})
    lines = (tmp_path / "h.csv").read_text().splitlines()
    assert lines == ["bitstring,probability,counts", "01,0.25,1", "11,0.75,3"]


def test_term_stats_rows_and_file(tmp_path):
    stats = {
        "num_terms": 3,
        "max_degree": 2,
        "constant": -5.0,
        "degree_histogram": {1: 2, 2: 1},
        "coefficient_histogram": {-2: 1, 1: 2},
    }
    rows = term_stats_rows(stats)
    assert rows[:3] == [("summary", "num_terms", 3), ("summary", "max_degree", 2), ("summary", "constant", -5.0)]
    assert ("decade", -2, 1) in rows
    write_term_stats(tmp_path / "terms.csv", stats)
    assert (tmp_path / "terms.csv").read_text().splitlines()[0] == "section,key,value"
