#!/usr/bin/env python3
"""
Tests for score files, run manifests and parameter sweeps
"""

import numpy as np
import pytest

from qrc.bipartite_core import ScoreVector, Side
from qrc.config import QRCParams
from qrc.error_handling import DataException, IdMismatchException, ValidationException
from qrc.exports import align, read_scores, read_truth, score_table, scores_of, write_scores, write_simulation
from qrc.manifest import RunManifest, file_digest, manifest_path
from qrc.sweep import expand_grid, parse_axis, run_sweep

# ======================
# Score files
# ======================

def test_score_table_ranks():
    """Rank 1 is the best score; ties follow node order"""
    table = score_table([
        (["a", "b", "c"], ScoreVector(np.array([0.2, 0.7, 0.2]), Side.USER)),
        ([10, 9], ScoreVector(np.array([0.1, 0.3]), Side.ITEM)),
    ])
    assert table["rank"].tolist() == [2, 1, 3, 2, 1]
    assert table["id"].tolist() == ["a", "b", "c", "10", "9"]
    assert table["class"].tolist() == ["user"] * 3 + ["item"] * 2


def test_scores_survive_the_file(tmp_path):
    """Seventeen significant digits reproduce every double"""
    values = np.random.default_rng(3).uniform(size=50) / 7
    path = tmp_path / "scores.csv"
    write_scores(score_table([([f"i{n}" for n in range(50)], ScoreVector(values, Side.ITEM))]), path)
    ids, read_back = scores_of(read_scores(path), Side.ITEM)
    assert ids[0] == "i0"
    np.testing.assert_array_equal(read_back, values)


def test_align_reorders_and_checks():
    values = np.array([1.0, 2.0, 3.0])
    np.testing.assert_array_equal(align(["a", "b", "c"], values, ["c", "a", "b"], "t"), [3.0, 1.0, 2.0])
    with pytest.raises(IdMismatchException) as info:
        align(["a", "b"], values[:2], ["a", "z"], "users")
    assert info.value.offending == ["b", "z"]


def test_simulation_files(small_simulation, tmp_path):
    """Written ground truth reads back with text ids"""
    paths = write_simulation(small_simulation, tmp_path)
    users, items, truth = read_truth(paths["truth_users"], paths["truth_items"])
    assert users[:3] == ["0", "1", "2"]
    assert len(items) == small_simulation.n_items
    np.testing.assert_array_equal(truth.fitness, small_simulation.truth.fitness)

# ======================
# Manifests
# ======================

def test_manifest_round_trip(tmp_path):
    data = tmp_path / "events.csv"
    data.write_text("user_id,paper_id,action,timestamp\n")
    manifest = RunManifest(command="rank", argv=["rank", "--algo", "qr", "--output", "x y.csv"], seed=4)
    manifest.params.update(tq="0", lam="0.5")
    manifest.add_input(data)
    manifest.diagnostics["converged"] = "True"

    artifact = tmp_path / "scores.csv"
    assert manifest.write(artifact) == manifest_path(artifact)
    loaded = RunManifest.read(manifest_path(artifact))
    assert loaded == manifest
    assert loaded.changed_inputs() == []

    data.write_text("changed\n")
    assert loaded.changed_inputs() == [str(data)]
    data.unlink()
    assert loaded.changed_inputs() == [str(data)]


def test_manifest_lines_are_sorted():
    manifest = RunManifest(command="sweep", argv=[])
    manifest.params.update(rr="1", lam="0")
    lines = manifest.lines()
    assert lines[:2] == ["command=sweep", "argv=[]"]
    assert lines[-2:] == ["param.lam=0", "param.rr=1"]


def test_bad_manifest(tmp_path):
    path = tmp_path / "bad.manifest"
    path.write_text("command=rank\nno separator here\n")
    with pytest.raises(DataException) as info:
        RunManifest.read(path)
    assert info.value.error_code == "BAD_MANIFEST"


def test_file_digest(tmp_path):
    path = tmp_path / "f"
    path.write_bytes(b"abc")
    assert file_digest(path) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"

# ======================
# Sweeps
# ======================

def test_parse_axis():
    assert parse_axis("lam=0,0.5,1") == ("lam", [0.0, 0.5, 1.0])
    assert parse_axis("lam=0:1:0.1")[1] == [round(0.1 * i, 12) for i in range(11)]
    assert parse_axis("tq=1:1:0.5") == ("tq", [1.0])


@pytest.mark.parametrize("text", ["lam", "lam=", "=1,2", "lam=a,b", "lam=1:0:0.1", "lam=0:1:0", "lam=0:1"])
def test_parse_axis_rejects(text):
    with pytest.raises(ValidationException):
        parse_axis(text)


def test_expand_grid_order():
    """First axis varies slowest; base values fill the rest"""
    points = expand_grid({"tq": 0.0, "lam": 0.3}, [("tr", [0, 1]), ("rq", [0, 1])])
    assert [(p["tr"], p["rq"]) for p in points] == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert all(p["lam"] == 0.3 for p in points)
    assert expand_grid({"tq": 0.0}, []) == [{"tq": 0.0}]
    with pytest.raises(ValidationException):
        expand_grid({}, [("tq", [0]), ("tq", [1])])


def test_run_sweep_keeps_order_and_records_errors():
    """Rows come back in grid order whatever the worker count"""
    def runner(point):
        if point["x"] == 2:
            raise ValidationException("x = 2 is not allowed")
        return {"y": point["x"] ** 2}

    points = [{"x": x} for x in range(6)]
    for workers in (1, 3):
        rows = run_sweep(points, runner, workers)
        assert [row.index for row in rows] == list(range(6))
        assert rows[2].error == "VALIDATION_ERROR"
        assert rows[3].result == {"y": 9}
        assert rows[3].as_dict() == {"x": 3, "y": 9, "error": ""}


def test_run_sweep_records_invalid_parameters():
    """Model validation errors stay in their row"""
    def runner(point):
        return {"lam": QRCParams(lam=point["lam"]).lam}

    rows = run_sweep([{"lam": lam} for lam in (0.5, 1.5, 1.0)], runner)
    assert [row.error for row in rows] == [None, "VALIDATION_ERROR", None]
    assert rows[2].result == {"lam": 1.0}
