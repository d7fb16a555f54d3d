#!/usr/bin/env python3
"""
End-to-end tests of the qrc command line
"""

import json
import logging

import pandas as pd
import pytest
from click.testing import CliRunner

from cli.qrc_cli import cli
from qrc.manifest import manifest_path

EVENTS = """user_id,paper_id,action,timestamp
u1,p1,upload,0
u2,p2,upload,1
u3,p3,upload,2
u1,p4,upload,3
u2,p1,download,4
u3,p1,download,5
u4,p2,download,6
u4,p3,view,7
u1,p3,download,8
u5,p4,download,9
u5,p1,view,10
"""

PAPERS = """paper_id,submission_day,title,authors,citations,impact_factor
p1,10,First,H. E. Stanley,40,3.5
p2,20,Second,HE Stanley; D Sornette,12,2.0
p3,30,Third,D Sornette,3,1.0
p4,40,Fourth,A Smith,0,
"""


@pytest.fixture
def runner():
    yield CliRunner()
    # handlers installed by the group callback point at the runner's streams
    qrc_logger = logging.getLogger("qrc")
    for handler in list(qrc_logger.handlers):
        qrc_logger.removeHandler(handler)
        handler.close()


@pytest.fixture
def corpus(tmp_path):
    events = tmp_path / "events.csv"
    events.write_text(EVENTS)
    papers = tmp_path / "papers.csv"
    papers.write_text(PAPERS)
    return events, papers


@pytest.fixture
def simulated(runner, tmp_path):
    out = tmp_path / "sim"
    result = runner.invoke(cli, ["simulate", "--n-users", "80", "--steps", "30", "--seed", "3",
                                 "--output-dir", str(out)])
    assert result.exit_code == 0, result.output
    return out


def invoke(runner, *args):
    return runner.invoke(cli, [str(a) for a in args])

# ======================
# simulate
# ======================

def test_simulate_is_deterministic(runner, tmp_path):
    """Same seed, byte-identical files"""
    for name in ("a", "b"):
        result = invoke(runner, "simulate", "--n-users", 50, "--steps", 20, "--seed", 9,
                        "--output-dir", tmp_path / name)
        assert result.exit_code == 0, result.output
    for filename in ("events.csv", "truth_users.csv", "truth_items.csv"):
        assert (tmp_path / "a" / filename).read_bytes() == (tmp_path / "b" / filename).read_bytes()
    assert manifest_path(tmp_path / "a" / "events.csv").exists()


def test_simulate_zero_steps(runner, tmp_path):
    """No steps writes a header-only event file"""
    result = invoke(runner, "simulate", "--n-users", 5, "--steps", 0, "--output-dir", tmp_path)
    assert result.exit_code == 0, result.output
    assert (tmp_path / "events.csv").read_text() == "user_id,paper_id,action,timestamp\n"
    assert len(pd.read_csv(tmp_path / "truth_users.csv")) == 5


def test_simulate_manifest_beside_every_file(runner, tmp_path):
    """events and both truth tables each get the same manifest"""
    result = invoke(runner, "simulate", "--n-users", 20, "--steps", 5, "--seed", 2, "--output-dir", tmp_path)
    assert result.exit_code == 0, result.output
    sidecars = [manifest_path(tmp_path / name) for name in ("events.csv", "truth_users.csv", "truth_items.csv")]
    assert all(path.exists() for path in sidecars)
    assert len({path.read_bytes() for path in sidecars}) == 1
    assert "param.seed=2" in sidecars[1].read_text()


def test_simulate_rejects_bad_mu(runner, tmp_path):
    """Out-of-range model settings are usage errors"""
    result = invoke(runner, "simulate", "--mu", 0, "--output-dir", tmp_path)
    assert result.exit_code == 2

# ======================
# rank
# ======================

def test_rank_writes_scores_and_manifest(runner, corpus, tmp_path):
    """One row per node class member with ranks starting at 1"""
    events, papers = corpus
    output = tmp_path / "scores.csv"
    result = invoke(runner, "rank", "--algo", "qrc", "--preset", "QRC", "--events", events,
                    "--papers", papers, "--output", output)
    assert result.exit_code == 0, result.output

    table = pd.read_csv(output, dtype={"id": str})
    assert list(table.columns) == ["class", "id", "score", "rank"]
    counts = table["class"].value_counts().to_dict()
    assert counts == {"user": 5, "item": 4, "author": 3}
    for _, block in table.groupby("class"):
        assert sorted(block["rank"]) == list(range(1, len(block) + 1))

    manifest = manifest_path(output).read_text()
    assert "command=rank" in manifest
    assert "param.lam=0.56999999999999995" in manifest
    assert f"input.{events}=" in manifest


def test_qrc_without_coupling_matches_qr(runner, corpus, tmp_path):
    """lambda = 0 leaves user and item scores of QR untouched"""
    events, papers = corpus
    invoke(runner, "rank", "--algo", "qr", "--preset", "QR1", "--events", events, "--papers", papers,
           "--output", tmp_path / "qr.csv")
    invoke(runner, "rank", "--algo", "qrc", "--preset", "QR1", "--lambda", 0, "--events", events,
           "--papers", papers, "--output", tmp_path / "qrc.csv")
    qr_table = pd.read_csv(tmp_path / "qr.csv", dtype={"id": str})
    qrc_table = pd.read_csv(tmp_path / "qrc.csv", dtype={"id": str})
    shared = qrc_table[qrc_table["class"] != "author"].reset_index(drop=True)
    pd.testing.assert_frame_equal(qr_table, shared)


def test_rank_not_converged_exit_code(runner, corpus, tmp_path):
    """An exhausted iteration budget still writes scores, with exit 3"""
    events, _ = corpus
    output = tmp_path / "scores.csv"
    result = invoke(runner, "rank", "--algo", "bihits", "--max-iterations", 1, "--events", events,
                    "--output", output)
    assert result.exit_code == 3
    assert output.exists()
    assert "diag.converged=False" in manifest_path(output).read_text()


def test_author_algorithms_need_papers(runner, corpus, tmp_path):
    """er and qrc without --papers are usage errors"""
    events, _ = corpus
    for algo in ("er", "qrc"):
        result = invoke(runner, "rank", "--algo", algo, "--events", events, "--output", tmp_path / "s.csv")
        assert result.exit_code == 2


@pytest.mark.parametrize("flag,value", [("--tq", 2), ("--rr", -0.5), ("--lambda", 1.5)])
def test_out_of_range_parameters(runner, corpus, tmp_path, flag, value):
    """Parameters outside [0, 1] are usage errors"""
    events, papers = corpus
    result = invoke(runner, "rank", "--algo", "qrc", flag, value, "--events", events, "--papers", papers,
                    "--output", tmp_path / "s.csv")
    assert result.exit_code == 2


def test_bad_data_exit_code(runner, tmp_path):
    """Structural input problems exit with 4"""
    events = tmp_path / "events.csv"
    events.write_text("user_id,paper_id,action,timestamp\nu1,p1,upload,-3\n")
    result = invoke(runner, "rank", "--algo", "pop", "--events", events, "--output", tmp_path / "s.csv")
    assert result.exit_code == 4


def test_json_log_file(runner, corpus, tmp_path):
    """--log-file writes one JSON object per line"""
    events, _ = corpus
    log_file = tmp_path / "qrc.log"
    result = invoke(runner, "--log-file", log_file, "rank", "--algo", "bihits", "--events", events,
                    "--output", tmp_path / "s.csv")
    assert result.exit_code in (0, 3), result.output
    records = [json.loads(line) for line in log_file.read_text().splitlines() if line.strip()]
    assert records
    assert all({"timestamp", "level", "logger", "message"} <= set(r) for r in records)

# ======================
# evaluate
# ======================

def test_evaluate_against_truth(runner, simulated, tmp_path):
    """Correlations are reported for all four pairs"""
    scores = tmp_path / "scores.csv"
    result = invoke(runner, "rank", "--algo", "qr", "--preset", "QR1", "--events", simulated / "events.csv",
                    "--users", simulated / "truth_users.csv", "--output", scores)
    assert result.exit_code in (0, 3), result.output

    report = tmp_path / "report.csv"
    result = invoke(runner, "evaluate", "--scores", scores, "--truth-users", simulated / "truth_users.csv",
                    "--truth-items", simulated / "truth_items.csv", "--output", report)
    assert result.exit_code == 0, result.output
    table = pd.read_csv(report)
    assert list(table["metric"]) == ["c_qf", "c_ra", "c_qt", "c_rnu"]
    assert table["value"].between(-1, 1).all()


def test_evaluate_missing_users_is_data_error(runner, simulated, tmp_path):
    """Scores must cover every ground-truth user"""
    scores = tmp_path / "scores.csv"
    invoke(runner, "rank", "--algo", "bihits", "--filter-low-activity", "--events", simulated / "events.csv",
           "--output", scores)
    table = pd.read_csv(scores, dtype={"id": str})
    truth = pd.read_csv(simulated / "truth_users.csv")
    if (table["class"] == "user").sum() == len(truth):
        pytest.skip("every simulated user was active")
    result = invoke(runner, "evaluate", "--scores", scores, "--truth-users", simulated / "truth_users.csv",
                    "--truth-items", simulated / "truth_items.csv", "--output", tmp_path / "r.csv")
    assert result.exit_code == 4


def test_evaluate_top_k_and_authors(runner, corpus, tmp_path):
    """Top-k paper metrics and the author table come from the metadata"""
    events, papers = corpus
    scores = tmp_path / "scores.csv"
    invoke(runner, "rank", "--algo", "qrc", "--preset", "QRC", "--events", events, "--papers", papers,
           "--output", scores)
    h_index = tmp_path / "h.csv"
    h_index.write_text("author,h_index\nH. Eugene Stanley,100\nD Sornette,60\n")
    report = tmp_path / "report.csv"
    result = invoke(runner, "evaluate", "--scores", scores, "--papers", papers, "--events", events, "-k", 2,
                    "--h-index", h_index, "--output", report)
    assert result.exit_code == 0, result.output

    table = pd.read_csv(report, keep_default_na=False)
    top_k = table[table["report"] == "top_k"]
    assert list(top_k["metric"]) == ["submission_day", "downloads", "citations", "impact_factor"]
    authors = table[table["report"] == "top_authors"]
    assert len(authors) == 4
    assert authors.iloc[-1]["metric"] == "h_index"


def test_compare_identical_scores(runner, corpus, tmp_path):
    """Comparing a ranking with itself gives p = 1"""
    events, _ = corpus
    scores = tmp_path / "scores.csv"
    invoke(runner, "rank", "--algo", "bihits", "--events", events, "--output", scores)
    report = tmp_path / "report.csv"
    result = invoke(runner, "evaluate", "--scores", scores, "--compare", scores, "--output", report)
    assert result.exit_code == 0, result.output
    table = pd.read_csv(report)
    assert table["value"].tolist() == [1.0]


def test_evaluate_needs_something_to_do(runner, corpus, tmp_path):
    events, _ = corpus
    scores = tmp_path / "scores.csv"
    invoke(runner, "rank", "--algo", "pop", "--events", events, "--output", scores)
    result = invoke(runner, "evaluate", "--scores", scores, "--output", tmp_path / "r.csv")
    assert result.exit_code == 2

# ======================
# degree-dist, sweep, replay
# ======================

def test_degree_dist_three_users(runner, tmp_path):
    """Degrees (1, 1, 2) tabulate as (1, 1.0) and (2, 1/3)"""
    events = tmp_path / "events.csv"
    events.write_text(
        "user_id,paper_id,action,timestamp\na,p1,view,1\nb,p1,view,2\nc,p1,view,3\nc,p2,view,4\n"
    )
    output = tmp_path / "dist.csv"
    result = invoke(runner, "degree-dist", "--events", events, "--side", "user", "--output", output)
    assert result.exit_code == 0, result.output
    table = pd.read_csv(output)
    assert table["degree"].tolist() == [1, 2]
    assert table["fraction"].tolist() == pytest.approx([1.0, 1 / 3])


def test_degree_dist_author_side_needs_papers(runner, corpus, tmp_path):
    events, _ = corpus
    result = invoke(runner, "degree-dist", "--events", events, "--side", "author", "--output", tmp_path / "d.csv")
    assert result.exit_code == 2


def test_sweep_point_matches_rank_and_evaluate(runner, simulated, tmp_path):
    """A one-point sweep reproduces the rank + evaluate correlations"""
    truth = ["--truth-users", simulated / "truth_users.csv", "--truth-items", simulated / "truth_items.csv"]
    sweep_out = tmp_path / "sweep.csv"
    result = invoke(runner, "sweep", "--algo", "qr", "--preset", "QR1", "--grid", "tq=0",
                    "--events", simulated / "events.csv", *truth, "--output", sweep_out)
    assert result.exit_code == 0, result.output
    row = pd.read_csv(sweep_out).iloc[0]
    if not row["converged"]:
        pytest.skip("QR1 did not converge on this sample")

    scores = tmp_path / "scores.csv"
    invoke(runner, "rank", "--algo", "qr", "--preset", "QR1", "--events", simulated / "events.csv",
           "--users", simulated / "truth_users.csv", "--output", scores)
    report = tmp_path / "report.csv"
    invoke(runner, "evaluate", "--scores", scores, *truth, "--output", report)
    frame = pd.read_csv(report)
    values = dict(zip(frame["metric"], frame["value"]))
    for name in ("c_qf", "c_ra", "c_qt", "c_rnu"):
        assert row[name] == pytest.approx(values[name], abs=1e-12)


def test_sweep_grid_rows(runner, corpus, tmp_path):
    """Rows follow the grid with the first axis slowest"""
    events, papers = corpus
    output = tmp_path / "sweep.csv"
    result = invoke(runner, "sweep", "--algo", "qrc", "--preset", "QR1", "--grid", "lam=0,0.5",
                    "--grid", "fp=0:1:1", "--events", events, "--papers", papers, "--workers", 2,
                    "--output", output)
    assert result.exit_code == 0, result.output
    table = pd.read_csv(output)
    assert list(zip(table["lam"], table["fp"])) == [(0.0, 0.0), (0.0, 1.0), (0.5, 0.0), (0.5, 1.0)]
    assert "citations_mean" in table.columns


def test_sweep_unknown_axis(runner, corpus, tmp_path):
    events, _ = corpus
    result = invoke(runner, "sweep", "--algo", "qr", "--grid", "alpha=1", "--events", events,
                    "--output", tmp_path / "s.csv")
    assert result.exit_code == 2


def test_sweep_records_out_of_range_points(runner, corpus, tmp_path):
    """A grid value outside [0, 1] fails its own row only"""
    events, papers = corpus
    output = tmp_path / "sweep.csv"
    result = invoke(runner, "sweep", "--algo", "qrc", "--preset", "QR1", "--grid", "lam=0:1.5:0.5",
                    "--events", events, "--papers", papers, "--output", output)
    assert result.exit_code == 0, result.output
    table = pd.read_csv(output, keep_default_na=False)
    assert list(table["lam"]) == [0.0, 0.5, 1.0, 1.5]
    assert list(table["error"]) == ["", "", "", "VALIDATION_ERROR"]


def test_replay_reproduces_artifact(runner, corpus, tmp_path):
    """Replaying a manifest rewrites identical bytes"""
    events, papers = corpus
    output = tmp_path / "scores.csv"
    result = invoke(runner, "rank", "--algo", "qrc", "--preset", "QRC", "--events", events,
                    "--papers", papers, "--output", output)
    assert result.exit_code == 0, result.output
    scores = output.read_bytes()
    manifest = manifest_path(output).read_bytes()
    output.unlink()

    result = invoke(runner, "replay", manifest_path(output))
    assert result.exit_code == 0, result.output
    assert output.read_bytes() == scores
    assert manifest_path(output).read_bytes() == manifest


def test_replay_refuses_changed_inputs(runner, corpus, tmp_path):
    """An edited input file blocks the replay"""
    events, _ = corpus
    output = tmp_path / "scores.csv"
    invoke(runner, "rank", "--algo", "pop", "--events", events, "--output", output)
    events.write_text(EVENTS + "u6,p2,download,11\n")
    result = invoke(runner, "replay", manifest_path(output))
    assert result.exit_code == 4
