#!/usr/bin/env python3
"""
QRC CLI - simulate, rank, sweep and evaluate reputation algorithms
Batch command-line interface; every artifact gets a replayable manifest
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple
import logging
import sys

# Add repo root for imports when run as a script
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

import click
import numpy as np
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from qrc import __version__
from qrc.algorithms import ScoreSet, bihits, eigenrumor, qr, qrc
from qrc.baselines import popularity, random_scores
from qrc.bipartite_core import (
    Action,
    AuthorPaperNetwork,
    ScoreVector,
    Side,
    UserItemNetwork,
    build_author_paper_network,
)
from qrc.config import (
    PRESETS,
    QRC_DEFAULT,
    ConvergenceConfig,
    QRCParams,
    QRParams,
    RuntimeSettings,
    SimConfig,
    WeightScheme,
    load_settings,
)
from qrc.error_handling import (
    EXIT_NOT_CONVERGED,
    EXIT_OK,
    DataException,
    ErrorContext,
    QRCException,
    setup_logging,
)
from qrc.evaluation import (
    CorrelationReport,
    TopKReport,
    correlation_report,
    degree_distribution,
    mann_whitney_u,
    top_authors_report,
    top_k_report,
)
from qrc.exports import (
    align,
    read_scores,
    read_truth,
    score_table,
    scores_of,
    write_rows,
    write_scores,
    write_simulation,
)
from qrc.ingestion import (
    build_networks,
    build_user_item_network_from_events,
    normalize_author_name,
    paper_metadata,
    preprocess,
    read_blocklist,
    read_events,
    read_papers,
    read_table,
)
from qrc.manifest import RunManifest
from qrc.simulator import GroundTruth, run_simulation
from qrc.sweep import expand_grid, parse_axis, run_sweep

# Reports go to stderr; stdout stays free for piping
console = Console(stderr=True)
logger = logging.getLogger("qrc.cli")

ALGORITHMS = ("bihits", "qr", "er", "qrc", "pop", "rand")
PARAM_FLAGS = ("tq", "tr", "rq", "rr", "fa", "fp", "ra", "lam", "omega")

# ======================
# Command Group
# ======================

class QRCGroup(click.Group):
    """Maps library errors to exit codes and remembers argv for manifests"""

    argv: List[str] = []

    def main(self, args=None, *rest, **kwargs):
        self.argv = list(args) if args is not None else sys.argv[1:]
        return super().main(args, *rest, **kwargs)

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except ValidationError as exc:
            raise click.UsageError(_pydantic_message(exc), ctx) from None
        except QRCException as exc:
            console.print(f"[red]Error ({exc.error_code}):[/red] {exc.message}")
            ctx.exit(exc.exit_code)


def _pydantic_message(exc: ValidationError) -> str:
    parts = []
    for error in exc.errors():
        where = ".".join(str(x) for x in error["loc"])
        parts.append(f"{where}: {error['msg']}")
    return "; ".join(parts)


@click.group(cls=QRCGroup)
@click.version_option(__version__, prog_name="qrc")
@click.option("--log-level", type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
              default=None, help="Overrides QRC_LOG_LEVEL")
@click.option("--log-file", type=click.Path(dir_okay=False), default=None, help="JSON log file (rotating)")
@click.option("--env-file", type=click.Path(dir_okay=False), default=None, help="Optional .env file")
@click.pass_context
def cli(ctx, log_level, log_file, env_file):
    """QRC reputation toolkit"""
    settings = load_settings(env_file)
    updates = {}
    if log_level:
        updates["log_level"] = log_level.upper()
    if log_file:
        updates["log_file"] = Path(log_file)
    settings = settings.model_copy(update=updates)
    setup_logging(settings.log_level, str(settings.log_file) if settings.log_file else None)
    ctx.obj = settings


def _convergence(settings: RuntimeSettings, tolerance: Optional[float], max_iterations: Optional[int]) -> ConvergenceConfig:
    return ConvergenceConfig(
        tolerance=tolerance if tolerance is not None else settings.tolerance,
        max_iterations=max_iterations if max_iterations is not None else settings.max_iterations,
    )


def _new_manifest(command: str, seed: Optional[int] = None) -> RunManifest:
    root = click.get_current_context().find_root().command
    return RunManifest(command=command, argv=list(getattr(root, "argv", [])), seed=seed)


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)

# ======================
# Shared Options
# ======================

def algorithm_options(func):
    """--algo, --preset and the algorithm parameter flags"""
    options = [
        click.option("--algo", type=click.Choice(ALGORITHMS), required=True),
        click.option("--preset", type=click.Choice(sorted(PRESETS) + ["QRC"]), default=None,
                     help="Default parameter values; explicit flags win"),
        click.option("--tq", type=float, default=None, help="theta_Q: item degree exponent"),
        click.option("--tr", type=float, default=None, help="theta_R: user degree exponent"),
        click.option("--rq", type=float, default=None, help="rho_Q: mean-quality penalty"),
        click.option("--rr", type=float, default=None, help="rho_R: mean-reputation penalty"),
        click.option("--fa", type=float, default=None, help="phi_A: author degree exponent"),
        click.option("--fp", type=float, default=None, help="phi_P: paper co-author exponent"),
        click.option("--ra", type=float, default=None, help="rho_A: mean-credit penalty"),
        click.option("--lambda", "lam", type=float, default=None, help="Author-credit share of quality"),
        click.option("--omega", type=float, default=None, help="EigenRumor author weight"),
        click.option("--weighted", is_flag=True, help="biHITS on link weights instead of 0/1"),
        click.option("--tolerance", type=float, default=None),
        click.option("--max-iterations", type=int, default=None),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def input_options(func):
    """Event log, metadata and preprocessing flags"""
    options = [
        click.option("--events", type=click.Path(exists=True, dir_okay=False), required=True),
        click.option("--papers", type=click.Path(exists=True, dir_okay=False), default=None),
        click.option("--users", type=click.Path(exists=True, dir_okay=False), default=None,
                     help="CSV with a user_id column fixing the user set (e.g. truth_users.csv)"),
        click.option("--w-up", type=float, default=1.0),
        click.option("--w-down", type=float, default=0.1),
        click.option("--w-view", type=float, default=0.05),
        click.option("--min-day", type=int, default=None, help="Drop papers submitted before this day"),
        click.option("--filter-low-activity", is_flag=True,
                     help="Drop users without uploads and with at most one action"),
        click.option("--blocklist", type=click.Path(exists=True, dir_okay=False), default=None),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def resolve_params(preset: Optional[str], flags: Dict[str, Optional[float]]) -> Dict[str, float]:
    """Explicit flags over preset values over zero"""
    base = {name: 0.0 for name in PARAM_FLAGS}
    if preset == "QRC":
        qr_base, extra = QRC_DEFAULT.qr, QRC_DEFAULT
        base.update(fa=extra.phi_a, fp=extra.phi_p, ra=extra.rho_a, lam=extra.lam)
    elif preset:
        qr_base = PRESETS[preset]
    else:
        qr_base = None
    if qr_base is not None:
        base.update(zip(("tq", "tr", "rq", "rr"), qr_base.as_tuple()))
    for name, value in flags.items():
        if value is not None:
            base[name] = value
    return base

# ======================
# Loading & Ranking
# ======================

@dataclass
class Inputs:
    net: UserItemNetwork
    authors: Optional[AuthorPaperNetwork]
    papers: Optional[list]
    events: list


def load_inputs(events_path, papers_path, users_path, w_up, w_down, w_view, min_day,
                low_activity, blocklist_path, users: Optional[Sequence[str]] = None) -> Inputs:
    if min_day is not None and papers_path is None:
        raise click.UsageError("--min-day needs --papers")
    scheme = WeightScheme(w_up=w_up, w_down=w_down, w_view=w_view)
    with ErrorContext("loading inputs", logger):
        events = read_events(events_path)
        papers = read_papers(papers_path) if papers_path else None
        if users_path:
            users = [u.strip() for u in read_table(users_path, ("user_id",))["user_id"]]
        blocked = read_blocklist(blocklist_path) if blocklist_path else None
        by_id = {p.paper_id: p for p in papers} if papers is not None else None
        events = preprocess(events, by_id, min_day, blocked, low_activity)

        if papers is not None:
            net, authors = build_networks(events, papers, scheme, users=users)
        else:
            net, authors = build_user_item_network_from_events(events, scheme, users=users), None
    return Inputs(net, authors, papers, events)


@dataclass
class Ranking:
    """Item scores, plus the full fixed point for the iterative algorithms"""
    quality: ScoreVector
    scores: Optional[ScoreSet] = None

    @property
    def converged(self) -> bool:
        return self.scores.converged if self.scores is not None else True

    def diagnostics(self) -> Dict[str, Any]:
        if self.scores is None:
            return {"converged": True, "iterations": 0, "residual": 0.0}
        return {
            "converged": self.scores.converged,
            "iterations": self.scores.iterations,
            "residual": self.scores.residual,
        }

    def blocks(self, inputs: Inputs) -> List[Tuple[Sequence[Any], ScoreVector]]:
        net = inputs.net
        if self.scores is None:
            return [(net.col_labels, self.quality)]
        found = [(net.row_labels, self.scores.reputation), (net.col_labels, self.scores.quality)]
        if self.scores.credit is not None:
            found.append((inputs.authors.row_labels, self.scores.credit))
        return found


def rank_inputs(algo: str, params: Dict[str, float], inputs: Inputs, convergence: ConvergenceConfig,
                weighted: bool = False, seed: int = 0) -> Ranking:
    if algo in ("er", "qrc") and inputs.authors is None:
        raise click.UsageError(f"--algo {algo} needs --papers")
    qr_params = QRParams(theta_q=params["tq"], theta_r=params["tr"], rho_q=params["rq"], rho_r=params["rr"])

    if algo == "pop":
        return Ranking(popularity(inputs.net, Action.DOWNLOAD))
    if algo == "rand":
        return Ranking(random_scores(inputs.net.n_items, seed))
    if algo == "bihits":
        scores = bihits(inputs.net, weighted=weighted, config=convergence)
    elif algo == "qr":
        scores = qr(inputs.net, qr_params, convergence)
    elif algo == "er":
        scores = eigenrumor(inputs.net, inputs.authors, params["omega"], convergence)
    else:
        coupling = QRCParams(qr=qr_params, phi_a=params["fa"], phi_p=params["fp"],
                             rho_a=params["ra"], lam=params["lam"])
        scores = qrc(inputs.net, inputs.authors, coupling, convergence)
    return Ranking(scores.quality, scores)


def _record_inputs(manifest: RunManifest, *paths):
    for path in paths:
        if path:
            manifest.add_input(path)


def _diagnostics_table(title: str, diagnostics: Dict[str, Any]) -> Table:
    table = Table(title=title)
    table.add_column("Diagnostic", style="cyan")
    table.add_column("Value", style="white")
    for key, value in diagnostics.items():
        table.add_row(key, _fmt(value))
    return table

# ======================
# simulate
# ======================

@cli.command()
@click.option("--n-users", type=int, default=1000)
@click.option("--mu", type=float, default=0.5)
@click.option("--x-max", type=float, default=0.5)
@click.option("--h", "h", type=float, default=5.0)
@click.option("--p-upload", type=float, default=0.1)
@click.option("--steps", type=int, default=200)
@click.option("--w-up", type=float, default=1.0)
@click.option("--w-down", type=float, default=0.1)
@click.option("--downloads-per-step", type=int, default=2)
@click.option("--seed", type=int, default=0)
@click.option("--output-dir", type=click.Path(file_okay=False), required=True)
def simulate(n_users, mu, x_max, h, p_upload, steps, w_up, w_down, downloads_per_step, seed, output_dir):
    """Generate a user-item network with known ground truth"""
    config = SimConfig(n_users=n_users, mu=mu, x_max=x_max, h=h, p_upload=p_upload, steps=steps,
                       w_up=w_up, w_down=w_down, downloads_per_step=downloads_per_step, seed=seed)
    with ErrorContext("simulate", logger):
        result = run_simulation(config)
        paths = write_simulation(result, output_dir)

    manifest = _new_manifest("simulate", seed)
    manifest.params.update({k: _fmt(v) for k, v in config.model_dump().items()})
    manifest.diagnostics.update(items=str(result.n_items), links=str(result.network.edge_count))
    for path in paths.values():
        manifest.write(path)

    net = result.network
    console.print(_diagnostics_table("Simulation", {
        "users": net.n_users, "items": net.n_items, "links": net.edge_count,
        "density": round(net.density, 6), "xi": config.xi,
    }))
    console.print(f"[green]✓ Wrote[/green] {output_dir}")

# ======================
# rank
# ======================

@cli.command()
@algorithm_options
@input_options
@click.option("--seed", type=int, default=0, help="Seed of --algo rand")
@click.option("--output", type=click.Path(dir_okay=False), required=True)
@click.pass_context
def rank(ctx, algo, preset, weighted, tolerance, max_iterations, events, papers, users, w_up, w_down,
         w_view, min_day, filter_low_activity, blocklist, seed, output, **flags):
    """Rank users, items (and authors) with one algorithm"""
    settings: RuntimeSettings = ctx.obj
    params = resolve_params(preset, flags)
    convergence = _convergence(settings, tolerance, max_iterations)
    inputs = load_inputs(events, papers, users, w_up, w_down, w_view, min_day,
                         filter_low_activity, blocklist)

    with ErrorContext(f"rank {algo}", logger):
        ranking = rank_inputs(algo, params, inputs, convergence, weighted, seed)
    write_scores(score_table(ranking.blocks(inputs)), output)

    diagnostics = ranking.diagnostics()
    manifest = _new_manifest("rank", seed)
    manifest.params.update({k: _fmt(v) for k, v in params.items()})
    manifest.params.update(algo=algo, weighted=str(weighted), tolerance=_fmt(convergence.tolerance),
                           max_iterations=str(convergence.max_iterations))
    _record_inputs(manifest, events, papers, users, blocklist)
    manifest.diagnostics.update({k: _fmt(v) for k, v in diagnostics.items()})
    manifest.write(output)

    console.print(_diagnostics_table(f"{algo} convergence", diagnostics))
    if not ranking.converged:
        console.print("[yellow]Not converged: scores are the last iterate[/yellow]")
        ctx.exit(EXIT_NOT_CONVERGED)

# ======================
# sweep
# ======================

def _correlation_columns(report: Optional[CorrelationReport]) -> Dict[str, Any]:
    if report is None:
        return {name: None for name in CorrelationReport.FIELDS}
    return report.as_dict()


def _top_k_columns(report: TopKReport) -> Dict[str, Any]:
    row = report.as_dict()
    row.pop("k")
    return row


@cli.command()
@algorithm_options
@input_options
@click.option("--grid", "axes", multiple=True, help="name=v1,v2 or name=start:stop:step (repeatable)")
@click.option("--qr-binary", is_flag=True, help="All 16 settings of (tq, tr, rq, rr) in {0, 1}")
@click.option("--truth-users", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--truth-items", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("-k", "k", type=int, default=20, help="Top-k size for metadata reports")
@click.option("--seed", type=int, default=0)
@click.option("--workers", type=int, default=None, help="Overrides QRC_WORKERS")
@click.option("--output", type=click.Path(dir_okay=False), required=True)
@click.pass_context
def sweep(ctx, algo, preset, weighted, tolerance, max_iterations, events, papers, users, w_up, w_down,
          w_view, min_day, filter_low_activity, blocklist, axes, qr_binary, truth_users, truth_items, k,
          seed, workers, output, **flags):
    """Run one algorithm over a parameter grid"""
    settings: RuntimeSettings = ctx.obj
    base = resolve_params(preset, flags)
    grid = [parse_axis(text) for text in axes]
    if qr_binary:
        grid = [(name, [0.0, 1.0]) for name in ("tq", "tr", "rq", "rr")] + grid
    for name, _ in grid:
        if name not in PARAM_FLAGS:
            raise click.UsageError(f"unknown grid parameter '{name}'; expected one of {PARAM_FLAGS}")
    if bool(truth_users) != bool(truth_items):
        raise click.UsageError("--truth-users and --truth-items go together")

    truth: Optional[GroundTruth] = None
    truth_user_ids = truth_item_ids = None
    if truth_users:
        truth_user_ids, truth_item_ids, truth = read_truth(truth_users, truth_items)
    inputs = load_inputs(events, papers, users, w_up, w_down, w_view, min_day, filter_low_activity,
                         blocklist, users=truth_user_ids)
    metadata = paper_metadata(inputs.papers, inputs.events) if inputs.papers else None
    convergence = _convergence(settings, tolerance, max_iterations)

    def evaluate_point(point: Dict[str, Any]) -> Dict[str, Any]:
        ranking = rank_inputs(algo, point, inputs, convergence, weighted, seed)
        row = dict(ranking.diagnostics())
        if truth is not None:
            report = None
            if ranking.scores is not None and ranking.converged:
                report = _aligned_correlations(ranking.scores, inputs.net, truth, truth_user_ids, truth_item_ids)
            row.update(_correlation_columns(report))
        if metadata is not None:
            order = ranking_order(inputs.net.col_labels, ranking.quality)
            row.update(_top_k_columns(top_k_report(order, metadata, k)))
        return row

    points = expand_grid(base, grid)
    rows = run_sweep(points, evaluate_point, workers or settings.workers)

    result_columns: List[str] = ["converged", "iterations", "residual"]
    if truth is not None:
        result_columns += list(CorrelationReport.FIELDS)
    if metadata is not None:
        result_columns += [f"{m}_{s}" for m in TopKReport.METRICS for s in ("mean", "se")]
    columns = list(PARAM_FLAGS) + result_columns + ["error"]
    write_rows([row.as_dict() for row in rows], columns, output)

    manifest = _new_manifest("sweep", seed)
    manifest.params.update(algo=algo, points=str(len(points)), k=str(k),
                           axes=";".join(f"{n}={','.join(_fmt(v) for v in vs)}" for n, vs in grid))
    manifest.params.update({name: _fmt(value) for name, value in base.items()})
    _record_inputs(manifest, events, papers, users, blocklist, truth_users, truth_items)
    manifest.diagnostics.update(
        converged=str(sum(1 for r in rows if r.result.get("converged"))),
        failed=str(sum(1 for r in rows if r.error)),
    )
    manifest.write(output)

    table = Table(title=f"{algo} sweep ({len(points)} points)")
    for name, _ in grid:
        table.add_column(name, style="cyan")
    table.add_column("converged", style="white")
    extra = [c for c in ("c_qf", "c_ra", "citations_mean") if c in result_columns]
    for column in extra:
        table.add_column(column, style="yellow")
    for row in rows:
        values = [_fmt(row.point[name]) for name, _ in grid]
        values.append(row.error or str(row.result.get("converged")))
        values += ["" if row.result.get(c) is None else f"{row.result[c]:.3f}" for c in extra]
        table.add_row(*values)
    console.print(table)

# ======================
# evaluate
# ======================

def ranking_order(labels: Sequence[Any], scores: ScoreVector) -> List[Any]:
    order = np.lexsort((np.arange(len(scores)), -scores.values))
    return [labels[i] for i in order]


def _aligned_correlations(scores: ScoreSet, net: UserItemNetwork, truth: GroundTruth,
                          user_ids: Sequence[str], item_ids: Sequence[str]) -> CorrelationReport:
    reputation = align([str(x) for x in net.row_labels], scores.reputation.values, user_ids, "user scores vs truth")
    quality = align([str(x) for x in net.col_labels], scores.quality.values, item_ids, "item scores vs truth")
    return correlation_report(
        ScoreSet(ScoreVector(reputation, Side.USER), ScoreVector(quality, Side.ITEM)), truth
    )


def _report_row(report: str, metric: str, value=None, se=None, statistic=None, note: str = "") -> Dict[str, Any]:
    return {"report": report, "metric": metric, "value": value, "se": se, "statistic": statistic, "note": note}


def _ranked_ids(table, side: Side) -> List[str]:
    block = table[table["class"] == side.value].sort_values(["rank", "id"], kind="mergesort")
    return list(block["id"])


@cli.command()
@click.option("--scores", "scores_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--truth-users", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--truth-items", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--papers", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--events", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Event log used to count downloads")
@click.option("-k", "k", type=int, default=20)
@click.option("--compare", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Second scores file for a Mann-Whitney comparison")
@click.option("--alternative", type=click.Choice(["two-sided", "less", "greater"]), default="two-sided")
@click.option("--h-index", type=click.Path(exists=True, dir_okay=False), default=None,
              help="CSV author,h_index for the top-author report")
@click.option("--authors-k", type=int, default=10)
@click.option("--output", type=click.Path(dir_okay=False), required=True)
def evaluate(scores_path, truth_users, truth_items, papers, events, k, compare, alternative, h_index,
             authors_k, output):
    """Correlations with ground truth, top-k reports and Mann-Whitney tests"""
    if bool(truth_users) != bool(truth_items):
        raise click.UsageError("--truth-users and --truth-items go together")
    if not (truth_users or papers or compare):
        raise click.UsageError("nothing to evaluate: give ground truth, --papers or --compare")

    table = read_scores(scores_path)
    rows: List[Dict[str, Any]] = []

    if truth_users:
        user_ids, item_ids, truth = read_truth(truth_users, truth_items)
        ids, values = scores_of(table, Side.USER)
        reputation = align(ids, values, user_ids, "user scores vs truth")
        ids, values = scores_of(table, Side.ITEM)
        quality = align(ids, values, item_ids, "item scores vs truth")
        report = correlation_report(
            ScoreSet(ScoreVector(reputation, Side.USER), ScoreVector(quality, Side.ITEM)), truth
        )
        view = Table(title="Correlation with ground truth")
        view.add_column("Metric", style="cyan")
        view.add_column("Pearson r", style="white")
        for name, value in report.as_dict().items():
            note = report.reasons.get(name, "")
            rows.append(_report_row("correlation", name, value, note=note))
            view.add_row(name, "undefined" if value is None else f"{value:.4f}")
        console.print(view)

    metadata = None
    if papers:
        records = read_papers(papers)
        metadata = paper_metadata(records, read_events(events) if events else [])
        report = top_k_report(_ranked_ids(table, Side.ITEM), metadata, k)
        view = Table(title=f"Top {report.k} papers")
        view.add_column("Metric", style="cyan")
        view.add_column("Mean", style="white")
        view.add_column("SE", style="yellow")
        for name in TopKReport.METRICS:
            summary = getattr(report, name)
            rows.append(_report_row("top_k", name, summary.mean, summary.se,
                                    note="singleton" if report.singleton else ""))
            view.add_row(name, f"{summary.mean:.2f}", f"{summary.se:.2f}")
        console.print(view)

        authors_block = table[table["class"] == Side.AUTHOR.value]
        if len(authors_block):
            rows += _top_authors_rows(table, records, metadata, h_index, authors_k)

    if compare:
        rows += _compare_rows(table, read_scores(compare), metadata, k, alternative)

    write_rows(rows, ["report", "metric", "value", "se", "statistic", "note"], output)


def _top_authors_rows(table, records, metadata, h_index_path, k) -> List[Dict[str, Any]]:
    items = _ranked_ids(table, Side.ITEM)
    by_id = {p.paper_id: p for p in records}
    links = set()
    for paper_id in items:
        if paper_id not in by_id:
            raise DataException(f"scored item '{paper_id}' has no paper record", error_code="RECORD_NOT_FOUND")
        for raw in by_id[paper_id].authors:
            links.add((normalize_author_name(raw), paper_id))
    names = sorted({name for name, _ in links})
    authors = build_author_paper_network(sorted(links), authors=names, papers=items)

    ids, values = scores_of(table, Side.AUTHOR)
    credit = ScoreVector(align(ids, values, list(authors.row_labels), "author scores vs papers"), Side.AUTHOR)
    downloads = [metadata[paper_id].downloads for paper_id in authors.col_labels]

    h_index = None
    if h_index_path:
        frame = read_table(h_index_path, ("author", "h_index"))
        h_index = {normalize_author_name(a): float(h) for a, h in zip(frame["author"], frame["h_index"]) if h.strip()}
    report = top_authors_report(credit, authors, downloads, k, h_index)

    view = Table(title=f"Top {len(report.rows)} authors by credit")
    for column in ("Rank", "Author", "Credit", "Papers", "Mean downloads"):
        view.add_column(column, style="cyan" if column == "Author" else "white")
    rows = []
    for row in report.rows:
        view.add_row(str(row.rank), str(row.name), f"{row.credit:.4f}", str(row.papers), f"{row.mean_downloads:.1f}")
        rows.append(_report_row("top_authors", str(row.name), row.credit, statistic=row.papers,
                                note=f"rank={row.rank};mean_downloads={_fmt(row.mean_downloads)}"))
    console.print(view)
    if report.h_index is not None:
        rows.append(_report_row("top_authors", "h_index", report.h_index.mean, report.h_index.se,
                                note=f"known={report.h_index_known}"))
    return rows


def _compare_rows(table, other, metadata, k, alternative) -> List[Dict[str, Any]]:
    """Mann-Whitney U of top-k paper metrics, or of raw item scores without metadata"""
    view = Table(title=f"Mann-Whitney U ({alternative})")
    view.add_column("Metric", style="cyan")
    view.add_column("U", style="white")
    view.add_column("p", style="yellow")
    view.add_column("Method", style="white")

    samples = {}
    if metadata is not None:
        ours = [metadata[i] for i in _ranked_ids(table, Side.ITEM)[:k]]
        theirs = [metadata[i] for i in _ranked_ids(other, Side.ITEM)[:k]]
        for name in TopKReport.METRICS:
            samples[name] = ([getattr(r, name) for r in ours], [getattr(r, name) for r in theirs])
    else:
        samples["item_score"] = (scores_of(table, Side.ITEM)[1], scores_of(other, Side.ITEM)[1])

    rows = []
    for name, (a, b) in samples.items():
        result = mann_whitney_u(a, b, alternative)
        rows.append(_report_row("mann_whitney", name, result.p, statistic=result.u, note=result.method))
        view.add_row(name, f"{result.u:g}", f"{result.p:.4g}", result.method)
    console.print(view)
    return rows

# ======================
# degree-dist
# ======================

@cli.command("degree-dist")
@click.option("--events", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--papers", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--side", type=click.Choice([s.value for s in Side]), required=True)
@click.option("--action", type=click.Choice([a.value for a in Action] + ["all"]), default="all")
@click.option("--exclude-user", multiple=True, help="User removed before tabulation (repeatable)")
@click.option("--output", type=click.Path(dir_okay=False), required=True)
def degree_dist(events, papers, side, action, exclude_user, output):
    """Cumulative degree distribution P(k >= d) of one node class"""
    side = Side(side)
    action = None if action == "all" else Action(action)
    if side == Side.AUTHOR:
        if papers is None:
            raise click.UsageError("--side author needs --papers")
        if action is not None or exclude_user:
            raise click.UsageError("--action and --exclude-user apply to user and item sides only")

    inputs = load_inputs(events, papers, None, 1.0, 0.1, 0.05, None, False, None)
    if side == Side.AUTHOR:
        distribution = degree_distribution(inputs.authors, Side.AUTHOR)
    else:
        distribution = degree_distribution(inputs.net, side, action, exclude_user)
    write_rows([{"degree": d, "fraction": f} for d, f in distribution], ["degree", "fraction"], output)

    manifest = _new_manifest("degree-dist")
    manifest.params.update(side=side.value, action=action.value if action else "all",
                           exclude=",".join(sorted(exclude_user)))
    _record_inputs(manifest, events, papers)
    manifest.diagnostics.update(rows=str(len(distribution)))
    manifest.write(output)
    console.print(f"[green]✓ {len(distribution)} degree classes[/green] -> {output}")

# ======================
# replay
# ======================

@cli.command()
@click.argument("manifest_path", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def replay(ctx, manifest_path):
    """Re-run the command recorded in a manifest"""
    manifest = RunManifest.read(manifest_path)
    changed = manifest.changed_inputs()
    if changed:
        raise DataException(f"inputs changed since the run: {changed}", error_code="INPUT_CHANGED")
    if manifest.version != __version__:
        logger.warning(f"Manifest written by version {manifest.version}, replaying with {__version__}")

    console.print(f"[cyan]Replaying:[/cyan] {manifest.command} {' '.join(manifest.argv)}")
    code = cli.main(args=manifest.argv, prog_name="qrc", standalone_mode=False)
    ctx.exit(code if isinstance(code, int) else EXIT_OK)


def main():
    cli(prog_name="qrc")


if __name__ == '__main__':
    main()
