"""
CSV artifacts: scores, simulated events and ground truth, report tables

Floats are written with 17 significant digits so that a file read back
reproduces every value bit for bit.
"""

from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .bipartite_core import Action, ScoreVector, Side
from .error_handling import DataException, IdMismatchException
from .evaluation import top_k
from .ingestion import read_table
from .simulator import GroundTruth, SimResult

FLOAT_FORMAT = "%.17g"
SCORE_COLUMNS = ("class", "id", "score", "rank")
TRUTH_USER_COLUMNS = ("user_id", "ability", "activity")
TRUTH_ITEM_COLUMNS = ("item_id", "fitness", "created_at")

PathLike = Union[str, Path]


def write_frame(frame: pd.DataFrame, path: PathLike):
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n", encoding="utf-8")


def write_rows(rows: Sequence[Mapping[str, Any]], columns: Sequence[str], path: PathLike):
    """Report rows (sweep table, top-k report, ...) in a fixed column order"""
    write_frame(pd.DataFrame(list(rows), columns=list(columns)), path)

# ======================
# Scores
# ======================

def score_table(blocks: Iterable[Tuple[Sequence[Any], ScoreVector]]) -> pd.DataFrame:
    """One row per node; rank 1 is the highest score, ties by node order"""
    parts = []
    for labels, vector in blocks:
        if len(labels) != len(vector):
            raise DataException(
                f"{vector.side.value}: {len(labels)} labels for {len(vector)} scores",
                error_code="DIMENSION_MISMATCH",
            )
        rank = np.empty(len(vector), dtype=np.int64)
        if len(vector):
            rank[top_k(vector, len(vector)).ids] = np.arange(1, len(vector) + 1)
        parts.append(pd.DataFrame({
            "class": vector.side.value,
            "id": [str(label) for label in labels],
            "score": vector.values,
            "rank": rank,
        }))
    if not parts:
        return pd.DataFrame(columns=list(SCORE_COLUMNS))
    return pd.concat(parts, ignore_index=True)


def write_scores(table: pd.DataFrame, path: PathLike):
    write_frame(table[list(SCORE_COLUMNS)], path)


def read_scores(path: PathLike) -> pd.DataFrame:
    frame = read_table(path, SCORE_COLUMNS)
    frame["score"] = frame["score"].astype(np.float64)
    frame["rank"] = frame["rank"].astype(np.int64)
    return frame


def scores_of(table: pd.DataFrame, side: Side) -> Tuple[List[str], np.ndarray]:
    """Ids and scores of one node class, in file order"""
    block = table[table["class"] == side.value]
    return list(block["id"]), block["score"].to_numpy(dtype=np.float64)


def align(ids: Sequence[str], values: np.ndarray, order: Sequence[str], what: str) -> np.ndarray:
    """Reorder `values` (keyed by `ids`) to follow `order`; ids must match exactly"""
    position = {label: i for i, label in enumerate(ids)}
    if set(position) != set(order) or len(ids) != len(order):
        raise IdMismatchException(what, sorted(set(position) ^ set(order), key=str))
    return values[[position[label] for label in order]]

# ======================
# Simulation Output
# ======================

def events_frame(result: SimResult) -> pd.DataFrame:
    names = {action.code: action.value for action in Action}
    return pd.DataFrame({
        "user_id": result.event_users,
        "paper_id": result.event_items,
        "action": [names[int(code)] for code in result.event_actions],
        "timestamp": result.event_steps,
    }, columns=["user_id", "paper_id", "action", "timestamp"])


def write_simulation(result: SimResult, output_dir: PathLike) -> Dict[str, Path]:
    """events.csv, truth_users.csv and truth_items.csv under `output_dir`"""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    truth = result.truth
    paths = {
        "events": output_dir / "events.csv",
        "truth_users": output_dir / "truth_users.csv",
        "truth_items": output_dir / "truth_items.csv",
    }
    write_frame(events_frame(result), paths["events"])
    write_frame(pd.DataFrame({
        "user_id": np.arange(truth.ability.shape[0]),
        "ability": truth.ability,
        "activity": truth.activity,
    }), paths["truth_users"])
    write_frame(pd.DataFrame({
        "item_id": np.arange(truth.fitness.shape[0]),
        "fitness": truth.fitness,
        "created_at": truth.created_at,
    }), paths["truth_items"])
    return paths


def read_truth(users_path: PathLike, items_path: PathLike) -> Tuple[List[str], List[str], GroundTruth]:
    """Ground truth with user and item ids as text, in file order"""
    users = read_table(users_path, TRUTH_USER_COLUMNS)
    items = read_table(items_path, TRUTH_ITEM_COLUMNS)
    try:
        truth = GroundTruth(
            ability=users["ability"].astype(np.float64).to_numpy(),
            activity=users["activity"].astype(np.float64).to_numpy(),
            fitness=items["fitness"].astype(np.float64).to_numpy(),
            created_at=items["created_at"].astype(np.int64).to_numpy(),
            uploader=np.full(len(items), -1, dtype=np.int64),
        )
    except ValueError as exc:
        raise DataException(f"unreadable ground truth: {exc}", error_code="BAD_FIELD") from None
    return list(users["user_id"].str.strip()), list(items["item_id"].str.strip()), truth
