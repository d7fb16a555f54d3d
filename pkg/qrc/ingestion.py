"""
Ingestion: event logs and paper metadata to user-item and author-paper networks

Preprocessing keeps the earliest interaction per (user, paper), drops users
with no upload and at most one action, and reduces author names to
"<initial> <surname>".
"""

from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Union
import logging

import pandas as pd

from .bipartite_core import (
    Action,
    AuthorPaperNetwork,
    UserItemNetwork,
    build_author_paper_network,
    build_user_item_network,
    label_sort_key,
)
from .config import WeightScheme
from .error_handling import DataException, ErrorContext, RecordNotFoundException
from .evaluation import PaperMetadata

logger = logging.getLogger("qrc.ingestion")

EVENT_COLUMNS = ("user_id", "paper_id", "action", "timestamp")
PAPER_COLUMNS = ("paper_id", "submission_day", "title", "authors", "citations", "impact_factor")

# ======================
# Records
# ======================

@dataclass(frozen=True)
class InteractionEvent:
    user_id: str
    paper_id: str
    action: Action
    timestamp: float

    def __post_init__(self):
        if self.timestamp < 0:
            raise DataException(
                f"event ({self.user_id}, {self.paper_id}) has negative timestamp {self.timestamp}",
                error_code="NEGATIVE_TIMESTAMP",
            )


@dataclass(frozen=True)
class PaperRecord:
    paper_id: str
    submission_day: int
    title: str = ""
    authors: Tuple[str, ...] = ()
    citations: int = 0
    impact_factor: float = 0.0

# ======================
# Readers
# ======================

def read_table(path: Union[str, Path], columns: Sequence[str]) -> pd.DataFrame:
    frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise DataException(f"{path}: missing column(s) {missing}", error_code="BAD_HEADER")
    return frame


def _number(raw: str, cast, what: str, default=0):
    raw = raw.strip()
    if raw == "":
        return default
    try:
        return cast(raw)
    except ValueError:
        raise DataException(f"cannot parse {what} '{raw}'", error_code="BAD_FIELD") from None


def _action(raw: str) -> Action:
    try:
        return Action(raw.strip().lower())
    except ValueError:
        raise DataException(f"unknown action '{raw}'", error_code="BAD_ACTION") from None


def read_events(path: Union[str, Path]) -> List[InteractionEvent]:
    """Events CSV: user_id,paper_id,action,timestamp"""
    with ErrorContext(f"reading events {path}", logger):
        frame = read_table(path, EVENT_COLUMNS)
        events = [
            InteractionEvent(
                user_id=row.user_id.strip(),
                paper_id=row.paper_id.strip(),
                action=_action(row.action),
                timestamp=_number(row.timestamp, float, "timestamp"),
            )
            for row in frame.itertuples(index=False)
        ]
    logger.info(f"Read {len(events)} events from {path}", extra={"path": str(path)})
    return events


def read_papers(path: Union[str, Path]) -> List[PaperRecord]:
    """Papers CSV; authors are ';'-separated, empty citations/impact factor read as 0"""
    with ErrorContext(f"reading papers {path}", logger):
        frame = read_table(path, PAPER_COLUMNS)
        papers = [
            PaperRecord(
                paper_id=row.paper_id.strip(),
                submission_day=_number(row.submission_day, int, "submission_day"),
                title=row.title,
                authors=tuple(name.strip() for name in row.authors.split(";") if name.strip()),
                citations=_number(row.citations, int, "citations"),
                impact_factor=_number(row.impact_factor, float, "impact_factor", 0.0),
            )
            for row in frame.itertuples(index=False)
        ]
    ids = [p.paper_id for p in papers]
    if len(set(ids)) != len(ids):
        duplicated = sorted(k for k, v in Counter(ids).items() if v > 1)
        raise DataException(f"{path}: duplicated paper ids {duplicated[:10]}", error_code="DUPLICATE_LABEL")
    logger.info(f"Read {len(papers)} papers from {path}", extra={"path": str(path)})
    return papers


def read_blocklist(path: Union[str, Path]) -> Set[str]:
    """One user id per line; blank lines and '#' comments ignored"""
    blocked = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            blocked.add(line)
    return blocked

# ======================
# Preprocessing
# ======================

def _event_order(event: InteractionEvent):
    return (event.timestamp, label_sort_key(event.user_id), label_sort_key(event.paper_id))


def dedup_earliest(events: Iterable[InteractionEvent]) -> List[InteractionEvent]:
    """
    Keep one event per (user, paper): the earliest, ties going to the
    stronger action (upload > download > view), then to input order.
    Output is sorted by (timestamp, user, paper).
    """
    best: Dict[Tuple[str, str], Tuple[Tuple[float, int, int], InteractionEvent]] = {}
    for position, event in enumerate(events):
        key = (event.timestamp, event.action.precedence, position)
        pair = (event.user_id, event.paper_id)
        if pair not in best or key < best[pair][0]:
            best[pair] = (key, event)
    return sorted((event for _, event in best.values()), key=_event_order)


def filter_low_activity(events: Iterable[InteractionEvent]) -> List[InteractionEvent]:
    """Drop users who never uploaded and have at most one action"""
    events = list(events)
    actions = Counter(e.user_id for e in events)
    uploaders = {e.user_id for e in events if e.action == Action.UPLOAD}
    dropped = {u for u, n in actions.items() if u not in uploaders and n <= 1}
    if dropped:
        logger.info(f"Removed {len(dropped)} low-activity users")
    return [e for e in events if e.user_id not in dropped]


def drop_blocked_users(events: Iterable[InteractionEvent], blocked: Set[str]) -> List[InteractionEvent]:
    return [e for e in events if e.user_id not in blocked]


def drop_papers_before(
    events: Iterable[InteractionEvent],
    papers: Mapping[str, PaperRecord],
    min_day: int,
) -> List[InteractionEvent]:
    """Remove events on papers submitted before `min_day`"""
    kept = []
    for event in events:
        record = papers.get(event.paper_id)
        if record is None:
            raise RecordNotFoundException("paper", event.paper_id)
        if record.submission_day >= min_day:
            kept.append(event)
    return kept


def normalize_author_name(raw: str) -> str:
    """
    "A. Bruce Jones", "AB Jones" and "Jones, A. B." all become
    "A Jones". A lone surname is returned as is.
    """
    text = raw.strip()
    if "," in text:
        surname_part, given_part = text.split(",", 1)
        surname_tokens = [t for t in surname_part.split() if any(ch.isalpha() for ch in t)]
        given = [t for t in given_part.split() if any(ch.isalpha() for ch in t)]
        tokens = given + surname_tokens[-1:]
    else:
        tokens = [t for t in text.split() if any(ch.isalpha() for ch in t)]
    if not tokens:
        raise DataException(f"unparseable author name '{raw}'", error_code="BAD_AUTHOR_NAME")

    surname = tokens[-1]
    if len(tokens) == 1:
        return surname
    initial = next(ch for ch in tokens[0] if ch.isalpha()).upper()
    return f"{initial} {surname}"

# ======================
# Network Construction
# ======================

def link_weight(scheme: WeightScheme, action: Action) -> float:
    return {
        Action.UPLOAD: scheme.w_up,
        Action.DOWNLOAD: scheme.w_down,
        Action.VIEW: scheme.w_view,
    }[action]


def build_user_item_network_from_events(
    events: Sequence[InteractionEvent],
    scheme: Optional[WeightScheme] = None,
    users: Optional[Sequence[Any]] = None,
    items: Optional[Sequence[Any]] = None,
) -> UserItemNetwork:
    """User-item network W without paper metadata"""
    scheme = scheme or WeightScheme()
    return build_user_item_network(
        ((e.user_id, e.paper_id, link_weight(scheme, e.action), e.action) for e in events),
        users=users,
        items=items,
    )


def build_networks(
    events: Sequence[InteractionEvent],
    papers: Sequence[PaperRecord],
    scheme: Optional[WeightScheme] = None,
    users: Optional[Sequence[Any]] = None,
) -> Tuple[UserItemNetwork, AuthorPaperNetwork]:
    """
    W and P over the same items: the papers with at least one event, in
    papers-file order. One author node per canonical name.
    """
    by_id = {p.paper_id: p for p in papers}
    for event in events:
        if event.paper_id not in by_id:
            raise RecordNotFoundException("paper", event.paper_id)

    touched = {e.paper_id for e in events}
    items = [p.paper_id for p in papers if p.paper_id in touched]
    net = build_user_item_network_from_events(events, scheme, users=users, items=items)

    links = set()
    for paper_id in items:
        for raw in by_id[paper_id].authors:
            links.add((normalize_author_name(raw), paper_id))
    authors = sorted({name for name, _ in links})
    author_net = build_author_paper_network(sorted(links), authors=authors, papers=items)

    unauthored = sum(1 for d in author_net.paper_degree if d == 0)
    if unauthored:
        logger.warning(f"{unauthored} papers have no author metadata")
    logger.info(
        f"Built networks: N={net.n_users} M={net.n_items} links={net.edge_count} O={author_net.n_authors}"
    )
    return net, author_net


def paper_metadata(
    papers: Iterable[PaperRecord],
    events: Iterable[InteractionEvent],
) -> Dict[str, PaperMetadata]:
    """Per-paper metrics for top-k reports; downloads counted from the events"""
    downloads = Counter(e.paper_id for e in events if e.action == Action.DOWNLOAD)
    return {
        p.paper_id: PaperMetadata(
            paper_id=p.paper_id,
            submission_day=p.submission_day,
            downloads=downloads.get(p.paper_id, 0),
            citations=p.citations,
            impact_factor=p.impact_factor,
        )
        for p in papers
    }


def preprocess(
    events: Iterable[InteractionEvent],
    papers: Optional[Mapping[str, PaperRecord]] = None,
    min_day: Optional[int] = None,
    blocked: Optional[Set[str]] = None,
    low_activity: bool = True,
) -> List[InteractionEvent]:
    """Blocklist, submission-day cutoff, dedup and low-activity filter, in that order"""
    events = list(events)
    count = len(events)
    if blocked:
        events = drop_blocked_users(events, blocked)
    if min_day is not None:
        if papers is None:
            raise DataException("a submission-day cutoff needs paper metadata", error_code="MISSING_PAPERS")
        events = drop_papers_before(events, papers, min_day)
    events = dedup_earliest(events)
    if low_activity:
        events = filter_low_activity(events)
    logger.info(f"Preprocessing kept {len(events)} of {count} events")
    return events
