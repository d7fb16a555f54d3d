"""
Sparse bipartite networks and the shared aggregation kernel

Both networks keep two CSR matrices, one per traversal direction, with
column indices sorted inside every row so that each weighted sum runs in
ascending neighbour order and results are bit-reproducible.
"""

from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Any, Dict, Iterable, Iterator, Optional, Sequence, Tuple
import logging

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from .error_handling import (
    DataException,
    DimensionMismatchException,
    DuplicateLinkException,
    RecordNotFoundException,
    ValidationException,
)

logger = logging.getLogger("qrc.core")

# ======================
# Node classes & actions
# ======================

class Side(str, Enum):
    """Node class of a bipartite network"""
    USER = "user"
    ITEM = "item"
    AUTHOR = "author"


class Action(str, Enum):
    """User-item interaction kinds"""
    UPLOAD = "upload"
    DOWNLOAD = "download"
    VIEW = "view"

    @property
    def code(self) -> int:
        return _ACTION_CODES[self]

    @property
    def precedence(self) -> int:
        """Lower wins when two interactions share a timestamp"""
        return _ACTION_CODES[self]


_ACTION_CODES = {Action.UPLOAD: 0, Action.DOWNLOAD: 1, Action.VIEW: 2}


def label_sort_key(label: Any) -> Tuple[int, int, str]:
    """Order integer-like labels numerically, everything else as text"""
    if isinstance(label, (int, np.integer)) and not isinstance(label, bool):
        return (0, int(label), "")
    text = str(label)
    if text.isdigit():
        return (0, int(text), text)
    return (1, 0, text)

# ======================
# Score vectors
# ======================

@dataclass(frozen=True, eq=False)
class ScoreVector:
    """Real score per node of one side"""
    values: np.ndarray
    side: Side

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise ValidationException(f"score vector must be 1-d, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise DataException(f"non-finite {self.side.value} scores", error_code="NON_FINITE_SCORES")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

# ======================
# Networks
# ======================

@dataclass(frozen=True, eq=False)
class BipartiteNetwork:
    """
    Immutable weighted bipartite graph

    `forward` has one row per node of `row_side`; `backward` is its
    transpose. `edge_actions` (optional) is aligned with `forward.data`.
    """
    forward: sparse.csr_matrix
    backward: sparse.csr_matrix
    row_labels: Tuple[Any, ...]
    col_labels: Tuple[Any, ...]
    edge_actions: Optional[np.ndarray] = None

    row_side = Side.USER
    col_side = Side.ITEM

    # ---- structure ----

    @property
    def edge_count(self) -> int:
        return int(self.forward.nnz)

    @cached_property
    def row_degree(self) -> np.ndarray:
        return np.diff(self.forward.indptr).astype(np.int64)

    @cached_property
    def col_degree(self) -> np.ndarray:
        return np.diff(self.backward.indptr).astype(np.int64)

    def sides(self) -> Tuple[Side, Side]:
        return (self.row_side, self.col_side)

    def other(self, side: Side) -> Side:
        if side == self.row_side:
            return self.col_side
        if side == self.col_side:
            return self.row_side
        raise ValidationException(f"{type(self).__name__} has no '{side.value}' side")

    def size(self, side: Side) -> int:
        return len(self.labels(side))

    def labels(self, side: Side) -> Tuple[Any, ...]:
        return self.row_labels if side == self.row_side else self._col(side, self.col_labels)

    def degree(self, side: Side) -> np.ndarray:
        return self.row_degree if side == self.row_side else self._col(side, self.col_degree)

    def matrix_toward(self, side: Side) -> sparse.csr_matrix:
        """Matrix whose rows are the nodes of `side`"""
        return self.forward if side == self.row_side else self._col(side, self.backward)

    def _col(self, side: Side, value):
        if side != self.col_side:
            raise ValidationException(f"{type(self).__name__} has no '{side.value}' side")
        return value

    def index(self, side: Side) -> Dict[Any, int]:
        return self._row_index if side == self.row_side else self._col(side, self._col_index)

    @cached_property
    def _row_index(self) -> Dict[Any, int]:
        return {label: i for i, label in enumerate(self.row_labels)}

    @cached_property
    def _col_index(self) -> Dict[Any, int]:
        return {label: i for i, label in enumerate(self.col_labels)}

    def row_of_edges(self) -> np.ndarray:
        """Row index of every stored entry of `forward`"""
        return np.repeat(np.arange(len(self.row_labels)), self.row_degree)

    def iter_edges(self, by: Optional[Side] = None) -> Iterator[Tuple[Any, Any, float]]:
        """Yield (row label, col label, weight) traversing rows or columns"""
        by = by or self.row_side
        matrix = self.matrix_toward(by)
        outer = self.labels(by)
        inner = self.labels(self.other(by))
        for i, label in enumerate(outer):
            for k in range(matrix.indptr[i], matrix.indptr[i + 1]):
                other = inner[matrix.indices[k]]
                weight = float(matrix.data[k])
                if by == self.row_side:
                    yield (label, other, weight)
                else:
                    yield (other, label, weight)

    def component_count(self) -> int:
        """Connected components, counting isolated nodes"""
        n_rows, n_cols = self.forward.shape
        if n_rows + n_cols == 0:
            return 0
        if self.forward.nnz == 0:
            return n_rows + n_cols
        adjacency = sparse.bmat([[None, self.forward], [self.backward, None]], format="csr")
        count, _ = connected_components(adjacency, directed=False)
        return int(count)

    def is_connected(self) -> bool:
        return self.component_count() == 1

    def with_weights(self, data: np.ndarray):
        """Same structure, new weights (given in `forward.data` order)"""
        forward = sparse.csr_matrix(
            (np.asarray(data, dtype=np.float64), self.forward.indices.copy(), self.forward.indptr.copy()),
            shape=self.forward.shape,
        )
        return type(self)(
            forward=forward,
            backward=_transpose(forward),
            row_labels=self.row_labels,
            col_labels=self.col_labels,
            edge_actions=self.edge_actions,
        )


class UserItemNetwork(BipartiteNetwork):
    """Weighted user-item network W"""
    row_side = Side.USER
    col_side = Side.ITEM

    @property
    def n_users(self) -> int:
        return len(self.row_labels)

    @property
    def n_items(self) -> int:
        return len(self.col_labels)

    @property
    def user_degree(self) -> np.ndarray:
        return self.row_degree

    @property
    def item_degree(self) -> np.ndarray:
        return self.col_degree

    @property
    def density(self) -> float:
        cells = self.n_users * self.n_items
        return self.edge_count / cells if cells else 0.0


class AuthorPaperNetwork(BipartiteNetwork):
    """Author-paper network P (binary as built)"""
    row_side = Side.AUTHOR
    col_side = Side.ITEM

    @property
    def n_authors(self) -> int:
        return len(self.row_labels)

    @property
    def n_papers(self) -> int:
        return len(self.col_labels)

    @property
    def author_degree(self) -> np.ndarray:
        return self.row_degree

    @property
    def paper_degree(self) -> np.ndarray:
        return self.col_degree

# ======================
# Construction
# ======================

def _transpose(matrix: sparse.csr_matrix) -> sparse.csr_matrix:
    backward = matrix.T.tocsr()
    backward.sort_indices()
    return backward


def _label_universe(
    seen: Iterable[Any],
    given: Optional[Sequence[Any]],
    what: str,
) -> Tuple[Tuple[Any, ...], Dict[Any, int]]:
    if given is None:
        labels = tuple(sorted(set(seen), key=label_sort_key))
    else:
        labels = tuple(given)
        if len(set(labels)) != len(labels):
            raise DataException(f"{what} labels are not unique", error_code="DUPLICATE_LABEL")
    index = {label: i for i, label in enumerate(labels)}
    return labels, index


def _assemble(
    cls,
    rows: Sequence[Any],
    cols: Sequence[Any],
    weights: Sequence[float],
    row_labels: Optional[Sequence[Any]],
    col_labels: Optional[Sequence[Any]],
    actions: Optional[Sequence[int]] = None,
):
    row_labels, row_index = _label_universe(rows, row_labels, cls.row_side.value)
    col_labels, col_index = _label_universe(cols, col_labels, cls.col_side.value)

    try:
        r = np.fromiter((row_index[x] for x in rows), dtype=np.int64, count=len(rows))
    except KeyError as exc:
        raise RecordNotFoundException(cls.row_side.value, exc.args[0]) from None
    try:
        c = np.fromiter((col_index[x] for x in cols), dtype=np.int64, count=len(cols))
    except KeyError as exc:
        raise RecordNotFoundException(cls.col_side.value, exc.args[0]) from None

    w = np.asarray(weights, dtype=np.float64)
    bad = ~(np.isfinite(w) & (w > 0))
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        raise DataException(
            f"link ({rows[k]}, {cols[k]}) has non-positive weight {w[k]!r}",
            error_code="NON_POSITIVE_WEIGHT",
        )

    order = np.lexsort((c, r))
    r, c, w = r[order], c[order], w[order]
    if len(r) > 1:
        dup = np.flatnonzero((r[1:] == r[:-1]) & (c[1:] == c[:-1]))
        if dup.size:
            k = int(dup[0])
            raise DuplicateLinkException(row_labels[r[k]], col_labels[c[k]])

    edge_actions = None
    if actions is not None:
        edge_actions = np.asarray(actions, dtype=np.int8)[order]

    indptr = np.zeros(len(row_labels) + 1, dtype=np.int64)
    np.cumsum(np.bincount(r, minlength=len(row_labels)), out=indptr[1:])
    forward = sparse.csr_matrix((w, c, indptr), shape=(len(row_labels), len(col_labels)))

    return cls(
        forward=forward,
        backward=_transpose(forward),
        row_labels=row_labels,
        col_labels=col_labels,
        edge_actions=edge_actions,
    )


def build_user_item_network(
    edges: Iterable[Tuple],
    users: Optional[Sequence[Any]] = None,
    items: Optional[Sequence[Any]] = None,
) -> UserItemNetwork:
    """
    Build W from (user, item, weight) or (user, item, weight, action) tuples

    Without explicit `users`/`items` the label universe is the set of labels
    seen in the edges. Explicit universes keep nodes without links.
    """
    rows, cols, weights, actions = [], [], [], []
    has_actions = None
    for edge in edges:
        if has_actions is None:
            has_actions = len(edge) == 4
        rows.append(edge[0])
        cols.append(edge[1])
        weights.append(edge[2])
        if has_actions:
            actions.append(Action(edge[3]).code)

    net = _assemble(UserItemNetwork, rows, cols, weights, users, items, actions if has_actions else None)
    logger.debug(f"Built user-item network: N={net.n_users} M={net.n_items} links={net.edge_count}")
    return net


def build_author_paper_network(
    links: Iterable[Tuple[Any, Any]],
    authors: Optional[Sequence[Any]] = None,
    papers: Optional[Sequence[Any]] = None,
) -> AuthorPaperNetwork:
    """Build binary P from (author, paper) pairs"""
    rows, cols = [], []
    for author, paper in links:
        rows.append(author)
        cols.append(paper)

    net = _assemble(AuthorPaperNetwork, rows, cols, np.ones(len(rows)), authors, papers)
    if net.n_authors and (net.author_degree < 1).any():
        lonely = [net.row_labels[i] for i in np.flatnonzero(net.author_degree < 1)]
        raise DataException(f"authors without papers: {lonely[:5]}", error_code="EMPTY_AUTHOR")
    return net

# ======================
# Views
# ======================

def unweighted_view(net: BipartiteNetwork) -> BipartiteNetwork:
    """E: every stored link gets weight 1"""
    return net.with_weights(np.ones(net.edge_count))


def normalized_view(net: BipartiteNetwork, side_exponent: float = 0.5) -> BipartiteNetwork:
    """Divide each link weight by (row-side degree) ** side_exponent"""
    degree = net.row_degree[net.row_of_edges()].astype(np.float64)
    return net.with_weights(net.forward.data / degree ** side_exponent)

# ======================
# Aggregation kernel
# ======================

def aggregate(
    net: BipartiteNetwork,
    values: ScoreVector,
    toward: Side,
    theta: float = 0.0,
    rho: float = 0.0,
    shift_mean: float = 0.0,
) -> ScoreVector:
    """
    out_t = deg_t ** -theta * sum_s w_ts * (in_s - rho * shift_mean)

    Nodes of degree 0 on the output side score 0.
    """
    source = net.other(toward)
    if values.side != source:
        raise ValidationException(
            f"input scores live on '{values.side.value}', expected '{source.value}'"
        )
    if len(values) != net.size(source):
        raise DimensionMismatchException(f"{source.value} scores", net.size(source), len(values))

    x = values.values
    if rho:
        x = x - rho * shift_mean
    out = net.matrix_toward(toward) @ x

    if theta:
        degree = net.degree(toward)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(degree > 0, out / degree.astype(np.float64) ** theta, 0.0)
    return ScoreVector(np.asarray(out, dtype=np.float64), toward)
