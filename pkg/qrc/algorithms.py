"""
Fixed-point ranking algorithms: biHITS, QR, EigenRumor and QRC

Every algorithm is a Jacobi-style sweep (all new vectors computed from the
previous iterate) followed by per-vector L2 normalisation, stopped when the
sum of absolute element changes over all vectors drops below tolerance.

A mean shift that cancels its input (rho = 1 on a constant vector, as at the
uniform start) would make the sweep exactly zero. Such a sweep aggregates the
unshifted input instead, so the first iterate carries the degree structure.
"""

from dataclasses import dataclass, replace
from typing import Callable, Dict, Optional
import logging
import math

import numpy as np
from scipy.optimize import brentq

from .bipartite_core import (
    AuthorPaperNetwork,
    BipartiteNetwork,
    ScoreVector,
    Side,
    UserItemNetwork,
    aggregate,
    normalized_view,
    unweighted_view,
)
from .config import ConvergenceConfig, QRCParams, QRParams
from .error_handling import (
    DataException,
    EmptyNetworkException,
    IdMismatchException,
    ValidationException,
)

logger = logging.getLogger("qrc.algorithms")

# relative size below which a mean-shifted input counts as cancelled
DEGENERATE_SHIFT = 1e-12

# ======================
# Result Type
# ======================

@dataclass(frozen=True, eq=False)
class ScoreSet:
    """Reputation R (users), quality Q (items), optional credit A (authors)"""
    reputation: ScoreVector
    quality: ScoreVector
    credit: Optional[ScoreVector] = None
    iterations: int = 0
    converged: bool = False
    residual: float = math.inf

    def vectors(self) -> Dict[str, ScoreVector]:
        found = {"reputation": self.reputation, "quality": self.quality}
        if self.credit is not None:
            found["credit"] = self.credit
        return found


Update = Callable[[ScoreSet], ScoreSet]


def uniform_init(net: UserItemNetwork, authors: Optional[AuthorPaperNetwork] = None) -> ScoreSet:
    """R_i = 1/sqrt(N), Q_a = 1/sqrt(M), A_m = 1/sqrt(O)"""
    def flat(n: int, side: Side) -> ScoreVector:
        return ScoreVector(np.full(n, 1.0 / math.sqrt(n)), side)

    credit = flat(authors.n_authors, Side.AUTHOR) if authors is not None else None
    return ScoreSet(flat(net.n_users, Side.USER), flat(net.n_items, Side.ITEM), credit)

# ======================
# Iteration Engine
# ======================

def _unit(vector: ScoreVector) -> ScoreVector:
    norm = vector.norm()
    if norm == 0.0:
        return vector
    return ScoreVector(vector.values / norm, vector.side)


def fixed_point_iterate(update: Update, init: ScoreSet, config: Optional[ConvergenceConfig] = None,
                        label: str = "fixed-point") -> ScoreSet:
    """
    Iterate `update` from `init` until the summed absolute change is below
    tolerance. Running out of iterations is reported, not raised.
    """
    config = config or ConvergenceConfig()
    for name, vector in init.vectors().items():
        if len(vector) and abs(vector.norm() - 1.0) > 1e-9:
            raise ValidationException(f"initial {name} vector must have unit L2 norm, got {vector.norm()!r}")

    state = init
    residual = math.inf
    for iteration in range(1, config.max_iterations + 1):
        try:
            raw = update(state)
        except DataException as exc:
            if exc.error_code != "NON_FINITE_SCORES":
                raise
            logger.warning(f"{label}: iteration {iteration} produced non-finite scores",
                           extra={"algorithm": label, "iterations": iteration})
            return replace(state, iterations=iteration, converged=False, residual=math.inf)

        previous = state.vectors()
        fresh = {}
        residual = 0.0
        for name, old in previous.items():
            values = getattr(raw, name).values
            norm = float(np.linalg.norm(values))
            if len(values) and norm == 0.0:
                logger.warning(f"{label}: {name} vector collapsed to zero at iteration {iteration}",
                               extra={"algorithm": label, "iterations": iteration})
                return replace(state, iterations=iteration, converged=False, residual=math.inf)
            if norm:
                values = values / norm
            # sign flips are period-2 artefacts, not ranking changes
            if np.dot(values, old.values) < 0:
                values = -values
            residual += float(np.abs(values - old.values).sum())
            fresh[name] = ScoreVector(values, old.side)

        state = ScoreSet(**fresh, iterations=iteration, converged=residual < config.tolerance,
                         residual=residual)
        if state.converged:
            logger.debug(f"{label}: converged after {iteration} iterations (residual {residual:.3e})",
                         extra={"algorithm": label, "iterations": iteration, "residual": residual})
            return state

    logger.warning(
        f"{label}: no convergence within {config.max_iterations} iterations (residual {residual:.3e})",
        extra={"algorithm": label, "iterations": config.max_iterations, "residual": residual,
               "converged": False},
    )
    return state

# ======================
# Preconditions
# ======================

def _require_links(net: BipartiteNetwork, algorithm: str):
    if net.edge_count == 0:
        raise EmptyNetworkException(algorithm)


def _warn_if_disconnected(net: BipartiteNetwork, algorithm: str):
    components = net.component_count()
    if components > 1:
        logger.warning(
            f"{algorithm}: network has {components} components; the fixed point may depend on them",
            extra={"algorithm": algorithm},
        )


def _require_same_items(net: UserItemNetwork, authors: AuthorPaperNetwork):
    if net.col_labels != authors.col_labels:
        ours, theirs = set(net.col_labels), set(authors.col_labels)
        offending = sorted(ours ^ theirs, key=str) or ["<item order differs>"]
        raise IdMismatchException("user-item and author-paper item sets", offending)
    if authors.n_authors == 0:
        raise EmptyNetworkException("author-paper network")


def _mean(vector: ScoreVector) -> float:
    return float(vector.values.mean()) if len(vector) else 0.0


def _shifted(net: BipartiteNetwork, vector: ScoreVector, toward: Side, theta: float, rho: float,
             shift_mean: float) -> ScoreVector:
    """aggregate(), except that a shift cancelling its input to rounding is dropped"""
    if rho and len(vector):
        scale = float(np.abs(vector.values).max())
        if float(np.abs(vector.values - rho * shift_mean).max()) <= DEGENERATE_SHIFT * scale:
            rho = 0.0
    return aggregate(net, vector, toward, theta, rho, shift_mean)

# ======================
# Update Rules
# ======================

def bihits_update(view: UserItemNetwork) -> Update:
    """R = W Q, Q = W^T R"""
    def update(state: ScoreSet) -> ScoreSet:
        return ScoreSet(
            aggregate(view, state.quality, Side.USER),
            aggregate(view, state.reputation, Side.ITEM),
        )
    return update


def qr_update(net: UserItemNetwork, params: QRParams) -> Update:
    def update(state: ScoreSet) -> ScoreSet:
        return ScoreSet(
            _shifted(net, state.quality, Side.USER,
                     params.theta_r, params.rho_q, _mean(state.quality)),
            _shifted(net, state.reputation, Side.ITEM,
                     params.theta_q, params.rho_r, _mean(state.reputation)),
        )
    return update


def eigenrumor_update(net: UserItemNetwork, authors: AuthorPaperNetwork, omega: float) -> Update:
    """Expects the sqrt-degree normalised views W' and P'"""
    def update(state: ScoreSet) -> ScoreSet:
        from_authors = aggregate(authors, state.credit, Side.ITEM).values
        from_users = aggregate(net, state.reputation, Side.ITEM).values
        return ScoreSet(
            aggregate(net, state.quality, Side.USER),
            ScoreVector(omega * from_authors + (1.0 - omega) * from_users, Side.ITEM),
            aggregate(authors, state.quality, Side.AUTHOR),
        )
    return update


def qrc_update(net: UserItemNetwork, authors: AuthorPaperNetwork, params: QRCParams) -> Update:
    qr = params.qr

    def update(state: ScoreSet) -> ScoreSet:
        from_users = _shifted(net, state.reputation, Side.ITEM,
                              qr.theta_q, qr.rho_r, _mean(state.reputation)).values
        from_authors = aggregate(authors, state.credit, Side.ITEM, params.phi_p).values
        return ScoreSet(
            _shifted(net, state.quality, Side.USER, qr.theta_r, qr.rho_q, _mean(state.quality)),
            ScoreVector((1.0 - params.lam) * from_users + params.lam * from_authors, Side.ITEM),
            # mean credit, not mean quality, is subtracted here
            _shifted(authors, state.quality, Side.AUTHOR,
                     params.phi_a, params.rho_a, _mean(state.credit)),
        )
    return update

# ======================
# Algorithms
# ======================

def bihits(net: UserItemNetwork, weighted: bool = False, config: Optional[ConvergenceConfig] = None,
           init: Optional[ScoreSet] = None) -> ScoreSet:
    """Bipartite HITS on E (or on W when `weighted`)"""
    _require_links(net, "biHITS")
    _warn_if_disconnected(net, "biHITS")
    view = net if weighted else unweighted_view(net)
    return fixed_point_iterate(bihits_update(view), init or uniform_init(view), config, "biHITS")


def qr(net: UserItemNetwork, params: QRParams, config: Optional[ConvergenceConfig] = None,
       init: Optional[ScoreSet] = None) -> ScoreSet:
    """Degree-normalised, mean-penalised biHITS on W"""
    label = params.label()
    _require_links(net, label)
    _warn_if_disconnected(net, label)
    return fixed_point_iterate(qr_update(net, params), init or uniform_init(net), config, label)


def _readout(authors: BipartiteNetwork, quality: ScoreVector, phi: float = 0.0,
             rho: float = 0.0, shift_mean: float = 0.0) -> ScoreVector:
    return _unit(aggregate(authors, quality, Side.AUTHOR, phi, rho, shift_mean))


def _credit_readout(authors: AuthorPaperNetwork, quality: ScoreVector, params: QRCParams) -> ScoreVector:
    """
    Credit for a fixed quality vector. The subtracted mean is that of the
    returned (unit) credit itself: the root of m * |A(m)| - mean(A(m)) for the
    raw aggregate A(m), which lies within +-1/sqrt(O) since no unit vector has a larger mean.
    """
    if params.rho_a == 0.0:
        return _readout(authors, quality, params.phi_a)

    def mismatch(mean: float) -> float:
        values = aggregate(authors, quality, Side.AUTHOR, params.phi_a, params.rho_a, mean).values
        return mean * float(np.linalg.norm(values)) - float(values.mean())

    bound = (1.0 + 1e-9) / math.sqrt(authors.n_authors)
    mean = brentq(mismatch, -bound, bound, xtol=1e-15)
    return _readout(authors, quality, params.phi_a, params.rho_a, mean)


def eigenrumor(net: UserItemNetwork, authors: AuthorPaperNetwork, omega: float,
               config: Optional[ConvergenceConfig] = None) -> ScoreSet:
    """EigenRumor with user feedback and author credit on sqrt-normalised views"""
    if not 0.0 <= omega <= 1.0:
        raise ValidationException(f"omega must lie in [0, 1], got {omega}")
    _require_same_items(net, authors)
    _require_links(net, "EigenRumor")

    users = normalized_view(net, 0.5)
    papers = normalized_view(authors, 0.5)
    if omega == 0.0:
        base = bihits(users, weighted=True, config=config)
        return replace(base, credit=_readout(papers, base.quality))

    _warn_if_disconnected(net, "EigenRumor")
    init = uniform_init(net, authors)
    return fixed_point_iterate(eigenrumor_update(users, papers, omega), init, config, "EigenRumor")


def qrc(net: UserItemNetwork, authors: AuthorPaperNetwork, params: QRCParams,
        config: Optional[ConvergenceConfig] = None) -> ScoreSet:
    """Quality-Reputation-Credit on the raw W and P"""
    _require_same_items(net, authors)
    _require_links(net, "QRC")

    if params.lam == 0.0:
        base = qr(net, params.qr, config)
        return replace(base, credit=_credit_readout(authors, base.quality, params))

    _warn_if_disconnected(net, "QRC")
    init = uniform_init(net, authors)
    return fixed_point_iterate(qrc_update(net, authors, params), init, config, "QRC")
