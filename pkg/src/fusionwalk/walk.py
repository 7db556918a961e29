"""The central random walk on the label set of a fusion ring.

A generating measure ``mu`` induces a classical Markov chain on the labels,
with one-step transitions

    p(x, y) = sum_z mu(z) * mult(y, x (x) z) * d(y) / (d(x) * d(z)).

Rows sum to 1 by dimension multiplicativity; this module exposes the kernel,
exact n-step distributions over the finite reachable support, and the
generating / periodicity diagnostics the potential-theory module relies on.
"""

from __future__ import annotations

import math
import threading
from enum import Enum
from math import gcd

import numpy as np
import scipy.sparse as sparse

from .errors import InvalidInput, ResourceLimit, RingMismatch
from .fusion import FusionRing, ProbMeasure, convolve

__all__ = [
    "CentralWalk", "GeneratingDecision", "is_generating", "period",
    "transition_prob", "transition_row", "n_step", "transition_matrix",
]

#: Hard cap on the support size of an exact n-step distribution.
SUPPORT_BUDGET = 2_000_000


class CentralWalk:
    """Markov chain on the labels of ``mu.ring`` driven by the measure ``mu``.

    Transition rows are cached behind a lock; public operations are safe for
    concurrent callers and instances share no mutable state.
    """

    def __init__(self, mu: ProbMeasure):
        self.mu = mu
        self.ring = mu.ring
        self._rows: dict = {}
        self._lock = threading.Lock()

    def __repr__(self):
        return f"CentralWalk(ring={self.ring!r}, support={self.mu.support()})"

    def _row(self, x) -> dict:
        """Internal, uncopied transition row. Callers must not mutate it."""
        row = self._rows.get(x)
        if row is not None:
            return row
        ring = self.ring
        out: dict = {}
        for z, wz in self.mu.items():
            scale = wz / ring.dim(z)
            for y, m in ring.tensor(x, z).items():
                # d(y) / (d(x) d(z)) via the quotient, stable at large labels
                out[y] = out.get(y, 0.0) + scale * m * ring.dim_quotient(y, x)
        with self._lock:
            self._rows.setdefault(x, out)
        return out

    def transition_row(self, x) -> dict:
        """All nonzero one-step probabilities from ``x``."""
        self.ring.check_label(x)
        return dict(self._row(x))

    def transition_prob(self, x, y) -> float:
        self.ring.check_label(x)
        self.ring.check_label(y)
        return self._row(x).get(y, 0.0)

    def step_distribution(self, dist: dict) -> dict:
        """One step of the chain applied to a distribution on labels."""
        out: dict = {}
        for x, px in dist.items():
            for y, p in self._row(x).items():
                out[y] = out.get(y, 0.0) + px * p
        return out

    def step_support(self, support: set) -> set:
        """Exact one-step support (combinatorial, no float thresholds)."""
        out: set = set()
        for x in support:
            for z in self.mu.weights:
                out.update(self.ring.tensor(x, z))
        return out

    def n_step(self, x, n: int) -> dict:
        """Exact distribution after ``n`` steps started from ``x``."""
        self.ring.check_label(x)
        if n < 0:
            raise InvalidInput(f"step count must be >= 0, got {n}")
        dist = {x: 1.0}
        for _ in range(n):
            dist = self.step_distribution(dist)
            if len(dist) > SUPPORT_BUDGET:
                raise ResourceLimit(
                    f"n-step support exceeded {SUPPORT_BUDGET} labels"
                )
        return dist

    @property
    def max_letter_index(self) -> int:
        """Largest integer coordinate appearing in the measure's support.

        Bounds how far a single step can move an integer label.
        """
        peak = 0
        for x in self.mu.weights:
            for v in _integer_coords(x):
                peak = max(peak, v)
        return peak


def _integer_coords(label):
    if isinstance(label, tuple):
        for part in label:
            yield from _integer_coords(part)
    else:
        yield int(label)


def transition_prob(w: CentralWalk, x, y) -> float:
    return w.transition_prob(x, y)


def transition_row(w: CentralWalk, x) -> dict:
    return w.transition_row(x)


def n_step(w: CentralWalk, x, n: int) -> dict:
    return w.n_step(x, n)


class GeneratingDecision(Enum):
    GENERATING = "generating"
    NOT_GENERATING_WITHIN_HORIZON = "not_generating_within_horizon"
    PROVEN_NOT_GENERATING = "proven_not_generating"


def _bfs_reachable(walk: CentralWalk, window_filter, horizon: int):
    """Forward closure of {unit} under steps, restricted to a label window.

    Returns (reached set, stabilized flag); stabilized means no further label
    inside the window is reachable, regardless of horizon.
    """
    frontier = {walk.ring.unit}
    reached = set(frontier)
    stabilized = False
    for _ in range(horizon):
        nxt = {y for y in walk.step_support(frontier) if window_filter(y)}
        nxt -= reached
        if not nxt:
            stabilized = True
            break
        reached |= nxt
        frontier = nxt
    return reached, stabilized


def is_generating(ring: FusionRing, mu: ProbMeasure, horizon: int,
                  frontier: int = 30) -> GeneratingDecision:
    """Decide whether ``mu`` charges every label through convolution powers.

    Breadth-first reachability from the unit. Finite rings are decided
    exactly. For the integer-labeled kinds, labels up to ``frontier`` are
    tested inside a window with cushion ``2 * max letter`` (a label below the
    frontier is reachable iff it is reachable by a path inside that window);
    a stabilized proper subset is then a genuinely closed set. Mixed product
    rings never get the proven-negative verdict, only the within-horizon one.
    """
    if mu.ring != ring:
        raise RingMismatch("measure does not live on the given ring")
    if horizon < 1:
        raise InvalidInput(f"horizon must be >= 1, got {horizon}")
    walk = CentralWalk(mu)

    if ring.is_finite:
        universe = set(ring.labels())
        reached, stabilized = _bfs_reachable(walk, lambda y: True, horizon)
        if reached == universe:
            return GeneratingDecision.GENERATING
        if stabilized:
            return GeneratingDecision.PROVEN_NOT_GENERATING
        return GeneratingDecision.NOT_GENERATING_WITHIN_HORIZON

    window = frontier + 2 * walk.max_letter_index + 1

    def in_window(y):
        return all(v <= window for v in _integer_coords(y))

    reached, stabilized = _bfs_reachable(walk, in_window, horizon)
    targets = [y for y in ring.labels(frontier) if in_window(y)]
    if all(y in reached for y in targets):
        return GeneratingDecision.GENERATING
    if stabilized and ring.kind in ("su2", "so3"):
        return GeneratingDecision.PROVEN_NOT_GENERATING
    return GeneratingDecision.NOT_GENERATING_WITHIN_HORIZON


def period(w: CentralWalk, horizon: int = 24) -> int:
    """gcd of the return-time lengths to the unit detected up to ``horizon``.

    Returns 0 when no return is observed within the horizon. Support sets are
    tracked exactly (combinatorially); for integer rings they are windowed,
    which cannot miss the short returns that determine the gcd.
    """
    unit = w.ring.unit
    if w.ring.is_finite:
        def in_window(y):
            return True
    else:
        window = 2 * max(1, w.max_letter_index) * (horizon + 1)

        def in_window(y):
            return all(v <= window for v in _integer_coords(y))

    support = {unit}
    returns = []
    for n in range(1, horizon + 1):
        support = {y for y in w.step_support(support) if in_window(y)}
        if not support:
            break
        if unit in support:
            returns.append(n)
    out = 0
    for n in returns:
        out = gcd(out, n)
    return out


def transition_matrix(w: CentralWalk, labels: list) -> sparse.csr_matrix:
    """Sub-stochastic transition matrix restricted to an ordered label window.

    Transitions leaving the window are dropped, so rows near the boundary sum
    to less than 1.
    """
    index = {x: i for i, x in enumerate(labels)}
    rows, cols, vals = [], [], []
    for x in labels:
        i = index[x]
        for y, p in w._row(x).items():
            j = index.get(y)
            if j is not None:
                rows.append(i)
                cols.append(j)
                vals.append(p)
    n = len(labels)
    return sparse.csr_matrix(
        (np.asarray(vals), (np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64))),
        shape=(n, n),
    )
