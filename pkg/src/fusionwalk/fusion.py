"""Fusion rings of compact quantum groups and probability measures on them.

Four ring kinds are supported:

* ``SU2Ring(t)`` -- SU(2)-type fusion rules on labels 0, 1, 2, ...; the
  fundamental label 1 has quantum dimension ``t >= 2`` (equivalently
  ``t = q + 1/q`` with ``q`` in (0, 1]), and
  ``x (x) y = |x-y| + (|x-y|+2) + ... + (x+y)``.
* ``SO3Ring(delta2)`` -- SO(3)-type fusion rules, labels 0, 1, 2, ...;
  parameterized by ``delta2 >= 4`` with fundamental dimension
  ``delta2 - 1``, and ``x (x) y = |x-y| + (|x-y|+1) + ... + (x+y)``.
* ``GroupDualRing(table)`` -- the dual of a finite group given by an
  explicit multiplication table; fusion is the group law, all quantum
  dimensions are 1.
* ``ProductRing(left, right)`` -- labels are pairs, everything acts
  componentwise.

Quantum dimensions are computed by the two-term recursion in double
precision; the closed q-integer form is used only as a test oracle.
"""

from __future__ import annotations

import itertools
import math
import threading
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import InvalidInput, NumericFailure, RingMismatch

__all__ = [
    "FusionRing", "SU2Ring", "SO3Ring", "GroupDualRing", "ProductRing",
    "ProbMeasure", "convolve", "reverse_measure", "product_ring",
    "tensor_decompose", "quantum_dimension", "conjugate",
    "cyclic_group_table", "symmetric_group_table",
    "ring_from_json", "ring_to_json", "measure_from_json", "measure_to_json",
]

#: Tolerance on the total mass of a probability measure.
MASS_TOL = 1e-12


class FusionRing:
    """Base class: a based ring with involution and quantum dimension.

    Instances are immutable after construction; internal caches are guarded
    by a lock so concurrent reads from multiple threads are safe.
    """

    kind: str

    @property
    def unit(self):
        """The distinguished trivial label (the tensor unit)."""
        raise NotImplementedError

    def is_valid_label(self, x) -> bool:
        raise NotImplementedError

    def check_label(self, x) -> None:
        if not self.is_valid_label(x):
            raise InvalidInput(f"{x!r} is not a label of {self!r}")

    def tensor(self, x, y) -> dict:
        """All nonzero multiplicities ``z -> mult(z, x (x) y)``."""
        raise NotImplementedError

    def mult(self, z, x, y) -> int:
        """Multiplicity of ``z`` in ``x (x) y``."""
        return self.tensor(x, y).get(z, 0)

    def dim(self, x) -> float:
        """Quantum dimension of the label ``x``."""
        raise NotImplementedError

    def conjugate(self, x):
        """The contragredient label."""
        raise NotImplementedError

    def dim_quotient(self, y, x) -> float:
        """The ratio dim(y) / dim(x).

        Overridable so that integer-labeled rings can evaluate it stably far
        beyond the point where the dimensions themselves overflow.
        """
        return self.dim(y) / self.dim(x)

    @property
    def is_finite(self) -> bool:
        """Whether the label set is finite."""
        raise NotImplementedError

    def labels(self, max_index: int | None = None) -> list:
        """All labels (finite rings) or labels up to ``max_index``."""
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError

    def __eq__(self, other):
        return isinstance(other, FusionRing) and self.to_json() == other.to_json()

    def __hash__(self):
        return hash(repr(self))


class _IntegerLadderRing(FusionRing):
    """Shared machinery for the two integer-labeled kinds.

    Quantum dimensions follow ``d_{n+1} = a * d_n - d_{n-1}`` for a
    kind-specific coefficient ``a``; the cache grows on demand behind a lock.
    """

    _recursion_coeff: float

    def __init__(self):
        self._dims = [1.0, self._fundamental_dim()]
        self._ratios = [self._fundamental_dim()]  # d_{n+1} / d_n
        self._dim_lock = threading.Lock()

    def _fundamental_dim(self) -> float:
        raise NotImplementedError

    @property
    def unit(self) -> int:
        return 0

    def is_valid_label(self, x) -> bool:
        return isinstance(x, int) and not isinstance(x, bool) and x >= 0

    def conjugate(self, x):
        self.check_label(x)
        return x

    def dim(self, x) -> float:
        self.check_label(x)
        if x >= len(self._dims):
            with self._dim_lock:
                a = self._recursion_coeff
                while len(self._dims) <= x:
                    nxt = a * self._dims[-1] - self._dims[-2]
                    if not math.isfinite(nxt):
                        raise NumericFailure(
                            f"quantum dimension overflows double precision at "
                            f"label {len(self._dims)} of {self!r}"
                        )
                    self._dims.append(nxt)
        return self._dims[x]

    def _dim_ratio(self, x: int) -> float:
        """d_{x+1} / d_x via the stable recursion r_x = a - 1 / r_{x-1}."""
        if x >= len(self._ratios):
            with self._dim_lock:
                a = self._recursion_coeff
                while len(self._ratios) <= x:
                    self._ratios.append(a - 1.0 / self._ratios[-1])
        return self._ratios[x]

    def dim_quotient(self, y, x) -> float:
        self.check_label(x)
        self.check_label(y)
        out = 1.0
        if y >= x:
            for k in range(x, y):
                out *= self._dim_ratio(k)
        else:
            for k in range(y, x):
                out /= self._dim_ratio(k)
        return out

    @property
    def is_finite(self) -> bool:
        return False

    def labels(self, max_index: int | None = None) -> list:
        if max_index is None:
            raise InvalidInput("an integer-labeled ring needs a label bound")
        return list(range(max_index + 1))


class SU2Ring(_IntegerLadderRing):
    """SU(2)-type fusion ring with fundamental quantum dimension ``t >= 2``."""

    kind = "su2"

    def __init__(self, t: float):
        t = float(t)
        if not math.isfinite(t) or t < 2.0 - 1e-9:
            raise InvalidInput(f"su2 ring needs t >= 2 (no real q otherwise), got t={t}")
        # values a rounding error below the Kac boundary are the boundary
        self.t = max(t, 2.0)
        self._recursion_coeff = self.t
        super().__init__()

    @classmethod
    def from_q(cls, q: float) -> "SU2Ring":
        q = float(q)
        if not 0.0 < abs(q) <= 1.0:
            raise InvalidInput(f"q must lie in [-1,1] without 0, got {q}")
        return cls(abs(q) + 1.0 / abs(q))

    def _fundamental_dim(self) -> float:
        return self.t

    def tensor(self, x, y) -> dict:
        self.check_label(x)
        self.check_label(y)
        return {z: 1 for z in range(abs(x - y), x + y + 1, 2)}

    def to_json(self) -> dict:
        return {"kind": "su2", "t": self.t}

    def __repr__(self):
        return f"SU2Ring(t={self.t})"


class SO3Ring(_IntegerLadderRing):
    """SO(3)-type fusion ring parameterized by ``delta2 >= 4``."""

    kind = "so3"

    def __init__(self, delta2: float):
        delta2 = float(delta2)
        if not math.isfinite(delta2) or delta2 < 4.0 - 1e-9:
            raise InvalidInput(f"so3 ring needs delta2 >= 4, got {delta2}")
        # values a rounding error below the Kac boundary are the boundary
        self.delta2 = max(delta2, 4.0)
        self._recursion_coeff = self.delta2 - 2.0
        super().__init__()

    def _fundamental_dim(self) -> float:
        return self.delta2 - 1.0

    def tensor(self, x, y) -> dict:
        self.check_label(x)
        self.check_label(y)
        return {z: 1 for z in range(abs(x - y), x + y + 1)}

    def to_json(self) -> dict:
        return {"kind": "so3", "delta2": self.delta2}

    def __repr__(self):
        return f"SO3Ring(delta2={self.delta2})"


class GroupDualRing(FusionRing):
    """Dual of a finite group, given by a multiplication table.

    ``table[x][y]`` is the product of elements ``x`` and ``y``; labels are
    0..n-1. The table is validated to be a genuine group (unit, inverses,
    associativity) -- intended for small groups only.
    """

    kind = "group_dual"

    def __init__(self, table: Iterable[Iterable[int]]):
        tab = tuple(tuple(int(v) for v in row) for row in table)
        n = len(tab)
        if n == 0 or any(len(row) != n for row in tab):
            raise InvalidInput("group table must be square and nonempty")
        if any(v < 0 or v >= n for row in tab for v in row):
            raise InvalidInput("group table entries must be element indices")
        unit = None
        for e in range(n):
            if all(tab[e][x] == x and tab[x][e] == x for x in range(n)):
                unit = e
                break
        if unit is None:
            raise InvalidInput("group table has no identity element")
        for x in range(n):
            if unit not in tab[x]:
                raise InvalidInput(f"group element {x} has no inverse")
        for x in range(n):
            for y in range(n):
                for z in range(n):
                    if tab[tab[x][y]][z] != tab[x][tab[y][z]]:
                        raise InvalidInput("group table is not associative")
        self.table = tab
        self.n = n
        self._unit = unit
        self._inverse = tuple(tab[x].index(unit) for x in range(n))

    @property
    def unit(self) -> int:
        return self._unit

    def is_valid_label(self, x) -> bool:
        return isinstance(x, int) and not isinstance(x, bool) and 0 <= x < self.n

    def tensor(self, x, y) -> dict:
        self.check_label(x)
        self.check_label(y)
        return {self.table[x][y]: 1}

    def dim(self, x) -> float:
        self.check_label(x)
        return 1.0

    def conjugate(self, x):
        self.check_label(x)
        return self._inverse[x]

    @property
    def is_finite(self) -> bool:
        return True

    def labels(self, max_index: int | None = None) -> list:
        return list(range(self.n))

    def to_json(self) -> dict:
        return {"kind": "group_dual", "table": [list(r) for r in self.table]}

    def __repr__(self):
        return f"GroupDualRing(n={self.n})"


class ProductRing(FusionRing):
    """Product of two fusion rings; labels are ordered pairs."""

    kind = "product"

    def __init__(self, left: FusionRing, right: FusionRing):
        self.left = left
        self.right = right

    @property
    def unit(self):
        return (self.left.unit, self.right.unit)

    def is_valid_label(self, x) -> bool:
        return (
            isinstance(x, tuple)
            and len(x) == 2
            and self.left.is_valid_label(x[0])
            and self.right.is_valid_label(x[1])
        )

    def tensor(self, x, y) -> dict:
        self.check_label(x)
        self.check_label(y)
        lt = self.left.tensor(x[0], y[0])
        rt = self.right.tensor(x[1], y[1])
        return {(a, b): ma * mb for a, ma in lt.items() for b, mb in rt.items()}

    def dim(self, x) -> float:
        self.check_label(x)
        return self.left.dim(x[0]) * self.right.dim(x[1])

    def dim_quotient(self, y, x) -> float:
        self.check_label(x)
        self.check_label(y)
        return self.left.dim_quotient(y[0], x[0]) * self.right.dim_quotient(y[1], x[1])

    def conjugate(self, x):
        self.check_label(x)
        return (self.left.conjugate(x[0]), self.right.conjugate(x[1]))

    @property
    def is_finite(self) -> bool:
        return self.left.is_finite and self.right.is_finite

    def labels(self, max_index: int | None = None) -> list:
        return [
            (a, b)
            for a in self.left.labels(max_index)
            for b in self.right.labels(max_index)
        ]

    def to_json(self) -> dict:
        return {"kind": "product", "left": self.left.to_json(), "right": self.right.to_json()}

    def __repr__(self):
        return f"ProductRing({self.left!r}, {self.right!r})"


def product_ring(r1: FusionRing, r2: FusionRing) -> ProductRing:
    return ProductRing(r1, r2)


# Functional aliases for the ring methods, matching the operation names used
# throughout reports and the CLI.

def tensor_decompose(ring: FusionRing, x, y) -> dict:
    return ring.tensor(x, y)


def quantum_dimension(ring: FusionRing, x) -> float:
    return ring.dim(x)


def conjugate(ring: FusionRing, x):
    return ring.conjugate(x)


def cyclic_group_table(n: int) -> list[list[int]]:
    """Multiplication table of Z/n."""
    if n < 1:
        raise InvalidInput("cyclic group order must be >= 1")
    return [[(i + j) % n for j in range(n)] for i in range(n)]


def symmetric_group_table(n: int) -> list[list[int]]:
    """Multiplication table of the symmetric group S_n (small n only)."""
    if n < 1 or n > 5:
        raise InvalidInput("symmetric group tables supported for 1 <= n <= 5")
    perms = sorted(itertools.permutations(range(n)))
    index = {p: i for i, p in enumerate(perms)}
    # product = apply q first, then p
    return [[index[tuple(p[q[k]] for k in range(n))] for q in perms] for p in perms]


@dataclass(frozen=True)
class ProbMeasure:
    """A finitely supported probability measure on the labels of a ring.

    Weights must be in [0, 1] and sum to 1 within ``MASS_TOL``; zero weights
    are dropped. Immutable after construction.
    """

    ring: FusionRing
    weights: Mapping = field(default_factory=dict)

    def __post_init__(self):
        cleaned = {}
        for label, w in self.weights.items():
            if isinstance(label, list):
                label = tuple(label)
            self.ring.check_label(label)
            w = float(w)
            if w < 0.0 or w > 1.0 + MASS_TOL:
                raise InvalidInput(f"weight {w} for label {label!r} outside [0, 1]")
            if w > 0.0:
                cleaned[label] = w
        if not cleaned:
            raise InvalidInput("measure must have nonempty support")
        total = math.fsum(cleaned.values())
        if abs(total - 1.0) > MASS_TOL:
            raise InvalidInput(f"weights sum to {total!r}, expected 1 within {MASS_TOL}")
        object.__setattr__(self, "weights", cleaned)

    @classmethod
    def delta(cls, ring: FusionRing, label) -> "ProbMeasure":
        return cls(ring, {label: 1.0})

    @classmethod
    def uniform(cls, ring: FusionRing) -> "ProbMeasure":
        if not ring.is_finite:
            raise InvalidInput("uniform measure needs a finite ring")
        labs = ring.labels()
        return cls(ring, {x: 1.0 / len(labs) for x in labs})

    def support(self) -> list:
        return sorted(self.weights)

    def weight(self, x) -> float:
        return self.weights.get(x, 0.0)

    def items(self):
        return self.weights.items()

    def reverse(self) -> "ProbMeasure":
        return ProbMeasure(self.ring, {self.ring.conjugate(x): w for x, w in self.weights.items()})

    def __eq__(self, other):
        return (
            isinstance(other, ProbMeasure)
            and self.ring == other.ring
            and self.weights == other.weights
        )


def reverse_measure(mu: ProbMeasure) -> ProbMeasure:
    """The measure ``x -> mu(conjugate(x))``."""
    return mu.reverse()


def convolve(mu: ProbMeasure, nu: ProbMeasure) -> ProbMeasure:
    """Convolution of two measures on the same ring.

    ``(mu * nu)(y) = sum_{x,z} mu(x) nu(z) mult(y, x (x) z) d(y) / (d(x) d(z))``;
    the result sums to 1 by dimension multiplicativity.
    """
    if mu.ring != nu.ring:
        raise RingMismatch("convolution needs measures on the same ring")
    ring = mu.ring
    out: dict = {}
    for x, wx in mu.items():
        dx = ring.dim(x)
        for z, wz in nu.items():
            dz = ring.dim(z)
            scale = wx * wz / (dx * dz)
            for y, m in ring.tensor(x, z).items():
                out[y] = out.get(y, 0.0) + scale * m * ring.dim(y)
    return ProbMeasure(ring, out)


# --- JSON descriptors ------------------------------------------------------

def ring_to_json(ring: FusionRing) -> dict:
    return ring.to_json()


def ring_from_json(descriptor: Mapping) -> FusionRing:
    """Build a ring from a JSON-style descriptor.

    Accepted kinds: ``su2``, ``so3``, ``group_dual``, ``product``.
    """
    if not isinstance(descriptor, Mapping):
        raise InvalidInput(f"ring descriptor must be an object, got {descriptor!r}")
    kind = descriptor.get("kind")
    if kind == "su2":
        if "t" in descriptor:
            return SU2Ring(descriptor["t"])
        if "q" in descriptor:
            return SU2Ring.from_q(descriptor["q"])
        raise InvalidInput("su2 descriptor needs 't' or 'q'")
    if kind == "so3":
        if "delta2" not in descriptor:
            raise InvalidInput("so3 descriptor needs 'delta2'")
        return SO3Ring(descriptor["delta2"])
    if kind == "group_dual":
        if "table" not in descriptor:
            raise InvalidInput("group_dual descriptor needs 'table'")
        return GroupDualRing(descriptor["table"])
    if kind == "product":
        if "left" not in descriptor or "right" not in descriptor:
            raise InvalidInput("product descriptor needs 'left' and 'right'")
        return ProductRing(ring_from_json(descriptor["left"]), ring_from_json(descriptor["right"]))
    raise InvalidInput(f"unknown ring kind {kind!r}")


def label_to_json(label):
    if isinstance(label, tuple):
        return [label_to_json(v) for v in label]
    return label


def label_from_json(value):
    if isinstance(value, list):
        return tuple(label_from_json(v) for v in value)
    return value


def measure_to_json(mu: ProbMeasure) -> dict:
    return {
        "support": [
            {"label": label_to_json(x), "weight": w} for x, w in sorted(mu.items())
        ]
    }


def measure_from_json(ring: FusionRing, descriptor: Mapping) -> ProbMeasure:
    if not isinstance(descriptor, Mapping) or "support" not in descriptor:
        raise InvalidInput("measure descriptor needs a 'support' list")
    weights: dict = {}
    for entry in descriptor["support"]:
        label = label_from_json(entry["label"])
        weights[label] = weights.get(label, 0.0) + float(entry["weight"])
    return ProbMeasure(ring, weights)
