"""Concrete linear algebra for the two example families.

``A_o(F)`` data: an invertible F with ``F conj(F) = +-1``; derived sign,
``t = Tr(F* F)``, and the eigenvalue list of ``F* F`` classify the quantum
group up to isomorphism, while the sign and ``t`` alone decide monoidal
equivalence. The monoidally equivalent 2x2 normal form is ``F_q`` with
``|q| + 1/|q| = t`` and the sign rule ``F_q conj(F_q) = -sgn(q) 1``.

``A_aut(D, omega)`` data: a multiblock C*-algebra with a faithful state.
The multiplication tensor is computed in an orthonormal GNS basis and the
state is a delta-form when ``mu mu* = delta^2 1``; for a matrix block with
state ``Tr(. F)`` this gives ``delta^2 = Tr(F^{-1})``, reproduced here by the
direct tensor computation rather than assumed. Monoidal equivalence is
decided by equality of delta^2, and the normal-form partner is an M_2 block
``diag(lambda, 1 - lambda)`` with ``1/lambda + 1/(1-lambda) = delta^2``.

Both families induce central walks (SU(2)-type with t = Tr(F*F),
SO(3)-type with the computed delta^2) under the identification of the label
sets with the nonnegative integers; the label bijection realizing the
monoidal equivalence is then the identity, which is what the walk-equality
check exercises.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, NumericFailure
from .fusion import ProbMeasure, SO3Ring, SU2Ring
from .walk import CentralWalk

__all__ = [
    "AoFMatrix", "AlgebraSpec", "MultiplicationTensor", "DeltaFormResult",
    "validate_aof", "f_q", "iso_invariant", "is_isomorphic", "su2_partner",
    "decide_moneq_ao", "multiplication_tensor", "delta_form",
    "decide_moneq_aut", "aut_normal_form", "q_matrix_states", "walk_of",
    "amenability_flags", "verify_walk_equality",
    "matrix_from_json", "matrix_to_json", "algebra_spec_from_json",
    "algebra_spec_to_json",
]

SIGN_TOL = 1e-10
EIG_TOL = 1e-9
CLASSIFY_TOL = 1e-8


@dataclass(frozen=True)
class AoFMatrix:
    """Validated A_o(F) datum with its derived invariants."""

    n: int
    F: np.ndarray
    sign: int
    t: float
    Q: np.ndarray               # F* F
    eigenvalues: tuple          # of F* F, ascending

    def __repr__(self):
        return f"AoFMatrix(n={self.n}, sign={self.sign:+d}, t={self.t})"


def validate_aof(F) -> AoFMatrix:
    """Check ``F conj(F) = +-1`` and derive the classification data.

    The eigenvalue list of F*F is automatically closed under inversion and
    satisfies Tr(Q) = Tr(Q^{-1}); both are verified numerically as guards
    against inconsistent input.
    """
    F = np.asarray(F, dtype=complex)
    if F.ndim != 2 or F.shape[0] != F.shape[1]:
        raise InvalidInput(f"F must be square, got shape {F.shape}")
    if not np.all(np.isfinite(F)):
        raise InvalidInput("F has non-finite entries")
    n = F.shape[0]
    smin = np.linalg.svd(F, compute_uv=False)[-1]
    if smin < 1e-12:
        raise InvalidInput("F is singular (or numerically so)")
    ffbar = F @ np.conj(F)
    sign = int(round(ffbar[0, 0].real))
    if sign not in (-1, 1):
        raise InvalidInput(
            f"F conj(F) is not +-identity: corner value {ffbar[0, 0]:.6g}"
        )
    residual = np.max(np.abs(ffbar - sign * np.eye(n)))
    if residual > SIGN_TOL:
        raise InvalidInput(
            f"F conj(F) differs from {sign:+d} identity by {residual:.3g} "
            f"(tolerance {SIGN_TOL})"
        )
    Q = np.conj(F.T) @ F
    eigs = np.linalg.eigvalsh(Q)
    if eigs[0] <= 0.0:
        raise NumericFailure("F* F has a non-positive eigenvalue")
    inv_sorted = np.sort(1.0 / eigs)
    if np.max(np.abs(np.sort(eigs) - inv_sorted)) > EIG_TOL:
        raise InvalidInput(
            "eigenvalue list of F* F is not closed under inversion"
        )
    t = float(np.trace(Q).real)
    if abs(t - float(np.sum(1.0 / eigs))) > EIG_TOL:
        raise InvalidInput("Tr(F* F) differs from Tr((F* F)^{-1})")
    return AoFMatrix(n=n, F=F, sign=sign, t=t, Q=Q,
                     eigenvalues=tuple(float(v) for v in eigs))


def f_q(q: float) -> np.ndarray:
    """The 2x2 representative with parameter q in [-1, 1] without 0.

    ``f_q(q) = [[0, sqrt|q|], [-sgn(q)/sqrt|q|, 0]]``; its F conj(F) equals
    ``-sgn(q)`` times the identity and Tr(F* F) = |q| + 1/|q|.
    """
    q = float(q)
    if not 0.0 < abs(q) <= 1.0:
        raise InvalidInput(f"q must lie in [-1, 1] without 0, got {q}")
    r = math.sqrt(abs(q))
    return np.array([[0.0, r], [-math.copysign(1.0, q) / r, 0.0]], dtype=complex)


def iso_invariant(a: AoFMatrix) -> tuple:
    """The isomorphism invariant (n, sign, ascending eigenvalues of F*F)."""
    return (a.n, a.sign, a.eigenvalues)


def is_isomorphic(a: AoFMatrix, b: AoFMatrix, eig_tol: float = CLASSIFY_TOL) -> bool:
    if a.n != b.n or a.sign != b.sign:
        return False
    return max(abs(x - y) for x, y in zip(a.eigenvalues, b.eigenvalues)) <= eig_tol


def su2_partner(a: AoFMatrix) -> float:
    """The unique q with A_o(F) monoidally equivalent to A_o(f_q(q)).

    ``|q| + 1/|q| = Tr(F* F)`` and the sign of q is chosen so that the
    normal form has the same sign of F conj(F) (which is -sgn(q)).
    """
    t = a.t
    if t < 2.0 - 1e-12:
        raise NumericFailure(f"Tr(F* F) = {t} < 2 for a validated input")
    disc = max(t * t - 4.0, 0.0)
    magnitude = (t - math.sqrt(disc)) / 2.0
    return -a.sign * magnitude


def decide_moneq_ao(a: AoFMatrix, b: AoFMatrix, tol: float = EIG_TOL) -> bool:
    """Monoidal equivalence for A_o data: same sign and equal Tr(F* F)."""
    return a.sign == b.sign and abs(a.t - b.t) <= tol


@dataclass(frozen=True)
class AlgebraSpec:
    """A multiblock C*-algebra with a faithful state.

    ``blocks`` is a tuple of (n_i, F_i) pairs: an M_{n_i} block carrying the
    state Tr(. F_i), with every F_i positive definite and the traces summing
    to 1.
    """

    blocks: tuple

    def __post_init__(self):
        if not self.blocks:
            raise InvalidInput("algebra needs at least one block")
        checked = []
        total_trace = 0.0
        for n, Fi in self.blocks:
            n = int(n)
            Fi = np.asarray(Fi, dtype=complex)
            if Fi.shape != (n, n):
                raise InvalidInput(f"block state matrix has shape {Fi.shape}, expected ({n},{n})")
            if np.max(np.abs(Fi - np.conj(Fi.T))) > 1e-12:
                raise InvalidInput("block state matrix is not hermitian")
            eigs = np.linalg.eigvalsh(Fi)
            if eigs[0] <= 1e-12:
                raise InvalidInput(
                    f"state is not faithful: block eigenvalue {eigs[0]:.3g} at floor 1e-12"
                )
            total_trace += float(np.trace(Fi).real)
            checked.append((n, Fi))
        if abs(total_trace - 1.0) > 1e-12:
            raise InvalidInput(f"state not normalized: sum of traces {total_trace!r}")
        object.__setattr__(self, "blocks", tuple(checked))

    @classmethod
    def commutative(cls, weights) -> "AlgebraSpec":
        """C^k with the state given by a weight vector."""
        return cls(tuple((1, np.array([[float(w)]], dtype=complex)) for w in weights))

    @classmethod
    def matrix_block(cls, F) -> "AlgebraSpec":
        """A single matrix block M_n with state Tr(. F)."""
        F = np.asarray(F, dtype=complex)
        return cls(((F.shape[0], F),))

    @property
    def total_dimension(self) -> int:
        return sum(n * n for n, _ in self.blocks)

    def __repr__(self):
        shape = "+".join(f"M{n}" for n, _ in self.blocks)
        return f"AlgebraSpec({shape}, dim={self.total_dimension})"


@dataclass(frozen=True)
class MultiplicationTensor:
    """Structure tensor of (multiplication, unit) in an orthonormal GNS basis.

    ``mu[c, a, b]`` is the coefficient of basis vector c in the product of
    basis vectors a and b; ``eta`` holds the coordinates of the algebra unit.
    The basis itself (block-diagonal matrices) is returned for
    reproducibility.
    """

    mu: np.ndarray
    eta: np.ndarray
    basis: tuple


def _embed_block(spec: AlgebraSpec, block_index: int, mat: np.ndarray) -> np.ndarray:
    sizes = [n for n, _ in spec.blocks]
    total = sum(sizes)
    out = np.zeros((total, total), dtype=complex)
    off = sum(sizes[:block_index])
    n = sizes[block_index]
    out[off:off + n, off:off + n] = mat
    return out


def multiplication_tensor(d: AlgebraSpec) -> MultiplicationTensor:
    """Multiplication and unit of the algebra in an orthonormal basis.

    The GNS inner product is ``<a, b> = omega(a* b)`` with
    ``omega = sum_i Tr(. F_i)``; the orthonormal basis is the block-wise
    family ``e_{ij} F_i^{-1/2}``.
    """
    basis = []
    for bi, (n, Fi) in enumerate(d.blocks):
        eigs, U = np.linalg.eigh(Fi)
        inv_sqrt = (U * (1.0 / np.sqrt(eigs))) @ np.conj(U.T)
        for i in range(n):
            for j in range(n):
                e = np.zeros((n, n), dtype=complex)
                e[i, j] = 1.0
                basis.append(_embed_block(d, bi, e @ inv_sqrt))
    W = np.zeros_like(basis[0])
    off = 0
    for n, Fi in d.blocks:
        W[off:off + n, off:off + n] = Fi
        off += n
    dim = len(basis)

    def gns(a, b):
        # <a, b> = omega(a* b) = Tr(W a* b)
        return complex(np.trace(W @ np.conj(a.T) @ b))

    # orthonormality guard for the constructed basis
    for i in range(dim):
        for j in range(dim):
            expected = 1.0 if i == j else 0.0
            if abs(gns(basis[i], basis[j]) - expected) > 1e-10:
                raise NumericFailure("GNS basis failed orthonormality check")

    mu = np.zeros((dim, dim, dim), dtype=complex)
    for a in range(dim):
        for b in range(dim):
            prod = basis[a] @ basis[b]
            for c in range(dim):
                mu[c, a, b] = gns(basis[c], prod)
    unit = np.eye(basis[0].shape[0], dtype=complex)
    eta = np.array([gns(u, unit) for u in basis])
    return MultiplicationTensor(mu=mu, eta=eta, basis=tuple(basis))


@dataclass(frozen=True)
class DeltaFormResult:
    is_delta_form: bool
    delta2: float
    defect: float


def delta_form(d: AlgebraSpec, tol: float = 1e-9) -> DeltaFormResult:
    """Decide whether the state is a delta-form by computing mu mu*.

    ``mu mu*`` is assembled from the multiplication tensor in the GNS basis;
    the verdict is positive when it is within ``tol`` (operator norm) of a
    scalar matrix, and ``delta2`` is that scalar.
    """
    mt = multiplication_tensor(d)
    dim = mt.mu.shape[0]
    flat = mt.mu.reshape(dim, dim * dim)
    mm = flat @ np.conj(flat.T)
    delta2 = float(np.trace(mm).real) / dim
    defect = float(np.max(np.abs(np.linalg.eigvalsh(mm - delta2 * np.eye(dim)))))
    return DeltaFormResult(is_delta_form=bool(defect <= tol), delta2=delta2, defect=defect)


def decide_moneq_aut(d1: AlgebraSpec, d2: AlgebraSpec, tol: float = EIG_TOL) -> bool:
    """Monoidal equivalence for quantum automorphism data: delta_1 = delta_2."""
    results = []
    for d in (d1, d2):
        if d.total_dimension < 4:
            raise InvalidInput(
                f"algebra dimension {d.total_dimension} < 4: classical case, "
                "not covered by the equivalence criterion"
            )
        r = delta_form(d)
        if not r.is_delta_form:
            raise InvalidInput(f"state on {d!r} is not a delta-form (defect {r.defect:.3g})")
        results.append(r)
    return abs(results[0].delta2 - results[1].delta2) <= tol


def aut_normal_form(d: AlgebraSpec) -> AlgebraSpec:
    """The monoidally equivalent M_2 partner with state Tr(. diag(l, 1-l)).

    ``1/l + 1/(1-l) = delta^2`` with ``l in (0, 1/2]``; for delta^2 = 4 this
    is the normalized trace.
    """
    r = delta_form(d)
    if not r.is_delta_form:
        raise InvalidInput(f"state is not a delta-form (defect {r.defect:.3g})")
    if r.delta2 < 4.0 - 1e-9:
        raise InvalidInput(f"no M_2 partner exists for delta^2 = {r.delta2} < 4")
    lam = (1.0 - math.sqrt(max(1.0 - 4.0 / r.delta2, 0.0))) / 2.0
    return AlgebraSpec.matrix_block(np.diag([lam, 1.0 - lam]).astype(complex))


def q_matrix_states(Q, A) -> dict:
    """The pair of states attached to a positive matrix Q.

    ``psi = Tr(Q A) / Tr(Q)`` and ``phi = Tr(Q^{-1} A) / Tr(Q^{-1})``.
    """
    Q = np.asarray(Q, dtype=complex)
    A = np.asarray(A, dtype=complex)
    if np.max(np.abs(Q - np.conj(Q.T))) > 1e-12:
        raise InvalidInput("Q must be hermitian")
    eigs = np.linalg.eigvalsh(Q)
    if eigs[0] <= 0.0:
        raise InvalidInput("Q must be positive definite")
    Qinv = np.linalg.inv(Q)
    psi = complex(np.trace(Q @ A) / np.trace(Q))
    phi = complex(np.trace(Qinv @ A) / np.trace(Qinv))
    return {"psi": psi, "phi": phi}


def walk_of(obj, mu_weights) -> CentralWalk:
    """Central walk induced by A_o(F) or A_aut(D, omega) data.

    A_o data yields the SU(2)-type ring with t = Tr(F* F); a delta-form
    algebra yields the SO(3)-type ring with its delta^2. Under the standard
    identification of both label sets with the nonnegative integers, the
    label bijection realizing a monoidal equivalence is the identity.
    """
    if isinstance(obj, AoFMatrix):
        ring = SU2Ring(obj.t)
    elif isinstance(obj, AlgebraSpec):
        r = delta_form(obj)
        if not r.is_delta_form:
            raise InvalidInput(
                f"state is not a delta-form (defect {r.defect:.3g}); no SO(3)-type walk"
            )
        ring = SO3Ring(r.delta2)
    else:
        raise InvalidInput(f"walk_of expects AoFMatrix or AlgebraSpec, got {type(obj).__name__}")
    if isinstance(mu_weights, ProbMeasure):
        if mu_weights.ring != ring:
            raise InvalidInput("measure lives on a different ring than the induced walk")
        return CentralWalk(mu_weights)
    return CentralWalk(ProbMeasure(ring, dict(mu_weights)))


def amenability_flags(obj) -> dict:
    """Coamenability metadata for the two families.

    A_o(F): coamenable exactly for n = 2. A_aut(D, omega): coamenable
    exactly when dim(D) <= 4; for the nontrivial M_2 normal forms the
    maximal Kac subgroup is the one-dimensional torus (recorded as metadata,
    not recomputed here).
    """
    if isinstance(obj, AoFMatrix):
        if obj.n == 2:
            return {"coamenable": True, "note": "dim(F) = 2: SU_q(2)-type, coamenable"}
        return {"coamenable": False,
                "note": f"dim(F) = {obj.n} >= 3: dual is not amenable"}
    if isinstance(obj, AlgebraSpec):
        dim = obj.total_dimension
        if dim <= 4:
            return {"coamenable": True,
                    "note": f"dim(D) = {dim} <= 4: coamenable",
                    "maximal_kac_subgroup": "the quantum group itself (Kac) when delta^2 = 4"}
        return {"coamenable": False,
                "note": f"dim(D) = {dim} > 4: dual is not amenable",
                "maximal_kac_subgroup": "one-dimensional torus (known for the M_2 normal forms)"}
    raise InvalidInput(f"amenability_flags expects AoFMatrix or AlgebraSpec, got {type(obj).__name__}")


def verify_walk_equality(w1: CentralWalk, w2: CentralWalk, max_label: int = 40,
                         green_upto: int = 10, p_tol: float = 1e-12,
                         g_tol: float = 1e-8, window: int = 200) -> dict:
    """Entrywise comparison of two walks under the identity label bijection.

    Transition matrices are compared on labels up to ``max_label``; Green
    kernels (windowed linear solve, identical windows on both sides, which
    also covers the Kac cases where the raw series converges too slowly) on
    labels up to ``green_upto``.
    """
    from .potential import GreenLinearSolver

    p_diff = 0.0
    for x in range(max_label + 1):
        r1 = w1.transition_row(x)
        r2 = w2.transition_row(x)
        for y in set(r1) | set(r2):
            p_diff = max(p_diff, abs(r1.get(y, 0.0) - r2.get(y, 0.0)))
    s1 = GreenLinearSolver(w1, window=window)
    s2 = GreenLinearSolver(w2, window=window)
    g_diff = 0.0
    for y in range(green_upto + 1):
        c1 = s1.column(y)
        c2 = s2.column(y)
        for x in range(green_upto + 1):
            g_diff = max(g_diff, abs(c1[x] - c2[x]))
    return {
        "transition_max_abs_diff": p_diff,
        "transition_labels_checked": max_label,
        "transitions_equal": bool(p_diff <= p_tol),
        "green_max_abs_diff": g_diff,
        "green_labels_checked": green_upto,
        "green_window": window,
        "greens_equal": bool(g_diff <= g_tol),
        "walks_equal": bool(p_diff <= p_tol and g_diff <= g_tol),
    }


# --- JSON forms -------------------------------------------------------------

def matrix_to_json(M) -> dict:
    M = np.asarray(M, dtype=complex)
    return {"re": M.real.tolist(), "im": M.imag.tolist()}


def matrix_from_json(doc) -> np.ndarray:
    if not isinstance(doc, dict) or "re" not in doc:
        raise InvalidInput("matrix JSON needs at least a 're' field")
    re = np.asarray(doc["re"], dtype=float)
    im = np.asarray(doc.get("im", np.zeros_like(re)), dtype=float)
    if re.shape != im.shape:
        raise InvalidInput("matrix JSON 're' and 'im' shapes differ")
    return re + 1j * im


def algebra_spec_to_json(d: AlgebraSpec) -> dict:
    return {"blocks": [{"n": n, "F": matrix_to_json(F)} for n, F in d.blocks]}


def algebra_spec_from_json(doc) -> AlgebraSpec:
    if not isinstance(doc, dict) or "blocks" not in doc:
        raise InvalidInput("algebra JSON needs a 'blocks' list")
    blocks = []
    for b in doc["blocks"]:
        blocks.append((int(b["n"]), matrix_from_json(b["F"])))
    return AlgebraSpec(tuple(blocks))
