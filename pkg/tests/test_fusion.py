import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fusionwalk.errors import InvalidInput, NumericFailure, RingMismatch
from fusionwalk.fusion import (
    GroupDualRing,
    ProbMeasure,
    ProductRing,
    SO3Ring,
    SU2Ring,
    convolve,
    cyclic_group_table,
    measure_from_json,
    measure_to_json,
    reverse_measure,
    ring_from_json,
    symmetric_group_table,
)


def q_integer(n, q):
    """Closed-form oracle [n]_q = (q^-n - q^n) / (q^-1 - q)."""
    if q == 1.0:
        return float(n)
    return (q ** -n - q ** n) / (q ** -1 - q)


def su2_q(t):
    return (t - math.sqrt(t * t - 4.0)) / 2.0


Z2 = GroupDualRing(cyclic_group_table(2))
Z3 = GroupDualRing(cyclic_group_table(3))
S3 = GroupDualRing(symmetric_group_table(3))


class TestTensorDecompose:
    def test_su2_ladder(self):
        ring = SU2Ring(2.5)
        assert ring.tensor(1, 1) == {0: 1, 2: 1}
        assert ring.tensor(2, 3) == {1: 1, 3: 1, 5: 1}

    def test_so3_full_interval(self):
        ring = SO3Ring(4.0)
        assert ring.tensor(1, 1) == {0: 1, 1: 1, 2: 1}
        assert ring.tensor(2, 3) == {1: 1, 2: 1, 3: 1, 4: 1, 5: 1}

    def test_unit_law(self):
        for ring, x in [(SU2Ring(3.5), 4), (SO3Ring(5.0), 2), (Z3, 2)]:
            assert ring.tensor(ring.unit, x) == {x: 1}
            assert ring.tensor(x, ring.unit) == {x: 1}

    def test_group_dual_is_group_law(self):
        assert Z3.tensor(1, 2) == {0: 1}
        assert Z3.tensor(1, 1) == {2: 1}

    def test_product_componentwise(self):
        ring = ProductRing(SU2Ring(2.0), Z3)
        assert ring.tensor((1, 1), (1, 2)) == {(0, 0): 1, (2, 0): 1}
        assert ring.unit == (0, 0)

    def test_invalid_label_rejected(self):
        with pytest.raises(InvalidInput):
            SU2Ring(2.5).tensor(-1, 0)
        with pytest.raises(InvalidInput):
            Z3.tensor(3, 0)


class TestQuantumDimension:
    def test_kac_case_is_classical(self):
        ring = SU2Ring(2.0)
        for n in range(31):
            assert ring.dim(n) == pytest.approx(n + 1, rel=1e-12)

    def test_q_half_oracle(self):
        # q = 1/2 gives t = 2.5; d_2 = (q^-3 - q^3)/(q^-1 - q) = 5.25
        ring = SU2Ring(2.5)
        assert ring.dim(2) == pytest.approx(5.25, rel=1e-12)
        for n in range(31):
            assert ring.dim(n) == pytest.approx(q_integer(n + 1, 0.5), rel=1e-9)

    def test_so3_classical(self):
        ring = SO3Ring(4.0)
        # recursion check: 3*3 = 1 + 3 + d_2  =>  d_2 = 5 = classical 2n+1
        assert ring.dim(2) == pytest.approx(5.0, rel=1e-12)
        for n in range(31):
            assert ring.dim(n) == pytest.approx(2 * n + 1, rel=1e-9)

    def test_so3_q_oracle(self):
        # SO(3)-type dims are the odd q-integers [2n+1]_q with q + 1/q = delta
        delta2 = 5.0
        q = su2_q(math.sqrt(delta2))
        ring = SO3Ring(delta2)
        for n in range(25):
            assert ring.dim(n) == pytest.approx(q_integer(2 * n + 1, q), rel=1e-9)

    def test_group_dual_dims(self):
        assert all(S3.dim(x) == 1.0 for x in S3.labels())

    def test_overflow_reported(self):
        ring = SU2Ring(3.5)
        with pytest.raises(NumericFailure):
            ring.dim(100_000)

    def test_t_below_two_rejected(self):
        with pytest.raises(InvalidInput):
            SU2Ring(1.9)
        with pytest.raises(InvalidInput):
            SO3Ring(3.9)


class TestConjugate:
    def test_self_conjugate_rings(self):
        assert SU2Ring(2.5).conjugate(5) == 5
        assert SO3Ring(4.0).conjugate(3) == 3

    def test_group_inverse(self):
        assert Z3.conjugate(1) == 2
        assert Z3.conjugate(2) == 1

    def test_unit_self_conjugate(self):
        for ring in (SU2Ring(2.0), SO3Ring(5.0), Z3, ProductRing(SU2Ring(2.0), Z2)):
            assert ring.conjugate(ring.unit) == ring.unit


class TestConvolve:
    def test_delta_unit_is_identity(self):
        ring = SU2Ring(2.5)
        mu = ProbMeasure(ring, {1: 0.25, 2: 0.75})
        out = convolve(ProbMeasure.delta(ring, 0), mu)
        assert out == mu

    def test_su2_q_half(self):
        # d = (1, 2.5, 5.25): weights 1/6.25 = 0.16 and 5.25/6.25 = 0.84
        ring = SU2Ring(2.5)
        d1 = ProbMeasure.delta(ring, 1)
        out = convolve(d1, d1)
        assert out.weight(0) == pytest.approx(0.16, abs=1e-15)
        assert out.weight(2) == pytest.approx(0.84, abs=1e-15)
        assert math.fsum(out.weights.values()) == pytest.approx(1.0, abs=1e-13)

    def test_group_dual_collapses_to_group_law(self):
        out = convolve(ProbMeasure.delta(Z3, 1), ProbMeasure.delta(Z3, 1))
        assert out.weights == {2: 1.0}

    def test_ring_mismatch(self):
        with pytest.raises(RingMismatch):
            convolve(ProbMeasure.delta(Z3, 1), ProbMeasure.delta(Z2, 1))

    @given(st.integers(0, 5), st.integers(0, 5), st.integers(0, 5))
    @settings(max_examples=40, deadline=None)
    def test_associative_on_deltas(self, a, b, c):
        ring = SU2Ring(3.5)
        da, db, dc = (ProbMeasure.delta(ring, x) for x in (a, b, c))
        lhs = convolve(convolve(da, db), dc)
        rhs = convolve(da, convolve(db, dc))
        keys = set(lhs.weights) | set(rhs.weights)
        assert all(abs(lhs.weight(k) - rhs.weight(k)) < 1e-12 for k in keys)


class TestReverseMeasure:
    def test_self_conjugate(self):
        mu = ProbMeasure.delta(SU2Ring(2.5), 1)
        assert reverse_measure(mu) == mu

    def test_group_dual_relabeling(self):
        mu = ProbMeasure(Z3, {1: 0.7, 2: 0.3})
        rev = reverse_measure(mu)
        assert rev.weights == {2: 0.7, 1: 0.3}

    def test_involution(self):
        mu = ProbMeasure(S3, {1: 0.5, 3: 0.25, 5: 0.25})
        assert reverse_measure(reverse_measure(mu)) == mu


class TestMeasureValidation:
    def test_mass_checked(self):
        with pytest.raises(InvalidInput):
            ProbMeasure(Z3, {1: 0.5, 2: 0.499})

    def test_empty_support_rejected(self):
        with pytest.raises(InvalidInput):
            ProbMeasure(Z3, {})

    def test_negative_weight_rejected(self):
        with pytest.raises(InvalidInput):
            ProbMeasure(Z3, {1: 1.5, 2: -0.5})


class TestRingAxioms:
    """The based-ring axioms, exercised on every built-in kind."""

    RINGS = [
        SU2Ring(2.0), SU2Ring(2.5), SU2Ring(3.5),
        SO3Ring(4.0), SO3Ring(5.0),
        Z2, Z3, S3,
        ProductRing(SU2Ring(2.5), Z3),
    ]

    def _labels(self, ring, bound):
        if ring.is_finite:
            return ring.labels()
        return ring.labels(bound)

    @pytest.mark.parametrize("ring", RINGS, ids=repr)
    def test_frobenius_reciprocity(self, ring):
        labels = self._labels(ring, 8)
        for x in labels:
            for y in labels:
                t = ring.tensor(x, y)
                for z in labels:
                    m = t.get(z, 0)
                    assert m == ring.mult(y, ring.conjugate(x), z)
                    assert m == ring.mult(x, z, ring.conjugate(y))

    @pytest.mark.parametrize("ring", RINGS, ids=repr)
    def test_associativity(self, ring):
        labels = self._labels(ring, 5)
        for x in labels:
            for y in labels:
                for z in labels:
                    lhs, rhs = {}, {}
                    for w, m in ring.tensor(x, y).items():
                        for u, m2 in ring.tensor(w, z).items():
                            lhs[u] = lhs.get(u, 0) + m * m2
                    for w, m in ring.tensor(y, z).items():
                        for u, m2 in ring.tensor(x, w).items():
                            rhs[u] = rhs.get(u, 0) + m * m2
                    assert lhs == rhs

    @pytest.mark.parametrize("ring", RINGS, ids=repr)
    def test_involution_and_dims(self, ring):
        for x in self._labels(ring, 12):
            xb = ring.conjugate(x)
            assert ring.conjugate(xb) == x
            assert ring.dim(xb) == pytest.approx(ring.dim(x), rel=1e-12)
            assert ring.dim(x) >= 1.0 - 1e-12

    @pytest.mark.parametrize("ring", RINGS, ids=repr)
    def test_dimension_multiplicativity(self, ring):
        labels = self._labels(ring, 12)
        for x in labels:
            for y in labels:
                total = math.fsum(
                    m * ring.dim(z) for z, m in ring.tensor(x, y).items()
                )
                assert total == pytest.approx(ring.dim(x) * ring.dim(y), rel=1e-9)

    @given(st.floats(2.0, 4.0), st.integers(0, 10), st.integers(0, 10))
    @settings(max_examples=60, deadline=None)
    def test_su2_dim_multiplicativity_random_t(self, t, x, y):
        ring = SU2Ring(t)
        total = math.fsum(m * ring.dim(z) for z, m in ring.tensor(x, y).items())
        assert total == pytest.approx(ring.dim(x) * ring.dim(y), rel=1e-9)

    @given(st.floats(4.0, 8.0), st.integers(0, 8), st.integers(0, 8))
    @settings(max_examples=60, deadline=None)
    def test_so3_dim_multiplicativity_random_delta(self, delta2, x, y):
        ring = SO3Ring(delta2)
        total = math.fsum(m * ring.dim(z) for z, m in ring.tensor(x, y).items())
        assert total == pytest.approx(ring.dim(x) * ring.dim(y), rel=1e-9)


class TestGroupTables:
    def test_bad_table_rejected(self):
        with pytest.raises(InvalidInput):
            GroupDualRing([[0, 1], [1, 1]])  # not a group

    def test_s3_is_nonabelian(self):
        assert any(
            S3.table[x][y] != S3.table[y][x]
            for x in range(6) for y in range(6)
        )

    def test_s3_order_and_unit(self):
        assert S3.n == 6
        assert S3.tensor(S3.unit, 4) == {4: 1}


class TestJsonDescriptors:
    def test_ring_round_trip(self):
        descriptors = [
            {"kind": "su2", "t": 2.5},
            {"kind": "so3", "delta2": 4.0},
            {"kind": "group_dual", "table": cyclic_group_table(3)},
            {"kind": "product",
             "left": {"kind": "su2", "t": 2.0},
             "right": {"kind": "group_dual", "table": cyclic_group_table(2)}},
        ]
        for d in descriptors:
            ring = ring_from_json(d)
            assert ring_from_json(ring.to_json()) == ring

    def test_su2_from_q(self):
        ring = ring_from_json({"kind": "su2", "q": 0.5})
        assert ring.t == pytest.approx(2.5, abs=1e-15)

    def test_unknown_kind_rejected(self):
        with pytest.raises(InvalidInput):
            ring_from_json({"kind": "custom"})

    def test_measure_round_trip(self):
        ring = ProductRing(SU2Ring(2.5), Z3)
        mu = ProbMeasure(ring, {(1, 0): 0.5, (0, 2): 0.5})
        doc = measure_to_json(mu)
        assert measure_from_json(ring, doc) == mu
        assert doc["support"][0]["label"] == [0, 2]
