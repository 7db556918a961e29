import math

import pytest

from fusionwalk.errors import InvalidInput
from fusionwalk.fusion import (
    GroupDualRing,
    ProbMeasure,
    ProductRing,
    SO3Ring,
    SU2Ring,
    convolve,
    cyclic_group_table,
    reverse_measure,
    symmetric_group_table,
)
from fusionwalk.walk import (
    CentralWalk,
    GeneratingDecision,
    is_generating,
    n_step,
    period,
    transition_matrix,
)

Z2 = GroupDualRing(cyclic_group_table(2))
Z3 = GroupDualRing(cyclic_group_table(3))
S3 = GroupDualRing(symmetric_group_table(3))


def walk_su2(t, weights):
    ring = SU2Ring(t)
    return CentralWalk(ProbMeasure(ring, weights))


class TestTransitionProb:
    def test_from_unit_deterministic(self):
        w = walk_su2(2.5, {1: 1.0})
        assert w.transition_prob(0, 1) == 1.0

    def test_birth_death_q_half(self):
        # p(x, x+-1) = d_{x+-1} / (d_x * d_1) with d = (1, 2.5, 5.25)
        w = walk_su2(2.5, {1: 1.0})
        assert w.transition_prob(1, 2) == pytest.approx(0.84, abs=1e-15)
        assert w.transition_prob(1, 0) == pytest.approx(0.16, abs=1e-15)

    def test_so3_kac_row(self):
        ring = SO3Ring(4.0)
        w = CentralWalk(ProbMeasure.delta(ring, 1))
        row = w.transition_row(1)
        assert row[0] == pytest.approx(1 / 9, rel=1e-14)
        assert row[1] == pytest.approx(3 / 9, rel=1e-14)
        assert row[2] == pytest.approx(5 / 9, rel=1e-14)

    def test_group_dual_translation(self):
        w = CentralWalk(ProbMeasure.delta(Z3, 1))
        assert w.transition_row(0) == {1: 1.0}
        assert w.transition_prob(2, 0) == 1.0

    def test_rows_are_stochastic(self):
        mu_map = {
            "su2": ProbMeasure(SU2Ring(3.5), {1: 0.2, 2: 0.3, 3: 0.5}),
            "so3": ProbMeasure(SO3Ring(5.0), {1: 0.5, 3: 0.5}),
            "s3": ProbMeasure(S3, {1: 0.25, 2: 0.25, 3: 0.5}),
        }
        for mu in mu_map.values():
            w = CentralWalk(mu)
            labels = mu.ring.labels() if mu.ring.is_finite else range(51)
            for x in labels:
                assert math.fsum(w.transition_row(x).values()) == pytest.approx(
                    1.0, abs=1e-12
                )

    def test_detailed_balance_with_reversal(self):
        cases = [
            ProbMeasure(SU2Ring(2.5), {1: 0.5, 2: 0.5}),
            ProbMeasure(SO3Ring(5.0), {1: 0.7, 2: 0.3}),
            ProbMeasure(Z3, {1: 0.7, 2: 0.3}),  # mu != reverse(mu)
            ProbMeasure(S3, {1: 0.6, 4: 0.4}),
        ]
        for mu in cases:
            ring = mu.ring
            w = CentralWalk(mu)
            wbar = CentralWalk(reverse_measure(mu))
            labels = ring.labels() if ring.is_finite else range(31)
            for x in labels:
                dx2 = ring.dim(x) ** 2
                for y, p in w.transition_row(x).items():
                    lhs = dx2 * p
                    rhs = ring.dim(y) ** 2 * wbar.transition_prob(y, x)
                    assert lhs == pytest.approx(rhs, rel=1e-10)


class TestNStep:
    def test_zero_steps(self):
        w = walk_su2(2.5, {1: 1.0})
        assert w.n_step(3, 0) == {3: 1.0}

    def test_two_steps_equal_convolution_square(self):
        # p_n(unit, y) = mu^{*n}(y)
        w = walk_su2(2.5, {1: 1.0})
        out = w.n_step(0, 2)
        assert out[0] == pytest.approx(0.16, abs=1e-14)
        assert out[2] == pytest.approx(0.84, abs=1e-14)

    def test_two_steps_from_one(self):
        # exact: p_2(1,1) = 0.16*1 + 0.84*(1/5.25) = 0.32; p_2(1,3) = 0.68
        w = walk_su2(2.5, {1: 1.0})
        out = w.n_step(1, 2)
        assert set(out) == {1, 3}
        assert out[1] == pytest.approx(0.32, abs=1e-14)
        assert out[3] == pytest.approx(0.68, abs=1e-14)

    def test_parity_on_z2(self):
        w = CentralWalk(ProbMeasure.delta(Z2, 1))
        assert w.n_step(0, 3) == {1: 1.0}

    def test_composition_consistency(self):
        w = walk_su2(3.5, {1: 0.5, 2: 0.5})
        direct = w.n_step(1, 5)
        via = w.n_step(1, 2)
        stepped = {y: p for y, p in via.items()}
        for _ in range(3):
            stepped = w.step_distribution(stepped)
        keys = set(direct) | set(stepped)
        for k in keys:
            assert direct.get(k, 0.0) == pytest.approx(stepped.get(k, 0.0), abs=1e-12)

    def test_n_step_matches_convolution_powers(self):
        ring = SO3Ring(5.0)
        mu = ProbMeasure(ring, {1: 0.5, 2: 0.5})
        w = CentralWalk(mu)
        power = mu
        for n in range(2, 5):
            power = convolve(power, mu)
            dist = w.n_step(0, n)
            keys = set(dist) | set(power.weights)
            for k in keys:
                assert dist.get(k, 0.0) == pytest.approx(power.weight(k), abs=1e-12)

    def test_negative_steps_rejected(self):
        with pytest.raises(InvalidInput):
            walk_su2(2.5, {1: 1.0}).n_step(0, -1)


class TestIsGenerating:
    def test_su2_fundamental_generates(self):
        ring = SU2Ring(2.5)
        out = is_generating(ring, ProbMeasure.delta(ring, 1), horizon=64)
        assert out is GeneratingDecision.GENERATING

    def test_su2_even_letter_proven_not(self):
        ring = SU2Ring(2.5)
        out = is_generating(ring, ProbMeasure.delta(ring, 2), horizon=64)
        assert out is GeneratingDecision.PROVEN_NOT_GENERATING

    def test_su2_small_horizon_is_inconclusive(self):
        ring = SU2Ring(2.5)
        out = is_generating(ring, ProbMeasure.delta(ring, 1), horizon=3)
        assert out is GeneratingDecision.NOT_GENERATING_WITHIN_HORIZON

    def test_group_generator(self):
        out = is_generating(Z3, ProbMeasure.delta(Z3, 1), horizon=16)
        assert out is GeneratingDecision.GENERATING

    def test_subgroup_proven_not(self):
        # the 3-cycles generate A_3 < S_3
        three_cycles = [x for x in range(6) if S3.table[x][S3.table[x][x]] == S3.unit
                        and x != S3.unit]
        mu = ProbMeasure(S3, {three_cycles[0]: 1.0})
        out = is_generating(S3, mu, horizon=16)
        assert out is GeneratingDecision.PROVEN_NOT_GENERATING

    def test_unit_measure_not_generating(self):
        ring = SO3Ring(4.0)
        out = is_generating(ring, ProbMeasure.delta(ring, 0), horizon=8)
        assert out is GeneratingDecision.PROVEN_NOT_GENERATING

    def test_so3_fundamental_generates(self):
        ring = SO3Ring(5.0)
        out = is_generating(ring, ProbMeasure.delta(ring, 1), horizon=64)
        assert out is GeneratingDecision.GENERATING


class TestPeriod:
    def test_su2_delta_one_bipartite(self):
        assert period(walk_su2(2.5, {1: 1.0})) == 2

    def test_mixed_letters_aperiodic(self):
        assert period(walk_su2(2.5, {1: 0.5, 2: 0.5})) == 1

    def test_z2_translation(self):
        assert period(CentralWalk(ProbMeasure.delta(Z2, 1))) == 2

    def test_z3_translation(self):
        assert period(CentralWalk(ProbMeasure.delta(Z3, 1))) == 3

    def test_no_return_reports_zero(self):
        w = walk_su2(2.5, {1: 1.0})
        assert period(w, horizon=1) == 0


class TestTransitionMatrix:
    def test_rows_match_walk(self):
        w = walk_su2(2.5, {1: 0.5, 2: 0.5})
        labels = list(range(20))
        P = transition_matrix(w, labels)
        for x in range(15):
            row = w.transition_row(x)
            for y, p in row.items():
                assert P[x, y] == pytest.approx(p, abs=1e-15)

    def test_boundary_rows_substochastic(self):
        w = walk_su2(2.5, {1: 1.0})
        P = transition_matrix(w, list(range(5)))
        sums = P.sum(axis=1).A1 if hasattr(P.sum(axis=1), "A1") else P.sum(axis=1)
        assert float(sums[4]) < 1.0

    def test_group_dual_reduction(self):
        # p(x, y) = mu(x^{-1} y) exactly
        mu = ProbMeasure(S3, {1: 0.25, 2: 0.25, 4: 0.5})
        w = CentralWalk(mu)
        for x in S3.labels():
            xinv = S3.conjugate(x)
            for y in S3.labels():
                assert w.transition_prob(x, y) == mu.weight(S3.table[xinv][y])


class TestProductWalk:
    def test_product_rows_stochastic(self):
        ring = ProductRing(SU2Ring(2.5), Z3)
        mu = ProbMeasure(ring, {(1, 1): 0.5, (2, 0): 0.5})
        w = CentralWalk(mu)
        for x in [(0, 0), (3, 1), (7, 2)]:
            assert math.fsum(w.transition_row(x).values()) == pytest.approx(
                1.0, abs=1e-12
            )

    def test_product_generating_needs_both(self):
        ring = ProductRing(SU2Ring(2.5), Z3)
        mu = ProbMeasure(ring, {(1, 0): 1.0})  # never moves the Z3 part
        out = is_generating(ring, mu, horizon=40, frontier=6)
        assert out is GeneratingDecision.NOT_GENERATING_WITHIN_HORIZON
        mu2 = ProbMeasure(ring, {(1, 1): 0.5, (1, 2): 0.5})
        out2 = is_generating(ring, mu2, horizon=40, frontier=6)
        assert out2 is GeneratingDecision.GENERATING
