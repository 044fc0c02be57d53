import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adenoise import certificates as cert
from adenoise.convolution import build_operator
from adenoise.errors import InvalidArgument
from adenoise.estimators import EstimatorConfig, build_problem
from adenoise.prox import make_setup
from adenoise.scenarios import Scenario
from adenoise.solvers import SaddleProblem, cmp_run


def toy(radius=4.0, lam=1.0):
    ident = lambda x: np.array(x, dtype=float)
    return SaddleProblem(ident, ident, np.array([3.0, 0.0]), 1, make_setup("l1", 0), make_setup("l1", 0), 1.0,
                         lam=lam, radius=radius)


def con_uf(n=32, seed=0):
    _, y = Scenario("ransin", 4, n, 4).draw(seed, 0)
    return build_problem(build_operator(y), EstimatorConfig("con-uf", r_bar=8.0))


def gap(problem, w):
    u, v = problem.split(w)
    return problem.primal_value(u) - problem.dual_value(v)


class TestUpdate:
    def test_single(self):
        s = cert.update(cert.CertificateState(2, 2), [1, 2, 3, 4], [0, 1, 0, 1], 1.0)
        np.testing.assert_array_equal(s.averaged_iterate, [1, 2, 3, 4])
        assert s.weight_total == 1.0 and s.count == 1

    def test_two_equal_weights(self):
        s = cert.CertificateState(1, 1)
        cert.update(s, [1, 2], [0, 0], 1.0)
        cert.update(s, [3, 6], [0, 0], 1.0)
        np.testing.assert_array_equal(s.averaged_iterate, [2, 4])

    def test_100_weighted_updates(self):
        rng = np.random.default_rng(0)
        pts, fld = rng.standard_normal((2, 100, 6))
        pen = rng.random(100)
        s = cert.CertificateState(4, 2)
        for tau in range(100):
            cert.update(s, pts[tau], fld[tau], tau + 1.0, pen[tau])
        lam = np.arange(1, 101) / np.arange(1, 101).sum()
        np.testing.assert_allclose(s.averaged_iterate, lam @ pts, rtol=0, atol=1e-12)
        np.testing.assert_allclose(s.averaged_field_u, (lam @ fld)[:4], atol=1e-12)
        np.testing.assert_allclose(s.averaged_field_v, (lam @ fld)[4:], atol=1e-12)
        inner = sum(lam[t] * (fld[t] @ pts[t] + pen[t]) for t in range(100))
        assert s.averaged_inner == pytest.approx(inner, abs=1e-12)

    def test_errors(self):
        s = cert.CertificateState(1, 1)
        with pytest.raises(InvalidArgument):
            cert.update(s, [1, 2], [0, 0], 0.0)
        with pytest.raises(InvalidArgument):
            cert.update(s, [1, 2, 3], [0, 0, 0], 1.0)
        with pytest.raises(InvalidArgument):
            cert.gap_bound(s, toy())
        with pytest.raises(InvalidArgument):
            cert.merge(s, cert.CertificateState(2, 0))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 30), st.integers(0, 30), st.integers(0, 2**32 - 1))
    def test_batching_associative(self, count, split, seed):
        split = min(split, count)
        rng = np.random.default_rng(seed)
        pts, fld = rng.standard_normal((2, count, 4))
        gam = rng.random(count) + 0.1
        whole = cert.CertificateState(2, 2)
        first, second = cert.CertificateState(2, 2), cert.CertificateState(2, 2)
        for t in range(count):
            cert.update(whole, pts[t], fld[t], gam[t], 0.5)
            cert.update(first if t < split else second, pts[t], fld[t], gam[t], 0.5)
        merged = cert.merge(first, second)
        np.testing.assert_allclose(merged.averaged_iterate, whole.averaged_iterate, atol=1e-12)
        np.testing.assert_allclose(merged.sum_field, whole.sum_field, atol=1e-12)
        assert merged.averaged_inner == pytest.approx(whole.averaged_inner, abs=1e-12)
        assert merged.count == whole.count


class TestGapBound:
    def test_exact_saddle_point(self):
        prob = toy()
        w = np.array([1.0, 0.0, -1.0, 0.0])  # u in [0, 3], v = -1
        s = cert.update(cert.CertificateState(2, 2), w, prob.field(w), 1.0, prob.penalty_u.value(w[:2]))
        b = cert.gap_bound(s, prob)
        assert 0 <= b <= 1e-8

    def test_zero_field(self):
        prob = toy()
        s = cert.CertificateState(2, 2)
        for _ in range(3):
            cert.update(s, np.zeros(4), np.zeros(4), 1.0)
        assert cert.gap_bound(s, prob) == 0.0

    def test_hand_computed(self):
        prob = toy(radius=4.0, lam=1.0)
        w = np.array([0.0, 0.0, 0.0, 0.0])
        s = cert.update(cert.CertificateState(2, 2), w, prob.field(w), 1.0)
        # F = [0; 3]: lmo_u(0) = 0, lmo_v(-3) = 3, inner = 0
        assert cert.gap_bound(s, prob) == pytest.approx(3.0)
        assert cert.gap_bound(s, prob) == pytest.approx(gap(prob, w))

    def test_unbounded_sentinel(self):
        ident = lambda x: np.array(x, dtype=float)
        prob = SaddleProblem(ident, ident, np.array([3.0, 0.0]), 1, make_setup("l1", 0), make_setup("l1", 0), 1.0,
                             lam=0.5)
        w = np.array([0.0, 0.0, 1.0, 0.0])  # A^T v = 1 > lam
        s = cert.update(cert.CertificateState(2, 2), w, prob.field(w), 1.0)
        assert cert.gap_bound(s, prob) == math.inf
        assert cert.dual_lower_bound(s, prob) == -math.inf
        assert cert.relative_accuracy(s, prob) == math.inf

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 20), st.integers(0, 2**32 - 1))
    def test_sound_on_random_feasible_points(self, count, seed):
        prob = con_uf(n=6, seed=seed % 5)
        rng = np.random.default_rng(seed)
        s = cert.CertificateState(prob.dim_u, prob.dim_v)
        for _ in range(count):
            u = rng.standard_normal(prob.dim_u)
            u *= rng.random() * prob.radius / np.abs(u.view(complex)).sum()
            v = rng.standard_normal(prob.dim_v)
            v /= np.abs(v.view(complex)).sum()
            w = np.concatenate([u, v])
            cert.update(s, w, prob.field(w), rng.random() + 0.01)
        assert cert.gap_bound(s, prob) >= gap(prob, s.averaged_iterate) - 1e-10

    def test_con_uf_every_iteration(self):
        prob = con_uf()
        rows = []

        def check(t, state):
            rows.append((cert.gap_bound(state, prob), gap(prob, state.averaged_iterate)))

        cmp_run(prob, max_iter=1000, callback=check)
        for b, g in rows:
            assert b >= g - 1e-10
        assert rows[-1][0] <= 10 * rows[-1][1]


class TestRelativeAccuracy:
    def test_guard(self):
        prob = toy()
        w = np.array([0.0, 0.0, 0.5, 0.0])  # dual value -1.5
        s = cert.update(cert.CertificateState(2, 2), w, prob.field(w), 1.0)
        assert cert.dual_lower_bound(s, prob) == pytest.approx(-1.5)
        assert cert.relative_accuracy(s, prob) == math.inf

    def test_toy_ratio(self):
        prob = toy()
        w = np.array([0.0, 0.0, -0.5, 0.0])
        s = cert.update(cert.CertificateState(2, 2), w, prob.field(w), 1.0)
        # primal(0) = 3, dual(-1/2) = 3/2
        assert cert.dual_lower_bound(s, prob) == pytest.approx(1.5)
        assert cert.relative_accuracy(s, prob) == pytest.approx(1.0)

    def test_bounds_true_relative_error(self):
        from oracles import assemble, residual_problem_oracle

        prob = con_uf()
        _, y = Scenario("ransin", 4, 32, 4).draw(0, 0)
        op = build_operator(y)
        opt, _ = residual_problem_oracle(assemble(op.matvec, op.dim), op.b, p="inf", radius=8 / math.sqrt(33))
        tr = cmp_run(prob, max_iter=500)
        for obj, rel in zip(tr.objective, tr.rel_accuracy):
            assert (obj - opt) / opt <= rel + 1e-7
