import numpy as np
import pytest

from tchak.measures import DiscreteMeasure, moments, uniform_grid_measure
from tchak.systems import build_system, effective_real_dimension
from tchak.tchakaloff import (
    QuadratureRule,
    minimal_rule_bruteforce,
    rule_moments,
    tchakaloff_rule,
    tchakaloff_rule_normalized,
)

from .conftest import random_measure, random_system


def relative_residual(system, mu, rule):
    target = moments(system, mu).entries
    got = rule_moments(system, rule).entries
    return np.linalg.norm(got - target) / (1.0 + np.linalg.norm(target))


class TestTchakaloffRule:
    def test_cubics_on_fine_grid(self):
        system = build_system({"family": "monomial", "n": 4})
        mu = uniform_grid_measure(-1.0, 1.0, 4001, midpoint=True)
        rule = tchakaloff_rule(system, mu)
        assert len(rule) <= 4
        assert rule.weights.min() >= 0.0
        assert relative_residual(system, mu, rule) <= 1e-10
        # the grid-moment oracle: recompute target independently
        target = moments(system, mu).entries
        np.testing.assert_allclose(rule_moments(system, rule).entries, target, atol=1e-12)

    def test_small_support_returned_unchanged(self, rng):
        system = build_system({"family": "monomial", "n": 4})
        mu = DiscreteMeasure(np.array([-0.5, 0.1, 0.7]), np.array([0.2, 0.3, 0.5]))
        rule = tchakaloff_rule(system, mu)
        np.testing.assert_array_equal(rule.node_ids, [0, 1, 2])
        np.testing.assert_array_equal(rule.weights, mu.weights)

    def test_complex_system_realified(self, rng):
        system = random_system(rng, 3, complex_field=True)
        mu = random_measure(rng, 120, 0.0, 2 * np.pi)
        rule = tchakaloff_rule(system, mu)
        effdim = effective_real_dimension(system, mu.points)
        assert len(rule) <= effdim
        assert relative_residual(system, mu, rule) <= 1e-9

    def test_rule_is_fixed_point(self, rng):
        system = random_system(rng, 5)
        mu = random_measure(rng, 200)
        rule = tchakaloff_rule(system, mu)
        again = tchakaloff_rule(system, rule.as_measure())
        np.testing.assert_allclose(
            rule_moments(system, again).entries, rule_moments(system, rule).entries, rtol=1e-10, atol=1e-12
        )

    def test_randomized_bounds_and_residuals(self):
        rng = np.random.default_rng(2024)
        for _ in range(60):
            n = int(rng.integers(1, 9))
            m = int(rng.integers(n + 1, 400))
            complex_field = bool(rng.integers(0, 2))
            system = random_system(rng, n, complex_field=complex_field)
            lo, hi = (0.0, 2 * np.pi) if complex_field else (-1.0, 1.0)
            mu = random_measure(rng, m, lo, hi)
            rule = tchakaloff_rule(system, mu)
            assert len(rule) <= effective_real_dimension(system, mu.points)
            assert rule.weights.min() >= 0.0
            assert relative_residual(system, mu, rule) <= 1e-9


class TestNormalizedRule:
    def test_probability_mass_preserved(self, rng):
        system = build_system({"family": "legendre", "n": 4})
        mu = uniform_grid_measure(-1.0, 1.0, 801, mass=1.0)
        rule = tchakaloff_rule_normalized(system, mu)
        assert len(rule) <= 5
        assert abs(rule.weights.sum() - 1.0) <= 1e-12

    def test_constant_only_system(self):
        system = build_system({"family": "monomial", "n": 1})
        mu = uniform_grid_measure(0.0, 1.0, 100, mass=3.5)
        rule = tchakaloff_rule_normalized(system, mu)
        assert len(rule) == 1
        assert rule.weights.sum() == pytest.approx(3.5, rel=1e-13)

    def test_cubics_with_mass_constraint(self):
        system = build_system({"family": "monomial", "n": 4})
        mu = uniform_grid_measure(-1.0, 1.0, 2001, midpoint=True)
        rule = tchakaloff_rule_normalized(system, mu)
        assert len(rule) <= 5
        assert abs(rule.weights.sum() - mu.total_mass) <= 1e-12 * mu.total_mass


class TestMinimalNodeExample:
    @pytest.mark.parametrize("m,n", [(1, 2), (2, 3), (3, 4)])
    def test_minimal_count_is_m(self, m, n):
        system = build_system({"family": "piecewise", "n": n, "params": {"m": m}})
        # grid with cell midpoints inside every unit interval of (0, n)
        mu = uniform_grid_measure(0.0, float(n), 10 * n, mass=float(n), midpoint=True)
        best = minimal_rule_bruteforce(system, mu, max_support=m)
        assert best is not None and len(best) == m
        none_smaller = minimal_rule_bruteforce(system, mu, max_support=m - 1)
        assert none_smaller is None


class TestRuleIO:
    def test_json_roundtrip(self, tmp_path, rng):
        system = random_system(rng, 3, complex_field=True)
        mu = random_measure(rng, 50, 0.0, 2 * np.pi)
        rule = tchakaloff_rule(system, mu)
        path = tmp_path / "rule.json"
        rule.save(path)
        back = QuadratureRule.load(path)
        np.testing.assert_array_equal(back.nodes, rule.nodes)
        np.testing.assert_array_equal(back.weights, rule.weights)
        assert back.residual == rule.residual

    def test_roundtrip_with_planar_points(self, tmp_path, rng):
        # two-coordinate real nodes must not be mistaken for complex pairs
        pts = rng.standard_normal((30, 2))
        entries = np.vstack([np.ones(30), pts[:, 0], pts[:, 1]])
        from tchak.systems import matrix_system

        system = matrix_system(entries)
        mu = DiscreteMeasure(np.arange(30), rng.random(30))
        rule = tchakaloff_rule(system, mu)
        planar = QuadratureRule(
            node_ids=rule.node_ids,
            nodes=pts[rule.node_ids],
            weights=rule.weights,
            weight_class=rule.weight_class,
            residual=rule.residual,
            target_norm=rule.target_norm,
            node_bound_used=rule.node_bound_used,
        )
        path = tmp_path / "planar.json"
        planar.save(path)
        back = QuadratureRule.load(path)
        assert back.nodes.shape == (len(rule), 2)
        assert not np.iscomplexobj(back.nodes)
        np.testing.assert_array_equal(back.nodes, planar.nodes)

    def test_stored_residual_recomputes(self, rng):
        system = random_system(rng, 4)
        mu = random_measure(rng, 150)
        rule = tchakaloff_rule(system, mu)
        recomputed = rule.recomputed_residual(system, moments(system, mu))
        assert abs(recomputed - rule.residual) <= 1e-12 * (1.0 + rule.target_norm)
