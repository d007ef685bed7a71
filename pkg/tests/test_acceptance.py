"""Acceptance suite: one test per criterion, at the stated tolerances.

Each test prints a single pass/fail line (visible with ``pytest -s`` or
in captured output).  Tolerances are pinned here, not configurable.
"""

import functools
import json
import subprocess
import sys
import time
from math import comb, sqrt

import numpy as np
import pytest

from tchak.cones import cone_membership
from tchak.dopt import dopt_maximize, extract_rule
from tchak.errors import NotConverged
from tchak.frames import (
    FrameFamily,
    frame_operator,
    gram_dimension,
    scalability_test,
    subsample_frame,
)
from tchak.measures import DiscreteMeasure, moments, uniform_grid_measure
from tchak.mz import mz_rule, mz_verify
from tchak.systems import build_system, effective_real_dimension
from tchak.tchakaloff import (
    QuadratureRule,
    minimal_rule_bruteforce,
    rule_moments,
    tchakaloff_rule,
    tchakaloff_rule_normalized,
)
from tchak.widths import RKHSSpec, gaussian_kernel, geometric_tail, mc_rule_bound_check, tail_bound_rule

from .conftest import random_measure, random_system


def criterion(label):
    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"[acceptance] {label}: FAIL")
                raise
            print(f"[acceptance] {label}: PASS")

        return wrapper

    return deco


def _instances(count, seed, n_max=8, m_max=500):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n = int(rng.integers(1, n_max + 1))
        m = int(rng.integers(n + 1, m_max + 1))
        complex_field = bool(rng.integers(0, 2))
        system = random_system(rng, n, complex_field=complex_field)
        lo, hi = (0.0, 2 * np.pi) if complex_field else (-1.0, 1.0)
        yield system, random_measure(rng, m, lo, hi)


@criterion("1 Tchakaloff exactness on 500 random instances")
def test_criterion_1_tchakaloff_exactness():
    elapsed = 0.0
    for system, mu in _instances(500, seed=101):
        t0 = time.monotonic()
        rule = tchakaloff_rule(system, mu)
        elapsed += time.monotonic() - t0
        effdim = effective_real_dimension(system, mu.points)
        assert len(rule) <= effdim
        assert len(rule) == 0 or rule.weights.min() >= 0.0
        target = moments(system, mu).entries
        got = rule_moments(system, rule).entries
        rel = np.linalg.norm(got - target) / (1.0 + np.linalg.norm(target))
        assert rel <= 1e-9
    assert elapsed < 60.0, f"rule construction took {elapsed:.1f}s"


@criterion("2 mass-preserving variant on the same instances")
def test_criterion_2_mass_preserving():
    for system, mu in _instances(500, seed=101):
        rule = tchakaloff_rule_normalized(system, mu)
        effdim = effective_real_dimension(system, mu.points)
        assert len(rule) <= effdim + 1
        mass = mu.total_mass
        assert abs(rule.weights.sum() - mass) <= 1e-12 * mass


@criterion("3 minimal-node piecewise example")
def test_criterion_3_minimal_node_counts():
    for m, n in [(1, 2), (2, 3), (3, 4)]:
        system = build_system({"family": "piecewise", "n": n, "params": {"m": m}})
        grid = uniform_grid_measure(0.0, float(n), 10 * n, mass=float(n), midpoint=True)
        assert len(grid) <= 40
        found = minimal_rule_bruteforce(system, grid, max_support=m)
        assert found is not None and len(found) == m
        assert found.weights.min() >= 0.0
        smaller = minimal_rule_bruteforce(system, grid, max_support=m - 1)
        assert smaller is None


@criterion("4 positive-functional counterexample certificates")
def test_criterion_4_farkas_certificates():
    for size in (10, 100, 1000, 10_000):
        x = np.geomspace(1.0, 1e3, size)
        mat = np.vstack([1.0 / x, np.ones(size)])
        b = np.array([1.0, 0.0])
        res = cone_membership(mat, b)
        assert not res.feasible
        c = res.certificate
        assert np.linalg.norm(c) == pytest.approx(1.0, abs=1e-12)
        assert (c @ mat).max() <= 1e-9
        assert c @ b >= 0.5


@criterion("5 p-norm equality bounds, verification, negative control")
def test_criterion_5_mz():
    rng = np.random.default_rng(55)
    # p = 2, complex systems up to n = 5
    for n in range(1, 6):
        system = random_system(rng, n, complex_field=True)
        mu = random_measure(rng, 160, 0.0, 2 * np.pi)
        rule = mz_rule(system, mu, p=2)
        assert len(rule) <= n * n
        check = mz_verify(rule, system, mu, p=2, trials=1000, seed=n)
        assert check.max_relative_error <= 1e-8
    # p = 4, real systems up to n = 4
    for n in range(1, 5):
        system = random_system(rng, n)
        mu = random_measure(rng, 200)
        rule = mz_rule(system, mu, p=4)
        assert len(rule) <= comb(n + 3, 4)
        check = mz_verify(rule, system, mu, p=4, trials=1000, seed=10 + n)
        assert check.max_relative_error <= 1e-8
    # negative control: one corrupted weight must be detected
    system = build_system({"family": "trigreal", "n": 4})
    mu = uniform_grid_measure(0.0, 1.0, 128, mass=1.0)
    rule = mz_rule(system, mu, p=2)
    bad = rule.weights.copy()
    bad[int(np.argmax(bad))] *= 1.0 + 1e-2
    corrupted = QuadratureRule(
        node_ids=rule.node_ids,
        nodes=rule.nodes,
        weights=bad,
        weight_class=rule.weight_class,
        residual=rule.residual,
        target_norm=rule.target_norm,
        node_bound_used=rule.node_bound_used,
    )
    control = mz_verify(corrupted, system, mu, p=2, trials=1000, seed=77)
    assert control.max_relative_error > 1e-3


@criterion("6 frame suite: fixtures, subsampling, truncation")
def test_criterion_6_frames():
    # hand-oracle fixtures
    assert scalability_test(FrameFamily.from_array(np.eye(2))).feasible
    assert not scalability_test(FrameFamily.from_array(np.array([[1.0, 1.0], [0.0, 1.0]]))).feasible
    angles = np.pi / 2 + np.array([0.0, 2 * np.pi / 3, 4 * np.pi / 3])
    mb = FrameFamily.from_array(np.vstack([np.cos(angles), np.sin(angles)]))
    res = scalability_test(mb)
    assert res.feasible
    np.testing.assert_allclose(res.weights[res.weights > 0], 2.0 / 3.0, atol=1e-9)

    # operator preservation on 100 random weighted families
    rng = np.random.default_rng(66)
    for _ in range(100):
        n = int(rng.integers(2, 5))
        m = int(rng.integers(4 * n, 120))
        complex_field = bool(rng.integers(0, 2))
        vecs = rng.standard_normal((n, m))
        if complex_field:
            vecs = vecs + 1j * rng.standard_normal((n, m))
        fam = FrameFamily.from_array(vecs)
        mu = DiscreteMeasure(np.arange(m), rng.random(m))
        before = frame_operator(fam, mu)
        reduced, _ = subsample_frame(fam, mu)
        assert len(reduced) <= gram_dimension(n, fam.field)
        after = frame_operator(fam, reduced)
        scale = 1.0 + np.linalg.norm(before.matrix)
        assert np.linalg.norm(after.matrix - before.matrix) <= 1e-10 * scale

    # unweighted truncation drops the lower bound to the kept mass, exactly
    lam = np.full(4, 0.5)
    vecs = np.zeros((2, 5))
    vecs[0, 0] = 1.0
    vecs[1, 1:] = lam
    fam = FrameFamily.from_array(vecs)
    trunc = DiscreteMeasure(np.array([0, 1, 2]), np.ones(3))
    kept_mass = float(np.sum(lam[:2] ** 2))
    assert frame_operator(fam, trunc).eigen_bounds[0] == kept_mass


@criterion("7 design-route equivalence with scalability")
def test_criterion_7_dopt_equivalence():
    rng = np.random.default_rng(77)
    n_scalable = n_nonscalable = 0
    while n_scalable + n_nonscalable < 100:
        n = int(rng.integers(2, 6))
        m = int(rng.integers(20 * n, 301))
        make_scalable = (n_scalable <= n_nonscalable)
        vecs = rng.standard_normal((n, m))
        if rng.integers(0, 2):
            vecs = vecs + 1j * rng.standard_normal((n, m))
        if make_scalable:
            s = (vecs / m) @ vecs.conj().T
            eig, basis = np.linalg.eigh(s)
            vecs = (basis * eig**-0.5) @ basis.conj().T @ vecs
        else:
            vecs = vecs * 0.15
            vecs[0] += 1.0
        fam = FrameFamily.from_array(vecs)

        feasibility = scalability_test(fam)
        if not feasibility.feasible:
            # keep only instances whose infeasibility margin certifies
            # that no design can reach determinant 1 - 1e-6
            rho = feasibility.residual
            if np.exp(-(rho**2) / (2.0 * n * n)) >= 1.0 - 1e-5:
                continue
            n_nonscalable += 1
        else:
            n_scalable += 1
        epsilon = 4e-11 * n
        state = dopt_maximize(fam, epsilon=epsilon, max_iter=2500 if not feasibility.feasible else 50_000)

        # per-iteration invariants
        hist = np.asarray(state.history)
        assert np.all(np.exp(hist[:, 0]) <= 1.0 + 1e-9)
        assert np.all(hist[:, 1] <= n + 1e-9)
        assert np.all(np.diff(hist[:, 0]) >= -1e-12)

        if feasibility.feasible:
            assert state.det >= 1.0 - 1e-6
            mu = extract_rule(state)
            op = frame_operator(fam, mu)
            assert np.linalg.norm(op.matrix - np.eye(n)) <= 1e-5 * sqrt(n)
        else:
            # the margin bound holds at any iteration count, and the
            # observed determinant agrees
            rho = feasibility.residual
            assert np.exp(-(rho**2) / (2.0 * n * n)) < 1.0 - 1e-6
            assert state.det < 1.0 - 1e-6
            with pytest.raises(NotConverged):
                extract_rule(state)
    assert n_scalable + n_nonscalable == 100
    assert min(n_scalable, n_nonscalable) >= 45


@criterion("8 width bounds: Monte-Carlo mean and singular tail")
def test_criterion_8_width_bounds():
    t0 = time.monotonic()
    base = uniform_grid_measure(0.0, 1.0, 2000, mass=1.0, midpoint=True)
    spec = RKHSSpec(kernel=gaussian_kernel(0.25), base_measure=base)
    report = mc_rule_bound_check(spec, [4, 16, 64, 256], trials=200, seed=8)
    for row in report.rows:
        assert row.mean_error <= row.bound * (1.0 + report.slack)
    elapsed = time.monotonic() - t0
    assert elapsed <= 300.0, f"Monte-Carlo check took {elapsed:.0f}s"

    grid = 1024
    count = 10 + 40
    tail_base = DiscreteMeasure(np.arange(grid) / grid, np.full(grid, 1.0 / grid))
    eta = build_system({"family": "trigreal", "n": count})
    sigma = 2.0 ** -(np.arange(1, count + 1, dtype=float))
    tail_spec = RKHSSpec(
        kernel=None, base_measure=tail_base, sigma=sigma, eta=eta, tail_sum=geometric_tail(2.0)
    )
    for n in range(2, 11):
        rule, check = tail_bound_rule(tail_spec, n, tail_len=40)
        assert len(rule) <= n + 1
        assert check.truncation_ok
        assert check.achieved <= 2.0 * sqrt(tail_base.total_mass) * sqrt(geometric_tail(2.0)(n))


@criterion("9 CLI determinism and round-trip verification")
def test_criterion_9_cli_roundtrip(tmp_path):
    def run(args):
        res = subprocess.run(
            [sys.executable, "-m", "tchak.cli", *args],
            cwd=tmp_path,
            capture_output=True,
            text=True,
        )
        return res

    (tmp_path / "sys.json").write_text(json.dumps({"family": "legendre", "n": 4, "params": {}}))
    uniform_grid_measure(-1.0, 1.0, 501, midpoint=True).to_csv(tmp_path / "grid.csv")
    rng = np.random.default_rng(9)
    v = rng.standard_normal((3, 40))
    s = (v / 40) @ v.T
    eig, basis = np.linalg.eigh(s)
    v = (basis * eig**-0.5) @ basis.T @ v
    (tmp_path / "fam.csv").write_text(
        "\n".join(",".join(repr(float(x)) for x in col) for col in v.T)
    )

    artifacts = {
        "rule.json": ["quadrature", "--system", "sys.json", "--measure", "grid.csv", "--out", "rule.json"],
        "norm.json": ["quadrature", "--system", "sys.json", "--measure", "grid.csv", "--normalized", "--out", "norm.json"],
        "mz.json": ["mz", "--p", "2", "--system", "sys.json", "--measure", "grid.csv", "--seed", "3", "--out", "mz.json"],
        "scale.json": ["frame", "scale", "--family", "fam.csv", "--out", "scale.json"],
        "design.json": ["dopt", "--family", "fam.csv", "--epsilon", "1e-8", "--seed", "5", "--out", "design.json"],
        "tail.csv": ["widths", "tail", "--grid", "256", "--n-range", "2:4", "--tail-length", "12", "--out", "tail.csv"],
    }
    first = {}
    for name, args in artifacts.items():
        res = run(args)
        assert res.returncode == 0, f"{name}: {res.stderr}"
        first[name] = (tmp_path / name).read_bytes()
    for name, args in artifacts.items():
        res = run(args)
        assert res.returncode == 0, f"{name}: {res.stderr}"
        assert (tmp_path / name).read_bytes() == first[name], f"{name} not byte-identical"

    res = run(["verify", "--rule", "rule.json", "--system", "sys.json", "--measure", "grid.csv"])
    assert res.returncode == 0, res.stderr
    assert "verified" in res.stderr
