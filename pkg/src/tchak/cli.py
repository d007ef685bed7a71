"""Command-line surface.

Every run logs the tool version, the seed, and the tolerances it used,
and writes JSON/CSV artifacts that re-verify deterministically: the
same inputs, seed, and version produce byte-identical files.  Exit code
0 means success, 2 means certified infeasibility (a valid mathematical
answer, accompanied by a certificate artifact), and 1 means an error.
"""

from __future__ import annotations

import csv
import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .cones import discretize_functional
from .dopt import dopt_maximize, extract_rule
from .errors import TchakError
from .frames import (
    FrameFamily,
    frame_operator,
    measure_from_weights,
    scalability_test,
    subsample_frame,
    tune_to_target,
)
from .measures import DiscreteMeasure, moments, uniform_grid_measure
from .mz import mz_rule, mz_verify
from .systems import build_system, load_matrix_csv, load_system
from .tchakaloff import QuadratureRule, tchakaloff_rule, tchakaloff_rule_normalized
from .widths import (
    RKHSSpec,
    gaussian_kernel,
    geometric_tail,
    kolmogorov_bound_rule,
    lipschitz_class_values,
    mc_rule_bound_check,
    tail_bound_rule,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2


def _log(message):
    click.echo(message, err=True)


def _log_run(command, seed=None, **tolerances):
    parts = [f"tchak {__version__}", f"command={command}"]
    if seed is not None:
        parts.append(f"seed={seed}")
    parts += [f"{k}={v}" for k, v in tolerances.items()]
    _log("[" + " ".join(parts) + "]")


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _log(f"wrote {path}")


def _artifact(command, seed=None, **fields):
    out = {"tool": "tchak", "version": __version__, "command": command}
    if seed is not None:
        out["seed"] = seed
    out.update(fields)
    return out


def _load_measure(path):
    path = str(path)
    if path.endswith(".json"):
        with open(path) as fh:
            try:
                obj = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}") from exc
        return DiscreteMeasure.from_json_obj(obj)
    return DiscreteMeasure.from_csv(path)


def _load_family(path):
    path = str(path)
    if path.endswith(".json"):
        return FrameFamily.from_json(path)
    return FrameFamily.from_csv(path)


def _load_sys(path):
    path = str(path)
    if path.endswith(".csv"):
        return load_matrix_csv(path)
    return load_system(path)


def _encode_vector(arr):
    arr = np.asarray(arr)
    if np.iscomplexobj(arr):
        return [[float(v.real), float(v.imag)] for v in arr]
    return [float(v) for v in arr]


@click.group()
def cli():
    """Exact discretization toolkit: quadrature, functionals, p-norm
    rules, frame scaling, designs, and width experiments."""


@cli.command()
@click.option("--system", "system_path", required=True, type=click.Path(exists=True), help="System JSON (or matrix CSV).")
@click.option("--measure", "measure_path", required=True, type=click.Path(exists=True), help="Measure CSV/JSON.")
@click.option("--normalized", is_flag=True, help="Also preserve the total mass (one extra node).")
@click.option("--tol", default=1e-9, show_default=True, help="Moment residual tolerance.")
@click.option("--out", default="rule.json", show_default=True, type=click.Path())
def quadrature(system_path, measure_path, normalized, tol, out):
    """Exact non-negative rule for a system over a discrete measure."""
    _log_run("quadrature", tol=tol, normalized=normalized)
    system = _load_sys(system_path)
    mu = _load_measure(measure_path)
    build = tchakaloff_rule_normalized if normalized else tchakaloff_rule
    rule = build(system, mu, tol)
    target = moments(system, mu)
    _write_json(
        out,
        _artifact(
            "quadrature",
            tol=tol,
            normalized=bool(normalized),
            rule=rule.to_json_obj(),
            effdim=int(rule.node_bound_used - (1 if normalized else 0)),
            target_moments=_encode_vector(target.entries),
        ),
    )
    _log(f"{len(rule)} nodes, residual {rule.residual:.3e}")


@cli.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True), help="JSON {system, points, l_values}.")
@click.option("--tol", default=1e-9, show_default=True)
@click.option("--out", default="functional.json", show_default=True, type=click.Path())
@click.pass_context
def functional(ctx, input_path, tol, out):
    """Positive discretization of a functional on a finite domain."""
    _log_run("functional", tol=tol)
    with open(input_path) as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{input_path}: malformed JSON at line {exc.lineno}, column {exc.colno}") from exc
    system = build_system(payload["system"])
    if "points" in payload:
        points = np.asarray(payload["points"])
    elif system.family_tag == "matrix-backed":
        points = np.arange(system.params["m"])  # stored columns are the domain
    else:
        raise ValueError(f"{input_path}: field 'points' is required for family {system.family_tag!r}")
    raw = np.asarray(payload["l_values"])
    l_values = raw[:, 0] + 1j * raw[:, 1] if raw.ndim == 2 else raw.astype(float)
    result = discretize_functional(system, points, l_values, tol)
    if isinstance(result, QuadratureRule):
        _write_json(out, _artifact("functional", tol=tol, status="feasible", rule=result.to_json_obj()))
        _log(f"feasible: {len(result)} nodes, residual {result.residual:.3e}")
        return
    _write_json(
        out,
        _artifact(
            "functional",
            tol=tol,
            status="infeasible",
            certificate=_encode_vector(result.certificate),
            residual=result.residual,
        ),
    )
    _log(f"infeasible: certificate written, residual {result.residual:.3e}")
    ctx.exit(EXIT_INFEASIBLE)


@cli.command()
@click.option("--p", required=True, type=int, help="Even exponent of the norm.")
@click.option("--system", "system_path", required=True, type=click.Path(exists=True))
@click.option("--measure", "measure_path", required=True, type=click.Path(exists=True))
@click.option("--tol", default=1e-9, show_default=True)
@click.option("--trials", default=1000, show_default=True, help="Verification draws.")
@click.option("--seed", default=0, show_default=True)
@click.option("--out", default="mz_rule.json", show_default=True, type=click.Path())
def mz(p, system_path, measure_path, tol, trials, seed, out):
    """Exact p-norm discretization with a random-draw verification."""
    _log_run("mz", seed=seed, tol=tol, p=p)
    system = _load_sys(system_path)
    mu = _load_measure(measure_path)
    rule = mz_rule(system, mu, p, tol)
    check = mz_verify(rule, system, mu, p, trials=trials, seed=seed)
    _write_json(
        out,
        _artifact(
            "mz",
            seed=seed,
            tol=tol,
            p=p,
            rule=rule.to_json_obj(),
            verification={
                "max_relative_error": check.max_relative_error,
                "trials": check.trials,
                "seed": check.seed,
            },
        ),
    )
    _log(f"{len(rule)} nodes, max relative error {check.max_relative_error:.3e} over {trials} draws")


@cli.group()
def frame():
    """Frame scaling, tuning, and operator-preserving subsampling."""


@frame.command()
@click.option("--family", "family_path", required=True, type=click.Path(exists=True))
@click.option("--tol", default=1e-9, show_default=True)
@click.option("--out", default="scale.json", show_default=True, type=click.Path())
@click.pass_context
def scale(ctx, family_path, tol, out):
    """Weights making the family Parseval, or a certificate that none exist."""
    _log_run("frame scale", tol=tol)
    fam = _load_family(family_path)
    result = scalability_test(fam, tol)
    if result.feasible:
        mu = measure_from_weights(result.weights)
        _write_json(
            out,
            _artifact(
                "frame scale",
                tol=tol,
                status="feasible",
                support=[int(i) for i in mu.points],
                weights=_encode_vector(mu.weights),
                residual=result.residual,
            ),
        )
        _log(f"feasible with {len(mu)} atoms")
        return
    _write_json(
        out,
        _artifact(
            "frame scale",
            tol=tol,
            status="infeasible",
            certificate=_encode_vector(result.certificate),
            residual=result.residual,
        ),
    )
    _log(f"infeasible: certificate written, residual {result.residual:.3e}")
    ctx.exit(EXIT_INFEASIBLE)


@frame.command()
@click.option("--family", "family_path", required=True, type=click.Path(exists=True))
@click.option("--target", "target_path", required=True, type=click.Path(exists=True), help="Target operator CSV/JSON.")
@click.option("--tol", default=1e-9, show_default=True)
@click.option("--out", default="tune.json", show_default=True, type=click.Path())
@click.pass_context
def tune(ctx, family_path, target_path, tol, out):
    """Weights giving the family a prescribed frame operator."""
    _log_run("frame tune", tol=tol)
    fam = _load_family(family_path)
    target = _load_matrix(target_path)
    result = tune_to_target(fam, target, tol)
    if isinstance(result, DiscreteMeasure):
        op = frame_operator(fam, result)
        _write_json(
            out,
            _artifact(
                "frame tune",
                tol=tol,
                status="feasible",
                support=[int(i) for i in result.points],
                weights=_encode_vector(result.weights),
                operator_defect=float(np.linalg.norm(op.matrix - target)),
            ),
        )
        _log(f"feasible with {len(result)} atoms")
        return
    _write_json(
        out,
        _artifact(
            "frame tune",
            tol=tol,
            status="infeasible",
            certificate=_encode_vector(result.certificate),
            residual=result.residual,
        ),
    )
    _log("infeasible: certificate written")
    ctx.exit(EXIT_INFEASIBLE)


@frame.command()
@click.option("--family", "family_path", required=True, type=click.Path(exists=True))
@click.option("--weights", "weights_path", type=click.Path(exists=True), help="Weight per vector (single CSV column); default 1.")
@click.option("--tol", default=1e-12, show_default=True)
@click.option("--out", default="subsample.json", show_default=True, type=click.Path())
def subsample(family_path, weights_path, tol, out):
    """Shrink a weighted family while preserving its frame operator."""
    _log_run("frame subsample", tol=tol)
    fam = _load_family(family_path)
    if weights_path:
        w = np.loadtxt(weights_path, delimiter=",", ndmin=1)
    else:
        w = np.ones(len(fam))
    mu = DiscreteMeasure(np.arange(len(fam)), w)
    before = frame_operator(fam, mu)
    reduced, scales = subsample_frame(fam, mu, tol)
    after = frame_operator(fam, reduced)
    _write_json(
        out,
        _artifact(
            "frame subsample",
            tol=tol,
            support=[int(i) for i in reduced.points],
            weights=_encode_vector(reduced.weights),
            scales=_encode_vector(scales),
            operator_defect=float(np.linalg.norm(after.matrix - before.matrix)),
            eigen_bounds_before=list(before.eigen_bounds),
            eigen_bounds_after=list(after.eigen_bounds),
        ),
    )
    _log(f"{len(mu)} -> {len(reduced)} atoms")


def _load_matrix(path):
    path = str(path)
    if path.endswith(".json"):
        with open(path) as fh:
            try:
                raw = np.asarray(json.load(fh)["matrix"])
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}") from exc
        if raw.ndim == 3:
            return raw[..., 0] + 1j * raw[..., 1]
        return raw.astype(float)
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: non-numeric entry ({exc})") from exc
    return np.asarray(rows)


@cli.command()
@click.option("--family", "family_path", required=True, type=click.Path(exists=True))
@click.option("--epsilon", default=1e-6, show_default=True, help="Leverage-gap termination threshold.")
@click.option("--max-iter", default=100_000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--away-steps", is_flag=True, help="Enable away steps for sparser supports.")
@click.option("--out", default="design.json", show_default=True, type=click.Path())
def dopt(family_path, epsilon, max_iter, seed, away_steps, out):
    """Determinant-maximizing design over the candidate family."""
    _log_run("dopt", seed=seed, epsilon=epsilon, max_iter=max_iter)
    fam = _load_family(family_path)
    state = dopt_maximize(fam, epsilon=epsilon, max_iter=max_iter, seed=seed, away_steps=away_steps)
    payload = _artifact(
        "dopt",
        seed=seed,
        epsilon=epsilon,
        det=state.det,
        gap=state.gap,
        iterations=state.iteration,
        converged=bool(state.converged),
        support=[int(i) for i in state.support],
        alpha=_encode_vector(state.alpha[state.alpha > 0.0]),
    )
    if state.converged and state.log_det >= np.log1p(-epsilon):
        mu = extract_rule(state)
        payload["mu"] = {
            "support": [int(i) for i in mu.points],
            "weights": _encode_vector(mu.weights),
        }
    _write_json(out, payload)
    _log(f"det {state.det:.9f}, gap {state.gap:.2e}, {state.iteration} iterations")


@cli.group()
def widths():
    """Worst-case integration error experiments (CSV plot data)."""


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    _log(f"wrote {path}")


@widths.command()
@click.option("--grid", default=2000, show_default=True, help="Base grid size on [0, 1].")
@click.option("--bandwidth", default=0.25, show_default=True)
@click.option("--n-values", default="4,16,64,256", show_default=True)
@click.option("--trials", default=200, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--importance", is_flag=True, help="Kernel-diagonal importance sampling (report only).")
@click.option("--out", default="mc_widths.csv", show_default=True, type=click.Path())
@click.option("--plot", is_flag=True, help="Also render a PNG figure next to the CSV.")
def mc(grid, bandwidth, n_values, trials, seed, importance, out, plot):
    """Mean error of random equal-weight rules vs the trace bound."""
    _log_run("widths mc", seed=seed, trials=trials, bandwidth=bandwidth)
    base = uniform_grid_measure(0.0, 1.0, grid, mass=1.0, midpoint=True)
    spec = RKHSSpec(kernel=gaussian_kernel(bandwidth), base_measure=base)
    ns = [int(v) for v in n_values.split(",")]
    report = mc_rule_bound_check(spec, ns, trials=trials, seed=seed, importance=importance)
    _write_csv(
        out,
        ["n", "mean_error", "bound", "passed"],
        [(r.n, r.mean_error, r.bound, int(r.passed)) for r in report.rows],
    )
    if plot:
        from .report import save_mc_figure

        save_mc_figure(report, str(Path(out).with_suffix(".png")))
    _log(f"constant C = {report.constant:.6f}; " + ("all bounds hold" if report.passed else "BOUND VIOLATED"))
    if not report.passed:
        raise click.ClickException("mean error exceeded the bound")


@widths.command()
@click.option("--grid", default=512, show_default=True)
@click.option("--sigma-base", default=2.0, show_default=True, help="Singular numbers sigma_j = base^-j.")
@click.option("--n-range", default="2:10", show_default=True)
@click.option("--tail-length", default=40, show_default=True)
@click.option("--tol", default=1e-3, show_default=True, help="Allowed neglected tail fraction.")
@click.option("--out", default="tail_widths.csv", show_default=True, type=click.Path())
@click.option("--plot", is_flag=True)
def tail(grid, sigma_base, n_range, tail_length, tol, out, plot):
    """Constructed rules vs the singular-value tail bound."""
    _log_run("widths tail", tol=tol, sigma_base=sigma_base)
    lo, hi = (int(v) for v in n_range.split(":"))
    count = hi + tail_length
    base = DiscreteMeasure(np.arange(grid) / grid, np.full(grid, 1.0 / grid))
    eta = build_system({"family": "trigreal", "n": count})
    sigma = sigma_base ** -(np.arange(1, count + 1, dtype=float))
    spec = RKHSSpec(kernel=None, base_measure=base, sigma=sigma, eta=eta, tail_sum=geometric_tail(sigma_base))
    checks = []
    for n in range(lo, hi + 1):
        _, check = tail_bound_rule(spec, n, tail_len=tail_length, tol=tol)
        checks.append(check)
    _write_csv(
        out,
        ["n", "nodes", "achieved", "bound_analytic", "bound_truncated", "passed"],
        [(c.n, c.nodes, c.achieved, c.bound_analytic, c.bound_truncated, int(c.passed)) for c in checks],
    )
    if plot:
        from .report import save_tail_figure

        save_tail_figure(checks, str(Path(out).with_suffix(".png")))
    if not all(c.passed for c in checks):
        raise click.ClickException("achieved error exceeded the tail bound")
    _log("all tail bounds hold")


@widths.command()
@click.option("--grid", default=120, show_default=True)
@click.option("--degree", default=4, show_default=True, help="Polynomial span dimension.")
@click.option("--samples", default=25, show_default=True, help="Class members sampled.")
@click.option("--seed", default=0, show_default=True)
@click.option("--out", default="kolmogorov.csv", show_default=True, type=click.Path())
@click.option("--plot", is_flag=True)
def kolmogorov(grid, degree, samples, seed, out, plot):
    """Lipschitz class vs polynomial span: error against the sup-distance."""
    _log_run("widths kolmogorov", seed=seed)
    mu = uniform_grid_measure(0.0, 1.0, grid, mass=1.0)
    system = build_system({"family": "monomial", "n": degree}) if degree > 0 else None
    class_values = lipschitz_class_values(mu.points, count=samples, seed=seed)
    report = kolmogorov_bound_rule(system, class_values, mu)
    _write_csv(
        out,
        ["nodes", "worst_error", "worst_rhs", "passed"],
        [(report.nodes, report.worst_error, report.worst_rhs, int(report.passed))],
    )
    if plot:
        from .report import save_kolmogorov_figure

        save_kolmogorov_figure(report, str(Path(out).with_suffix(".png")))
    if not report.passed:
        raise click.ClickException("a sampled error exceeded the distance bound")
    _log("bound holds on every sampled class member")


@cli.command()
@click.option("--rule", "rule_path", required=True, type=click.Path(exists=True), help="Rule artifact JSON.")
@click.option("--system", "system_path", required=True, type=click.Path(exists=True))
@click.option("--measure", "measure_path", required=True, type=click.Path(exists=True))
@click.option("--tol", default=1e-12, show_default=True, help="Allowed residual drift.")
def verify(rule_path, system_path, measure_path, tol):
    """Recompute a rule's residual and compare with the stored value."""
    _log_run("verify", tol=tol)
    with open(rule_path) as fh:
        try:
            artifact = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{rule_path}: malformed JSON at line {exc.lineno}, column {exc.colno}") from exc
    rule_obj = artifact["rule"] if "rule" in artifact else artifact
    rule = QuadratureRule.from_json_obj(rule_obj)
    system = _load_sys(system_path)
    mu = _load_measure(measure_path)
    target = moments(system, mu)
    recomputed = rule.recomputed_residual(system, target)
    drift = abs(recomputed - rule.residual)
    allowed = tol * (1.0 + rule.target_norm)
    _log(f"stored residual {rule.residual:.17g}, recomputed {recomputed:.17g}, drift {drift:.3e}")
    if drift > allowed:
        raise click.ClickException(f"residual drift {drift:.3e} exceeds {allowed:.3e}")
    _log("verified")


def main(argv=None):
    """Entry point with the exit-code contract described in the module docstring."""
    threads = os.environ.get("TCHAK_THREADS")
    if threads:
        try:
            import threadpoolctl

            threadpoolctl.threadpool_limits(int(threads))
        except (ImportError, ValueError):
            _log(f"TCHAK_THREADS={threads!r} ignored (threadpoolctl unavailable or bad value)")
    try:
        code = cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.ClickException as exc:
        exc.show()
        sys.exit(EXIT_ERROR)
    except (TchakError, ValueError, OSError) as exc:
        _log(f"error: {exc}")
        sys.exit(EXIT_ERROR)
    sys.exit(code if isinstance(code, int) else EXIT_OK)


if __name__ == "__main__":
    main()
