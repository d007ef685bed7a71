"""Figure rendering for the width-experiment reports.

Renders the delimited report data to PNG files next to the CSV output
when plotting is requested on the command line; nothing here is needed
for the computations themselves.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def save_mc_figure(report, path):
    """Mean error and bound per node count, log-log."""
    ns = [row.n for row in report.rows]
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.loglog(ns, [row.mean_error for row in report.rows], "o-", label="mean error")
    ax.loglog(ns, [row.bound for row in report.rows], "s--", label="C / sqrt(n)")
    ax.set_xlabel("nodes")
    ax.set_ylabel("worst-case error")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_tail_figure(checks, path):
    """Achieved error against the singular-tail bound, per n."""
    ns = [c.n for c in checks]
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.semilogy(ns, [c.achieved for c in checks], "o-", label="achieved")
    ax.semilogy(ns, [c.bound_analytic for c in checks], "s--", label="tail bound")
    ax.set_xlabel("n")
    ax.set_ylabel("error")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_kolmogorov_figure(report, path):
    """Worst sampled error vs the uniform-distance right-hand side."""
    fig, ax = plt.subplots(figsize=(4.2, 3.4))
    ax.bar(["worst error", "2 mass * dist"], [report.worst_error, report.worst_rhs])
    ax.set_ylabel("value")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
