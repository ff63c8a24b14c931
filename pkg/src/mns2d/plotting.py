"""Figure rendering for the report paths.

Every experiment writes a PNG next to its delimited output.  Figures are
rendered headless (Agg) and saved without the writer-software metadata chunk
so that reruns produce byte-identical files for the manifest hashes.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_SAVE_KW = dict(dpi=150, metadata={"Software": None})


def _new_axes(n_rows=1, n_cols=1, width=7.0, height=3.0):
    fig, axes = plt.subplots(n_rows, n_cols, figsize=(width, height * n_rows))
    return fig, axes


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def energy_figure(ledger, path):
    fig, (ax0, ax1) = _new_axes(2)
    ax0.plot(ledger.times, ledger.u2, label="$\\|u\\|^2$")
    ax0.plot(ledger.times, ledger.e2, label="$\\|E\\|^2$")
    ax0.plot(ledger.times, ledger.b2, label="$\\|B\\|^2$")
    ax0.plot(ledger.times, ledger.u2 + ledger.e2 + ledger.b2 + ledger.cum_diss,
             "k--", label="energy + dissipation")
    ax0.set_xlabel("t")
    ax0.legend(fontsize=8)
    ax0.set_title("energy balance")
    ax1.semilogy(ledger.times[1:], np.maximum(ledger.defect13[1:], 1e-18), label="balance defect")
    ax1.semilogy(ledger.times[1:], np.maximum(ledger.orth12[1:], 1e-18), label="orthogonality defect")
    ax1.set_xlabel("t")
    ax1.legend(fontsize=8)
    _finish(fig, path)


def borderline_figure(report, path):
    fig, ax = _new_axes(height=4.0)
    for name in ("eb_cl_l2log", "int_j_l2log", "int_u_linf", "int_uhat_l1",
                 "morrey_sup", "u_cl_b022"):
        ax.plot(report.times, getattr(report, name), label=name)
    ax.set_xlabel("t")
    ax.set_title("globally bounded quantities")
    ax.legend(fontsize=8)
    _finish(fig, path)


def heat_figure(report, path):
    fig, ax = _new_axes(height=4.0)
    for rep, marker in ((report.morrey_sum, "o"), (report.morrey_sup, "s")):
        js = sorted(rep.per_scale)
        ax.semilogy(js, [max(rep.per_scale[j], 1e-300) for j in js], marker + "-",
                    label=f"aggregation={rep.aggregation}")
    ax.set_xlabel("scale j")
    ax.set_ylabel("$2^{2j} \\int$ localized mass")
    ax.set_title(f"heat run, energy defect {report.energy_defect:.2e}")
    ax.legend(fontsize=8)
    _finish(fig, path)


def trilinear_figure(report, path):
    fig, ax = _new_axes(height=4.0)
    ax.plot(report.ratios, "o")
    ax.axhline(report.max_ratio, color="r", linestyle="--",
               label=f"max {report.max_ratio:.3f}")
    ax.set_xlabel("trial")
    ax.set_ylabel("|LHS| / RHS")
    ax.legend(fontsize=8)
    _finish(fig, path)


def perturb_figure(report, path):
    fig, ax = _new_axes(height=4.0)
    if report.delta > 0:
        envelope = report.separation[0] * np.exp(report.fitted_rate * report.rate_integral)
        ax.semilogy(report.times, report.separation, "o-", label="separation D(t)")
        ax.semilogy(report.times, envelope, "--", label="fitted envelope")
        ax.semilogy(report.times, 1.5 * envelope, ":", label="1.5 x envelope")
    ax.set_xlabel("t")
    ax.set_title(f"twin-run separation, delta={report.delta:g}")
    ax.legend(fontsize=8)
    _finish(fig, path)


def galerkin_figure(report, path):
    fig, ax = _new_axes(height=4.0)
    pairs = [f"{a}→{b}" for a, b in zip(report.levels, report.levels[1:])]
    ax.semilogy(pairs, [max(v, 1e-300) for v in report.u_diffs], "o-", label="velocity")
    ax.semilogy(pairs, [max(v, 1e-300) for v in report.eb_diffs], "s-", label="(E, B)")
    ax.set_xlabel("level pair")
    ax.set_ylabel("trajectory difference")
    ax.legend(fontsize=8)
    _finish(fig, path)


def a2_figure(rows, path):
    """rows: list of (label, ratio)."""
    fig, ax = _new_axes(height=4.0)
    ax.plot([r for _, r in rows], "o")
    ax.set_xlabel("trial")
    ax.set_ylabel("lhs / rhs")
    ax.set_title("heat-kernel characterization ratios")
    _finish(fig, path)
