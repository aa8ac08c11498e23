"""Figure rendering for the report path.

Each experiment report gets a small set of diagnostic figures written next
to its delimited output (``<stem>_<name>.png``).  Rendering is deterministic
(Agg backend, fixed layout) and driven entirely by the report dict, so the
figures can be regenerated from any stored report.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["render_report"]

_DPI = 130


def _save(fig, path: Path) -> Path:
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)
    return path


def _zscore_figure(report: dict, base: Path) -> Path:
    z = np.asarray(report["z_scores"], dtype=float)
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    ax.bar(np.arange(1, z.size + 1), z, color="#33567d")
    ax.axhline(0.0, color="black", lw=0.8)
    for bound in (-3.0, 3.0):
        ax.axhline(bound, color="#aa3333", lw=0.8, ls="--")
    ax.set_xlabel("component")
    ax.set_ylabel("mean z-score")
    ax.set_title("standardised estimator means")
    return _save(fig, base.with_name(base.stem + "_zscores.png"))


def _covariance_figure(report: dict, base: Path) -> Path:
    emp = np.asarray(report["covariance_empirical"], dtype=float)
    tgt = np.asarray(report["covariance_target"], dtype=float)
    vmax = float(np.abs(np.concatenate([emp.ravel(), tgt.ravel()])).max())
    fig, axes = plt.subplots(1, 2, figsize=(7.4, 3.2))
    for ax, mat, label in ((axes[0], emp, "empirical"), (axes[1], tgt, "target")):
        im = ax.imshow(mat, cmap="RdBu_r", vmin=-vmax, vmax=vmax)
        ax.set_title(label)
        ax.set_xticks(range(mat.shape[0]))
        ax.set_yticks(range(mat.shape[0]))
    fig.colorbar(im, ax=axes, shrink=0.85)
    fig.suptitle(f"rel. Frobenius error {report['rel_frobenius_error']:.4f}")
    return _save(fig, base.with_name(base.stem + "_covariance.png"))


def _estimate_spread_figure(report: dict, base: Path) -> Path:
    est = np.asarray(report["estimates"], dtype=float)
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    ax.boxplot([est[:, i] for i in range(est.shape[1])], showfliers=False)
    truth = report.get("diagnostics", {}).get("truth") or report.get("diagnostics", {}).get(
        "psi_true"
    )
    if truth is not None:
        ax.plot(
            np.arange(1, est.shape[1] + 1), truth, "r_", markersize=14, label="target"
        )
        ax.legend(loc="best", fontsize=8)
    ax.set_xlabel("component")
    ax.set_ylabel("estimate")
    ax.set_title(f"replication spread (R={est.shape[0]})")
    return _save(fig, base.with_name(base.stem + "_spread.png"))


def _lan_figure(report: dict, base: Path) -> Path:
    fig, ax = plt.subplots(figsize=(4.6, 3.2))
    labels = ["mean", "variance"]
    emp = [report["empirical_mean"], report["empirical_var"]]
    tgt = [report["target_mean"], report["target_var"]]
    x = np.arange(2)
    ax.bar(x - 0.17, emp, width=0.34, label="empirical", color="#33567d")
    ax.bar(x + 0.17, tgt, width=0.34, label="target", color="#b08030")
    ax.set_xticks(x)
    ax.set_xticklabels(labels)
    ax.axhline(0.0, color="black", lw=0.8)
    ax.legend(fontsize=8)
    ax.set_title("log-likelihood-ratio moments")
    return _save(fig, base.with_name(base.stem + "_lan.png"))


def _trend_figure(report: dict, base: Path) -> Path:
    fig, ax = plt.subplots(figsize=(4.6, 3.2))
    ax.loglog(report["n_list"], report["distances"], "o-", color="#33567d")
    ax.set_xlabel("n")
    ax.set_ylabel("windowed covariance gap")
    ax.set_title(f"equivalence trend: {report['verdict']}")
    ax.grid(True, which="both", alpha=0.3)
    return _save(fig, base.with_name(base.stem + "_trend.png"))


def _fisher_figure(report: dict, base: Path) -> Path:
    info = np.asarray(report["asymptotic_information"], dtype=float)
    cov = np.asarray(report["efficient_covariance"], dtype=float)
    fig, axes = plt.subplots(1, 2, figsize=(7.4, 3.2))
    for ax, mat, label in ((axes[0], info, "information"), (axes[1], cov, "efficient covariance")):
        vmax = float(np.abs(mat).max())
        im = ax.imshow(mat, cmap="RdBu_r", vmin=-vmax, vmax=vmax)
        fig.colorbar(im, ax=ax, shrink=0.8)
        ax.set_title(label)
    return _save(fig, base.with_name(base.stem + "_fisher.png"))


def _dump_figure(report: dict, base: Path) -> Path:
    rows = np.asarray(report["rows"], dtype=float)
    fig, ax = plt.subplots(figsize=(5.6, 3.2))
    if report["header"][0] == "t":
        for j in sorted(set(rows[:, 1].astype(int))):
            sel = rows[rows[:, 1].astype(int) == j]
            ax.plot(sel[:, 0], sel[:, 2], lw=0.7, label=f"component {j}")
        ax.set_xlabel("t")
    else:
        n = rows.shape[0]
        for j in range(1, rows.shape[1]):
            ax.plot(rows[:, 0] / n, rows[:, j], lw=0.7, label=f"component {j}")
        ax.set_xlabel("i / n")
    ax.set_ylabel("observation")
    ax.legend(fontsize=8)
    ax.set_title("simulated sample path")
    return _save(fig, base.with_name(base.stem + "_path.png"))


def render_report(report: dict, out_path) -> list[Path]:
    """Render the figures appropriate for this report kind; returns paths."""
    base = Path(out_path)
    kind = report.get("kind", "")
    written: list[Path] = []
    try:
        if kind in ("mc-parametric", "mc-semiparametric"):
            written.append(_zscore_figure(report, base))
            written.append(_covariance_figure(report, base))
            if "estimates" in report:
                written.append(_estimate_spread_figure(report, base))
        elif kind == "lan":
            written.append(_lan_figure(report, base))
        elif kind == "equivalence-trend":
            written.append(_trend_figure(report, base))
        elif kind == "fisher-table":
            written.append(_fisher_figure(report, base))
        elif kind == "simulate-dump":
            written.append(_dump_figure(report, base))
    except Exception:
        # figures are a courtesy of the report path; never fail the run
        for path in written:
            path.unlink(missing_ok=True)
        return []
    return written
