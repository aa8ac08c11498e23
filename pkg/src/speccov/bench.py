"""Seeded Monte Carlo experiments, configuration, and report persistence.

Configs are flat ``key = value`` files (``#`` comments allowed); vectors are
space- or comma-separated, matrices use ``;`` between rows::

    kind = mc-parametric
    seed = 20259
    replications = 5000
    spectrum = bm
    sigma = 1.0 0.5 ; 0.5 1.0
    eta = 1.0
    n = 1000000

Every report embeds its config echo and master seed, and regenerating with
the same pair is bit-identical (wall-clock time is reported but excluded
from the canonical byte representation).  Replications are partitioned into
fixed-size chunks processed by a thread pool; the partition and the
per-replication substreams do not depend on the thread count, so
``threads = 1`` and ``threads = 8`` produce identical numbers.

Schema of the JSON report: ``{config, estimates?, covariance_empirical,
covariance_target, rel_frobenius_error, z_scores, normality, diagnostics,
seed, wall_ms}``.  CSV output writes one row per replication (flattened
estimate) plus a ``*_summary.csv`` footer file carrying the same aggregates
at full precision.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .estimate import (
    WindowConfig,
    adaptive_estimate,
    integrated_covol_estimate,
    oracle_estimate,
)
from .fisher import ParamModel, asymptotic_fisher, fisher_window, integrated_bound, optimal_covariance
from .lan import lan_diagnostic, spectrum_distance_trend
from .matcore import symmetriser, vec
from .simulate import (
    BlockModel,
    ObservationSchedule,
    block_coeffs_from_ticks,
    sample_async,
    sample_block_sequence,
    sample_discrete,
    sample_sequence,
)
from .spectra import Spectrum, rate_and_zeta
from .streams import substream

__all__ = [
    "ConfigError",
    "parse_config_text",
    "load_config",
    "run_mc_parametric",
    "run_mc_semiparametric",
    "run_lan_experiment",
    "run_fisher_table",
    "run_equiv_trend",
    "run_simulate_dump",
    "run_experiment",
    "canonical_json",
    "write_report",
    "EXPERIMENT_KINDS",
]

#: replication chunk size; fixed so results do not depend on the thread count
CHUNK = 128

#: fewer replications than this is statistically meaningless and refused
MIN_REPLICATIONS = 100

EXPERIMENT_KINDS = (
    "mc-parametric",
    "mc-semiparametric",
    "lan",
    "fisher-table",
    "equivalence-trend",
    "simulate-dump",
)


class ConfigError(ValueError):
    """Raised with the first failing constraint, named."""

    def __init__(self, field: str, reason: str):
        self.field = field
        self.reason = reason
        super().__init__(f"config field '{field}': {reason}")


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------


def _parse_value(text: str):
    text = text.strip()
    if ";" in text:
        rows = [r for r in (row.strip() for row in text.split(";")) if r]
        return [[_parse_scalar(tok) for tok in row.replace(",", " ").split()] for row in rows]
    tokens = text.replace(",", " ").split()
    if len(tokens) > 1:
        return [_parse_scalar(t) for t in tokens]
    return _parse_scalar(text)


def _parse_scalar(tok: str):
    low = tok.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(tok)
    except ValueError:
        pass
    try:
        return float(tok)
    except ValueError:
        return tok


def parse_config_text(text: str) -> dict:
    """Parse the flat key-value config format into a dict."""
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}", "empty key")
        out[key] = _parse_value(value)
    return out


def load_config(path) -> dict:
    return parse_config_text(Path(path).read_text())


def _as_matrix(value, field: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim == 1:
        n = int(round(math.sqrt(arr.size)))
        if n * n != arr.size:
            raise ConfigError(field, "flat matrix length is not a perfect square")
        arr = arr.reshape(n, n)
    if arr.shape[0] != arr.shape[1]:
        raise ConfigError(field, f"matrix must be square, got {arr.shape}")
    return arr


def _get(cfg: dict, field: str, default=None, required: bool = False):
    if field in cfg:
        return cfg[field]
    if required:
        raise ConfigError(field, "required field is missing")
    return default


def build_spectrum(cfg: dict) -> Spectrum:
    kind = str(_get(cfg, "spectrum", required=True)).lower()
    try:
        if kind == "bm":
            return Spectrum.brownian_motion()
        if kind == "bb":
            return Spectrum.brownian_bridge()
        if kind == "ou":
            return Spectrum.ornstein_uhlenbeck(float(_get(cfg, "ou_beta", 0.5)))
        if kind == "fbm":
            return Spectrum.fractional(
                float(_get(cfg, "hurst", required=True)),
                allow_unvalidated=bool(_get(cfg, "allow_unvalidated", False)),
            )
        if kind == "ibm":
            return Spectrum.integrated_bm(int(_get(cfg, "m_fold", 1)))
        if kind == "power":
            return Spectrum.power_law(
                float(_get(cfg, "c", required=True)), float(_get(cfg, "delta", required=True))
            )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("spectrum", str(exc)) from exc
    raise ConfigError("spectrum", f"unknown kind {kind!r}")


def build_param_model(cfg: dict) -> ParamModel:
    spectrum = build_spectrum(cfg)
    sigma = _as_matrix(_get(cfg, "sigma", required=True), "sigma")
    eta = float(_get(cfg, "eta", 1.0))
    n = int(_get(cfg, "n", required=True))
    s_bound = float(_get(cfg, "s_bound", 10.0))
    try:
        return ParamModel(sigma=sigma, eta2=eta**2, n=n, spectrum=spectrum, s_bound=s_bound)
    except ValueError as exc:
        raise ConfigError("sigma/eta/n/s_bound", str(exc)) from exc


def build_window(cfg: dict) -> WindowConfig:
    try:
        return WindowConfig(
            a=None if "window_a" not in cfg else float(cfg["window_a"]),
            b=None if "window_b" not in cfg else float(cfg["window_b"]),
            split=str(_get(cfg, "window_split", "band")),
        )
    except ValueError as exc:
        raise ConfigError("window", str(exc)) from exc


def _require_replications(cfg: dict, force: bool = False) -> int:
    r = int(_get(cfg, "replications", required=True))
    if r < 1:
        raise ConfigError("replications", "must be >= 1")
    if r < MIN_REPLICATIONS and not (force or bool(_get(cfg, "force", False))):
        raise ConfigError(
            "replications",
            f"{r} < {MIN_REPLICATIONS} is statistically meaningless; pass force to override",
        )
    return r


def _master_seed(cfg: dict) -> int:
    seed = _get(cfg, "seed", required=True)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("seed", "must be a non-negative integer")
    return seed


def _run_chunked(total: int, threads: int, worker) -> None:
    """Process replications [0, total) in fixed chunks, optionally threaded.

    ``worker(lo, hi)`` must write its results into preallocated arrays; the
    chunk partition is independent of ``threads``.
    """
    spans = [(lo, min(lo + CHUNK, total)) for lo in range(0, total, CHUNK)]
    if threads <= 1:
        for lo, hi in spans:
            worker(lo, hi)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(lambda span: worker(*span), spans))


def _moment_summary(residuals: np.ndarray, target_cov: np.ndarray) -> dict:
    """Aggregate standardised residuals against the target covariance."""
    r, k = residuals.shape
    emp_cov = np.cov(residuals, rowvar=False, ddof=1).reshape(k, k)
    rel_frob = float(
        np.linalg.norm(emp_cov - target_cov) / np.linalg.norm(target_cov)
    )
    mean = residuals.mean(axis=0)
    std = residuals.std(axis=0, ddof=1)
    z_scores = np.sqrt(r) * mean / std
    centred = residuals - mean
    m2 = np.mean(centred**2, axis=0)
    skew = np.mean(centred**3, axis=0) / m2**1.5
    kurt = np.mean(centred**4, axis=0) / m2**2 - 3.0
    return {
        "covariance_empirical": emp_cov.tolist(),
        "covariance_target": target_cov.tolist(),
        "rel_frobenius_error": rel_frob,
        "z_scores": z_scores.tolist(),
        "normality": {
            "skewness": skew.tolist(),
            "excess_kurtosis": kurt.tolist(),
            "se_skewness": math.sqrt(6.0 / r),
            "se_excess_kurtosis": math.sqrt(24.0 / r),
        },
    }


# ---------------------------------------------------------------------------
# experiment runners
# ---------------------------------------------------------------------------


def run_mc_parametric(cfg: dict, force: bool = False) -> dict:
    """Seeded replications of sequence sampling + window estimation.

    The residuals ``r_n^-1 (estimate - vec(Sigma))`` are aggregated against
    the efficient covariance ``(1/4) I(Sigma)^-1 Z``.
    """
    t0 = time.perf_counter()
    model = build_param_model(cfg)
    window = build_window(cfg)
    reps = _require_replications(cfg, force)
    seed = _master_seed(cfg)
    threads = int(_get(cfg, "threads", 1))
    estimator = str(_get(cfg, "estimator", "adaptive"))
    if estimator not in ("adaptive", "oracle"):
        raise ConfigError("estimator", f"unknown estimator {estimator!r}")
    if estimator == "adaptive" and window.split == "none":
        raise ConfigError("window_split", "adaptive estimation needs a pre-window")

    main, _pre = window.indices(model.spectrum, model.n, 10**9)
    p_max = int(main[-1])
    rate = rate_and_zeta(model.spectrum, model.n)
    truth = vec(model.sigma)
    d2 = model.d**2

    estimates = np.empty((reps, d2))
    clamp_count = np.zeros(1, dtype=int)

    def worker(lo: int, hi: int) -> None:
        for rep in range(lo, hi):
            rng = substream(seed, "mc", rep, "sequence")
            sample = sample_sequence(model, p_max, rng, lineage=f"mc/{rep}")
            if estimator == "oracle":
                rep_out = oracle_estimate(sample, model, window)
            else:
                rep_out = adaptive_estimate(sample, model, window)
                if rep_out.diagnostics.get("pre_clamped"):
                    clamp_count[0] += 1
            estimates[rep] = rep_out.estimate

    _run_chunked(reps, threads, worker)

    residuals = (estimates - truth) / rate.r_n
    target = optimal_covariance(
        model.sigma, model.spectrum.delta, model.spectrum.zeta_limit, math.sqrt(model.eta2)
    )
    summary = _moment_summary(residuals, target)
    report = {
        "kind": "mc-parametric",
        "config": cfg,
        "seed": seed,
        **summary,
        "diagnostics": {
            "estimator": estimator,
            "p_max": p_max,
            "window_main": [int(main[0]), int(main[-1])],
            "rate": rate.r_n,
            "zeta": rate.zeta,
            "pre_clamp_count": int(clamp_count[0]),
            "mean_estimate": estimates.mean(axis=0).tolist(),
            "truth": truth.tolist(),
        },
        "wall_ms": 1000.0 * (time.perf_counter() - t0),
    }
    if reps <= int(_get(cfg, "estimates_in_report_max", 1000)):
        report["estimates"] = estimates.tolist()
    return report


def _affine_sigma_fn(cfg: dict):
    const = _as_matrix(_get(cfg, "sigma_const", required=True), "sigma_const")
    slope = (
        _as_matrix(cfg["sigma_slope"], "sigma_slope")
        if "sigma_slope" in cfg
        else np.zeros_like(const)
    )
    if slope.shape != const.shape:
        raise ConfigError("sigma_slope", "shape differs from sigma_const")
    return (lambda t: const + t * slope), const, slope


def build_block_setup(cfg: dict):
    sigma_fn, const, slope = _affine_sigma_fn(cfg)
    d = const.shape[0]
    n_j = _get(cfg, "n_per_component", None)
    n_min = int(_get(cfg, "n_min", required=True))
    if n_j is None:
        n_j = [n_min] * d
    elif np.isscalar(n_j):
        n_j = [int(n_j)] * d
    eta_j = _get(cfg, "eta_j", 1.0)
    if np.isscalar(eta_j):
        eta_j = [float(eta_j)] * d
    warp = _get(cfg, "schedule_warp", 0.0)
    if np.isscalar(warp):
        warp = [float(warp)] * d
    try:
        schedule = ObservationSchedule(
            n_per_component=tuple(int(v) for v in n_j),
            eta=tuple(float(v) for v in eta_j),
            warp=tuple(float(v) for v in warp),
        )
    except ValueError as exc:
        raise ConfigError("schedule", str(exc)) from exc
    if schedule.n_min != n_min:
        raise ConfigError("n_min", "does not match min of n_per_component")
    m = int(_get(cfg, "m", required=True))
    s_bound = float(_get(cfg, "s_bound", required=True))
    try:
        block_model = BlockModel.from_schedule(sigma_fn, schedule, m, s_bound)
    except ValueError as exc:
        raise ConfigError("m/s_bound/sigma", str(exc)) from exc
    psi_true = vec(const + 0.5 * slope)
    psi_model = vec(block_model.sigmas.mean(axis=0))
    return block_model, schedule, psi_true, psi_model


def run_mc_semiparametric(cfg: dict, force: bool = False) -> dict:
    """Block-wise integrated-covolatility Monte Carlo.

    ``path = fast`` samples the block sequence model directly; ``path =
    end-to-end`` simulates asynchronous ticks and projects them onto the
    block basis first.  Residuals ``n_min^(1/4) (psi_hat - psi)`` are
    aggregated against the Riemann-sum information bound.
    """
    t0 = time.perf_counter()
    block_model, schedule, psi_true, psi_model = build_block_setup(cfg)
    window = build_window(cfg)
    reps = _require_replications(cfg, force)
    seed = _master_seed(cfg)
    threads = int(_get(cfg, "threads", 1))
    path = str(_get(cfg, "path", "fast"))
    if path not in ("fast", "end-to-end"):
        raise ConfigError("path", f"unknown sampling path {path!r}")

    n_min, d = block_model.n_min, block_model.d
    a, b = window.resolve(n_min)
    p_max = 1
    from .estimate import _block_window  # shared window rule

    for k in range(block_model.m):
        idx, _ = _block_window(block_model, k, a, b, 10**9)
        p_max = max(p_max, int(idx[-1]))

    scale = float(n_min) ** 0.25
    estimates = np.empty((reps, d * d))
    diags: dict = {"clamp_events": 0}

    def worker(lo: int, hi: int) -> None:
        for rep in range(lo, hi):
            if path == "fast":
                rng = substream(seed, "mc", rep, "blocks")
                blocks = sample_block_sequence(block_model, p_max, rng, lineage=f"mc/{rep}")
            else:
                rng = substream(seed, "mc", rep, "ticks")
                ticks = sample_async(block_model, schedule, rng, lineage=f"mc/{rep}")
                blocks = block_coeffs_from_ticks(ticks, block_model, p_max)
            rep_out = integrated_covol_estimate(blocks, block_model, window)
            diags["clamp_events"] += rep_out.diagnostics["clamp_events"]
            estimates[rep] = rep_out.estimate

    _run_chunked(reps, threads, worker)

    residuals = scale * (estimates - psi_true)
    target = integrated_bound(block_model)
    summary = _moment_summary(residuals, target)
    report = {
        "kind": "mc-semiparametric",
        "config": cfg,
        "seed": seed,
        **summary,
        "diagnostics": {
            "path": path,
            "p_max": p_max,
            "psi_true": psi_true.tolist(),
            "psi_block_average": psi_model.tolist(),
            "mean_estimate": estimates.mean(axis=0).tolist(),
            "clamp_events": int(diags["clamp_events"]),
        },
        "wall_ms": 1000.0 * (time.perf_counter() - t0),
    }
    if reps <= int(_get(cfg, "estimates_in_report_max", 1000)):
        report["estimates"] = estimates.tolist()
    return report


def run_lan_experiment(cfg: dict, force: bool = False) -> dict:
    """Log-likelihood-ratio moments under local alternatives."""
    t0 = time.perf_counter()
    model = build_param_model(cfg)
    h = _as_matrix(_get(cfg, "h", required=True), "h")
    if h.shape != model.sigma.shape:
        raise ConfigError("h", "perturbation shape differs from sigma")
    reps = _require_replications(cfg, force)
    seed = _master_seed(cfg)
    rep_out = lan_diagnostic(model, h, reps, seed)
    return {
        "kind": "lan",
        "config": cfg,
        "seed": seed,
        "empirical_mean": rep_out.empirical_mean,
        "empirical_var": rep_out.empirical_var,
        "target_mean": rep_out.target_mean,
        "target_var": rep_out.target_var,
        "mean_rel_gap": rep_out.mean_rel_gap,
        "var_rel_gap": rep_out.var_rel_gap,
        "diagnostics": {"p_max": rep_out.p_max, **rep_out.remainder},
        "wall_ms": 1000.0 * (time.perf_counter() - t0),
    }


def run_fisher_table(cfg: dict) -> dict:
    """Asymptotic information, efficient covariance, and windowed check."""
    t0 = time.perf_counter()
    model = build_param_model(cfg)
    eta = math.sqrt(model.eta2)
    info = asymptotic_fisher(model.sigma, model.spectrum.delta, model.spectrum.zeta_limit, eta)
    opt_cov = 0.25 * info.inverse() @ symmetriser(model.d)
    rate = rate_and_zeta(model.spectrum, model.n)
    windowed = fisher_window(model, "full")
    finite = rate.r_n**2 * windowed.times_z()
    gap = float(np.linalg.norm(finite - info.times_z()) / np.linalg.norm(info.times_z()))
    return {
        "kind": "fisher-table",
        "config": cfg,
        "seed": int(_get(cfg, "seed", 0)),
        "asymptotic_information": info.matrix.tolist(),
        "efficient_covariance": opt_cov.tolist(),
        "rate": rate.r_n,
        "zeta": rate.zeta,
        "zeta_trend": list(rate.zeta_trend),
        "finite_n_rel_gap": gap,
        "diagnostics": {"p_max": windowed.meta["p_hi"]},
        "wall_ms": 1000.0 * (time.perf_counter() - t0),
    }


def run_equiv_trend(cfg: dict) -> dict:
    """Windowed covariance-gap trend between two eigenvalue models."""
    t0 = time.perf_counter()
    base = build_spectrum(cfg)
    alt_cfg = {k[4:]: v for k, v in cfg.items() if k.startswith("alt_")}
    if "spectrum" not in alt_cfg:
        raise ConfigError("alt_spectrum", "required field is missing")
    alt = build_spectrum(alt_cfg)
    sigma = _as_matrix(_get(cfg, "sigma", 1.0), "sigma")
    eta = float(_get(cfg, "eta", 1.0))
    n_list = _get(cfg, "n_list", [10**4, 10**6, 10**8])
    if np.isscalar(n_list):
        n_list = [n_list]
    trend = spectrum_distance_trend(base, alt, sigma, eta, [int(v) for v in n_list])
    return {
        "kind": "equivalence-trend",
        "config": cfg,
        "seed": int(_get(cfg, "seed", 0)),
        "n_list": list(trend.n_list),
        "distances": list(trend.values),
        "verdict": trend.verdict,
        "wall_ms": 1000.0 * (time.perf_counter() - t0),
    }


def run_simulate_dump(cfg: dict) -> dict:
    """One seeded draw of the discrete or asynchronous model, as CSV rows.

    Returns the rows in the report; :func:`write_report` lays them out as
    ``t,component,value`` (ticks) or ``i,y_1..y_d`` (uniform grid).
    """
    t0 = time.perf_counter()
    seed = _master_seed(cfg)
    mode = str(_get(cfg, "mode", "discrete"))
    if mode == "discrete":
        sigma = _as_matrix(_get(cfg, "sigma", required=True), "sigma")
        kernel = str(_get(cfg, "kernel", "bm"))
        n = int(_get(cfg, "n", required=True))
        eta = float(_get(cfg, "eta", 1.0))
        params = {}
        if kernel == "fbm":
            params["hurst"] = float(_get(cfg, "hurst", required=True))
        if kernel == "ou":
            params["beta"] = float(_get(cfg, "ou_beta", 0.5))
        try:
            sample = sample_discrete(
                sigma, kernel, n, eta**2, substream(seed, "dump"), **params
            )
        except ValueError as exc:
            raise ConfigError("kernel/n/eta", str(exc)) from exc
        rows = [[int(i + 1)] + sample.values[i].tolist() for i in range(sample.n)]
        header = ["i"] + [f"y_{j + 1}" for j in range(sample.d)]
    elif mode == "ticks":
        block_model, schedule, _, _ = build_block_setup(cfg)
        series = sample_async(block_model, schedule, substream(seed, "dump"))
        rows = []
        for j in range(series.d):
            for t, v in zip(series.times[j], series.values[j]):
                rows.append([float(t), int(j + 1), float(v)])
        header = ["t", "component", "value"]
    else:
        raise ConfigError("mode", f"unknown dump mode {mode!r}")
    return {
        "kind": "simulate-dump",
        "config": cfg,
        "seed": seed,
        "header": header,
        "rows": rows,
        "wall_ms": 1000.0 * (time.perf_counter() - t0),
    }


_RUNNERS = {
    "mc-parametric": run_mc_parametric,
    "mc-semiparametric": run_mc_semiparametric,
    "lan": run_lan_experiment,
    "fisher-table": lambda cfg, force=False: run_fisher_table(cfg),
    "equivalence-trend": lambda cfg, force=False: run_equiv_trend(cfg),
    "simulate-dump": lambda cfg, force=False: run_simulate_dump(cfg),
}


def run_experiment(cfg: dict, force: bool = False) -> dict:
    kind = str(_get(cfg, "kind", required=True))
    if kind not in _RUNNERS:
        raise ConfigError("kind", f"unknown experiment kind {kind!r}; valid: {EXPERIMENT_KINDS}")
    return _RUNNERS[kind](cfg, force=force)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def canonical_json(report: dict) -> bytes:
    """Deterministic byte encoding of a report, excluding wall-clock time."""
    stripped = {k: v for k, v in report.items() if k != "wall_ms"}
    return json.dumps(stripped, sort_keys=True, separators=(",", ":")).encode()


def _fmt(value) -> str:
    return repr(float(value))


def _flatten_numeric(prefix: str, value, rows: list) -> None:
    if isinstance(value, bool):
        rows.append((prefix, str(value)))
    elif isinstance(value, (int, float)):
        rows.append((prefix, _fmt(value) if isinstance(value, float) else str(value)))
    elif isinstance(value, (list, tuple)):
        for i, item in enumerate(value):
            _flatten_numeric(f"{prefix}[{i}]", item, rows)
    elif isinstance(value, dict):
        for k in sorted(value):
            _flatten_numeric(f"{prefix}.{k}", value[k], rows)
    else:
        rows.append((prefix, str(value)))


def write_report(report: dict, out_path, fmt: str = "json", plots: bool = True) -> list:
    """Persist a report; returns the list of files written.

    JSON keeps the full report.  CSV writes per-replication rows when the
    report carries estimates (or the dump rows for simulate-dump) plus a
    ``*_summary.csv`` footer with every scalar aggregate at full precision.
    Figures are rendered next to the output unless ``plots`` is false.
    """
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt == "json":
        body = json.dumps(report, sort_keys=True, indent=1).encode()
        out_path.write_bytes(body)
        written.append(out_path)
    elif fmt == "csv":
        lines = []
        if report.get("kind") == "simulate-dump":
            lines.append(",".join(report["header"]))
            for row in report["rows"]:
                lines.append(",".join(_fmt(v) if isinstance(v, float) else str(v) for v in row))
        elif "estimates" in report:
            width = len(report["estimates"][0])
            lines.append("rep," + ",".join(f"e_{i + 1}" for i in range(width)))
            for r, row in enumerate(report["estimates"]):
                lines.append(f"{r}," + ",".join(_fmt(v) for v in row))
        else:
            lines.append("key,value")
        out_path.write_text("\n".join(lines) + "\n")
        written.append(out_path)
        summary_rows: list = []
        for key in sorted(report):
            if key in ("estimates", "rows", "header", "config"):
                continue
            _flatten_numeric(key, report[key], summary_rows)
        summary_path = out_path.with_name(out_path.stem + "_summary.csv")
        summary_path.write_text(
            "key,value\n" + "\n".join(f"{k},{v}" for k, v in summary_rows) + "\n"
        )
        written.append(summary_path)
    else:
        raise ConfigError("format", f"unknown output format {fmt!r}")

    if plots:
        from . import figures

        written.extend(figures.render_report(report, out_path))
    return written
