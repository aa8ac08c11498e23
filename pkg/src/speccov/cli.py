"""Command-line harness.

Subcommands: ``fisher``, ``simulate``, ``estimate``, ``mc``, ``lan``,
``equiv``.  Each reads an optional flat config file (``--config``) merged
with flag overrides; ``--seed``, ``--out``, ``--format {json,csv}`` and
``--threads N`` are global.  Exit codes: 0 success, 1 validation error,
2 runtime error; errors are emitted as one-line JSON objects on stderr.

Examples::

    speccov fisher --spectrum bm --d 1 --sigma 1 --eta 1
    speccov mc --config experiment.cfg --seed 42 --out report.json
    speccov equiv --spectrum bm --alt-spectrum bb --sigma 1 --out trend.json
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import bench
from .bench import ConfigError

__all__ = ["main", "run_cli"]


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that reports usage problems with exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        _emit_error("validation", message)
        raise SystemExit(1)


def _emit_error(kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": {"type": kind, "message": message}}) + "\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="speccov", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command")

    def add_common(p: _Parser) -> None:
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--out", help="output path; prints to stdout when omitted")
        p.add_argument("--format", choices=("json", "csv"), default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--force", action="store_true", help="allow tiny replication counts")
        p.add_argument("--no-plots", action="store_true", help="skip figure rendering")
        p.add_argument("--spectrum", help="bm|bb|ou|fbm|ibm|power")
        p.add_argument("--hurst", type=float)
        p.add_argument("--sigma", help="matrix, rows separated by ';'")
        p.add_argument("--eta", type=float)
        p.add_argument("--n", type=int)
        p.add_argument("--d", type=int, help="dimension (expands scalar sigma)")
        p.add_argument("--s-bound", type=float, dest="s_bound")
        p.add_argument("--window-a", type=float, dest="window_a")
        p.add_argument("--window-b", type=float, dest="window_b")
        p.add_argument("--window-split", dest="window_split", choices=("band", "parity", "none"))
        p.add_argument("--replications", "-R", type=int)

    descriptions = {
        "fisher": "asymptotic information and efficient covariance for a model",
        "simulate": "draw one seeded sample and dump it as CSV rows",
        "estimate": "one seeded draw + window estimate, reported as JSON",
        "mc": "seeded Monte Carlo experiment (parametric or semiparametric)",
        "lan": "log-likelihood-ratio moment diagnostics",
        "equiv": "windowed equivalence trend between two eigenvalue models",
    }
    parsers = {}
    for name, desc in descriptions.items():
        p = sub.add_parser(name, help=desc, description=desc)
        add_common(p)
        parsers[name] = p

    parsers["mc"].add_argument("--kind", choices=("mc-parametric", "mc-semiparametric"))
    parsers["mc"].add_argument("--estimator", choices=("adaptive", "oracle"))
    parsers["simulate"].add_argument("--kernel", help="bm|bb|ou|fbm")
    parsers["simulate"].add_argument("--mode", choices=("discrete", "ticks"))
    parsers["estimate"].add_argument("--estimator", choices=("adaptive", "oracle"))
    parsers["lan"].add_argument("--h", help="perturbation matrix, rows by ';'")
    parsers["equiv"].add_argument("--alt-spectrum", dest="alt_spectrum")
    parsers["equiv"].add_argument("--alt-hurst", dest="alt_hurst", type=float)
    parsers["equiv"].add_argument("--n-list", dest="n_list", help="comma-separated sizes")
    return parser


_FLAG_KEYS = (
    "seed threads spectrum hurst eta n s_bound window_a window_b window_split "
    "replications kind estimator kernel mode alt_spectrum alt_hurst"
).split()


def _merge_config(args: argparse.Namespace) -> dict:
    cfg = bench.load_config(args.config) if args.config else {}
    for key in _FLAG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    for key in ("sigma", "h", "n_list"):
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = bench.parse_config_text(f"x = {value}")["x"]
    if getattr(args, "d", None) is not None and np.isscalar(cfg.get("sigma", None)):
        cfg["sigma"] = (float(cfg["sigma"]) * np.eye(args.d)).tolist()
    if args.force:
        cfg["force"] = True
    return cfg


def _dispatch(command: str, cfg: dict, force: bool) -> dict:
    if command == "fisher":
        cfg.setdefault("n", 10**6)
        return bench.run_fisher_table(cfg)
    if command == "simulate":
        cfg["kind"] = "simulate-dump"
        return bench.run_simulate_dump(cfg)
    if command == "estimate":
        return _run_single_estimate(cfg)
    if command == "mc":
        cfg.setdefault("kind", "mc-parametric")
        if cfg["kind"] not in ("mc-parametric", "mc-semiparametric"):
            raise ConfigError("kind", f"mc cannot run kind {cfg['kind']!r}")
        return bench.run_experiment(cfg, force=force)
    if command == "lan":
        cfg["kind"] = "lan"
        return bench.run_lan_experiment(cfg, force=force)
    if command == "equiv":
        cfg["kind"] = "equivalence-trend"
        return bench.run_equiv_trend(cfg)
    raise ConfigError("command", f"unknown subcommand {command!r}")


def _run_single_estimate(cfg: dict) -> dict:
    from .estimate import adaptive_estimate, oracle_estimate
    from .simulate import sample_sequence
    from .streams import substream

    model = bench.build_param_model(cfg)
    window = bench.build_window(cfg)
    seed = cfg.get("seed", 0)
    estimator = str(cfg.get("estimator", "adaptive"))
    main, _ = window.indices(model.spectrum, model.n, 10**9)
    sample = sample_sequence(model, int(main[-1]), substream(int(seed), "estimate"))
    if estimator == "oracle":
        report = oracle_estimate(sample, model, window)
    elif estimator == "adaptive":
        report = adaptive_estimate(sample, model, window)
    else:
        raise ConfigError("estimator", f"unknown estimator {estimator!r}")
    return {
        "kind": "estimate",
        "config": cfg,
        "seed": int(seed),
        "estimate": report.estimate.tolist(),
        "covariance": report.covariance.tolist(),
        "window_main": list(report.window_main),
        "window_pre": None if report.window_pre is None else list(report.window_pre),
        "diagnostics": {
            k: v for k, v in report.diagnostics.items() if not isinstance(v, np.ndarray)
        },
    }


def _print_headline(report: dict) -> None:
    kind = report.get("kind")
    if kind == "fisher-table":
        info = np.asarray(report["asymptotic_information"])
        cov = np.asarray(report["efficient_covariance"])
        if info.size == 1:
            print(f"I = {info[0][0]:.10g}")
            print(f"efficient covariance (1/4) I^-1 Z = {cov[0][0]:.10g}")
        else:
            print("asymptotic information I:")
            print(np.array2string(info, precision=6))
            print("efficient covariance (1/4) I^-1 Z:")
            print(np.array2string(cov, precision=6))
        print(f"rate r_n = {report['rate']:.6g}, zeta(n) = {report['zeta']:.10g}")
    elif kind in ("mc-parametric", "mc-semiparametric"):
        print(
            f"{kind}: rel Frobenius error {report['rel_frobenius_error']:.4f} "
            f"over R replications (seed {report['seed']})"
        )
    elif kind == "lan":
        print(
            f"lan: mean {report['empirical_mean']:.6g} (target {report['target_mean']:.6g}), "
            f"var {report['empirical_var']:.6g} (target {report['target_var']:.6g})"
        )
    elif kind == "equivalence-trend":
        pairs = ", ".join(
            f"n={n}: {v:.4g}" for n, v in zip(report["n_list"], report["distances"])
        )
        print(f"equivalence trend [{report['verdict']}]: {pairs}")
    elif kind == "estimate":
        print("estimate:", np.array2string(np.asarray(report["estimate"]), precision=6))


def run_cli(argv=None) -> int:
    """Entry point; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        _emit_error("validation", "a subcommand is required")
        return 1
    try:
        cfg = _merge_config(args)
        report = _dispatch(args.command, cfg, force=args.force)
    except ConfigError as exc:
        _emit_error("validation", str(exc))
        return 1
    except (ValueError, OSError) as exc:
        _emit_error("validation" if isinstance(exc, ValueError) else "runtime", str(exc))
        return 1 if isinstance(exc, ValueError) else 2
    except Exception as exc:  # noqa: BLE001 - runtime failures map to exit 2
        _emit_error("runtime", f"{type(exc).__name__}: {exc}")
        return 2

    try:
        if args.out:
            fmt = args.format or ("csv" if str(args.out).endswith(".csv") else "json")
            files = bench.write_report(report, args.out, fmt=fmt, plots=not args.no_plots)
            for path in files:
                print(f"wrote {path}")
        _print_headline(report)
    except Exception as exc:  # noqa: BLE001
        _emit_error("runtime", f"{type(exc).__name__}: {exc}")
        return 2
    return 0


def main() -> None:
    raise SystemExit(run_cli())


if __name__ == "__main__":
    main()
