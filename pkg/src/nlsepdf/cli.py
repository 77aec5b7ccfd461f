"""Batch front-end: run one experiment, sweep a parameter, or run the demo.

Subcommands: run, sweep, demo-qpsk, validate-config.  Exit code 0 on
success; guard violations exit 2 with the violated guard named; other
failures exit 1.  No run mutates its input files.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__, qpsk
from .channel import diagnostics, split_step_batch
from .errors import GuardViolation
from .io import (RunConfig, dump_document, interleave, load_config, parse_config,
                 set_by_path, validate_document)
from .pathint import estimate_log_pdf
from .perturbation import series_log_pdf
from .qpsk import (build_input, build_received, empirical_symbol_stats,
                   predicted_skew, product_log_pdf)
from .seeding import rng_stream
from .trajectory import small_noise_log_pdf


def _resolve_fields(cfg: RunConfig):
    if cfg.x is not None:
        return cfg.x, cfg.y
    x = build_input(cfg.constellation, cfg.symbols, cfg.grid)
    y = None
    if cfg.perturbation is not None:
        y = build_received(cfg.constellation, cfg.symbols, cfg.perturbation,
                           cfg.grid, cfg.params)
    return x, y


def _diag_dict(x, cfg: RunConfig) -> dict:
    if not np.any(x.values):
        return {"p_ave": 0.0}
    d = diagnostics(x, cfg.grid, cfg.params)
    return {"gamma_tilde": d.gamma_tilde, "epsilon": d.epsilon, "p_ave": d.p_ave}


def run(cfg: RunConfig, threads: int = 1) -> dict:
    """Execute one experiment and return its result document."""
    x, y = _resolve_fields(cfg)
    opts = cfg.options
    results: dict = {"diagnostics": _diag_dict(x, cfg)}

    if cfg.method == "pathint":
        est = estimate_log_pdf(
            x, y, cfg.grid, cfg.params, int(opts["n_samples"]), cfg.seed,
            n_streams=int(opts.get("n_streams", 1)), threads=threads)
        results.update(log_p=est.log_p, std_err=est.std_err)
        results["diagnostics"].update(est.diagnostics)
    elif cfg.method in ("series0", "series1"):
        order = 0 if cfg.method == "series0" else 1
        est = series_log_pdf(x, y, cfg.grid, cfg.params, order,
                             n_nodes=int(opts.get("quad_nodes", 32)))
        results.update(log_p=est.log_p, std_err=est.std_err)
        results["diagnostics"].update(est.diagnostics)
    elif cfg.method == "smallq":
        est = small_noise_log_pdf(
            x, y, cfg.grid, cfg.params,
            tol=float(opts.get("tol", 1e-8)),
            max_iter=int(opts.get("max_iter", 50)),
            variant=opts.get("variant", "solver"))
        results.update(log_p=est.log_p, std_err=est.std_err)
        results["diagnostics"].update(est.diagnostics)
    elif cfg.method == "forward-mc":
        n_runs = int(opts.get("n_runs", 1000))
        rng = rng_stream(cfg.seed)
        out = split_step_batch(np.broadcast_to(x.values, (n_runs, cfg.grid.m)).copy(),
                               cfg.params, cfg.grid, rng)
        derot = np.exp(-0.5j * cfg.params.beta2 * cfg.grid.omegas**2
                       * cfg.params.length)
        resid = out * derot - x.values
        results.update(
            n_runs=n_runs,
            mode_mean=interleave(resid.mean(axis=0)),
            mode_variance=(np.abs(resid) ** 2).mean(axis=0).tolist())
    elif cfg.method == "demo":
        results.update(_run_demo(cfg))
    else:  # pragma: no cover - parse_config rejects unknown methods
        raise GuardViolation("method", f"unhandled method {cfg.method!r}")

    doc = {
        "tool": "nlsepdf",
        "version": __version__,
        "method": cfg.method,
        "seed": cfg.seed,
        "config": cfg.raw,
        "results": results,
    }
    validate_document(doc)
    return doc


def _run_demo(cfg: RunConfig, out_dir: Path | None = None) -> dict:
    spec, symbols = cfg.constellation, cfg.symbols
    opts = cfg.options
    n_runs = int(opts.get("n_runs", 20000))
    stats = empirical_symbol_stats(
        spec, symbols, cfg.grid, cfg.params, n_runs, rng_stream(cfg.seed),
        chunk_size=int(opts.get("chunk_size", 2048)))
    pred = predicted_skew(spec, cfg.grid, cfg.params)
    summary = {
        "n_runs": n_runs,
        "predicted_skew": pred,
        "empirical_skew": stats.rho_sin_mean.tolist(),
        "empirical_skew_se": stats.rho_sin_se.tolist(),
        "rho_sq_mean": stats.rho_sq_mean.tolist(),
    }
    if cfg.perturbation is not None:
        lp = product_log_pdf(cfg.perturbation, spec, symbols, cfg.grid, cfg.params)
        summary["product_log_p"] = lp.log_p
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_demo_tables(out_dir, spec, symbols, stats, pred)
    return summary


def _write_demo_tables(out_dir: Path, spec, symbols, stats, pred: float) -> None:
    rows = ["symbol\tphase\tpredicted_skew\tempirical_skew\tstd_err\trho_sq_mean"]
    for k in range(spec.n_symbols):
        rows.append("\t".join(
            f"{v:.17g}" if isinstance(v, float) else str(v)
            for v in (k - spec.n_side, float(symbols[k]), pred,
                      float(stats.rho_sin_mean[k]), float(stats.rho_sin_se[k]),
                      float(stats.rho_sq_mean[k]))))
    (out_dir / "skew_summary.tsv").write_text("\n".join(rows) + "\n")

    hist = ["symbol\trho_lo\trho_hi\tdphi_lo\tdphi_hi\tcount"]
    for k in range(spec.n_symbols):
        for a in range(len(stats.rho_edges) - 1):
            for b in range(len(stats.dphi_edges) - 1):
                c = int(stats.counts[k, a, b])
                if c:
                    hist.append("\t".join(
                        f"{v:.17g}" if isinstance(v, float) else str(v)
                        for v in (k - spec.n_side,
                                  float(stats.rho_edges[a]), float(stats.rho_edges[a + 1]),
                                  float(stats.dphi_edges[b]), float(stats.dphi_edges[b + 1]),
                                  c)))
    (out_dir / "symbol_histograms.tsv").write_text("\n".join(hist) + "\n")


def sweep(cfg: RunConfig, axis: str, values, threads: int = 1) -> str:
    """One run per value along a numeric config axis; returns a TSV table."""
    header = [axis, "log_p", "std_err", "gamma_tilde", "epsilon"]
    lines = ["\t".join(header)]
    for value in values:
        doc = run(parse_config(set_by_path(cfg.raw, axis, value)), threads=threads)
        res = doc["results"]
        diag = res.get("diagnostics", {})
        row = [value, res.get("log_p", float("nan")), res.get("std_err", float("nan")),
               diag.get("gamma_tilde", float("nan")), diag.get("epsilon", float("nan"))]
        lines.append("\t".join(f"{v:.17g}" for v in row))
    return "\n".join(lines) + "\n"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nlsepdf",
        description="Conditional-density computations for the noisy "
                    "nonlinear Schrodinger channel")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("-c", "--config", required=True, help="JSON config file")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads (execution hint; numbers depend "
                            "only on seed and stream count)")
        p.add_argument("-o", "--output", default=None, help="output path")

    p_run = sub.add_parser("run", help="execute one experiment")
    common(p_run)

    p_sweep = sub.add_parser("sweep", help="run once per value of a config axis")
    common(p_sweep)
    p_sweep.add_argument("--axis", required=True, help="dotted config path, "
                         "e.g. channel.gamma")
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated numeric values")

    p_demo = sub.add_parser("demo-qpsk", help="pulse-train demo with forward MC")
    common(p_demo)

    p_val = sub.add_parser("validate-config", help="check a config file")
    p_val.add_argument("-c", "--config", required=True)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if getattr(args, "seed", None) is not None:
            cfg = parse_config({**cfg.raw, "seed": args.seed},
                               base_dir=Path(args.config).parent)

        if args.command == "validate-config":
            print(f"ok: {args.config} is a valid {cfg.method!r} config")
            return 0
        if args.command == "run":
            payload = dump_document(run(cfg, threads=args.threads))
        elif args.command == "sweep":
            values = [float(v) for v in args.values.split(",")]
            payload = sweep(cfg, args.axis, values, threads=args.threads)
        elif args.command == "demo-qpsk":
            out_dir = Path(args.output) if args.output else None
            doc = {
                "tool": "nlsepdf", "version": __version__, "method": "demo",
                "seed": cfg.seed, "config": cfg.raw,
                "results": _run_demo(cfg, out_dir=out_dir),
            }
            validate_document(doc)
            payload = dump_document(doc)
            if out_dir is not None:
                (out_dir / "demo_summary.json").write_text(payload)
                print(f"demo tables written to {out_dir}")
                return 0
        else:  # pragma: no cover
            raise GuardViolation("command", f"unknown command {args.command!r}")

        if args.command != "demo-qpsk" and args.output:
            Path(args.output).write_text(payload)
        else:
            sys.stdout.write(payload)
        return 0
    except GuardViolation as exc:
        print(f"guard violated: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
