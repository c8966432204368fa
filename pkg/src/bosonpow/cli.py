"""Command-line entry point: ``sample``, ``expect``, ``sweep-g``, ``validate``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys

from .config import RunConfig, config_summary, load_config
from .errors import BosonPowError, ConfigError
from .expectations import (
    RESULT_COLUMNS,
    RESULT_SCHEMA,
    PowerQuery,
    estimate_row,
    ground_state_expectation,
    jensen_upper_bound,
    strong_coupling_bounds,
)
from .path_gibbs import PathEnsemble, run_chains

log = logging.getLogger("bosonpow")

ENSEMBLE_FILE = "ensemble.csv"
EXPECT_COLUMNS = RESULT_COLUMNS + ("jensen_bound", "corridor_lower", "corridor_upper")
SWEEP_SCHEMA = "bosonpow-sweep/1"
SWEEP_COLUMNS = ("model_hash", "query", "g", "value", "mc_stderr", "det_error", "n_eff", "normalized",
                 "normalized_stderr", "mean_w", "mean_w_stderr", "w_inf", "corridor_lower", "corridor_upper")


def _fmt(v) -> str:
    if v is None or v == "":
        return ""
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    return str(v)


def write_csv(path, schema: str, columns, rows, cfg_hash: str) -> None:
    """CSV with a leading ``# schema=... config_hash=...`` line."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema={schema} config_hash={cfg_hash}\n")
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(columns)
        for row in rows:
            out.writerow([_fmt(row.get(c)) for c in columns])


def _sample(cfg: RunConfig, model) -> PathEnsemble:
    return run_chains(model, cfg.mcmc, cfg.seed, cfg.chains, workers=cfg.workers)


def _queries(cfg: RunConfig) -> list[PowerQuery]:
    seen, out = set(), []
    for k in cfg.ks:
        if k in seen:
            log.warning("duplicate k=%g in query.k ignored", k)
            continue
        seen.add(k)
        out.append(PowerQuery(k))
    for text, psi in zip(cfg.psi_texts, cfg.psis):
        if text in seen:
            log.warning("duplicate psi %r in query.psi ignored", text)
            continue
        seen.add(text)
        out.append(PowerQuery(0, psi))
    return out


def cmd_sample(cfg: RunConfig) -> int:
    os.makedirs(cfg.out_dir, exist_ok=True)
    ens = _sample(cfg, cfg.model)
    path = os.path.join(cfg.out_dir, ENSEMBLE_FILE)
    ens.save(path, {"config_hash": cfg.hash, "config": cfg.raw})
    summary = ens.summary()
    warnings_ = [w for d in ens.diagnostics for w in d.get("warnings", [])]
    print(json.dumps({
        "ensemble": path,
        "n_samples": len(ens),
        "mean_w": summary.mean,
        "stderr_w": summary.stderr,
        "w_inf": ens.w_inf,
        "eps": ens.eps,
        "warnings": warnings_,
        "config_hash": cfg.hash,
    }, indent=2))
    return 0


def _expect_rows(cfg: RunConfig, ens: PathEnsemble, g: float):
    rows = []
    for q in _queries(cfg):
        est = ground_state_expectation(q, ens, g)
        extra = {}
        if q.m == 0 and q.psi is not None:
            extra["jensen_bound"] = jensen_upper_bound(q.psi, cfg.model, g)
        if q.psi_override is None and q.k >= 1.0:
            lo, hi = strong_coupling_bounds(q, cfg.model, cfg.a)
            extra["corridor_lower"], extra["corridor_upper"] = lo, hi
        rows.append((q, est, estimate_row(est, extra)))
    return rows


def cmd_expect(cfg: RunConfig, ensemble_path: str | None) -> int:
    path = ensemble_path or os.path.join(cfg.out_dir, ENSEMBLE_FILE)
    ens, meta = PathEnsemble.load(path)
    if meta.get("model_hash") != cfg.model.hash():
        raise ConfigError("model", f"ensemble {path} was sampled for model {meta.get('model_hash')}, "
                                   f"config describes {cfg.model.hash()}; refusing to mix")
    if not _queries(cfg):
        raise ConfigError("query.k", "no k or psi entries to evaluate")
    os.makedirs(cfg.out_dir, exist_ok=True)
    rows = [r for _, _, r in _expect_rows(cfg, ens, cfg.model.g)]
    out = os.path.join(cfg.out_dir, "expect.csv")
    write_csv(out, RESULT_SCHEMA, EXPECT_COLUMNS, rows, cfg.hash)
    print(out)
    return 0


def cmd_sweep_g(cfg: RunConfig) -> int:
    if not cfg.g_sweep:
        raise ConfigError("model.g_sweep", "empty coupling list")
    if cfg.psis:
        raise ConfigError("query.psi", "the coupling sweep traces pure powers N^k only")
    if not cfg.ks:
        raise ConfigError("query.k", "sweep needs k entries")
    low = [k for k in cfg.ks if k < 1.0]
    if low:
        raise ConfigError("query.k", f"sweep needs k >= 1 (corridor hypothesis), got {low}; use 'expect' instead")
    os.makedirs(cfg.out_dir, exist_ok=True)
    rows = []
    for g in cfg.g_sweep:
        model = cfg.model.with_g(g)
        ens = _sample(cfg, model)
        w_summary = ens.summary()
        for q, est, row in _expect_rows(cfg, ens, g):
            scale = g ** (2.0 * q.k) if g != 0 else math.nan
            row.update({
                "normalized": est.value / scale,
                "normalized_stderr": est.mc_stderr / scale,
                "mean_w": w_summary.mean,
                "mean_w_stderr": w_summary.stderr,
                "w_inf": ens.w_inf,
            })
            rows.append(row)
    out = os.path.join(cfg.out_dir, "sweep_g.csv")
    write_csv(out, SWEEP_SCHEMA, SWEEP_COLUMNS, rows, cfg.hash)
    print(out)
    return 0


def cmd_validate(out_dir: str | None) -> int:
    from .validation import run_checks

    results = run_checks()
    report = {
        "passed": all(r.passed for r in results),
        "checks": [r.to_dict() for r in results],
    }
    text = json.dumps(report, indent=2)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "validate.json"), "w") as fh:
            fh.write(text + "\n")
    print(text)
    return 0 if report["passed"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bosonpow", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("sample", "expect", "sweep-g", "validate"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="INI configuration file")
        p.add_argument("--out", help="output directory (overrides output.directory)")
        p.add_argument("--seed", type=int, help="unsigned 64-bit seed (overrides sampler.seed)")
        p.add_argument("--chains", type=int, help="number of independent chains")
        if name == "expect":
            p.add_argument("--ensemble", help="ensemble CSV from 'sample' (default OUT/ensemble.csv)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "validate":
            return cmd_validate(args.out)
        if not args.config:
            raise ConfigError("--config", "a configuration file is required")
        cfg = load_config(args.config, seed=args.seed, chains=args.chains, out_dir=args.out)
        log.info("config %s", json.dumps(config_summary(cfg), default=str))
        if args.command == "sample":
            return cmd_sample(cfg)
        if args.command == "expect":
            return cmd_expect(cfg, args.ensemble)
        return cmd_sweep_g(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (BosonPowError, FloatingPointError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
