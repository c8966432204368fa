"""Run configuration: INI file plus environment overrides.

Grammar: sections ``[model]``, ``[sampler]``, ``[query]``, ``[output]``;
``key = value`` lines; lists are comma separated; ``#`` and ``;`` start
comments.  Any key can be overridden by ``BOSONPOW_<SECTION>__<KEY>``.

Keys
----
model:   variant (nelson | polaron | zero_momentum), d (1 | 3), nu (massive
         variants, required), cutoff (gaussian | sharp_uv | point),
         cutoff_width, cutoff_normalization, omega0, g, g_sweep
sampler: T, dt, chains, sweeps, burn_in, thin, seed, frozen, workers,
         local_scale, global_scale
query:   k (list of reals), psi (``fractional:ALPHA``, ``log_gamma`` or
         ``tabulated:Y1/W1 Y2/W2 ...``, several separated by ``|``), a
output:  directory
"""
from __future__ import annotations

import configparser
import hashlib
import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field

from .bernstein import BernsteinSpec, fractional_power_spec, log_gamma_spec, tabulated_spec
from .errors import BosonPowError, ConfigError
from .model import MASSIVE, POLARON, POLARON_UNIT, CutoffFunction, DispersionSpec, ModelSpec
from .path_gibbs import MCMCConfig

__all__ = ["RunConfig", "load_config", "parse_config", "ENV_PREFIX"]

log = logging.getLogger(__name__)

ENV_PREFIX = "BOSONPOW_"

KNOWN = {
    "model": {"variant", "d", "nu", "cutoff", "cutoff_width", "cutoff_normalization", "omega0", "g", "g_sweep"},
    "sampler": {"t", "dt", "chains", "sweeps", "burn_in", "thin", "seed", "frozen", "workers",
                "local_scale", "global_scale"},
    "query": {"k", "psi", "a"},
    "output": {"directory"},
}


@dataclass
class RunConfig:
    model: ModelSpec
    g_sweep: list[float]
    mcmc: MCMCConfig
    chains: int
    seed: int
    workers: int
    ks: list[float]
    psis: list[BernsteinSpec]
    psi_texts: list[str]
    a: float
    out_dir: str
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def hash(self) -> str:
        """Hash of every compute-relevant setting; the output directory is excluded."""
        data = {s: dict(v) for s, v in self.raw.items() if s != "output"}
        data["sampler"]["seed"] = str(self.seed)
        data["sampler"]["chains"] = str(self.chains)
        data["sampler"].pop("workers", None)
        blob = json.dumps(data, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _get(raw, section, key, conv, default=None, required=False):
    text = raw.get(section, {}).get(key)
    name = f"{section}.{key}"
    if text is None or text == "":
        if required:
            raise ConfigError(name, "missing required key")
        return default
    try:
        return conv(text)
    except (ValueError, TypeError) as exc:
        raise ConfigError(name, f"cannot parse {text!r}: {exc}") from None


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _parse_psi(text: str) -> BernsteinSpec:
    kind, _, arg = text.strip().partition(":")
    kind = kind.strip().lower()
    if kind == "fractional":
        return fractional_power_spec(float(arg))
    if kind == "log_gamma":
        return log_gamma_spec()
    if kind == "tabulated":
        nodes = []
        for item in arg.split():
            y, w = item.split("/")
            nodes.append((float(y), float(w)))
        return tabulated_spec(nodes)
    raise ValueError(f"unknown psi kind {kind!r}")


def _read(path) -> dict:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    if path is not None:
        with open(path) as fh:
            parser.read_file(fh)
    raw = {s: dict(parser[s]) for s in parser.sections()}
    for s, keys in raw.items():
        if s not in KNOWN:
            raise ConfigError(s, "unknown section")
        for k in keys:
            if k not in KNOWN[s]:
                raise ConfigError(f"{s}.{k}", "unknown key")
    return raw


def _apply_env(raw: dict, env) -> dict:
    for name, value in env.items():
        if not name.startswith(ENV_PREFIX):
            continue
        section, sep, key = name[len(ENV_PREFIX):].lower().partition("__")
        if not sep:
            continue
        if section not in KNOWN or key not in KNOWN[section]:
            raise ConfigError(f"{section}.{key}", f"unknown key in environment variable {name}")
        raw.setdefault(section, {})[key] = value
    return raw


def parse_config(raw: dict, seed: int | None = None, chains: int | None = None,
                 out_dir: str | None = None) -> RunConfig:
    """Validate every field and build the run configuration.

    Raises
    ------
    ConfigError
        Naming the first offending ``section.key``.
    """
    raw = {s: dict(v) for s, v in raw.items()}
    for s in KNOWN:
        raw.setdefault(s, {})
    variant = _get(raw, "model", "variant", str, "nelson").strip().lower()
    d = _get(raw, "model", "d", int, 3)
    if variant == POLARON:
        dispersion = DispersionSpec(POLARON_UNIT)
    else:
        nu = _get(raw, "model", "nu", float, required=True)
        try:
            dispersion = DispersionSpec(MASSIVE, nu)
        except BosonPowError as exc:
            raise ConfigError("model.nu", str(exc)) from None
    try:
        cutoff = CutoffFunction(
            _get(raw, "model", "cutoff", str, "gaussian").strip().lower(),
            _get(raw, "model", "cutoff_width", float, math.sqrt(2.0)),
            _get(raw, "model", "cutoff_normalization", float),
            d,
            allow_nonpositive=True,
        )
    except BosonPowError as exc:
        raise ConfigError("model.cutoff", str(exc)) from None
    try:
        model = ModelSpec(variant, cutoff, dispersion, _get(raw, "model", "g", float, 0.0),
                          _get(raw, "model", "omega0", float, 1.0))
    except BosonPowError as exc:
        raise ConfigError("model.variant", str(exc)) from None
    g_sweep = _get(raw, "model", "g_sweep", _float_list, [])

    try:
        mcmc = MCMCConfig.default_for(
            model,
            **{k: v for k, v in {
                "T": _get(raw, "sampler", "t", float),
                "dt": _get(raw, "sampler", "dt", float),
                "n_sweeps": _get(raw, "sampler", "sweeps", int),
                "burn_in": _get(raw, "sampler", "burn_in", int),
                "thin": _get(raw, "sampler", "thin", int),
                "frozen": _get(raw, "sampler", "frozen", _bool),
                "local_scale": _get(raw, "sampler", "local_scale", float),
                "global_scale": _get(raw, "sampler", "global_scale", float),
            }.items() if v is not None},
        )
    except BosonPowError as exc:
        raise ConfigError("sampler", str(exc)) from None
    seed = seed if seed is not None else _get(raw, "sampler", "seed", int, 0)
    chains = chains if chains is not None else _get(raw, "sampler", "chains", int, 1)
    if not 0 <= seed < 2 ** 64:
        raise ConfigError("sampler.seed", "seed must be an unsigned 64-bit integer")
    if chains < 1:
        raise ConfigError("sampler.chains", "need at least one chain")
    workers = _get(raw, "sampler", "workers", int, 1)

    ks = _get(raw, "query", "k", _float_list, [])
    psi_texts = [p.strip() for p in raw["query"].get("psi", "").split("|") if p.strip()]
    psis = []
    for text in psi_texts:
        try:
            psis.append(_parse_psi(text))
        except (ValueError, BosonPowError) as exc:
            raise ConfigError("query.psi", f"{text!r}: {exc}") from None
    a = _get(raw, "query", "a", float, 0.0)
    if a < 0:
        raise ConfigError("query.a", "must be >= 0")
    out = out_dir or _get(raw, "output", "directory", str, "out")
    raw["sampler"]["seed"] = str(seed)
    raw["sampler"]["chains"] = str(chains)
    return RunConfig(model, g_sweep, mcmc, chains, seed, workers, ks, psis, psi_texts, a, out, raw)


def load_config(path=None, env=None, **overrides) -> RunConfig:
    raw = _apply_env(_read(path), os.environ if env is None else env)
    return parse_config(raw, **overrides)


def config_summary(cfg: RunConfig) -> dict:
    return {"model": cfg.model.canonical(), "mcmc": asdict(cfg.mcmc), "chains": cfg.chains, "seed": cfg.seed,
            "config_hash": cfg.hash}
