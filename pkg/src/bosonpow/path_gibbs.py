"""Finite-window sampling of the path-space Gibbs measure.

The reference law is either the stationary Ornstein-Uhlenbeck process of the
harmonic ground state (Nelson and polaron variants) or two-sided Brownian
motion pinned at ``B_0 = 0`` (zero total momentum).  The target reweights it
by ``exp((g^2/2) int int K(X_t - X_s, t - s) ds dt)`` over ``[-T, T]^2``; each
retained state records the quadrant integral ``W_T``.
"""
from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _sampler
from .diagnostics import batch_means
from .errors import DomainError
from .model import ZERO_MOMENTUM, ModelSpec
from .pair_potential import (
    DiscretePath,
    KernelTable,
    double_time_integral,
    trapezoid_weights,
    w_certificate,
    w_infinity,
)

__all__ = [
    "ReferenceProcess",
    "MCMCConfig",
    "PathEnsemble",
    "reference_for",
    "sample_reference",
    "sample_reference_batch",
    "build_table",
    "run_gibbs_chain",
    "run_chains",
    "rho_beta",
    "importance_sampling_mean_w",
]

log = logging.getLogger(__name__)

GROUND_STATE_DIFFUSION = "ground_state_diffusion"
TWO_SIDED_BROWNIAN = "two_sided_brownian"


@dataclass(frozen=True)
class ReferenceProcess:
    """Gaussian reference law of the path measure.

    ``ground_state_diffusion``: stationary OU with generator of the harmonic
    ground-state transform, covariance ``exp(-omega0 |t-s|) / (2 omega0)``
    per coordinate.  ``two_sided_brownian``: ``B_0 = 0``, ``Var B_t = |t|``.
    """

    kind: str = GROUND_STATE_DIFFUSION
    omega0: float = 1.0

    def __post_init__(self):
        if self.kind == GROUND_STATE_DIFFUSION:
            if not self.omega0 > 0:
                raise DomainError("ground-state diffusion needs omega0 > 0")
        elif self.kind != TWO_SIDED_BROWNIAN:
            raise DomainError(f"unknown reference process {self.kind!r}")

    def conditionals(self, n: int, dt: float):
        """Per-site Gaussian conditionals given the neighbours.

        Returns ``(coef_l, coef_r, sd, active)`` so that
        ``X_i | rest ~ N(coef_l X_{i-1} + coef_r X_{i+1}, sd^2)``.
        """
        coef_l = np.zeros(n)
        coef_r = np.zeros(n)
        sd = np.zeros(n)
        active = np.ones(n, dtype=np.bool_)
        if self.kind == GROUND_STATE_DIFFUSION:
            a = math.exp(-self.omega0 * dt)
            v = -math.expm1(-2.0 * self.omega0 * dt) / (2.0 * self.omega0)
            coef_l[1:-1] = coef_r[1:-1] = a / (1.0 + a * a)
            sd[1:-1] = math.sqrt(v / (1.0 + a * a))
            coef_r[0] = a
            coef_l[-1] = a
            sd[0] = sd[-1] = math.sqrt(v)
        else:
            coef_l[1:-1] = coef_r[1:-1] = 0.5
            sd[1:-1] = math.sqrt(0.5 * dt)
            coef_r[0] = 1.0
            coef_l[-1] = 1.0
            sd[0] = sd[-1] = math.sqrt(dt)
            active[(n - 1) // 2] = False
        return coef_l, coef_r, sd, active


def reference_for(model: ModelSpec) -> ReferenceProcess:
    if model.variant == ZERO_MOMENTUM:
        return ReferenceProcess(TWO_SIDED_BROWNIAN)
    return ReferenceProcess(GROUND_STATE_DIFFUSION, model.omega0)


def sample_reference_batch(proc: ReferenceProcess, dt: float, T: float, d: int, size: int, rng) -> np.ndarray:
    """``size`` exact reference paths on the grid, shape ``(size, n, d)``."""
    rng = np.random.default_rng(rng)
    n = int(round(2.0 * T / dt)) + 1
    z = rng.standard_normal((size, n, d))
    if proc.kind == GROUND_STATE_DIFFUSION:
        a = math.exp(-proc.omega0 * dt)
        step_sd = math.sqrt(-math.expm1(-2.0 * proc.omega0 * dt) / (2.0 * proc.omega0))
        x = np.empty_like(z)
        x[:, 0] = z[:, 0] / math.sqrt(2.0 * proc.omega0)
        for i in range(1, n):
            x[:, i] = a * x[:, i - 1] + step_sd * z[:, i]
        return x
    o = (n - 1) // 2
    steps = math.sqrt(dt) * z
    x = np.zeros_like(z)
    x[:, o + 1 :] = np.cumsum(steps[:, o + 1 :], axis=1)
    x[:, :o] = np.cumsum(steps[:, :o][:, ::-1], axis=1)[:, ::-1]
    return x


def sample_reference(proc: ReferenceProcess, dt: float, T: float, d: int, rng) -> DiscretePath:
    """One exact reference path; no discretization bias at grid points."""
    return DiscretePath(dt, T, sample_reference_batch(proc, dt, T, d, 1, rng)[0])


@dataclass
class MCMCConfig:
    """Sampler settings.

    ``thin = 0`` thins by the integrated autocorrelation time of ``W_T``.
    ``global_every = 5`` makes every fifth sweep a block of whole-path moves,
    a 4:1 mix of local to global sweeps.  ``frozen`` pins the path at the
    origin (fixed-source limit).
    """

    T: float = 8.0
    dt: float = 0.05
    n_sweeps: int = 2000
    burn_in: int = 10_000
    thin: int = 0
    local_scale: float = 0.5
    global_scale: float = 0.2
    global_moves: int = 4
    global_every: int = 5
    tune: bool = True
    tune_every: int = 50
    target_acceptance: tuple[float, float] = (0.3, 0.5)
    recompute_every: int = 100
    frozen: bool = False
    r_max: float | None = None
    h_r: float = 0.02

    def __post_init__(self):
        if not (self.T > 0 and self.dt > 0):
            raise DomainError("T and dt must be positive")
        steps = 2.0 * self.T / self.dt
        if abs(steps - round(steps)) > 1e-9 * steps or round(steps) % 2:
            raise DomainError("T must be an integer multiple of dt")
        if self.n_sweeps < 1 or self.burn_in < 0 or self.thin < 0:
            raise DomainError("n_sweeps >= 1, burn_in >= 0 and thin >= 0 required")
        for s in (self.local_scale, self.global_scale):
            if not 0.0 < s <= 1.0:
                raise DomainError("proposal scales must lie in (0, 1]")

    @property
    def n(self) -> int:
        return int(round(2.0 * self.T / self.dt)) + 1

    @classmethod
    def default_for(cls, model: ModelSpec, **kw) -> "MCMCConfig":
        dt = kw.pop("dt", 0.05)
        T = kw.pop("T", None)
        if T is None:
            # 8 decay times of the kernel, rounded up to the time lattice
            T = math.ceil(round(8.0 / model.temporal_decay / dt, 9)) * dt
        return cls(T=T, dt=dt, **kw)


@dataclass
class PathEnsemble:
    """Retained ``W_T`` samples of one or more chains plus diagnostics."""

    w: np.ndarray
    chain_ids: np.ndarray
    model: ModelSpec
    T: float
    dt: float
    w_inf: float
    eps: float
    diagnostics: list[dict] = field(default_factory=list)
    seed: int | None = None
    final_paths: list[np.ndarray] = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float)
        self.chain_ids = np.asarray(self.chain_ids, dtype=int)
        if len(self.w) == 0:
            raise DomainError("ensemble is empty")

    def __len__(self):
        return len(self.w)

    @property
    def w_range_violations(self) -> int:
        return int(np.sum((self.w < -self.eps) | (self.w > self.w_inf + self.eps)))

    def summary(self):
        return batch_means(self.w, self.chain_ids)

    @classmethod
    def degenerate(cls, w_value: float, model: ModelSpec, n: int = 1, w_inf: float | None = None) -> "PathEnsemble":
        """Ensemble with a deterministic ``W``, e.g. the fixed-source limit."""
        w_inf = float(w_value) if w_inf is None else w_inf
        return cls(np.full(n, float(w_value)), np.zeros(n, dtype=int), model, math.inf, 0.0, w_inf, 0.0,
                   [{"kind": "degenerate"}])

    @classmethod
    def frozen(cls, model: ModelSpec) -> "PathEnsemble":
        """Particle pinned at the origin for all times: ``W = W_inf`` exactly."""
        return cls.degenerate(w_infinity(model), model)

    @classmethod
    def merge(cls, parts: list["PathEnsemble"]) -> "PathEnsemble":
        first = parts[0]
        ids, offset = [], 0
        for p in parts:
            if p.model != first.model or p.T != first.T or p.dt != first.dt:
                raise DomainError("cannot merge ensembles of different models or windows")
            ids.append(p.chain_ids + offset)
            offset = int(ids[-1].max()) + 1
        return cls(np.concatenate([p.w for p in parts]), np.concatenate(ids), first.model, first.T, first.dt,
                   first.w_inf, max(p.eps for p in parts), [dg for p in parts for dg in p.diagnostics],
                   first.seed, [fp for p in parts for fp in p.final_paths])

    def metadata(self, extra: dict | None = None) -> dict:
        meta = {
            "format": "bosonpow-ensemble/1",
            "model": self.model.canonical(),
            "model_hash": self.model.hash(),
            "T": self.T,
            "dt": self.dt,
            "w_inf": self.w_inf,
            "eps": self.eps,
            "seed": self.seed,
            "n_samples": len(self.w),
            "diagnostics": self.diagnostics,
        }
        if extra:
            meta.update(extra)
        return meta

    def save(self, csv_path, extra: dict | None = None) -> None:
        """Write ``chain,w`` rows plus a ``.meta.json`` sidecar."""
        with open(csv_path, "w") as fh:
            fh.write("chain,w\n")
            for c, w in zip(self.chain_ids, self.w):
                fh.write(f"{int(c)},{float(w)!r}\n")
        with open(f"{csv_path}.meta.json", "w") as fh:
            json.dump(self.metadata(extra), fh, indent=2, sort_keys=True, default=_json_default)

    @classmethod
    def load(cls, csv_path) -> tuple["PathEnsemble", dict]:
        data = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
        with open(f"{csv_path}.meta.json") as fh:
            meta = json.load(fh)
        model = _model_from_dict(meta["model"])
        T = meta["T"] if meta["T"] is not None else math.inf
        ens = cls(data[:, 1], data[:, 0].astype(int), model, float(T), meta["dt"], meta["w_inf"], meta["eps"],
                  meta["diagnostics"], meta.get("seed"))
        return ens, meta


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    raise TypeError(type(obj).__name__)


def _model_from_dict(data: dict) -> ModelSpec:
    from .model import CutoffFunction, DispersionSpec

    return ModelSpec(data["variant"], CutoffFunction(**data["cutoff"]), DispersionSpec(**data["dispersion"]),
                     data["g"], data["omega0"])


def _default_r_max(proc: ReferenceProcess, T: float, d: int) -> float:
    if proc.kind == GROUND_STATE_DIFFUSION:
        spread = 1.0 / math.sqrt(2.0 * proc.omega0)
        return 2.0 * 7.0 * spread * math.sqrt(d)
    return 2.0 * 6.0 * math.sqrt(T * d)


def build_table(model: ModelSpec, mcmc: MCMCConfig, r_max: float) -> KernelTable:
    return KernelTable.build(model, mcmc.dt, mcmc.n, r_max=r_max, h=mcmc.h_r)


class _Chain:
    """Mutable state of a single chain; not shared between threads."""

    def __init__(self, model, proc, mcmc, rng, table=None):
        self.model = model
        self.proc = proc
        self.mcmc = mcmc
        self.rng = rng
        self.g2 = float(model.g) * float(model.g)  # inf rather than OverflowError
        self.rebuilds = 0
        n, d = mcmc.n, model.d
        self.w = trapezoid_weights(n, mcmc.dt)
        o = (n - 1) // 2
        self.wl = trapezoid_weights(n, mcmc.dt, 0, o)
        self.wr = trapezoid_weights(n, mcmc.dt, o, n - 1)
        self.cond = proc.conditionals(n, mcmc.dt)
        self.r_max = mcmc.r_max or _default_r_max(proc, mcmc.T, d)
        self.table = table if table is not None else build_table(model, mcmc, self.r_max)
        self.r_max = max(self.r_max, self.table.r_limit)
        if mcmc.frozen:
            self.X = np.zeros((n, d))
        else:
            self.X = sample_reference_batch(proc, mcmc.dt, mcmc.T, d, 1, rng)[0]
            while _sampler.batch_max_distance(self.X[None]) > self.table.r_limit:
                self._grow_table()
        self.X = np.ascontiguousarray(self.X)
        # S, W, local acc, local prop, global acc, global prop
        self.state = np.zeros(6)
        self.recompute()
        self.local_beta = mcmc.local_scale
        self.global_beta = mcmc.global_scale
        self.max_drift = 0.0
        self._bufs = (np.empty(n), np.empty(n), np.empty(d), np.empty((n, d)))

    def _grow_table(self):
        self.r_max = 2.0 * self.table.r_limit
        log.info("enlarging kernel table to r_max=%.3g", self.r_max)
        self.table = build_table(self.model, self.mcmc, self.r_max)
        self.rebuilds += 1

    def recompute(self):
        s, q = _sampler.batch_integrals(self.table.values, self.table.h, self.X[None], self.w, self.wl, self.wr)
        drift = abs(self.state[1] - q[0]) if self.state[3] > 0 else 0.0
        self.state[0] = s[0]
        self.state[1] = q[0]
        exponent = 0.5 * self.g2 * s[0]
        if not math.isfinite(exponent):
            raise FloatingPointError(
                f"Gibbs weight exp({exponent:.3g}) is not representable; use a smaller coupling g or window T")
        return drift

    def local(self):
        n, d = self.X.shape
        normals = self.rng.standard_normal((n, d))
        log_u = np.log(self.rng.random(n))
        new_row, old_row, x_new, _ = self._bufs
        start = 0
        coef_l, coef_r, sd, active = self.cond
        while True:
            stop = _sampler.local_sweep(self.table.values, self.table.h, self.table.r_limit, self.X, self.w,
                                        self.wl, self.wr, coef_l, coef_r, sd, active, self.local_beta, self.g2,
                                        normals, log_u, start, self.state, new_row, old_row, x_new)
            if stop < 0:
                return
            self._grow_table()
            self.recompute()
            start = stop

    def global_block(self):
        for _ in range(self.mcmc.global_moves):
            fresh = sample_reference_batch(self.proc, self.mcmc.dt, self.mcmc.T, self.model.d, 1, self.rng)[0]
            log_u = math.log(self.rng.random())
            while _sampler.global_move(self.table.values, self.table.h, self.table.r_limit, self.X, fresh,
                                       self.w, self.wl, self.wr, self.global_beta, self.g2, log_u,
                                       self.state, self._bufs[3]):
                self._grow_table()
                self.recompute()

    def sweep(self, index):
        if self.mcmc.frozen:
            return
        if self.mcmc.global_every and index % self.mcmc.global_every == self.mcmc.global_every - 1:
            self.global_block()
        else:
            self.local()

    def tune(self, acc_local, acc_global):
        lo, hi = self.mcmc.target_acceptance
        if acc_local is not None:
            if acc_local < lo:
                self.local_beta *= 0.7
            elif acc_local > hi:
                self.local_beta = min(1.0, self.local_beta * 1.3)
        if acc_global is not None:
            if acc_global < lo:
                self.global_beta *= 0.7
            elif acc_global > hi:
                self.global_beta = min(1.0, self.global_beta * 1.3)


def _rate(state, before, acc_idx, prop_idx):
    prop = state[prop_idx] - before[prop_idx]
    return (state[acc_idx] - before[acc_idx]) / prop if prop > 0 else None


def run_gibbs_chain(model: ModelSpec, proc: ReferenceProcess, mcmc: MCMCConfig, rng, table=None,
                    chain_id: int = 0) -> PathEnsemble:
    """Run one Metropolis-Hastings chain and return its retained ``W_T`` samples.

    Raises
    ------
    FloatingPointError
        If the Gibbs weight overflows (reduce ``g`` or ``T``).
    DivergentIntegralError
        If ``W_inf`` is infinite for the model.
    """
    rng = np.random.default_rng(rng)
    w_inf = w_infinity(model)
    if not math.isfinite(w_inf):
        raise DomainError("W_inf must be finite")
    chain = _Chain(model, proc, mcmc, rng, table)

    before = chain.state.copy()
    for s in range(mcmc.burn_in):
        chain.sweep(s)
        if (s + 1) % mcmc.recompute_every == 0:
            chain.max_drift = max(chain.max_drift, chain.recompute())
        if mcmc.tune and (s + 1) % mcmc.tune_every == 0:
            chain.tune(_rate(chain.state, before, 2, 3), _rate(chain.state, before, 4, 5))
            before = chain.state.copy()

    start = chain.state.copy()
    trace = np.empty(mcmc.n_sweeps)
    for s in range(mcmc.n_sweeps):
        chain.sweep(mcmc.burn_in + s)
        if (s + 1) % mcmc.recompute_every == 0:
            chain.max_drift = max(chain.max_drift, chain.recompute())
        trace[s] = chain.state[1]

    bm = batch_means(trace)
    thin = mcmc.thin or max(1, int(math.ceil(bm.tau_int)))
    kept = trace[thin - 1 :: thin]
    acc_local = _rate(chain.state, start, 2, 3)
    acc_global = _rate(chain.state, start, 4, 5)
    warnings_ = []
    for name, acc in (("local", acc_local), ("global", acc_global)):
        if acc is not None and not 0.05 <= acc <= 0.95:
            warnings_.append(f"{name} acceptance {acc:.3f} outside [0.05, 0.95]")
            log.warning("chain %d: %s", chain_id, warnings_[-1])
    eps = w_certificate(chain.table, mcmc.T)
    diag = {
        "chain": chain_id,
        "acceptance_local": acc_local,
        "acceptance_global": acc_global,
        "local_scale": chain.local_beta,
        "global_scale": chain.global_beta,
        "tau_int": bm.tau_int,
        "ess": bm.ess,
        "thin": thin,
        "n_retained": len(kept),
        "mean_w": bm.mean,
        "stderr_w": bm.stderr,
        "max_recompute_drift": chain.max_drift,
        "table_rebuilds": chain.rebuilds,
        "table_error": chain.table.error,
        "eps": eps,
        "warnings": warnings_,
    }
    ens = PathEnsemble(kept, np.full(len(kept), chain_id), model, mcmc.T, mcmc.dt, w_inf, eps, [diag],
                       final_paths=[chain.X.copy()])
    bad = ens.w_range_violations
    if bad:
        raise AssertionError(f"{bad} W samples outside [0, W_inf + eps]; eps={eps:.3g}")
    return ens


def _run_one(args):
    model, proc, mcmc, seed_seq, chain_id = args
    return run_gibbs_chain(model, proc, mcmc, np.random.default_rng(seed_seq), chain_id=chain_id)


def run_chains(model: ModelSpec, mcmc: MCMCConfig, seed: int, n_chains: int = 1,
               proc: ReferenceProcess | None = None, workers: int = 1) -> PathEnsemble:
    """Independent chains on spawned seed streams, merged by concatenation.

    Results depend only on ``seed`` and ``n_chains``, not on ``workers``.
    """
    proc = proc or reference_for(model)
    seqs = np.random.SeedSequence(seed).spawn(n_chains)
    jobs = [(model, proc, mcmc, s, i) for i, s in enumerate(seqs)]
    if workers > 1 and n_chains > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_one, jobs))
    else:
        parts = [_run_one(j) for j in jobs]
    ens = PathEnsemble.merge(parts)
    ens.seed = seed
    return ens


def rho_beta(ensemble: PathEnsemble, g: float, beta: complex) -> tuple[complex, float]:
    """Monte Carlo ``E[exp(-g^2 (1 - e^{-beta}) W)]`` and its batch-means stderr."""
    factor = g * g * (1.0 - np.exp(-complex(beta)))
    values = np.exp(-factor * ensemble.w)
    if np.isrealobj(values) or abs(np.imag(factor)) == 0.0:
        values = values.real
        bm = batch_means(values, ensemble.chain_ids)
        return complex(bm.mean), bm.stderr
    re = batch_means(values.real, ensemble.chain_ids)
    im = batch_means(values.imag, ensemble.chain_ids)
    return complex(re.mean, im.mean), math.hypot(re.stderr, im.stderr)


def importance_sampling_mean_w(model: ModelSpec, mcmc: MCMCConfig, n_paths: int, rng,
                               proc: ReferenceProcess | None = None, table=None) -> tuple[float, float]:
    """Reweighted reference estimate ``E0[W e^S] / E0[e^S]`` with a delta-method stderr.

    Independent of the Markov chain: plain reference draws weighted by the
    Gibbs factor ``S = (g^2/2) sum w_a w_b K_ab``.
    """
    proc = proc or reference_for(model)
    rng = np.random.default_rng(rng)
    n, d = mcmc.n, model.d
    paths = sample_reference_batch(proc, mcmc.dt, mcmc.T, d, n_paths, rng)
    r_max = max(mcmc.r_max or 0.0, 1.05 * _sampler.batch_max_distance(paths), 1.0)
    table = table if table is not None and table.r_limit >= r_max else build_table(model, mcmc, r_max)
    w = trapezoid_weights(n, mcmc.dt)
    o = (n - 1) // 2
    s, q = _sampler.batch_integrals(table.values, table.h, paths, w, trapezoid_weights(n, mcmc.dt, 0, o),
                                    trapezoid_weights(n, mcmc.dt, o, n - 1))
    log_wt = 0.5 * model.g ** 2 * s
    wt = np.exp(log_wt - log_wt.max())
    wt /= wt.mean()
    est = float(np.mean(wt * q))
    resid = wt * (q - est)
    stderr = float(np.sqrt(np.mean(resid ** 2) / n_paths))
    return est, stderr


def frozen_w(model: ModelSpec, mcmc: MCMCConfig) -> float:
    """Discrete ``W_T`` of the path pinned at the origin."""
    table = build_table(model, mcmc, 1.0)
    return double_time_integral(table, DiscretePath.constant(mcmc.dt, mcmc.T, model.d))


__all__ += ["frozen_w"]
