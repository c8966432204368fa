"""Physical model description: cutoff, dispersion, variant, coupling."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DomainError

__all__ = ["CutoffFunction", "DispersionSpec", "ModelSpec", "NELSON", "POLARON", "ZERO_MOMENTUM"]

NELSON = "nelson"
POLARON = "polaron"
ZERO_MOMENTUM = "zero_momentum"
VARIANTS = (NELSON, POLARON, ZERO_MOMENTUM)

GAUSSIAN = "gaussian"
SHARP_UV = "sharp_uv"
POINT = "point"

MASSIVE = "massive"
POLARON_UNIT = "polaron_unit"


@dataclass(frozen=True)
class CutoffFunction:
    """Radial form factor ``phihat(|k|)`` of the charge distribution.

    ``gaussian``: ``normalization * exp(-|k|^2 / (2 width^2))``.
    ``sharp_uv``: ``normalization`` on ``|k| <= width`` and zero outside; its
    position-space profile has sign-changing sinc tails, so it needs
    ``allow_nonpositive=True``.
    ``point``: constant ``normalization``; defaults to ``(2 pi)^(-d/2)``, the
    transform of a unit point charge.
    """

    kind: str = GAUSSIAN
    width: float = 1.0
    normalization: float | None = None
    d: int = 3
    allow_nonpositive: bool = False

    def __post_init__(self):
        if self.kind not in (GAUSSIAN, SHARP_UV, POINT):
            raise DomainError(f"unknown cutoff kind {self.kind!r}")
        if self.d not in (1, 3):
            raise DomainError(f"only d in {{1, 3}} has a radial reduction, got d={self.d}")
        if self.kind != POINT and not self.width > 0:
            raise DomainError("cutoff width must be > 0")
        if self.normalization is None:
            norm = (2.0 * math.pi) ** (-self.d / 2.0) if self.kind == POINT else 1.0
            object.__setattr__(self, "normalization", norm)
        if not self.normalization > 0:
            raise DomainError("cutoff normalization must be > 0")
        if self.kind == SHARP_UV and not self.allow_nonpositive:
            raise DomainError("sharp_uv cutoff has a sign-changing charge profile; pass allow_nonpositive=True")

    def phihat(self, k):
        k = np.asarray(k, dtype=float)
        if self.kind == GAUSSIAN:
            return self.normalization * np.exp(-(k * k) / (2.0 * self.width ** 2))
        if self.kind == SHARP_UV:
            return np.where(k <= self.width, self.normalization, 0.0)
        return np.full_like(k, self.normalization)

    @property
    def k_max(self) -> float:
        """Momentum beyond which ``phihat^2`` is negligible (below e^-80 relative)."""
        if self.kind == GAUSSIAN:
            return self.width * math.sqrt(80.0)
        if self.kind == SHARP_UV:
            return self.width
        return math.inf


@dataclass(frozen=True)
class DispersionSpec:
    kind: str = MASSIVE
    nu: float = 1.0

    def __post_init__(self):
        if self.kind == MASSIVE:
            if not self.nu > 0:
                raise DomainError("massive dispersion needs nu > 0; the massless model has no ground state")
        elif self.kind != POLARON_UNIT:
            raise DomainError(f"unknown dispersion kind {self.kind!r}")

    def omega(self, k):
        k = np.asarray(k, dtype=float)
        if self.kind == MASSIVE:
            return np.sqrt(k * k + self.nu ** 2)
        return np.ones_like(k)


@dataclass(frozen=True)
class ModelSpec:
    """One of the three model variants.

    ``omega0`` is the harmonic frequency of the external potential
    ``V(x) = omega0^2 x^2 / 2`` (Nelson and polaron); the zero-momentum
    variant has no external potential.
    """

    variant: str = NELSON
    cutoff: CutoffFunction = field(default_factory=CutoffFunction)
    dispersion: DispersionSpec = field(default_factory=DispersionSpec)
    g: float = 0.0
    omega0: float | None = 1.0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise DomainError(f"unknown model variant {self.variant!r}")
        if self.variant == POLARON:
            if self.dispersion.kind != POLARON_UNIT:
                raise DomainError("polaron variant uses the unit dispersion")
        elif self.dispersion.kind != MASSIVE:
            raise DomainError(f"{self.variant} variant needs a massive dispersion")
        if self.variant != POLARON and self.cutoff.kind == POINT:
            raise DomainError("point cutoff violates sqrt(omega)*phihat in L^2 for the Nelson model")
        if self.variant == ZERO_MOMENTUM:
            object.__setattr__(self, "omega0", None)
        elif self.omega0 is None or not self.omega0 > 0:
            raise DomainError("confined variants need a harmonic frequency omega0 > 0")
        if not math.isfinite(self.g):
            raise DomainError("coupling g must be finite")

    @property
    def d(self) -> int:
        return self.cutoff.d

    @property
    def temporal_decay(self) -> float:
        """Rate of the slowest exponential decay of the kernel in |t|."""
        return self.dispersion.nu if self.dispersion.kind == MASSIVE else 1.0

    def with_g(self, g: float) -> "ModelSpec":
        return ModelSpec(self.variant, self.cutoff, self.dispersion, float(g), self.omega0)

    def spectral_weight(self, k):
        """``rho(k)`` with ``kernel = 1/2 int rho(k) e^{-|t| Omega(k)} e^{ik.x} dk``."""
        k = np.asarray(k, dtype=float)
        ph2 = self.cutoff.phihat(k) ** 2
        if self.variant == POLARON:
            with np.errstate(divide="ignore"):
                return ph2 / (k * k)
        return ph2 / self.dispersion.omega(k)

    def rate(self, k):
        """Temporal decay rate ``Omega(k)`` of each mode."""
        return self.dispersion.omega(k)

    def canonical(self, include_g: bool = True) -> dict:
        data = asdict(self)
        if not include_g:
            data.pop("g")
        return data

    def hash(self, include_g: bool = True) -> str:
        blob = json.dumps(self.canonical(include_g), sort_keys=True, default=float).encode()
        return hashlib.sha256(blob).hexdigest()[:16]
