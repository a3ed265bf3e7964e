"""Generalized Gaussian noise, its scale conventions and the law of R = ||Z||_p.

Signal convention: unit-energy BPSK with c -> 2c - 1, so the all-zero codeword
is sent as the all-(-1) vector.  For every shape p the noise standard deviation
at a given Eb/N0 is ``sigma**2 = 1 / (2 * rate * 10**(EbN0_dB / 10))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .numerics import reg_inc_gamma_lower

__all__ = [
    "GgdParams",
    "SnrPoint",
    "alpha_from_sigma",
    "sigma_from_snr",
    "ggd_pdf",
    "ggd_sample",
    "radius_pdf",
    "radius_logpdf",
    "radius_cdf",
    "radius_tail",
    "radius_quantile",
]


def alpha_from_sigma(p: float, sigma: float) -> float:
    """Scale alpha of a GGD with shape ``p`` and standard deviation ``sigma``."""
    if not (p > 0 and sigma > 0):
        raise ValueError(f"p and sigma must be positive, got p={p!r}, sigma={sigma!r}")
    return sigma * math.exp(0.5 * (math.lgamma(1.0 / p) - math.lgamma(3.0 / p)))


@dataclass(frozen=True)
class GgdParams:
    """Shape ``p``, standard deviation ``sigma`` and block length ``n``.

    ``alpha`` is derived on construction and is not a constructor argument.
    """

    p: float
    sigma: float
    n: int = 1
    alpha: float = field(init=False)

    def __post_init__(self):
        if not (self.p > 0 and math.isfinite(self.p)):
            raise ValueError(f"shape p must be positive, got {self.p!r}")
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be positive, got {self.sigma!r}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "alpha", alpha_from_sigma(self.p, self.sigma))

    def with_n(self, n: int) -> "GgdParams":
        return GgdParams(self.p, self.sigma, n)


@dataclass(frozen=True)
class SnrPoint:
    eb_n0_db: float
    rate: float

    def __post_init__(self):
        if not (0 < self.rate <= 1):
            raise ValueError(f"rate must lie in (0, 1], got {self.rate!r}")

    @property
    def sigma(self) -> float:
        return sigma_from_snr(self)


def sigma_from_snr(point: SnrPoint) -> float:
    """Noise std-dev for unit-energy BPSK at ``point.eb_n0_db``."""
    if not (0 < point.rate <= 1):
        raise ValueError(f"rate must lie in (0, 1], got {point.rate!r}")
    return math.sqrt(1.0 / (2.0 * point.rate * 10.0 ** (point.eb_n0_db / 10.0)))


def ggd_pdf(z, params: GgdParams):
    a, p = params.alpha, params.p
    z = np.asarray(z, dtype=float)
    out = p / (2 * a * math.gamma(1.0 / p)) * np.exp(-(np.abs(z) / a) ** p)
    return float(out) if out.ndim == 0 else out


def ggd_sample(params: GgdParams, rng: np.random.Generator, size=None):
    """Draw GGD variates as ``b * X**(1/p)`` with ``X ~ Gamma(1/p, alpha**p)``."""
    p, a = params.p, params.alpha
    x = rng.standard_gamma(1.0 / p, size=size) * a ** p
    b = rng.integers(0, 2, size=size) * 2 - 1
    return b * x ** (1.0 / p)


def radius_logpdf(r, params: GgdParams):
    """log g(r) for R = ||Z||_p with Z i.i.d. GGD of length ``params.n``."""
    n, p, a = params.n, params.p, params.alpha
    r = np.asarray(r, dtype=float)
    const = math.log(p) - math.lgamma(n / p) - n * math.log(a)
    with np.errstate(divide="ignore"):
        out = const + (n - 1) * np.log(r) - (r / a) ** p
    out = np.where(r > 0, out, -np.inf if n > 1 else const)
    out = np.where(r < 0, -np.inf, out)
    return float(out) if out.ndim == 0 else out


def radius_pdf(r, params: GgdParams):
    out = np.exp(radius_logpdf(r, params))
    return float(out) if np.ndim(out) == 0 else out


def radius_cdf(r, params: GgdParams):
    """Pr(||Z||_p < r), the Gamma(n/p) law of ||Z||_p**p scaled by alpha**p."""
    r = np.maximum(np.asarray(r, dtype=float), 0.0)
    return reg_inc_gamma_lower((r / params.alpha) ** params.p, params.n / params.p)


def radius_tail(r, params: GgdParams):
    r = np.maximum(np.asarray(r, dtype=float), 0.0)
    out = special.gammaincc(params.n / params.p, (r / params.alpha) ** params.p)
    return float(out) if out.ndim == 0 else out


def radius_quantile(tail_mass: float, params: GgdParams) -> float:
    """Radius r with Pr(R >= r) = ``tail_mass``."""
    if not (0 < tail_mass < 1):
        raise ValueError(f"tail_mass must lie in (0, 1), got {tail_mass!r}")
    x = special.gammainccinv(params.n / params.p, tail_mass)
    return float(params.alpha * x ** (1.0 / params.p))
