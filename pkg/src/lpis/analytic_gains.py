"""Asymptotic importance-sampling gain of the shell estimator.

With the optimal shell pmf the IS variance per sample is
``(int sqrt(theta) g dr)**2 - P_e**2``, so the gain over plain MC is
approximately ``gamma = P_e / (int sqrt(theta(r)) g(r) dr)**2`` once P_e is
small.  At high SNR the error ratio is dominated by the nearest competitors,
``theta(r) ~ A_dmin * Pr(Delta_dmin < 0 | ||Z||_p = r)``, and P_e by
``A_dmin * Pr(Delta_dmin < 0)``.  Since theta is a probability, sqrt(theta) is
capped at 1 inside the integral.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special

from .analytic_bounds import (
    conditional_pep_l1,
    conditional_pep_l1_batch,
    pep_laplace,
    pep_quadrature,
)
from .codes import LinearCode
from .decoders import TIE_TOLERANCE
from .ggd_channel import GgdParams, radius_logpdf, radius_tail
from .lp_geometry import point_on_sphere, sample_lp_direction
from .numerics import adaptive_quadrature, bisect_root, q_function
from .rng import make_rng

__all__ = [
    "GainQuery",
    "GainEstimate",
    "asym_error_ratio_l1",
    "asym_is_gain_l1",
    "asym_is_gain_l2",
    "asym_is_gain_general",
    "predicted_gain",
]


@dataclass(frozen=True)
class GainQuery:
    code: LinearCode
    p: float
    sigma: float

    def __post_init__(self):
        if self.code.d_min is None or self.code.weight_distribution is None:
            raise ValueError(f"{self.code.name}: d_min and A_dmin are needed for gain prediction")
        if not (self.p > 0 and self.sigma > 0):
            raise ValueError("p and sigma must be positive")

    @property
    def n(self) -> int:
        return self.code.n

    @property
    def d(self) -> int:
        return self.code.d_min

    @property
    def a_dmin(self) -> int:
        return self.code.a_dmin()

    @property
    def params(self) -> GgdParams:
        return GgdParams(self.p, self.sigma, self.code.n)


@dataclass(frozen=True)
class GainEstimate:
    estimate: float
    standard_error: float
    wide: bool = False

    def __iter__(self):
        return iter((self.estimate, self.standard_error))


def asym_error_ratio_l1(r: float, q: GainQuery) -> float:
    """A_dmin times the conditional PEP on the L_1 sphere (outer sum from d0 = 0)."""
    if q.p != 1:
        raise ValueError("asym_error_ratio_l1 needs p = 1")
    if r < q.d:
        return 0.0
    return q.a_dmin * conditional_pep_l1(q.n, q.d, r, form="series", d0_start=0)


def _capped_root_integral(theta, params: GgdParams, lo: float, breakpoints):
    """int_lo^inf min(1, sqrt(theta(r))) g(r) dr, split at the saturation point."""
    def integrand(r):
        th = theta(r)
        with np.errstate(divide="ignore"):
            return np.exp(np.minimum(0.5 * np.log(th), 0.0) + radius_logpdf(r, params))

    return adaptive_quadrature(integrand, lo, math.inf, rel_tol=1e-10,
                               breakpoints=sorted(b for b in breakpoints if b > lo))


def _saturation_radius(theta, lo, hi_limit=1e4):
    """Radius where theta first reaches 1, if it does."""
    hi = 2 * lo
    while float(theta(np.array([hi]))[0]) < 1.0:
        hi *= 2
        if hi > hi_limit:
            return None
    return bisect_root(lambda r: float(theta(np.array([r]))[0]) - 1.0, lo, hi, tol=1e-12)


def asym_is_gain_l1(q: GainQuery) -> float:
    """Predicted gamma for Laplace noise from the closed-form conditional PEP."""
    if q.p != 1:
        raise ValueError("asym_is_gain_l1 needs p = 1")
    n, d, a = q.n, q.d, q.a_dmin
    pe = a * pep_laplace(d, q.sigma)

    def theta(r):
        return a * conditional_pep_l1_batch(n, d, r)

    cross = _saturation_radius(theta, float(d))
    points = list(range(d + 1, 4 * n + 2 * d)) + ([cross] if cross else [])
    denom = _capped_root_integral(theta, q.params, float(d), points)
    return float(pe / denom ** 2)


def asym_is_gain_l2(q: GainQuery) -> float:
    """Predicted gamma for Gaussian noise; theta = (A_dmin/2) I_{1-d/r^2}((n-1)/2, 1/2)."""
    if q.p != 2:
        raise ValueError("asym_is_gain_l2 needs p = 2")
    n, d, a = q.n, q.d, q.a_dmin
    pe = a * q_function(math.sqrt(d) / q.sigma)
    lo = math.sqrt(d)

    def theta(r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        x = np.clip(1.0 - d / (r * r), 0.0, 1.0)
        if n == 1:
            return np.where(r > lo, a * 0.5, 0.0)
        return a * 0.5 * special.betainc((n - 1) / 2.0, 0.5, x)

    cross = _saturation_radius(theta, lo) if a > 2 else None
    denom = _capped_root_integral(theta, q.params, lo, [cross] if cross else [])
    return float(pe / denom ** 2)


def _conditional_error_mc(q: GainQuery, radii, samples: int, rng):
    """Per-sample error indicators at every radius with common random numbers.

    Given ||Z||_p = r, the mass S of the first d coordinates in ||Z||_p**p / r**p
    is Beta(d/p, (n-d)/p) and independent of their direction on the d-dim L_p
    sphere.  An error needs ||z_{1:d}||_p > d**(1/p), i.e. S > d / r**p, so S is
    drawn from its truncation above that point and the truncation mass is
    carried as a factor.  Returns ``(mass, hits)`` with shapes (R,), (R, M).
    """
    n, d, p = q.n, q.d, q.p
    a_par, b_par = d / p, (n - d) / p
    u = rng.random(samples)
    w, signs = sample_lp_direction(d, p, rng, size=samples)
    radii = np.asarray(radii, dtype=float)
    thresh = np.clip(d / radii ** p, 0.0, 1.0)
    if n == d:
        mass = (thresh < 1).astype(float)
        s = np.ones((radii.size, samples))
    else:
        lower = special.betainc(a_par, b_par, thresh)
        mass = special.betaincc(a_par, b_par, thresh)
        level = lower[:, None] + u[None, :] * mass[:, None]
        s = special.betaincinv(a_par, b_par, np.minimum(level, 1.0))
        s = np.maximum(s, thresh[:, None])
    hits = np.empty((radii.size, samples))
    for i, r in enumerate(radii):
        z = point_on_sphere(w, signs, r * s[i] ** (1.0 / p), p)
        delta = np.sum(np.abs(z - 2.0) ** p - np.abs(z) ** p, axis=1)
        hits[i] = (delta < -TIE_TOLERANCE) + 0.5 * (np.abs(delta) <= TIE_TOLERANCE)
    return mass, hits


def asym_is_gain_general(q: GainQuery, mc_budget: int = 20000, rng=None, panels: int = 16,
                         order: int = 8, batches: int = 20, pe: Optional[float] = None) -> GainEstimate:
    """Predicted gamma for any p >= 1 with the error ratio estimated by Monte Carlo.

    The outer radius integral runs over t = Pr(R > r) / Pr(R > r0) with
    r0 = d_min**(1/p), using composite Gauss-Legendre nodes; the inner
    conditional error probability at every node comes from the same
    ``mc_budget`` samples.  The standard error is a jackknife over
    ``batches`` sample groups.  P_e defaults to ``A_dmin * pep_quadrature``.
    """
    if q.p < 1:
        raise ValueError("the general gain form needs p >= 1")
    rng = make_rng(rng)
    params = q.params
    r0 = q.d ** (1.0 / q.p)
    tail0 = radius_tail(r0, params)
    if not tail0 > 0:
        raise ValueError("radius tail at the packing radius underflows; SNR too high")
    x, w = np.polynomial.legendre.leggauss(order)
    # panels graded toward t = 1 (r -> r0) where theta changes fastest
    edges = np.unique(np.concatenate([np.linspace(0, 1, panels + 1), 1 - 0.5 ** np.arange(1, 12)]))
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    t = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wt = (half[:, None] * w[None, :]).ravel()
    a_par = q.n / q.p
    radii = params.alpha * special.gammainccinv(a_par, t * tail0) ** (1.0 / q.p)
    radii = np.maximum(radii, r0)
    mass, hits = _conditional_error_mc(q, radii, mc_budget, rng)
    a = q.a_dmin

    def integral(mean_hits):
        theta = a * mass * mean_hits
        return tail0 * float(np.sum(wt * np.minimum(1.0, np.sqrt(theta))))

    full = integral(hits.mean(axis=1))
    groups = np.array_split(np.arange(mc_budget), batches)
    sums = np.stack([hits[:, g].sum(axis=1) for g in groups], axis=1)
    total = sums.sum(axis=1)
    leave = np.array([integral((total - sums[:, b]) / (mc_budget - groups[b].size))
                      for b in range(batches)])
    se_int = math.sqrt((batches - 1) / batches * np.sum((leave - leave.mean()) ** 2))
    if pe is None:
        pe = a * pep_quadrature(q.d, q.p, q.sigma)
    gamma = pe / full ** 2
    se = 2 * gamma * se_int / full
    wide = not (se < 0.1 * gamma)
    if wide:
        warnings.warn(f"gain estimate has relative standard error {se / gamma:.2g}; "
                      "increase mc_budget", RuntimeWarning, stacklevel=2)
    return GainEstimate(gamma, se, wide)


def predicted_gain(q: GainQuery, mc_budget: int = 20000, rng=None) -> GainEstimate:
    """Closed-form prediction for p = 1 or 2, Monte Carlo general form otherwise."""
    if q.p == 1:
        return GainEstimate(asym_is_gain_l1(q), 0.0)
    if q.p == 2:
        return GainEstimate(asym_is_gain_l2(q), 0.0)
    return asym_is_gain_general(q, mc_budget, rng)
