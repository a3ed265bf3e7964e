"""Sampling on L_p spheres and shells, and level-set densities.

A point with ||z||_p = r is written ``z_i = b_i * r * u_i**(1/p)`` where the
signs ``b_i`` are uniform and ``u`` lies on the unit simplex.  When Z has i.i.d.
GGD coordinates, ``u`` is Dirichlet(1/p, ..., 1/p) and independent of r.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .ggd_channel import GgdParams, ggd_sample

__all__ = [
    "ShellGrid",
    "SimplexPoint",
    "sample_lp_direction",
    "point_on_sphere",
    "sample_noise_in_shell",
    "simplex_conditional_density",
    "general_levelset_density",
]


@dataclass(frozen=True)
class ShellGrid:
    """Radius window [r_min, r_max) cut into ``m`` equal shells."""

    r_min: float
    r_max: float
    m: int

    def __post_init__(self):
        if not (0 <= self.r_min < self.r_max and math.isfinite(self.r_max)):
            raise ValueError(f"need 0 <= r_min < r_max, got {self.r_min!r}, {self.r_max!r}")
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"shell count must be a positive integer, got {self.m!r}")
        object.__setattr__(self, "m", int(self.m))

    @property
    def delta_r(self) -> float:
        return (self.r_max - self.r_min) / self.m

    @property
    def edges(self) -> np.ndarray:
        """The m + 1 shell boundaries r_0, ..., r_m."""
        return self.r_min + self.delta_r * np.arange(self.m + 1)

    @property
    def upper_edges(self) -> np.ndarray:
        """r_l for l = 1..m, the point at which shell l's density is sampled."""
        return self.edges[1:]

    def shell_of(self, r) -> np.ndarray:
        """0-based shell index of each radius (-1 / m outside the window)."""
        r = np.asarray(r, dtype=float)
        idx = np.floor((r - self.r_min) / self.delta_r).astype(np.int64)
        idx = np.where(r < self.r_min, -1, idx)
        return np.where(r >= self.r_max, self.m, idx)


@dataclass(frozen=True)
class SimplexPoint:
    u: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        if u.ndim != 1 or np.any(u < 0) or abs(u.sum() - 1.0) > 1e-12 * u.size:
            raise ValueError("simplex point needs nonnegative coordinates summing to 1")
        object.__setattr__(self, "u", u)


def sample_lp_direction(n: int, p: float, rng: np.random.Generator, size=None,
                        method: str = "gamma"):
    """Draw ``(u, signs)`` uniformly (density-wise) on the unit L_p sphere.

    ``method="gamma"`` normalizes Gamma(1/p, 1) variates; ``method="ggd"``
    normalizes ``|z|**p`` of GGD draws.  Both give Dirichlet(1/p, ..., 1/p).
    Returns arrays of shape ``(n,)`` or ``(size, n)``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    shape = (n,) if size is None else (size, n)
    if method == "gamma":
        x = rng.standard_gamma(1.0 / p, size=shape)
    elif method == "ggd":
        # full noise draws; the scale cancels in the ratio
        x = np.abs(ggd_sample(GgdParams(p, 1.0), rng, size=shape)) ** p
    else:
        raise ValueError(f"unknown method {method!r}")
    total = x.sum(axis=-1, keepdims=True)
    # all-zero draws only happen in underflow for tiny shapes; redraw them
    bad = ~(total[..., 0] > 0)
    while np.any(bad):
        x[bad] = rng.standard_gamma(1.0 / p, size=(int(np.sum(bad)), n) if size is not None else (n,))
        total = x.sum(axis=-1, keepdims=True)
        bad = ~(total[..., 0] > 0)
    u = x / total
    signs = rng.integers(0, 2, size=shape, dtype=np.int8) * 2 - 1
    return u, signs


def point_on_sphere(u, signs, r, p: float) -> np.ndarray:
    """Map simplex coordinates and signs to the L_p sphere of radius ``r``."""
    if isinstance(u, SimplexPoint):
        u = u.u
    u = np.asarray(u, dtype=float)
    r = np.asarray(r, dtype=float)
    if r.ndim:
        r = r[..., None]
    return np.asarray(signs) * r * u ** (1.0 / p)


def sample_noise_in_shell(grid: ShellGrid, pmf, p: float, n: int, rng: np.random.Generator,
                          size: int = 1):
    """Draw noise vectors whose radius is shell-stratified by ``pmf``.

    Picks a shell l ~ pmf, a radius uniform in [r_{l-1}, r_l) and a direction
    from :func:`sample_lp_direction`.  Returns ``(z, shell_index, radius)``.
    """
    pmf = np.asarray(pmf, dtype=float)
    if pmf.shape != (grid.m,) or np.any(pmf < 0) or not np.sum(pmf) > 0:
        raise ValueError("pmf must be a nonnegative, non-degenerate vector over the shells")
    cdf = np.cumsum(pmf)
    cdf /= cdf[-1]
    shell = np.searchsorted(cdf, rng.random(size), side="right")
    shell = np.minimum(shell, grid.m - 1)
    lower = grid.r_min + grid.delta_r * shell
    r = lower + grid.delta_r * rng.random(size)
    # keep the radius strictly inside its half-open shell after rounding
    r = np.minimum(r, np.nextafter(lower + grid.delta_r, lower))
    u, signs = sample_lp_direction(n, p, rng, size=size)
    return point_on_sphere(u, signs, r, p), shell, r


def simplex_conditional_density(u, n: int, p: float) -> float:
    """Density of the simplex coordinates of a uniform L_p-sphere point.

    This is the Dirichlet(1/p) density divided by the 2**n sign orthants.  At
    boundary points (some ``u_i = 0``) it is +inf for p > 1 and 0 for p < 1.
    """
    if isinstance(u, SimplexPoint):
        u = u.u
    u = np.asarray(u, dtype=float)
    if u.shape[-1] == n - 1:
        u = np.append(u, 1.0 - u.sum())
    if u.shape[-1] != n or np.any(u < -1e-15) or abs(u.sum() - 1) > 1e-9:
        raise ValueError("u must be a point of the (n-1)-simplex")
    expo = 1.0 / p - 1.0
    log_const = math.lgamma(n / p) - n * math.log(2.0) - n * math.lgamma(1.0 / p)
    if expo == 0:
        return math.exp(log_const)
    if np.any(u <= 0):
        return math.inf if expo < 0 else 0.0
    return math.exp(log_const + expo * float(np.sum(np.log(u))))


def general_levelset_density(u, r: float, inv_branch: Callable, inv_deriv: Callable,
                             base_pdf: Callable, g_r: float, domain=(0.0, math.inf)) -> float:
    """Conditional density of the split ``u`` on the level set sum nu(y_i) = r.

    ``inv_branch`` is one invertible branch rho of nu**-1 defined for arguments
    in ``domain``, ``inv_deriv`` its derivative, ``base_pdf`` the per-coordinate
    noise density and ``g_r`` the density of sum nu(Y_i) at ``r``.  The
    Jacobian enters through ``|rho'|``, so decreasing branches (for example the
    negative log-likelihood of a unimodal density) give a positive density.
    """
    u = np.asarray(u, dtype=float)
    t = r * u
    lo, hi = domain
    if np.any(t < lo) or np.any(t > hi):
        raise ValueError("arguments fall outside the declared branch domain")
    if not g_r > 0:
        raise ValueError("g_r must be positive")
    n = u.size
    vals = np.abs(inv_deriv(t)) * base_pdf(inv_branch(t))
    return float(r ** (n - 1) / g_r * np.prod(vals))
