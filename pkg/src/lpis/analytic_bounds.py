"""Conditional and unconditional pairwise error probabilities, union and sphere bounds.

Conventions: the all-zero word is sent as all -1 and ``Delta_d`` is the ML
metric of a weight-d competitor minus that of the transmitted word, restricted
to the d differing coordinates.  An error is ``Delta_d < 0`` and a tie
``Delta_d = 0`` counts 1/2 (Heaviside step with H(0) = 1/2).

For Laplace noise (p = 1) on the L_1 sphere ||Z||_1 = r the per-coordinate
metric is ``|z - 2| - |z|``; it is piecewise linear with atoms at +-2, so the
conditional PEP is a finite alternating sum.  Two algebraically equivalent
forms are provided: the literal quadruple sum (``form="series"``, with a
precision ladder) and a form that resums the inner series into regularized
incomplete beta functions (``form="beta"``, vectorized, used for integration).
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from math import comb
from typing import Optional, Sequence

import mpmath
import numpy as np
from scipy import optimize, special

from .codes import LinearCode
from .ggd_channel import GgdParams, SnrPoint, radius_pdf, radius_tail, sigma_from_snr
from .numerics import (
    PrecisionError,
    QuadratureError,
    adaptive_quadrature,
    bisect_root,
    q_function,
    reg_inc_beta,
    reg_inc_gamma_upper,
    signed_logsumexp,
)

__all__ = [
    "PepQuery",
    "BoundCurve",
    "LADDER_CANCELLATION",
    "conditional_pep_l1",
    "conditional_pep_l1_batch",
    "conditional_pep_l2",
    "conditional_pep",
    "union_conditional_pep_l1",
    "x_d0_pdf",
    "pep_laplace",
    "pep_gaussian",
    "pep_quadrature",
    "chernoff_abscissa",
    "per_coordinate_laplace_transform",
    "union_bound_awln",
    "union_bound",
    "sphere_bound_awln",
    "sphere_bound_split",
    "optimal_gallager_radius",
    "bound_curve",
]

# cancellation ratio above which the literal series is redone in mpmath
LADDER_CANCELLATION = 1e4
MAX_DPS = 400


def _heaviside(x):
    return 1.0 if x > 0 else (0.5 if x == 0 else 0.0)


@dataclass(frozen=True)
class PepQuery:
    n: int
    d: int
    r: float
    p: float = 1.0

    def __post_init__(self):
        if not (1 <= self.d <= self.n):
            raise ValueError(f"need 1 <= d <= n, got d={self.d}, n={self.n}")
        if not self.r > 0:
            raise ValueError(f"radius must be positive, got {self.r!r}")


@dataclass
class BoundCurve:
    snr_points: list
    values: list
    kind: str

    def __post_init__(self):
        if len(self.snr_points) != len(self.values):
            raise ValueError("snr_points and values must align")
        if self.kind not in ("sphere_awln", "union_awln", "union_general"):
            raise ValueError(f"unknown bound kind {self.kind!r}")


# ---------------------------------------------------------------------------
# conditional PEP on the L_1 sphere


def _series_terms_float(n, d, r, d0_start):
    """Log magnitudes and signs of every term of the quadruple sum."""
    logs, signs = [], []
    log_r = math.log(r)
    for d0 in range(d0_start, d + 1):
        if d0 == 0 or d0 >= n:
            # 1/Gamma(0) = 0 kills d0 = 0; d0 = n has an empty m-sum
            continue
        pre = (math.log(comb(d, d0)) + math.lgamma(n) - math.lgamma(d0) - math.lgamma(n - d0)
               + (1 - n) * log_r - d * math.log(2.0))
        m = np.arange(n - d0)
        l = np.arange(d0 + 1)
        mm, ll = np.meshgrid(m, l, indexing="ij")
        base = (pre + special.gammaln(n - d0) - special.gammaln(mm + 1) - special.gammaln(n - d0 - mm)
                + special.gammaln(d0 + 1) - special.gammaln(ll + 1) - special.gammaln(d0 - ll + 1)
                - np.log(n - 1 - mm))
        sign0 = np.where((n + d0 - 1 - mm - ll) % 2 == 0, 1, -1)
        for d2 in range(d - d0 + 1):
            coef = math.log(comb(d - d0, d2))
            a = r - 2 * d2 - 2 * ll
            b = d - 2 * d2 - 2 * ll
            with np.errstate(divide="ignore", invalid="ignore"):
                la = np.log(np.where(a > 0, a, 1.0))
                lb = np.log(np.where(b > 0, b, 1.0))
            ok = a > 0
            logs.append((base + coef + (n - 1) * la)[ok])
            signs.append(sign0[ok])
            ok = b > 0
            logs.append((base + coef + mm * la + (n - 1 - mm) * lb)[ok])
            signs.append(-sign0[ok])
    for d2 in range(d + 1):
        xb, xl = r - 2 * d2, d - 2 * d2
        h = _heaviside(xb) * _heaviside(-xl)
        if h and xb > 0:
            logs.append(np.array([math.log(comb(d, d2)) + (n - 1) * math.log(xb / r)
                                  + math.log(h) - d * math.log(2.0)]))
            signs.append(np.array([1]))
    if d == n:
        for l in range(n + 1):
            a = r - 2 * l
            if a > 0 and r > n:
                logs.append(np.array([math.log(comb(n, l)) + (n - 1) * math.log(a / r)
                                      - n * math.log(2.0)]))
                signs.append(np.array([1 if l % 2 == 0 else -1]))
    if not logs:
        return np.zeros(0), np.zeros(0, int)
    return np.concatenate(logs), np.concatenate(signs)


def _series_mp(n, d, r, d0_start, dps):
    """The same sum in mpmath with exact integer binomials; returns (sum, sum |t|)."""
    with mpmath.workdps(dps):
        r = mpmath.mpf(r)
        total = mpmath.mpf(0)
        size = mpmath.mpf(0)
        two_d = mpmath.mpf(2) ** d

        def add(t):
            nonlocal total, size
            total += t
            size += abs(t)

        for d0 in range(max(d0_start, 1), min(d, n - 1) + 1):
            pre = mpmath.mpf(comb(d, d0) * math.factorial(n - 1)) / (
                math.factorial(d0 - 1) * math.factorial(n - d0 - 1)) * r ** (1 - n) / two_d
            for d2 in range(d - d0 + 1):
                xb, xl = r - 2 * d2, d - 2 * d2
                for mi in range(n - d0):
                    for l in range(d0 + 1):
                        a, b = xb - 2 * l, xl - 2 * l
                        if a <= 0:
                            continue
                        c = (pre * comb(d - d0, d2) * comb(n - d0 - 1, mi) * comb(d0, l)
                             / (n - 1 - mi))
                        if (n + d0 - 1 - mi - l) % 2:
                            c = -c
                        add(c * a ** (n - 1))
                        if b > 0:
                            add(-c * a ** mi * mpmath.mpf(b) ** (n - 1 - mi))
        for d2 in range(d + 1):
            xb, xl = r - 2 * d2, d - 2 * d2
            h = _heaviside(xb) * _heaviside(-xl)
            if h:
                add(comb(d, d2) * (xb / r) ** (n - 1) * h / two_d)
        if d == n and r > n:
            for l in range(n + 1):
                a = r - 2 * l
                if a > 0:
                    add((-1) ** l * comb(n, l) * (a / r) ** (n - 1) / mpmath.mpf(2) ** n)
        return total, size


def _clamp_probability(value, where):
    if value < -1e-12 or value > 1 + 1e-12:
        raise PrecisionError(f"{where}: evaluated probability {value!r} lies outside [0, 1]")
    return min(max(value, 0.0), 1.0)


def conditional_pep_l1(n: int, d: int, r: float, form: str = "series", d0_start: int = 1,
                       return_info: bool = False):
    """Pr(Delta_d < 0 | ||Z||_1 = r) for Laplace noise, ties counted 1/2.

    ``form="series"`` sums the literal alternating quadruple series in signed
    log space and escalates to mpmath when the cancellation ratio exceeds
    :data:`LADDER_CANCELLATION`; ``form="beta"`` uses the resummed
    incomplete-beta form.  ``d0_start=0`` starts the outer sum at d0 = 0,
    whose terms vanish through 1/Gamma(0) = 0.  With ``return_info`` a dict
    with the evaluation path and cancellation ratio is returned as well.
    """
    PepQuery(n, d, r)
    if n > 200:
        raise ValueError("the series is only supported for n <= 200")
    if d0_start not in (0, 1):
        raise ValueError("d0_start must be 0 or 1")
    info = {"path": "exact", "cancellation": 1.0, "dps": 0}
    if r <= d:
        value = 0.0
    elif form == "beta":
        value = float(conditional_pep_l1_batch(n, d, np.array([r]))[0])
        info["path"] = "beta"
    elif form == "series":
        logs, signs = _series_terms_float(n, d, r, d0_start)
        total, cancel = signed_logsumexp(logs, signs)
        info.update(path="float", cancellation=cancel)
        value = total.to_float()
        if cancel > LADDER_CANCELLATION:
            digits = 25 + int(math.ceil(math.log10(min(cancel, 1e30))))
            while True:
                if digits > MAX_DPS:
                    raise PrecisionError(
                        f"series for (n={n}, d={d}, r={r}) needs more than {MAX_DPS} digits")
                s, size = _series_mp(n, d, r, d0_start, digits)
                if s == 0:
                    digits *= 2
                    continue
                achieved = float(size / abs(s))
                if math.log10(achieved) + 18 <= digits:
                    break
                digits = 25 + int(math.ceil(math.log10(achieved)))
            value = float(s)
            info.update(path="mpmath", cancellation=achieved, dps=digits)
    else:
        raise ValueError(f"unknown form {form!r}")
    value = _clamp_probability(value, f"conditional_pep_l1(n={n}, d={d}, r={r})")
    return (value, info) if return_info else value


def conditional_pep_l1_batch(n: int, d: int, r) -> np.ndarray:
    """Vectorized conditional PEP on the L_1 sphere via incomplete beta functions.

    Conditioning on which coordinates fall in (0, 2) (d0 of them), at or
    beyond 2 (d2) or at or below 0 leaves the in-range coordinates uniform on
    a simplex slice; integrating out the free coordinates gives terms
    ``(L/r)**(n-1) * I_{1-u}(n - d0, d0)`` with ``L = r - 2 d2 - 2 l``.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    out = np.zeros_like(r)
    live = r > d
    if not np.any(live):
        return out
    rr = r[live]
    acc = np.zeros_like(rr)
    for d0 in range(1, d + 1):
        d2 = np.arange(d - d0 + 1)[:, None, None]
        l = np.arange(d0 + 1)[None, :, None]
        big = rr[None, None, :] - 2 * d2 - 2 * l
        small = np.maximum(d - 2 * d2 - 2 * l, 0)
        ok = big > 0
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = np.where(ok, small / np.where(ok, big, 1.0), 1.0)
            ok &= frac < 1
            if d0 == n:
                mass = np.ones_like(frac)
            else:
                mass = special.betainc(n - d0, d0, np.clip(1.0 - frac, 0.0, 1.0))
            ratio = np.where(ok, big / rr[None, None, :], 0.0)
            powr = ratio ** (n - 1) if n > 1 else ok + 0.0
        coef = (np.array([comb(d - d0, k) for k in range(d - d0 + 1)], dtype=float)[:, None, None]
                * np.array([(-1) ** k * comb(d0, k) for k in range(d0 + 1)], dtype=float)[None, :, None])
        acc += comb(d, d0) * np.sum(np.where(ok, coef * powr * mass, 0.0), axis=(0, 1))
    for d2 in range(d + 1):
        h_low = _heaviside(2 * d2 - d)
        if not h_low:
            continue
        xb = rr - 2 * d2
        hb = np.where(xb > 0, 1.0, np.where(xb == 0, 0.5, 0.0))
        powr = np.where(xb > 0, xb / rr, 0.0) ** (n - 1) if n > 1 else np.ones_like(rr)
        acc += comb(d, d2) * powr * hb * h_low
    out[live] = np.clip(acc / 2.0 ** d, 0.0, 1.0)
    return out


def union_conditional_pep_l1(weights: dict, n: int, r) -> np.ndarray:
    """sum_d A_d Pr(Delta_d < 0 | ||Z||_1 = r), vectorized in r."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    total = np.zeros_like(r)
    for d, a in weights.items():
        total += a * conditional_pep_l1_batch(n, d, r)
    return total


def x_d0_pdf(x, n: int, d: int, d0: int, d2: int, r: float):
    """Sub-density of X = z_1 + ... + z_d0 jointly with the coordinate split.

    The split puts d0 of the d differing coordinates in (0, 2), d2 at or above
    2 and the rest at or below 0, all with the signs pinned (hence the 2**-d).
    Its value is
    ``Gamma(n) r**(1-n) / (2**d Gamma(d0) Gamma(n-d0)) * (r - 2 d2 - x)**(n-d0-1)
    * sum_l (-1)**l C(d0, l) (x - 2 l)_+**(d0-1)``.
    """
    if not (1 <= d0 <= d <= n and 0 <= d2 <= d - d0 and d0 < n):
        raise ValueError("need 1 <= d0 <= d <= n, d0 < n and 0 <= d2 <= d - d0")
    x = np.asarray(x, dtype=float)
    top = r - 2 * d2
    inside = (x >= 0) & (x <= top)
    xs = np.where(inside, x, 0.0)
    vol = np.zeros_like(xs)
    for l in range(d0 + 1):
        seg = np.maximum(xs - 2 * l, 0.0)
        vol += (-1) ** l * comb(d0, l) * (seg ** (d0 - 1) if d0 > 1 else (xs - 2 * l > 0) + 0.0)
    vol = np.maximum(vol, 0.0)
    log_pre = (math.lgamma(n) + (1 - n) * math.log(r) - d * math.log(2.0)
               - math.lgamma(d0) - math.lgamma(n - d0))
    with np.errstate(divide="ignore", invalid="ignore"):
        free = np.where(top - xs > 0, (top - xs), 0.0) ** (n - d0 - 1)
    out = np.where(inside, math.exp(log_pre) * free * vol, 0.0)
    return float(out) if out.ndim == 0 else out


def conditional_pep_l2(n: int, d: int, r: float) -> float:
    """Pr(Delta_d < 0 | ||Z||_2 = r) for Gaussian noise.

    On the sphere the projection onto the codeword difference direction has
    a scaled Beta law, giving ``0.5 * I_{1 - d/r**2}((n-1)/2, 1/2)``.
    """
    PepQuery(n, d, r, 2.0)
    if r * r <= d:
        return 0.0
    if n == 1:
        return 0.5
    return 0.5 * reg_inc_beta(1.0 - d / (r * r), (n - 1) / 2.0, 0.5)


def conditional_pep(q: PepQuery, **kwargs) -> float:
    if q.p == 1:
        return conditional_pep_l1(q.n, q.d, q.r, **kwargs)
    if q.p == 2:
        return conditional_pep_l2(q.n, q.d, q.r)
    raise NotImplementedError("closed-form conditional PEPs exist only for p = 1 and p = 2")


# ---------------------------------------------------------------------------
# unconditional PEPs


def pep_laplace(d: int, sigma: float) -> float:
    """Closed-form Pr(Delta_d < 0) for Laplace noise, ties counted 1/2.

    Uses the regularized upper incomplete gamma at ``sqrt(2)(d - 2 d2 - 2 l)/sigma``,
    which equals 1 for nonpositive arguments, plus the all-atoms tail term.
    """
    if d < 1 or not sigma > 0:
        raise ValueError("need d >= 1 and sigma > 0")
    k = math.sqrt(2.0) / sigma
    logs, signs, args = [], [], []
    for d0 in range(1, d + 1):
        for d2 in range(d - d0 + 1):
            for l in range(d0 + 1):
                x = k * (d - 2 * d2 - 2 * l)
                q = reg_inc_gamma_upper(x, d0)
                if q <= 0:
                    continue
                logs.append(math.log(comb(d, d0) * comb(d - d0, d2) * comb(d0, l))
                            - 2 * k * (d2 + l) + math.log(q))
                signs.append(1 if l % 2 == 0 else -1)
                args.append((d0, d2, l, x))
    for d2 in range(d + 1):
        h = _heaviside(2 * d2 - d)
        if h:
            logs.append(math.log(comb(d, d2) * h) - 2 * k * d2)
            signs.append(1)
            args.append(None)
    total, cancel = signed_logsumexp(logs, signs)
    value = total.to_float() / 2.0 ** d
    if cancel > LADDER_CANCELLATION:
        digits = 30 + int(math.log10(min(cancel, 1e300)))
        with mpmath.workdps(digits):
            km = mpmath.sqrt(2) / mpmath.mpf(sigma)
            acc = mpmath.mpf(0)
            for d0 in range(1, d + 1):
                for d2 in range(d - d0 + 1):
                    for l in range(d0 + 1):
                        x = km * (d - 2 * d2 - 2 * l)
                        q = mpmath.gammainc(d0, max(x, 0), mpmath.inf, regularized=True)
                        acc += ((-1) ** l * comb(d, d0) * comb(d - d0, d2) * comb(d0, l)
                                * mpmath.exp(-2 * km * (d2 + l)) * q)
            for d2 in range(d + 1):
                acc += comb(d, d2) * mpmath.exp(-2 * km * d2) * _heaviside(2 * d2 - d)
            value = float(acc / mpmath.mpf(2) ** d)
    return _clamp_probability(value, f"pep_laplace(d={d}, sigma={sigma})")


def pep_gaussian(d: int, sigma: float) -> float:
    return q_function(math.sqrt(d) / sigma)


def _psi(z, p):
    """Per-coordinate metric difference |z - 2|**p - |z|**p for noise z."""
    return np.abs(z - 2.0) ** p - np.abs(z) ** p


def _laplace_parts(s, sigma):
    """Atomic and continuous parts of E[exp(-s psi(Z))] for Laplace Z."""
    a = sigma / math.sqrt(2.0)
    s = np.asarray(s)
    k = 2 * s - 1 / a
    atom = 0.5 * np.exp(-2 * s) + 0.5 * np.exp(2 * s - 2 / a)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(np.abs(k) > 1e-8, np.expm1(2 * k) / np.where(k == 0, 1, k), 2.0 + 2.0 * k)
    ac = np.exp(-2 * s) * ratio / (2 * a)
    return atom, ac


@functools.lru_cache(maxsize=64)
def _gl(order):
    return np.polynomial.legendre.leggauss(order)


def _transform_grid(p, sigma, c):
    """Integration range for the per-coordinate transform at real part ``c``."""
    params = GgdParams(p, sigma)

    def log_mag(z):
        return -(abs(z) / params.alpha) ** p - c * float(_psi(np.array(z), p))

    span = params.alpha * 40.0 ** (1.0 / p) + 4.0
    peak = max(log_mag(z) for z in np.linspace(-span, span, 2001))
    while max(log_mag(span), log_mag(-span)) > peak - 60:
        span *= 1.5
    return params, span, peak


def _graded_edges(lo, hi, panels, levels=40):
    """Uniform panels plus geometric grading toward both ends (kinks and cusps)."""
    width = hi - lo
    grade = 0.5 ** np.arange(1, levels + 1) / panels
    inner = np.linspace(0.0, 1.0, panels + 1)
    frac = np.unique(np.concatenate([inner, grade, 1.0 - grade]))
    return lo + width * frac


def _numeric_transform(s, p, sigma, panels=8):
    """E[exp(-s psi(Z))] for GGD Z on a fixed panel Gauss-Legendre grid.

    Panels break at the kinks z = 0 and z = 2 of the metric.  The integrand is
    scaled by its peak before exponentiation to avoid overflow.
    """
    s = np.atleast_1d(np.asarray(s))
    c = float(np.max(s.real))
    params, span, peak = _transform_grid(p, sigma, c)
    x, w = _gl(24)
    nodes, weights = [], []
    for lo, hi in [(-span, 0.0), (0.0, 2.0), (2.0, span)]:
        edges = _graded_edges(lo, hi, panels)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        nodes.append((mid[:, None] + half[:, None] * x[None, :]).ravel())
        weights.append((half[:, None] * w[None, :]).ravel())
    z = np.concatenate(nodes)
    wz = np.concatenate(weights)
    log_f = math.log(p / (2 * params.alpha * math.gamma(1.0 / p))) - (np.abs(z) / params.alpha) ** p
    psi = _psi(z, p)
    out = np.empty(s.shape, dtype=complex)
    # blocks of contour points keep the (points x nodes) matrix small
    step = max(1, 2 ** 22 // z.size)
    for i in range(0, s.size, step):
        expo = log_f[None, :] - np.outer(s[i:i + step], psi) - peak
        out[i:i + step] = np.exp(expo) @ wz
    return out * math.exp(peak)


def per_coordinate_laplace_transform(s, p: float, sigma: float, rel_tol: float = 1e-13):
    """Phi_1(s) = E[exp(-s (|Z - 2|**p - |Z|**p))] for one GGD coordinate."""
    if p == 1:
        atom, ac = _laplace_parts(s, sigma)
        return atom + ac
    panels = 8
    prev = _numeric_transform(s, p, sigma, panels)
    while True:
        panels *= 2
        cur = _numeric_transform(s, p, sigma, panels)
        if np.max(np.abs(cur - prev)) <= rel_tol * np.max(np.abs(cur)):
            return cur
        if panels > 2048:
            raise QuadratureError("inner transform did not converge", float(np.abs(cur).max()),
                                  float(np.max(np.abs(cur - prev))))
        prev = cur


def chernoff_abscissa(d: int, p: float, sigma: float) -> float:
    """Real c > 0 minimizing Phi_1(c); the Chernoff-optimal contour abscissa."""
    def obj(c):
        return float(np.real(per_coordinate_laplace_transform(np.array([c]), p, sigma))[0])

    hi = 0.25
    while obj(hi) < 1.0:
        hi *= 2
        if hi > 1e4:
            raise QuadratureError("no Chernoff minimum found", math.nan, math.inf)
    res = optimize.minimize_scalar(obj, bounds=(1e-6, hi), method="bounded",
                                   options={"xatol": 1e-8 * hi})
    return float(res.x)


def _lattice_part(d, sigma):
    """Exact probability that all d metric terms sit on their atoms and sum below 0."""
    a = sigma / math.sqrt(2.0)
    q = 0.5 * math.exp(-2 / a)
    tot = 0.0
    for k in range(d + 1):
        tot += comb(d, k) * q ** k * 0.5 ** (d - k) * _heaviside(4 * k - 2 * d)
    return tot


def _node_sum(d, p, sigma, c, m, rel_tol=1e-12):
    i = np.arange(1, m // 2 + 1)
    tau = np.tan((2 * i - 1) * np.pi / (2 * m))
    s = c + 1j * c * tau
    if p == 1:
        atom, ac = _laplace_parts(s, sigma)
        v = (atom + ac) ** d - atom ** d
        return _lattice_part(d, sigma) + float(np.sum(v.real + tau * v.imag)) / m
    # refine the inner grid until the node sum itself is stable; nodes far
    # out on the contour oscillate fast but carry little weight
    panels, prev = 8, None
    while True:
        v = _numeric_transform(s, p, sigma, panels) ** d
        cur = float(np.sum(v.real + tau * v.imag)) / m
        if prev is not None and abs(cur - prev) <= rel_tol * abs(cur):
            return cur
        if panels > 4096:
            raise QuadratureError("inner transform did not converge", cur, abs(cur - prev))
        prev, panels = cur, panels * 2


def pep_quadrature(d: int, p: float, sigma: float, c: Optional[float] = None,
                   m_nodes: Optional[int] = None, rel_tol: float = 1e-7,
                   max_nodes: Optional[int] = None) -> float:
    """Pr(Delta_d < 0) from the Laplace transform of the metric via the tangent-node rule.

    ``P = (1/m) sum_{i=1}^{m/2} [Re Phi(c + j c tau_i) + tau_i Im Phi(c + j c tau_i)]``
    with ``tau_i = tan((2i - 1) pi / 2m)`` and ``Phi = Phi_1**d``.  For p = 1 the
    metric has atoms, so their lattice contribution is enumerated exactly and
    the rule is applied to the remainder.  Without ``m_nodes`` the node count
    doubles from 64 until two successive doublings each change the value by
    less than ``rel_tol``.  ``max_nodes`` defaults to 2**23 for p = 1, where
    nodes are closed-form and cheap, and 2**16 otherwise.
    """
    if max_nodes is None:
        max_nodes = 2 ** 23 if p == 1 else 2 ** 16
    if d < 1:
        raise ValueError("d must be at least 1")
    if c is None:
        c = chernoff_abscissa(d, p, sigma)
    if not c > 0:
        raise ValueError("the contour abscissa c must be positive")
    phi_c = per_coordinate_laplace_transform(np.array([c]), p, sigma)
    if not np.all(np.isfinite(phi_c)):
        raise QuadratureError(f"transform diverges at c={c}", math.nan, math.inf)
    if m_nodes is not None:
        if m_nodes % 2 or m_nodes < 2:
            raise ValueError("m_nodes must be a positive even integer")
        return _node_sum(d, p, sigma, c, m_nodes)
    m = 64
    prev = _node_sum(d, p, sigma, c, m)
    calm = 0
    while m < max_nodes:
        m *= 2
        cur = _node_sum(d, p, sigma, c, m)
        # for p = 1 the error oscillates while decaying, so demand two quiet steps
        calm = calm + 1 if abs(cur - prev) <= rel_tol * abs(cur) else 0
        if calm >= 2:
            return float(min(max(cur, 0.0), 1.0))
        prev = cur
    raise QuadratureError(f"node doubling stopped at m={m}", cur, abs(cur - prev))


# ---------------------------------------------------------------------------
# bounds


def union_bound_awln(code: LinearCode, sigma: float) -> float:
    """sum_d A_d Pr(Delta_d < 0) for Laplace noise; may exceed 1."""
    wd = _weights(code)
    return float(sum(a * pep_laplace(d, sigma) for d, a in wd.items()))


def union_bound(code: LinearCode, p: float, sigma: float) -> float:
    wd = _weights(code)
    if p == 1:
        return union_bound_awln(code, sigma)
    if p == 2:
        return float(sum(a * pep_gaussian(d, sigma) for d, a in wd.items()))
    return float(sum(a * pep_quadrature(d, p, sigma) for d, a in wd.items()))


def _weights(code: LinearCode) -> dict:
    if code.weight_distribution is None:
        raise ValueError(f"{code.name}: a weight distribution is required")
    return code.weight_distribution


@functools.lru_cache(maxsize=128)
def _gallager_radius(n: int, weights: tuple) -> float:
    wd = dict(weights)
    d_min = min(wd)

    def excess(r):
        return float(union_conditional_pep_l1(wd, n, np.array([r]))[0]) - 1.0

    lo, hi = float(d_min), 2.0 * d_min
    while excess(hi) < 0:
        lo, hi = hi, 2 * hi
        if hi > 1e6:
            return math.inf
    return bisect_root(excess, lo, hi, tol=1e-14)


def optimal_gallager_radius(code: LinearCode) -> float:
    """Radius r* with sum_d A_d Pr(Delta_d < 0 | ||Z||_1 = r*) = 1 (independent of sigma)."""
    wd = _weights(code)
    return _gallager_radius(code.n, tuple(sorted(wd.items())))


def sphere_bound_split(code: LinearCode, sigma: float, radius: Optional[float] = None,
                       rel_tol: float = 1e-10):
    """The two parts of the L_1 sphere bound at Gallager radius ``radius``.

    Returns ``(inside, outside)``: the union bound integrated over
    [d_min, radius] against the radius density and Pr(||Z||_1 >= radius).
    """
    wd = _weights(code)
    n = code.n
    params = GgdParams(1.0, sigma, n)
    if radius is None:
        radius = optimal_gallager_radius(code)
    d_min = min(wd)
    if radius <= d_min:
        return 0.0, float(radius_tail(radius, params))
    top = radius if math.isfinite(radius) else math.inf
    # kinks sit at even integers and at every weight present in the table
    limit = radius if math.isfinite(radius) else max(wd) + 2 * n + 2
    points = sorted(set(range(2, int(math.ceil(limit)) + 1, 2)) | set(wd))

    def integrand(r):
        return union_conditional_pep_l1(wd, n, r) * radius_pdf(r, params)

    inside = adaptive_quadrature(integrand, float(d_min), top, rel_tol=rel_tol,
                                 breakpoints=[p for p in points if d_min < p < limit])
    outside = float(radius_tail(radius, params)) if math.isfinite(radius) else 0.0
    return inside, outside


def sphere_bound_awln(code: LinearCode, sigma: float) -> float:
    """L_1 sphere bound on the ML word error rate for Laplace noise.

    min(1, union) is integrated against the radius density: the union part up
    to r* and the total probability of the radius exceeding r* beyond it.
    """
    inside, outside = sphere_bound_split(code, sigma)
    return min(1.0, inside + outside)


def bound_curve(code: LinearCode, eb_n0_db: Sequence[float], kind: str, p: float = 1.0) -> BoundCurve:
    points = [SnrPoint(float(x), code.rate) for x in eb_n0_db]
    values = []
    for pt in points:
        s = sigma_from_snr(pt)
        if kind == "sphere_awln":
            values.append(sphere_bound_awln(code, s))
        elif kind == "union_awln":
            values.append(union_bound_awln(code, s))
        elif kind == "union_general":
            values.append(union_bound(code, p, s))
        else:
            raise ValueError(f"unknown bound kind {kind!r}")
    return BoundCurve(points, values, kind)
