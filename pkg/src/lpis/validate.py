"""Self-check suite behind ``lpis validate``.

Each check returns a :class:`CheckResult`; statistical checks scale their
tolerance with the sample budget, so a small budget widens the acceptance
band instead of producing spurious failures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import stats

from .analytic_bounds import (
    conditional_pep_l1,
    conditional_pep_l2,
    pep_laplace,
    pep_quadrature,
)
from .codes import CodeValidationError, bundled_code, orthogonal_check_bound, weight_distribution
from .ggd_channel import GgdParams, ggd_sample, radius_pdf
from .lp_geometry import point_on_sphere, sample_lp_direction
from .numerics import adaptive_quadrature, q_function
from .rng import make_rng

__all__ = ["CheckResult", "TABLE_I", "run_checks", "conditioned_mc"]

# published weight distributions of the primitive BCH codes
TABLE_I = {
    "bch_15_7": {5: 18, 6: 30, 7: 15, 8: 15, 9: 30, 10: 18, 15: 1},
    "bch_31_11": {11: 186, 12: 310, 15: 527, 16: 527, 19: 310, 20: 186, 31: 1},
}

KS_LEVEL = 1e-3


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def _table_check(name: str) -> CheckResult:
    try:
        code = bundled_code(name, validate=False)
    except (CodeValidationError, FileNotFoundError) as exc:
        return CheckResult(f"weights {name}", False, str(exc))
    want = TABLE_I[name]
    declared = code.weight_distribution
    actual = weight_distribution(code)
    ok = declared == want and actual == want
    return CheckResult(f"weights {name}", ok,
                       "declared and enumerated tables match" if ok
                       else f"declared={declared} enumerated={actual} expected={want}")


def _dmin_check(name: str) -> CheckResult:
    try:
        code = bundled_code(name, validate=False)
    except (CodeValidationError, FileNotFoundError) as exc:
        return CheckResult(f"d_min {name}", False, str(exc))
    if code.k <= 16:
        got = min(weight_distribution(code))
        ok = got == code.d_min
        return CheckResult(f"d_min {name}", ok, f"declared {code.d_min}, enumerated {got}")
    bound = orthogonal_check_bound(code.parity_check)
    ok = bound <= code.d_min
    return CheckResult(f"d_min {name}", ok, f"declared {code.d_min}, orthogonal-check bound {bound}")


def _ks_check(n, p, sigma, samples, rng) -> CheckResult:
    params = GgdParams(p, sigma, n)
    z = ggd_sample(params, rng, size=(samples, n))
    s = np.sum(np.abs(z) ** p, axis=1)
    stat = stats.kstest(s, stats.gamma(n / p, scale=params.alpha ** p).cdf).statistic
    crit = math.sqrt(-0.5 * math.log(KS_LEVEL / 2)) / math.sqrt(samples)
    return CheckResult(f"radius law n={n} p={p} sigma={sigma}", stat < crit,
                       f"KS {stat:.2e} vs critical {crit:.2e} at N={samples}")


def conditioned_mc(n, d, r, p, samples, rng):
    """Pr(Delta_d < 0 | ||Z||_p = r) by direct sampling on the sphere; ties count 1/2."""
    u, signs = sample_lp_direction(n, p, rng, size=samples)
    z = point_on_sphere(u, signs, r, p)[:, :d]
    delta = np.sum(np.abs(z - 2.0) ** p - np.abs(z) ** p, axis=1)
    return float(np.mean((delta < -1e-12) + 0.5 * (np.abs(delta) <= 1e-12)))


def _pep_oracle(kind, n, d, radii, samples, rng) -> CheckResult:
    worst = 0.0
    for r in radii:
        if kind == "l1":
            exact, est = conditional_pep_l1(n, d, r), conditioned_mc(n, d, r, 1.0, samples, rng)
        else:
            exact, est = conditional_pep_l2(n, d, r), conditioned_mc(n, d, r, 2.0, samples, rng)
        se = math.sqrt(max(exact * (1 - exact), 1.0 / samples) / samples)
        worst = max(worst, abs(est - exact) / se)
    return CheckResult(f"conditional PEP {kind} n={n} d={d}", worst <= 3.0,
                       f"max deviation {worst:.2f} SE over {len(radii)} radii, N={samples} each")


def _identity_check(n, d, sigma) -> CheckResult:
    params = GgdParams(1.0, sigma, n)
    total = adaptive_quadrature(lambda r: np.array([conditional_pep_l1(n, d, x) for x in np.atleast_1d(r)])
                                * radius_pdf(r, params), d, math.inf, rel_tol=1e-10,
                                breakpoints=list(range(d + 1, 2 * n + 2 * d)))
    want = pep_laplace(d, sigma)
    rel = abs(total - want) / want
    return CheckResult(f"total probability n={n} d={d}", rel < 1e-6, f"relative gap {rel:.1e}")


def _quadrature_check() -> CheckResult:
    worst = 0.0
    for d in (3, 5, 9):
        for sigma in (0.5, 1.0):
            worst = max(worst, abs(pep_quadrature(d, 2.0, sigma) - q_function(math.sqrt(d) / sigma)),
                        abs(pep_quadrature(d, 1.0, sigma) - pep_laplace(d, sigma)))
    return CheckResult("PEP quadrature", worst < 1e-6, f"max abs error {worst:.1e}")


def run_checks(samples: int = 200_000, seed: int = 0, report: Callable[[str], None] = print) -> bool:
    rng = make_rng(seed)
    checks = [
        lambda: _table_check("bch_15_7"),
        lambda: _table_check("bch_31_11"),
        lambda: _dmin_check("eg_ldpc_15_7"),
        lambda: _dmin_check("eg_ldpc_63_37"),
    ]
    for n, p, sigma in ((15, 1.0, 1.0), (31, 2.0, 0.7), (15, 1.6, 1.0), (15, 2.8, 1.0)):
        checks.append(lambda n=n, p=p, sigma=sigma: _ks_check(n, p, sigma, samples, rng))
    checks += [
        lambda: _pep_oracle("l1", 15, 5, np.linspace(6, 20, 5), samples, rng),
        lambda: _pep_oracle("l2", 15, 5, np.linspace(2.5, 8.9, 5), samples, rng),
        lambda: _identity_check(7, 3, 1.0),
        _quadrature_check,
    ]
    ok = True
    for check in checks:
        try:
            res = check()
        except Exception as exc:  # a crashing check is a failed check
            res = CheckResult(getattr(check, "__name__", "check"), False, f"{type(exc).__name__}: {exc}")
        ok &= res.passed
        report(res.line())
    return ok
