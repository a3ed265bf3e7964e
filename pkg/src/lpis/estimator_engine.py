"""Monte Carlo and L_p-shell importance-sampling WER estimators.

The IS estimator stratifies the noise radius R = ||Z||_p into ``m`` shells on a
window [r_min, r_max).  A sample picks shell l with probability P*_l, a radius
uniform in the shell and a uniform direction on the L_p sphere, and carries
the weight ``g(r) * dr / P*_l``.  Every ``n_step`` samples the per-shell error
ratios theta_l are re-estimated from all samples so far and the pmf moves to
``P*_l ~ sqrt(theta_l) * g(r_l)``.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy.special import logsumexp

from .codes import LinearCode
from .decoders import MLDecoder, SumProductDecoder
from .ggd_channel import GgdParams, ggd_sample, radius_logpdf, radius_quantile, radius_tail
from .lp_geometry import ShellGrid, sample_noise_in_shell
from .rng import make_rng, spawn_streams

__all__ = [
    "IsConfig",
    "Estimate",
    "ShellHistogram",
    "EstimatorContractError",
    "make_decoder",
    "shell_window",
    "mc_estimate",
    "init_histogram",
    "update_error_ratios",
    "update_pmf",
    "repaired_error_ratios",
    "is_estimate",
    "simulated_is_gain",
    "save_histogram",
    "load_histogram",
]


class EstimatorContractError(RuntimeError):
    pass


@dataclass(frozen=True)
class IsConfig:
    """Settings of the adaptive IS loop.

    ``r_min_rule``: ``"packing"`` (d_min**(1/p) for ML decoding with p >= 1,
    else 0), ``"zero"`` or a number.  ``r_max_rule``: ``"auto"`` (the larger
    of 5*d_min**(1/p) and the radius with tail mass ``tail_mass``),
    ``"fixed_multiple"`` (5*d_min**(1/p) only) or a number.
    """

    m: int = 500
    n_min: int = 500
    n_step: int = 100
    kappa_target: float = 0.1
    max_samples: int = 10 ** 8
    seed: int = 0
    workers: int = 1
    r_min_rule: Union[str, float] = "packing"
    r_max_rule: Union[str, float] = "auto"
    tail_mass: float = 1e-12
    adapt: bool = True

    def __post_init__(self):
        if self.m < 1 or self.n_min < 1 or self.n_step < 1 or self.workers < 1:
            raise ValueError("m, n_min, n_step and workers must be positive")
        if not (0 < self.kappa_target < 1):
            raise ValueError("kappa_target must lie in (0, 1)")


@dataclass
class Estimate:
    wer: float
    variance: float
    relative_error: float
    samples: int
    wall_time: float = 0.0
    truncation_tail: float = 0.0
    kappa_target: float = math.nan
    errors: int = 0

    @property
    def converged(self) -> bool:
        return self.relative_error <= self.kappa_target


@dataclass
class ShellHistogram:
    """Shell grid, cumulative tallies, error ratios and the current pmf."""

    grid: ShellGrid
    theta_hat: np.ndarray
    pmf: np.ndarray
    samples: np.ndarray
    errors: np.ndarray
    log_g: np.ndarray
    code_name: str = ""
    p: float = math.nan

    def copy(self) -> "ShellHistogram":
        return replace(self, theta_hat=self.theta_hat.copy(), pmf=self.pmf.copy(),
                       samples=self.samples.copy(), errors=self.errors.copy(),
                       log_g=self.log_g.copy())


def make_decoder(code: LinearCode, kind: str = "mld", max_iter: int = 50):
    if kind == "mld":
        return MLDecoder(code)
    if kind in ("sum_product", "spa", "bp"):
        return SumProductDecoder(code, max_iter)
    raise ValueError(f"unknown decoder {kind!r}")


def _block_errors(decoder, received, params, rng):
    if hasattr(decoder, "block_errors"):
        return np.asarray(decoder.block_errors(received, params, rng), dtype=bool)
    return np.asarray(decoder(received, params, rng), dtype=bool)


def _decoder_is_ml(decoder) -> bool:
    return getattr(decoder, "name", "") == "mld"


def shell_window(config: IsConfig, code: LinearCode, params: GgdParams,
                 ml_decoding: bool = True) -> ShellGrid:
    p = params.p
    rule = config.r_min_rule
    if rule == "packing":
        if ml_decoding and p >= 1:
            if code.d_min is None:
                raise ValueError(f"{code.name}: d_min is needed for the packing-radius rule")
            r_min = code.d_min ** (1.0 / p)
        else:
            r_min = 0.0
    elif rule == "zero":
        r_min = 0.0
    else:
        r_min = float(rule)
    rule = config.r_max_rule
    if rule in ("auto", "fixed_multiple"):
        base = 5 * code.d_min ** (1.0 / p) if code.d_min is not None else 0.0
        r_max = base if rule == "fixed_multiple" else max(base, radius_quantile(config.tail_mass, params))
    else:
        r_max = float(rule)
    return ShellGrid(r_min, r_max, config.m)


def repaired_error_ratios(theta_hat) -> np.ndarray:
    """Replace each zero ratio by the nearest nonzero one at a larger index (else 1)."""
    theta = np.asarray(theta_hat, dtype=float)
    out = theta.copy()
    nxt = 1.0
    for i in range(theta.size - 1, -1, -1):
        if theta[i] > 0:
            nxt = theta[i]
        else:
            out[i] = nxt
    return out


def update_pmf(hist: ShellHistogram) -> ShellHistogram:
    """P*_l proportional to sqrt(theta_l) g(r_l), computed in log space."""
    theta = repaired_error_ratios(hist.theta_hat)
    logw = 0.5 * np.log(theta) + hist.log_g
    pmf = np.exp(logw - logsumexp(logw))
    # a shell with positive theta must stay reachable after underflow
    tiny = np.finfo(float).tiny
    if np.any(pmf < tiny):
        pmf = np.maximum(pmf, tiny)
        pmf /= pmf.sum()
    out = hist.copy()
    out.pmf = pmf
    return out


def update_error_ratios(hist: ShellHistogram) -> ShellHistogram:
    """theta_l = errors_l / samples_l over all samples; untouched shells keep 1."""
    out = hist.copy()
    seen = out.samples > 0
    out.theta_hat = np.ones(out.grid.m)
    out.theta_hat[seen] = out.errors[seen] / out.samples[seen]
    return out


def init_histogram(config: IsConfig, code: LinearCode, params: GgdParams,
                   ml_decoding: bool = True) -> ShellHistogram:
    params = params.with_n(code.n)
    grid = shell_window(config, code, params, ml_decoding)
    m = grid.m
    hist = ShellHistogram(grid, np.ones(m), np.full(m, 1.0 / m), np.zeros(m, np.int64),
                          np.zeros(m, np.int64), radius_logpdf(grid.upper_edges, params),
                          code.name, params.p)
    return update_pmf(hist)


def _rebase(hist: ShellHistogram, code: LinearCode, params: GgdParams) -> ShellHistogram:
    """Reuse a histogram's grid and tallies at a new noise level."""
    if hist.code_name != code.name or hist.p != params.p:
        raise ValueError(f"histogram for ({hist.code_name}, p={hist.p}) cannot warm-start "
                         f"({code.name}, p={params.p})")
    out = hist.copy()
    out.log_g = radius_logpdf(out.grid.upper_edges, params)
    return update_pmf(update_error_ratios(out))


def _kappa(s1, s2, n):
    """Relative error of the mean of n weighted indicators with sums s1, s2."""
    mean = s1 / n
    with np.errstate(divide="ignore", invalid="ignore"):
        var = np.maximum(s2 / n - mean * mean, 0.0) * n / np.maximum(n - 1, 1) / n
        kappa = np.where(mean > 0, np.sqrt(var) / np.where(mean > 0, mean, 1.0), np.inf)
    return mean, var, kappa


def _first_stop(kappa, n, n_min, target):
    hit = np.nonzero((n >= n_min) & (kappa <= target))[0]
    return int(hit[0]) if hit.size else None


def mc_estimate(code: LinearCode, decoder, params: GgdParams, kappa_target: float = 0.1,
                max_samples: int = 10 ** 7, rng=None, min_samples: int = 500,
                batch: int = 20000) -> Estimate:
    """Plain Monte Carlo with per-sample stopping at ``kappa_target``.

    ``min_samples`` guards against stopping on a lucky early burst of errors.
    """
    params = params.with_n(code.n)
    rng = make_rng(rng)
    start = time.perf_counter()
    n_done, errs = 0, 0
    while n_done < max_samples:
        size = min(batch, max_samples - n_done)
        y = -1.0 + _noise(params, rng, size)
        e = _block_errors(decoder, y, params, rng)
        cum = errs + np.cumsum(e)
        n = n_done + np.arange(1, size + 1)
        pm = cum / n
        with np.errstate(divide="ignore", invalid="ignore"):
            kappa = np.where(cum > 0, np.sqrt((1 - pm) / (n * pm)), np.inf)
        stop = _first_stop(kappa, n, min_samples, kappa_target)
        if stop is not None:
            n_done, errs = int(n[stop]), int(cum[stop])
            break
        n_done, errs = int(n[-1]), int(cum[-1])
    wer = errs / n_done
    var = wer * (1 - wer) / n_done
    kappa = math.sqrt(var) / wer if wer > 0 else math.inf
    return Estimate(wer, var, kappa, n_done, time.perf_counter() - start, 0.0, kappa_target, errs)


def _noise(params: GgdParams, rng, size):
    return ggd_sample(params, rng, size=(size, params.n))


def _draw(hist, decoder, params, rng, count):
    """One worker's share of a block: weighted indicators and shell tallies."""
    if count == 0:
        return np.zeros(0), np.zeros(0, np.int64), np.zeros(0, bool)
    z, shell, r = sample_noise_in_shell(hist.grid, hist.pmf, params.p, params.n, rng, count)
    err = _block_errors(decoder, -1.0 + z, params, rng)
    logw = radius_logpdf(r, params) + math.log(hist.grid.delta_r) - np.log(hist.pmf[shell])
    w = np.exp(logw)
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        bad = np.nonzero(~np.isfinite(w) | (w <= 0))[0][0]
        raise EstimatorContractError(
            f"non-finite IS weight in shell {shell[bad]} (pmf={hist.pmf[shell[bad]]!r}, r={r[bad]!r})")
    return np.where(err, w, 0.0), shell, err


def is_estimate(code: LinearCode, decoder, params: GgdParams, config: IsConfig = IsConfig(),
                hist: Optional[ShellHistogram] = None, rng=None):
    """Adaptive shell IS estimate of the WER; returns ``(Estimate, ShellHistogram)``.

    ``hist`` warm-starts from earlier tallies (its grid is kept).  ``rng`` may be
    a seed, a SeedSequence or a Generator; one stream per worker is spawned
    from it, defaulting to ``config.seed``.
    """
    params = params.with_n(code.n)
    if rng is None:
        rng = config.seed
    if isinstance(rng, np.random.Generator):
        streams = [rng] if config.workers == 1 else spawn_streams(int(rng.integers(2 ** 63)), config.workers)
    else:
        streams = spawn_streams(rng, config.workers)
    if hist is None:
        hist = init_histogram(config, code, params, _decoder_is_ml(decoder))
    else:
        hist = _rebase(hist, code, params)
    start = time.perf_counter()
    s1 = s2 = 0.0
    n_done = errs = 0
    kappa = math.inf
    pool = ThreadPoolExecutor(config.workers) if config.workers > 1 else None
    try:
        while n_done < config.max_samples:
            size = min(config.n_step, config.max_samples - n_done)
            shares = [size // config.workers + (i < size % config.workers) for i in range(config.workers)]
            snap = hist
            if pool is None:
                parts = [_draw(snap, decoder, params, streams[0], size)]
            else:
                parts = list(pool.map(lambda a: _draw(snap, decoder, params, *a),
                                      zip(streams, shares)))
            wi = np.concatenate([q[0] for q in parts])
            shell = np.concatenate([q[1] for q in parts])
            err = np.concatenate([q[2] for q in parts])
            c1 = s1 + np.cumsum(wi)
            c2 = s2 + np.cumsum(wi * wi)
            n = n_done + np.arange(1, size + 1)
            _, _, kap = _kappa(c1, c2, n)
            stop = _first_stop(kap, n, config.n_min, config.kappa_target)
            used = size if stop is None else stop + 1
            np.add.at(hist.samples, shell[:used], 1)
            np.add.at(hist.errors, shell[:used], err[:used].astype(np.int64))
            s1, s2 = float(c1[used - 1]), float(c2[used - 1])
            n_done += used
            errs += int(err[:used].sum())
            kappa = float(kap[used - 1])
            if stop is not None:
                break
            if config.adapt and n_done >= config.n_min:
                hist = update_pmf(update_error_ratios(hist))
    finally:
        if pool is not None:
            pool.shutdown()
    hist = update_error_ratios(hist)
    mean, var, _ = _kappa(s1, s2, n_done)
    est = Estimate(float(mean), float(var), kappa, n_done, time.perf_counter() - start,
                   float(radius_tail(hist.grid.r_max, params)), config.kappa_target, errs)
    return est, hist


def simulated_is_gain(is_est: Estimate, reference: Union[Estimate, float, None] = None) -> float:
    """gamma = N_MC / N_IS at equal relative error.

    With no MC reference, N_MC is the count plain MC would need at the same
    target: ``1 / (kappa_target**2 * wer)``, i.e. 100 / wer at kappa = 0.1.
    Without a target the relative error the run reached is used instead.
    """
    if isinstance(reference, Estimate):
        if not math.isclose(reference.kappa_target, is_est.kappa_target):
            raise ValueError("gain is undefined for estimates with different kappa targets")
        n_mc = reference.samples
    elif reference is not None:
        n_mc = float(reference)
    else:
        kappa = is_est.kappa_target if math.isfinite(is_est.kappa_target) else is_est.relative_error
        if not (is_est.wer > 0 and 0 < kappa < math.inf):
            return math.nan
        n_mc = 1.0 / (kappa ** 2 * is_est.wer)
    return n_mc / is_est.samples


def save_histogram(hist: ShellHistogram, path) -> None:
    data = {
        "code_name": hist.code_name,
        "p": hist.p,
        "grid": {"r_min": hist.grid.r_min, "r_max": hist.grid.r_max, "m": hist.grid.m},
        "tallies": {"samples": hist.samples.tolist(), "errors": hist.errors.tolist()},
    }
    Path(path).write_text(json.dumps(data) + "\n")


def load_histogram(path, code: LinearCode, params: GgdParams) -> ShellHistogram:
    """Read saved tallies; only the same (code, p) pair may reuse them."""
    data = json.loads(Path(path).read_text())
    if data["code_name"] != code.name or float(data["p"]) != float(params.p):
        raise ValueError(f"{path}: histogram belongs to ({data['code_name']}, p={data['p']}), "
                         f"not ({code.name}, p={params.p})")
    g = data["grid"]
    grid = ShellGrid(float(g["r_min"]), float(g["r_max"]), int(g["m"]))
    samples = np.asarray(data["tallies"]["samples"], dtype=np.int64)
    errors = np.asarray(data["tallies"]["errors"], dtype=np.int64)
    if samples.shape != (grid.m,) or errors.shape != (grid.m,) or np.any(errors > samples) \
            or np.any(errors < 0):
        raise ValueError(f"{path}: inconsistent tallies")
    params = params.with_n(code.n)
    hist = ShellHistogram(grid, np.ones(grid.m), np.full(grid.m, 1.0 / grid.m), samples, errors,
                          radius_logpdf(grid.upper_edges, params), code.name, params.p)
    return update_pmf(update_error_ratios(hist))
