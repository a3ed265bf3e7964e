"""Maximum-likelihood and sum-product decoders for BPSK over GGD noise.

Both decoders expose ``block_errors(received, params, rng)`` which takes a
(B, n) batch of channel outputs for the transmitted all-zero codeword (sent as
all -1) and returns a boolean error indicator per row.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .codes import LinearCode, codebook
from .ggd_channel import GgdParams
from .rng import make_rng

__all__ = [
    "DecodeOutcome",
    "TIE_TOLERANCE",
    "LLR_CLIP",
    "coordinate_metric_gap",
    "channel_llr",
    "mld_decode",
    "sum_product_decode",
    "MLDecoder",
    "SumProductDecoder",
]

TIE_TOLERANCE = 1e-12
LLR_CLIP = 30.0


@dataclass(frozen=True)
class DecodeOutcome:
    decoded_word: Optional[np.ndarray]
    is_block_error: bool
    tie_flag: bool = False
    iterations: int = 0


def coordinate_metric_gap(y, p: float) -> np.ndarray:
    """``|y - 1|**p - |y + 1|**p``: metric change when a bit flips from 0 to 1.

    For p = 1 the exact form ``-2 * clip(y, -1, 1)`` is used so that the
    atoms of the Laplace metric produce exact ties.
    """
    y = np.asarray(y, dtype=float)
    if p == 1:
        return -2.0 * np.clip(y, -1.0, 1.0)
    if p == 2:
        return -4.0 * y
    return np.abs(y - 1.0) ** p - np.abs(y + 1.0) ** p


def channel_llr(y, params: GgdParams) -> np.ndarray:
    """log Pr(c=0 | y) / Pr(c=1 | y) per coordinate; positive favours bit 0."""
    return coordinate_metric_gap(y, params.p) / params.alpha ** params.p


def _bpsk(c):
    return 2.0 * np.asarray(c, dtype=float) - 1.0


def mld_decode(received, code: LinearCode, p: float, transmitted=None,
               rng: Optional[np.random.Generator] = None) -> DecodeOutcome:
    """Exhaustive minimum-``||y - (2c - 1)||_p^p`` decoding.

    Minimizers within :data:`TIE_TOLERANCE` are tied and one is picked
    uniformly at random, which gives each of two tied words probability 1/2.
    """
    y = np.asarray(received, dtype=float)
    if y.shape != (code.n,):
        raise ValueError(f"received word must have length {code.n}")
    words = codebook(code)
    if transmitted is None:
        transmitted = np.zeros(code.n, dtype=np.uint8)
    metrics = np.sum(np.abs(y[None, :] - _bpsk(words)) ** p, axis=1)
    best = metrics.min()
    tied = np.nonzero(metrics <= best + TIE_TOLERANCE)[0]
    if tied.size > 1:
        pick = tied[(rng if rng is not None else make_rng(0)).integers(tied.size)]
    else:
        pick = tied[0]
    word = words[pick]
    return DecodeOutcome(word, bool(np.any(word != transmitted)), tied.size > 1)


class MLDecoder:
    """Batch ML decoder for the all-zero codeword using the codebook metric gaps."""

    name = "mld"

    def __init__(self, code: LinearCode):
        self.code = code
        # nonzero codewords only, as float columns
        self._words = codebook(code)[1:].T.astype(float)

    def block_errors(self, received, params: GgdParams, rng: np.random.Generator) -> np.ndarray:
        gap = coordinate_metric_gap(received, params.p)
        # metric of each codeword relative to the transmitted one
        rel = gap @ self._words
        low = rel.min(axis=1)
        err = low < -TIE_TOLERANCE
        tie = ~err & (low <= TIE_TOLERANCE)
        if np.any(tie):
            rows = np.nonzero(tie)[0]
            ties = np.sum(rel[rows] <= TIE_TOLERANCE, axis=1)
            # the transmitted word is one of ties + 1 equally likely minimizers
            err[rows] = rng.random(rows.size) * (ties + 1) >= 1.0
        return err

    def decode(self, received, params: GgdParams, rng=None) -> DecodeOutcome:
        return mld_decode(received, self.code, params.p, rng=rng)


class SumProductDecoder:
    """Flooding-schedule belief propagation with the tanh check rule."""

    name = "sum_product"

    def __init__(self, code: LinearCode, max_iter: int = 50, clip: float = LLR_CLIP):
        if code.parity_check is None:
            raise ValueError(f"{code.name}: sum-product decoding needs a parity-check matrix")
        self.code = code
        self.max_iter = int(max_iter)
        self.clip = float(clip)
        h = code.parity_check
        checks, variables = np.nonzero(h)
        order = np.lexsort((variables, checks))
        self._chk = checks[order]
        self._var = variables[order]
        self._starts = np.searchsorted(self._chk, np.arange(h.shape[0]))
        self._h = h.astype(np.int64)
        # edge -> variable incidence, used to sum check messages per bit
        self._gather = np.zeros((self._var.size, h.shape[1]))
        self._gather[np.arange(self._var.size), self._var] = 1.0

    def _syndrome_ok(self, hard):
        return ~np.any((hard.astype(np.int64) @ self._h.T) % 2, axis=1)

    def run(self, llr):
        """Decode a (B, n) batch of channel LLRs.

        Returns hard decisions, a converged flag and the iteration count per row.
        """
        llr = np.clip(np.atleast_2d(np.asarray(llr, dtype=float)), -self.clip, self.clip)
        b, n = llr.shape
        hard = (llr < 0).astype(np.uint8)
        done = self._syndrome_ok(hard)
        iters = np.zeros(b, dtype=np.int64)
        active = np.nonzero(~done)[0]
        if active.size == 0:
            return hard, done, iters
        ch = llr[active]
        v2c = ch[:, self._var]
        for it in range(1, self.max_iter + 1):
            t = np.tanh(0.5 * v2c)
            mag = np.log(np.maximum(np.abs(t), 1e-300))
            neg = (t < 0).astype(np.int64)
            tot_mag = np.add.reduceat(mag, self._starts, axis=1)[:, self._chk]
            tot_neg = np.add.reduceat(neg, self._starts, axis=1)[:, self._chk]
            ext = np.exp(tot_mag - mag)
            sign = 1 - 2 * ((tot_neg - neg) & 1)
            ext = np.minimum(ext, 1.0 - 1e-15)
            c2v = np.clip(2.0 * np.arctanh(sign * ext), -self.clip, self.clip)
            post = ch + c2v @ self._gather
            dec = (post < 0).astype(np.uint8)
            ok = self._syndrome_ok(dec)
            hard[active] = dec
            iters[active] = it
            if np.any(ok):
                done[active[ok]] = True
                keep = ~ok
                active, ch, post, c2v = active[keep], ch[keep], post[keep], c2v[keep]
                if active.size == 0:
                    break
            v2c = np.clip(post[:, self._var] - c2v, -self.clip, self.clip)
        return hard, done, iters

    def block_errors(self, received, params: GgdParams, rng=None) -> np.ndarray:
        hard, done, _ = self.run(channel_llr(received, params))
        return ~done | np.any(hard != 0, axis=1)

    def decode(self, received, params: GgdParams, rng=None) -> DecodeOutcome:
        return sum_product_decode(received, self.code, params, self.max_iter)


def sum_product_decode(received, code: LinearCode, params: GgdParams, max_iter: int = 50,
                       transmitted=None) -> DecodeOutcome:
    """Belief propagation on the Tanner graph of ``code.parity_check``.

    A failure to satisfy every check after ``max_iter`` iterations is a block
    error with ``decoded_word=None``.
    """
    y = np.asarray(received, dtype=float)
    dec = SumProductDecoder(code, max_iter)
    hard, done, iters = dec.run(channel_llr(y[None, :], params))
    if transmitted is None:
        transmitted = np.zeros(code.n, dtype=np.uint8)
    if not done[0]:
        return DecodeOutcome(None, True, False, int(iters[0]))
    return DecodeOutcome(hard[0], bool(np.any(hard[0] != transmitted)), False, int(iters[0]))
