"""Binary linear block codes: validation, encoding, weight enumeration and I/O."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

__all__ = [
    "LinearCode",
    "CodeValidationError",
    "EnumerationBudgetError",
    "MAX_ENUMERATION_K",
    "gf2_rank",
    "gf2_nullspace",
    "encode",
    "codebook",
    "weight_distribution",
    "orthogonal_check_bound",
    "load_code",
    "save_code",
    "bundled_code",
    "bundled_code_names",
]

MAX_ENUMERATION_K = 26


class CodeValidationError(ValueError):
    pass


class EnumerationBudgetError(ValueError):
    """Raised when exhaustive enumeration over 2**k codewords is refused."""


def gf2_rank(mat) -> int:
    a = np.array(mat, dtype=np.uint8) & 1
    rows, cols = a.shape
    rank = 0
    for c in range(cols):
        if rank == rows:
            break
        pivot = np.nonzero(a[rank:, c])[0]
        if pivot.size == 0:
            continue
        pr = rank + pivot[0]
        if pr != rank:
            a[[rank, pr]] = a[[pr, rank]]
        hits = np.nonzero(a[:, c])[0]
        hits = hits[hits != rank]
        a[hits] ^= a[rank]
        rank += 1
    return rank


def gf2_nullspace(mat) -> np.ndarray:
    """Basis (as rows) of the right null space of ``mat`` over GF(2)."""
    a = np.array(mat, dtype=np.uint8) & 1
    rows, cols = a.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(a[r:, c])[0]
        if nz.size == 0:
            continue
        pr = r + nz[0]
        if pr != r:
            a[[r, pr]] = a[[pr, r]]
        hits = np.nonzero(a[:, c])[0]
        hits = hits[hits != r]
        a[hits] ^= a[r]
        pivots.append(c)
        r += 1
    free = [c for c in range(cols) if c not in set(pivots)]
    basis = np.zeros((len(free), cols), dtype=np.uint8)
    for i, f in enumerate(free):
        basis[i, f] = 1
        for row, pc in enumerate(pivots):
            basis[i, pc] = a[row, f]
    return basis


def _bits(rows) -> np.ndarray:
    return np.array([[int(ch) for ch in row] for row in rows], dtype=np.uint8)


def _bitstrings(mat) -> list[str]:
    return ["".join(str(int(b)) for b in row) for row in np.asarray(mat)]


@dataclass(frozen=True, eq=False)
class LinearCode:
    """An (n, k) binary linear code given by its generator matrix.

    ``weight_distribution`` maps each nonzero Hamming weight d to A_d.
    """

    generator: np.ndarray
    parity_check: Optional[np.ndarray] = None
    weight_distribution: Optional[dict] = None
    d_min: Optional[int] = None
    name: str = "code"
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        g = np.asarray(self.generator, dtype=np.uint8)
        if g.ndim != 2 or g.shape[0] < 1 or g.shape[0] > g.shape[1]:
            raise CodeValidationError(f"generator must be k x n with 1 <= k <= n, got {g.shape}")
        if np.any(g > 1):
            raise CodeValidationError("generator entries must be 0 or 1")
        if gf2_rank(g) != g.shape[0]:
            raise CodeValidationError("generator matrix is rank deficient over GF(2)")
        object.__setattr__(self, "generator", g)
        if self.parity_check is not None:
            h = np.asarray(self.parity_check, dtype=np.uint8)
            if h.ndim != 2 or h.shape[1] != g.shape[1]:
                raise CodeValidationError("parity-check matrix has the wrong number of columns")
            if np.any((g.astype(np.int64) @ h.T.astype(np.int64)) % 2):
                raise CodeValidationError("G * H^T is not zero")
            if gf2_rank(h) != g.shape[1] - g.shape[0]:
                raise CodeValidationError("parity-check rank does not equal n - k")
            object.__setattr__(self, "parity_check", h)
        if self.weight_distribution is not None:
            wd = {int(d): int(a) for d, a in dict(self.weight_distribution).items() if int(a) != 0}
            if any(d < 1 or d > self.n or a < 0 for d, a in wd.items()):
                raise CodeValidationError("weight distribution has out-of-range entries")
            if sum(wd.values()) != 2 ** self.k - 1:
                raise CodeValidationError(
                    f"weight distribution counts {sum(wd.values())} words, expected {2 ** self.k - 1}")
            if self.d_min is not None and min(wd) != self.d_min:
                raise CodeValidationError(f"d_min={self.d_min} disagrees with weight distribution")
            object.__setattr__(self, "weight_distribution", dict(sorted(wd.items())))
            if self.d_min is None:
                object.__setattr__(self, "d_min", min(wd))
        if self.d_min is not None and not (1 <= int(self.d_min) <= self.n):
            raise CodeValidationError(f"d_min out of range: {self.d_min}")

    @property
    def n(self) -> int:
        return self.generator.shape[1]

    @property
    def k(self) -> int:
        return self.generator.shape[0]

    @property
    def rate(self) -> float:
        return self.k / self.n

    def a_dmin(self) -> int:
        if self.weight_distribution is None or self.d_min is None:
            raise ValueError(f"{self.name}: weight distribution and d_min are required")
        return self.weight_distribution[self.d_min]


def encode(message, code: LinearCode) -> np.ndarray:
    """``message @ G`` over GF(2); accepts one message or a (B, k) batch."""
    m = np.asarray(message, dtype=np.int64)
    if m.shape[-1] != code.k:
        raise ValueError(f"message length {m.shape[-1]} does not match k={code.k}")
    return ((m @ code.generator.astype(np.int64)) % 2).astype(np.uint8)


def _check_budget(code: LinearCode):
    if code.k > MAX_ENUMERATION_K:
        raise EnumerationBudgetError(
            f"{code.name}: k={code.k} exceeds the exhaustive enumeration budget "
            f"k <= {MAX_ENUMERATION_K}; supply a tabulated weight distribution")


def _packed_rows(code: LinearCode) -> np.ndarray:
    """Generator rows packed into 64-bit words, shape (k, W)."""
    words = (code.n + 63) // 64
    out = np.zeros((code.k, words), dtype=np.uint64)
    for j in range(code.n):
        out[:, j // 64] |= code.generator[:, j].astype(np.uint64) << np.uint64(j % 64)
    return out


def _span(rows: np.ndarray) -> np.ndarray:
    """All XOR combinations of ``rows``; index bit i selects row i."""
    out = np.zeros((1, rows.shape[1]), dtype=np.uint64)
    for row in rows:
        out = np.concatenate([out, out ^ row])
    return out


def weight_distribution(code: LinearCode) -> dict:
    """Exact A_d over all 2**k codewords, the zero word excluded."""
    _check_budget(code)
    packed = _packed_rows(code)
    low = min(code.k, 16)
    table = _span(packed[:low])
    high = _span(packed[low:])
    counts = np.zeros(code.n + 1, dtype=np.int64)
    for offset in high:
        w = np.bitwise_count(table ^ offset).sum(axis=1)
        counts += np.bincount(w, minlength=code.n + 1)
    counts[0] -= 1
    return {d: int(a) for d, a in enumerate(counts) if a}


def codebook(code: LinearCode) -> np.ndarray:
    """All codewords as a (2**k, n) uint8 array; row i encodes the bits of i."""
    _check_budget(code)
    if "codebook" not in code._cache:
        k = code.k
        msgs = (np.arange(2 ** k)[:, None] >> np.arange(k)[None, :]) & 1
        code._cache["codebook"] = encode(msgs, code)
    return code._cache["codebook"]


def orthogonal_check_bound(parity_check) -> int:
    """Lower bound J + 1 on d_min, J = checks orthogonal on every bit (greedy)."""
    h = np.asarray(parity_check, dtype=np.uint8)
    worst = None
    for i in range(h.shape[1]):
        covered = np.zeros(h.shape[1], dtype=bool)
        count = 0
        for row in h[h[:, i] == 1]:
            support = row.astype(bool).copy()
            support[i] = False
            if not np.any(covered & support):
                covered |= support
                count += 1
        worst = count if worst is None else min(worst, count)
    return int(worst) + 1


def _to_json(code: LinearCode) -> dict:
    out = {"name": code.name, "n": code.n, "k": code.k, "generator": _bitstrings(code.generator)}
    if code.parity_check is not None:
        out["parity_check"] = _bitstrings(code.parity_check)
    if code.weight_distribution is not None:
        out["weight_distribution"] = {str(d): a for d, a in code.weight_distribution.items()}
    if code.d_min is not None:
        out["d_min"] = int(code.d_min)
    return out


def _from_json(data: dict, validate: bool = True) -> LinearCode:
    try:
        g = _bits(data["generator"])
        h = _bits(data["parity_check"]) if data.get("parity_check") else None
        n, k = int(data["n"]), int(data["k"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CodeValidationError(f"malformed code file: {exc}") from exc
    if g.shape != (k, n):
        raise CodeValidationError(f"generator shape {g.shape} does not match (k, n) = ({k}, {n})")
    wd = data.get("weight_distribution")
    code = LinearCode(g, h, wd, data.get("d_min"), data.get("name", "code"))
    if validate and code.k <= MAX_ENUMERATION_K:
        actual = weight_distribution(code)
        if code.weight_distribution is not None and actual != code.weight_distribution:
            raise CodeValidationError(f"{code.name}: declared weight distribution does not match the code")
        if code.d_min is not None and min(actual) != code.d_min:
            raise CodeValidationError(f"{code.name}: declared d_min={code.d_min}, actual {min(actual)}")
        if code.weight_distribution is None:
            code = LinearCode(g, h, actual, code.d_min, code.name)
    return code


def load_code(path, validate: bool = True) -> LinearCode:
    """Read a JSON code file; with ``validate`` the weight table is re-derived when k allows."""
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise CodeValidationError(f"{path}: not valid JSON ({exc})") from exc
    return _from_json(data, validate)


def save_code(code: LinearCode, path) -> None:
    Path(path).write_text(json.dumps(_to_json(code), indent=1) + "\n")


def _data_dir():
    env = os.environ.get("LPIS_DATA_DIR")
    if env:
        return Path(env)
    return resources.files("lpis") / "data"


def bundled_code_names() -> list[str]:
    return sorted(p.name[:-5] for p in _data_dir().iterdir() if p.name.endswith(".json"))


def bundled_code(name: str, validate: bool = True) -> LinearCode:
    """Load one of the packaged codes, e.g. ``"bch_15_7"``."""
    target = _data_dir() / f"{name}.json"
    if not target.is_file():
        raise FileNotFoundError(f"no bundled code named {name!r}; have {bundled_code_names()}")
    return _from_json(json.loads(target.read_text()), validate)
