"""Regenerate the bundled code files in src/lpis/data.

BCH codes come from products of minimal polynomials; EG-LDPC codes from the
circulant incidence matrix of a line of the Euclidean plane EG(2, 2**s).
"""

import sys
from pathlib import Path

import numpy as np

from lpis.codes import LinearCode, gf2_nullspace, save_code, weight_distribution

DATA = Path(__file__).resolve().parents[1] / "src" / "lpis" / "data"
PRIMITIVE = {4: 0b10011, 5: 0b100101, 6: 0b1000011}


def gf_tables(m):
    poly, size = PRIMITIVE[m], 2 ** m
    exp = [0] * (2 * size)
    log = [0] * size
    x = 1
    for i in range(size - 1):
        exp[i] = x
        log[x] = i
        x <<= 1
        if x & size:
            x ^= poly
    for i in range(size - 1, 2 * size):
        exp[i] = exp[i - (size - 1)]
    return exp, log


def poly_mul(a, b):
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


def poly_divmod(a, b):
    q = 0
    db = b.bit_length()
    while a.bit_length() >= db:
        s = a.bit_length() - db
        q |= 1 << s
        a ^= b << s
    return q, a


def minimal_poly(m, e):
    """Minimal polynomial over GF(2) of alpha**e (as an int bitmask)."""
    exp, log = gf_tables(m)
    order = 2 ** m - 1
    conj, c = [], e % order
    while c not in conj:
        conj.append(c)
        c = (2 * c) % order
    # coefficients in GF(2**m), lowest degree first
    coeffs = [1]
    for c in conj:
        root = exp[c]
        new = [0] * (len(coeffs) + 1)
        for i, a in enumerate(coeffs):
            new[i + 1] ^= a
            if a:
                new[i] ^= exp[(log[a] + log[root]) % order]
        coeffs = new
    assert all(a in (0, 1) for a in coeffs)
    return sum(a << i for i, a in enumerate(coeffs))


def cyclic_matrix(poly, rows, n):
    deg = poly.bit_length() - 1
    base = np.array([(poly >> i) & 1 for i in range(deg + 1)], dtype=np.uint8)
    out = np.zeros((rows, n), dtype=np.uint8)
    for r in range(rows):
        out[r, r:r + deg + 1] = base
    return out


def bch(m, t):
    n = 2 ** m - 1
    g = 1
    seen = set()
    for e in range(1, 2 * t, 2):
        mp = minimal_poly(m, e)
        if mp not in seen:
            seen.add(mp)
            g = poly_mul(g, mp)
    k = n - (g.bit_length() - 1)
    h, rem = poly_divmod((1 << n) | 1, g)
    assert rem == 0
    # reciprocal polynomial x**k h(1/x)
    hrev = int(bin(h)[2:].zfill(k + 1)[::-1], 2)
    return cyclic_matrix(g, k, n), cyclic_matrix(hrev, n - k, n)


def eg_ldpc(s):
    m = 2 * s
    n = 2 ** m - 1
    exp, log = gf_tables(m)
    # GF(2**s) sits inside GF(2**m) as {0} U {alpha**(j*(2**s+1))}
    sub = [0] + [exp[(j * (2 ** s + 1)) % n] for j in range(2 ** s - 1)]
    alpha = exp[1]
    points = []
    for beta in sub:
        prod = 0 if beta == 0 else exp[(log[beta] + log[alpha]) % n]
        points.append(1 ^ prod)
    assert 0 not in points
    row = np.zeros(n, dtype=np.uint8)
    row[[log[x] for x in points]] = 1
    h_full = np.array([np.roll(row, i) for i in range(n)], dtype=np.uint8)
    # the full circulant is kept: its redundant rows help belief propagation
    # and make every bit see 2**s orthogonal checks
    return gf2_nullspace(h_full), h_full


def main():
    DATA.mkdir(parents=True, exist_ok=True)
    for name, (g, h) in {"bch_15_7": bch(4, 2), "bch_31_11": bch(5, 5)}.items():
        code = LinearCode(g, h, name=name)
        code = LinearCode(g, h, weight_distribution(code), name=name)
        save_code(code, DATA / f"{name}.json")
        print(name, code.k, code.weight_distribution)
    g, h = eg_ldpc(2)
    code = LinearCode(g, h, name="eg_ldpc_15_7")
    code = LinearCode(g, h, weight_distribution(code), name="eg_ldpc_15_7")
    save_code(code, DATA / "eg_ldpc_15_7.json")
    print("eg_ldpc_15_7", code.k, code.d_min)
    g, h = eg_ldpc(3)
    code = LinearCode(g, h, None, 9, name="eg_ldpc_63_37")
    save_code(code, DATA / "eg_ldpc_63_37.json")
    print("eg_ldpc_63_37", code.k)


if __name__ == "__main__":
    sys.exit(main())
