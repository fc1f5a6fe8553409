"""Brute-force reference implementations used by the tests.

Nothing here imports hofa; each routine follows the textbook definition with
plain Python loops so it can serve as an independent oracle.
"""

import itertools
import math

import numpy as np


def points(p, n):
    """All points of F_p^n in canonical order (coordinate 0 varies fastest)."""
    return [tuple(reversed(t)) for t in itertools.product(range(p), repeat=n)]


def index(x, p):
    return sum(int(c) * p**i for i, c in enumerate(x))


def add(x, y, p):
    return tuple((a + b) % p for a, b in zip(x, y))


def gowers_power(vals, p, n, d):
    """E_{x,h_1..h_d} prod_{S} C^{d-|S|} f(x + sum_S h) over every tuple."""
    pts = points(p, n)
    vals = np.asarray(vals)
    total = 0.0
    for x in pts:
        for hs in itertools.product(pts, repeat=d):
            prod = 1.0 + 0j
            for mask in range(2**d):
                y = x
                for i in range(d):
                    if mask >> i & 1:
                        y = add(y, hs[i], p)
                v = complex(vals[index(y, p)])
                if (d - bin(mask).count("1")) % 2:
                    v = v.conjugate()
                prod *= v
            total += prod.real
    return total / len(pts) ** (d + 1)


def gowers(vals, p, n, d):
    return max(gowers_power(vals, p, n, d), 0.0) ** (1.0 / 2**d)


def rank(M, p):
    M = [list(r) for r in M]
    r = 0
    cols = len(M[0]) if M else 0
    for c in range(cols):
        piv = next((i for i in range(r, len(M)) if M[i][c] % p), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        inv = pow(M[r][c], -1, p)
        M[r] = [(v * inv) % p for v in M[r]]
        for i in range(len(M)):
            if i != r and M[i][c] % p:
                f = M[i][c]
                M[i] = [(a - f * b) % p for a, b in zip(M[i], M[r])]
        r += 1
    return r


def embeddings(k, n, p):
    """Every injective affine map as (image index tuple), via matrices and shifts."""
    src = points(p, k)
    out = []
    for cols in itertools.product(points(p, n), repeat=k):
        if k and rank([list(c) for c in cols], p) < k:
            continue
        for c in points(p, n):
            img = []
            for y in src:
                x = list(c)
                for j, col in enumerate(cols):
                    for i in range(n):
                        x[i] = (x[i] + y[j] * col[i]) % p
                img.append(index(x, p))
            out.append(tuple(img))
    return out


def mu(vals, p, n, k):
    """{bit-tuple: probability} over all embeddings for a {0,1}-valued table."""
    counts = {}
    embs = embeddings(k, n, p)
    for img in embs:
        key = tuple(int(vals[i]) for i in img)
        counts[key] = counts.get(key, 0) + 1
    return {key: c / len(embs) for key, c in counts.items()}


def fourier4(vals, p, n):
    """sum_alpha |f_hat(alpha)|^4 by direct character sums."""
    pts = points(p, n)
    total = 0.0
    for a in pts:
        s = sum(complex(vals[index(x, p)]) * np.exp(-2j * np.pi * sum(u * v for u, v in zip(a, x)) / p)
                for x in pts)
        total += abs(s / len(pts)) ** 4
    return total


def min_hamming(table, members):
    return min(sum(int(a != b) for a, b in zip(table, m)) for m in members)


def rm_codewords(p, n, d):
    """All tables of classical polynomials of degree <= d, as tuples."""
    pts = points(p, n)
    monos = [e for e in itertools.product(range(p), repeat=n) if sum(e) <= d]
    words = set()
    for coeffs in itertools.product(range(p), repeat=len(monos)):
        words.add(tuple(
            sum(c * math.prod(x[i] ** e[i] for i in range(n)) for c, e in zip(coeffs, monos)) % p
            for x in pts
        ))
    return sorted(words)


def in_span(v, vecs, p):
    """Brute force: v is some F_p-combination of vecs."""
    for coeffs in itertools.product(range(p), repeat=len(vecs)):
        w = [sum(c * u[i] for c, u in zip(coeffs, vecs)) % p for i in range(len(v))]
        if w == [x % p for x in v]:
            return True
    return False


def cs_complexity(forms, p):
    """Least s such that every form's complement splits into s+1 parts avoiding it."""
    worst = 0
    for i, L in enumerate(forms):
        others = [M for j, M in enumerate(forms) if j != i]
        if not others:
            continue
        for parts in range(1, len(others) + 1):
            ok = any(
                all(not in_span(L, [M for M, c in zip(others, colour) if c == g], p) for g in range(parts))
                for colour in itertools.product(range(parts), repeat=len(others))
            )
            if ok:
                break
        else:
            return None
        worst = max(worst, parts)
    return max(worst - 1, 0)
