"""Non-classical polynomials F_p^n -> T in monomial form.

A polynomial is a sum of monomials ``c * |x_1|^d_1 ... |x_n|^d_n / p^(k+1)``
(mod 1) with ``0 <= d_i < p``, ``c in {1..p-1}`` and depth index ``k``.  Its
degree is ``max(sum(d_i) + k(p-1))`` and its depth is the largest ``k``.
Shifts are always zero; a constant ``c/p`` is admitted as the all-zero
exponent monomial at ``k = 0``.

Values are exact: a value at level ``L`` is an integer numerator over
``p^(L+1)``.  ``e(.)`` is applied only when converting to complex numbers.
"""

import math
from functools import lru_cache
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Dict, Iterator, Tuple

import numpy as np

from .errors import CapacityExceeded, DimensionError, ParseError
from .field import AffineMap, FieldParams, add_indices, enumerate_points, point_index
from .functions import COMPLEX, FiniteFunction

ENUM_CAP = 2**24
_DERIV_CAP = 2**25


@dataclass(frozen=True)
class TorsionValue:
    """numerator / p^(level+1) mod 1, an element of U_{level+1}."""

    numerator: int
    level: int
    p: int = 2

    def __post_init__(self):
        object.__setattr__(self, "numerator", self.numerator % self.p ** (self.level + 1))

    def lift(self, level):
        if level < self.level:
            raise ValueError("cannot lower the level of a torsion value")
        return TorsionValue(self.numerator * self.p ** (level - self.level), level, self.p)

    def as_fraction(self) -> Fraction:
        return Fraction(self.numerator, self.p ** (self.level + 1))

    def __add__(self, other):
        L = max(self.level, other.level)
        return TorsionValue(self.lift(L).numerator + other.lift(L).numerator, L, self.p)

    def __neg__(self):
        return TorsionValue(-self.numerator, self.level, self.p)

    def __sub__(self, other):
        return self + (-other)

    def __eq__(self, other):
        if not isinstance(other, TorsionValue):
            return NotImplemented
        return self.p == other.p and self.as_fraction() == other.as_fraction()

    def __hash__(self):
        return hash((self.p, self.as_fraction()))

    def e(self) -> complex:
        return complex(np.exp(2j * np.pi * float(self.as_fraction())))


class TorsionTable:
    """A function F_p^n -> U_{level+1} stored as integer numerators."""

    __slots__ = ("p", "n", "level", "num")

    def __init__(self, num, p, level, n=None):
        num = np.asarray(num, dtype=np.int64) % p ** (level + 1)
        if n is None:
            n = round(math.log(max(num.size, 1), p))
        if num.size != p**n:
            raise DimensionError(f"table of length {num.size} is not on F_{p}^{n}")
        num.setflags(write=False)
        self.p, self.n, self.level, self.num = p, n, level, num

    def at_level(self, level) -> np.ndarray:
        if level < self.level:
            raise ValueError("cannot lower the level of a torsion table")
        return self.num * self.p ** (level - self.level)

    def __add__(self, other):
        L = max(self.level, other.level)
        return TorsionTable(self.at_level(L) + other.at_level(L), self.p, L, self.n)

    def __neg__(self):
        return TorsionTable(-self.num, self.p, self.level, self.n)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, lam):
        return TorsionTable(self.num * int(lam), self.p, self.level, self.n)

    def __eq__(self, other):
        if not isinstance(other, TorsionTable) or (self.p, self.n) != (other.p, other.n):
            return False
        L = max(self.level, other.level)
        return np.array_equal(self.at_level(L), other.at_level(L))

    __hash__ = None

    def __getitem__(self, i):
        return TorsionValue(int(self.num[i]), self.level, self.p)

    def is_zero(self) -> bool:
        return not self.num.any()

    def e(self) -> FiniteFunction:
        """The complex table x -> e(P(x))."""
        phase = self.num.astype(np.float64) / self.p ** (self.level + 1)
        return FiniteFunction(np.exp(2j * np.pi * phase), self.p, kind=COMPLEX, n=self.n)

    def depth(self) -> int:
        """Smallest k with every value in U_{k+1} (0 for tables in iota(F))."""
        k, num = self.level, self.num
        while k > 0 and not (num % self.p).any():
            num = num // self.p
            k -= 1
        return k

    def normalized(self):
        k = self.depth()
        return TorsionTable(self.num // self.p ** (self.level - k), self.p, k, self.n)

    def restrict(self, A: AffineMap):
        if A.target_dim != self.n or A.p != self.p:
            raise DimensionError("affine map does not target this table's space")
        return TorsionTable(self.num[A.image_indices()], self.p, self.level, A.source_dim)

    def derivative(self, h):
        """Value table of D_h P(x) = P(x + h) - P(x)."""
        hi = _direction_index(h, self.p, self.n)
        shifted = self.num[add_indices(np.arange(self.num.size), hi, self.p, self.n)]
        return TorsionTable(shifted - self.num, self.p, self.level, self.n)

    def degree(self) -> int:
        """Exact degree: the least d with every (d+1)-fold derivative zero."""
        return table_degree(self.num, self.p, self.n, self.level)


def _direction_index(h, p, n):
    if np.ndim(h) == 0:
        return int(h)
    h = np.asarray(h)
    if h.shape != (n,):
        raise DimensionError(f"direction has {h.size} coordinates, expected {n}")
    return int(point_index(h, p))


def _derivative_rows(S, p, n, modulus, add):
    """All D_y s for rows s of S and every direction y, deduplicated, zero rows dropped."""
    N = S.shape[1]
    if S.shape[0] * N * N > _DERIV_CAP:
        raise CapacityExceeded(f"derivative closure of {S.shape[0]} tables on {N} points too large")
    D = (S[:, add] - S[:, None, :]) % modulus
    D = D.reshape(-1, N)
    D = D[D.any(axis=1)]
    if D.shape[0] == 0:
        return D
    return np.unique(D, axis=0)


@lru_cache(maxsize=16)
def _addition(p, n):
    N = p**n
    idx = np.arange(N)
    table = add_indices(idx[:, None], idx[None, :], p, n)
    table.setflags(write=False)
    return table


def vanishing_order(num, p, n, level, limit=None):
    """Least j such that all j-fold derivatives vanish (0 for the zero table)."""
    modulus = p ** (level + 1)
    S = (np.asarray(num, dtype=np.int64) % modulus).reshape(1, -1)
    S = S[S.any(axis=1)]
    add = _addition(p, n)
    j = 0
    while S.shape[0]:
        if limit is not None and j >= limit:
            return None
        S = _derivative_rows(S, p, n, modulus, add)
        j += 1
    return j


def table_degree(num, p, n, level) -> int:
    j = vanishing_order(num, p, n, level)
    return max(j - 1, 0)


class NonClassicalPoly:
    """Polynomial F_p^n -> T given by its monomial coefficients.

    ``monomials`` maps ``(exponents, k)`` to a coefficient in {1..p-1};
    zero coefficients are dropped.
    """

    __slots__ = ("p", "n", "monomials")

    def __init__(self, p, n, monomials=None):
        FieldParams(p, n)
        clean: Dict[Tuple[Tuple[int, ...], int], int] = {}
        for (exps, k), c in (dict(monomials or {})).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != n:
                raise DimensionError(f"monomial {exps} has {len(exps)} exponents, expected {n}")
            if any(e < 0 or e >= p for e in exps):
                raise ValueError(f"exponents must lie in [0, {p}), got {exps}")
            if k < 0:
                raise ValueError("depth index must be >= 0")
            if sum(exps) == 0 and k > 0:
                raise ValueError("constant monomials are only allowed at depth 0 (zero shift)")
            c = int(c) % p
            if c:
                clean[(exps, int(k))] = c
        self.p, self.n = p, n
        self.monomials = dict(sorted(clean.items()))

    @classmethod
    def zero(cls, p, n):
        return cls(p, n)

    @classmethod
    def linear(cls, p, coeffs, level=0):
        """sum_i coeffs[i] |x_i| / p^(level+1)."""
        n = len(coeffs)
        monos = {}
        for i, c in enumerate(coeffs):
            if c % p:
                e = [0] * n
                e[i] = 1
                monos[(tuple(e), level)] = c
        return cls(p, n, monos)

    @classmethod
    def monomial(cls, p, exps, k=0, c=1):
        return cls(p, len(exps), {(tuple(exps), k): c})

    def __repr__(self):
        terms = []
        for (exps, k), c in self.monomials.items():
            xs = "*".join(f"x{i + 1}" + (f"^{e}" if e > 1 else "") for i, e in enumerate(exps) if e) or "1"
            terms.append(f"{c}*{xs}/{self.p}^{k + 1}")
        return f"NonClassicalPoly(p={self.p}, n={self.n}: " + (" + ".join(terms) or "0") + ")"

    def __eq__(self, other):
        return isinstance(other, NonClassicalPoly) and (self.p, self.n, self.monomials) == (
            other.p, other.n, other.monomials)

    def __hash__(self):
        return hash((self.p, self.n, tuple(self.monomials.items())))

    @property
    def degree(self) -> int:
        return max((sum(e) + k * (self.p - 1) for e, k in self.monomials), default=0)

    @property
    def depth(self) -> int:
        return max((k for _, k in self.monomials), default=0)

    @property
    def is_classical(self) -> bool:
        return self.depth == 0

    def is_zero(self) -> bool:
        return not self.monomials

    def table(self) -> TorsionTable:
        """Values at every point, numerators over p^(depth+1)."""
        K = self.depth
        pts = enumerate_points(FieldParams(self.p, self.n))
        return TorsionTable(_monomial_sum(self.monomials, pts, self.p, K), self.p, K, self.n)

    def __call__(self, x) -> TorsionValue:
        x = np.asarray(x, dtype=np.int64).reshape(1, -1)
        if x.shape[1] != self.n:
            raise DimensionError(f"point has {x.shape[1]} coordinates, expected {self.n}")
        K = self.depth
        return TorsionValue(int(_monomial_sum(self.monomials, x % self.p, self.p, K)[0]), K, self.p)

    def to_text(self) -> str:
        lines = [f"{self.p} {self.n}"]
        for (exps, k), c in self.monomials.items():
            lines.append(" ".join(str(v) for v in (k, c, *exps)))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_lines(cls, lines, p, n, source=None, first_line=1):
        monos = {}
        for i, line in enumerate(lines, start=first_line):
            toks = line.split()
            if len(toks) != n + 2:
                raise ParseError(f"monomial line needs {n + 2} integers", line=i, source=source)
            try:
                k, c, *exps = (int(t) for t in toks)
                monos[(tuple(exps), k)] = (monos.get((tuple(exps), k), 0) + c) % p
            except ValueError as exc:
                raise ParseError(str(exc), line=i, source=source)
        try:
            return cls(p, n, monos)
        except (ValueError, DimensionError) as exc:
            raise ParseError(str(exc), source=source)

    @classmethod
    def from_text(cls, text, source=None):
        lines = [(i + 1, ln) for i, ln in enumerate(text.splitlines()) if ln.strip()]
        if not lines:
            raise ParseError("empty polynomial file", source=source)
        try:
            p, n = (int(t) for t in lines[0][1].split())
        except ValueError:
            raise ParseError("header must be 'p n'", line=lines[0][0], source=source)
        monos = {}
        for lineno, ln in lines[1:]:
            toks = ln.split()
            if len(toks) != n + 2:
                raise ParseError(f"monomial line needs {n + 2} integers", line=lineno, source=source)
            try:
                k, c, *exps = (int(t) for t in toks)
            except ValueError:
                raise ParseError("non-integer entry", line=lineno, source=source)
            monos[(tuple(exps), k)] = (monos.get((tuple(exps), k), 0) + c) % p
        try:
            return cls(p, n, monos)
        except (ValueError, DimensionError) as exc:
            raise ParseError(str(exc), source=source)


def _monomial_sum(monomials, pts, p, K):
    modulus = p ** (K + 1)
    out = np.zeros(pts.shape[0], dtype=np.int64)
    for (exps, k), c in monomials.items():
        term = np.full(pts.shape[0], c * p ** (K - k), dtype=np.int64)
        for i, e in enumerate(exps):
            if e:
                term = term * pts[:, i] ** e % modulus
        out = (out + term) % modulus
    return out


def eval_poly(P: NonClassicalPoly, x) -> TorsionValue:
    return P(x)


def add_derivative(P, h) -> TorsionTable:
    """Table of D_h P; ``P`` may be a polynomial or a torsion table."""
    table = P.table() if isinstance(P, NonClassicalPoly) else P
    return table.derivative(h)


def verify_degree(P, d, samples=None, rng=None) -> bool:
    """True iff every (d+1)-fold additive derivative of P vanishes.

    Exact mode closes the set of derivative tables under D_y with
    deduplication.  With ``samples`` set, instead checks that many random
    (x, y_1..y_{d+1}) tuples via the alternating-sum identity.
    """
    table = P.table() if isinstance(P, NonClassicalPoly) else P
    if d < 0:
        return table.is_zero()
    if samples is None:
        return vanishing_order(table.num, table.p, table.n, table.level, limit=d + 1) is not None
    p, n, modulus = table.p, table.n, p_pow(table)
    N = p**n
    x = rng.integers(0, N, size=samples)
    ys = rng.integers(0, N, size=(d + 1, samples))
    acc = np.zeros(samples, dtype=np.int64)
    for mask in range(2 ** (d + 1)):
        pt = x
        for i in range(d + 1):
            if mask >> i & 1:
                pt = add_indices(pt, ys[i], p, n)
        sign = -1 if (d + 1 - bin(mask).count("1")) % 2 else 1
        acc = (acc + sign * table.num[pt]) % modulus
    return not acc.any()


def p_pow(table):
    return table.p ** (table.level + 1)


def bias(P) -> float:
    """|E_x e(P(x))|."""
    table = P.table() if isinstance(P, NonClassicalPoly) else P
    phase = table.num.astype(np.float64) / p_pow(table)
    z = np.exp(2j * np.pi * phase)
    return float(abs(math.fsum(z.real) + 1j * math.fsum(z.imag)) / z.size)


def admissible_monomials(p, n, d, K):
    """(exponents, k) pairs allowed in a polynomial of degree <= d and depth <= K."""
    out = []
    for k in range(K + 1):
        budget = d - k * (p - 1)
        for exps in product(range(p), repeat=n):
            s = sum(exps)
            if (k == 0 and s == 0 and d >= 0) or (0 < s <= budget):
                out.append((exps, k))
    out.sort(key=lambda m: (m[1], sum(m[0]), m[0]))
    return out


def count_polys(p, n, d, K) -> int:
    return p ** len(admissible_monomials(p, n, d, K))


def enumerate_polys(params: FieldParams, d, K=0, cap=ENUM_CAP) -> Iterator[NonClassicalPoly]:
    """Every polynomial of degree <= d and depth <= K exactly once."""
    p, n = params.p, params.n
    monos = admissible_monomials(p, n, d, K)
    if p ** len(monos) > cap:
        raise CapacityExceeded(f"{p}^{len(monos)} polynomials exceed cap {cap}")
    for coeffs in product(range(p), repeat=len(monos)):
        yield NonClassicalPoly(p, n, {m: c for m, c in zip(monos, coeffs) if c})


def monomial_matrix(p, n, monos, K):
    """Row i holds the table of monomial i at level K (numerators mod p^(K+1))."""
    pts = enumerate_points(FieldParams(p, n))
    return np.array([_monomial_sum({m: 1}, pts, p, K) for m in monos], dtype=np.int64).reshape(len(monos), -1)


def enumerate_poly_tables(params: FieldParams, d, K=0, cap=ENUM_CAP, chunk=2**12):
    """Yield (coefficient block, table block) pairs covering enumerate_polys.

    Faster than materializing NonClassicalPoly objects; tables are
    numerators at level K.
    """
    p, n = params.p, params.n
    monos = admissible_monomials(p, n, d, K)
    M = len(monos)
    if p**M > cap:
        raise CapacityExceeded(f"{p}^{M} polynomials exceed cap {cap}")
    basis = monomial_matrix(p, n, monos, K)
    modulus = p ** (K + 1)
    total = p**M
    digits = p ** np.arange(M - 1, -1, -1, dtype=np.int64)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk), dtype=np.int64)
        coeffs = (idx[:, None] // digits[None, :]) % p
        yield monos, coeffs, (coeffs @ basis) % modulus


def read_polys(text, source=None):
    """Parse a factor file: header ``p n C`` then C polynomial blocks.

    Each block is a ``p n`` header line followed by its monomial lines; a
    block ends where the next ``p n`` header (two integers) begins.
    """
    lines = [(i + 1, ln.split("#", 1)[0].strip()) for i, ln in enumerate(text.splitlines())]
    lines = [(i, ln) for i, ln in lines if ln]
    if not lines:
        raise ParseError("empty factor file", source=source)
    try:
        p, n, C = (int(t) for t in lines[0][1].split())
    except ValueError:
        raise ParseError("header must be 'p n C'", line=lines[0][0], source=source)
    polys, pos = [], 1
    for _ in range(C):
        if pos >= len(lines):
            raise ParseError(f"expected {C} polynomial blocks, found {len(polys)}", source=source)
        lineno, head = lines[pos]
        toks = head.split()
        if len(toks) != 2 or [int(t) for t in toks] != [p, n]:
            raise ParseError(f"polynomial block header must be '{p} {n}'", line=lineno, source=source)
        pos += 1
        body = []
        while pos < len(lines) and len(lines[pos][1].split()) == n + 2:
            body.append(lines[pos])
            pos += 1
        first = body[0][0] if body else lineno + 1
        polys.append(NonClassicalPoly.from_lines([b for _, b in body], p, n, source=source, first_line=first))
    if pos != len(lines):
        raise ParseError("trailing content after last polynomial block", line=lines[pos][0], source=source)
    return p, n, polys


def write_polys(polys, p, n) -> str:
    out = [f"{p} {n} {len(polys)}"]
    for P in polys:
        out.append(P.to_text().rstrip("\n"))
    return "\n".join(out) + "\n"
