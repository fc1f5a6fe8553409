"""Polynomial factors, conditional expectations and a desk-scale decomposition.

A factor is the partition of F_p^n by the joint values of polynomials
P_1..P_C.  Component i takes values in U_{k_i+1}, so an atom label is a
tuple of numerators ``b_i in [0, p^(k_i+1))``.  Labels are also packed into
a single mixed-radix integer code (component 0 least significant), which is
how every table indexed by atoms (``FactorFunction.gamma``, histograms) is
laid out.
"""

import math
from dataclasses import dataclass, field
from itertools import product
from typing import List, Optional, Sequence

import numpy as np

from .errors import CapacityExceeded, DimensionError, NotARefinement
from .field import AffineMap
from .functions import SIGNED, UNIT, FiniteFunction, l1_norm, l2_norm
from .gowers import gowers_norm_estimate, gowers_power_exact
from .polynomials import (
    NonClassicalPoly,
    TorsionTable,
    TorsionValue,
    admissible_monomials,
    enumerate_poly_tables,
)

DEFAULT_COMPLEXITY_CAP = 12
LAMBDA_CAP = 2**16


class PolynomialFactor:
    """Factor defined by an ordered sequence of polynomials on F_p^n.

    Components may be ``NonClassicalPoly`` objects or raw ``TorsionTable``
    value tables (e.g. restrictions of polynomials along an affine map).
    Declared degrees default to the polynomial's representation degree; for
    raw tables they are computed exactly on first use unless supplied.
    """

    def __init__(self, components: Sequence = (), p=None, n=None, degrees=None):
        comps = list(components)
        if comps:
            p = comps[0].p
            n = comps[0].n
        if p is None or n is None:
            raise DimensionError("an empty factor needs explicit p and n")
        tables, polys, depths, declared = [], [], [], []
        for c in comps:
            if (c.p, c.n) != (p, n):
                raise DimensionError("factor components live on different spaces")
            if isinstance(c, NonClassicalPoly):
                tables.append(c.table())
                polys.append(c)
                depths.append(c.depth)
                declared.append(c.degree)
            elif isinstance(c, TorsionTable):
                tables.append(c)
                polys.append(None)
                depths.append(c.level)
                declared.append(None)
            else:
                raise TypeError(f"unsupported factor component {type(c).__name__}")
        if degrees is not None:
            if len(degrees) != len(comps):
                raise DimensionError("one declared degree per component expected")
            declared = [None if d is None else int(d) for d in degrees]
        self.p, self.n = p, n
        self.tables: List[TorsionTable] = tables
        self.polys = polys
        self.depths = depths
        self._degrees = declared
        self._codes = None
        self._inverse = None

    def __len__(self):
        return len(self.tables)

    def __repr__(self):
        return f"PolynomialFactor(p={self.p}, n={self.n}, C={len(self)}, order={self.order})"

    @property
    def complexity(self) -> int:
        return len(self.tables)

    @property
    def size(self) -> int:
        return self.p**self.n

    @property
    def radices(self):
        return [self.p ** (k + 1) for k in self.depths]

    @property
    def order(self) -> int:
        return math.prod(self.radices)

    @property
    def degrees(self):
        out = []
        for i, d in enumerate(self._degrees):
            if d is None:
                d = self.tables[i].degree()
                self._degrees[i] = d
            out.append(d)
        return out

    @property
    def degree(self) -> int:
        return max(self.degrees, default=0)

    @property
    def signature(self):
        return tuple(zip(self.degrees, self.depths))

    def extend(self, components, degrees=None) -> "PolynomialFactor":
        """Syntactic refinement: this factor's components followed by ``components``."""
        new = list(components)
        base = [P if P is not None else T for P, T in zip(self.polys, self.tables)]
        if degrees is None:
            degrees = [c.degree if isinstance(c, NonClassicalPoly) else None for c in new]
        degs = list(self._degrees) + list(degrees)
        return PolynomialFactor(base + new, p=self.p, n=self.n, degrees=degs)

    # -- atoms ---------------------------------------------------------------------

    @property
    def labels(self) -> np.ndarray:
        """(p^n, C) array; row x holds the numerators of P_1(x)..P_C(x)."""
        if not self.tables:
            return np.zeros((self.size, 0), dtype=np.int64)
        return np.stack([t.num for t in self.tables], axis=1)

    @property
    def codes(self) -> np.ndarray:
        """Packed atom code of every point."""
        if self._codes is None:
            codes = np.zeros(self.size, dtype=np.int64)
            mult = 1
            for t, r in zip(self.tables, self.radices):
                codes += t.num * mult
                mult *= r
            codes.setflags(write=False)
            self._codes = codes
        return self._codes

    def encode(self, label) -> int:
        code, mult = 0, 1
        for b, r in zip(label, self.radices):
            code += (int(b) % r) * mult
            mult *= r
        return code

    def decode(self, code) -> tuple:
        out = []
        for r in self.radices:
            out.append(code % r)
            code //= r
        return tuple(out)

    def _atoms(self):
        if self._inverse is None:
            uniq, inv = np.unique(self.codes, return_inverse=True)
            self._inverse = (uniq, inv.reshape(-1))
        return self._inverse

    def atom_directory(self):
        """Map from atom code to the sorted point indices in that atom."""
        uniq, inv = self._atoms()
        order = np.argsort(inv, kind="stable")
        bounds = np.searchsorted(inv[order], np.arange(len(uniq) + 1))
        return {int(c): order[bounds[i]:bounds[i + 1]] for i, c in enumerate(uniq)}

    @property
    def n_atoms(self) -> int:
        return len(self._atoms()[0])

    def atom_of(self, x) -> tuple:
        idx = _point_idx(x, self.p, self.n)
        return tuple(TorsionValue(int(t.num[idx]), k, self.p) for t, k in zip(self.tables, self.depths))

    def restrict(self, A: AffineMap) -> "PolynomialFactor":
        """Factor on the source of A defined by the restricted value tables.

        Declared degrees are carried over; use ``measured_signature`` to see
        whether restriction actually preserved them.
        """
        tabs = [t.restrict(A) for t in self.tables]
        return PolynomialFactor(tabs, p=self.p, n=A.source_dim, degrees=list(self.degrees)) if tabs else \
            PolynomialFactor((), p=self.p, n=A.source_dim)

    def measured_signature(self):
        """(exact degree, exact depth) of each component's value table."""
        return tuple((t.degree(), t.depth()) for t in self.tables)

    def is_refined_by(self, other: "PolynomialFactor") -> bool:
        """True iff every atom of ``other`` lies inside one atom of self."""
        if (other.p, other.n) != (self.p, self.n):
            raise DimensionError("factors live on different spaces")
        pairs = np.unique(np.stack([other.codes, self.codes], axis=1), axis=0)
        return len(np.unique(pairs[:, 0])) == len(pairs)


def _point_idx(x, p, n):
    if np.ndim(x) == 0:
        return int(x)
    x = np.asarray(x, dtype=np.int64)
    if x.shape != (n,):
        raise DimensionError(f"point has {x.size} coordinates, expected {n}")
    return int((x % p) @ (p ** np.arange(n)))


def _values(f):
    if isinstance(f, FiniteFunction):
        return f.numeric()
    return np.asarray(f)


def atom_of(B: PolynomialFactor, x) -> tuple:
    return B.atom_of(x)


def atom_means(f, B: PolynomialFactor):
    """(codes, means, counts) over the nonempty atoms of B."""
    vals = _values(f)
    if vals.size != B.size:
        raise DimensionError("function and factor live on different spaces")
    uniq, inv = B._atoms()
    counts = np.bincount(inv, minlength=len(uniq))
    if np.iscomplexobj(vals):
        sums = np.bincount(inv, weights=vals.real, minlength=len(uniq)) + 1j * np.bincount(
            inv, weights=vals.imag, minlength=len(uniq))
    else:
        sums = np.bincount(inv, weights=vals, minlength=len(uniq))
    return uniq, sums / counts, counts


def cond_expectation(f, B: PolynomialFactor):
    """E[f|B] as a table; same wrapper type as ``f``."""
    vals = _values(f)
    _, means, _ = atom_means(vals, B)
    out = means[B._atoms()[1]]
    if not isinstance(f, FiniteFunction):
        return out
    if f.kind == "finite":
        if f.R != 2:
            return out
        return FiniteFunction(out, f.p, kind=UNIT, n=f.n)
    return FiniteFunction(out, f.p, kind=f.kind, n=f.n)


def is_measurable(f, B: PolynomialFactor, tol=1e-12) -> bool:
    vals = _values(f)
    ce = cond_expectation(vals, B)
    return bool(np.all(np.abs(vals - ce) <= tol))


@dataclass
class AtomStats:
    order: int
    counts: dict            # atom label tuple -> point count (nonempty atoms only)
    total: int
    max_deviation: float    # max over all order-many labels of |Pr[b] - 1/order|

    @property
    def probabilities(self):
        return {b: c / self.total for b, c in self.counts.items()}

    @property
    def n_nonempty(self):
        return len(self.counts)


def atom_stats(B: PolynomialFactor) -> AtomStats:
    uniq, inv = B._atoms()
    counts = np.bincount(inv, minlength=len(uniq))
    N, order = B.size, B.order
    target = 1.0 / order
    dev = max((abs(c / N - target) for c in counts), default=0.0)
    if len(uniq) < order:
        dev = max(dev, target)
    return AtomStats(
        order=order,
        counts={B.decode(int(c)): int(k) for c, k in zip(uniq, counts)},
        total=N,
        max_deviation=dev,
    )


# -- Gamma tables ------------------------------------------------------------------

@dataclass
class FactorFunction:
    """Gamma: prod_i U_{k_i+1} -> [0, 1], stored densely by atom code."""

    signature: tuple        # ((degree, depth), ...)
    p: int
    gamma: np.ndarray       # length = prod p^(k_i+1)
    unrealized: tuple = ()  # codes that were never observed when Gamma was read off

    @property
    def radices(self):
        return [self.p ** (k + 1) for _, k in self.signature]

    @classmethod
    def read_off(cls, f, B: PolynomialFactor, fill=0.0):
        """Gamma from a B-measurable f; labels of empty atoms get ``fill``."""
        from .errors import NotMeasurable

        vals = _values(f)
        uniq, means, _ = atom_means(vals, B)
        if not np.all(np.abs(vals - means[B._atoms()[1]]) <= 1e-12):
            raise NotMeasurable("function is not constant on the atoms of the factor")
        gamma = np.full(B.order, float(fill))
        gamma[uniq] = means
        missing = np.setdiff1d(np.arange(B.order), uniq)
        return cls(signature=B.signature, p=B.p, gamma=gamma, unrealized=tuple(int(c) for c in missing))

    def __call__(self, B: PolynomialFactor) -> np.ndarray:
        """Gamma(P_1(x), .., P_C(x)) for every x."""
        if B.p != self.p or [k for _, k in self.signature] != list(B.depths):
            raise DimensionError("factor depths do not match this Gamma's domain")
        return self.gamma[B.codes]


# -- rank surrogate ---------------------------------------------------------------

@dataclass
class RankProxy:
    max_bias: float
    argmax_bias: tuple
    max_gowers: Optional[float]
    argmax_gowers: Optional[tuple]
    gowers_order: int
    combinations: int


def combination(B: PolynomialFactor, lam) -> TorsionTable:
    """The table of sum_i lam_i P_i."""
    L = max(B.depths, default=0)
    acc = np.zeros(B.size, dtype=np.int64)
    for t, l in zip(B.tables, lam):
        acc = acc + int(l) * t.at_level(L)
    return TorsionTable(acc, B.p, L, B.n)


def _bias_of(num, modulus):
    z = np.exp(2j * np.pi * num.astype(np.float64) / modulus)
    return float(abs(math.fsum(z.real) + 1j * math.fsum(z.imag)) / z.size)


def factor_rank_proxy(B: PolynomialFactor, d=None, gowers=True) -> RankProxy:
    """Worst-case bias (and U^d norm) over nontrivial combinations sum lam_i P_i.

    Small values mean the factor behaves like a high-rank one; no exact rank
    is computed.  ``d`` defaults to the factor degree.
    """
    d = B.degree if d is None else d
    total = B.order - 1
    if total > LAMBDA_CAP:
        raise CapacityExceeded(f"{total} lambda combinations exceed cap {LAMBDA_CAP}")
    L = max(B.depths, default=0)
    modulus = B.p ** (L + 1)
    best_b, arg_b = 0.0, ()
    best_g, arg_g = (0.0, ()) if gowers and d >= 1 else (None, None)
    for lam in product(*[range(r) for r in B.radices]):
        if not any(lam):
            continue
        tab = combination(B, lam)
        b = _bias_of(tab.num, modulus)
        if b > best_b + 1e-15:
            best_b, arg_b = b, lam
        if best_g is not None:
            phase = np.exp(2j * np.pi * tab.num / modulus)
            g = max(gowers_power_exact(phase, B.p, B.n, d), 0.0) ** (1.0 / 2**d)
            if g > best_g + 1e-15:
                best_g, arg_g = g, lam
    return RankProxy(best_b, arg_b, best_g, arg_g, d, total)


# -- decomposition ---------------------------------------------------------------

@dataclass
class Decomposition:
    f1: np.ndarray
    f2: np.ndarray
    f3: np.ndarray
    factor: PolynomialFactor
    degree: int
    initial_complexity: int
    correlations: List[float] = field(default_factory=list)
    energies: List[float] = field(default_factory=list)
    converged: bool = True
    f2_l2: float = 0.0
    f3_gowers: float = 0.0
    f3_gowers_mode: str = "exact"
    f3_gowers_std_error: float = 0.0

    @property
    def added(self):
        return self.factor.polys[self.initial_complexity:]

    def certificate(self):
        return {
            "degree": self.degree,
            "complexity": self.factor.complexity,
            "initial_complexity": self.initial_complexity,
            "order": self.factor.order,
            "converged": self.converged,
            "correlations": self.correlations,
            "energies": self.energies,
            "f2_l2": self.f2_l2,
            "f3_gowers": {
                "order": self.degree + 1,
                "value": self.f3_gowers,
                "mode": self.f3_gowers_mode,
                "std_error": self.f3_gowers_std_error,
            },
        }


def gowers_of(values, p, n, d, samples=2**16, seed=0):
    """Exact U^d norm when affordable, Monte-Carlo otherwise; (value, mode, err)."""
    try:
        power = gowers_power_exact(values, p, n, d)
        return max(power, 0.0) ** (1.0 / 2**d), "exact", 0.0
    except CapacityExceeded:
        est = gowers_norm_estimate(FiniteFunction(values, p, kind=SIGNED, n=n), d, samples, seed)
        return est.value, "monte_carlo", est.std_error


def decompose(f, d, tau, init_factor: Optional[PolynomialFactor] = None, depth=0,
              zeta=None, complexity_cap=DEFAULT_COMPLEXITY_CAP, search_degree=None) -> Decomposition:
    """Energy-increment decomposition f = f1 + f2 + f3 of a {0,1}/[0,1] table.

    Starting from ``init_factor`` (empty by default) the loop scans every
    polynomial Q of degree <= ``search_degree`` (default d) and depth <=
    ``depth``, adjoins the one maximizing |<f - E[f|B], e(Q)>| while that
    correlation is >= tau, and stops when no candidate reaches tau or the
    factor reaches ``complexity_cap`` (flagged ``converged=False``).

    The result has f1 = E[f|B1], f3 = f - f1 and f2 = 0; ``zeta`` is only
    recorded.  B1 always extends ``init_factor`` syntactically.
    """
    vals = _values(f).astype(np.float64)
    p, n = f.p, f.n
    B = init_factor if init_factor is not None else PolynomialFactor((), p=p, n=n)
    if (B.p, B.n) != (p, n):
        raise DimensionError("initial factor lives on a different space")
    init_c = B.complexity
    sd = d if search_degree is None else search_degree
    monos = admissible_monomials(p, n, sd, depth)
    modulus = p ** (depth + 1)
    correlations, energies = [], []
    f1 = cond_expectation(vals, B)
    energies.append(float(np.mean(f1 * f1)))
    converged = True
    while True:
        resid = vals - f1
        best, best_coeffs = -1.0, None
        for _, coeffs, tabs in enumerate_poly_tables(_params(p, n), sd, depth):
            phases = np.exp(-2j * np.pi * tabs / modulus)
            corr = np.abs(phases @ resid) / vals.size
            i = int(np.argmax(corr))
            if corr[i] > best + 1e-12:
                best, best_coeffs = float(corr[i]), coeffs[i]
        if best < tau:
            break
        if B.complexity >= complexity_cap:
            converged = False
            break
        Q = NonClassicalPoly(p, n, {m: int(c) for m, c in zip(monos, best_coeffs) if c})
        B = B.extend([Q])
        f1 = cond_expectation(vals, B)
        correlations.append(best)
        energies.append(float(np.mean(f1 * f1)))
    f3 = vals - f1
    f2 = np.zeros_like(vals)
    g, mode, err = gowers_of(f3, p, n, d + 1)
    return Decomposition(
        f1=f1, f2=f2, f3=f3, factor=B, degree=d, initial_complexity=init_c,
        correlations=correlations, energies=energies, converged=converged,
        f2_l2=l2_norm(f2), f3_gowers=g, f3_gowers_mode=mode, f3_gowers_std_error=err,
    )


def _params(p, n):
    from .field import FieldParams

    return FieldParams(p, n)


@dataclass
class RefinementReport:
    lhs: float
    rhs: float

    @property
    def slack(self):
        return self.rhs - self.lhs

    @property
    def holds(self):
        return self.lhs <= self.rhs + 1e-12


def refinement_error(f, B: PolynomialFactor, Bp: PolynomialFactor, f2, f3, d) -> RefinementReport:
    """Both sides of ||E[f|B] - E[f|B']||_1 <= ||f2||_2 + p^(dC') ||f3||_{U^(d+1)}."""
    vals = _values(f).astype(np.float64)
    f2, f3 = np.asarray(f2, dtype=np.float64), np.asarray(f3, dtype=np.float64)
    if not B.is_refined_by(Bp):
        raise NotARefinement("B' does not refine B")
    e1 = cond_expectation(vals, B)
    if np.abs(vals - (e1 + f2 + f3)).max() > 1e-9:
        raise ValueError("f != E[f|B] + f2 + f3")
    lhs = l1_norm(e1 - cond_expectation(vals, Bp))
    g, _, _ = gowers_of(f3, B.p, B.n, d + 1)
    rhs = l2_norm(f2) + B.p ** (d * Bp.complexity) * g
    return RefinementReport(lhs, rhs)
