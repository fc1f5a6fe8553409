"""Restriction distributions mu_{f,k}, linear-form systems, and the bridges
between Gowers distance and statistical distance.

An outcome v : F_p^k -> {0,1} is keyed by the integer
``sum_y v(y) * 2**index(y)`` (bit y in canonical point order).
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .errors import CapacityExceeded, DimensionError, RangeError
from .field import (
    add_indices,
    count_embeddings,
    embedding_images,
    in_span,
    point_coords,
    point_index,
    scale_index,
)
from .functions import FINITE, UNIT, FiniteFunction
from .gowers import gowers_power_exact
from .rng import make_rng

EMBEDDING_CAP = 2**24
_EXACT_K_LIMIT = {2: 2, 3: 1, 5: 1}


@dataclass
class RestrictionDistribution:
    p: int
    k: int
    probs: np.ndarray                 # length 2**(p**k), indexed by outcome key
    mode: str = "exact"
    samples: Optional[int] = None
    seed: Optional[int] = None

    @property
    def n_outcomes(self):
        return self.probs.size

    def __getitem__(self, v):
        return float(self.probs[self.key(v)])

    def key(self, v) -> int:
        if np.ndim(v) == 0:
            return int(v)
        bits = np.asarray(v, dtype=np.int64).reshape(-1)
        if bits.size != self.p**self.k:
            raise DimensionError(f"outcome needs {self.p ** self.k} bits")
        return int(bits @ (1 << np.arange(bits.size, dtype=np.int64)))

    def bits(self, key) -> str:
        return "".join(str(key >> i & 1) for i in range(self.p**self.k))

    def as_dict(self):
        """Nonzero outcomes as {bit string: probability}, bit y in point order."""
        return {self.bits(int(i)): float(self.probs[i]) for i in np.nonzero(self.probs)[0]}

    def total(self) -> float:
        return math.fsum(self.probs)


def _outcome_space(p, k, exact=True):
    P = p**k
    if exact and k > _EXACT_K_LIMIT[p]:
        raise CapacityExceeded(f"exact mu for p={p} supports k <= {_EXACT_K_LIMIT[p]}")
    if P > 16:
        raise CapacityExceeded(f"outcome space 2^{P} too large")
    return P


def _check_range(f):
    if not (f.is_boolean or f.kind == UNIT):
        raise RangeError("mu is defined for {0,1}- or [0,1]-valued functions")


def _keys(bits):
    return bits.astype(np.int64) @ (1 << np.arange(bits.shape[1], dtype=np.int64))


def mu_exact(f: FiniteFunction, k: int, cap=EMBEDDING_CAP) -> RestrictionDistribution:
    """mu_{f,k} by enumerating every injective affine map F_p^k -> F_p^n.

    {0,1}-valued f is counted exactly; [0,1]-valued f uses the product
    formula E_A prod_y (v(y) f(Ay) + (1 - v(y))(1 - f(Ay))).
    """
    _check_range(f)
    p, n = f.p, f.n
    if k > n:
        raise DimensionError(f"k = {k} exceeds n = {n}")
    P = _outcome_space(p, k)
    if count_embeddings(k, n, p) > cap:
        raise CapacityExceeded(f"{count_embeddings(k, n, p)} embeddings exceed cap {cap}")
    images = embedding_images(k, n, p, cap=cap)
    total = images.shape[0]
    if f.kind == FINITE:
        counts = np.bincount(_keys(f.values[images]), minlength=2**P)
        return RestrictionDistribution(p, k, counts / total)
    vals = f.real()
    probs = np.zeros(2**P)
    outcomes = ((np.arange(2**P)[:, None] >> np.arange(P)[None, :]) & 1).astype(np.float64)
    step = max(1, 2**22 // (P * 2**P))
    for s in range(0, total, step):
        F = vals[images[s:s + step]]                       # (c, P)
        terms = outcomes[:, None, :] * F[None] + (1 - outcomes[:, None, :]) * (1 - F[None])
        probs += terms.prod(axis=2).sum(axis=1)
    return RestrictionDistribution(p, k, probs / total)


def sample_embedding_images(rng, k, n, p, count) -> np.ndarray:
    """Images of ``count`` independent uniform embeddings, shape (count, p^k)."""
    P = p**k
    src = point_coords(np.arange(P), p, k)                  # (P, k)
    out = np.empty((count, P), dtype=np.int64)
    todo = np.arange(count)
    while todo.size:
        L = rng.integers(0, p, size=(todo.size, n, k))
        c = rng.integers(0, p, size=(todo.size, n))
        coords = (np.einsum("pk,cnk->cpn", src, L) + c[:, None, :]) % p
        idx = point_index(coords, p)
        srt = np.sort(idx, axis=1)
        ok = np.all(srt[:, 1:] != srt[:, :-1], axis=1) if P > 1 else np.ones(todo.size, bool)
        out[todo[ok]] = idx[ok]
        todo = todo[~ok]
    return out


def mu_estimate(f: FiniteFunction, k, samples, rng=0) -> RestrictionDistribution:
    """Empirical mu_{f,k} from ``samples`` embeddings (and rounding draws)."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    _check_range(f)
    p, n = f.p, f.n
    P = _outcome_space(p, k, exact=False)
    seed = None if isinstance(rng, np.random.Generator) else int(rng)
    gen = make_rng(rng)
    images = sample_embedding_images(gen, k, n, p, samples)
    if f.kind == FINITE:
        bits = f.values[images]
    else:
        bits = (gen.random(images.shape) < f.real()[images]).astype(np.int64)
    counts = np.bincount(_keys(bits), minlength=2**P)
    return RestrictionDistribution(p, k, counts / samples, mode="monte_carlo", samples=samples, seed=seed)


def stat_distance(mu1: RestrictionDistribution, mu2: RestrictionDistribution) -> float:
    if (mu1.p, mu1.k) != (mu2.p, mu2.k):
        raise DimensionError("distributions over different outcome spaces")
    return 0.5 * math.fsum(np.abs(mu1.probs - mu2.probs))


# -- linear forms ---------------------------------------------------------------------

@dataclass
class LinearFormSystem:
    p: int
    forms: List[tuple]

    def __post_init__(self):
        if not self.forms:
            raise ValueError("a linear form system must be nonempty")
        self.forms = [tuple(int(c) % self.p for c in L) for L in self.forms]
        if len({len(L) for L in self.forms}) != 1:
            raise DimensionError("forms have different numbers of variables")

    @property
    def n_vars(self):
        return len(self.forms[0])

    @property
    def has_duplicates(self):
        return len(set(self.forms)) < len(self.forms)

    def __len__(self):
        return len(self.forms)


def affine_subspace_system(p, k) -> LinearFormSystem:
    """{(1, a_1, .., a_k) : a in F_p^k}: the points of a k-dim affine subspace.

    Form i corresponds to the source point with canonical index i.
    """
    return LinearFormSystem(p, [(1, *a) for a in point_coords(np.arange(p**k), p, k).tolist()])


def _min_parts(target, others, p):
    """Fewest subsets partitioning ``others`` with ``target`` outside each span."""
    if not others:
        return 0
    if any(in_span(target, [L], p) for L in others):
        return None
    best = [len(others)]

    def search(i, parts):
        if len(parts) >= best[0]:
            return
        if i == len(others):
            best[0] = len(parts)
            return
        L = others[i]
        for part in parts:
            if not in_span(target, part + [L], p):
                part.append(L)
                search(i + 1, parts)
                part.pop()
        parts.append([L])
        search(i + 1, parts)
        parts.pop()

    search(0, [])
    return best[0]


def cs_complexity(S: LinearFormSystem, max_forms=10) -> Optional[int]:
    """Cauchy-Schwarz complexity by exhaustive partition search.

    Returns ``None`` when some form lies in the span of a single other form,
    in which case no finite complexity exists.
    """
    if len(S) > max_forms:
        raise CapacityExceeded(f"cs_complexity supports at most {max_forms} forms")
    worst = 0
    for i, L in enumerate(S.forms):
        others = [list(M) for j, M in enumerate(S.forms) if j != i]
        parts = _min_parts(list(L), others, S.p)
        if parts is None:
            return None
        worst = max(worst, parts)
    return max(worst - 1, 0)


def linear_form_average(fs: Sequence[FiniteFunction], S: LinearFormSystem, cap=2**24) -> float:
    """E_{x_1..x_K in F_p^n} prod_i f_i(L_i(x_1, .., x_K)), exactly."""
    if len(fs) != len(S):
        raise DimensionError("one function per linear form expected")
    p, n = fs[0].p, fs[0].n
    N, K = p**n, S.n_vars
    if N**K > cap:
        raise CapacityExceeded(f"{N}^{K} tuples exceed cap {cap}")
    grids = np.indices((N,) * K).reshape(K, -1)
    acc = np.ones(grids.shape[1], dtype=np.float64)
    for f, L in zip(fs, S.forms):
        pt = np.zeros(grids.shape[1], dtype=np.int64)
        for c, x in zip(L, grids):
            if c:
                pt = add_indices(pt, scale_index(x, c, p, n), p, n)
        acc = acc * f.real()[pt]
    return math.fsum(acc) / acc.size


# -- Gowers-to-statistical-distance bridge -------------------------------------

@dataclass
class LipschitzReport:
    order: int
    gowers_diff: float
    max_outcome_gap: float
    outcome_bound: float
    stat_distance: float
    total_bound: float
    violations: int

    @property
    def holds(self):
        return self.violations == 0 and self.stat_distance <= self.total_bound + 1e-12

    @property
    def slack(self):
        return self.outcome_bound - self.max_outcome_gap


def mu_lipschitz_check(f: FiniteFunction, g: FiniteFunction, k) -> LipschitzReport:
    """Compare |mu_f[v] - mu_g[v]| against p^k ||f - g||_{U^(p^k + 1)} for every v."""
    if (f.p, f.n) != (g.p, g.n):
        raise DimensionError("functions on different spaces")
    p = f.p
    d = p**k + 1
    diff = f.real() - g.real()
    power = gowers_power_exact(diff, p, f.n, d)
    u = max(power, 0.0) ** (1.0 / 2**d)
    mf, mg = mu_exact(f, k), mu_exact(g, k)
    gaps = np.abs(mf.probs - mg.probs)
    bound = p**k * u
    return LipschitzReport(
        order=d,
        gowers_diff=u,
        max_outcome_gap=float(gaps.max()),
        outcome_bound=bound,
        stat_distance=stat_distance(mf, mg),
        total_bound=2 ** (p**k) * bound,
        violations=int(np.count_nonzero(gaps > bound + 1e-12)),
    )
