"""Affine-invariant property oracles, the restriction-based distance tester,
and the lifting constructions (transfer operator, psi, g) used to check the
soundness argument numerically on concrete instances.
"""

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import product
from typing import List, Optional

import numpy as np

from .errors import (
    CapacityExceeded,
    DimensionError,
    NotMeasurable,
    RangeError,
    SignatureMismatch,
)
from .factors import (
    FactorFunction,
    PolynomialFactor,
    cond_expectation,
    decompose,
    gowers_of,
)
from .field import (
    FieldParams,
    enumerate_points,
    sample_affine_embedding,
    section_of,
)
from .functions import FINITE, UNIT, FiniteFunction, indicator_slices, l1_norm, restrict, round_randomized
from .polynomials import enumerate_poly_tables, table_degree
from .rng import make_rng

MEMBER_CAP = 2**22
_CHUNK = 2**12


def _boolean_table(h):
    if isinstance(h, FiniteFunction):
        if h.kind != FINITE:
            raise RangeError("property oracles act on finite-range tables")
        return h.values.astype(np.int64), h.p, h.n
    raise TypeError("expected a FiniteFunction")


def _min_hamming(table, members):
    """(min count, argmin) of mismatches between ``table`` and the rows of ``members``."""
    best, arg = table.size + 1, -1
    for s in range(0, members.shape[0], _CHUNK):
        block = members[s:s + _CHUNK]
        d = np.count_nonzero(block != table[None, :], axis=1)
        i = int(np.argmin(d))
        if d[i] < best:
            best, arg = int(d[i]), s + i
    return best, arg


class PropertyOracle:
    """Base class: a property given by its member tables at each dimension."""

    name = "property"
    R = 2

    def __init__(self, p=2):
        self.p = p
        self._cache = {}

    def enumerate_members(self, k) -> np.ndarray:
        """Member tables on F_p^k as rows of an int array (cached)."""
        if k not in self._cache:
            self._cache[k] = self._members(k)
        return self._cache[k]

    def _members(self, k):
        raise NotImplementedError

    def is_member(self, h: FiniteFunction) -> bool:
        table, p, k = _boolean_table(h)
        self._check_field(p)
        return _min_hamming(table, self.enumerate_members(k))[0] == 0

    def _check_field(self, p):
        if p != self.p:
            raise DimensionError(f"{self.name} is defined over F_{self.p}, got F_{p}")

    def check_invariance(self, k, samples=100, rng=0) -> int:
        """Violations of closure under random invertible affine maps (0 = invariant)."""
        gen = make_rng(rng)
        members = self.enumerate_members(k)
        bad = 0
        for _ in range(samples):
            h = FiniteFunction(members[gen.integers(members.shape[0])], self.p, kind=FINITE, R=self.R, n=k)
            A = sample_affine_embedding(gen, k, k, self.p)
            if not self.is_member(restrict(h, A)):
                bad += 1
        return bad

    def __repr__(self):
        return f"{type(self).__name__}({self.name})"


class ReedMuller(PropertyOracle):
    """{0,1}-valued functions that are classical polynomials of degree <= d."""

    def __init__(self, d, p=2):
        if p not in (2, 3):
            raise ValueError("Reed-Muller oracles are shipped for p in {2, 3}")
        super().__init__(p)
        self.d = int(d)
        self.name = f"rm:{self.d}"

    def _members(self, k):
        out = []
        for _, _, tabs in enumerate_poly_tables(FieldParams(self.p, k), self.d, 0, cap=MEMBER_CAP):
            keep = np.all(tabs <= 1, axis=1)
            out.append(tabs[keep])
        return np.unique(np.concatenate(out), axis=0)

    def is_member(self, h: FiniteFunction) -> bool:
        # via the derivative closure, not the member list
        table, p, k = _boolean_table(h)
        self._check_field(p)
        if table.max() > 1:
            return False
        return table_degree(table, p, k, 0) <= self.d


class CloseToProperty(PropertyOracle):
    """P_delta: functions within normalized Hamming distance delta of ``base``."""

    def __init__(self, base: PropertyOracle, delta):
        super().__init__(base.p)
        if not 0 <= delta <= 1:
            raise ValueError("delta must lie in [0, 1]")
        self.base, self.delta = base, float(delta)
        self.R = base.R
        self.name = f"close({base.name},{self.delta})"

    def _budget(self, N):
        return math.floor(self.delta * N + 1e-9)

    def _members(self, k):
        N = self.p**k
        if self.R**N > 2**16:
            raise CapacityExceeded(f"{self.R}^{N} candidate tables")
        allt = np.array(list(product(range(self.R), repeat=N)), dtype=np.int64)[:, ::-1]
        base = self.base.enumerate_members(k)
        keep = [
            _min_hamming(t, base)[0] <= self._budget(N) for t in allt
        ]
        return allt[np.array(keep)]

    def is_member(self, h):
        table, p, k = _boolean_table(h)
        return _min_hamming(table, self.base.enumerate_members(k))[0] <= self._budget(table.size)

    def distance_count(self, table, k):
        """Exact: move the nearest base member toward h until it is delta-close."""
        c, _ = _min_hamming(table, self.base.enumerate_members(k))
        return max(0, c - self._budget(table.size))


class EnumeratedProperty(PropertyOracle):
    """A property listed explicitly by its members (one dimension per file)."""

    def __init__(self, members: List[FiniteFunction], name="enumerated"):
        if not members:
            raise ValueError("an enumerated property needs at least one member")
        super().__init__(members[0].p)
        self.name = name
        self.R = max(m.R for m in members)
        by_dim = {}
        for m in members:
            if m.kind != FINITE or m.p != self.p:
                raise RangeError("members must be finite-range tables over one field")
            by_dim.setdefault(m.n, []).append(m.values.astype(np.int64))
        self._cache = {k: np.unique(np.array(v), axis=0) for k, v in by_dim.items()}

    def _members(self, k):
        raise CapacityExceeded(f"{self.name} lists no members on F_{self.p}^{k}")

    @classmethod
    def from_file(cls, path, name=None):
        from .functions import read_functions

        with open(path) as fh:
            funcs = read_functions(fh, source=str(path))
        return cls(funcs, name=name or str(path))


class AllFunctions(PropertyOracle):
    def __init__(self, p=2, R=2):
        super().__init__(p)
        self.R = R
        self.name = "all"

    def _members(self, k):
        N = self.p**k
        if self.R**N > MEMBER_CAP:
            raise CapacityExceeded(f"{self.R}^{N} tables")
        return np.array(list(product(range(self.R), repeat=N)), dtype=np.int64)

    def is_member(self, h):
        _boolean_table(h)
        return True


def parse_property(text: str, p=2) -> PropertyOracle:
    """``rm:D``, ``all``, ``close:D:DELTA`` or ``file:PATH``."""
    kind, _, rest = text.partition(":")
    try:
        if kind == "rm":
            return ReedMuller(int(rest), p)
        if kind == "all":
            return AllFunctions(p)
        if kind == "close":
            d, delta = rest.split(":")
            return CloseToProperty(ReedMuller(int(d), p), float(delta))
        if kind == "file":
            return EnumeratedProperty.from_file(rest)
    except ValueError as exc:
        raise ValueError(f"bad property {text!r}: {exc}")
    raise ValueError(f"unknown property {text!r}")


# -- distances ---------------------------------------------------------------------

def rm_distance(h: FiniteFunction, d) -> float:
    """Exact distance from h to degree-<=d classical polynomials.

    Codewords are generated from the monomial generator matrix directly,
    independently of ``ReedMuller.enumerate_members``.
    """
    table, p, k = _boolean_table(h)
    pts = enumerate_points(FieldParams(p, k))
    exps = [e for e in product(range(p), repeat=k) if sum(e) <= d]
    total = p ** len(exps)
    if total > MEMBER_CAP:
        raise CapacityExceeded(f"{total} codewords exceed cap {MEMBER_CAP}")
    G = np.array([np.prod(pts ** np.array(e), axis=1) % p for e in exps], dtype=np.int64)
    best = table.size
    digits = p ** np.arange(len(exps), dtype=np.int64)
    for s in range(0, total, _CHUNK):
        idx = np.arange(s, min(total, s + _CHUNK), dtype=np.int64)
        coeffs = (idx[:, None] // digits[None, :]) % p
        words = (coeffs @ G) % p
        dist = np.count_nonzero(words != table[None, :], axis=1)
        best = min(best, int(dist.min()))
    return best / table.size


def nearest_member(h: FiniteFunction, P: PropertyOracle):
    """(distance, member table as a FiniteFunction) minimizing Hamming distance."""
    table, p, k = _boolean_table(h)
    P._check_field(p)
    if isinstance(P, CloseToProperty):
        c, arg = _min_hamming(table, P.base.enumerate_members(k))
        base = P.base.enumerate_members(k)[arg].copy()
        diff = np.nonzero(base != table)[0]
        move = max(0, c - P._budget(table.size))
        base[diff[:c - move]] = table[diff[:c - move]]
        return move / table.size, FiniteFunction(base, p, kind=FINITE, R=P.R, n=k)
    members = P.enumerate_members(k)
    c, arg = _min_hamming(table, members)
    return c / table.size, FiniteFunction(members[arg], p, kind=FINITE, R=max(P.R, h.R), n=k)


def property_distance(h: FiniteFunction, P: PropertyOracle) -> float:
    """min over members g of Pr_x[h(x) != g(x)], exactly."""
    table, p, k = _boolean_table(h)
    P._check_field(p)
    if isinstance(P, AllFunctions):
        return 0.0
    if isinstance(P, CloseToProperty):
        return P.distance_count(table, k) / table.size
    return _min_hamming(table, P.enumerate_members(k))[0] / table.size


# -- tester ------------------------------------------------------------------------

@dataclass(frozen=True)
class TesterConfig:
    delta: float
    eps: float
    m: int
    trials: int = 1
    seed: int = 0

    __test__ = False        # keeps pytest from collecting this class

    def __post_init__(self):
        # delta + eps may exceed 1; the tester then accepts every round
        if not (0 <= self.delta <= 1 and 0 < self.eps):
            raise ValueError("need 0 <= delta <= 1 and eps > 0")
        if self.m < 0 or self.trials < 1:
            raise ValueError("need m >= 0 and trials >= 1")

    @property
    def threshold(self):
        return self.delta + self.eps / 2


@dataclass
class TesterResult:
    __test__ = False
    distances: List[float]
    threshold: float
    accept_fraction: float
    verdict: str
    chebyshev_bound: float
    seed: int
    slices: Optional[list] = None

    @property
    def exceed_fraction(self):
        return 1.0 - self.accept_fraction

    def as_dict(self):
        out = {
            "accept_fraction": self.accept_fraction,
            "verdict": self.verdict,
            "per_trial_distances": self.distances,
            "threshold": self.threshold,
            "exceed_fraction": self.exceed_fraction,
            "chebyshev_bound": self.chebyshev_bound,
            "trials": len(self.distances),
            "seed": self.seed,
        }
        if self.slices is not None:
            out["slices"] = [s.as_dict() for s in self.slices]
        return out


def _trial(f, P, cfg, t):
    A = sample_affine_embedding(make_rng(cfg.seed, t), cfg.m, f.n, f.p)
    return property_distance(restrict(f, A), P)


def distance_tester(f: FiniteFunction, P: PropertyOracle, cfg: TesterConfig, threads=1) -> TesterResult:
    """Accept round t iff dist(A_t f, P) < delta + eps/2 for a random embedding A_t.

    Round t draws from stream t of ``cfg.seed``, so results do not depend
    on ``threads``.  The verdict is the majority over rounds.
    """
    if cfg.m > f.n:
        raise DimensionError(f"m = {cfg.m} exceeds n = {f.n}")
    if f.kind != FINITE:
        raise RangeError("the tester acts on finite-range functions")
    if f.R > 2 and P.R == 2:
        parts = [distance_tester(s, P, cfg, threads) for s in indicator_slices(f)]
        acc = [all(r.distances[t] < r.threshold for r in parts) for t in range(cfg.trials)]
        frac = sum(acc) / cfg.trials
        return TesterResult(
            distances=[max(r.distances[t] for r in parts) for t in range(cfg.trials)],
            threshold=cfg.threshold, accept_fraction=frac,
            verdict="accept" if 2 * sum(acc) > cfg.trials else "reject",
            chebyshev_bound=parts[0].chebyshev_bound, seed=cfg.seed, slices=parts,
        )
    P.enumerate_members(cfg.m) if not isinstance(P, AllFunctions) else None
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            dists = list(ex.map(lambda t: _trial(f, P, cfg, t), range(cfg.trials)))
    else:
        dists = [_trial(f, P, cfg, t) for t in range(cfg.trials)]
    accepts = sum(d < cfg.threshold for d in dists)
    return TesterResult(
        distances=dists,
        threshold=cfg.threshold,
        accept_fraction=accepts / cfg.trials,
        verdict="accept" if 2 * accepts > cfg.trials else "reject",
        chebyshev_bound=4.0 / (f.p**cfg.m * cfg.eps**2),
        seed=cfg.seed,
    )


# -- transfer, psi, g ---------------------------------------------------------------

class TransferOperator:
    """Gamma(source polys) -> Gamma(target polys) for matched factors."""

    def __init__(self, source: PolynomialFactor, target: PolynomialFactor):
        if source.p != target.p:
            raise SignatureMismatch("factors over different fields")
        if source.signature != target.signature:
            raise SignatureMismatch(f"signatures differ: {source.signature} vs {target.signature}")
        self.source, self.target = source, target

    def inverse(self) -> "TransferOperator":
        return TransferOperator(self.target, self.source)

    def gamma(self, phi) -> FactorFunction:
        return FactorFunction.read_off(phi, self.source, fill=0.0)

    def __call__(self, phi):
        return transfer(self, phi)


def transfer(op: TransferOperator, phi) -> FiniteFunction:
    """Read Gamma off the source atoms and evaluate it on the target factor.

    Labels never realized on the source are mapped to 0 with a warning.
    """
    vals = phi.numeric() if isinstance(phi, FiniteFunction) else np.asarray(phi, dtype=np.float64)
    G = op.gamma(vals)
    used = np.unique(op.target.codes)
    lost = np.intersect1d(used, np.array(G.unrealized, dtype=np.int64))
    if lost.size:
        warnings.warn(f"{lost.size} target atoms have labels never realized on the source; set to 0")
    out = G(op.target)
    kind = phi.kind if isinstance(phi, FiniteFunction) and phi.kind != FINITE else UNIT
    if kind == UNIT and (out.min() < 0 or out.max() > 1):
        kind = "signed"
    return FiniteFunction(out, op.target.p, kind=kind, n=op.target.n)


def construct_psi(f: FiniteFunction, B1: PolynomialFactor, phi) -> FiniteFunction:
    """Perturb f inside each atom of B1 so that its atom averages become phi."""
    if not f.is_boolean:
        raise RangeError("psi needs a {0,1}-valued f")
    beta = phi.real() if isinstance(phi, FiniteFunction) else np.asarray(phi, dtype=np.float64)
    if beta.size != f.size:
        raise DimensionError("phi and f live on different spaces")
    if beta.min() < 0 or beta.max() > 1:
        raise RangeError("phi must take values in [0, 1]")
    if np.abs(beta - cond_expectation(beta, B1)).max() > 1e-12:
        raise NotMeasurable("phi is not constant on the atoms of B1")
    fv = f.real()
    alpha = cond_expectation(fv, B1)
    one = fv == 1
    up = alpha <= beta
    psi = np.zeros(f.size)
    # alpha < 1 wherever f = 0 and alpha > 0 wherever f = 1
    m = up & ~one
    psi[m] = (beta[m] - alpha[m]) / (1 - alpha[m])
    psi[up & one] = 1.0
    m = ~up & one
    psi[m] = beta[m] / alpha[m]
    return FiniteFunction(psi, f.p, kind=UNIT, n=f.n)


# -- soundness pipeline ------------------------------------------------------------

@dataclass
class PipelineConfig:
    m: int
    degree: int = 1
    tau: float = 0.1
    gamma: float = 0.05
    eta: float = 0.1
    delta: float = 0.05
    eps: float = 0.2
    embeddings: int = 100
    depth: int = 0
    complexity_cap: int = 8
    seed: int = 0


def _u(values, p, n, d):
    return gowers_of(np.asarray(values, dtype=np.float64), p, n, d)[0]


def _events(f, dec, A, cfg, sig0):
    idx = A.image_indices()
    p, m = f.p, A.source_dim
    order = cfg.degree + 1
    B0 = dec.factor
    Bt = B0.restrict(A)
    sig_ok = Bt.measured_signature() == sig0
    af2 = math.sqrt(float(np.mean(dec.f2[idx] ** 2)))
    af3 = _u(dec.f3[idx], p, m, order)
    af = f.real()[idx]
    e3 = float(np.abs(cond_expectation(af, Bt) - dec.f1[idx]).max())
    return {
        "E1": bool(sig_ok),
        "E2": bool(af2 <= 2 * cfg.gamma and af3 <= 2 * cfg.eta),
        "E3": bool(e3 <= cfg.gamma),
        "af2_l2": af2,
        "af3_gowers": af3,
        "e3_sup": e3,
    }


def soundness_pipeline(f: FiniteFunction, P: PropertyOracle, cfg: PipelineConfig) -> dict:
    """Run the lifting argument on one instance and report every measured bound.

    This measures quantities; it proves nothing.  The thresholds gamma and
    eta are inputs, and each report entry pairs a measurement with the bound
    it is compared against.
    """
    if not f.is_boolean:
        raise RangeError("the pipeline needs a {0,1}-valued f")
    if cfg.m > f.n:
        raise DimensionError(f"m = {cfg.m} exceeds n = {f.n}")
    p, n, m = f.p, f.n, cfg.m
    order = cfg.degree + 1
    gen = make_rng(cfg.seed)
    dec = decompose(f, cfg.degree, cfg.tau, depth=cfg.depth, complexity_cap=cfg.complexity_cap)
    B0 = dec.factor
    maps = [sample_affine_embedding(make_rng(cfg.seed, 1 + i), m, n, p) for i in range(cfg.embeddings)]
    sig0 = B0.measured_signature()
    events = [_events(f, dec, A, cfg, sig0) for A in maps]
    good = [all(e[k] for k in ("E1", "E2", "E3")) for e in events]
    chosen = good.index(True) if any(good) else 0
    A = maps[chosen]

    Af = restrict(f, A)
    dist_h, h = nearest_member(Af, P)
    Bt0 = B0.restrict(A)
    hdec = decompose(h, cfg.degree, cfg.tau, init_factor=Bt0, depth=cfg.depth,
                     complexity_cap=max(cfg.complexity_cap, Bt0.complexity + 1))
    Bt1 = hdec.factor
    Ap = section_of(A)
    new = [Q.table().restrict(Ap) for Q in hdec.added]
    B1 = B0.extend(new, degrees=[Q.degree for Q in hdec.added])
    op = TransferOperator(Bt1, B1)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        phi = transfer(op, FiniteFunction(hdec.f1, p, kind=UNIT, n=m))
    psi = construct_psi(f, B1, phi)
    g = round_randomized(psi, gen)

    fv, pv, qv, gv = f.real(), phi.real(), psi.real(), g.real()
    ef_b1 = cond_expectation(fv, B1)
    f3_b1 = cond_expectation(dec.f3, B1)
    f_psi = l1_norm(fv - qv)
    ef_phi = l1_norm(ef_b1 - pv)
    psi_phi = _u(qv - pv, p, n, order)
    g_psi = _u(gv - qv, p, n, order)
    f_g = l1_norm(fv - gv)
    gamma_meas = max(dec.f2_l2, l1_norm(f3_b1), B1.order * dec.f3_gowers)
    bound_iii = gamma_meas + 3 * gamma_meas ** (1.0 / 2**order)
    dist_g = property_distance(g, P) if _affordable(P, n) else None

    freq = {k: sum(e[k] for e in events) / len(events) for k in ("E1", "E2", "E3")}
    freq["all"] = sum(good) / len(good)
    return {
        "config": {k: getattr(cfg, k) for k in cfg.__dataclass_fields__},
        "n": n,
        "decomposition": {
            "complexity": B0.complexity,
            "order": B0.order,
            "f2_l2": dec.f2_l2,
            "f3_gowers": dec.f3_gowers,
            "f3_within_eta": dec.f3_gowers <= cfg.eta,
        },
        "events": {"frequency": freq, "chosen_embedding": chosen, "chosen": events[chosen]},
        "h": {"distance": dist_h, "complexity": Bt1.complexity, "added": len(new)},
        "transfer": {"unrealized_warnings": len(caught)},
        "psi": {
            "mean_identity_error": float(np.abs(cond_expectation(qv, B1) - pv).max()),
            "l1_identity_error": abs(f_psi - ef_phi),
            "psi_phi_gowers": psi_phi,
            "gamma_measured": gamma_meas,
            "psi_phi_bound": bound_iii,
            "psi_phi_holds": psi_phi <= bound_iii + 1e-12,
        },
        "phi": {"ef_phi_l1": ef_phi, "bound": cfg.delta + cfg.eps / 2 + 9 * cfg.gamma},
        "g": {
            "f_g_l1": f_g,
            "f_psi_l1": f_psi,
            "g_psi_gowers": g_psi,
            "f_g_within": f_g <= f_psi + cfg.gamma,
            "g_psi_within": g_psi <= cfg.gamma,
        },
        "final": {
            "f_g_l1": f_g,
            "bound": dist_h + 10 * cfg.gamma,
            "holds": f_g <= dist_h + 10 * cfg.gamma,
            "dist_g_property": dist_g,
        },
    }


def _affordable(P, n):
    if isinstance(P, ReedMuller):
        return P.p ** sum(1 for e in product(range(P.p), repeat=n) if sum(e) <= P.d) <= MEMBER_CAP
    return isinstance(P, AllFunctions)
