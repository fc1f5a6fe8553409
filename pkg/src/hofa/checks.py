"""The named inequality battery behind ``hofa check``.

Each check draws from its own counter-based stream (seed, check index), so
the report is identical however the checks are scheduled.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .distributions import (
    affine_subspace_system,
    cs_complexity,
    linear_form_average,
    mu_lipschitz_check,
)
from .factors import (
    PolynomialFactor,
    atom_stats,
    cond_expectation,
    factor_rank_proxy,
    refinement_error,
)
from .functions import SIGNED, FiniteFunction, l1_norm
from .gowers import gowers_power_exact, u2_norm_fourier, set_sabotage
from .polynomials import NonClassicalPoly, admissible_monomials
from .property_testing import construct_psi
from .rng import make_rng

TOL = 1e-9

SCALES = {
    "small": {"instances": 50, "n_small": 4, "n_mid": 5, "n_psi": 6, "fourier": 100, "n_fourier": 6},
    "medium": {"instances": 100, "n_small": 5, "n_mid": 6, "n_psi": 8, "fourier": 200, "n_fourier": 8},
}


@dataclass
class CheckResult:
    name: str
    instances: int
    violations: int
    worst_slack: float          # min over instances of (bound - measured); negative means violated

    @property
    def passed(self):
        return self.violations == 0

    def as_dict(self):
        return {
            "name": self.name,
            "instances": self.instances,
            "violations": self.violations,
            "worst_slack": self.worst_slack,
            "passed": self.passed,
        }


class _Tally:
    def __init__(self, name):
        self.name, self.count, self.bad, self.slack = name, 0, 0, math.inf

    def add(self, measured, bound, tol=TOL):
        self.count += 1
        s = bound - measured
        self.slack = min(self.slack, s)
        if measured > bound + tol:
            self.bad += 1

    def result(self):
        return CheckResult(self.name, self.count, self.bad, float(self.slack) if self.count else 0.0)


def random_poly(rng, p, n, d, depth=0):
    """A polynomial with uniform coefficients on the admissible monomials."""
    monos = admissible_monomials(p, n, d, depth)
    coeffs = rng.integers(0, p, size=len(monos))
    return NonClassicalPoly(p, n, {m: int(c) for m, c in zip(monos, coeffs) if c})


def random_factor(rng, p, n, d, C, depth=0):
    return PolynomialFactor([random_poly(rng, p, n, d, depth) for _ in range(C)], p=p, n=n)


def _u(vals, p, n, d):
    return max(gowers_power_exact(vals, p, n, d), 0.0) ** (1.0 / 2**d)


def _signed(rng, p, n):
    # mix dense and sparse tables so some instances sit near the bounds
    vals = rng.uniform(-1, 1, p**n)
    if rng.random() < 0.5:
        vals *= rng.random(p**n) < rng.uniform(0.05, 0.5)
    return vals


# -- individual checks --------------------------------------------------------------

def check_cs_complexity(rng, cfg):
    t = _Tally("cs_complexity_bound")
    cases = [(2, 1), (2, 2), (3, 1)] + ([(2, 3), (5, 1)] if cfg["instances"] > 50 else [])
    for p, k in cases:
        s = cs_complexity(affine_subspace_system(p, k))
        t.add(math.inf if s is None else s, p**k, tol=0)
    return t.result()


def check_u2_fourier(rng, cfg):
    t = _Tally("u2_fourier_agreement")
    n = cfg["n_fourier"]
    for _ in range(cfg["fourier"]):
        f = FiniteFunction(rng.uniform(-1, 1, 2**n), 2, kind=SIGNED, n=n)
        t.add(abs(_u(f.real(), 2, n, 2) - u2_norm_fourier(f)), 0.0)
    return t.result()


def check_gowers_l1(rng, cfg):
    t = _Tally("gowers_l1_bound")
    n = cfg["n_small"]
    for _ in range(cfg["instances"]):
        vals = _signed(rng, 2, n)
        for d in (2, 3):
            t.add(_u(vals, 2, n, d), l1_norm(vals) ** (1.0 / 2**d))
    return t.result()


def check_atom_restriction(rng, cfg):
    t = _Tally("atom_restriction_bound")
    n = cfg["n_mid"]
    for _ in range(cfg["instances"]):
        d = int(rng.integers(1, 3))
        B = random_factor(rng, 2, n, d, int(rng.integers(1, 3)), depth=int(rng.integers(0, 2)) if d == 2 else 0)
        vals = _signed(rng, 2, n)
        whole = _u(vals, 2, n, d + 1)
        codes = B.codes
        for c in np.unique(codes):
            t.add(_u(vals * (codes == c), 2, n, d + 1), whole)
    return t.result()


def check_l2u(rng, cfg):
    t = _Tally("conditional_expectation_l1_bound")
    n = cfg["n_mid"]
    for _ in range(cfg["instances"]):
        d = int(rng.integers(1, 3))
        C = int(rng.integers(1, 3))
        B = random_factor(rng, 2, n, d, C)
        vals = _signed(rng, 2, n)
        t.add(l1_norm(cond_expectation(vals, B)), 2 ** (d * C) * _u(vals, 2, n, d + 1))
    return t.result()


def check_refinement(rng, cfg):
    t = _Tally("refinement_bound")
    n = cfg["n_mid"]
    for _ in range(cfg["instances"]):
        d = int(rng.integers(1, 3))
        B = random_factor(rng, 2, n, d, 1)
        Bp = B.extend([random_poly(rng, 2, n, d)])
        f = (rng.random(2**n) < rng.uniform(0.1, 0.9)).astype(np.float64)
        resid = f - cond_expectation(f, B)
        s = rng.random()
        rep = refinement_error(f, B, Bp, s * resid, (1 - s) * resid, d)
        t.add(rep.lhs, rep.rhs)
    return t.result()


def check_counting(rng, cfg):
    t = _Tally("counting_bound")
    n = cfg["n_small"]
    for k in (1, 2):
        S = affine_subspace_system(2, k)
        s = cs_complexity(S)
        reps = cfg["instances"] if k == 1 else max(10, cfg["instances"] // 5)
        for _ in range(reps):
            fs = [FiniteFunction(_signed(rng, 2, n), 2, kind=SIGNED, n=n) for _ in range(len(S))]
            bound = min(_u(f.real(), 2, n, s + 1) for f in fs)
            t.add(abs(linear_form_average(fs, S)), bound)
    return t.result()


def check_atom_sizes(rng, cfg):
    t = _Tally("atom_size_bias_bound")
    n = cfg["n_psi"]
    for _ in range(cfg["instances"]):
        d = int(rng.integers(1, 3))
        B = random_factor(rng, 2, n, d, int(rng.integers(1, 4)))
        bias = factor_rank_proxy(B, gowers=False).max_bias
        t.add(atom_stats(B).max_deviation, bias)
    return t.result()


def check_lipschitz(rng, cfg):
    t = _Tally("mu_lipschitz_bound")
    n = cfg["n_small"]
    for _ in range(cfg["instances"]):
        f = FiniteFunction.random_unit(rng, 2, n)
        g = FiniteFunction.random_unit(rng, 2, n)
        rep = mu_lipschitz_check(f, g, 1)
        t.add(rep.max_outcome_gap, rep.outcome_bound)
        t.add(rep.stat_distance, rep.total_bound)
    return t.result()


def psi_instance(rng, n, p=2):
    """A random (f, B1, phi) triple with phi B1-measurable and [0,1]-valued."""
    f = FiniteFunction.random_boolean(rng, p, n, density=rng.uniform(0.1, 0.9))
    B = random_factor(rng, p, n, int(rng.integers(1, 3)), int(rng.integers(1, 4)))
    levels = rng.random(B.order)
    kind = rng.integers(0, 3, B.order)
    levels[kind == 1] = 0.0
    levels[kind == 2] = 1.0
    return f, B, levels[B.codes]


def check_psi(rng, cfg):
    t = _Tally("psi_identities")
    n = cfg["n_psi"]
    for _ in range(cfg["instances"]):
        f, B, phi = psi_instance(rng, n)
        psi = construct_psi(f, B, phi).real()
        t.add(float(np.abs(cond_expectation(psi, B) - phi).max()), 0.0, tol=1e-12)
        lhs = l1_norm(f.real() - psi)
        rhs = l1_norm(cond_expectation(f.real(), B) - phi)
        t.add(abs(lhs - rhs), 0.0, tol=1e-12)
    return t.result()


CHECKS = [
    check_cs_complexity,
    check_u2_fourier,
    check_gowers_l1,
    check_atom_restriction,
    check_l2u,
    check_refinement,
    check_counting,
    check_atom_sizes,
    check_lipschitz,
    check_psi,
]


def check_suite(scale="small", seed=0, threads=1, sabotage=None):
    """Run every check; returns (all passed, list of CheckResult)."""
    if scale not in SCALES:
        raise ValueError(f"unknown scale {scale!r}")
    if sabotage not in (None, "gowers"):
        raise ValueError(f"unknown sabotage target {sabotage!r}")
    cfg = SCALES[scale]
    set_sabotage(sabotage == "gowers")
    try:
        jobs = [(fn, make_rng(seed, i)) for i, fn in enumerate(CHECKS)]
        if threads and threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as ex:
                results = list(ex.map(lambda job: job[0](job[1], cfg), jobs))
        else:
            results = [fn(rng, cfg) for fn, rng in jobs]
    finally:
        set_sabotage(False)
    return all(r.passed for r in results), results
