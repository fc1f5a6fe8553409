"""Multiplicative derivatives and Gowers uniformity norms.

Exact norms use the derivative recursion

    ||f||_{U^d}^{2^d} = E_y ||Delta_y f||_{U^{d-1}}^{2^{d-1}},   ||g||_{U^1}^2 = |E g|^2,

vectorized over a precomputed addition table, so the cost is about
(p^n)^d operations.  The Fourier transform here is a separate route used as
an oracle for the d = 2 case and by the decomposition diagnostics.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import CapacityExceeded, DimensionError, InvalidOrder
from .field import FieldParams, add_indices, addition_table, point_index
from .functions import COMPLEX, SIGNED, FiniteFunction
from .rng import make_rng

EXACT_WORK_CAP = 2**28
_CHUNK_ELEMS = 2**22

# Fault-injection switch used by ``hofa check --sabotage gowers``.
_sabotage = False


def set_sabotage(flag: bool):
    global _sabotage
    _sabotage = bool(flag)


@dataclass(frozen=True)
class GowersEstimate:
    order: int
    value: float
    mode: str                      # "exact" or "monte_carlo"
    std_error: float = 0.0
    samples: Optional[int] = None
    seed: Optional[int] = None
    power: float = 0.0             # the pre-root mean, value = power ** (1 / 2**order)
    clamped: bool = False          # pre-root mean was negative and set to 0

    def as_dict(self):
        return {
            "order": self.order,
            "value": self.value,
            "std_error": self.std_error,
            "mode": self.mode,
            "samples": self.samples,
            "seed": self.seed,
            "clamped": self.clamped,
        }


def _table(f):
    """Numeric table and field size for a FiniteFunction or a raw array."""
    if isinstance(f, FiniteFunction):
        return f.numeric(), f.p, f.n
    raise TypeError("expected a FiniteFunction")


def _point_to_index(h, p, n):
    if np.ndim(h) == 0:
        h = int(h)
        if not 0 <= h < p**n:
            raise DimensionError(f"point index {h} out of range for F_{p}^{n}")
        return h
    h = np.asarray(h)
    if h.shape != (n,):
        raise DimensionError(f"direction has {h.size} coordinates, expected {n}")
    return int(point_index(h, p))


def mult_derivative(f: FiniteFunction, h) -> FiniteFunction:
    """(Delta_h f)(x) = f(x + h) * conj(f(x)); ``h`` is a coordinate tuple or an index."""
    vals, p, n = _table(f)
    hi = _point_to_index(h, p, n)
    shifted = vals[add_indices(np.arange(vals.size), hi, p, n)]
    out = shifted * np.conj(vals)
    if f.kind == COMPLEX:
        return FiniteFunction(out, p, kind=COMPLEX, n=n)
    return FiniteFunction(np.real(out), p, kind=SIGNED, n=n)


def _power_batch(G, d, add, top=False):
    """Gowers 2^d-th power of every row of G, as a float array."""
    if d == 1:
        m = G.mean(axis=1)
        return np.real(m * np.conj(m))
    B, N = G.shape
    out = np.empty(B, dtype=np.float64)
    step = max(1, _CHUNK_ELEMS // (N * N))
    for s in range(0, B, step):
        g = G[s:s + step]
        D = g[:, add] * np.conj(g)[:, None, :]
        inner = _power_batch(D.reshape(-1, N), d - 1, add).reshape(g.shape[0], N)
        if top and _sabotage:
            out[s:s + step] = inner[:, 1:].mean(axis=1)
        else:
            out[s:s + step] = inner.mean(axis=1)
    return out


def gowers_power_exact(values, p, n, d, add=None) -> float:
    """E_{x, y_1..y_d} (Delta_{y_1}...Delta_{y_d} f)(x) computed exactly."""
    if d < 1:
        raise InvalidOrder(f"Gowers order must be >= 1, got {d}")
    N = p**n
    if N**d > EXACT_WORK_CAP:
        raise CapacityExceeded(f"exact U^{d} on F_{p}^{n} needs {N}^{d} operations")
    G = np.asarray(values)
    if not np.iscomplexobj(G):
        G = G.astype(np.float64)
    G = G.reshape(1, N)
    if d >= 2 and add is None:
        add = addition_table(FieldParams(p, n))
    return float(_power_batch(G, d, add, top=True)[0])


def _root(power, d):
    clamped = power < 0
    return max(power, 0.0) ** (1.0 / 2**d), clamped


def gowers_norm_exact(f: FiniteFunction, d: int) -> GowersEstimate:
    """||f||_{U^d} by exhaustive enumeration; d = 1 gives |E f|."""
    vals, p, n = _table(f)
    power = gowers_power_exact(vals, p, n, d)
    value, clamped = _root(power, d)
    return GowersEstimate(order=d, value=value, mode="exact", power=power, clamped=clamped)


def gowers_norm(f: FiniteFunction, d: int) -> float:
    """Shorthand for ``gowers_norm_exact(f, d).value``."""
    return gowers_norm_exact(f, d).value


def _sample_terms(vals, p, n, d, rng, count):
    N = p**n
    x = rng.integers(0, N, size=count)
    ys = rng.integers(0, N, size=(d, count))
    acc = np.ones(count, dtype=vals.dtype)
    for mask in range(2**d):
        pt = x
        for i in range(d):
            if mask >> i & 1:
                pt = add_indices(pt, ys[i], p, n)
        term = vals[pt]
        if (d - bin(mask).count("1")) % 2:
            term = np.conj(term)
        acc = acc * term
    return np.real(acc) if np.iscomplexobj(acc) else acc


def gowers_norm_estimate(f: FiniteFunction, d: int, samples: int, rng=0, block=2**14) -> GowersEstimate:
    """Monte-Carlo estimate of ||f||_{U^d} from ``samples`` uniform tuples.

    ``rng`` may be an integer seed, in which case block ``i`` of the sample
    draws from stream ``i`` (see :mod:`hofa.rng`); the result is then
    independent of how blocks are scheduled.
    """
    if d < 1:
        raise InvalidOrder(f"Gowers order must be >= 1, got {d}")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    vals, p, n = _table(f)
    seed = None
    parts = []
    if isinstance(rng, np.random.Generator):
        for s in range(0, samples, block):
            parts.append(_sample_terms(vals, p, n, d, rng, min(block, samples - s)))
    else:
        seed = int(rng)
        for i, s in enumerate(range(0, samples, block)):
            parts.append(_sample_terms(vals, p, n, d, make_rng(seed, i), min(block, samples - s)))
    terms = np.concatenate(parts).astype(np.float64)
    mean = math.fsum(terms) / samples
    err = float(terms.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    value, clamped = _root(mean, d)
    return GowersEstimate(
        order=d, value=value, mode="monte_carlo", std_error=err,
        samples=samples, seed=seed, power=mean, clamped=clamped,
    )


# -- Fourier analysis on F_p^n -----------------------------------------------------

def fourier_transform(f) -> np.ndarray:
    """f_hat(alpha) = E_x f(x) e(-<alpha, x>/p), indexed canonically by alpha."""
    if isinstance(f, FiniteFunction):
        vals, p, n = f.numeric(), f.p, f.n
    else:
        raise TypeError("expected a FiniteFunction")
    if n == 0:
        return vals.astype(np.complex128)
    cube = vals.reshape((p,) * n)
    return (np.fft.fftn(cube) / vals.size).reshape(-1)


def u2_norm_fourier(f) -> float:
    """(sum_alpha |f_hat(alpha)|^4)^(1/4), an independent route to ||f||_{U^2}."""
    mags = np.abs(fourier_transform(f)) ** 2
    return math.fsum(mags * mags) ** 0.25
