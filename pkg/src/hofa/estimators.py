"""scikit-learn style wrappers.  Each row of ``X`` is one function table on F_p^n
in canonical point order.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import DimensionError
from .factors import cond_expectation, decompose
from .field import sample_affine_embedding
from .functions import FINITE, SIGNED, UNIT, FiniteFunction
from .gowers import gowers_norm_exact
from .property_testing import TesterConfig, distance_tester, parse_property
from .rng import make_rng


def dimension_of(width, p):
    """n with p**n == width, or DimensionError."""
    n, N = 0, 1
    while N < width:
        N *= p
        n += 1
    if N != width:
        raise DimensionError(f"{width} columns is not a power of {p}")
    return n


def check_tables(X, p=2, boolean=False):
    """Validate a 2-D array of function tables; returns (array, n)."""
    X = check_array(X, dtype=np.float64, ensure_2d=True)
    n = dimension_of(X.shape[1], p)
    if boolean and not np.isin(X, (0.0, 1.0)).all():
        raise ValueError("expected {0,1}-valued tables")
    return X, n


def as_functions(X, p, n):
    out = []
    for row in X:
        if np.isin(row, (0.0, 1.0)).all():
            out.append(FiniteFunction(row.astype(np.uint8), p, kind=FINITE, R=2, n=n))
        elif row.min() >= 0:
            out.append(FiniteFunction(row, p, kind=UNIT, n=n))
        else:
            out.append(FiniteFunction(row, p, kind=SIGNED, n=n))
    return out


class GowersNorm(BaseEstimator, TransformerMixin):
    """Maps each table to its exact U^order norm."""

    def __init__(self, order=2, p=2):
        self.order = order
        self.p = p

    def fit(self, X, y=None):
        _, self.n_ = check_tables(X, self.p)
        return self

    def transform(self, X):
        check_is_fitted(self, "n_")
        X, n = check_tables(X, self.p)
        return np.array([[gowers_norm_exact(f, self.order).value] for f in as_functions(X, self.p, n)])


class AffineRestriction(BaseEstimator, TransformerMixin):
    """Restrict every table along one random embedding F_p^m -> F_p^n drawn at fit."""

    def __init__(self, m=2, p=2, random_state=0):
        self.m = m
        self.p = p
        self.random_state = random_state

    def fit(self, X, y=None):
        _, n = check_tables(X, self.p)
        if self.m > n:
            raise DimensionError(f"m = {self.m} exceeds n = {n}")
        self.n_ = n
        self.embedding_ = sample_affine_embedding(make_rng(self.random_state), self.m, n, self.p)
        return self

    def transform(self, X):
        check_is_fitted(self, "embedding_")
        X, n = check_tables(X, self.p)
        if n != self.n_:
            raise DimensionError(f"fitted on n = {self.n_}, got n = {n}")
        return X[:, self.embedding_.image_indices()]


class DistanceTester(BaseEstimator, ClassifierMixin):
    """predict -> 1 (accept: close to the property) or 0 (reject), per table."""

    def __init__(self, property="rm:1", delta=0.05, eps=0.2, m=6, trials=50, p=2, random_state=0):
        self.property = property
        self.delta = delta
        self.eps = eps
        self.m = m
        self.trials = trials
        self.p = p
        self.random_state = random_state

    def fit(self, X=None, y=None):
        self.property_ = parse_property(self.property, self.p)
        self.config_ = TesterConfig(self.delta, self.eps, self.m, self.trials, self.random_state)
        self.classes_ = np.array([0, 1])
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "config_")
        X, n = check_tables(X, self.p, boolean=True)
        acc = np.array([
            distance_tester(f, self.property_, self.config_).accept_fraction
            for f in as_functions(X, self.p, n)
        ])
        return np.column_stack([1 - acc, acc])

    def predict(self, X):
        return (self.predict_proba(X)[:, 1] > 0.5).astype(int)


class FactorDecomposer(BaseEstimator, TransformerMixin):
    """Learns a polynomial factor from one table; transform = E[x | factor]."""

    def __init__(self, degree=1, tau=0.1, depth=0, p=2, complexity_cap=12):
        self.degree = degree
        self.tau = tau
        self.depth = depth
        self.p = p
        self.complexity_cap = complexity_cap

    def fit(self, X, y=None):
        X, n = check_tables(X, self.p)
        if X.shape[0] != 1:
            raise ValueError("fit expects exactly one table")
        dec = decompose(as_functions(X, self.p, n)[0], self.degree, self.tau, depth=self.depth,
                        complexity_cap=self.complexity_cap)
        self.factor_ = dec.factor
        self.decomposition_ = dec
        self.n_ = n
        return self

    def transform(self, X):
        check_is_fitted(self, "factor_")
        X, n = check_tables(X, self.p)
        if n != self.n_:
            raise DimensionError(f"fitted on n = {self.n_}, got n = {n}")
        return np.vstack([cond_expectation(row, self.factor_) for row in X])
