import numpy as np
import pytest
from sklearn.base import clone
from sklearn.pipeline import make_pipeline

from hofa.errors import DimensionError
from hofa.estimators import AffineRestriction, DistanceTester, FactorDecomposer, GowersNorm, dimension_of
from hofa.functions import FiniteFunction
from hofa.gowers import gowers_norm


def parity_rows(n, masks):
    x = np.arange(2**n)
    return np.array([[bin(v & m).count("1") % 2 for v in x] for m in masks], dtype=float)


def test_dimension_of():
    assert dimension_of(27, 3) == 3
    with pytest.raises(DimensionError):
        dimension_of(12, 2)


def test_gowers_transformer_matches_function_api():
    rng = np.random.default_rng(0)
    X = rng.uniform(-1, 1, (5, 16))
    out = GowersNorm(order=3).fit(X).transform(X)
    assert out.shape == (5, 1)
    for row, v in zip(X, out[:, 0]):
        assert v == pytest.approx(gowers_norm(FiniteFunction(row, kind="signed"), 3))


def test_restriction_then_gowers_pipeline():
    X = parity_rows(6, [0b101, 0b110011])
    pipe = make_pipeline(AffineRestriction(m=3, random_state=1), GowersNorm(order=2))
    out = pipe.fit_transform(X)
    assert out.shape == (2, 1) and np.all(out >= 0)
    emb = pipe[0].embedding_
    assert emb.source_dim == 3 and emb.target_dim == 6


def test_restriction_checks_dimension():
    est = AffineRestriction(m=2).fit(np.zeros((1, 16)))
    with pytest.raises(DimensionError):
        est.transform(np.zeros((1, 8)))


def test_distance_tester_classifier():
    rng = np.random.default_rng(1)
    X = np.vstack([parity_rows(8, [0b1011]), (rng.random((1, 256)) < 0.5).astype(float)])
    clf = DistanceTester(property="rm:1", m=5, trials=30).fit()
    proba = clf.predict_proba(X)
    assert proba.shape == (2, 2) and np.allclose(proba.sum(axis=1), 1)
    assert clf.predict(X).tolist() == [1, 0]
    assert clone(clf).get_params()["trials"] == 30
    with pytest.raises(ValueError):
        clf.predict(np.full((1, 256), 0.5))


def test_factor_decomposer():
    X = parity_rows(5, [0b10110])
    dec = FactorDecomposer(degree=1, tau=0.1).fit(X)
    assert dec.factor_.complexity == 1
    assert np.allclose(dec.transform(X), X)
