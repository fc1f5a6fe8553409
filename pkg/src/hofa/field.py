"""Arithmetic over F_p^n: point indexing, linear algebra mod p, affine maps.

Points of F_p^n are addressed by their canonical index
``sum(coords[i] * p**i)``, coordinate 0 varying fastest.  All value tables in
the package are laid out in this order.
"""

from dataclasses import dataclass
from itertools import product
from typing import Iterator

import numpy as np

from .errors import CapacityExceeded, DimensionError, NotInjective

SUPPORTED_PRIMES = (2, 3, 5)
MAX_POINTS = 2**26


@dataclass(frozen=True)
class FieldParams:
    p: int
    n: int

    def __post_init__(self):
        if self.p not in SUPPORTED_PRIMES:
            raise ValueError(f"p must be one of {SUPPORTED_PRIMES}, got {self.p}")
        if self.n < 0:
            raise DimensionError(f"n must be >= 0, got {self.n}")

    @property
    def size(self) -> int:
        return self.p**self.n

    def check_capacity(self, cap=MAX_POINTS):
        if self.size > cap:
            raise CapacityExceeded(f"p^n = {self.p}^{self.n} exceeds cap {cap}")
        return self


# -- point indexing ----------------------------------------------------------

def point_index(coords, p):
    """Canonical index of a point (or of each row of a 2-D coordinate array)."""
    coords = np.asarray(coords, dtype=np.int64)
    n = coords.shape[-1]
    weights = p ** np.arange(n, dtype=np.int64)
    return (coords % p) @ weights


def point_coords(index, p, n):
    """Inverse of :func:`point_index`; vectorized over ``index``."""
    index = np.asarray(index, dtype=np.int64)
    out = np.empty(index.shape + (n,), dtype=np.int64)
    rest = index.copy()
    for i in range(n):
        out[..., i] = rest % p
        rest //= p
    return out


def enumerate_points(params: FieldParams) -> np.ndarray:
    """All points of F_p^n as a ``(p**n, n)`` coordinate array in index order."""
    params.check_capacity()
    return point_coords(np.arange(params.size), params.p, params.n)


def add_indices(a, b, p, n):
    """Index of coords(a) + coords(b), elementwise with broadcasting."""
    if p == 2:
        return np.bitwise_xor(a, b)
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    out = np.zeros(np.broadcast(a, b).shape, dtype=np.int64)
    ra, rb = a.copy(), b.copy()
    w = 1
    for _ in range(n):
        out += ((ra % p + rb % p) % p) * w
        ra //= p
        rb //= p
        w *= p
    return out


def scale_index(a, c, p, n):
    """Index of c * coords(a)."""
    c %= p
    if c == 1:
        return np.asarray(a, dtype=np.int64)
    return point_index((point_coords(a, p, n) * c) % p, p)


def neg_index(a, p, n):
    return scale_index(a, p - 1, p, n)


def addition_table(params: FieldParams) -> np.ndarray:
    """``T[y, x] = index(x + y)``; quadratic in p^n, so desk scale only."""
    N = params.size
    if N * N > 2**26:
        raise CapacityExceeded(f"addition table for {N} points too large")
    idx = np.arange(N)
    return add_indices(idx[:, None], idx[None, :], params.p, params.n)


# -- linear algebra mod p ----------------------------------------------------

def _inv_mod(a, p):
    return pow(int(a), p - 2, p)


def row_reduce(M, p):
    """Reduced row echelon form mod p; returns (R, pivot_columns)."""
    R = np.array(M, dtype=np.int64) % p
    if R.ndim != 2:
        raise DimensionError("row_reduce expects a 2-D array")
    rows, cols = R.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(R[r:, c])[0]
        if nz.size == 0:
            continue
        piv = r + nz[0]
        if piv != r:
            R[[r, piv]] = R[[piv, r]]
        R[r] = (R[r] * _inv_mod(R[r, c], p)) % p
        others = np.nonzero(R[:, c])[0]
        for o in others:
            if o != r:
                R[o] = (R[o] - R[o, c] * R[r]) % p
        pivots.append(c)
        r += 1
    return R, pivots


def rank_mod_p(M, p) -> int:
    M = np.asarray(M)
    if M.size == 0:
        return 0
    return len(row_reduce(M, p)[1])


def in_span(v, vectors, p) -> bool:
    """True iff ``v`` lies in the F_p-span of ``vectors`` (rows)."""
    v = np.asarray(v, dtype=np.int64) % p
    vectors = [np.asarray(u, dtype=np.int64) for u in vectors]
    if not vectors:
        return not v.any()
    base = np.array(vectors)
    return rank_mod_p(np.vstack([base, v]), p) == rank_mod_p(base, p)


def inverse_mod_p(M, p):
    M = np.asarray(M, dtype=np.int64) % p
    k = M.shape[0]
    if M.shape != (k, k):
        raise DimensionError("inverse_mod_p expects a square matrix")
    R, pivots = row_reduce(np.hstack([M, np.eye(k, dtype=np.int64)]), p)
    if pivots[:k] != list(range(k)):
        raise NotInjective("matrix is singular mod p")
    return R[:, k:]


# -- affine maps ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AffineMap:
    """The map x -> Lx + c from F_p^k to F_p^n.

    ``matrix`` has shape (n, k); column j is the image of the j-th source
    basis vector.
    """

    p: int
    matrix: np.ndarray
    shift: np.ndarray

    def __post_init__(self):
        L = np.array(self.matrix, dtype=np.int64) % self.p
        c = np.array(self.shift, dtype=np.int64).reshape(-1) % self.p
        if L.ndim != 2:
            L = L.reshape(c.size, -1)
        if L.shape[0] != c.size:
            raise DimensionError(f"matrix has {L.shape[0]} rows but shift has length {c.size}")
        L.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "matrix", L)
        object.__setattr__(self, "shift", c)

    @property
    def source_dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def target_dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_embedding(self) -> bool:
        return rank_mod_p(self.matrix.T, self.p) == self.source_dim if self.source_dim else True

    def __call__(self, x):
        x = np.asarray(x, dtype=np.int64)
        return (x @ self.matrix.T + self.shift) % self.p

    def __eq__(self, other):
        return (
            isinstance(other, AffineMap)
            and self.p == other.p
            and self.matrix.shape == other.matrix.shape
            and np.array_equal(self.matrix, other.matrix)
            and np.array_equal(self.shift, other.shift)
        )

    def __hash__(self):
        return hash((self.p, self.matrix.shape, self.matrix.tobytes(), self.shift.tobytes()))

    def image_indices(self) -> np.ndarray:
        """Target index of every source point, in source index order."""
        src = point_coords(np.arange(self.p**self.source_dim), self.p, self.source_dim)
        return point_index(self(src), self.p)

    def compose(self, inner: "AffineMap") -> "AffineMap":
        """The map ``self(inner(x))``."""
        if inner.target_dim != self.source_dim or inner.p != self.p:
            raise DimensionError("cannot compose: dimension mismatch")
        L = (self.matrix @ inner.matrix) % self.p
        c = (self.matrix @ inner.shift + self.shift) % self.p
        return AffineMap(self.p, L, c)

    @classmethod
    def identity(cls, p, n):
        return cls(p, np.eye(n, dtype=np.int64), np.zeros(n, dtype=np.int64))

    def to_text(self) -> str:
        lines = [f"{self.p} {self.source_dim} {self.target_dim}"]
        for j in range(self.source_dim):
            lines.append(" ".join(str(int(v)) for v in self.matrix[:, j]))
        lines.append(" ".join(str(int(v)) for v in self.shift))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text, source=None):
        from .errors import ParseError

        rows = [(i + 1, ln.split()) for i, ln in enumerate(text.splitlines()) if ln.strip()]
        if not rows:
            raise ParseError("empty affine map file", source=source)
        lineno, head = rows[0]
        try:
            p, k, n = (int(t) for t in head)
        except ValueError:
            raise ParseError("header must be 'p k n'", line=lineno, source=source)
        if len(rows) != k + 2:
            raise ParseError(f"expected {k + 1} rows after header, got {len(rows) - 1}", source=source)
        cols = []
        for lineno, toks in rows[1:]:
            if len(toks) != n:
                raise ParseError(f"expected {n} entries", line=lineno, source=source)
            try:
                cols.append([int(t) for t in toks])
            except ValueError:
                raise ParseError("non-integer entry", line=lineno, source=source)
        shift = cols.pop()
        matrix = np.array(cols, dtype=np.int64).reshape(k, n).T
        return cls(p, matrix, np.array(shift, dtype=np.int64))


def sample_affine_embedding(rng, k, n, p=2) -> AffineMap:
    """Uniformly random injective affine map F_p^k -> F_p^n (rejection sampling)."""
    if k < 0 or k > n:
        raise DimensionError(f"need 0 <= k <= n, got k={k}, n={n}")
    while True:
        L = rng.integers(0, p, size=(n, k), dtype=np.int64)
        if k == 0 or rank_mod_p(L.T, p) == k:
            break
    c = rng.integers(0, p, size=n, dtype=np.int64)
    return AffineMap(p, L, c)


def sample_affine_map(rng, k, n, p=2) -> AffineMap:
    """Uniformly random affine map, not necessarily injective."""
    L = rng.integers(0, p, size=(n, k), dtype=np.int64)
    c = rng.integers(0, p, size=n, dtype=np.int64)
    return AffineMap(p, L, c)


def section_of(A: AffineMap) -> AffineMap:
    """A left inverse A' : F_p^n -> F_p^m of the embedding A, so A'(A(x)) = x.

    Equivalently ``(A' Q) restricted along A`` equals Q for every function Q
    on F_p^m.  The linear part is built from the inverse of the first m
    linearly independent rows of A's matrix.
    """
    p, m, n = A.p, A.source_dim, A.target_dim
    if m == 0:
        return AffineMap(p, np.zeros((0, n), dtype=np.int64), np.zeros(0, dtype=np.int64))
    _, pivots = row_reduce(A.matrix.T, p)
    if len(pivots) < m:
        raise NotInjective(f"linear part has rank {len(pivots)} < {m}")
    rows = pivots[:m]
    inv = inverse_mod_p(A.matrix[rows, :], p)
    M = np.zeros((m, n), dtype=np.int64)
    M[:, rows] = inv
    c = (-(M @ A.shift)) % p
    return AffineMap(p, M, c)


def count_embeddings(k, n, p) -> int:
    count = p**n
    for i in range(k):
        count *= p**n - p**i
    return count


def embedding_images(k, n, p, cap=2**24) -> np.ndarray:
    """Image index arrays of every injective affine map F_p^k -> F_p^n.

    Returns shape ``(count_embeddings(k, n, p), p**k)``; row order is
    deterministic (columns lexicographic by index, shift slowest).
    """
    total = count_embeddings(k, n, p)
    if total * max(p**k, 1) > cap * 4 or total > cap:
        raise CapacityExceeded(f"{total} embeddings of F_{p}^{k} into F_{p}^{n} exceed cap {cap}")
    N = p**n
    spans = np.zeros((1, 1), dtype=np.int64)
    for _ in range(k):
        new = []
        for S in spans:
            inside = np.zeros(N, dtype=bool)
            inside[S] = True
            for v in np.nonzero(~inside)[0]:
                parts = [add_indices(S, scale_index(v, j, p, n), p, n) for j in range(p)]
                new.append(np.concatenate(parts))
        spans = np.array(new, dtype=np.int64)
    shifts = np.arange(N)
    return add_indices(shifts[:, None, None], spans[None, :, :], p, n).reshape(-1, p**k)


def iter_embeddings(k, n, p) -> Iterator[AffineMap]:
    """Every injective affine map as an AffineMap; brute force, tiny sizes only."""
    for cols in product(range(p), repeat=n * k):
        L = np.array(cols, dtype=np.int64).reshape(n, k)
        if k and rank_mod_p(L.T, p) < k:
            continue
        for c in product(range(p), repeat=n):
            yield AffineMap(p, L, np.array(c, dtype=np.int64))
