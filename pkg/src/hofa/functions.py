"""Dense value tables f : F_p^n -> V and the operations on them."""

import io
import math

import numpy as np

from .errors import DimensionError, ParseError, RangeError
from .field import AffineMap, FieldParams

FINITE = "finite"
UNIT = "unit"          # real values in [0, 1]
SIGNED = "signed"      # real values in [-1, 1]
COMPLEX = "complex"    # complex values in the closed unit disc

_TOL = 1e-12


class FiniteFunction:
    """A function on F_p^n stored as a table in canonical point order.

    ``kind`` is one of ``"finite"`` (values in {0..R-1}), ``"unit"``,
    ``"signed"`` or ``"complex"``.  Instances are treated as immutable; the
    value array is flagged read-only.
    """

    __slots__ = ("p", "n", "kind", "R", "values")

    def __init__(self, values, p=2, kind=None, R=None, n=None):
        vals = np.asarray(values)
        if vals.ndim != 1:
            vals = vals.reshape(-1)
        if n is None:
            n = _infer_dim(vals.size, p)
        params = FieldParams(p, n)
        if vals.size != params.size:
            raise DimensionError(f"table has {vals.size} entries, expected {p}^{n} = {params.size}")
        if kind is None:
            kind = FINITE if (R is not None or np.issubdtype(vals.dtype, np.integer) or vals.dtype == bool) else UNIT
            if np.iscomplexobj(vals):
                kind = COMPLEX
        if kind == FINITE:
            R = 2 if R is None else int(R)
            if R < 2:
                raise RangeError("R must be >= 2")
            if vals.size and not np.all(np.isclose(vals, np.round(np.real(vals)))):
                raise RangeError("finite-range table has non-integer values")
            vals = np.round(np.real(vals)).astype(np.uint8 if R <= 256 else np.int64)
            if vals.size and (vals.min() < 0 or vals.max() >= R):
                raise RangeError(f"values outside [0, {R})")
        elif kind == UNIT:
            vals = np.asarray(vals, dtype=np.float64)
            if vals.size and (vals.min() < -_TOL or vals.max() > 1 + _TOL):
                raise RangeError("values outside [0, 1]")
            vals = np.clip(vals, 0.0, 1.0)
        elif kind == SIGNED:
            vals = np.asarray(vals, dtype=np.float64)
            if vals.size and np.abs(vals).max() > 1 + _TOL:
                raise RangeError("values outside [-1, 1]")
            vals = np.clip(vals, -1.0, 1.0)
        elif kind == COMPLEX:
            vals = np.asarray(vals, dtype=np.complex128)
            if vals.size and np.abs(vals).max() > 1 + 1e-9:
                raise RangeError("values outside the unit disc")
        else:
            raise ValueError(f"unknown range kind {kind!r}")
        if kind != FINITE:
            R = None
        vals = vals.copy()
        vals.setflags(write=False)
        self.p, self.n, self.kind, self.R, self.values = p, n, kind, R, vals

    # -- constructors ------------------------------------------------------

    @classmethod
    def constant(cls, c, p, n, kind=None, R=None):
        N = p**n
        if kind is None:
            kind = FINITE if float(c).is_integer() and 0 <= c <= 1 else UNIT
        dtype = np.int64 if kind == FINITE else (np.complex128 if kind == COMPLEX else np.float64)
        return cls(np.full(N, c, dtype=dtype), p, kind=kind, R=R, n=n)

    @classmethod
    def from_callable(cls, fn, p, n, kind=FINITE, R=None):
        from .field import enumerate_points

        pts = enumerate_points(FieldParams(p, n))
        return cls([fn(tuple(int(v) for v in x)) for x in pts], p, kind=kind, R=R, n=n)

    @classmethod
    def random_boolean(cls, rng, p, n, density=0.5):
        return cls((rng.random(p**n) < density).astype(np.uint8), p, kind=FINITE, R=2, n=n)

    @classmethod
    def random_unit(cls, rng, p, n):
        return cls(rng.random(p**n), p, kind=UNIT, n=n)

    @classmethod
    def random_signed(cls, rng, p, n):
        return cls(rng.uniform(-1.0, 1.0, p**n), p, kind=SIGNED, n=n)

    # -- views -------------------------------------------------------------

    @property
    def params(self) -> FieldParams:
        return FieldParams(self.p, self.n)

    @property
    def size(self) -> int:
        return self.values.size

    @property
    def is_boolean(self) -> bool:
        return self.kind == FINITE and self.R == 2

    def real(self) -> np.ndarray:
        if self.kind == COMPLEX:
            raise RangeError("complex table has no real view")
        return self.values.astype(np.float64)

    def numeric(self) -> np.ndarray:
        """Values as float64 (or complex128 for complex tables)."""
        if self.kind == COMPLEX:
            return self.values
        return self.values.astype(np.float64)

    def with_values(self, values, kind=None, R=None):
        return FiniteFunction(values, self.p, kind=kind or self.kind, R=R if R is not None else self.R, n=self.n)

    def __repr__(self):
        rng = f"[{self.R}]" if self.kind == FINITE else self.kind
        return f"FiniteFunction(p={self.p}, n={self.n}, range={rng})"

    def __eq__(self, other):
        return (
            isinstance(other, FiniteFunction)
            and (self.p, self.n, self.kind, self.R) == (other.p, other.n, other.kind, other.R)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    # -- text format -------------------------------------------------------

    def to_text(self) -> str:
        head = f"{self.p} {self.n} {self.R if self.kind == FINITE else 'real'}"
        if self.kind == FINITE:
            body = " ".join(str(int(v)) for v in self.values)
        elif self.kind == COMPLEX:
            raise RangeError("complex tables have no text format")
        else:
            body = " ".join(repr(float(v)) for v in self.values)
        return head + "\n" + body + "\n"

    @classmethod
    def from_text(cls, text, source=None):
        funcs = read_functions(io.StringIO(text), source=source)
        if len(funcs) != 1:
            raise ParseError(f"expected one function block, found {len(funcs)}", source=source)
        return funcs[0]


def _infer_dim(size, p):
    n, N = 0, 1
    while N < size:
        N *= p
        n += 1
    if N != size:
        raise DimensionError(f"table length {size} is not a power of {p}")
    return n


def read_functions(stream, source=None):
    """Parse one or more concatenated function blocks.

    Each block is a header ``p n R`` or ``p n real`` followed by exactly p^n
    whitespace-separated values (which may span several lines).  Real blocks
    with a negative entry are read as [-1, 1]-valued.
    """
    tokens = []
    for lineno, line in enumerate(stream, start=1):
        line = line.split("#", 1)[0]
        tokens.extend((lineno, t) for t in line.split())
    out = []
    pos = 0
    while pos < len(tokens):
        if pos + 3 > len(tokens):
            raise ParseError("truncated header", line=tokens[pos][0], source=source)
        (line, tp), (_, tn), (_, tr) = tokens[pos:pos + 3]
        try:
            p, n = int(tp), int(tn)
            kind, R = (UNIT, None) if tr == "real" else (FINITE, int(tr))
            params = FieldParams(p, n)
        except ValueError as exc:
            raise ParseError(f"bad header: {exc}", line=line, source=source)
        pos += 3
        body = tokens[pos:pos + params.size]
        if len(body) < params.size:
            raise ParseError(f"expected {params.size} values, got {len(body)}", line=line, source=source)
        convert = int if kind == FINITE else float
        vals = []
        for ln, t in body:
            try:
                vals.append(convert(t))
            except ValueError:
                what = "integer" if kind == FINITE else "numeric"
                raise ParseError(f"non-{what} value {t!r}", line=ln, source=source)
        try:
            if kind == UNIT and vals and min(vals) < 0:
                kind = SIGNED
            out.append(FiniteFunction(np.array(vals), p, kind=kind, R=R, n=n))
        except (RangeError, DimensionError) as exc:
            raise ParseError(str(exc), line=line, source=source)
        pos += params.size
    return out


# -- operations ----------------------------------------------------------------

def restrict(f: FiniteFunction, A: AffineMap) -> FiniteFunction:
    """The composition f o A as a table on the source space of A."""
    if A.target_dim != f.n or A.p != f.p:
        raise DimensionError(f"map targets F_{A.p}^{A.target_dim}, function lives on F_{f.p}^{f.n}")
    return FiniteFunction(f.values[A.image_indices()], f.p, kind=f.kind, R=f.R, n=A.source_dim)


def _check_pair(f, g):
    if (f.p, f.n) != (g.p, g.n):
        raise DimensionError(f"functions on F_{f.p}^{f.n} and F_{g.p}^{g.n}")


def _diff(f, g):
    _check_pair(f, g)
    if f.kind == FINITE and g.kind == FINITE:
        return f.values.astype(np.int64) - g.values.astype(np.int64)
    return f.numeric() - g.numeric()


def l1_distance(f, g) -> float:
    """E_x |f(x) - g(x)|; exact integer accumulation for finite ranges."""
    d = _diff(f, g)
    if d.dtype == np.int64:
        return int(np.abs(d).sum()) / d.size
    return math.fsum(np.abs(d)) / d.size


def l2_distance(f, g) -> float:
    d = _diff(f, g)
    if d.dtype == np.int64:
        return math.sqrt(int((d * d).sum()) / d.size)
    return math.sqrt(math.fsum(np.abs(d) ** 2) / d.size)


def linf_distance(f, g) -> float:
    d = _diff(f, g)
    return float(np.abs(d).max()) if d.size else 0.0


def hamming_distance(f, g) -> float:
    """Pr_x[f(x) != g(x)]."""
    _check_pair(f, g)
    return int(np.count_nonzero(f.values != g.values)) / f.size


def l1_norm(values) -> float:
    return math.fsum(np.abs(np.asarray(values))) / np.asarray(values).size


def l2_norm(values) -> float:
    v = np.abs(np.asarray(values))
    return math.sqrt(math.fsum(v * v) / v.size)


def round_randomized(f: FiniteFunction, rng) -> FiniteFunction:
    """Sample f' with Pr[f'(x) = 1] = f(x) independently for every x."""
    if f.kind == FINITE:
        if f.R != 2:
            raise RangeError("round_randomized needs values in [0, 1]")
        return f
    if f.kind == COMPLEX:
        raise RangeError("round_randomized needs real values in [0, 1]")
    vals = f.real()
    if vals.min() < 0 or vals.max() > 1:
        raise RangeError("round_randomized needs values in [0, 1]")
    u = rng.random(vals.size)
    return FiniteFunction((u < vals).astype(np.uint8), f.p, kind=FINITE, R=2, n=f.n)


def indicator_slices(f: FiniteFunction):
    """The indicator functions 1_{f = i} for i in [R]."""
    if f.kind != FINITE:
        raise RangeError("slices are defined for finite-range functions")
    return [
        FiniteFunction((f.values == i).astype(np.uint8), f.p, kind=FINITE, R=2, n=f.n)
        for i in range(f.R)
    ]


def combine_slices(slices, R=None) -> FiniteFunction:
    """Inverse of :func:`indicator_slices`: sum_i i * slice_i."""
    R = len(slices) if R is None else R
    first = slices[0]
    total = np.zeros(first.size, dtype=np.int64)
    cover = np.zeros(first.size, dtype=np.int64)
    for i, s in enumerate(slices):
        total += i * s.values.astype(np.int64)
        cover += s.values
    if not np.all(cover == 1):
        raise RangeError("slices do not partition the domain")
    return FiniteFunction(total, first.p, kind=FINITE, R=R, n=first.n)


def as_function(values, like: FiniteFunction, kind=SIGNED):
    """Wrap a raw array on the same space as ``like``."""
    return FiniteFunction(values, like.p, kind=kind, n=like.n)
