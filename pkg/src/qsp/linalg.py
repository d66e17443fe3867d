"""Sparse matrices over Scalar and exact Gaussian elimination."""
from __future__ import annotations

from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from .scalars import ONE, ZERO, Scalar, S, bar, dot


class SingularMatrix(ArithmeticError):
    pass


class Mat:
    """Row-sparse matrix: rows[i] maps column index -> nonzero Scalar."""

    __slots__ = ("nrows", "ncols", "rows")

    def __init__(self, nrows: int, ncols: int, rows: Optional[List[Dict[int, Scalar]]] = None):
        self.nrows, self.ncols = nrows, ncols
        self.rows = rows if rows is not None else [dict() for _ in range(nrows)]

    @staticmethod
    def zeros(n: int, m: Optional[int] = None) -> "Mat":
        return Mat(n, n if m is None else m)

    @staticmethod
    def identity(n: int) -> "Mat":
        return Mat(n, n, [{i: ONE} for i in range(n)])

    @staticmethod
    def diag(entries: Sequence[Scalar]) -> "Mat":
        return Mat(len(entries), len(entries),
                   [({i: S(x)} if not S(x).is_zero() else {}) for i, x in enumerate(entries)])

    @staticmethod
    def from_dense(rows: Sequence[Sequence]) -> "Mat":
        n = len(rows)
        m = len(rows[0]) if n else 0
        out = Mat(n, m)
        for i, r in enumerate(rows):
            if len(r) != m:
                raise ValueError("ragged matrix")
            for j, x in enumerate(r):
                x = S(x)
                if not x.is_zero():
                    out.rows[i][j] = x
        return out

    def copy(self) -> "Mat":
        return Mat(self.nrows, self.ncols, [dict(r) for r in self.rows])

    def __getitem__(self, ij) -> Scalar:
        i, j = ij
        return self.rows[i].get(j, ZERO)

    def __setitem__(self, ij, x) -> None:
        i, j = ij
        x = S(x)
        if x.is_zero():
            self.rows[i].pop(j, None)
        else:
            self.rows[i][j] = x

    def to_dense(self) -> List[List[Scalar]]:
        return [[self.rows[i].get(j, ZERO) for j in range(self.ncols)] for i in range(self.nrows)]

    def is_zero(self) -> bool:
        return all(not r for r in self.rows)

    def nnz(self) -> int:
        return sum(len(r) for r in self.rows)

    def __add__(self, other: "Mat") -> "Mat":
        _same_shape(self, other)
        out = self.copy()
        for i, r in enumerate(other.rows):
            row = out.rows[i]
            for j, x in r.items():
                y = row.get(j)
                if y is None:
                    row[j] = x
                else:
                    z = y + x
                    if z.is_zero():
                        del row[j]
                    else:
                        row[j] = z
        return out

    def __neg__(self) -> "Mat":
        return Mat(self.nrows, self.ncols, [{j: -x for j, x in r.items()} for r in self.rows])

    def __sub__(self, other: "Mat") -> "Mat":
        return self + (-other)

    def scale(self, c) -> "Mat":
        c = S(c)
        if c.is_zero():
            return Mat(self.nrows, self.ncols)
        if c.is_one():
            return self
        return Mat(self.nrows, self.ncols, [{j: x * c for j, x in r.items()} for r in self.rows])

    def __matmul__(self, other: "Mat") -> "Mat":
        if self.ncols != other.nrows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        out = []
        orows = other.rows
        for r in self.rows:
            acc: Dict[int, list] = {}
            for k, x in r.items():
                for j, y in orows[k].items():
                    lst = acc.get(j)
                    if lst is None:
                        acc[j] = [(x, y)]
                    else:
                        lst.append((x, y))
            row = {}
            for j, lst in acc.items():
                v = lst[0][0] * lst[0][1] if len(lst) == 1 else dot(lst)
                if not v.is_zero():
                    row[j] = v
            out.append(row)
        return Mat(self.nrows, other.ncols, out)

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.nrows, self.ncols)

    def T(self) -> "Mat":
        out = Mat(self.ncols, self.nrows)
        for i, r in enumerate(self.rows):
            for j, x in r.items():
                out.rows[j][i] = x
        return out

    def map(self, f: Callable[[Scalar], Scalar]) -> "Mat":
        out = Mat(self.nrows, self.ncols)
        for i, r in enumerate(self.rows):
            for j, x in r.items():
                y = f(x)
                if not y.is_zero():
                    out.rows[i][j] = y
        return out

    def bar(self) -> "Mat":
        return self.map(bar)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Mat):
            return NotImplemented
        return self.shape == other.shape and self.rows == other.rows

    def first_difference(self, other: "Mat"):
        """First (i, j, self_ij, other_ij) where the entries differ, else None."""
        _same_shape(self, other)
        for i in range(self.nrows):
            a, b = self.rows[i], other.rows[i]
            if a == b:
                continue
            for j in sorted(set(a) | set(b)):
                x, y = a.get(j, ZERO), b.get(j, ZERO)
                if x != y:
                    return (i, j, x, y)
        return None

    def col(self, j: int) -> List[Scalar]:
        return [r.get(j, ZERO) for r in self.rows]

    def apply(self, vec: Sequence[Scalar]) -> List[Scalar]:
        return [dot((x, vec[j]) for j, x in r.items()) for r in self.rows]

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "Mat":
        cpos = {c: k for k, c in enumerate(cols)}
        out = Mat(len(rows), len(cols))
        for a, i in enumerate(rows):
            for j, x in self.rows[i].items():
                k = cpos.get(j)
                if k is not None:
                    out.rows[a][k] = x
        return out

    def __repr__(self):
        return f"Mat({self.nrows}x{self.ncols}, nnz={self.nnz()})"


def _same_shape(a: Mat, b: Mat) -> None:
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")


def kron(a: Mat, b: Mat) -> Mat:
    n, m = b.nrows, b.ncols
    out = Mat(a.nrows * n, a.ncols * m)
    for i, ra in enumerate(a.rows):
        for j, x in ra.items():
            for k, rb in enumerate(b.rows):
                row = out.rows[i * n + k]
                for l, y in rb.items():
                    row[j * m + l] = x * y
    return out


def dot_vec(a: Sequence[Scalar], b: Sequence[Scalar]) -> Scalar:
    return dot(zip(a, b))


def kron_many(mats: Sequence[Mat]) -> Mat:
    out = mats[0]
    for m in mats[1:]:
        out = kron(out, m)
    return out


def permutation(perm: Sequence[int]) -> Mat:
    """Matrix sending basis vector j to basis vector perm[j]."""
    out = Mat(len(perm), len(perm))
    for j, i in enumerate(perm):
        out.rows[i][j] = ONE
    return out


def flip(n: int, m: int) -> Mat:
    """The flip V (x) W -> W (x) V for dim V = n, dim W = m."""
    return permutation([b * n + a for a in range(n) for b in range(m)])


def _dense_rows(A: Mat) -> List[Dict[int, Scalar]]:
    return [dict(r) for r in A.rows]


def row_reduce(A: Mat, ncols_pivot: Optional[int] = None):
    """Reduced row echelon form; returns (rows, pivot_columns).

    Only the first ncols_pivot columns are used as pivot candidates, so an
    augmented matrix [A | B] can be reduced in one pass.
    """
    rows = _dense_rows(A)
    limit = A.ncols if ncols_pivot is None else ncols_pivot
    pivots = []
    r = 0
    for c in range(limit):
        piv = None
        best = None
        for i in range(r, len(rows)):
            x = rows[i].get(c)
            if x is not None:
                size = len(x.num.coeffs()) + len(x.den.coeffs())
                if best is None or size < best:
                    piv, best = i, size
                    if size <= 2:
                        break
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = rows[r][c].inverse()
        rows[r] = {j: x * inv for j, x in rows[r].items()}
        prow = rows[r]
        for i in range(len(rows)):
            if i == r:
                continue
            f = rows[i].get(c)
            if f is None:
                continue
            row = rows[i]
            for j, x in prow.items():
                y = row.get(j)
                z = (ZERO if y is None else y) - f * x
                if z.is_zero():
                    row.pop(j, None)
                else:
                    row[j] = z
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return rows, pivots


def rank(A: Mat) -> int:
    return len(row_reduce(A)[1])


def pivot_columns(A: Mat) -> List[int]:
    """First independent columns, scanning left to right."""
    return row_reduce(A)[1]


def inverse(A: Mat) -> Mat:
    n = A.nrows
    if A.ncols != n:
        raise ValueError("inverse of non-square matrix")
    aug = Mat(n, 2 * n, [dict(r) for r in A.rows])
    for i in range(n):
        aug.rows[i][n + i] = ONE
    rows, piv = row_reduce(aug, n)
    if len(piv) < n:
        raise SingularMatrix(f"matrix of size {n} has rank {len(piv)}")
    out = Mat(n, n)
    for i in range(n):
        out.rows[i] = {j - n: x for j, x in rows[i].items() if j >= n}
    return out


def solve(A: Mat, B: Mat) -> Optional[Mat]:
    """One solution X of A X = B, or None if inconsistent."""
    n, m = A.ncols, B.ncols
    aug = Mat(A.nrows, n + m, [dict(r) for r in A.rows])
    for i in range(A.nrows):
        for j, x in B.rows[i].items():
            aug.rows[i][n + j] = x
    rows, piv = row_reduce(aug, n)
    for i in range(len(piv), len(rows)):
        if any(j >= n for j in rows[i]):
            return None
    X = Mat(n, m)
    for r, c in enumerate(piv):
        X.rows[c] = {j - n: x for j, x in rows[r].items() if j >= n}
    return X


def nullspace(A: Mat) -> List[List[Scalar]]:
    rows, piv = row_reduce(A)
    free = [c for c in range(A.ncols) if c not in set(piv)]
    basis = []
    for f in free:
        v = [ZERO] * A.ncols
        v[f] = ONE
        for r, c in enumerate(piv):
            x = rows[r].get(f)
            if x is not None:
                v[c] = -x
        basis.append(v)
    return basis


class GradedMat:
    """Matrix-valued Laurent polynomial in one or more spectral variables.

    terms maps a degree tuple to a Mat; keep(deg) decides which degrees
    are retained, so products are truncated consistently.
    """

    def __init__(self, shape: Tuple[int, int], terms: Optional[Dict[tuple, Mat]] = None,
                 keep: Optional[Callable[[tuple], bool]] = None):
        self.shape = shape
        self.keep = keep
        self.terms: Dict[tuple, Mat] = {}
        for d, m in (terms or {}).items():
            self._add_term(d, m)

    def _add_term(self, d: tuple, m: Mat) -> None:
        if self.keep is not None and not self.keep(d):
            return
        if m.is_zero():
            return
        cur = self.terms.get(d)
        m = m if cur is None else cur + m
        if m.is_zero():
            self.terms.pop(d, None)
        else:
            self.terms[d] = m

    @staticmethod
    def constant(m: Mat, nvars: int, keep=None) -> "GradedMat":
        return GradedMat(m.shape, {(0,) * nvars: m}, keep)

    def __add__(self, other: "GradedMat") -> "GradedMat":
        out = GradedMat(self.shape, dict(self.terms), self.keep or other.keep)
        for d, m in other.terms.items():
            out._add_term(d, m)
        return out

    def __neg__(self):
        return GradedMat(self.shape, {d: -m for d, m in self.terms.items()}, self.keep)

    def __sub__(self, other):
        return self + (-other)

    def __matmul__(self, other: "GradedMat") -> "GradedMat":
        keep = self.keep or other.keep
        out = GradedMat((self.shape[0], other.shape[1]), None, keep)
        for d1, m1 in self.terms.items():
            for d2, m2 in other.terms.items():
                d = tuple(a + b for a, b in zip(d1, d2))
                if keep is not None and not keep(d):
                    continue
                out._add_term(d, m1 @ m2)
        return out

    def kron(self, other: "GradedMat") -> "GradedMat":
        keep = self.keep or other.keep
        out = GradedMat((self.shape[0] * other.shape[0], self.shape[1] * other.shape[1]), None, keep)
        for d1, m1 in self.terms.items():
            for d2, m2 in other.terms.items():
                d = tuple(a + b for a, b in zip(d1, d2))
                if keep is not None and not keep(d):
                    continue
                out._add_term(d, kron(m1, m2))
        return out

    def conj(self, left: Mat, right: Mat) -> "GradedMat":
        return GradedMat(self.shape, {d: left @ m @ right for d, m in self.terms.items()}, self.keep)

    def restrict(self, pred: Callable[[tuple], bool]) -> "GradedMat":
        return GradedMat(self.shape, {d: m for d, m in self.terms.items() if pred(d)}, self.keep)

    def first_difference(self, other: "GradedMat", pred=None):
        degs = sorted(set(self.terms) | set(other.terms))
        z = Mat(*self.shape)
        for d in degs:
            if pred is not None and not pred(d):
                continue
            a, b = self.terms.get(d, z), other.terms.get(d, z)
            diff = a.first_difference(b)
            if diff is not None:
                return (d,) + diff
        return None
