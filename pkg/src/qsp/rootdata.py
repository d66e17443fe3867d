"""Generalized Cartan matrices, the invariant form and Weyl group combinatorics.

Weights are tuples of Fractions: coefficients of a (rational) expansion in the
simple roots.  For level-zero affine modules only the classical part is
stored, which is enough because the imaginary root pairs trivially with
everything.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import gcd
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import flint

Weight = Tuple[Fraction, ...]


class RootDataError(ValueError):
    code = "RootDataError"

    def __init__(self, msg: str = ""):
        super().__init__(f"{self.code}: {msg}" if msg else self.code)


class AsymmetricZero(RootDataError):
    code = "AsymmetricZero"


class BadDiagonal(RootDataError):
    code = "BadDiagonal"


class BadOffDiagonal(RootDataError):
    code = "BadOffDiagonal"


class NotSymmetrizable(RootDataError):
    code = "NotSymmetrizable"


class Decomposable(RootDataError):
    code = "Decomposable"


class CorankNotOne(RootDataError):
    code = "CorankNotOne"


class NotDiagramAutomorphism(RootDataError):
    code = "NotDiagramAutomorphism"


class NotFiniteType(RootDataError):
    code = "NotFiniteType"


class FormUndefined(RootDataError):
    code = "FormUndefined"


class GCMErrors(RootDataError):
    """Several violated conditions at once."""
    code = "InvalidGCM"

    def __init__(self, errors: List[RootDataError]):
        self.errors = errors
        super().__init__("; ".join(str(e) for e in errors))


def _det(rows: Sequence[Sequence[int]]) -> int:
    if not rows:
        return 1
    return int(flint.fmpz_mat([list(r) for r in rows]).det())


@dataclass(frozen=True)
class GCM:
    a: Tuple[Tuple[int, ...], ...]
    eps: Tuple[int, ...]
    nodes: Tuple[str, ...]
    _cache: Dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    @property
    def n(self) -> int:
        return len(self.a)

    def index(self, name) -> int:
        if isinstance(name, int) and not isinstance(name, bool) and str(name) not in self.nodes:
            if 0 <= name < self.n:
                return name
        try:
            return self.nodes.index(str(name))
        except ValueError:
            raise RootDataError(f"unknown node {name!r}") from None

    # weights

    def simple(self, i: int) -> Weight:
        return tuple(Fraction(int(k == i)) for k in range(self.n))

    def zero(self) -> Weight:
        return (Fraction(0),) * self.n

    def coroot_value(self, c: Sequence, j: int) -> Fraction:
        """mu(h_j) for mu = sum c_i alpha_i."""
        return sum((Fraction(c[i]) * self.a[j][i] for i in range(self.n)), Fraction(0))

    def form(self, c: Sequence, d: Sequence) -> Fraction:
        """(sum c_i alpha_i, sum d_j alpha_j) = sum c_i d_j eps_i a_ij."""
        s = Fraction(0)
        for i, ci in enumerate(c):
            if ci == 0:
                continue
            row = self.a[i]
            e = self.eps[i]
            for j, dj in enumerate(d):
                if dj and row[j]:
                    s += Fraction(ci) * dj * e * row[j]
        return s

    def reflect(self, i: int, c: Sequence) -> Weight:
        c = tuple(Fraction(x) for x in c)
        k = self.coroot_value(c, i)
        if k == 0:
            return c
        return tuple(x - k if j == i else x for j, x in enumerate(c))

    def weyl_act(self, word: Sequence[int], c: Sequence) -> Weight:
        """Word acts right to left."""
        c = tuple(Fraction(x) for x in c)
        for i in reversed(word):
            c = self.reflect(i, c)
        return c

    def permute(self, tau: Sequence[int], c: Sequence) -> Weight:
        out = [Fraction(0)] * self.n
        for i, x in enumerate(c):
            out[tau[i]] = Fraction(x)
        return tuple(out)

    def height(self, c: Sequence) -> Fraction:
        return sum((Fraction(x) for x in c), Fraction(0))

    def is_automorphism(self, tau: Sequence[int]) -> bool:
        if sorted(tau) != list(range(self.n)):
            return False
        return all(self.a[tau[i]][tau[j]] == self.a[i][j] for i in range(self.n) for j in range(self.n))

    def corank(self) -> int:
        return self.n - flint.fmpz_mat([list(r) for r in self.a]).rank()


def _compute_eps(a: Sequence[Sequence[int]]) -> Optional[List[int]]:
    n = len(a)
    eps: List[Optional[Fraction]] = [None] * n
    for start in range(n):
        if eps[start] is not None:
            continue
        eps[start] = Fraction(1)
        stack = [start]
        while stack:
            i = stack.pop()
            for j in range(n):
                if i == j or a[i][j] == 0:
                    continue
                # eps_i a_ij = eps_j a_ji
                val = eps[i] * a[i][j] / a[j][i]
                if eps[j] is None:
                    eps[j] = val
                    stack.append(j)
                elif eps[j] != val:
                    return None
    den = 1
    for e in eps:
        den = den * e.denominator // gcd(den, e.denominator)
    ints = [int(e * den) for e in eps]
    g = 0
    for x in ints:
        g = gcd(g, x)
    return [x // g for x in ints]


def _components(a) -> List[List[int]]:
    n = len(a)
    seen, comps = set(), []
    for s in range(n):
        if s in seen:
            continue
        comp, stack = [], [s]
        seen.add(s)
        while stack:
            i = stack.pop()
            comp.append(i)
            for j in range(n):
                if j not in seen and a[i][j] != 0:
                    seen.add(j)
                    stack.append(j)
        comps.append(sorted(comp))
    return comps


def validate_gcm(a: Sequence[Sequence[int]], eps: Optional[Sequence[int]] = None,
                 nodes: Optional[Sequence] = None, indecomposable: bool = False) -> GCM:
    n = len(a)
    errors: List[RootDataError] = []
    if any(len(r) != n for r in a):
        raise RootDataError("matrix is not square")
    a = tuple(tuple(int(x) for x in r) for r in a)
    for i in range(n):
        if a[i][i] != 2:
            errors.append(BadDiagonal(f"a[{i}][{i}] = {a[i][i]}"))
        for j in range(n):
            if i != j and a[i][j] > 0:
                errors.append(BadOffDiagonal(f"a[{i}][{j}] = {a[i][j]} > 0"))
            if i < j and (a[i][j] == 0) != (a[j][i] == 0):
                errors.append(AsymmetricZero(f"a[{i}][{j}] = {a[i][j]}, a[{j}][{i}] = {a[j][i]}"))
    if not errors:
        if eps is None:
            e = _compute_eps(a)
            if e is None:
                errors.append(NotSymmetrizable("no symmetrizer exists"))
        else:
            e = [int(x) for x in eps]
            if len(e) != n or any(x <= 0 for x in e):
                errors.append(NotSymmetrizable("symmetrizer must be positive"))
            elif any(e[i] * a[i][j] != e[j] * a[j][i] for i in range(n) for j in range(n)):
                errors.append(NotSymmetrizable(f"eps = {e} does not symmetrize"))
    if indecomposable and not errors and len(_components(a)) > 1:
        errors.append(Decomposable("diagram is not connected"))
    if errors:
        if len(errors) == 1:
            raise errors[0]
        raise GCMErrors(errors)
    names = tuple(str(x) for x in (nodes if nodes is not None else range(n)))
    if len(names) != n or len(set(names)) != n:
        raise RootDataError("node names must be distinct and match the matrix size")
    return GCM(a, tuple(e), names)


def is_finite_type(A: GCM, X: Iterable[int]) -> bool:
    X = sorted(set(X))
    sub = [[A.a[i][j] for j in X] for i in X]
    for k in range(1, len(X) + 1):
        for idx in combinations(range(len(X)), k):
            if _det([[sub[i][j] for j in idx] for i in idx]) <= 0:
                return False
    return True


def basic_imaginary_root(A: GCM) -> Tuple[int, ...]:
    if A.corank() != 1:
        raise CorankNotOne(f"corank is {A.corank()}")
    M = flint.fmpq_mat([[flint.fmpq(x) for x in r] for r in A.a])
    rref, rank = M.rref()
    n = A.n
    piv, r = [], 0
    for c in range(n):
        if r < rank and rref[r, c] != 0:
            piv.append(c)
            r += 1
    free = [c for c in range(n) if c not in piv][0]
    v = [Fraction(0)] * n
    v[free] = Fraction(1)
    for r, c in enumerate(piv):
        x = rref[r, free]
        v[c] = -Fraction(int(x.p), int(x.q))
    den = 1
    for x in v:
        den = den * x.denominator // gcd(den, x.denominator)
    ints = [int(x * den) for x in v]
    g = 0
    for x in ints:
        g = gcd(g, x)
    ints = [x // g for x in ints]
    first = next(x for x in ints if x != 0)
    if first < 0:
        ints = [-x for x in ints]
    return tuple(ints)


def tau_compatible_scaling_exists(A: GCM, tau: Sequence[int]) -> Tuple[int, bool]:
    tau = list(tau)
    if not A.is_automorphism(tau):
        raise NotDiagramAutomorphism(f"{tau} is not a diagram automorphism")
    delta = basic_imaginary_root(A)
    moved = [0] * A.n
    for i in range(A.n):
        moved[tau[i]] = delta[i]
    if tuple(moved) == delta:
        return 1, True
    if tuple(-x for x in moved) == delta:
        return -1, False
    raise NotDiagramAutomorphism("tau does not preserve the kernel")  # cannot happen for automorphisms


@dataclass(frozen=True)
class SubsystemData:
    X: Tuple[int, ...]
    word: Tuple[int, ...]
    oi: Tuple[int, ...]         # permutation of I, identity off X
    positive_roots: Tuple[Weight, ...]
    rho: Weight
    two_rho_vee: Tuple[int, ...]  # alpha_j(2 rho_X^vee) for all j


def positive_roots(A: GCM, X: Iterable[int]) -> List[Weight]:
    X = sorted(set(X))
    if not is_finite_type(A, X):
        raise NotFiniteType(f"X = {X}")
    found = {A.simple(i) for i in X}
    frontier = list(found)
    while frontier:
        nxt = []
        for r in frontier:
            for i in X:
                s = A.reflect(i, r)
                if s not in found and all(x >= 0 for x in s):
                    found.add(s)
                    nxt.append(s)
        frontier = nxt
    return sorted(found, key=lambda r: (A.height(r), tuple(-x for x in r)))


def _is_positive(c: Weight) -> bool:
    return all(x >= 0 for x in c) and any(x > 0 for x in c)


def longest_element(A: GCM, X: Iterable[int]) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    """Greedy reduced word for w_X (ties broken by node order) and oi_X."""
    X = sorted(set(X))
    if not is_finite_type(A, X):
        raise NotFiniteType(f"X = {X}")
    word: List[int] = []
    while True:
        for i in X:
            if _is_positive(A.weyl_act(word, A.simple(i))):
                word.append(i)
                break
        else:
            break
    oi = list(range(A.n))
    for i in X:
        img = A.weyl_act(word, A.simple(i))
        j = next(k for k, x in enumerate(img) if x != 0)
        assert img == tuple(-x for x in A.simple(j))
        oi[i] = j
    return tuple(word), tuple(oi)


def subsystem(A: GCM, X: Iterable[int]) -> SubsystemData:
    X = tuple(sorted(set(X)))
    key = ("sub", X)
    if key in A._cache:
        return A._cache[key]
    roots = positive_roots(A, X)
    word, oi = longest_element(A, X)
    if len(word) != len(roots):
        raise RootDataError("reduced word length does not match the number of positive roots")
    rho = tuple(sum((r[k] for r in roots), Fraction(0)) / 2 for k in range(A.n))
    two_rho_vee = []
    for j in range(A.n):
        s = Fraction(0)
        for r in roots:
            eps_r = A.form(r, r) / 2
            # coroot of r is sum_i r_i eps_i / eps_r h_i
            s += sum((r[i] * A.eps[i] * A.a[i][j] for i in range(A.n)), Fraction(0)) / eps_r
        if s.denominator != 1:
            raise RootDataError(f"alpha_{j}(2 rho_X^vee) = {s} is not an integer")
        two_rho_vee.append(int(s))
    out = SubsystemData(X, word, oi, tuple(roots), rho, tuple(two_rho_vee))
    A._cache[key] = out
    return out


def rho_data(A: GCM, X: Iterable[int]) -> Tuple[Weight, Tuple[int, ...]]:
    s = subsystem(A, X)
    return s.rho, s.two_rho_vee


def theta_map(A: GCM, X: Iterable[int], tau: Sequence[int]):
    """Return the linear map mu -> -w_X(tau(mu)) on root-lattice expansions."""
    word = subsystem(A, X).word
    tau = tuple(tau)

    def theta(c: Sequence) -> Weight:
        return tuple(-x for x in A.weyl_act(word, A.permute(tau, c)))

    return theta


def theta_matrix(A: GCM, X: Iterable[int], tau: Sequence[int]) -> Tuple[Tuple[int, ...], ...]:
    """Column j is theta(alpha_j) (integral)."""
    th = theta_map(A, X, tau)
    cols = [th(A.simple(j)) for j in range(A.n)]
    return tuple(tuple(int(cols[j][i]) for j in range(A.n)) for i in range(A.n))


def apply_int_matrix(M: Sequence[Sequence[int]], c: Sequence) -> Weight:
    return tuple(sum((Fraction(M[i][j]) * c[j] for j in range(len(c))), Fraction(0)) for i in range(len(M)))
