"""Generalized Satake diagrams, parameter tuples and auxiliary diagrams."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from . import rootdata as rd
from .rootdata import GCM, SubsystemData, Weight
from .scalars import ONE, ZERO, Scalar, S, bar


class SatakeError(ValueError):
    code = "SatakeError"

    def __init__(self, msg: str = ""):
        super().__init__(f"{self.code}: {msg}" if msg else self.code)


def _err(name: str):
    return type(name, (SatakeError,), {"code": name})


NotFiniteTypeX = _err("NotFiniteTypeX")
TauNotAutomorphism = _err("TauNotAutomorphism")
TauNotInvolutive = _err("TauNotInvolutive")
TauNotStabilizingX = _err("TauNotStabilizingX")
TauNotOppositionOnX = _err("TauNotOppositionOnX")
NotTauStable = _err("NotTauStable")
NotCommuting = _err("NotCommuting")
GammaNotOneOnX = _err("GammaNotOneOnX")
GammaOrbitMismatch = _err("GammaOrbitMismatch")
GammaZero = _err("GammaZero")
SigmaOutsideIns = _err("SigmaOutsideIns")
SigmaParityViolation = _err("SigmaParityViolation")


class UnsuitableNode(SatakeError):
    code = "UnsuitableNode"

    def __init__(self, i: int, j: int):
        self.node, self.partner = i, j
        super().__init__(f"node {i} (with {j} in X)")


class SatakeErrors(SatakeError):
    code = "InvalidDiagram"

    def __init__(self, errors: List[SatakeError]):
        self.errors = errors
        super().__init__("; ".join(str(e) for e in errors))


def _raise(errors: List[SatakeError]) -> None:
    if len(errors) == 1:
        raise errors[0]
    if errors:
        raise SatakeErrors(errors)


@dataclass(frozen=True)
class GSatDiagram:
    A: GCM
    X: Tuple[int, ...]
    tau: Tuple[int, ...]
    sub: SubsystemData
    theta_cols: Tuple[Weight, ...]  # theta(alpha_j)
    i_eq: Tuple[int, ...]
    i_ns: Tuple[int, ...]

    def theta(self, c: Sequence) -> Weight:
        out = [Fraction(0)] * self.A.n
        for j, cj in enumerate(c):
            if cj:
                for k, x in enumerate(self.theta_cols[j]):
                    out[k] += Fraction(cj) * x
        return tuple(out)

    @property
    def restricted_rank(self) -> int:
        return restricted_rank(self)

    def describe(self) -> dict:
        names = self.A.nodes
        return {
            "X": [names[i] for i in self.X],
            "tau": [names[t] for t in self.tau],
            "I_eq": [names[i] for i in self.i_eq],
            "I_ns": [names[i] for i in self.i_ns],
            "w_X": [names[i] for i in self.sub.word],
            "restricted_rank": restricted_rank(self),
        }


def validate_gsat(A: GCM, X: Iterable[int], tau: Sequence[int]) -> GSatDiagram:
    X = tuple(sorted(set(X)))
    tau = tuple(tau)
    errors: List[SatakeError] = []
    if not rd.is_finite_type(A, X):
        raise NotFiniteTypeX(f"X = {list(X)}")
    if not A.is_automorphism(tau):
        raise TauNotAutomorphism(f"tau = {list(tau)}")
    if any(tau[tau[i]] != i for i in range(A.n)):
        errors.append(TauNotInvolutive(f"tau = {list(tau)}"))
    if set(tau[i] for i in X) != set(X):
        errors.append(TauNotStabilizingX(f"tau(X) != X"))
    _raise(errors)
    sub = rd.subsystem(A, X)
    if any(tau[i] != sub.oi[i] for i in X):
        raise TauNotOppositionOnX(f"tau|X = {[tau[i] for i in X]}, oi_X = {[sub.oi[i] for i in X]}")
    th = rd.theta_map(A, X, tau)
    cols = tuple(th(A.simple(j)) for j in range(A.n))
    for i in range(A.n):
        if i in X or tau[i] != i:
            continue
        for j in X:
            if A.a[j][i] != -1:
                continue
            target = tuple(-x for x in A.simple(i))
            target = tuple(t - (1 if k == j else 0) for k, t in enumerate(target))
            if cols[i] == target:
                errors.append(UnsuitableNode(i, j))
                break
    _raise(errors)
    i_eq = tuple(i for i in range(A.n) if i < tau[i] and A.form(cols[i], A.simple(i)) == 0)
    i_ns = tuple(i for i in range(A.n) if cols[i] == tuple(-x for x in A.simple(i)))
    return GSatDiagram(A, X, tau, sub, cols, i_eq, i_ns)


def restricted_rank(d: GSatDiagram) -> int:
    orbits = {frozenset((i, d.tau[i])) for i in range(d.A.n) if i not in d.X}
    return len(orbits)


@dataclass(frozen=True)
class ParamSet:
    gamma: Tuple[Scalar, ...]
    sigma: Tuple[Scalar, ...]
    # values of the gamma character on scaling elements (index r -> Scalar)
    gamma_ext: Tuple[Scalar, ...] = ()

    def to_json(self) -> dict:
        from .scalars import to_string
        return {"gamma": [to_string(x) for x in self.gamma],
                "sigma": [to_string(x) for x in self.sigma],
                "gamma_ext": [to_string(x) for x in self.gamma_ext]}


def validate_params(d: GSatDiagram, gamma: Sequence, sigma: Sequence,
                    gamma_ext: Sequence = ()) -> ParamSet:
    A = d.A
    gamma = tuple(S(x) for x in gamma)
    sigma = tuple(S(x) for x in sigma)
    if len(gamma) != A.n or len(sigma) != A.n:
        raise SatakeError(f"parameter tuples must have length {A.n}")
    errors: List[SatakeError] = []
    for i in range(A.n):
        if gamma[i].is_zero():
            errors.append(GammaZero(f"gamma_{i} = 0"))
        if i in d.X and not gamma[i].is_one():
            errors.append(GammaNotOneOnX(f"gamma_{i} = {gamma[i]!s}"))
    for i in d.i_eq:
        if gamma[i] != gamma[d.tau[i]]:
            errors.append(GammaOrbitMismatch(f"gamma_{i} != gamma_{d.tau[i]}"))
    for i in range(A.n):
        if i not in d.i_ns and not sigma[i].is_zero():
            errors.append(SigmaOutsideIns(f"sigma_{i} != 0 but {i} not in I_ns"))
    for i in d.i_ns:
        for j in d.i_ns:
            if A.a[i][j] % 2 != 0 and not sigma[j].is_zero():
                errors.append(SigmaParityViolation(f"a_{i}{j} = {A.a[i][j]} odd and sigma_{j} != 0"))
    ext = tuple(S(x) for x in gamma_ext)
    if any(x.is_zero() for x in ext):
        errors.append(GammaZero("zero extension value"))
    _raise(errors)
    return ParamSet(gamma, sigma, ext)


def prime_tuple(d: GSatDiagram, x: Sequence[Scalar]) -> Tuple[Scalar, ...]:
    out = []
    for i in range(d.A.n):
        v = bar(S(x[d.tau[i]]))
        out.append(-v if d.sub.two_rho_vee[i] % 2 else v)
    return tuple(out)


def prime_involution(d: GSatDiagram, p: ParamSet) -> ParamSet:
    return ParamSet(prime_tuple(d, p.gamma), prime_tuple(d, p.sigma),
                    tuple(bar(x) for x in p.gamma_ext))


def tau_compatible(main: GSatDiagram, Y: Iterable[int], eta: Sequence[int]) -> GSatDiagram:
    aux = validate_gsat(main.A, Y, eta)
    tau = main.tau
    errors: List[SatakeError] = []
    if set(tau[i] for i in aux.X) != set(aux.X):
        errors.append(NotTauStable(f"tau(Y) != Y"))
    if any(tau[aux.tau[i]] != aux.tau[tau[i]] for i in range(main.A.n)):
        errors.append(NotCommuting("tau and eta do not commute"))
    _raise(errors)
    return aux


def canonical_minimal_affine(A: GCM, tau: Sequence[int], i: int):
    """The tau-minimal auxiliary diagram attached to node i and its scaling table."""
    pair = {i, tau[i]}
    Y = [j for j in range(A.n) if j not in pair]
    sub = rd.subsystem(A, Y)
    eta = list(sub.oi)
    eta[i], eta[tau[i]] = tau[i], i
    d = validate_gsat(A, Y, eta)
    scaling = tuple(1 if j in pair else 0 for j in range(A.n))
    return d, scaling
