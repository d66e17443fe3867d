"""Exact identity checks on modules, each returning a report with a witness on failure.

Automorphisms that are not inner (omega, tau, characters) are realized by pulled-back
modules; inner parts Ad(T) become conjugations.  For a module M and an automorphism
phi we build (M', C) with pi_M(phi(u)) = C^{-1} pi_{M'}(u) C, which extends to the
completed elements (R, k, Theta) acting on integrable modules.
"""
from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from . import kmatrix as km
from . import linalg as la
from . import reps
from .linalg import Mat
from .reps import Module
from .satake import GSatDiagram, ParamSet, prime_involution
from .scalars import ONE, Scalar, to_string
from .uqnil import NilAlgebra, TensorSeries


@dataclass
class CheckReport:
    name: str
    passed: bool
    inputs: dict = field(default_factory=dict)
    witness: Optional[dict] = None
    seconds: float = 0.0
    window: Optional[dict] = None

    @property
    def digest(self) -> str:
        blob = json.dumps(self.inputs, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def to_json(self, timing: bool = False) -> dict:
        out = {"name": self.name, "inputs": self.digest, "pass": self.passed, "witness": self.witness}
        if self.window is not None:
            out["window"] = self.window
        if timing:
            out["seconds"] = round(self.seconds, 3)
        return out

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}"


def _witness(label: str, diff) -> dict:
    *pos, a, b = diff
    return {"where": label, "position": [str(p) for p in pos], "lhs": to_string(a), "rhs": to_string(b)}


def compare(name: str, pairs: Sequence[Tuple[str, Mat, Mat]], inputs: Optional[dict] = None,
            start: Optional[float] = None, window: Optional[dict] = None) -> CheckReport:
    """All (label, lhs, rhs) pairs must agree entrywise; the first difference is the witness."""
    for label, lhs, rhs in pairs:
        diff = lhs.first_difference(rhs)
        if diff is not None:
            return CheckReport(name, False, inputs or {}, _witness(label, diff),
                               time.time() - (start or time.time()), window)
    return CheckReport(name, True, inputs or {}, None, time.time() - (start or time.time()), window)


def negative_control(name: str, inner: CheckReport) -> CheckReport:
    """A corrupted identity must fail; the control passes iff it was detected."""
    return CheckReport(name, not inner.passed, inner.inputs, inner.witness, inner.seconds, inner.window)


# ---------------------------------------------------------------------------
# twisted legs

def flip_conj(m: Mat, M: Module, N: Module) -> Mat:
    """Transport an operator on N (x) M to M (x) N."""
    P = la.flip(N.dim, M.dim)
    Q = la.flip(M.dim, N.dim)
    return P @ m @ Q


@dataclass
class Twister:
    """psi_{Y,eta} = Ad(T_{Y,eta}^{-1}) o omega o tau and its powers on modules."""
    tau: Tuple[int, ...]
    aux: GSatDiagram
    omega: bool = True

    def pull(self, M: Module) -> Module:
        if self.omega:
            return reps.pullback_omega_tau(M, self.tau)
        A = M.A
        E = [M.E[self.tau[i]] for i in range(A.n)]
        F = [M.F[self.tau[i]] for i in range(A.n)]
        w = [A.permute(self.tau, x) for x in M.weights]
        return Module(A, w, E, F, M.kind, M.zdeg, name=M.name + "^t")

    def T(self, M: Module) -> Mat:
        return reps.half_balance_op(M, self.aux.X, self.aux.tau)

    def leg(self, M: Module, power: int) -> Tuple[Module, Mat]:
        """(M', C) with pi_M(psi^power(u)) = C^{-1} pi_{M'}(u) C."""
        C = Mat.identity(M.dim)
        cur = M
        for _ in range(abs(power)):
            nxt = self.pull(cur)
            step = self.T(cur) if power > 0 else la.inverse(self.T(nxt))
            C = step @ C
            cur = nxt
        return cur, C

    def apply_generator(self, M: Module, kind: str, x, power: int = 1) -> Mat:
        Mp, C = self.leg(M, power)
        return la.inverse(C) @ km.generator_matrix(Mp, kind, x) @ C


class Evaluator:
    """Caches R-matrices and k-matrices on modules for one algebra."""

    def __init__(self, alg: NilAlgebra, cutoff: int):
        self.alg, self.cutoff = alg, cutoff
        self.R = km.standard_r(alg, cutoff)
        self._cache: Dict[tuple, Mat] = {}

    def r(self, M: Module, N: Module) -> Mat:
        return self.R.evaluate(M, N)

    def r21(self, M: Module, N: Module) -> Mat:
        return flip_conj(self.r(N, M), M, N)

    def theta(self, M: Module, N: Module) -> Mat:
        return reps.eval_series(M, N, self.alg.quasi_r(self.cutoff))


# ---------------------------------------------------------------------------
# R-matrix checks

def check_yang_baxter(alg: NilAlgebra, mods: Sequence[Module], cutoff: int,
                      corrupt: Optional[Callable[[TensorSeries], TensorSeries]] = None) -> CheckReport:
    start = time.time()
    M1, M2, M3 = mods
    theta = alg.quasi_r(cutoff)
    if corrupt is not None:
        theta = corrupt(theta)
    kappa = km.KappaOperator.of(alg.A, lambda mu: tuple(Fraction(x) for x in mu))

    def R(M, N):
        return kappa.matrix(M, N) @ reps.eval_series(M, N, theta.bar())

    R12 = _embed(R(M1, M2), (0, 1), mods)
    R13 = _embed(R(M1, M3), (0, 2), mods)
    R23 = _embed(R(M2, M3), (1, 2), mods)
    return compare("yang_baxter", [("R12 R13 R23 = R23 R13 R12", R12 @ R13 @ R23, R23 @ R13 @ R12)],
                   {"modules": [M.name for M in mods], "cutoff": cutoff}, start)


def corrupt_theta_simple(theta: TensorSeries, i: int = 0, factor: Scalar = Scalar(2)) -> TensorSeries:
    mu = theta.alg.simple(i)
    comps = dict(theta.comps)
    comps[mu] = comps[mu].scale(factor)
    return TensorSeries(theta.alg, comps, theta.cutoff, theta.X)


def check_quasi_r_intertwine(alg: NilAlgebra, M: Module, N: Module, cutoff: int,
                             X: Optional[Sequence[int]] = None, replace_by_one: bool = False) -> CheckReport:
    """Theta bar(Delta(bar u)) = Delta(u) Theta on generators (of U_q g_X when X is given)."""
    start = time.time()
    A = alg.A
    if replace_by_one:
        Th = Mat.identity(M.dim * N.dim)
    else:
        Th = reps.eval_series(M, N, alg.quasi_r(cutoff, X))
    MN = reps.tensor(M, N)
    IM, IN = Mat.identity(M.dim), Mat.identity(N.dim)
    nodes = range(A.n) if X is None else sorted(X)
    pairs = []
    for i in nodes:
        # bar(Delta(bar E_i)) = E_i (x) 1 + t_i^{-1} (x) E_i
        bE = la.kron(M.E[i], IN) + la.kron(M.t_simple(i, -1), N.E[i])
        bF = la.kron(M.F[i], N.t_simple(i)) + la.kron(IM, N.F[i])
        pairs.append((f"E_{i}", Th @ bE, MN.E[i] @ Th))
        pairs.append((f"F_{i}", Th @ bF, MN.F[i] @ Th))
        tt = la.kron(M.t_simple(i), N.t_simple(i))
        pairs.append((f"t_{i}", Th @ tt, tt @ Th))
    return compare("quasi_r_intertwine", pairs, {"modules": [M.name, N.name], "X": X, "cutoff": cutoff}, start)


# ---------------------------------------------------------------------------
# quasi-k-matrix checks

def check_quasi_k_intertwining(qk: km.QuasiK, M: Module, primed: Optional[ParamSet] = None) -> CheckReport:
    """X bar(B_{i;gamma,sigma}) = B_{i;gamma',sigma'} X and X u = u X on U_q g_X U_q h^theta.

    primed overrides (gamma', sigma') for negative controls.
    """
    start = time.time()
    d, p = qk.diagram, qk.params
    pp = primed if primed is not None else prime_involution(d, p)
    Xm = qk.evaluate(M)
    T = reps.half_balance_op(M, d.X, d.tau)
    Ti = la.inverse(T)
    pairs = []
    for i in range(d.A.n):
        if i in d.X:
            continue
        lhs = Xm @ km.bar_coideal_generator_matrix(M, d, p, i, T, Ti)
        rhs = km.coideal_generator_matrix(M, d, pp, i, T, Ti) @ Xm
        pairs.append((f"B_{i}", lhs, rhs))
    for kind, x in km.fixed_generators(d):
        g = km.generator_matrix(M, kind, x)
        pairs.append((f"{kind}_{x}", Xm @ g, g @ Xm))
    return compare("quasi_k_intertwining", pairs, {"module": M.name, "cutoff": qk.cutoff}, start)


def theta_q_inverse_leg(M: Module, d: GSatDiagram, gamma_prime: Optional[Sequence[Scalar]]) -> Tuple[Module, Mat]:
    """(M', C) with pi_M(Ad(gamma') theta_q^{-1}(u)) = C^{-1} pi_{M'}(u) C."""
    A = M.A
    Mp = reps.pullback_omega_tau(M, d.tau)
    C = reps.half_balance_op(Mp, d.X, d.tau)
    if gamma_prime is not None:
        sc = []
        for i in range(A.n):
            th = d.theta(A.simple(i))
            v = ONE
            for j, c in enumerate(th):
                c = int(c)
                if c:
                    v = v * (gamma_prime[j] ** c if c > 0 else gamma_prime[j].inverse() ** (-c))
            sc.append(v)
        Mp = reps.scale_generators(Mp, sc)
    return Mp, C


def coproduct_quasi_k_sides(qk: km.QuasiK, M: Module, N: Module,
                            gamma_prime: Optional[Sequence[Scalar]] = None) -> Tuple[Mat, Mat]:
    d, p = qk.diagram, qk.params
    alg = qk.alg
    if gamma_prime is None:
        gamma_prime = prime_involution(d, p).gamma
    MN = reps.tensor(M, N)
    lhs = qk.evaluate(MN)
    IN = Mat.identity(N.dim)
    Xm = la.kron(qk.evaluate(M), IN)
    Mp, C = theta_q_inverse_leg(M, d, gamma_prime)
    Th = reps.eval_series(Mp, N, alg.quasi_r(qk.cutoff))
    CI = la.kron(C, IN)
    psi = la.inverse(CI) @ Th @ CI
    mid = Mat(M.dim * N.dim, M.dim * N.dim)
    for mu, u in qk.comps.items():
        mid = mid + la.kron(M.t(mu), N.eval_nil(u))
    thx = reps.eval_series(M, N, alg.quasi_r(qk.cutoff, d.X).bar()) if d.X else Mat.identity(M.dim * N.dim)
    return lhs, Xm @ psi @ mid @ thx


def check_coproduct_quasi_k(qk: km.QuasiK, M: Module, N: Module,
                            gamma_prime: Optional[Sequence[Scalar]] = None) -> CheckReport:
    start = time.time()
    reps.check_cutoff(reps.tensor(M, N), None, qk.cutoff)
    lhs, rhs = coproduct_quasi_k_sides(qk, M, N, gamma_prime)
    return compare("coproduct_quasi_k", [("Delta(X)", lhs, rhs)],
                   {"modules": [M.name, N.name], "params": qk.params.to_json(), "cutoff": qk.cutoff}, start)


def check_general_sigma(qk: km.QuasiK, height: int = 4) -> CheckReport:
    """Direct recursion versus (chi_{sigma'} (x) id) of the two-tensor quasi-k-matrix (rank one)."""
    start = time.time()
    other = km.chi_route_rank1(qk.diagram, qk.params, height, alg=qk.alg)
    pairs = []
    for m in range(height + 1):
        a = qk.component((m,))
        b = other.get((m,), km.NilElement.zero(qk.alg, (m,)))
        ma = Mat.diag(list(a.vec)) if a.vec else Mat(0, 0)
        mb = Mat.diag(list(b.vec)) if b.vec else Mat(0, 0)
        pairs.append((f"height {m}", ma, mb))
    return compare("general_sigma_chi_route", pairs, {"params": qk.params.to_json(), "height": height}, start)


# ---------------------------------------------------------------------------
# k-matrix checks

@dataclass
class KContext:
    spec: km.KMatrixSpec
    ev: Evaluator
    twister: Twister
    r_y: km.ModifiedRMatrix

    @staticmethod
    def build(spec: km.KMatrixSpec, alg: NilAlgebra, omega: bool = True, drop_kappa: bool = False) -> "KContext":
        ev = Evaluator(alg, spec.cutoff)
        tw = Twister(spec.diagram.tau, spec.aux, omega)
        RY = km.modified_r_matrix(spec.aux, alg, spec.cutoff)
        if drop_kappa:
            RY = km.ModifiedRMatrix(spec.aux, km.KappaOperator.of(alg.A, lambda mu: (Fraction(0),) * alg.n), RY.tilde)
        return KContext(spec, ev, tw, RY)

    def k(self, M: Module) -> Mat:
        return self.spec.evaluate(M)

    def psi_leg(self, M: Module, power: int = 1) -> Tuple[Module, Mat]:
        return self.twister.leg(M, power)

    def R_psi_id(self, M: Module, N: Module) -> Mat:
        """(psi (x) id)(R) on M (x) N."""
        Mp, C = self.psi_leg(M)
        CI = la.kron(C, Mat.identity(N.dim))
        return la.inverse(CI) @ self.ev.r(Mp, N) @ CI

    def R21_id_psi(self, M: Module, N: Module) -> Mat:
        """(id (x) psi)(R21) on M (x) N."""
        Np, C = self.psi_leg(N)
        IC = la.kron(Mat.identity(M.dim), C)
        return la.inverse(IC) @ self.ev.r21(M, Np) @ IC

    def R21_psi_id(self, M: Module, N: Module) -> Mat:
        Mp, C = self.psi_leg(M)
        CI = la.kron(C, Mat.identity(N.dim))
        return la.inverse(CI) @ self.ev.r21(Mp, N) @ CI

    def R21_psi_psi(self, M: Module, N: Module) -> Mat:
        Mp, C1 = self.psi_leg(M)
        Np, C2 = self.psi_leg(N)
        CC = la.kron(C1, C2)
        return la.inverse(CC) @ self.ev.r21(Mp, Np) @ CC

    def RY(self, M: Module, N: Module) -> Mat:
        return self.r_y.evaluate(M, N)

    def RY21(self, M: Module, N: Module) -> Mat:
        return flip_conj(self.RY(N, M), M, N)


def _spec_inputs(spec: km.KMatrixSpec, mods: Sequence[Module]) -> dict:
    d = spec.diagram
    return {"X": list(d.X), "tau": list(d.tau), "Y": list(spec.aux.X), "eta": list(spec.aux.tau),
            "params": spec.params.to_json(), "modules": [M.name for M in mods], "cutoff": spec.cutoff}


def check_k_intertwining(ctx: KContext, M: Module, image_params: Optional[ParamSet] = None) -> CheckReport:
    """k u = psi(u) k for u = B_i and the generators of U_q g_X U_q h^theta.

    image_params replaces the parameters of B_i on the right-hand side (negative controls).
    """
    start = time.time()
    spec = ctx.spec
    d, p = spec.diagram, spec.params
    K = ctx.k(M)
    Mp, C = ctx.psi_leg(M)
    Ci = la.inverse(C)
    T = reps.half_balance_op(M, d.X, d.tau)
    Ti = la.inverse(T)
    Tp = reps.half_balance_op(Mp, d.X, d.tau)
    Tpi = la.inverse(Tp)
    pairs = []
    for i in range(d.A.n):
        if i in d.X:
            continue
        b = km.coideal_generator_matrix(M, d, p, i, T, Ti)
        pimg = p if image_params is None else image_params
        bp = Ci @ km.coideal_generator_matrix(Mp, d, pimg, i, Tp, Tpi) @ C
        pairs.append((f"B_{i}", K @ b, bp @ K))
    for kind, x in km.fixed_generators(d):
        g = km.generator_matrix(M, kind, x)
        gp = Ci @ km.generator_matrix(Mp, kind, x) @ C
        pairs.append((f"{kind}_{x}", K @ g, gp @ K))
    return compare("k_intertwining", pairs, _spec_inputs(spec, [M]), start)


def check_twist_pair(ctx: KContext, M: Module, N: Module) -> CheckReport:
    start = time.time()
    A = M.A
    MN = reps.tensor(M, N)
    Mp, CM = ctx.psi_leg(M)
    Np, CN = ctx.psi_leg(N)
    CC = la.kron(CM, CN)
    CCi = la.inverse(CC)
    MNp, CMN = ctx.psi_leg(MN)
    CMNi = la.inverse(CMN)
    RY = ctx.RY(M, N)
    RYi = la.inverse(RY)
    pairs = []
    for i in range(A.n):
        for kind in ("E", "F", "t"):
            x = i if kind != "t" else A.simple(i)
            # Delta^op(u) on M' (x) N' = flip Delta(u)|_{N' (x) M'} flip
            NpMp = reps.tensor(Np, Mp)
            dop = flip_conj(km.generator_matrix(NpMp, kind, x), Mp, Np)
            lhs = CCi @ dop @ CC
            rhs = RY @ (CMNi @ km.generator_matrix(MNp, kind, x) @ CMN) @ RYi
            pairs.append((f"Delta {kind}_{i}", lhs, rhs))
    triv = reps.trivial_module(A)
    for i in range(A.n):
        for kind in ("E", "F", "t"):
            x = i if kind != "t" else A.simple(i)
            val = ctx.twister.apply_generator(triv, kind, x)
            eps = Mat.identity(1) if kind == "t" else Mat(1, 1)
            pairs.append((f"eps {kind}_{i}", val, eps))
    lhs = ctx.R21_psi_psi(M, N)
    rhs = ctx.RY21(M, N) @ ctx.ev.r(M, N) @ RYi
    pairs.append(("R21", lhs, rhs))
    return compare("twist_pair", pairs, _spec_inputs(ctx.spec, [M, N]), start)


def check_coproduct_k(ctx: KContext, M: Module, N: Module) -> CheckReport:
    start = time.time()
    MN = reps.tensor(M, N)
    reps.check_cutoff(MN, None, ctx.spec.cutoff)
    lhs = ctx.k(MN)
    IM, IN = Mat.identity(M.dim), Mat.identity(N.dim)
    rhs = la.inverse(ctx.RY(M, N)) @ la.kron(IM, ctx.k(N)) @ ctx.R_psi_id(M, N) @ la.kron(ctx.k(M), IN)
    return compare("coproduct_k", [("Delta(k)", lhs, rhs)], _spec_inputs(ctx.spec, [M, N]), start)


def check_twisted_re(ctx: KContext, M: Module, N: Module, wrong_leg: bool = False) -> CheckReport:
    start = time.time()
    IM, IN = Mat.identity(M.dim), Mat.identity(N.dim)
    k1 = la.kron(ctx.k(M), IN)
    k2 = la.kron(IM, ctx.k(N))
    R = ctx.ev.r(M, N)
    mid = ctx.R21_psi_id(M, N) if wrong_leg else ctx.R21_id_psi(M, N)
    lhs = k1 @ mid @ k2 @ R
    rhs = ctx.R21_psi_psi(M, N) @ k2 @ ctx.R_psi_id(M, N) @ k1
    return compare("twisted_reflection_equation", [("RE", lhs, rhs)], _spec_inputs(ctx.spec, [M, N]), start)


# ---------------------------------------------------------------------------
# cylindrical braid group action on H^{(x) n}

@dataclass(frozen=True)
class Factor:
    kind: str                 # "k" or "R"
    legs: Tuple[int, ...]     # R: first tensor factor on legs[0]
    powers: Tuple[int, ...]   # psi-power applied on each leg


@dataclass(frozen=True)
class BraidOp:
    """x -> Z Phi(x) with Z a product of factors and Phi = twist(a) o permutation(p)."""
    factors: Tuple[Factor, ...]
    perm: Tuple[int, ...]
    twist: Tuple[int, ...]

    def transform(self, f: Factor) -> Factor:
        legs = tuple(self.perm[l] for l in f.legs)
        pw = tuple(w + self.twist[l] for w, l in zip(f.powers, legs))
        return Factor(f.kind, legs, pw)

    def __mul__(self, other: "BraidOp") -> "BraidOp":
        factors = self.factors + tuple(self.transform(f) for f in other.factors)
        n = len(self.perm)
        b = [0] * n
        for l in range(n):
            b[self.perm[l]] = other.twist[l]
        perm = tuple(self.perm[other.perm[l]] for l in range(n))
        twist = tuple(a + c for a, c in zip(self.twist, b))
        return BraidOp(factors, perm, twist)


def braid_generators(n: int, k_factor: str = "k") -> List[BraidOp]:
    ident = tuple(range(n))
    zero = (0,) * n
    s0 = BraidOp((Factor(k_factor, (0,), (-1,)),), ident, tuple(-1 if l == 0 else 0 for l in range(n)))
    gens = [s0]
    for i in range(1, n):
        perm = list(ident)
        perm[i - 1], perm[i] = i, i - 1
        gens.append(BraidOp((Factor("R", (i, i - 1), (0, 0)),), tuple(perm), zero))
    return gens


def _embed(m: Mat, legs: Sequence[int], mods: Sequence[Module]) -> Mat:
    """Place an operator on the tensor product of mods[legs...] (in that order) into the full product."""
    n = len(mods)
    rest = [l for l in range(n) if l not in legs]
    order = list(legs) + rest
    dims = [mods[l].dim for l in range(n)]
    big = la.kron(m, Mat.identity(_prod(dims[l] for l in rest))) if rest else m
    # basis index in `order` layout -> index in natural layout
    perm = []
    total = _prod(dims)
    for idx in range(total):
        digits = []
        r = idx
        for l in reversed(order):
            digits.append(r % dims[l])
            r //= dims[l]
        digits.reverse()
        pos = dict(zip(order, digits))
        nat = 0
        for l in range(n):
            nat = nat * dims[l] + pos[l]
        perm.append(nat)
    P = la.permutation(perm)
    Pi = la.permutation([perm.index(j) for j in range(total)])
    return P @ big @ Pi


def _prod(xs) -> int:
    out = 1
    for x in xs:
        out *= x
    return out


def evaluate_braid_op(ctx: KContext, op: BraidOp, mods: Sequence[Module], k_override: Optional[Callable] = None) -> Mat:
    total = _prod(M.dim for M in mods)
    out = Mat.identity(total)
    for f in op.factors:
        legs_data = [ctx.psi_leg(mods[l], w) for l, w in zip(f.legs, f.powers)]
        if f.kind in ("k", "one"):
            Mp, C = legs_data[0]
            K = ctx.k(Mp) if f.kind == "k" else Mat.identity(Mp.dim)
            m = la.inverse(C) @ K @ C
        else:
            (M1, C1), (M2, C2) = legs_data
            CC = la.kron(C1, C2)
            m = la.inverse(CC) @ ctx.ev.r(M1, M2) @ CC
        out = out @ _embed(m, f.legs, mods)
    return out


def check_cylindrical_braid(ctx: KContext, mods: Sequence[Module], k_factor: str = "k",
                            random_words: int = 0, seed: int = 0, word_length: int = 2) -> CheckReport:
    """Defining relations of Br(B_n) for sigma_0 = (psi^{-1} (x) id) o (k (x) 1) and sigma_i = flip o R.

    random_words > 0 also compares u*lhs*w with u*rhs*w for random positive words u, w.
    """
    start = time.time()
    n = len(mods)
    if n < 2:
        raise ValueError("need at least two tensor factors")
    g = braid_generators(n, k_factor)
    rels = [("s0 s1 s0 s1 = s1 s0 s1 s0", g[0] * g[1] * g[0] * g[1], g[1] * g[0] * g[1] * g[0])]
    for i in range(1, n - 1):
        rels.append((f"s{i} s{i+1} s{i} = s{i+1} s{i} s{i+1}", g[i] * g[i + 1] * g[i], g[i + 1] * g[i] * g[i + 1]))
    for i in range(n):
        for j in range(i + 2, n):
            rels.append((f"s{i} s{j} = s{j} s{i}", g[i] * g[j], g[j] * g[i]))
    if random_words:
        import random as _random
        rng = _random.Random(seed)
        base = list(rels)
        for _ in range(random_words):
            label, a, b = base[rng.randrange(len(base))]
            u = [rng.randrange(n) for _ in range(rng.randint(0, word_length))]
            w = [rng.randrange(n) for _ in range(rng.randint(0, word_length))]
            left, right = _word(g, u, n), _word(g, w, n)
            tag = f"{''.join(f's{i}' for i in u)}({label}){''.join(f's{i}' for i in w)}"
            rels.append((tag, left * a * right, left * b * right))
    pairs = []
    for label, a, b in rels:
        if a.perm != b.perm or a.twist != b.twist:
            return CheckReport("cylindrical_braid", False, _spec_inputs(ctx.spec, mods),
                               {"where": label, "position": ["automorphism part"], "lhs": str((a.perm, a.twist)),
                                "rhs": str((b.perm, b.twist))}, time.time() - start)
        pairs.append((label, evaluate_braid_op(ctx, a, mods), evaluate_braid_op(ctx, b, mods)))
    return compare("cylindrical_braid", pairs, _spec_inputs(ctx.spec, mods), start)


def _word(gens: List[BraidOp], word: Sequence[int], n: int) -> BraidOp:
    out = BraidOp((), tuple(range(n)), (0,) * n)
    for i in word:
        out = out * gens[i]
    return out


def check_rx_factorization(M: Module, N: Module, aux: GSatDiagram, alg: NilAlgebra, cutoff: int) -> CheckReport:
    """R_{X,tau} = (T^{-1} (x) T^{-1}) Delta(T_{X,tau})."""
    start = time.time()
    MN = reps.tensor(M, N)
    T = reps.half_balance_op(MN, aux.X, aux.tau)
    TT = la.kron(reps.half_balance_op(M, aux.X, aux.tau), reps.half_balance_op(N, aux.X, aux.tau))
    lhs = km.modified_r_matrix(aux, alg, cutoff).evaluate(M, N)
    return compare("rx_factorization", [("R_X", lhs, la.inverse(TT) @ T)],
                   {"X": list(aux.X), "tau": list(aux.tau), "modules": [M.name, N.name]}, start)


# ---------------------------------------------------------------------------
# quantum affine sl2: parameter inversion and the spectral reflection equation

class CutoffInsufficientForWindow(ValueError):
    pass


def root_offsets(M: Module) -> List[Tuple[int, ...]]:
    """Root-lattice position of each basis vector relative to vector 0, read off the E/F action.

    Evaluation modules store only classical weights; characters need the affine ones.
    """
    n = M.A.n
    off: List[Optional[Tuple[int, ...]]] = [None] * M.dim
    off[0] = (0,) * n
    todo = [0]
    while todo:
        c = todo.pop()
        for j in range(n):
            step = tuple(1 if k == j else 0 for k in range(n))
            for mats, sgn in ((M.E, 1), (M.F, -1)):
                m = mats[j]
                for r in range(M.dim):
                    if off[r] is not None:
                        continue
                    # m sends c to r, or r to c
                    if not m[r, c].is_zero():
                        off[r] = tuple(x + sgn * s for x, s in zip(off[c], step))
                    elif not m[c, r].is_zero():
                        off[r] = tuple(x - sgn * s for x, s in zip(off[c], step))
                    else:
                        continue
                    todo.append(r)
    if any(o is None for o in off):
        raise ValueError("module is not connected under the generators")
    return off


def character_diag(M: Module, values: Sequence[Scalar]) -> Mat:
    """Diagonal action of the character alpha_j -> values[j], normalized to 1 on vector 0."""
    out = []
    for o in root_offsets(M):
        x = ONE
        for v, c in zip(values, o):
            x = x * (v ** c if c >= 0 else v.inverse() ** (-c))
        out.append(x)
    return Mat.diag(out)


@dataclass
class AffineSetup:
    """Evaluation module, tau, the canonical auxiliary diagram and the element g for quantum affine sl2."""
    ell: int
    lam: Scalar
    grading: str
    A: object
    M: Module
    tau: Tuple[int, ...]
    aux: GSatDiagram
    scaling: Tuple[int, ...]
    g_char: Tuple[Scalar, ...]   # Ad(g) on E_j scales by g_char[j] (times the G part)
    g_quadratic: bool            # whether g carries the factor G_{id,0}

    def g_matrix(self, M: Optional[Module] = None) -> Mat:
        M = M or self.M
        m = character_diag(M, self.g_char)
        if self.g_quadratic:
            m = M.diag(reps.g_function(self.A, lambda mu: mu, (Fraction(0),) * self.A.n)) @ m
        return m


def affine_setup(ell: int, lam, grading: str = "principal") -> AffineSetup:
    from .rootdata import validate_gcm
    from .satake import canonical_minimal_affine
    from .scalars import S
    lam = S(lam)
    A = validate_gcm([[2, -2], [-2, 2]], [1, 1])
    M = reps.affine_eval_module(ell, lam, grading, A)
    if grading == "homogeneous":
        tau = (0, 1)
        aux, scaling = canonical_minimal_affine(A, tau, 0)
        g_char = (lam.inverse() ** 2, ONE)            # g = lam^{-2d}
        quad = False
    else:
        tau = (1, 0)
        aux, scaling = canonical_minimal_affine(A, tau, 0)
        ml = (-lam).inverse()
        g_char = tuple(ml ** s for s in scaling)      # g = (-lam)^{-d} G_{id,0}
        quad = True
    if tuple(scaling) != tuple(M.zdeg):
        raise ValueError("scaling element does not match the grading of the evaluation module")
    return AffineSetup(ell, lam, grading, A, M, tau, aux, tuple(scaling), g_char, quad)


def check_inversion_congruence(ell: int, lam, grading: str) -> CheckReport:
    """pi_1(theta_q(Y,eta)(u)) = pi_1(Ad(g)(u)) for u in {E_j, F_j, t_j}."""
    start = time.time()
    st = affine_setup(ell, lam, grading)
    M, aux, A = st.M, st.aux, st.A
    Mp = reps.pullback_omega_tau(M, aux.tau)
    T = reps.half_balance_op(M, aux.X, aux.tau)
    Ti = la.inverse(T)
    Mg = reps.scale_generators(M, st.g_char)
    # only the quadratic part conjugates; the character part is already in Mg
    G = M.diag(reps.g_function(A, lambda mu: mu, (Fraction(0),) * A.n)) if st.g_quadratic else None
    pairs = []
    for j in range(A.n):
        for kind in ("E", "F", "t"):
            x = j if kind != "t" else A.simple(j)
            lhs = T @ km.generator_matrix(Mp, kind, x) @ Ti
            rhs = km.generator_matrix(Mg, kind, x)
            if G is not None:
                rhs = G @ rhs @ la.inverse(G)
            pairs.append((f"{kind}_{j}", lhs, rhs))
    inputs = {"ell": ell, "lambda": to_string(st.lam), "grading": grading,
              "Y": list(aux.X), "eta": list(aux.tau)}
    return compare("inversion_congruence", pairs, inputs, start)


@dataclass(frozen=True)
class Leg:
    """A module placed at spectral variable `var`; inverted legs carry 1/x."""
    M: Module
    var: int

    def degree(self, mu: Sequence[int], sign: int, nvars: int) -> Tuple[int, ...]:
        d = [0] * nvars
        d[self.var] = sign * sum(int(c) * z for c, z in zip(mu, self.M.zdeg))
        return tuple(d)


def invert_leg(M: Module, phi: Optional[Sequence[int]] = None) -> Module:
    """pi_{1/z} o phi: negate z-degrees and pull back along the diagram automorphism phi."""
    if phi is None:
        phi = tuple(range(M.A.n))
    E = [M.E[phi[i]] for i in range(M.A.n)]
    F = [M.F[phi[i]] for i in range(M.A.n)]
    w = [M.A.permute(phi, x) for x in M.weights]
    zd = tuple(-M.zdeg[phi[i]] for i in range(M.A.n))
    return Module(M.A, w, E, F, M.kind, zd, name=M.name + "^inv")


def certify_window(M: Module, cutoff: int, window: int) -> None:
    """Terms above the height cutoff have z-degree > cutoff * min z-degree; they must miss 0..2W."""
    zmin = min(M.zdeg)
    if zmin <= 0 or cutoff * zmin < 2 * window:
        raise CutoffInsufficientForWindow(
            f"height cutoff {cutoff} does not certify z-window {window} (min z-degree {zmin})")


class Spectral:
    """Truncated spectral evaluation of R and k on evaluation modules in variables (y, z)."""

    def __init__(self, spec: km.KMatrixSpec, setup: AffineSetup, alg: NilAlgebra, window: int):
        self.spec, self.st, self.alg, self.W = spec, setup, alg, window
        self.N = spec.cutoff
        certify_window(setup.M, self.N, window)
        self._theta_bar = None
        self.kt = km.tilde_k(spec.qk)
        W = window
        self.keep = lambda d: d[1] <= W and d[0] <= 2 * W
        self.inside = lambda d: 0 <= d[1] <= W and -W <= d[0] <= W

    @property
    def theta_bar(self) -> TensorSeries:
        if self._theta_bar is None:
            self._theta_bar = self.alg.quasi_r(self.N).bar()
        return self._theta_bar

    def const(self, m: Mat) -> la.GradedMat:
        return la.GradedMat.constant(m, 2, self.keep)

    def r(self, a: Leg, b: Leg) -> la.GradedMat:
        A = self.st.A
        kappa = km.KappaOperator.of(A, lambda mu: tuple(Fraction(x) for x in mu)).matrix(a.M, b.M)
        out = la.GradedMat((a.M.dim * b.M.dim,) * 2, None, self.keep)
        for mu, C in self.theta_bar.comps.items():
            one = TensorSeries(self.alg, {mu: C}, self.N)
            m = kappa @ reps.eval_series(a.M, b.M, one, check=False)
            da, db = a.degree(mu, -1, 2), b.degree(mu, 1, 2)
            out._add_term(tuple(x + y for x, y in zip(da, db)), m)
        return out

    def r21(self, a: Leg, b: Leg) -> la.GradedMat:
        """(X^{ba})_{21} on a (x) b, with X the R-matrix of b (x) a."""
        X = self.r(b, a)
        return X.conj(la.flip(b.M.dim, a.M.dim), la.flip(a.M.dim, b.M.dim))

    def k(self, leg: Leg, include_g: bool = True) -> la.GradedMat:
        spec, M = self.spec, leg.M
        pre = character_diag(M, [x.inverse() for x in spec.params.gamma])
        if spec.operator_word():
            zfree = {j for j in range(M.A.n) if M.zdeg[j] == 0}
            if not (set(spec.aux.X) <= zfree and set(spec.diagram.X) <= zfree):
                raise ValueError("T_{Y,eta}^{-1} T_{X,tau} is not constant on this module")
            TX = reps.half_balance_op(M, spec.diagram.X, spec.diagram.tau)
            TY = reps.half_balance_op(M, spec.aux.X, spec.aux.tau)
            pre = la.inverse(TY) @ TX @ pre
        if include_g:
            pre = self.st.g_matrix(M) @ pre
        out = la.GradedMat((M.dim, M.dim), None, self.keep)
        for mu, u in self.kt.items():
            out._add_term(leg.degree(mu, 1, 2), pre @ M.eval_nil(u))
        return out

    def k_on(self, leg: Leg, which: int, other_dim: int) -> la.GradedMat:
        k = self.k(leg)
        I = self.const(Mat.identity(other_dim))
        return k.kron(I) if which == 0 else I.kron(k)


def _spectral_context(ell, lam, grading, window, cutoff, gamma, sigma, alg):
    from .satake import validate_gsat, validate_params
    from .scalars import parse
    st = affine_setup(ell, lam, grading)
    certify_window(st.M, cutoff, window)
    d = validate_gsat(st.A, [], st.tau)
    if gamma is None:
        gamma = (1, "q^-2") if st.tau != (0, 1) else (1, 1)
    sigma = sigma if sigma is not None else (0, 0)
    p = validate_params(d, [parse(str(x)) for x in gamma], [parse(str(x)) for x in sigma])
    alg = alg or NilAlgebra(st.A)
    spec = km.modified_k(km.standard_k(d, p, cutoff, alg=alg), st.aux.X, st.aux.tau)
    sp = Spectral(spec, st, alg, window)
    phi = tuple(st.aux.tau[st.tau[i]] for i in range(st.A.n))
    inputs = {"ell": ell, "lambda": to_string(st.lam), "grading": grading, "window": window,
              "cutoff": cutoff, "params": p.to_json()}
    win = {"z": [0, window], "y": [-window, window], "height": cutoff}
    return st, d, p, sp, phi, inputs, win


def _graded_report(name, lhs, rhs, pred, inputs, win, start) -> CheckReport:
    diff = lhs.first_difference(rhs, pred)
    if diff is None:
        return CheckReport(name, True, inputs, None, time.time() - start, win)
    deg, i, j, a, b = diff
    wit = {"where": " ".join(f"{v}^{e}" for v, e in zip("yz", deg)), "position": [str(i), str(j)],
           "lhs": to_string(a), "rhs": to_string(b)}
    return CheckReport(name, False, inputs, wit, time.time() - start, win)


def check_spectral_re(ell: int, lam, grading: str = "principal", window: int = 4, cutoff: int = 8,
                      gamma: Optional[Sequence] = None, sigma: Optional[Sequence] = None,
                      invert: bool = True, alg: Optional[NilAlgebra] = None) -> CheckReport:
    """(k(y) (x) 1) R^phi_21(yz) (1 (x) k(z)) R(z/y) = R_21(z/y) (1 (x) k(z)) R^phi(yz) (k(y) (x) 1).

    invert=False replaces pi_{1/x} o phi by pi_x (negative control).
    """
    start = time.time()
    st, d, p, sp, phi, inputs, win = _spectral_context(ell, lam, grading, window, cutoff, gamma, sigma, alg)
    inputs["invert"] = invert
    M = st.M
    Vy, Wz = Leg(M, 0), Leg(M, 1)
    if invert:
        Wz_phi, Vy_phi = Leg(invert_leg(M, phi), 1), Leg(invert_leg(M, phi), 0)
        Vy_bar, Wz_bar = Leg(invert_leg(M), 0), Leg(invert_leg(M), 1)
    else:
        Wz_phi, Vy_phi, Vy_bar, Wz_bar = Wz, Vy, Vy, Wz
    ky = sp.k_on(Vy, 0, M.dim)
    kz = sp.k_on(Wz, 1, M.dim)
    lhs = ky @ sp.r21(Vy, Wz_phi) @ kz @ sp.r(Vy, Wz)
    rhs = sp.r21(Vy_bar, Wz_bar) @ kz @ sp.r(Vy_phi, Wz) @ ky
    return _graded_report("spectral_reflection_equation", lhs, rhs, sp.inside, inputs, win, start)


def _graded_generator(leg: Leg, d: GSatDiagram, p: ParamSet, i: int, keep) -> la.GradedMat:
    """pi_x(B_i) split by z-degree: F_i, the theta_q(F_i) term and sigma_i t_i."""
    M = leg.M
    full = km.coideal_generator_matrix(M, d, p, i)
    Fi = M.F[i]
    st = M.t_simple(i, -1).scale(p.sigma[i]) if not p.sigma[i].is_zero() else Mat(M.dim, M.dim)
    mid = full - Fi - st
    th = tuple(int(x) for x in d.theta(d.A.simple(i)))
    out = la.GradedMat((M.dim, M.dim), None, keep)
    out._add_term(leg.degree(d.A.simple(i), -1, 2), Fi)
    out._add_term(leg.degree(th, -1, 2), mid)
    out._add_term((0, 0), st)
    return out


def check_boundary_intertwining(ell: int, lam, grading: str = "principal", window: int = 4, cutoff: int = 8,
                                gamma: Optional[Sequence] = None, sigma: Optional[Sequence] = None,
                                invert: bool = True, alg: Optional[NilAlgebra] = None) -> CheckReport:
    """k(z) pi_z(u) = pi_{1/z}(phi(u)) k(z) on the coideal generators, within the window."""
    start = time.time()
    st, d, p, sp, phi, inputs, win = _spectral_context(ell, lam, grading, window, cutoff, gamma, sigma, alg)
    inputs["invert"] = invert
    M = st.M
    z = Leg(M, 1)
    zi = Leg(invert_leg(M, phi), 1) if invert else z
    k = sp.k(z)
    inside = lambda deg: 0 <= deg[1] <= window
    pairs = []
    for i in range(st.A.n):
        lhs = k @ _graded_generator(z, d, p, i, sp.keep)
        rhs = _graded_generator(zi, d, p, i, sp.keep) @ k
        pairs.append((f"B_{i}", lhs, rhs))
    for kind, x in km.fixed_generators(d):
        lhs = k @ sp.const(km.generator_matrix(M, kind, x))
        rhs = sp.const(km.generator_matrix(zi.M, kind, x)) @ k
        pairs.append((f"{kind}_{x}", lhs, rhs))
    for label, lhs, rhs in pairs:
        rep = _graded_report("boundary_intertwining", lhs, rhs, inside, inputs, win, start)
        if not rep.passed:
            rep.witness["generator"] = label
            return rep
    return CheckReport("boundary_intertwining", True, inputs, None, time.time() - start, win)
