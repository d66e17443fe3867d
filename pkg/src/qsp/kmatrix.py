"""Weight functions, coideal generators, the quasi-k-matrix and universal k-matrices."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from . import linalg as la
from . import reps
from .linalg import Mat
from .reps import Module
from .rootdata import GCM, Weight, subsystem, theta_map
from .satake import GSatDiagram, ParamSet, prime_involution, tau_compatible
from .scalars import ONE, ZERO, Scalar, S, bar, power_rational, qbinom, qpow, to_string
from .uqnil import (BraidAction, Content, MixedElement, NilAlgebra, NilElement, TensorSeries,
                    contents_up_to)


class RecursionInconsistent(ArithmeticError):
    code = "RecursionInconsistent"

    def __init__(self, mu, detail: str = ""):
        self.mu = tuple(mu)
        super().__init__(f"{self.code} at weight {list(mu)}{': ' + detail if detail else ''}")


class ExtensionUnavailable(ValueError):
    code = "ExtensionUnavailable"


class NotInCoideal(ValueError):
    code = "NotInCoideal"


# ---------------------------------------------------------------------------
# weight functions c * chi * G_{zeta,lam}

def _as_weight(x) -> Weight:
    return tuple(Fraction(v) for v in x)


@dataclass(frozen=True)
class WeightFunction:
    """mu -> c * chi(mu) * q^{(zeta(mu), mu)/2 + (lam, mu)}.

    zeta is stored by columns zeta(alpha_j); chi by its values on the simple
    roots (an empty tuple means the trivial character).  chi is extended to
    rational weights by exact roots of monomials.
    """
    A: GCM
    c: Scalar = ONE
    chi: Tuple[Scalar, ...] = ()
    zeta: Tuple[Weight, ...] = ()
    lam: Weight = ()

    def __post_init__(self):
        n = self.A.n
        object.__setattr__(self, "c", S(self.c))
        object.__setattr__(self, "chi", tuple(S(x) for x in self.chi))
        if not self.zeta:
            object.__setattr__(self, "zeta", tuple((Fraction(0),) * n for _ in range(n)))
        else:
            object.__setattr__(self, "zeta", tuple(_as_weight(col) for col in self.zeta))
        if not self.lam:
            object.__setattr__(self, "lam", (Fraction(0),) * n)
        else:
            object.__setattr__(self, "lam", _as_weight(self.lam))
        if self.c.is_zero() or any(x.is_zero() for x in self.chi):
            raise ValueError("weight functions take nonzero values")

    @staticmethod
    def G(A: GCM, zeta: Callable[[Sequence], Weight], lam: Sequence = ()) -> "WeightFunction":
        cols = tuple(zeta(A.simple(j)) for j in range(A.n))
        return WeightFunction(A, zeta=cols, lam=tuple(lam))

    @staticmethod
    def character(A: GCM, values: Sequence) -> "WeightFunction":
        return WeightFunction(A, chi=tuple(values))

    @staticmethod
    def t(A: GCM, lam: Sequence) -> "WeightFunction":
        return WeightFunction(A, lam=tuple(lam))

    def apply_zeta(self, mu: Sequence) -> Weight:
        out = [Fraction(0)] * self.A.n
        for j, mj in enumerate(mu):
            if mj:
                for k, x in enumerate(self.zeta[j]):
                    out[k] += Fraction(mj) * x
        return tuple(out)

    def is_self_adjoint(self) -> bool:
        A = self.A
        return all(A.form(self.zeta[i], A.simple(j)) == A.form(A.simple(i), self.zeta[j])
                   for i in range(A.n) for j in range(A.n))

    def chi_value(self, mu: Sequence) -> Scalar:
        if not self.chi:
            return ONE
        out = ONE
        for x, m in zip(self.chi, mu):
            m = Fraction(m)
            if m:
                try:
                    out = out * power_rational(x, m)
                except ValueError as exc:
                    raise ExtensionUnavailable(str(exc)) from None
        return out

    def quadratic_exponent(self, mu: Sequence) -> Fraction:
        A = self.A
        return A.form(self.apply_zeta(mu), mu) / 2 + A.form(self.lam, mu)

    def __call__(self, mu: Sequence) -> Scalar:
        return self.c * self.chi_value(mu) * qpow(self.quadratic_exponent(mu))

    def __mul__(self, other: "WeightFunction") -> "WeightFunction":
        n = self.A.n
        if not self.chi:
            chi = other.chi
        elif not other.chi:
            chi = self.chi
        else:
            chi = tuple(a * b for a, b in zip(self.chi, other.chi))
        zeta = tuple(tuple(a + b for a, b in zip(c1, c2)) for c1, c2 in zip(self.zeta, other.zeta))
        lam = tuple(a + b for a, b in zip(self.lam, other.lam))
        return WeightFunction(self.A, self.c * other.c, chi, zeta, lam)

    def inverse(self) -> "WeightFunction":
        return WeightFunction(self.A, self.c.inverse(), tuple(x.inverse() for x in self.chi),
                              tuple(tuple(-x for x in col) for col in self.zeta),
                              tuple(-x for x in self.lam))

    def functional_equation(self, mu: Sequence, nu: Sequence) -> bool:
        """G(mu+nu) = G(mu) G(nu) q^{(zeta(mu), nu)} for the quadratic part (c, chi dropped); needs zeta self-adjoint."""
        g = WeightFunction(self.A, zeta=self.zeta, lam=self.lam)
        s = tuple(Fraction(a) + Fraction(b) for a, b in zip(mu, nu))
        return g(s) == g(mu) * g(nu) * qpow(self.A.form(self.apply_zeta(mu), nu))

    def matrix(self, M: Module) -> Mat:
        return M.diag(self)

    def to_json(self) -> dict:
        return {"c": to_string(self.c), "chi": [to_string(x) for x in self.chi],
                "zeta": [[str(x) for x in col] for col in self.zeta],
                "lam": [str(x) for x in self.lam]}


@dataclass(frozen=True)
class KappaOperator:
    """(mu, nu) -> q^{(g(mu), nu)} on M_mu (x) N_nu; g given by columns g(alpha_j)."""
    A: GCM
    g: Tuple[Weight, ...]

    @staticmethod
    def of(A: GCM, g: Callable[[Sequence], Weight]) -> "KappaOperator":
        return KappaOperator(A, tuple(_as_weight(g(A.simple(j))) for j in range(A.n)))

    def apply(self, mu: Sequence) -> Weight:
        out = [Fraction(0)] * self.A.n
        for j, mj in enumerate(mu):
            if mj:
                for k, x in enumerate(self.g[j]):
                    out[k] += Fraction(mj) * x
        return tuple(out)

    def __call__(self, mu, nu) -> Scalar:
        return qpow(self.A.form(self.apply(mu), nu))

    def matrix(self, M: Module, N: Module) -> Mat:
        return reps.kappa_op(M, N, self.apply)


# ---------------------------------------------------------------------------
# coideal data

def theta_of(d: GSatDiagram) -> Callable[[Sequence], Weight]:
    return d.theta


def zeta_coeff(d: GSatDiagram, p: ParamSet, i: int) -> Scalar:
    """(-1)^{alpha_i(2 rho_X^vee)} G_{-theta,-rho_X}(alpha_i) bar(gamma_i); zero on X."""
    if i in d.X:
        return ZERO
    A = d.A
    ai = A.simple(i)
    e = A.form(tuple(-x for x in d.theta(ai)), ai) / 2 - A.form(d.sub.rho, ai)
    val = qpow(e) * bar(p.gamma[i])
    return -val if d.sub.two_rho_vee[i] % 2 else val


def zeta_coeff_primed(d: GSatDiagram, p: ParamSet, i: int) -> Scalar:
    """Second form: G_{-theta,-rho_X}(alpha_i) gamma'_{tau(i)}."""
    if i in d.X:
        return ZERO
    A = d.A
    ai = A.simple(i)
    e = A.form(tuple(-x for x in d.theta(ai)), ai) / 2 - A.form(d.sub.rho, ai)
    gp = prime_involution(d, p).gamma
    return qpow(e) * gp[d.tau[i]]


def counit(x: MixedElement) -> Scalar:
    z = x.alg.zero()
    out = ZERO
    for (mu, lam, nu), C in x.terms.items():
        if mu == z and nu == z:
            out = out + C[0, 0]
    return out


def coideal_generator(d: GSatDiagram, p: ParamSet, i: int, alg: NilAlgebra,
                      action: Optional[BraidAction] = None) -> MixedElement:
    """B_i = F_i + gamma_i theta_q(F_i) + sigma_i t_i^{-1} (F_i on X) as a mixed element.

    theta_q(F_i) = -G_{theta,rho_X}(-theta(alpha_i)) Ad(T~_X)(E_{tau i}) t_i^{-1}.
    """
    F = MixedElement.F(alg, i)
    if i in d.X:
        return F
    A = d.A
    action = action or BraidAction(alg)
    ai = A.simple(i)
    th = d.theta(ai)
    e = A.form(ai, th) / 2 - A.form(d.sub.rho, ai)
    img = action.ad_generator(d.sub.word, "E", d.tau[i])
    neg = tuple(-x for x in alg.simple(i))
    theta_F = (img * MixedElement.t(alg, neg)).scale(-qpow(e))
    out = F + theta_F.scale(p.gamma[i])
    if not p.sigma[i].is_zero():
        out = out + MixedElement.t(alg, neg).scale(p.sigma[i])
    return out


def theta_q_matrix_F(M: Module, d: GSatDiagram, i: int, T: Optional[Mat] = None,
                     Tinv: Optional[Mat] = None) -> Mat:
    """pi(theta_q(F_i)) = -T_{X,tau} E_{tau i} T_{X,tau}^{-1} on M."""
    if T is None:
        T = reps.half_balance_op(M, d.X, d.tau)
    if Tinv is None:
        Tinv = la.inverse(T)
    return -(T @ M.E[d.tau[i]] @ Tinv)


def coideal_generator_matrix(M: Module, d: GSatDiagram, p: ParamSet, i: int,
                             T: Optional[Mat] = None, Tinv: Optional[Mat] = None) -> Mat:
    if i in d.X:
        return M.F[i]
    out = M.F[i] + theta_q_matrix_F(M, d, i, T, Tinv).scale(p.gamma[i])
    if not p.sigma[i].is_zero():
        out = out + M.t_simple(i, -1).scale(p.sigma[i])
    return out


def bar_coideal_generator_matrix(M: Module, d: GSatDiagram, p: ParamSet, i: int,
                                 T: Optional[Mat] = None, Tinv: Optional[Mat] = None) -> Mat:
    """pi(bar(B_i)) = F_i - (-1)^{alpha_i(2 rho_X^vee)} bar(gamma_i) T^{-1} E_{tau i} T + bar(sigma_i) t_i."""
    if i in d.X:
        return M.F[i]
    if T is None:
        T = reps.half_balance_op(M, d.X, d.tau)
    if Tinv is None:
        Tinv = la.inverse(T)
    c = bar(p.gamma[i])
    if d.sub.two_rho_vee[i] % 2:
        c = -c
    out = M.F[i] - (Tinv @ M.E[d.tau[i]] @ T).scale(c)
    if not p.sigma[i].is_zero():
        out = out + M.t_simple(i).scale(bar(p.sigma[i]))
    return out


def fixed_generators(d: GSatDiagram) -> List[Tuple[str, object]]:
    """Generators of U_q g_X U_q h^theta: ('E', j), ('F', j), ('t', lam)."""
    A = d.A
    out: List[Tuple[str, object]] = []
    for j in d.X:
        out += [("E", j), ("F", j), ("t", A.simple(j))]
    # integer basis of {lam in Q : theta(lam) = lam}
    import flint
    n = A.n
    rows = []
    for k in range(n):
        rows.append([int(d.theta_cols[j][k]) - (1 if j == k else 0) for j in range(n)])
    m = flint.fmpz_mat(rows)
    ker, nullity = m.nullspace()
    Xset = set(d.X)
    for c in range(nullity):
        v = [int(ker[r, c]) for r in range(n)]
        if any(v) and not all(v[r] == 0 for r in range(n) if r not in Xset):
            out.append(("t", tuple(Fraction(x) for x in v)))
    return out


def generator_matrix(M: Module, kind: str, x) -> Mat:
    if kind == "E":
        return M.E[x]
    if kind == "F":
        return M.F[x]
    return M.t(x)


# ---------------------------------------------------------------------------
# the quasi-k-matrix

@dataclass
class QuasiK:
    diagram: GSatDiagram
    params: ParamSet
    cutoff: int
    alg: NilAlgebra
    comps: Dict[Content, NilElement]
    log: List[dict] = field(default_factory=list)

    def component(self, mu: Sequence[int]) -> NilElement:
        mu = tuple(mu)
        u = self.comps.get(mu)
        if u is None:
            return NilElement.zero(self.alg, mu)
        return u

    def support(self) -> List[Content]:
        return sorted((mu for mu, u in self.comps.items() if not u.is_zero()),
                      key=lambda c: (sum(c), c))

    def evaluate(self, M: Module, check: bool = True) -> Mat:
        return reps.eval_upper_series(M, self.comps, self.cutoff, check)

    def to_json(self) -> dict:
        return {"cutoff": self.cutoff,
                "components": {",".join(map(str, mu)): self.comps[mu].to_json() for mu in self.support()},
                "log": self.log}


def _int_content(w: Sequence) -> Optional[Content]:
    out = []
    for x in w:
        x = Fraction(x)
        if x.denominator != 1 or x < 0:
            return None
        out.append(int(x))
    return tuple(out)


class _Targets:
    """Right-hand sides of the component equations for D_i^{(r)} and D_i^{(l)}."""

    def __init__(self, d: GSatDiagram, p: ParamSet, alg: NilAlgebra, action: BraidAction):
        self.d, self.alg = d, alg
        A = d.A
        self.zeta = [zeta_coeff(d, p, i) for i in range(A.n)]
        self.sbar = [bar(s) for s in p.sigma]
        self.right: Dict[int, NilElement] = {}
        self.left: Dict[int, NilElement] = {}
        for i in range(A.n):
            if i in d.X:
                continue
            for store, inv in ((self.right, True), (self.left, False)):
                img = action.ad_generator(d.sub.word, "E", d.tau[i], inverse=inv)
                u = img.uplus_part()
                if u is None:
                    raise RecursionInconsistent(alg.zero(), f"Ad(T_X^{{+-1}})(E_{d.tau[i]}) not in U^+")
                store[i] = u

    def compute(self, comps: Dict[Content, NilElement], mu: Content, i: int):
        alg, d = self.alg, self.d
        lower = tuple(m - (k == i) for k, m in enumerate(mu))
        qi = alg.qi(i)
        c = qi - qi.inverse()
        r = NilElement.zero(alg, lower)
        l = NilElement.zero(alg, lower)
        if not self.sbar[i].is_zero() and lower in comps:
            r = r - comps[lower].scale(self.sbar[i])
            l = l - comps[lower].scale(self.sbar[i])
        if i not in d.X:
            shifted = _int_content(tuple(Fraction(a) + b for a, b in zip(lower, d.theta(alg.simple(i)))))
            if shifted is not None and shifted in comps:
                x = comps[shifted]
                if not self.zeta[i].is_zero():
                    r = r + (x * self.right[i]).scale(self.zeta[i])
                zt = self.zeta[d.tau[i]]
                if not zt.is_zero():
                    l = l + (self.left[i] * x).scale(zt)
        return r.scale(c), l.scale(c)


def _is_minus_theta_fixed(d: GSatDiagram, mu: Sequence[int]) -> bool:
    return tuple(d.theta(mu)) == tuple(-Fraction(x) for x in mu)


def quasi_k(d: GSatDiagram, p: ParamSet, cutoff: int, alg: Optional[NilAlgebra] = None,
            action: Optional[BraidAction] = None) -> QuasiK:
    """Build X_mu by increasing height: the candidate is read off from the D^{(r)} targets
    through the pairing, then both derivation systems are verified exactly."""
    if cutoff < 0:
        raise ValueError("cutoff must be nonnegative")
    A = d.A
    alg = alg or NilAlgebra(A)
    action = action or BraidAction(alg)
    tg = _Targets(d, p, alg, action)
    zero = alg.zero()
    comps: Dict[Content, NilElement] = {zero: NilElement.one(alg)}
    log: List[dict] = []
    for mu in contents_up_to(A.n, cutoff):
        if sum(mu) == 0:
            continue
        sp = alg.space(mu)
        targets = {}
        for i in range(A.n):
            if mu[i] > 0:
                targets[i] = tg.compute(comps, mu, i)
        supported = _is_minus_theta_fixed(d, mu)
        if not supported or sp.dim == 0:
            for i, (r, l) in targets.items():
                if not (r.is_zero() and l.is_zero()):
                    raise RecursionInconsistent(mu, f"nonzero target for D_{i} outside (Q^+)^(-theta)")
            continue
        f = []
        for w in sp.fwords:
            j = w[-1]
            f.append(alg.pairing_unit(j) * targets[j][0].pair_word(w[:-1]))
        cand = NilElement(alg, 1, mu, sp.gpinv.apply(f))
        for i, (r, l) in targets.items():
            if cand.dr(i) != r:
                raise RecursionInconsistent(mu, f"D_{i}^(r) system")
            if cand.dl(i) != l:
                raise RecursionInconsistent(mu, f"D_{i}^(l) system")
        log.append({"weight": list(mu), "dim": sp.dim, "zero": cand.is_zero()})
        if not cand.is_zero():
            comps[mu] = cand
    return QuasiK(d, p, cutoff, alg, comps, log)


def quasi_k_oracle(d: GSatDiagram, p: ParamSet, cutoff: int, alg: Optional[NilAlgebra] = None,
                   action: Optional[BraidAction] = None) -> Dict[Content, NilElement]:
    """Dense per-weight solve of all derivation equations at once; checks uniqueness."""
    A = d.A
    alg = alg or NilAlgebra(A)
    action = action or BraidAction(alg)
    tg = _Targets(d, p, alg, action)
    comps: Dict[Content, NilElement] = {alg.zero(): NilElement.one(alg)}
    for mu in contents_up_to(A.n, cutoff):
        if sum(mu) == 0:
            continue
        dim = alg.dim(mu)
        if dim == 0:
            continue
        blocks, rhs = [], []
        for i in range(A.n):
            if mu[i] == 0:
                continue
            r, l = tg.compute(comps, mu, i)
            blocks += [alg.deriv("r", i, mu), alg.deriv("l", i, mu)]
            rhs += list(r.vec) + list(l.vec)
        rows = []
        for b in blocks:
            rows += [dict(row) for row in b.rows]
        coef = Mat(len(rows), dim, rows)
        B = Mat(len(rhs), 1)
        for k, x in enumerate(rhs):
            B[k, 0] = x
        if la.rank(coef) != dim:
            raise RecursionInconsistent(mu, "solution not unique")
        sol = la.solve(coef, B)
        if sol is None:
            raise RecursionInconsistent(mu, "no solution")
        u = NilElement(alg, 1, mu, sol.col(0))
        if not u.is_zero():
            comps[mu] = u
    return comps


def nil_series_inverse(alg: NilAlgebra, comps: Dict[Content, NilElement], cutoff: int) -> Dict[Content, NilElement]:
    """Inverse of 1 + (higher terms) in the completion of U^+, up to height cutoff."""
    z = alg.zero()
    if z not in comps or comps[z] != NilElement.one(alg):
        raise ValueError("series must start with 1")
    out: Dict[Content, NilElement] = {z: NilElement.one(alg)}
    for mu in contents_up_to(alg.n, cutoff):
        if sum(mu) == 0 or alg.dim(mu) == 0:
            continue
        acc = NilElement.zero(alg, mu)
        for a, x in comps.items():
            if sum(a) == 0:
                continue
            b = tuple(m - k for m, k in zip(mu, a))
            if min(b) < 0 or b not in out:
                continue
            acc = acc + x * out[b]
        if not acc.is_zero():
            out[mu] = -acc
    return out


def nil_series_product(alg: NilAlgebra, a: Dict[Content, NilElement], b: Dict[Content, NilElement],
                       cutoff: int) -> Dict[Content, NilElement]:
    out: Dict[Content, NilElement] = {}
    for ka, x in a.items():
        for kb, y in b.items():
            k = tuple(s + t for s, t in zip(ka, kb))
            if sum(k) > cutoff:
                continue
            p = x * y
            out[k] = p if k not in out else out[k] + p
    return {k: v for k, v in out.items() if not v.is_zero()}


def tilde_k(qk: QuasiK) -> Dict[Content, NilElement]:
    """k~ = bar(X), componentwise."""
    return {mu: u.bar() for mu, u in qk.comps.items()}


def op_symmetric_partner(qk: QuasiK) -> Dict[Content, NilElement]:
    """op(X) with gamma_i and gamma_{tau(i)} exchanged is again the quasi-k-matrix; returns op(X)."""
    return {mu: u.op() for mu, u in qk.comps.items()}


def swap_gamma(d: GSatDiagram, p: ParamSet) -> ParamSet:
    return ParamSet(tuple(p.gamma[d.tau[i]] for i in range(d.A.n)), p.sigma, p.gamma_ext)


# ---------------------------------------------------------------------------
# k-matrices

def gamma_function(d: GSatDiagram, p: ParamSet) -> WeightFunction:
    """The character bold-gamma, extended to rational weights by exact roots."""
    return WeightFunction.character(d.A, p.gamma)


@dataclass
class KMatrixSpec:
    """k_{Y,eta} = T_{Y,eta}^{-1} T_{X,tau} gamma^{-1} k~, optionally times g; stored factored."""
    diagram: GSatDiagram
    aux: GSatDiagram
    params: ParamSet
    qk: QuasiK
    gamma: WeightFunction
    g: Optional[WeightFunction] = None

    @property
    def cutoff(self) -> int:
        return self.qk.cutoff

    def operator_word(self) -> List[str]:
        if self.aux.X == self.diagram.X and self.aux.tau == self.diagram.tau:
            return []
        return ["T_{Y,eta}^{-1}", "T_{X,tau}"]

    def evaluate(self, M: Module, check: bool = True) -> Mat:
        kt = reps.eval_upper_series(M, tilde_k(self.qk), self.cutoff, check)
        out = self.gamma.inverse().matrix(M) @ kt
        if self.operator_word():
            TX = reps.half_balance_op(M, self.diagram.X, self.diagram.tau)
            TY = reps.half_balance_op(M, self.aux.X, self.aux.tau)
            out = la.inverse(TY) @ TX @ out
        if self.g is not None:
            out = self.g.matrix(M) @ out
        return out

    def to_json(self) -> dict:
        names = self.diagram.A.nodes
        return {"diagram": self.diagram.describe(),
                "aux": {"Y": [names[i] for i in self.aux.X], "eta": [names[t] for t in self.aux.tau]},
                "params": self.params.to_json(), "cutoff": self.cutoff,
                "recipe": {"weight_function": {"gamma^-1": self.gamma.inverse().to_json()},
                           "operator_word": self.operator_word(),
                           "series": "bar(X)"},
                "twist": "Ad(T_{Y,eta}^{-1}) o omega o tau",
                "g": None if self.g is None else self.g.to_json()}


def standard_k(d: GSatDiagram, p: ParamSet, cutoff: int, qk: Optional[QuasiK] = None,
               alg: Optional[NilAlgebra] = None) -> KMatrixSpec:
    qk = qk or quasi_k(d, p, cutoff, alg)
    return KMatrixSpec(d, d, p, qk, gamma_function(d, p))


def modified_k(spec: KMatrixSpec, Y: Sequence[int], eta: Sequence[int]) -> KMatrixSpec:
    aux = tau_compatible(spec.diagram, Y, eta)
    return KMatrixSpec(spec.diagram, aux, spec.params, spec.qk, spec.gamma, spec.g)


def g_twist(spec: KMatrixSpec, g: WeightFunction) -> KMatrixSpec:
    A = spec.diagram.A
    for j in range(A.n):
        col = g.zeta[j]
        if any(Fraction(x).denominator != 1 for x in col):
            raise ValueError("Ad(g) must preserve the root lattice")
    new = g if spec.g is None else g * spec.g
    return KMatrixSpec(spec.diagram, spec.aux, spec.params, spec.qk, spec.gamma, new)


@dataclass
class ModifiedRMatrix:
    """R_{Y,eta} = kappa_{theta(Y,eta)} * bar(Theta_Y)."""
    aux: GSatDiagram
    kappa: KappaOperator
    tilde: TensorSeries

    def evaluate(self, M: Module, N: Module, check: bool = True) -> Mat:
        return self.kappa.matrix(M, N) @ reps.eval_series(M, N, self.tilde, check)


def modified_r_matrix(aux: GSatDiagram, alg: NilAlgebra, cutoff: int) -> ModifiedRMatrix:
    kappa = KappaOperator.of(aux.A, aux.theta)
    tilde = alg.quasi_r(cutoff, aux.X).bar()
    return ModifiedRMatrix(aux, kappa, tilde)


def standard_r(alg: NilAlgebra, cutoff: int) -> ModifiedRMatrix:
    A = alg.A
    kappa = KappaOperator.of(A, lambda mu: tuple(Fraction(x) for x in mu))
    return ModifiedRMatrix(None, kappa, alg.quasi_r(cutoff).bar())


# ---------------------------------------------------------------------------
# Psi = (Ad(gamma') o theta_q^{-1} (x) id)(Theta Theta_X^{-1})

def left_leg_image_F(d: GSatDiagram, p: ParamSet, alg: NilAlgebra, i: int,
                     action: Optional[BraidAction] = None) -> MixedElement:
    """(Ad(gamma') o theta_q^{-1})(F_i) = -zeta_i Ad(T~_X^{-1})(E_{tau i}) t_i, and F_i on X."""
    if i in d.X:
        return MixedElement.F(alg, i)
    action = action or BraidAction(alg)
    img = action.ad_generator(d.sub.word, "E", d.tau[i], inverse=True)
    return (img * MixedElement.t(alg, alg.simple(i))).scale(-zeta_coeff(d, p, i))


@dataclass
class PsiSeries:
    """Components mu -> list of (left MixedElement, right NilElement)."""
    comps: Dict[Content, List[Tuple[MixedElement, NilElement]]]
    cutoff: int


def psi_element(d: GSatDiagram, p: ParamSet, alg: NilAlgebra, cutoff: int,
                action: Optional[BraidAction] = None) -> PsiSeries:
    action = action or BraidAction(alg)
    theta = alg.quasi_r(cutoff)
    quot = theta * alg.quasi_r(cutoff, d.X).inverse() if d.X else theta
    imgs = {i: left_leg_image_F(d, p, alg, i, action) for i in range(alg.n)}
    one = MixedElement.scalar(alg, 1)
    cache: Dict[tuple, MixedElement] = {(): one}

    def image_word(w):
        w = tuple(w)
        m = cache.get(w)
        if m is None:
            m = image_word(w[:-1]) * imgs[w[-1]]
            cache[w] = m
        return m

    out: Dict[Content, List[Tuple[MixedElement, NilElement]]] = {}
    for mu, C in quot.comps.items():
        sp = alg.space(mu)
        terms = []
        for r, row in enumerate(C.rows):
            if not row:
                continue
            left = image_word(sp.fwords[r])
            vec = [row.get(s, ZERO) for s in range(sp.dim)]
            terms.append((left, NilElement(alg, 1, mu, vec)))
        if terms:
            out[mu] = terms
    return PsiSeries(out, cutoff)


# ---------------------------------------------------------------------------
# general sigma through the one-dimensional representation chi_{sigma'} (rank one, X empty)

def _delta_power_e(alg: NilAlgebra, m: int) -> List[Tuple[int, Scalar]]:
    """Delta(E^m) = sum_k q^{k(m-k)} [m choose k] E^k t^{m-k} (x) E^{m-k} in rank one."""
    e = alg.A.eps[0]
    return [(k, qpow(e * k * (m - k)) * qbinom(m, k, e)) for k in range(m + 1)]


def chi_route_rank1(d: GSatDiagram, p: ParamSet, height: int, margin: int = 2,
                    alg: Optional[NilAlgebra] = None) -> Dict[Content, NilElement]:
    """X'_{gamma,sigma} = (chi_{sigma'} (x) id)(Delta(X_{gamma,0}) Theta (X_{gamma,0}^{-1} (x) 1)).

    The left leg of each right weight lam is computed in the normal form E t F with all
    contributions of E-degree <= lam + margin, checked to vanish above E-degree lam, then
    rewritten as a polynomial in B = F - q^{-1} gamma' E t^{-1}; chi sends B to sigma'.
    """
    A = d.A
    if A.n != 1 or d.X:
        raise ValueError("the chi route is implemented for rank one with X empty")
    alg = alg or NilAlgebra(A)
    K = height + margin
    big = K + height
    p0 = ParamSet(p.gamma, (ZERO,), p.gamma_ext)
    X0 = quasi_k(d, p0, big, alg).comps
    X0inv = nil_series_inverse(alg, X0, big)
    theta = alg.quasi_r(height)
    sig_prime = prime_involution(d, p).sigma[0]

    def E_t(k, tpow):
        x = MixedElement.t(alg, (tpow,))
        for _ in range(k):
            x = x.lmul_E(0)
        return x

    def coef(series, m):
        u = series.get((m,))
        return ZERO if u is None else u.vec[0]

    B = MixedElement.F(alg, 0) - (MixedElement.E(alg, 0) * MixedElement.t(alg, (-1,))).scale(
        alg.qi(0).inverse() * prime_involution(d, p).gamma[0])
    Bpow = [MixedElement.scalar(alg, 1)]
    for _ in range(height):
        Bpow.append(Bpow[-1] * B)

    out: Dict[Content, NilElement] = {}
    for lam in range(height + 1):
        left = MixedElement(alg)
        for c in range(lam + 1):
            th = theta.component((c,))
            if th.nrows == 0 or th[0, 0].is_zero():
                continue
            Fc = MixedElement.from_nil(NilElement.word(alg, (0,) * c, -1))
            m_right = lam - c
            for m in range(m_right, big + 1):
                xm = coef(X0, m)
                if xm.is_zero():
                    continue
                for k, bc in _delta_power_e(alg, m):
                    if m - k != m_right or k > big:
                        continue
                    head = E_t(k, m - k).scale(xm * bc * th[0, 0])
                    for dd in range(0, big - k + 1):
                        yd = coef(X0inv, dd)
                        if yd.is_zero():
                            continue
                        Ed = MixedElement.from_nil(NilElement.word(alg, (0,) * dd, 1)).scale(yd)
                        left = left + head * Fc * Ed
        # keep terms of E-degree <= K; those between lam and K must cancel
        kept = MixedElement(alg)
        for key, C in left.terms.items():
            if key[0][0] <= K:
                kept._acc(key, C)
            if lam < key[0][0] <= K:
                raise NotInCoideal(f"left leg at weight {lam} has E-degree {key[0][0]} terms")
        poly = _peel_polynomial(alg, kept, Bpow, lam)
        val = ZERO
        for j, cj in enumerate(poly):
            val = val + cj * sig_prime ** j
        if not val.is_zero():
            out[(lam,)] = NilElement.word(alg, (0,) * lam, 1).scale(val)
    return out


def _peel_polynomial(alg: NilAlgebra, x: MixedElement, Bpow: List[MixedElement], deg: int) -> List[Scalar]:
    """Write x as sum_j c_j B^j (leading term of B^j is F^j with coefficient 1)."""
    z = alg.zero()
    coeffs = [ZERO] * (deg + 1)
    for j in range(deg, -1, -1):
        key = (z, z, (j,))
        C = x.terms.get(key)
        if C is None:
            continue
        c = C[0, 0]
        coeffs[j] = c
        x = x - Bpow[j].scale(c)
    if not x.is_zero():
        raise NotInCoideal("left leg is not a polynomial in B")
    return coeffs
