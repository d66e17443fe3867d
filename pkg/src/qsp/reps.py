"""Finite-dimensional weight modules and exact evaluation of algebra elements."""
from __future__ import annotations

from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from . import linalg as la
from .linalg import Mat
from .rootdata import GCM, Weight, subsystem, theta_map, validate_gcm
from .scalars import ONE, ZERO, Scalar, S, qfact, qint, qpow
from .uqnil import MixedElement, NilAlgebra, NilElement, TensorSeries


class ModuleError(ValueError):
    code = "ModuleError"


class NotHighestWeight(ModuleError):
    code = "NotHighestWeight"


class NotIntegrable(ModuleError):
    code = "NotIntegrable"


class CutoffTooSmall(ModuleError):
    code = "CutoffTooSmall"


class Module:
    """Weight module given by matrices of E_i and F_i on a weight basis.

    Weights are rational root-lattice expansions; for affine evaluation
    modules only the classical part is stored, so weights are compared
    through their coroot values.  zdeg holds alpha_i(d) for affine
    evaluation modules (E_i carries z^{alpha_i(d)}, F_i carries z^{-alpha_i(d)}).
    """

    def __init__(self, A: GCM, weights: Sequence[Weight], E: Sequence[Mat], F: Sequence[Mat],
                 kind: str = "finite", zdeg: Optional[Sequence[int]] = None, name: str = ""):
        self.A = A
        self.weights = [tuple(Fraction(x) for x in w) for w in weights]
        self.E, self.F = list(E), list(F)
        self.kind = kind
        self.zdeg = tuple(zdeg) if zdeg is not None else None
        self.name = name
        self._words: Dict[tuple, Mat] = {}

    @property
    def dim(self) -> int:
        return len(self.weights)

    def coroots(self, k: int) -> Tuple[Fraction, ...]:
        return tuple(self.A.coroot_value(self.weights[k], j) for j in range(self.A.n))

    def weight_blocks(self) -> Dict[tuple, List[int]]:
        out: Dict[tuple, List[int]] = {}
        for k in range(self.dim):
            out.setdefault(self.coroots(k), []).append(k)
        return out

    def t(self, lam: Sequence) -> Mat:
        """t_lam for lam in the root lattice: q^{(lam, mu)} on weight mu."""
        return Mat.diag([qpow(self.A.form(lam, w)) for w in self.weights])

    def t_simple(self, i: int, power: int = 1) -> Mat:
        return self.t(tuple(power * x for x in self.A.simple(i)))

    def diag(self, f: Callable[[Weight], Scalar]) -> Mat:
        return Mat.diag([S(f(w)) for w in self.weights])

    def word(self, sign: int, word: Sequence[int]) -> Mat:
        """Matrix of E_word (sign +1) or F_word (sign -1); the last letter acts first."""
        word = tuple(word)
        key = (sign, word)
        m = self._words.get(key)
        if m is None:
            if not word:
                m = Mat.identity(self.dim)
            else:
                gen = self.E if sign > 0 else self.F
                m = gen[word[0]] @ self.word(sign, word[1:])
            self._words[key] = m
        return m

    def eval_nil(self, u: NilElement) -> Mat:
        out = Mat(self.dim, self.dim)
        for w, c in u.terms():
            out = out + self.word(u.sign, w).scale(c)
        return out

    def eval_mixed(self, x: MixedElement) -> Mat:
        alg = x.alg
        out = Mat(self.dim, self.dim)
        for (mu, lam, nu), C in x.terms.items():
            ew = alg.space(mu).ewords
            fw = alg.space(nu).fwords
            tl = self.t(lam)
            for s, row in enumerate(C.rows):
                if not row:
                    continue
                right = Mat(self.dim, self.dim)
                for r, c in row.items():
                    right = right + self.word(-1, fw[r]).scale(c)
                out = out + self.word(1, ew[s]) @ tl @ right
        return out

    def nil_height(self) -> int:
        """Largest height of a difference of weights lying in Q^+ (E-words of larger height act as 0)."""
        best = 0
        for a in self.weights:
            for b in self.weights:
                d = [x - y for x, y in zip(a, b)]
                if self.kind != "finite":
                    # level zero: classical differences, height is bounded by E-word lengths below
                    continue
                if all(x.denominator == 1 and x >= 0 for x in d):
                    best = max(best, int(sum(d)))
        if self.kind != "finite":
            return self._affine_nil_height()
        return best

    def _affine_nil_height(self) -> int:
        # E_i are nilpotent; the longest nonzero E-word bounds the useful height
        h = 0
        frontier = [Mat.identity(self.dim)]
        seen = 0
        while frontier and seen < 64:
            nxt = []
            for m in frontier:
                for Ei in self.E:
                    p = Ei @ m
                    if not p.is_zero():
                        nxt.append(p)
            if not nxt:
                return h
            h += 1
            seen += 1
            frontier = nxt[:64]
        raise NotIntegrable("E-words do not vanish")

    def to_json(self) -> dict:
        from .scalars import to_string
        names = self.A.nodes

        def dense(m):
            return [[to_string(x) for x in row] for row in m.to_dense()]

        return {"name": self.name, "dim": self.dim,
                "weights": [[str(x) for x in w] for w in self.weights],
                "E": {str(names[i]): dense(m) for i, m in enumerate(self.E)},
                "F": {str(names[i]): dense(m) for i, m in enumerate(self.F)}}


def _gcm_rank1(eps: int = 1) -> GCM:
    return validate_gcm([[2]], [eps])


def sl2_module(n: int, eps: int = 1, A: Optional[GCM] = None) -> Module:
    """The (n+1)-dimensional simple module; F v_k = v_{k+1}, E v_k = [k][n-k+1] v_{k-1}."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    A = A or _gcm_rank1(eps)
    e = A.eps[0]
    E, F = Mat(n + 1, n + 1), Mat(n + 1, n + 1)
    for k in range(n + 1):
        if k + 1 <= n:
            F[k + 1, k] = ONE
        if k >= 1:
            E[k - 1, k] = qint(k, e) * qint(n - k + 1, e)
    weights = [(Fraction(n - 2 * k, 2),) for k in range(n + 1)]
    return Module(A, weights, [E], [F], name=f"V({n})")


def fundamental_weight(A: GCM, k: int) -> Weight:
    """varpi_k as a rational root-lattice expansion (finite type)."""
    from flint import fmpq_mat
    n = A.n
    # coroot_value(c, j) = sum_i c_i a_ji
    M = fmpq_mat(n, n, [A.a[j][i] for j in range(n) for i in range(n)])
    rhs = fmpq_mat(n, 1, [int(j == k) for j in range(n)])
    sol = M.solve(rhs)
    return tuple(Fraction(int(sol[i, 0].p), int(sol[i, 0].q)) for i in range(n))


def minuscule_module(A: GCM, lam: Weight, name: str = "") -> Module:
    """Module on the Weyl orbit of a minuscule weight; E_i, F_i move along the orbit with coefficient 1."""
    lam = tuple(Fraction(x) for x in lam)
    orbit = [lam]
    seen = {lam}
    k = 0
    while k < len(orbit):
        mu = orbit[k]
        for i in range(A.n):
            c = A.coroot_value(mu, i)
            if c not in (-1, 0, 1):
                raise ModuleError(f"weight {mu} is not minuscule")
            if c == 1:
                nu = tuple(x - (1 if j == i else 0) for j, x in enumerate(mu))
                if nu not in seen:
                    seen.add(nu)
                    orbit.append(nu)
        k += 1
    idx = {w: a for a, w in enumerate(orbit)}
    d = len(orbit)
    E = [Mat(d, d) for _ in range(A.n)]
    F = [Mat(d, d) for _ in range(A.n)]
    for a, mu in enumerate(orbit):
        for i in range(A.n):
            if A.coroot_value(mu, i) == 1:
                b = idx[tuple(x - (1 if j == i else 0) for j, x in enumerate(mu))]
                F[i][b, a] = ONE
                E[i][a, b] = ONE
    return Module(A, orbit, E, F, name=name or "minuscule")


def trivial_module(A: GCM) -> Module:
    z = [Mat(1, 1) for _ in range(A.n)]
    return Module(A, [A.zero()], z, list(z), name="trivial")


def tensor(M: Module, N: Module) -> Module:
    """M (x) N with Delta(E_i) = E_i(x)1 + t_i(x)E_i, Delta(F_i) = F_i(x)t_i^{-1} + 1(x)F_i."""
    if M.kind != N.kind or M.zdeg != N.zdeg:
        raise ModuleError("tensor factors of different kinds")
    A = M.A
    IM, IN = Mat.identity(M.dim), Mat.identity(N.dim)
    E, F = [], []
    for i in range(A.n):
        E.append(la.kron(M.E[i], IN) + la.kron(M.t_simple(i), N.E[i]))
        F.append(la.kron(M.F[i], N.t_simple(i, -1)) + la.kron(IM, N.F[i]))
    weights = [tuple(x + y for x, y in zip(a, b)) for a in M.weights for b in N.weights]
    return Module(A, weights, E, F, M.kind, M.zdeg, name=f"{M.name}(x){N.name}")


def tensor_many(mods: Sequence[Module]) -> Module:
    out = mods[0]
    for m in mods[1:]:
        out = tensor(out, m)
    return out


def highest_weight_vectors(M: Module, weight: Optional[Weight] = None) -> List[List[Scalar]]:
    """Basis of vectors killed by all E_i (optionally in a given weight space)."""
    blocks = M.weight_blocks()
    out = []
    for key, idx in blocks.items():
        if weight is not None and key != tuple(M.A.coroot_value(weight, j) for j in range(M.A.n)):
            continue
        stacked = Mat(0, len(idx))
        rows = []
        for Ei in M.E:
            sub = Ei.submatrix(range(M.dim), idx)
            rows.extend(sub.rows)
        stacked = Mat(len(rows), len(idx), rows)
        for v in la.nullspace(stacked):
            full = [ZERO] * M.dim
            for a, k in enumerate(idx):
                full[k] = v[a]
            out.append(full)
    return out


def highest_weight_submodule(M: Module, v: Sequence[Scalar], name: str = "") -> Tuple[Module, Mat]:
    """The submodule generated from a highest-weight vector by F-words, and its embedding."""
    v = [S(x) for x in v]
    for Ei in M.E:
        if any(not x.is_zero() for x in Ei.apply(v)):
            raise NotHighestWeight("vector is not killed by every E_i")
    basis: List[List[Scalar]] = [v]
    queue = [v]
    while queue:
        u = queue.pop(0)
        for Fi in M.F:
            w = Fi.apply(u)
            if all(x.is_zero() for x in w):
                continue
            cand = basis + [w]
            B = Mat(M.dim, len(cand))
            for c, vec in enumerate(cand):
                for r, x in enumerate(vec):
                    if not x.is_zero():
                        B[r, c] = x
            if la.rank(B) == len(cand):
                basis.append(w)
                queue.append(w)
    B = Mat(M.dim, len(basis))
    for c, vec in enumerate(basis):
        for r, x in enumerate(vec):
            if not x.is_zero():
                B[r, c] = x
    wts = []
    for vec in basis:
        k = next(r for r, x in enumerate(vec) if not x.is_zero())
        wts.append(M.weights[k])
    E, F = [], []
    for i in range(M.A.n):
        for gens, out in ((M.E, E), (M.F, F)):
            X = la.solve(B, gens[i] @ B)
            if X is None:
                raise ModuleError("span is not stable")
            out.append(X)
    return Module(M.A, wts, E, F, M.kind, M.zdeg, name=name or f"L({M.name})"), B


def check_relations(M: Module) -> List[str]:
    """All defining relations as exact matrix identities; returns the failures."""
    A = M.A
    fails = []
    co = [M.coroots(k) for k in range(M.dim)]
    for i in range(A.n):
        shift = tuple(Fraction(A.a[j][i]) for j in range(A.n))
        for gen, sgn, label in ((M.E[i], 1, "E"), (M.F[i], -1, "F")):
            for r, row in enumerate(gen.rows):
                for c in row:
                    if co[r] != tuple(x + sgn * y for x, y in zip(co[c], shift)):
                        fails.append(f"{label}_{i} does not shift weight {c}->{r} by alpha_{i}")
    for i in range(A.n):
        for j in range(A.n):
            lhs = M.E[i] @ M.F[j] - M.F[j] @ M.E[i]
            if i == j:
                qi = qpow(A.eps[i])
                rhs = (M.t_simple(i) - M.t_simple(i, -1)).scale((qi - qi.inverse()).inverse())
            else:
                rhs = Mat(M.dim, M.dim)
            if lhs != rhs:
                fails.append(f"[E_{i},F_{j}]")
    for i in range(A.n):
        for j in range(A.n):
            if i == j:
                continue
            m = 1 - A.a[i][j]
            for gens, label in ((M.E, "E"), (M.F, "F")):
                acc = Mat(M.dim, M.dim)
                for r in range(m + 1):
                    from .scalars import qbinom
                    c = qbinom(m, r, A.eps[i])
                    if r % 2:
                        c = -c
                    term = _mpow(gens[i], m - r, M.dim) @ gens[j] @ _mpow(gens[i], r, M.dim)
                    acc = acc + term.scale(c)
                if not acc.is_zero():
                    fails.append(f"Serre {label}_{i}{j}")
    if M.kind == "finite":
        for i in range(A.n):
            for gens, label in ((M.E, "E"), (M.F, "F")):
                if not _mpow(gens[i], M.dim, M.dim).is_zero():
                    fails.append(f"{label}_{i} not nilpotent")
    return fails


def _mpow(m: Mat, k: int, dim: int) -> Mat:
    out = Mat.identity(dim)
    for _ in range(k):
        out = m @ out
    return out


def divided_power(M: Module, sign: int, j: int, k: int) -> Mat:
    gen = M.E[j] if sign > 0 else M.F[j]
    return _mpow(gen, k, M.dim).scale(qfact(k, M.A.eps[j]).inverse())


def quantum_weyl_op(M: Module, j: int) -> Mat:
    """T~_j on M_mu: sum over a-b+c = -mu(h_j) of (-1)^b q_j^{b-ac} E^(a) F^(b) E^(c)."""
    A = M.A
    e = A.eps[j]
    n = M.dim
    cap = n
    if not _mpow(M.E[j], cap, n).is_zero() or not _mpow(M.F[j], cap, n).is_zero():
        raise NotIntegrable(f"E_{j} or F_{j} is not nilpotent")
    Ep = [divided_power(M, 1, j, k) for k in range(cap)]
    Fp = [divided_power(M, -1, j, k) for k in range(cap)]
    out = Mat(n, n)
    blocks = M.weight_blocks()
    for key, idx in blocks.items():
        m = int(key[j])
        proj = Mat(n, n)
        for k in idx:
            proj[k, k] = ONE
        acc = Mat(n, n)
        for a in range(cap):
            for c in range(cap):
                b = a + c + m
                if b < 0 or b >= cap:
                    continue
                coef = qpow(e * (b - a * c))
                if b % 2:
                    coef = -coef
                term = Ep[a] @ Fp[b] @ Ep[c]
                if not term.is_zero():
                    acc = acc + term.scale(coef)
        out = out + acc @ proj
    return out


def weyl_word_op(M: Module, word: Sequence[int]) -> Mat:
    """T~_{j1} ... T~_{jk} for a word (j1, ..., jk)."""
    out = Mat.identity(M.dim)
    for j in word:
        out = out @ quantum_weyl_op(M, j)
    return out


def g_function(A: GCM, zeta: Callable[[Weight], Weight], lam: Weight) -> Callable[[Weight], Scalar]:
    """G_{zeta,lam}(mu) = q^{(zeta(mu), mu)/2 + (lam, mu)}."""
    def g(mu):
        return qpow(A.form(zeta(mu), mu) / 2 + A.form(lam, mu))
    return g


def half_balance_op(M: Module, Y: Sequence[int], eta: Sequence[int]) -> Mat:
    """T_{Y,eta} = G_{theta(Y,eta), rho_Y} T~_Y on M."""
    A = M.A
    sub = subsystem(A, Y)
    th = theta_map(A, Y, eta)
    G = M.diag(g_function(A, th, sub.rho))
    return G @ weyl_word_op(M, sub.word)


def kappa_op(M: Module, N: Module, g: Callable[[Weight], Weight]) -> Mat:
    """kappa_g on M (x) N: q^{(g(mu), nu)} on M_mu (x) N_nu."""
    A = M.A
    vals = [qpow(A.form(g(a), b)) for a in M.weights for b in N.weights]
    return Mat.diag(vals)


def check_cutoff(M: Module, N: Optional[Module], cutoff: int) -> None:
    need = M.nil_height() if N is None else min(M.nil_height(), N.nil_height())
    if cutoff < need:
        raise CutoffTooSmall(f"cutoff {cutoff} below nilpotency height {need}")


def eval_series(M: Module, N: Module, T: TensorSeries, check: bool = True) -> Mat:
    """sum_mu sum_{r,s} T_mu[r,s] pi_M(F_r) (x) pi_N(E_s)."""
    if check:
        check_cutoff(M, N, T.cutoff)
    alg = T.alg
    out = Mat(M.dim * N.dim, M.dim * N.dim)
    for mu, C in T.comps.items():
        sp = alg.space(mu)
        for r, row in enumerate(C.rows):
            if not row:
                continue
            left = M.word(-1, sp.fwords[r])
            if left.is_zero():
                continue
            right = Mat(N.dim, N.dim)
            for s, c in row.items():
                right = right + N.word(1, sp.ewords[s]).scale(c)
            if not right.is_zero():
                out = out + la.kron(left, right)
    return out


def eval_upper_series(M: Module, comps: Dict[tuple, NilElement], cutoff: int, check: bool = True) -> Mat:
    """Evaluate sum_mu u_mu for a single-leg series in U^+."""
    if check:
        check_cutoff(M, None, cutoff)
    out = Mat(M.dim, M.dim)
    for mu, u in comps.items():
        out = out + M.eval_nil(u)
    return out


def affine_eval_module(ell: int, lam, grading: str = "principal", A: Optional[GCM] = None) -> Module:
    """ell-dimensional evaluation module of U_q(sl2^) at z = 1, with z-degrees alpha_i(d) attached."""
    if ell < 1:
        raise ValueError("ell must be positive")
    lam = S(lam)
    if lam.is_zero():
        raise ValueError("lambda must be nonzero")
    A = A or validate_gcm([[2, -2], [-2, 2]], [1, 1])
    E = [Mat(ell, ell), Mat(ell, ell)]
    F = [Mat(ell, ell), Mat(ell, ell)]
    for k in range(ell):
        if k + 1 < ell:
            E[0][k + 1, k] = ONE
            F[1][k + 1, k] = lam.inverse()
        if k >= 1:
            c = qint(ell - k) * qint(k)
            F[0][k - 1, k] = c
            E[1][k - 1, k] = lam * c
    weights = [(Fraction(0), Fraction(ell - 1 - 2 * k, 2)) for k in range(ell)]
    if grading == "principal":
        zdeg = (1, 1)
    elif grading == "homogeneous":
        zdeg = (1, 0)
    else:
        raise ValueError(f"unknown grading {grading!r}")
    return Module(A, weights, E, F, "affine", zdeg, name=f"V_{ell}({lam})")


def pullback_omega_tau(M: Module, tau: Sequence[int]) -> Module:
    """M pulled back along omega o tau: E_i -> -F_{tau i}, F_i -> -E_{tau i}, weights mu -> -tau(mu)."""
    A = M.A
    E = [-M.F[tau[i]] for i in range(A.n)]
    F = [-M.E[tau[i]] for i in range(A.n)]
    weights = [tuple(-x for x in A.permute(tau, w)) for w in M.weights]
    zdeg = None if M.zdeg is None else tuple(-M.zdeg[tau[i]] for i in range(A.n))
    return Module(A, weights, E, F, M.kind, zdeg, name=f"{M.name}^wt")


def scale_generators(M: Module, c: Sequence[Scalar]) -> Module:
    """M pulled back along Ad of a character: E_i -> c_i E_i, F_i -> c_i^{-1} F_i."""
    c = [S(x) for x in c]
    E = [m.scale(ci) for m, ci in zip(M.E, c)]
    F = [m.scale(ci.inverse()) for m, ci in zip(M.F, c)]
    return Module(M.A, M.weights, E, F, M.kind, M.zdeg, name=M.name)
