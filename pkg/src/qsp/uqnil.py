"""The nilpotent halves in pairing normal form, the mixed algebra and Lusztig's braid action.

Weight spaces of U^+ are described through free words and the Gram matrix of
the Drinfeld-Lusztig pairing.  An element of (U^+)_mu is a coefficient vector
over the pivot E-words (the first pivot columns of the Gram matrix); elements
of (U^-)_{-mu} use the pivot F-words.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from . import linalg as la
from .linalg import Mat
from .rootdata import GCM
from .scalars import ONE, ZERO, Scalar, S, bar, qbinom, qfact, qpow

Content = Tuple[int, ...]
Word = Tuple[int, ...]


class NotReduced(ValueError):
    pass


class NotInUPlus(ValueError):
    pass


class NonUnitalLeadingTerm(ArithmeticError):
    pass


def _add(a: Content, b: Content) -> Content:
    return tuple(x + y for x, y in zip(a, b))


def _sub(a: Content, b: Content) -> Content:
    return tuple(x - y for x, y in zip(a, b))


def content(word: Sequence[int], n: int) -> Content:
    c = [0] * n
    for i in word:
        c[i] += 1
    return tuple(c)


_PRIME = (1 << 61) - 1
_POINTS = (1000003, 8675309, 31337, 2718281, 1618033)


def _eval_mod(x: Scalar, v0: int) -> Optional[int]:
    """x(v0) mod _PRIME, or None when the denominator vanishes there."""
    if x.num.is_zero():
        return 0
    d = int(x.den(v0)) % _PRIME
    if d == 0:
        return None
    n = int(x.num(v0)) % _PRIME
    return n * pow(d, -1, _PRIME) * pow(v0, x.shift, _PRIME) % _PRIME


def _pivots_mod(m: Mat, v0: int) -> Optional[List[int]]:
    from flint import nmod_mat
    if m.nrows == 0 or m.ncols == 0:
        return []
    dense = [[0] * m.ncols for _ in range(m.nrows)]
    for i, row in enumerate(m.rows):
        for j, x in row.items():
            y = _eval_mod(x, v0)
            if y is None:
                return None
            dense[i][j] = y
    red, rk = nmod_mat(dense, _PRIME).rref()
    piv = []
    for i in range(rk):
        for j in range(m.ncols):
            if int(red[i, j]) != 0:
                piv.append(j)
                break
    return piv


class WeightSpace:
    """Pivot data for (U^+)_mu and (U^-)_{-mu}.

    le[i] / lf[i]: left multiplication by E_i / F_i from weight mu - alpha_i,
    dl[i] / dr[i]: skew derivations into weight mu - alpha_i, all on pivot
    coordinates.
    """

    __slots__ = ("mu", "ewords", "fwords", "dim", "gpiv", "gpinv", "le", "lf", "dl", "dr")

    def __init__(self, mu, ewords, fwords, gpiv: Mat, le, lf, dl, dr):
        self.mu = mu
        self.ewords, self.fwords = ewords, fwords
        self.dim = len(ewords)
        self.gpiv = gpiv
        self.gpinv = la.inverse(gpiv) if self.dim else Mat(0, 0)
        self.le, self.lf, self.dl, self.dr = le, lf, dl, dr

    def e_pivot_words(self) -> List[Word]:
        return list(self.ewords)

    def f_pivot_words(self) -> List[Word]:
        return list(self.fwords)


class NilAlgebra:
    """Weight-space data for U_q n^+ and U_q n^- of a fixed Cartan matrix."""

    def __init__(self, A: GCM):
        self.A = A
        self.n = A.n
        self._words: Dict[Content, Tuple[Word, ...]] = {(0,) * A.n: ((),)}
        self._spaces: Dict[Content, WeightSpace] = {}
        self._dfree: Dict[tuple, Mat] = {}
        self._ops: Dict[tuple, object] = {}
        self._qi = [qpow(e) for e in A.eps]

    # scalars

    def qi(self, i: int) -> Scalar:
        return self._qi[i]

    def qform(self, a: Sequence, b: Sequence) -> Scalar:
        return qpow(self.A.form(a, b))

    def pairing_unit(self, i: int) -> Scalar:
        """<F_i, E_i> = 1/(q_i^{-1} - q_i)."""
        qi = self._qi[i]
        return (qi.inverse() - qi).inverse()

    def simple(self, i: int) -> Content:
        return tuple(int(k == i) for k in range(self.n))

    def zero(self) -> Content:
        return (0,) * self.n

    # free words, kept as the reference route for the pairing

    def words(self, mu: Content) -> Tuple[Word, ...]:
        mu = tuple(mu)
        w = self._words.get(mu)
        if w is not None:
            return w
        if any(x < 0 for x in mu):
            return ()
        out = []
        for i in range(self.n):
            if mu[i] > 0:
                out.extend((i,) + t for t in self.words(_sub(mu, self.simple(i))))
        w = tuple(out)
        self._words[mu] = w
        return w

    def _dfree_mat(self, side: str, i: int, mu: Content) -> Mat:
        """Free-word skew derivation on word spans: words(mu - alpha_i) x words(mu)."""
        key = (side, i, mu)
        m = self._dfree.get(key)
        if m is not None:
            return m
        lower = _sub(mu, self.simple(i))
        src = self.words(mu)
        dst = self.words(lower)
        idx = {w: k for k, w in enumerate(dst)}
        m = Mat(len(dst), len(src))
        ai = self.simple(i)
        for col, w in enumerate(src):
            for k, letter in enumerate(w):
                if letter != i:
                    continue
                part = w[:k] if side == "l" else w[k + 1:]
                coef = self.qform(ai, content(part, self.n))
                row = idx[w[:k] + w[k + 1:]]
                m[row, col] = m[row, col] + coef
        self._dfree[key] = m
        return m

    def free_gram(self, mu: Content) -> Mat:
        """Pairing <F_y, E_x> on all words of content mu, by the derivation recursion."""
        mu = tuple(mu)
        key = ("gram", mu)
        g = self._ops.get(key)
        if g is not None:
            return g
        words = self.words(mu)
        if mu == self.zero():
            g = Mat.identity(1)
        else:
            g = Mat(len(words), len(words))
            for i in range(self.n):
                if mu[i] == 0:
                    continue
                lower = _sub(mu, self.simple(i))
                gl = self.free_gram(lower)
                lidx = {w: k for k, w in enumerate(self.words(lower))}
                rows = [k for k, w in enumerate(words) if w[0] == i]
                sub = Mat(len(rows), gl.ncols, [dict(gl.rows[lidx[words[k][1:]]]) for k in rows])
                block = (sub @ self._dfree_mat("l", i, mu)).scale(self.pairing_unit(i))
                for a, k in enumerate(rows):
                    g.rows[k] = block.rows[a]
        self._ops[key] = g
        return g

    # pivot spaces

    def space(self, mu: Content) -> WeightSpace:
        mu = tuple(mu)
        sp = self._spaces.get(mu)
        if sp is None:
            if any(x < 0 for x in mu):
                raise ValueError(f"negative content {mu}")
            sp = self._build(mu)
            self._spaces[mu] = sp
        return sp

    def _build(self, mu: Content) -> WeightSpace:
        n = self.n
        if mu == self.zero():
            return WeightSpace(mu, [()], [()], Mat.identity(1), {}, {}, {}, {})
        support = [i for i in range(n) if mu[i] > 0]
        lower = {i: self.space(_sub(mu, self.simple(i))) for i in support}
        cols = [(i, s) for i in support for s in range(lower[i].dim)]
        rows = [(i, r) for i in support for r in range(lower[i].dim)]
        # derivations of the spanning words E_i * (pivot of mu - alpha_i)
        dlc = {i: Mat(lower[i].dim, len(cols)) for i in support}
        drc = {i: Mat(lower[i].dim, len(cols)) for i in support}
        for c, (ip, s) in enumerate(cols):
            nu = lower[ip]
            for i in support:
                tgt = lower[i]
                vl: Dict[int, Scalar] = {}
                vr: Dict[int, Scalar] = {}
                if i == ip:
                    vl[s] = ONE
                    vr[s] = self.qform(self.simple(i), _sub(mu, self.simple(i)))
                if i in nu.dl and ip in tgt.le:
                    cl = tgt.le[ip].apply(nu.dl[i].col(s))
                    cr = tgt.le[ip].apply(nu.dr[i].col(s))
                    f = self.qform(self.simple(i), self.simple(ip))
                    for k, x in enumerate(cl):
                        if not x.is_zero():
                            vl[k] = vl.get(k, ZERO) + f * x
                    for k, x in enumerate(cr):
                        if not x.is_zero():
                            vr[k] = vr.get(k, ZERO) + x
                for k, x in vl.items():
                    if not x.is_zero():
                        dlc[i].rows[k][c] = x
                for k, x in vr.items():
                    if not x.is_zero():
                        drc[i].rows[k][c] = x
        gc = Mat(len(rows), len(cols))
        at = 0
        for i in support:
            block = (lower[i].gpiv @ dlc[i]).scale(self.pairing_unit(i))
            for k in range(lower[i].dim):
                gc.rows[at + k] = block.rows[k]
            at += lower[i].dim
        epiv = fpiv = None
        for v0 in _POINTS:
            epiv = _pivots_mod(gc, v0)
            fpiv = _pivots_mod(gc.T(), v0)
            if epiv is None or fpiv is None or len(epiv) != len(fpiv):
                continue
            d = len(epiv)
            gpiv = gc.submatrix(fpiv, epiv)
            gpinv = la.inverse(gpiv) if d else Mat(0, 0)
            conv_c = gpinv @ gc.submatrix(fpiv, range(len(cols)))
            conv_r = gc.submatrix(range(len(rows)), epiv) @ gpinv
            rn = [r for r in range(len(rows)) if r not in set(fpiv)]
            cn = [c for c in range(len(cols)) if c not in set(epiv)]
            # rank certificate: every entry is reproduced from the pivot block
            lhs = gc.submatrix(rn, epiv) @ conv_c.submatrix(range(d), cn)
            if lhs == gc.submatrix(rn, cn):
                break
        else:
            raise ArithmeticError(f"could not certify the pairing rank at {mu}")
        ewords = [(cols[c][0],) + lower[cols[c][0]].ewords[cols[c][1]] for c in epiv]
        fwords = [(rows[r][0],) + lower[rows[r][0]].fwords[rows[r][1]] for r in fpiv]
        le, lf, dl, dr = {}, {}, {}, {}
        at = 0
        for i in support:
            k = lower[i].dim
            le[i] = conv_c.submatrix(range(d), range(at, at + k))
            lf[i] = conv_r.submatrix(range(at, at + k), range(d)).T()
            dl[i] = dlc[i].submatrix(range(k), epiv)
            dr[i] = drc[i].submatrix(range(k), epiv)
            at += k
        sp = WeightSpace(mu, ewords, fwords, gpiv, le, lf, dl, dr)
        return sp

    def dim(self, mu: Content) -> int:
        if any(x < 0 for x in mu):
            return 0
        return self.space(mu).dim

    # coordinates

    def _cached(self, key, build):
        m = self._ops.get(key)
        if m is None:
            m = build()
            self._ops[key] = m
        return m

    def left_e(self, word: Sequence[int], mu: Content) -> Mat:
        """Left multiplication by E_word from (U^+)_mu, on pivot coordinates."""
        word, mu = tuple(word), tuple(mu)
        if not word:
            return Mat.identity(self.dim(mu))

        def build():
            inner = self.left_e(word[1:], mu)
            tgt = self.space(_add(_add(mu, content(word[1:], self.n)), self.simple(word[0])))
            return tgt.le[word[0]] @ inner

        return self._cached(("LE", word, mu), build)

    def left_f(self, word: Sequence[int], nu: Content) -> Mat:
        word, nu = tuple(word), tuple(nu)
        if not word:
            return Mat.identity(self.dim(nu))

        def build():
            inner = self.left_f(word[1:], nu)
            tgt = self.space(_add(_add(nu, content(word[1:], self.n)), self.simple(word[0])))
            return tgt.lf[word[0]] @ inner

        return self._cached(("LF", word, nu), build)

    def e_coords(self, word: Sequence[int]) -> List[Scalar]:
        return self.left_e(word, self.zero()).col(0)

    def f_coords(self, word: Sequence[int]) -> List[Scalar]:
        return self.left_f(word, self.zero()).col(0)

    def pair_free(self, fword: Sequence[int], eword: Sequence[int]) -> Scalar:
        mu = content(fword, self.n)
        if content(eword, self.n) != mu:
            return ZERO
        g = self.space(mu).gpiv
        return la.dot_vec(self.f_coords(fword), g.apply(self.e_coords(eword)))

    def deriv(self, side: str, i: int, mu: Content) -> Mat:
        """D_i on pivot coordinates: dim(mu - alpha_i) x dim(mu)."""
        sp = self.space(mu)
        table = sp.dl if side == "l" else sp.dr
        if i not in table:
            return Mat(0, sp.dim)
        return table[i]

    def mult_matrix(self, sign: int, a: Content, b: Content) -> Mat:
        """Structure matrix d(a+b) x (d(a) d(b)): column s*d(b)+t is pivot_s(a) * pivot_t(b)."""
        a, b = tuple(a), tuple(b)

        def build():
            sa = self.space(a)
            db = self.dim(b)
            c = _add(a, b)
            out = Mat(self.dim(c), sa.dim * db)
            words = sa.ewords if sign > 0 else sa.fwords
            for s, w in enumerate(words):
                m = self.left_e(w, b) if sign > 0 else self.left_f(w, b)
                for k, row in enumerate(m.rows):
                    for t, x in row.items():
                        out.rows[k][s * db + t] = x
            return out

        return self._cached(("mul", sign, a, b), build)

    def op_matrix(self, sign: int, mu: Content) -> Mat:
        """op (word reversal) on pivot coordinates."""
        mu = tuple(mu)

        def build():
            sp = self.space(mu)
            out = Mat(sp.dim, sp.dim)
            words = sp.ewords if sign > 0 else sp.fwords
            for s, w in enumerate(words):
                col = (self.e_coords if sign > 0 else self.f_coords)(tuple(reversed(w)))
                for k, x in enumerate(col):
                    if not x.is_zero():
                        out.rows[k][s] = x
            return out

        return self._cached(("op", sign, mu), build)

    def quasi_r(self, cutoff: int, X: Optional[Iterable[int]] = None) -> "TensorSeries":
        X = None if X is None else set(X)
        comps = {}
        for mu in contents_up_to(self.n, cutoff, X):
            sp = self.space(mu)
            if sp.dim == 0:
                continue
            comps[mu] = sp.gpinv.T()
        return TensorSeries(self, comps, cutoff, X)


def contents_up_to(n: int, cutoff: int, X: Optional[Iterable[int]] = None) -> List[Content]:
    """All contents of height <= cutoff (supported on X if given), by height then lex."""
    allowed = list(range(n)) if X is None else sorted(set(X))
    out: List[Content] = []

    def rec(k, rem, cur):
        if k == len(allowed):
            c = [0] * n
            for a, v in zip(allowed, cur):
                c[a] = v
            out.append(tuple(c))
            return
        for v in range(rem + 1):
            rec(k + 1, rem - v, cur + [v])

    rec(0, cutoff, [])
    out.sort(key=lambda c: (sum(c), c))
    return out


class NilElement:
    """Element of (U^+)_mu (sign +1) or (U^-)_{-mu} (sign -1) in pivot coordinates."""

    __slots__ = ("alg", "sign", "mu", "vec")

    def __init__(self, alg: NilAlgebra, sign: int, mu: Content, vec: Sequence[Scalar]):
        self.alg, self.sign, self.mu = alg, sign, tuple(mu)
        self.vec = tuple(S(x) for x in vec)
        if len(self.vec) != alg.dim(self.mu):
            raise ValueError("coordinate vector has wrong length")

    @staticmethod
    def one(alg: NilAlgebra, sign: int = 1) -> "NilElement":
        return NilElement(alg, sign, alg.zero(), [ONE])

    @staticmethod
    def zero(alg: NilAlgebra, mu: Content, sign: int = 1) -> "NilElement":
        return NilElement(alg, sign, mu, [ZERO] * alg.dim(mu))

    @staticmethod
    def word(alg: NilAlgebra, word: Sequence[int], sign: int = 1) -> "NilElement":
        mu = content(word, alg.n)
        v = alg.e_coords(word) if sign > 0 else alg.f_coords(word)
        return NilElement(alg, sign, mu, v)

    @staticmethod
    def gen(alg: NilAlgebra, i: int, sign: int = 1) -> "NilElement":
        return NilElement.word(alg, (i,), sign)

    def is_zero(self) -> bool:
        return all(x.is_zero() for x in self.vec)

    def _check(self, other: "NilElement"):
        if self.sign != other.sign or self.mu != other.mu:
            raise ValueError("incompatible elements")

    def __add__(self, other):
        self._check(other)
        return NilElement(self.alg, self.sign, self.mu, [a + b for a, b in zip(self.vec, other.vec)])

    def __sub__(self, other):
        self._check(other)
        return NilElement(self.alg, self.sign, self.mu, [a - b for a, b in zip(self.vec, other.vec)])

    def __neg__(self):
        return NilElement(self.alg, self.sign, self.mu, [-a for a in self.vec])

    def scale(self, c) -> "NilElement":
        c = S(c)
        return NilElement(self.alg, self.sign, self.mu, [a * c for a in self.vec])

    def __mul__(self, other):
        if not isinstance(other, NilElement):
            return self.scale(other)
        if self.sign != other.sign:
            raise ValueError("use MixedElement for products of E and F parts")
        alg = self.alg
        m = alg.mult_matrix(self.sign, self.mu, other.mu)
        flat = [a * b for a in self.vec for b in other.vec]
        return NilElement(alg, self.sign, _add(self.mu, other.mu), m.apply(flat))

    __rmul__ = scale

    def __eq__(self, other):
        if not isinstance(other, NilElement):
            return NotImplemented
        return self.sign == other.sign and self.mu == other.mu and self.vec == other.vec

    def __hash__(self):
        return hash((self.sign, self.mu, self.vec))

    def deriv(self, side: str, i: int) -> "NilElement":
        if self.sign < 0:
            raise ValueError("skew derivations act on U^+")
        lower = _sub(self.mu, self.alg.simple(i))
        if any(x < 0 for x in lower):
            return _zero_outside(self.alg, lower)
        m = self.alg.deriv(side, i, self.mu)
        return NilElement(self.alg, 1, lower, m.apply(list(self.vec)))

    def dr(self, i: int) -> "NilElement":
        return self.deriv("r", i)

    def dl(self, i: int) -> "NilElement":
        return self.deriv("l", i)

    def bar(self) -> "NilElement":
        # pivot words are bar invariant, so bar acts on coefficients
        return NilElement(self.alg, self.sign, self.mu, [bar(x) for x in self.vec])

    def op(self) -> "NilElement":
        m = self.alg.op_matrix(self.sign, self.mu)
        return NilElement(self.alg, self.sign, self.mu, m.apply(list(self.vec)))

    def pair_word(self, fword: Sequence[int]) -> Scalar:
        """<F_fword, self> for self in U^+."""
        if content(fword, self.alg.n) != self.mu:
            return ZERO
        g = self.alg.space(self.mu).gpiv
        return la.dot_vec(self.alg.f_coords(fword), g.apply(list(self.vec)))

    def functional(self) -> List[Scalar]:
        """Pairings against the pivot F-words."""
        return self.alg.space(self.mu).gpiv.apply(list(self.vec))

    def terms(self) -> List[Tuple[Word, Scalar]]:
        sp = self.alg.space(self.mu)
        ws = sp.ewords if self.sign > 0 else sp.fwords
        return [(w, c) for w, c in zip(ws, self.vec) if not c.is_zero()]

    def to_json(self) -> list:
        from .scalars import to_string
        names = self.alg.A.nodes
        return [[[names[i] for i in w], to_string(c)] for w, c in self.terms()]

    def __repr__(self):
        return f"NilElement({'+' if self.sign > 0 else '-'}, {self.mu}, {self.terms()})"


def _zero_outside(alg: NilAlgebra, mu: Content) -> NilElement:
    # an element of a negative weight space is 0; represent it at weight mu with no coordinates
    el = NilElement.__new__(NilElement)
    el.alg, el.sign, el.mu, el.vec = alg, 1, tuple(mu), ()
    return el


class TensorSeries:
    """Truncated sum over mu of (U^-)_{-mu} (x) (U^+)_mu, matrices over pivot bases."""

    def __init__(self, alg: NilAlgebra, comps: Dict[Content, Mat], cutoff: int, X=None):
        self.alg, self.cutoff, self.X = alg, cutoff, X
        self.comps = {mu: m for mu, m in comps.items() if not m.is_zero() or sum(mu) == 0}

    def component(self, mu: Content) -> Mat:
        m = self.comps.get(tuple(mu))
        if m is None:
            d = self.alg.dim(mu)
            return Mat(d, d)
        return m

    def _product(self, a: Content, ma: Mat, b: Content, mb: Mat) -> Mat:
        alg = self.alg
        lf = alg.mult_matrix(-1, a, b)
        le = alg.mult_matrix(1, a, b)
        return lf @ la.kron(ma, mb) @ le.T()

    def __mul__(self, other: "TensorSeries") -> "TensorSeries":
        cutoff = min(self.cutoff, other.cutoff)
        out: Dict[Content, Mat] = {}
        for a, ma in self.comps.items():
            for b, mb in other.comps.items():
                c = _add(a, b)
                if sum(c) > cutoff:
                    continue
                p = self._product(a, ma, b, mb)
                out[c] = p if c not in out else out[c] + p
        return TensorSeries(self.alg, out, cutoff)

    def inverse(self) -> "TensorSeries":
        alg = self.alg
        z = alg.zero()
        t0 = self.component(z)[0, 0]
        if t0.is_zero():
            raise NonUnitalLeadingTerm("component at 0 is not invertible")
        inv0 = t0.inverse()
        result: Dict[Content, Mat] = {z: Mat.diag([inv0])}
        for mu in contents_up_to(alg.n, self.cutoff, self.X):
            if sum(mu) == 0:
                continue
            d = alg.dim(mu)
            if d == 0:
                continue
            acc = Mat(d, d)
            for a, ma in self.comps.items():
                if sum(a) == 0:
                    continue
                b = _sub(mu, a)
                if any(x < 0 for x in b) or b not in result:
                    continue
                acc = acc + self._product(a, ma, b, result[b])
            result[mu] = acc.scale(-inv0)
        return TensorSeries(alg, result, self.cutoff, self.X)

    def bar(self) -> "TensorSeries":
        # pivot F- and E-words are bar invariant
        return TensorSeries(self.alg, {mu: m.bar() for mu, m in self.comps.items()}, self.cutoff, self.X)

    def first_difference(self, other: "TensorSeries"):
        for mu in sorted(set(self.comps) | set(other.comps), key=lambda c: (sum(c), c)):
            diff = self.component(mu).first_difference(other.component(mu))
            if diff is not None:
                return (mu,) + diff
        return None

    def __eq__(self, other):
        return isinstance(other, TensorSeries) and self.first_difference(other) is None

    def to_json(self) -> dict:
        from .scalars import to_string
        out = {}
        for mu in sorted(self.comps, key=lambda c: (sum(c), c)):
            out[",".join(map(str, mu))] = [[to_string(x) for x in row] for row in self.comps[mu].to_dense()]
        return out


# ---------------------------------------------------------------------------
# mixed elements: sums of E-part * t_lambda * F-part

Key = Tuple[Content, Tuple[int, ...], Content]


class MixedElement:
    """Element of U_q g' in the normal form U^+ U^0 U^-.

    terms maps (mu_plus, lam, nu_minus) to a matrix C with
    element = sum_{s,r} C[s,r] E_{s} t_lam F_{r} over pivot bases.
    lam is an integer root-lattice vector.
    """

    __slots__ = ("alg", "terms")

    def __init__(self, alg: NilAlgebra, terms: Optional[Dict[Key, Mat]] = None):
        self.alg = alg
        self.terms: Dict[Key, Mat] = {}
        for k, m in (terms or {}).items():
            self._acc(k, m)

    def _acc(self, key: Key, m: Mat) -> None:
        if m.is_zero():
            return
        cur = self.terms.get(key)
        m = m if cur is None else cur + m
        if m.is_zero():
            self.terms.pop(key, None)
        else:
            self.terms[key] = m

    @staticmethod
    def scalar(alg: NilAlgebra, c) -> "MixedElement":
        z = alg.zero()
        return MixedElement(alg, {(z, z, z): Mat.diag([S(c)])})

    @staticmethod
    def from_nil(u: NilElement) -> "MixedElement":
        alg = u.alg
        z = alg.zero()
        if u.sign > 0:
            m = Mat(len(u.vec), 1)
            for s, x in enumerate(u.vec):
                m[s, 0] = x
            return MixedElement(alg, {(u.mu, z, z): m})
        m = Mat(1, len(u.vec))
        for r, x in enumerate(u.vec):
            m[0, r] = x
        return MixedElement(alg, {(z, z, u.mu): m})

    @staticmethod
    def E(alg: NilAlgebra, i: int) -> "MixedElement":
        return MixedElement.from_nil(NilElement.gen(alg, i, 1))

    @staticmethod
    def F(alg: NilAlgebra, i: int) -> "MixedElement":
        return MixedElement.from_nil(NilElement.gen(alg, i, -1))

    @staticmethod
    def t(alg: NilAlgebra, lam: Sequence[int]) -> "MixedElement":
        z = alg.zero()
        return MixedElement(alg, {(z, tuple(int(x) for x in lam), z): Mat.diag([ONE])})

    def copy(self) -> "MixedElement":
        return MixedElement(self.alg, dict(self.terms))

    def __add__(self, other: "MixedElement") -> "MixedElement":
        out = self.copy()
        for k, m in other.terms.items():
            out._acc(k, m)
        return out

    def __neg__(self):
        return MixedElement(self.alg, {k: -m for k, m in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "MixedElement":
        c = S(c)
        if c.is_zero():
            return MixedElement(self.alg)
        return MixedElement(self.alg, {k: m.scale(c) for k, m in self.terms.items()})

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        if not isinstance(other, MixedElement):
            return NotImplemented
        return self.terms == other.terms

    # left multiplication by generators

    def lmul_E(self, j: int) -> "MixedElement":
        alg = self.alg
        out = MixedElement(alg)
        for (mu, lam, nu), C in self.terms.items():
            out._acc((_add(mu, alg.simple(j)), lam, nu), alg.left_e((j,), mu) @ C)
        return out

    def lmul_t(self, lam2: Sequence[int]) -> "MixedElement":
        alg = self.alg
        out = MixedElement(alg)
        lam2 = tuple(int(x) for x in lam2)
        for (mu, lam, nu), C in self.terms.items():
            out._acc((mu, _add(lam, lam2), nu), C.scale(alg.qform(lam2, mu)))
        return out

    def lmul_F(self, j: int) -> "MixedElement":
        alg = self.alg
        aj = alg.simple(j)
        qj = alg.qi(j)
        inv = (qj - qj.inverse()).inverse()
        out = MixedElement(alg)
        for (mu, lam, nu), C in self.terms.items():
            lf = alg.left_f((j,), nu)
            out._acc((mu, lam, _add(nu, aj)), (C @ lf.T()).scale(alg.qform(lam, aj)))
            if mu[j] > 0:
                lower = _sub(mu, aj)
                out._acc((lower, _add(lam, aj), nu), (alg.deriv("r", j, mu) @ C).scale(-inv))
                c = inv * alg.qform(aj, lower).inverse()
                out._acc((lower, _sub(lam, aj), nu), (alg.deriv("l", j, mu) @ C).scale(c))
        return out

    def lmul_eword_element(self, mu0: Content, vec: Sequence[Scalar]) -> "MixedElement":
        """Left multiplication by the U^+ element sum_s vec[s] E_{pivot s} of weight mu0."""
        alg = self.alg
        out = MixedElement(alg)
        sp0 = alg.space(mu0)
        for (mu, lam, nu), C in self.terms.items():
            acc = None
            for s, w in enumerate(sp0.e_pivot_words()):
                if vec[s].is_zero():
                    continue
                part = alg.left_e(w, mu).scale(vec[s])
                acc = part if acc is None else acc + part
            if acc is not None:
                out._acc((_add(mu, mu0), lam, nu), acc @ C)
        return out

    def __mul__(self, other):
        if not isinstance(other, MixedElement):
            return self.scale(other)
        alg = self.alg
        out = MixedElement(alg)
        fcache: Dict[Word, MixedElement] = {}
        for (mu, lam, nu), C in self.terms.items():
            fwords = alg.space(nu).f_pivot_words()
            cols: Dict[int, Dict[int, Scalar]] = {}
            for s, row in enumerate(C.rows):
                for r, x in row.items():
                    cols.setdefault(r, {})[s] = x
            for r, col in cols.items():
                w = fwords[r]
                y = fcache.get(w)
                if y is None:
                    y = other
                    for letter in reversed(w):
                        y = y.lmul_F(letter)
                    fcache[w] = y
                y = y.lmul_t(lam)
                vec = [col.get(s, ZERO) for s in range(alg.dim(mu))]
                out = out + y.lmul_eword_element(mu, vec)
        return out

    __rmul__ = scale

    def uplus_part(self) -> Optional[NilElement]:
        """Return the element as a NilElement if it lies in U^+, else None."""
        z = self.alg.zero()
        if not self.terms:
            return None
        if len(self.terms) != 1:
            return None
        (mu, lam, nu), C = next(iter(self.terms.items()))
        if lam != z or nu != z:
            return None
        return NilElement(self.alg, 1, mu, C.col(0))

    def to_uplus(self, mu: Content) -> NilElement:
        if not self.terms:
            return NilElement.zero(self.alg, mu)
        u = self.uplus_part()
        if u is None or u.mu != tuple(mu):
            raise NotInUPlus(f"element does not lie in (U^+)_{mu}")
        return u

    def weight_terms(self):
        for (mu, lam, nu), C in sorted(self.terms.items()):
            yield mu, lam, nu, C


def divided_power_word(alg: NilAlgebra, j: int, n: int) -> Scalar:
    return qfact(n, alg.A.eps[j]).inverse()


def _power(x: MixedElement, n: int, one: MixedElement) -> MixedElement:
    out = one
    for _ in range(n):
        out = out * x
    return out


class BraidAction:
    """Lusztig's automorphisms Ad(T_j) and their inverses on the mixed algebra."""

    def __init__(self, alg: NilAlgebra):
        self.alg = alg
        self._gen: Dict[tuple, MixedElement] = {}
        self._words: Dict[tuple, MixedElement] = {}

    def _image(self, j: int, kind: str, i: int, inverse: bool) -> MixedElement:
        key = (j, kind, i, inverse)
        m = self._gen.get(key)
        if m is not None:
            return m
        alg = self.alg
        A = alg.A
        one = MixedElement.scalar(alg, 1)
        qj = alg.qi(j)
        aj = alg.simple(j)
        neg_aj = tuple(-x for x in aj)
        E, F = MixedElement.E, MixedElement.F
        if i == j:
            if kind == "E":
                m = (F(alg, j) * MixedElement.t(alg, aj)) if not inverse else (MixedElement.t(alg, neg_aj) * F(alg, j))
            else:
                m = (MixedElement.t(alg, neg_aj) * E(alg, j)) if not inverse else (E(alg, j) * MixedElement.t(alg, aj))
            m = -m
        else:
            mm = -A.a[j][i]
            gen = E if kind == "E" else F
            Xj, Xi = gen(alg, j), gen(alg, i)
            m = MixedElement(alg)
            for r in range(mm + 1):
                sign = -1 if r % 2 else 1
                div = (qfact(r, A.eps[j]) * qfact(mm - r, A.eps[j])).inverse()
                if kind == "E":
                    c = qj ** (-r)
                    if not inverse:
                        term = _power(Xj, mm - r, one) * Xi * _power(Xj, r, one)
                    else:
                        term = _power(Xj, r, one) * Xi * _power(Xj, mm - r, one)
                else:
                    c = qj ** r
                    if not inverse:
                        term = _power(Xj, r, one) * Xi * _power(Xj, mm - r, one)
                    else:
                        term = _power(Xj, mm - r, one) * Xi * _power(Xj, r, one)
                m = m + term.scale(c * div * sign)
        self._gen[key] = m
        return m

    def _t_image(self, j: int, lam: Sequence[int]) -> MixedElement:
        return MixedElement.t(self.alg, tuple(int(x) for x in self.alg.A.reflect(j, lam)))

    def _eword(self, j: int, word: Word, inverse: bool, kind: str) -> MixedElement:
        key = (j, word, inverse, kind)
        m = self._words.get(key)
        if m is not None:
            return m
        if not word:
            m = MixedElement.scalar(self.alg, 1)
        else:
            m = self._eword(j, word[:-1], inverse, kind) * self._image(j, kind, word[-1], inverse)
        self._words[key] = m
        return m

    def apply(self, j: int, x: MixedElement, inverse: bool = False) -> MixedElement:
        alg = self.alg
        out = MixedElement(alg)
        for (mu, lam, nu), C in x.terms.items():
            ewords = alg.space(mu).e_pivot_words()
            fwords = alg.space(nu).f_pivot_words()
            tl = self._t_image(j, lam)
            for s, row in enumerate(C.rows):
                if not row:
                    continue
                left = self._eword(j, ewords[s], inverse, "E") * tl
                for r, c in row.items():
                    out = out + (left * self._eword(j, fwords[r], inverse, "F")).scale(c)
        return out

    def ad(self, word: Sequence[int], x: MixedElement, inverse: bool = False) -> MixedElement:
        """Ad(T_{w1} ... T_{wk})(x), or its inverse when inverse=True."""
        if not inverse:
            for j in reversed(word):
                x = self.apply(j, x)
        else:
            for j in word:
                x = self.apply(j, x, inverse=True)
        return x

    def ad_generator(self, word: Sequence[int], kind: str, i, inverse: bool = False) -> MixedElement:
        alg = self.alg
        if kind == "E":
            x = MixedElement.E(alg, i)
        elif kind == "F":
            x = MixedElement.F(alg, i)
        elif kind == "t":
            x = MixedElement.t(alg, i)
        else:
            raise ValueError(kind)
        return self.ad(word, x, inverse)


def check_reduced(A: GCM, word: Sequence[int]) -> None:
    """A word is reduced iff each prefix sends the next simple root to a positive root."""
    for k in range(len(word)):
        img = A.weyl_act(word[:k], A.simple(word[k]))
        if not all(x >= 0 for x in img):
            raise NotReduced(f"word {list(word)} is not reduced")


def lusztig_ad(alg: NilAlgebra, word: Sequence[int], kind: str, i, inverse: bool = False,
               action: Optional[BraidAction] = None) -> MixedElement:
    check_reduced(alg.A, word)
    action = action or BraidAction(alg)
    return action.ad_generator(word, kind, i, inverse)


def serre_element(alg: NilAlgebra, i: int, j: int, sign: int = 1) -> NilElement:
    """Ser_ij(E_i, E_j) (or the F version) as a NilElement."""
    A = alg.A
    m = 1 - A.a[i][j]
    mu = tuple(m * (k == i) + (k == j) for k in range(alg.n))
    out = NilElement.zero(alg, mu, sign)
    for r in range(m + 1):
        c = qbinom(m, r, A.eps[i])
        if r % 2:
            c = -c
        w = (i,) * (m - r) + (j,) + (i,) * r
        out = out + NilElement.word(alg, w, sign).scale(c)
    return out


def fundamental_lemma_check(alg: NilAlgebra, word: Sequence[int], tau: Sequence[int], i: int,
                            action: Optional[BraidAction] = None) -> Tuple[bool, NilElement]:
    """D_i^{(r)}(Ad(T_X)(E_i)) is fixed by op composed with tau."""
    action = action or BraidAction(alg)
    img = action.ad_generator(word, "E", i)
    u = img.uplus_part()
    if u is None:
        raise NotInUPlus("Ad(T_X)(E_i) is not in U^+")
    d = u.dr(i)
    tmu = [0] * alg.n
    for k, x in enumerate(d.mu):
        tmu[tau[k]] = x
    out = NilElement.zero(alg, tuple(tmu))
    for w, c in d.terms():
        out = out + NilElement.word(alg, tuple(tau[x] for x in reversed(w))).scale(c)
    return out == d, d
