import pytest

from qsp import kmatrix as km
from qsp import reps
from qsp import verify as vf
from qsp.rootdata import validate_gcm
from qsp.satake import ParamSet, prime_involution, validate_gsat, validate_params
from qsp.scalars import ONE, ZERO, parse, qpow, root_order_ctx
from qsp.uqnil import NilAlgebra


class Setup:
    def __init__(self, rows, X, tau, gamma, sigma, cutoff):
        self.A = validate_gcm(rows)
        self.d = validate_gsat(self.A, X, tau)
        self.p = validate_params(self.d, [parse(g) for g in gamma], [parse(s) for s in sigma])
        self.alg = NilAlgebra(self.A)
        self.cutoff = cutoff
        self.qk = km.quasi_k(self.d, self.p, cutoff, self.alg)

    def ctx(self, Y=None, eta=None, **kw):
        spec = km.standard_k(self.d, self.p, self.cutoff, self.qk)
        if Y is not None:
            spec = km.modified_k(spec, Y, eta)
        return vf.KContext.build(spec, self.alg, **kw)


@pytest.fixture(scope="module", params=[("q^-2", "1"), ("1", "0")], ids=["sigma1", "sigma0"])
def sl2(request):
    with root_order_ctx(4):
        g, s = request.param
        yield Setup([[2]], [], [0], [g], [s], 6)


def V(n):
    return reps.sl2_module(n)


def test_yang_baxter_and_control(D4):
    alg = NilAlgebra(validate_gcm([[2]]))
    mods = [V(1)] * 3
    assert vf.check_yang_baxter(alg, mods, 4).passed
    bad = vf.check_yang_baxter(alg, mods, 4, vf.corrupt_theta_simple)
    assert not bad.passed and bad.witness["where"]


def test_quasi_r_intertwining(D4):
    alg = NilAlgebra(validate_gcm([[2]]))
    assert vf.check_quasi_r_intertwine(alg, V(3), V(3), 6).passed
    assert not vf.check_quasi_r_intertwine(alg, V(1), V(2), 6, replace_by_one=True).passed


def test_quasi_k_intertwining(sl2):
    with root_order_ctx(4):
        for n in range(5):
            assert vf.check_quasi_k_intertwining(sl2.qk, V(n)).passed
        pp = prime_involution(sl2.d, sl2.p)
        wrong = ParamSet(pp.gamma, tuple(s + ONE for s in pp.sigma))
        assert not vf.check_quasi_k_intertwining(sl2.qk, V(2), wrong).passed


def test_coproduct_quasi_k(sl2):
    with root_order_ctx(4):
        for M, N in ((V(1), V(1)), (V(2), V(1))):
            assert vf.check_coproduct_quasi_k(sl2.qk, M, N).passed
        if not sl2.p.gamma[0].is_one():
            assert not vf.check_coproduct_quasi_k(sl2.qk, V(1), V(1), sl2.p.gamma).passed


@pytest.mark.parametrize("aux", [None, ([0], [0])], ids=["X", "I"])
def test_k_matrix_identities(sl2, aux):
    with root_order_ctx(4):
        ctx = sl2.ctx(*(aux or ()))
        for M in (V(1), V(2)):
            assert vf.check_k_intertwining(ctx, M).passed
        for M, N in ((V(1), V(1)), (V(1), V(2))):
            assert vf.check_twist_pair(ctx, M, N).passed
            assert vf.check_coproduct_k(ctx, M, N).passed
            assert vf.check_twisted_re(ctx, M, N).passed
        assert vf.check_cylindrical_braid(ctx, [V(1), V(1)]).passed


def test_k_matrix_controls(sl2):
    with root_order_ctx(4):
        M, N = V(1), V(2)
        p = sl2.p
        img = ParamSet(p.gamma, tuple(s + ONE for s in p.sigma))
        assert not vf.check_k_intertwining(sl2.ctx(), M, img).passed
        assert not vf.check_twist_pair(sl2.ctx(omega=False), M, N).passed
        assert not vf.check_coproduct_k(sl2.ctx([0], [0], drop_kappa=True), M, N).passed
        assert not vf.check_twisted_re(sl2.ctx(), M, N, wrong_leg=True).passed
        assert not vf.check_cylindrical_braid(sl2.ctx(), [M, N], k_factor="one").passed


def test_cylindrical_braid_random_words(sl2):
    with root_order_ctx(4):
        rep = vf.check_cylindrical_braid(sl2.ctx(), [V(1), V(1), V(1)], random_words=3, seed=7)
        assert rep.passed


def test_general_sigma_check(sl2):
    with root_order_ctx(4):
        assert vf.check_general_sigma(sl2.qk, 4).passed


def test_rx_factorization(D4):
    A = validate_gcm([[2]])
    aux = validate_gsat(A, [0], [0])
    alg = NilAlgebra(A)
    assert vf.check_rx_factorization(V(1), V(2), aux, alg, 6).passed


@pytest.fixture(scope="module")
def a2_flip():
    with root_order_ctx(6):
        s = Setup([[2, -1], [-1, 2]], [], [1, 0], ["1", "1"], ["0", "0"], 4)
        W = reps.minuscule_module(s.A, reps.fundamental_weight(s.A, 0))
        Wd = reps.minuscule_module(s.A, reps.fundamental_weight(s.A, 1))
        yield s, W, Wd


@pytest.mark.parametrize("aux", [None, ([0, 1], [1, 0])], ids=["X", "I"])
def test_rank_two_flip(a2_flip, aux):
    s, W, Wd = a2_flip
    with root_order_ctx(6):
        ctx = s.ctx(*(aux or ()))
        for M in (W, Wd):
            assert vf.check_quasi_k_intertwining(s.qk, M).passed
            assert vf.check_k_intertwining(ctx, M).passed
        for M, N in ((W, W), (W, Wd)):
            assert vf.check_twist_pair(ctx, M, N).passed
            assert vf.check_coproduct_k(ctx, M, N).passed
            assert vf.check_twisted_re(ctx, M, N).passed
        assert vf.check_cylindrical_braid(ctx, [W, Wd]).passed


def test_rank_two_controls(a2_flip):
    s, W, Wd = a2_flip
    with root_order_ctx(6):
        assert not vf.check_twist_pair(s.ctx(omega=False), W, Wd).passed
        assert not vf.check_coproduct_k(s.ctx([0, 1], [1, 0], drop_kappa=True), W, Wd).passed


def test_report_shape(D4):
    alg = NilAlgebra(validate_gcm([[2]]))
    rep = vf.check_yang_baxter(alg, [V(1)] * 3, 4, vf.corrupt_theta_simple)
    js = rep.to_json()
    assert set(js) == {"name", "inputs", "pass", "witness"}
    assert set(js["witness"]) == {"where", "position", "lhs", "rhs"}
    assert parse(js["witness"]["lhs"]) != parse(js["witness"]["rhs"])
    ctl = vf.negative_control("control", rep)
    assert ctl.passed and ctl.witness == rep.witness
    assert rep.line().startswith("FAIL")
