import pytest

from qsp import reps
from qsp import verify as vf
from qsp.scalars import ONE, qpow, root_order_ctx


@pytest.mark.parametrize("ell", [2, 3, 4])
@pytest.mark.parametrize("grading", ["homogeneous", "principal"])
def test_inversion_congruence(D4, ell, grading):
    rep = vf.check_inversion_congruence(ell, qpow(1), grading)
    assert rep.passed, rep.witness


@pytest.mark.parametrize("lam", ["q^2", "-q^-1", "3"])
def test_inversion_congruence_other_lambda(D4, lam):
    from qsp.scalars import parse
    for grading in ("homogeneous", "principal"):
        assert vf.check_inversion_congruence(3, parse(lam), grading).passed


def test_setup_shapes(D4):
    hom = vf.affine_setup(2, qpow(1), "homogeneous")
    assert hom.aux.X == (1,) and hom.scaling == (1, 0) and not hom.g_quadratic
    assert hom.g_char == (qpow(-2), ONE)
    pri = vf.affine_setup(2, qpow(1), "principal")
    assert pri.aux.X == () and pri.aux.tau == (1, 0) and pri.g_quadratic
    assert pri.g_char == (-qpow(-1), -qpow(-1))


def test_wrong_g_is_detected(D4, monkeypatch):
    real = vf.affine_setup

    def skewed(ell, lam, grading="principal"):
        st = real(ell, lam, grading)
        st.g_char = tuple(x * qpow(1) for x in st.g_char)
        return st

    monkeypatch.setattr(vf, "affine_setup", skewed)
    assert not vf.check_inversion_congruence(2, qpow(1), "homogeneous").passed
    assert not vf.check_inversion_congruence(2, qpow(1), "principal").passed


def test_inverted_leg_is_an_involution(D4):
    M = reps.affine_eval_module(3, qpow(1), "principal")
    twice = vf.invert_leg(vf.invert_leg(M, (1, 0)), (1, 0))
    assert twice.zdeg == M.zdeg
    assert all(a == b for a, b in zip(twice.E, M.E))
    assert reps.check_relations(vf.invert_leg(M, (1, 0))) == []


def test_window_certification(D4):
    with pytest.raises(vf.CutoffInsufficientForWindow):
        vf.check_spectral_re(2, qpow(1), "principal", window=6, cutoff=8)
    # homogeneous evaluation modules have a z-free node, nothing is certified
    with pytest.raises(vf.CutoffInsufficientForWindow):
        vf.check_spectral_re(2, qpow(1), "homogeneous", window=1, cutoff=4)


def test_spectral_re_small_window(D4):
    rep = vf.check_spectral_re(2, qpow(1), "principal", window=2, cutoff=4)
    assert rep.passed, rep.witness
    assert rep.window == {"z": [0, 2], "y": [-2, 2], "height": 4}
    ctl = vf.check_spectral_re(2, qpow(1), "principal", window=2, cutoff=4, invert=False)
    assert not ctl.passed and ctl.witness["where"].startswith("y^")


def test_boundary_intertwining(D4):
    assert vf.check_boundary_intertwining(2, qpow(1), "principal", window=2, cutoff=4).passed
    assert not vf.check_boundary_intertwining(2, qpow(1), "principal", window=2, cutoff=4, invert=False).passed


def test_spectral_re_other_gamma(D4):
    rep = vf.check_spectral_re(2, qpow(1), "principal", window=2, cutoff=4, gamma=("q^-2", "1"))
    assert rep.passed, rep.witness
