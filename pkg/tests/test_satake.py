import pytest
from hypothesis import given, strategies as st

from qsp import satake as sk
from qsp.rootdata import validate_gcm
from qsp.scalars import ONE, ZERO, S, qpow, root_order_ctx, vpow

SL2 = validate_gcm([[2]])
A2 = validate_gcm([[2, -1], [-1, 2]])
A3 = validate_gcm([[2, -1, 0], [-1, 2, -1], [0, -1, 2]])
AFF = validate_gcm([[2, -2], [-2, 2]])
AFF2 = validate_gcm([[2, -1, -1], [-1, 2, -1], [-1, -1, 2]])


def test_split_diagram():
    d = sk.validate_gsat(SL2, [], [0])
    assert d.i_ns == (0,) and d.i_eq == ()
    assert d.restricted_rank == 1


def test_quasi_split_a3():
    d = sk.validate_gsat(A3, [], [2, 1, 0])
    assert d.i_eq == (0,)
    assert d.i_ns == (1,)
    assert d.restricted_rank == 2


def test_a3_with_middle_node():
    d = sk.validate_gsat(A3, [1], [2, 1, 0])
    assert d.theta(A3.simple(0)) == (0, -1, -1)
    assert d.describe()["w_X"] == ["1"]


def test_unsuitable_node():
    with pytest.raises(sk.UnsuitableNode) as info:
        sk.validate_gsat(A2, [0], [0, 1])
    assert (info.value.node, info.value.partner) == (1, 0)
    with pytest.raises(sk.SatakeErrors) as many:
        sk.validate_gsat(A3, [1], [0, 1, 2])
    assert sorted(e.node for e in many.value.errors) == [0, 2]


@pytest.mark.parametrize("A, X, tau, err", [
    (AFF, [0, 1], [0, 1], sk.NotFiniteTypeX),
    (A2, [0, 1], [0, 1], sk.TauNotOppositionOnX),
    (A2, [0], [1, 0], sk.TauNotStabilizingX),
    (AFF2, [], [1, 2, 0], sk.TauNotInvolutive),
    (A3, [], [1, 0, 2], sk.TauNotAutomorphism),
])
def test_invalid_diagrams(A, X, tau, err):
    with pytest.raises(err):
        sk.validate_gsat(A, X, tau)


def test_affine_principal_diagram():
    d = sk.validate_gsat(AFF, [], [1, 0])
    assert d.restricted_rank == 1
    aux, scaling = sk.canonical_minimal_affine(AFF, [1, 0], 0)
    assert aux.X == () and aux.tau == (1, 0) and scaling == (1, 1)
    aux, scaling = sk.canonical_minimal_affine(AFF, [0, 1], 0)
    assert aux.X == (1,) and scaling == (1, 0)


def test_parameter_errors(D4):
    d = sk.validate_gsat(A3, [1], [2, 1, 0])
    with pytest.raises(sk.GammaNotOneOnX):
        sk.validate_params(d, [1, qpow(-2), 1], [0, 0, 0])
    with pytest.raises(sk.SigmaOutsideIns):
        sk.validate_params(d, [1, 1, 1], [1, 0, 0])
    q = sk.validate_gsat(A3, [], [2, 1, 0])
    with pytest.raises(sk.GammaOrbitMismatch):
        sk.validate_params(q, [1, 1, qpow(1)], [0, 0, 0])
    split = sk.validate_gsat(A2, [], [0, 1])
    with pytest.raises(sk.SigmaParityViolation):
        sk.validate_params(split, [1, 1], [1, 0])
    with pytest.raises(sk.GammaZero):
        sk.validate_params(split, [0, 1], [0, 0])
    with pytest.raises(sk.SatakeErrors):
        sk.validate_params(split, [0, 1], [1, 0])


def test_sl2_parameters_allowed(D4):
    d = sk.validate_gsat(SL2, [], [0])
    p = sk.validate_params(d, [qpow(-2)], [1])
    assert p.gamma == (qpow(-2),)


laurent = st.builds(lambda c, k: S(c) * vpow(k), st.integers(-3, 3).filter(bool), st.integers(-8, 8))


@given(st.tuples(laurent, laurent, laurent), st.tuples(laurent, laurent, laurent))
def test_prime_is_an_involution(g, s):
    with root_order_ctx(4):
        d = sk.validate_gsat(A3, [1], [2, 1, 0])
        p = sk.ParamSet(tuple(g), tuple(s))
        assert sk.prime_involution(d, sk.prime_involution(d, p)) == p


def test_prime_signs(D4):
    # nodes adjacent to a one-node X carry a sign from 2 rho^vee_X
    d = sk.validate_gsat(A3, [1], [2, 1, 0])
    out = sk.prime_tuple(d, [qpow(1), ONE, qpow(2)])
    assert out == (-qpow(-2), ONE, -qpow(-1))


def test_tau_compatible_aux(D4):
    main = sk.validate_gsat(SL2, [], [0])
    assert sk.tau_compatible(main, [0], [0]).X == (0,)
    principal = sk.validate_gsat(AFF, [], [1, 0])
    with pytest.raises(sk.NotTauStable):
        sk.tau_compatible(principal, [0], [0, 1])
