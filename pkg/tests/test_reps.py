from fractions import Fraction

import pytest

from qsp import linalg as la
from qsp import reps
from qsp.linalg import Mat
from qsp.rootdata import validate_gcm
from qsp.scalars import ONE, ZERO, qint, qpow, root_order_ctx
from qsp.verify import character_diag, root_offsets

A2 = validate_gcm([[2, -1], [-1, 2]])
A3 = validate_gcm([[2, -1, 0], [-1, 2, -1], [0, -1, 2]])
B2 = validate_gcm([[2, -2], [-1, 2]])


def finite_modules():
    out = [reps.sl2_module(n) for n in range(5)]
    out.append(reps.sl2_module(2, eps=2))
    out += [reps.minuscule_module(A2, reps.fundamental_weight(A2, k)) for k in range(2)]
    out += [reps.minuscule_module(A3, reps.fundamental_weight(A3, k)) for k in range(3)]
    out.append(reps.minuscule_module(B2, reps.fundamental_weight(B2, 0)))
    return out


def test_relations_hold(D4):
    for M in finite_modules():
        assert reps.check_relations(M) == [], M.name
    V = reps.minuscule_module(A2, reps.fundamental_weight(A2, 0))
    assert reps.check_relations(reps.tensor_many([V, V, V])) == []
    assert reps.check_relations(reps.tensor(reps.sl2_module(1), reps.sl2_module(2))) == []


@pytest.mark.parametrize("ell", [1, 2, 3, 4])
@pytest.mark.parametrize("grading", ["principal", "homogeneous"])
def test_evaluation_modules(D4, ell, grading):
    M = reps.affine_eval_module(ell, qpow(1), grading)
    assert reps.check_relations(M) == []
    assert reps.check_relations(reps.pullback_omega_tau(M, [1, 0])) == []
    assert reps.check_relations(reps.scale_generators(M, [qpow(2), qpow(-1)])) == []


def test_broken_module_is_reported(D4):
    M = reps.sl2_module(2)
    M.E[0] = M.E[0].scale(qpow(1))
    assert reps.check_relations(M)


def test_minuscule_dimensions(D4):
    assert reps.minuscule_module(A3, reps.fundamental_weight(A3, 1)).dim == 6
    assert reps.minuscule_module(B2, reps.fundamental_weight(B2, 0)).dim == 4
    with pytest.raises(reps.ModuleError):
        reps.minuscule_module(B2, reps.fundamental_weight(B2, 1))


def test_weyl_operator_on_v1(D4):
    q = qpow(1)
    T = reps.quantum_weyl_op(reps.sl2_module(1), 0)
    assert T == Mat.from_dense([[ZERO, ONE], [-q, ZERO]])


def test_weyl_operator_moves_weights(D4):
    for M in finite_modules():
        A = M.A
        for j in range(A.n):
            T = reps.quantum_weyl_op(M, j)
            assert la.rank(T) == M.dim
            for r, row in enumerate(T.rows):
                for c in row:
                    assert M.coroots(r) == tuple(A.coroot_value(A.reflect(j, M.weights[c]), k)
                                                 for k in range(A.n))


def test_weyl_braid_relations(D4):
    V = reps.minuscule_module(A3, reps.fundamental_weight(A3, 1))
    assert reps.weyl_word_op(V, [0, 1, 0]) == reps.weyl_word_op(V, [1, 0, 1])
    assert reps.weyl_word_op(V, [0, 2]) == reps.weyl_word_op(V, [2, 0])
    W = reps.minuscule_module(B2, reps.fundamental_weight(B2, 0))
    assert reps.weyl_word_op(W, [0, 1, 0, 1]) == reps.weyl_word_op(W, [1, 0, 1, 0])


def test_clebsch_gordan(D4):
    M = reps.tensor(reps.sl2_module(2), reps.sl2_module(1))
    hw = reps.highest_weight_vectors(M)
    assert len(hw) == 2
    dims = sorted(reps.highest_weight_submodule(M, v)[0].dim for v in hw)
    assert dims == [2, 4]
    sub, B = reps.highest_weight_submodule(M, hw[0])
    for i in range(1):
        assert M.E[i] @ B == B @ sub.E[i]
        assert M.F[i] @ B == B @ sub.F[i]


def test_not_highest_weight(D4):
    M = reps.sl2_module(1)
    with pytest.raises(reps.NotHighestWeight):
        reps.highest_weight_submodule(M, [ZERO, ONE])


def test_divided_powers(D4):
    M = reps.sl2_module(3)
    F = M.F[0]
    assert reps.divided_power(M, -1, 0, 2).scale(qint(2)) == F @ F
    assert reps.divided_power(M, 1, 0, 4).is_zero()


@pytest.mark.parametrize("ell", [2, 3, 4])
def test_root_offsets_project_to_weights(D4, ell):
    A = validate_gcm([[2, -2], [-2, 2]], [1, 1])
    M = reps.affine_eval_module(ell, qpow(1), "principal", A)
    offs = root_offsets(M)
    for k, o in enumerate(offs):
        classical = Fraction(o[1] - o[0])
        assert M.weights[k][1] - M.weights[0][1] == classical
    # a character with gamma_0 gamma_1 = 1 only sees classical weights
    c = qpow(2)
    D = character_diag(M, [c.inverse(), c])
    for k, o in enumerate(offs):
        assert D[k, k] == c ** (o[1] - o[0])


def test_character_scaling_conjugates_generators(D4):
    # evaluation modules carry no d-action, so only delta-trivial characters are diagonal
    M = reps.affine_eval_module(3, qpow(1), "principal")
    vals = [qpow(3), qpow(-3)]
    D = character_diag(M, vals)
    Di = la.inverse(D)
    N = reps.scale_generators(M, vals)
    for i in range(2):
        assert D @ M.E[i] @ Di == N.E[i]
        assert D @ M.F[i] @ Di == N.F[i]


def test_cutoff_guard(D4):
    from qsp.uqnil import NilAlgebra
    A = validate_gcm([[2]])
    theta = NilAlgebra(A).quasi_r(2)
    M = reps.sl2_module(3, A=A)
    with pytest.raises(reps.CutoffTooSmall):
        reps.eval_series(M, M, theta)
