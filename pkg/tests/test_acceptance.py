"""Acceptance criteria 1-10, exact.  Each criterion prints one PASS/FAIL line.

Run standalone with  python3 tests/test_acceptance.py  or through pytest,
where the lines appear in the terminal summary.
"""
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

import pytest

from qsp import kmatrix as km
from qsp import linalg as la
from qsp import reps
from qsp import rootdata as rd
from qsp import verify as vf
from qsp.cli import main as cli_main
from qsp.satake import ParamSet, prime_involution, validate_gsat, validate_params
from qsp.scalars import ONE, parse, root_order_ctx
from qsp.uqnil import BraidAction, MixedElement, NilAlgebra, fundamental_lemma_check

GOLDEN = Path(__file__).parent / "golden" / "quasik_sl2.json"
LINES = {}

A1_ROWS = [[2, -1, 0, -3], [-1, 2, -3, 0], [0, -3, 2, -1], [-3, 0, -1, 2]]
A2_ROWS = [[2, -1, 0, -1], [-9, 2, -1, 0], [0, -1, 2, -9], [-1, 0, -1, 2]]
SL2_PARAMS = [("q^-2", "1"), ("1", "0")]


class Tally:
    """Collects named sub-results for one criterion."""

    def __init__(self):
        self.items = []

    def add(self, label, ok, witness=None):
        self.items.append((label, bool(ok), witness))

    def report(self, rep):
        self.add(rep.name, rep.passed, rep.witness)

    def control(self, rep):
        # a corrupted identity must fail and say where
        self.add("control " + rep.name, not rep.passed and rep.witness is not None, rep.witness)

    @property
    def failures(self):
        return [(label, w) for label, ok, w in self.items if not ok]


def sl2_setup(gamma, sigma, cutoff=6):
    A = rd.validate_gcm([[2]])
    d = validate_gsat(A, [], [0])
    p = validate_params(d, [parse(gamma)], [parse(sigma)])
    alg = NilAlgebra(A)
    return A, d, p, alg, km.quasi_k(d, p, cutoff, alg)


def kctx(d, p, qk, alg, aux=None, **kw):
    spec = km.standard_k(d, p, qk.cutoff, qk)
    if aux is not None:
        spec = km.modified_k(spec, *aux)
    return vf.KContext.build(spec, alg, **kw)


# ---------------------------------------------------------------------------

def criterion_1(t):
    for rows, expect_zeta, expect_exists, expect_kernel in ((A1_ROWS, 1, True, (1, 1, 1, 1)),
                                                          (A2_ROWS, -1, False, (1, 3, -3, -1))):
        A = rd.validate_gcm(rows)
        zeta, exists = rd.tau_compatible_scaling_exists(A, [3, 2, 1, 0])
        t.add(f"zeta/exists {expect_kernel}", (zeta, exists) == (expect_zeta, expect_exists), (zeta, exists))
        ker = rd.basic_imaginary_root(A)
        t.add(f"kernel {expect_kernel}", ker == expect_kernel, {"computed": list(ker)})


def criterion_2(t):
    # integral powers of q suffice for Theta itself
    for rows, D in (([[2]], 1), ([[2, -1], [-1, 2]], 1), ([[2, -2], [-2, 2]], 1)):
        with root_order_ctx(D):
            alg = NilAlgebra(rd.validate_gcm(rows))
            theta = alg.quasi_r(8)
            for i in range(alg.n):
                qi = alg.qi(i)
                # Gram dual of the single word: 1 / <F_i, E_i>
                gram = alg.free_gram(alg.simple(i))[0, 0]
                ok = theta.component(alg.simple(i))[0, 0] == gram.inverse() == qi.inverse() - qi
                t.add(f"Theta_alpha_{i} {rows}", ok)
            t.add(f"Theta^-1 = bar(Theta) {rows}", theta.inverse() == theta.bar(),
                  theta.inverse().first_difference(theta.bar()))
    with root_order_ctx(4):
        A = rd.validate_gcm([[2]])
        t.report(vf.check_quasi_r_intertwine(NilAlgebra(A), reps.sl2_module(3, A=A), reps.sl2_module(3, A=A), 6))
    with root_order_ctx(6):
        A = rd.validate_gcm([[2, -1], [-1, 2]])
        V = reps.minuscule_module(A, reps.fundamental_weight(A, 0))
        t.report(vf.check_quasi_r_intertwine(NilAlgebra(A), V, V, 4))


def criterion_3(t):
    with root_order_ctx(4):
        A = rd.validate_gcm([[2]])
        t.report(vf.check_yang_baxter(NilAlgebra(A), [reps.sl2_module(1, A=A)] * 3, 4))
    with root_order_ctx(6):
        A = rd.validate_gcm([[2, -1], [-1, 2]])
        V = reps.minuscule_module(A, reps.fundamental_weight(A, 0))
        t.report(vf.check_yang_baxter(NilAlgebra(A), [V] * 3, 4))


def criterion_4(t):
    golden = json.loads(GOLDEN.read_text())
    with root_order_ctx(golden["root_order"]):
        for case in golden["cases"]:
            A, d, p, alg, qk = sl2_setup(case["gamma"], case["sigma"], golden["height"])
            oracle = km.quasi_k_oracle(d, p, golden["height"], alg)
            for m in range(golden["height"] + 1):
                frozen = parse(case["coefficients"].get(str(m), "0"))
                u = qk.component((m,))
                got = u.vec[0] if u.vec else parse("0")
                t.add(f"frozen oracle ({case['gamma']},{case['sigma']}) height {m}", got == frozen)
                t.add(f"live oracle ({case['gamma']},{case['sigma']}) height {m}",
                      oracle.get((m,), qk.component((m,))) == qk.component((m,)))
            for mu in qk.support():
                t.add(f"support {mu}", d.theta(mu) == tuple(-Fraction(x) for x in mu))
            for n in range(5):
                t.report(vf.check_quasi_k_intertwining(qk, reps.sl2_module(n, A=A)))


def criterion_5(t):
    with root_order_ctx(4):
        for g, s in SL2_PARAMS + [("q^-2", "0"), ("1", "q")]:
            A, d, p, alg, qk = sl2_setup(g, s)
            for a, b in ((1, 1), (2, 1)):
                t.report(vf.check_coproduct_quasi_k(qk, reps.sl2_module(a, A=A), reps.sl2_module(b, A=A)))
            if not p.sigma[0].is_zero():
                t.report(vf.check_general_sigma(qk, 4))


def _k_suite(t, d, p, qk, alg, aux_list, pairs, singles, braid_mods):
    for aux in aux_list:
        ctx = kctx(d, p, qk, alg, aux)
        for M in singles:
            t.report(vf.check_k_intertwining(ctx, M))
        for M, N in pairs:
            t.report(vf.check_twist_pair(ctx, M, N))
            t.report(vf.check_coproduct_k(ctx, M, N))
            t.report(vf.check_twisted_re(ctx, M, N))
        t.report(vf.check_cylindrical_braid(ctx, braid_mods))


def criterion_6(t):
    with root_order_ctx(4):
        for g, s in SL2_PARAMS:
            A, d, p, alg, qk = sl2_setup(g, s)
            V1, V2 = reps.sl2_module(1, A=A), reps.sl2_module(2, A=A)
            _k_suite(t, d, p, qk, alg, [None, ([0], [0])], [(V1, V1), (V1, V2)], [V1, V2], [V1, V2])
    with root_order_ctx(6):
        A = rd.validate_gcm([[2, -1], [-1, 2]])
        d = validate_gsat(A, [], [1, 0])
        p = validate_params(d, [1, 1], [0, 0])
        alg = NilAlgebra(A)
        qk = km.quasi_k(d, p, 4, alg)
        W = reps.minuscule_module(A, reps.fundamental_weight(A, 0))
        Wd = reps.minuscule_module(A, reps.fundamental_weight(A, 1))
        _k_suite(t, d, p, qk, alg, [None, ([0, 1], [1, 0])], [(W, W), (W, Wd)], [W, Wd], [W, Wd])


def criterion_7(t):
    cases = []
    with root_order_ctx(4):
        A = rd.validate_gcm([[2]])
        cases.append((4, A, [reps.sl2_module(1, A=A), reps.sl2_module(2, A=A)]))
    with root_order_ctx(6):
        A = rd.validate_gcm([[2, -1], [-1, 2]])
        cases.append((6, A, [reps.minuscule_module(A, reps.fundamental_weight(A, 0))]))
    for D, A, mods in cases:
        with root_order_ctx(D):
            alg = NilAlgebra(A)
            act = BraidAction(alg)
            gens = []
            for i in range(A.n):
                gens += [("E", i, MixedElement.E(alg, i)), ("F", i, MixedElement.F(alg, i)),
                         ("t", i, MixedElement.t(alg, alg.simple(i)))]
            for M in mods:
                for j in range(A.n):
                    T = reps.quantum_weyl_op(M, j)
                    Ti = la.inverse(T)
                    for kind, i, x in gens:
                        ok = M.eval_mixed(act.apply(j, x)) == T @ M.eval_mixed(x) @ Ti
                        t.add(f"Ad(T_{j})({kind}_{i}) on {M.name}", ok)
            if A.n == 2:
                for kind, i, x in gens:
                    t.add(f"braid relation on {kind}_{i}", act.ad([0, 1, 0], x) == act.ad([1, 0, 1], x))
                for M in mods:
                    t.add("braid relation on module",
                          reps.weyl_word_op(M, [0, 1, 0]) == reps.weyl_word_op(M, [1, 0, 1]))


def criterion_8(t):
    with root_order_ctx(4):
        A = rd.validate_gcm([[2, -1, 0], [-1, 2, -1], [0, -1, 2]])
        validate_gsat(A, [1], [2, 1, 0])
        fixed, d = fundamental_lemma_check(NilAlgebra(A), [1], [2, 1, 0], 0)
        t.add("D_1(Ad(T_X)(E_1)) fixed by op o tau", fixed and not d.is_zero(), d.to_json())


def criterion_9(t):
    with root_order_ctx(4):
        for ell in (2, 3):
            for grading in ("homogeneous", "principal"):
                t.report(vf.check_inversion_congruence(ell, parse("q"), grading))
        t.report(vf.check_spectral_re(2, parse("q"), "principal", window=4, cutoff=8))


def criterion_10(t):
    with root_order_ctx(4):
        A, d, p, alg, qk = sl2_setup("q^-2", "1")
        V1, V2 = reps.sl2_module(1, A=A), reps.sl2_module(2, A=A)
        pp = prime_involution(d, p)
        wrong = ParamSet(pp.gamma, tuple(s + ONE for s in pp.sigma))
        t.control(vf.check_quasi_k_intertwining(qk, V2, wrong))
        t.control(vf.check_coproduct_k(kctx(d, p, qk, alg, ([0], [0]), drop_kappa=True), V1, V1))
        t.control(vf.check_twist_pair(kctx(d, p, qk, alg, omega=False), V1, V2))
        t.control(vf.check_yang_baxter(alg, [V1] * 3, 4, vf.corrupt_theta_simple))
    with root_order_ctx(6):
        A = rd.validate_gcm([[2, -1], [-1, 2]])
        d = validate_gsat(A, [], [1, 0])
        p = validate_params(d, [1, 1], [0, 0])
        alg = NilAlgebra(A)
        qk = km.quasi_k(d, p, 4, alg)
        W = reps.minuscule_module(A, reps.fundamental_weight(A, 0))
        t.control(vf.check_coproduct_k(kctx(d, p, qk, alg, ([0, 1], [1, 0]), drop_kappa=True), W, W))
        t.control(vf.check_twist_pair(kctx(d, p, qk, alg, omega=False), W, W))
    # the bundled control suite must exit nonzero
    import os
    import tempfile
    with tempfile.TemporaryDirectory() as tmp:
        out = os.path.join(tmp, "controls.json")
        code = cli_main(["verify", "negative-controls", "--out", out])
        rep = json.loads(Path(out).read_text())
    t.add("negative-controls suite exits 1", code == 1)
    t.add("every raw corruption fails with a witness",
          all(not c["pass"] and c["witness"] for c in rep["checks"]))


CRITERIA = [
    (1, "corank-1 compatibility", criterion_1, 1),
    (2, "quasi-R-matrix", criterion_2, 30),
    (3, "Yang-Baxter", criterion_3, 10),
    (4, "quasi-k-matrix", criterion_4, 60),
    (5, "coproduct of the quasi-k-matrix", criterion_5, 120),
    (6, "k-matrix identities", criterion_6, 300),
    (7, "Lusztig conjugation", criterion_7, 30),
    (8, "fundamental lemma", criterion_8, 30),
    (9, "quantum affine sl2", criterion_9, 600),
    (10, "negative controls", criterion_10, None),
]


def run_criterion(number):
    _, title, fn, budget = CRITERIA[number - 1]
    t = Tally()
    start = time.time()
    fn(t)
    secs = time.time() - start
    fails = t.failures
    if budget is not None and secs > budget:
        fails.append((f"time {secs:.1f}s over budget {budget}s", None))
    status = "PASS" if not fails else "FAIL"
    detail = f"{len(t.items)} checks, {secs:.1f}s"
    if fails:
        label, w = fails[0]
        detail += f"; first failure: {label}" + (f" {w}" if w is not None else "")
    line = f"{status} {number:>2} {title}: {detail}"
    LINES[number] = line
    return not fails, line


@pytest.mark.parametrize("number", [
    pytest.param(1, marks=pytest.mark.xfail(strict=True, reason="printed A_1 has kernel (1,-1,-1,1); see notes")),
    *range(2, 11),
])
def test_criterion(number):
    ok, line = run_criterion(number)
    print(line)
    assert ok, line


def pytest_terminal_lines():
    return [LINES[k] for k in sorted(LINES)]


if __name__ == "__main__":
    worst = 0
    for n, *_ in CRITERIA:
        ok, line = run_criterion(n)
        print(line, flush=True)
        worst = worst or (0 if ok else 1)
    sys.exit(worst)
