"""Freeze the dense-solve oracle for the sl2 quasi-k-matrix into tests/golden.

Run from the repository root:  python3 tests/oracles/freeze_quasik.py
"""
import json
from pathlib import Path

from qsp import kmatrix as km
from qsp.rootdata import validate_gcm
from qsp.satake import validate_gsat, validate_params
from qsp.scalars import parse, set_root_order, to_string
from qsp.uqnil import NilAlgebra

CASES = [("q^-2", "1"), ("1", "0")]
HEIGHT = 6


def main():
    set_root_order(4)
    A = validate_gcm([[2]])
    d = validate_gsat(A, [], [0])
    alg = NilAlgebra(A)
    out = {"root_order": 4, "height": HEIGHT, "cases": []}
    for g, s in CASES:
        p = validate_params(d, [parse(g)], [parse(s)])
        comps = km.quasi_k_oracle(d, p, HEIGHT, alg)
        coeffs = {}
        for mu in sorted(comps):
            u = comps[mu]
            # rank one: a single word E^m spans each weight space
            coeffs[str(mu[0])] = to_string(u.vec[0]) if u.vec else "0"
        out["cases"].append({"gamma": g, "sigma": s, "coefficients": coeffs})
    path = Path(__file__).resolve().parent.parent / "golden" / "quasik_sl2.json"
    path.write_text(json.dumps(out, indent=1, sort_keys=True) + "\n")
    print(path)


if __name__ == "__main__":
    main()
