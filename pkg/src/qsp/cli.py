"""Command line entry point: validate | quasik | kmatrix | verify | spectral <config.json>.

Exit codes: 0 all checks pass, 1 a check failed (or the recursion is inconsistent),
2 invalid input or an infeasible request.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from . import kmatrix as km
from . import reps
from . import verify as vf
from .rootdata import RootDataError, tau_compatible_scaling_exists, basic_imaginary_root, validate_gcm
from .satake import SatakeError, ParamSet, prime_involution, validate_gsat, validate_params
from .scalars import ScalarParseError, parse, set_root_order, to_string
from .uqnil import NilAlgebra


class ConfigError(ValueError):
    pass


BUNDLED = {"reference-suite": "reference_suite.json", "negative-controls": "negative_controls.json",
           "spectral": "spectral.json", "sl2": "sl2.json"}


def load_config(path: str) -> dict:
    if path in BUNDLED:
        text = resources.files("qsp").joinpath("configs", BUNDLED[path]).read_text()
    else:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def config_digest(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()[:16]


def dump(obj, out: Optional[str]) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# building objects from a config

class Context:
    """Lazily built objects for one (sub)config."""

    def __init__(self, cfg: dict):
        self.cfg = cfg
        real = cfg.get("realization", {})
        set_root_order(int(real.get("root_order", 4)))
        g = cfg.get("gcm")
        if g is None:
            raise ConfigError("missing gcm block")
        self.A = validate_gcm(g["matrix"], g.get("epsilon"), g.get("nodes"))
        self._d = self._p = self._alg = self._qk = self._spec = None
        self._mods: Dict[str, reps.Module] = {}

    def nodes(self, xs) -> List[int]:
        return [self.A.index(x) for x in xs]

    @property
    def cutoff(self) -> int:
        return int(self.cfg.get("cutoff", 6))

    @property
    def diagram(self):
        if self._d is None:
            dia = self.cfg.get("diagram")
            if dia is None:
                raise ConfigError("missing diagram block")
            tau = dia.get("tau", list(range(self.A.n)))
            self._d = validate_gsat(self.A, self.nodes(dia.get("X", [])), self.nodes(tau))
        return self._d

    @property
    def params(self) -> ParamSet:
        if self._p is None:
            pb = self.cfg.get("params", {})
            n = self.A.n
            gamma = [parse(str(x)) for x in pb.get("gamma", ["1"] * n)]
            sigma = [parse(str(x)) for x in pb.get("sigma", ["0"] * n)]
            ext = [parse(str(x)) for x in pb.get("gamma_ext", [])]
            self._p = validate_params(self.diagram, gamma, sigma, ext)
        return self._p

    @property
    def alg(self) -> NilAlgebra:
        if self._alg is None:
            self._alg = NilAlgebra(self.A)
        return self._alg

    @property
    def qk(self) -> km.QuasiK:
        if self._qk is None:
            self._qk = km.quasi_k(self.diagram, self.params, self.cutoff, self.alg)
        return self._qk

    def kspec(self, aux: Optional[dict] = None) -> km.KMatrixSpec:
        aux = aux if aux is not None else self.cfg.get("aux")
        spec = km.standard_k(self.diagram, self.params, self.cutoff, self.qk)
        if aux is not None:
            spec = km.modified_k(spec, self.nodes(aux.get("Y", [])), self.nodes(aux["eta"]))
        return spec

    def module(self, name: str) -> reps.Module:
        if name not in self._mods:
            table = self.cfg.get("modules", {})
            if name not in table:
                raise ConfigError(f"unknown module {name!r}")
            self._mods[name] = build_module(self.A, table[name], name)
        return self._mods[name]


def build_module(A, spec: dict, name: str) -> reps.Module:
    kind = spec.get("type")
    if kind == "sl2":
        if A.n != 1:
            raise ConfigError("sl2 modules need a rank one matrix")
        M = reps.sl2_module(int(spec["n"]), A=A)
    elif kind == "minuscule":
        lam = spec.get("weight")
        if isinstance(lam, (int, str)):
            lam = reps.fundamental_weight(A, A.index(lam))
        else:
            lam = tuple(Fraction(x) for x in lam)
        M = reps.minuscule_module(A, lam, name)
    elif kind == "trivial":
        M = reps.trivial_module(A)
    elif kind == "affine":
        M = reps.affine_eval_module(int(spec["ell"]), parse(str(spec.get("lambda", "1"))),
                                    spec.get("grading", "principal"), A)
    else:
        raise ConfigError(f"unknown module type {kind!r} for {name!r}")
    M.name = name
    return M


# ---------------------------------------------------------------------------
# checks

def _mods(ctx: Context, entry: dict, k: int) -> List[reps.Module]:
    names = entry.get("modules")
    if not names or len(names) < k:
        raise ConfigError(f"check {entry.get('check')!r} needs {k} modules")
    return [ctx.module(n) for n in names]


def _kctx(ctx: Context, entry: dict, **kw) -> vf.KContext:
    return vf.KContext.build(ctx.kspec(entry.get("aux")), ctx.alg, **kw)


def _run_check(ctx: Context, entry: dict, seed: int) -> vf.CheckReport:
    name = entry.get("check")
    corrupt = entry.get("corrupt")
    cut = ctx.cutoff
    if name == "yang_baxter":
        mods = _mods(ctx, entry, 3)
        fn = vf.corrupt_theta_simple if corrupt == "theta_coefficient" else None
        return vf.check_yang_baxter(ctx.alg, mods, cut, fn)
    if name == "quasi_r_intertwine":
        M, N = _mods(ctx, entry, 2)
        X = ctx.nodes(entry["X"]) if "X" in entry else None
        return vf.check_quasi_r_intertwine(ctx.alg, M, N, cut, X, corrupt == "theta_one")
    if name == "quasi_k_intertwining":
        (M,) = _mods(ctx, entry, 1)
        primed = None
        if corrupt == "wrong_sigma_prime":
            pp = prime_involution(ctx.diagram, ctx.params)
            primed = ParamSet(pp.gamma, tuple(s + 1 for s in pp.sigma), pp.gamma_ext)
        return vf.check_quasi_k_intertwining(ctx.qk, M, primed)
    if name == "coproduct_quasi_k":
        M, N = _mods(ctx, entry, 2)
        gp = ctx.params.gamma if corrupt == "gamma_prime_as_gamma" else None
        return vf.check_coproduct_quasi_k(ctx.qk, M, N, gp)
    if name == "general_sigma":
        return vf.check_general_sigma(ctx.qk, int(entry.get("height", 4)))
    if name == "k_intertwining":
        (M,) = _mods(ctx, entry, 1)
        img = None
        if corrupt == "wrong_sigma_prime":
            p = ctx.params
            img = ParamSet(p.gamma, tuple(s + 1 for s in p.sigma), p.gamma_ext)
        return vf.check_k_intertwining(_kctx(ctx, entry), M, img)
    if name == "twist_pair":
        M, N = _mods(ctx, entry, 2)
        return vf.check_twist_pair(_kctx(ctx, entry, omega=corrupt != "drop_omega"), M, N)
    if name == "coproduct_k":
        M, N = _mods(ctx, entry, 2)
        return vf.check_coproduct_k(_kctx(ctx, entry, drop_kappa=corrupt == "drop_kappa"), M, N)
    if name == "twisted_re":
        M, N = _mods(ctx, entry, 2)
        return vf.check_twisted_re(_kctx(ctx, entry), M, N, wrong_leg=corrupt == "wrong_leg")
    if name == "cylindrical_braid":
        mods = _mods(ctx, entry, 2)
        kf = "one" if corrupt == "k_identity" else "k"
        return vf.check_cylindrical_braid(_kctx(ctx, entry), mods, kf,
                                          random_words=int(entry.get("random_words", 0)), seed=seed)
    if name == "rx_factorization":
        M, N = _mods(ctx, entry, 2)
        spec = ctx.kspec(entry.get("aux"))
        return vf.check_rx_factorization(M, N, spec.aux, ctx.alg, cut)
    if name == "inversion_congruence":
        return vf.check_inversion_congruence(int(entry["ell"]), parse(str(entry.get("lambda", "q"))),
                                             entry.get("grading", "principal"))
    if name in ("spectral_re", "boundary_intertwining"):
        fn = vf.check_spectral_re if name == "spectral_re" else vf.check_boundary_intertwining
        return fn(int(entry.get("ell", 2)), parse(str(entry.get("lambda", "q"))),
                  entry.get("grading", "principal"), int(entry.get("window", 4)),
                  int(entry.get("cutoff", 8)), entry.get("gamma"), entry.get("sigma"),
                  invert=corrupt != "no_inversion")
    raise ConfigError(f"unknown check {name!r}")


def check_label(entry: dict) -> str:
    parts = [entry.get("check", "?")]
    if entry.get("modules"):
        parts.append("(" + ",".join(entry["modules"]) + ")")
    if entry.get("aux"):
        parts.append("aux=" + json.dumps(entry["aux"], sort_keys=True, separators=(",", ":")))
    for key in ("ell", "grading", "window"):
        if key in entry:
            parts.append(f"{key}={entry[key]}")
    if entry.get("corrupt"):
        parts.append(f"corrupt={entry['corrupt']}")
    return entry.get("label") or " ".join(parts)


def run_entry(sub: dict, entry: dict, seed: int) -> dict:
    ctx = Context(sub)
    rep = _run_check(ctx, entry, seed)
    if entry.get("expect") == "fail":
        rep = vf.negative_control("negative_control", rep)
    out = rep.to_json()
    out["name"] = (sub.get("name", "") + ": " if sub.get("name") else "") + check_label(entry)
    if entry.get("expect") == "fail":
        out["name"] = "negative control " + out["name"]
    return out


def _subconfigs(cfg: dict) -> List[dict]:
    if "suite" in cfg:
        base = {k: v for k, v in cfg.items() if k != "suite"}
        return [{**base, **sub} for sub in cfg["suite"]]
    return [cfg]


def _job(args):
    sub, entry, seed = args
    return run_entry(sub, entry, seed)


# ---------------------------------------------------------------------------
# commands

def cmd_validate(cfg: dict) -> Tuple[dict, int]:
    out = []
    for sub in _subconfigs(cfg):
        ctx = Context(sub)
        A = ctx.A
        rec: dict = {"name": sub.get("name"), "gcm": {"epsilon": list(A.eps), "nodes": list(A.nodes),
                                                     "corank": A.corank()}}
        dia = sub.get("diagram")
        tau = ctx.nodes(dia["tau"]) if dia and "tau" in dia else list(range(A.n))
        if A.corank() == 1:
            zeta, exists = tau_compatible_scaling_exists(A, tau)
            rec["tau_compatible"] = {"zeta": zeta, "exists": exists, "kernel": list(basic_imaginary_root(A))}
        if dia is not None:
            rec["diagram"] = ctx.diagram.describe()
            if "params" in sub:
                rec["params"] = ctx.params.to_json()
                rec["params_valid"] = True
        out.append(rec)
    return {"run": config_digest(cfg), "validate": out}, 0


def cmd_quasik(cfg: dict) -> Tuple[dict, int]:
    ctx = Context(cfg)
    try:
        qk = ctx.qk
    except km.RecursionInconsistent as exc:
        return {"run": config_digest(cfg), "error": "RecursionInconsistent", "message": str(exc)}, 1
    return {"run": config_digest(cfg), "diagram": ctx.diagram.describe(), "params": ctx.params.to_json(),
            "quasi_k": qk.to_json()}, 0


def _dense(m) -> List[List[str]]:
    return [[to_string(x) for x in row] for row in m.to_dense()]


def cmd_kmatrix(cfg: dict) -> Tuple[dict, int]:
    ctx = Context(cfg)
    spec = ctx.kspec()
    mats = {}
    for name in sorted(cfg.get("modules", {})):
        M = ctx.module(name)
        if M.kind == "finite":
            mats[name] = _dense(spec.evaluate(M))
    return {"run": config_digest(cfg), "k_matrix": spec.to_json(), "artifacts": {"matrices": mats}}, 0


def cmd_verify(cfg: dict, jobs: int, seed: int) -> Tuple[dict, int]:
    tasks = []
    for sub in _subconfigs(cfg):
        Context(sub)  # surface config errors before running anything
        for entry in sub.get("checks", []):
            tasks.append((sub, entry, seed))
    if not tasks:
        raise ConfigError("no checks configured")
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_job, tasks))
    else:
        results = [_job(t) for t in tasks]
    results.sort(key=lambda r: r["name"])
    code = 0 if all(r["pass"] for r in results) else 1
    return {"run": config_digest(cfg), "checks": results, "artifacts": {"seed": seed}}, code


def cmd_spectral(cfg: dict) -> Tuple[dict, int]:
    sb = cfg.get("spectral")
    if sb is None:
        raise ConfigError("missing spectral block")
    set_root_order(int(cfg.get("realization", {}).get("root_order", 4)))
    ell, lam = int(sb.get("ell", 2)), parse(str(sb.get("lambda", "q")))
    grading, window, cutoff = sb.get("grading", "principal"), int(sb.get("window", 4)), int(sb.get("cutoff", 8))
    st, d, p, sp, phi, inputs, win = vf._spectral_context(ell, lam, grading, window, cutoff,
                                                          sb.get("gamma"), sb.get("sigma"), None)
    k = sp.k(vf.Leg(st.M, 1))
    series = {str(deg[1]): _dense(m) for deg, m in sorted(k.terms.items(), key=lambda t: t[0][1])
              if 0 <= deg[1] <= window}
    reports = []
    if ell >= 2:
        reports.append(vf.check_spectral_re(ell, lam, grading, window, cutoff, sb.get("gamma"), sb.get("sigma")))
    reports.append(vf.check_boundary_intertwining(ell, lam, grading, window, cutoff, sb.get("gamma"), sb.get("sigma")))
    code = 0 if all(r.passed for r in reports) else 1
    return {"run": config_digest(cfg), "k(z)": {"window": win, "coefficients": series},
            "checks": [r.to_json() for r in reports]}, code


def main(argv: Optional[List[str]] = None) -> int:
    ap = argparse.ArgumentParser(prog="qsp", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=["validate", "quasik", "kmatrix", "verify", "spectral"])
    ap.add_argument("config", help="path to a JSON config, or a bundled name: " + ", ".join(sorted(BUNDLED)))
    ap.add_argument("--out", help="write the JSON report here instead of stdout")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    random.seed(args.seed)
    try:
        cfg = load_config(args.config)
        if args.command == "validate":
            report, code = cmd_validate(cfg)
        elif args.command == "quasik":
            report, code = cmd_quasik(cfg)
        elif args.command == "kmatrix":
            report, code = cmd_kmatrix(cfg)
        elif args.command == "verify":
            report, code = cmd_verify(cfg, args.jobs, args.seed)
        else:
            report, code = cmd_spectral(cfg)
    except (ConfigError, RootDataError, SatakeError, ScalarParseError, vf.CutoffInsufficientForWindow,
            reps.ModuleError, km.ExtensionUnavailable, KeyError, TypeError, ValueError) as exc:
        dump({"error": type(exc).__name__, "message": str(exc)}, args.out)
        return 2
    dump(report, args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
