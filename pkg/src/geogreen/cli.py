"""geogreen command line.

Every invocation prints exactly one JSON object on stdout.  Exit codes: 0 ok,
2 usage, 3 config, 4 numeric tolerance, 5 cache corruption.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .cache import CacheCorruption, default_cache_dir

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CACHE = 0, 2, 3, 4, 5

DEFAULT_TOLERANCES = {
    "class_number": 1e-6,
    "fe": 1e-6,
    "vanishing": 1e-8,
    "eis_fe": 1e-5,
    "lowering": 1e-5,
    "kappa": 1e-4,
    "siegel_weil": 1e-3,
    "stability": 1e-4,
    "weil": 1e-12,
}


class ConfigError(ValueError):
    pass


class ToleranceFailure(ArithmeticError):
    def __init__(self, msg: str, report: dict):
        super().__init__(msg)
        self.report = report


@dataclass
class RunConfig:
    curve: str = "37a"
    d: int = 5
    c: int = 1
    chi_index: str = "0"
    tolerances: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    truncations: dict[str, int] = field(default_factory=dict)
    cache_dir: Path = field(default_factory=default_cache_dir)
    threads: int = 1
    tol_scale: float = 1.0

    def tol(self, name: str) -> float:
        return self.tolerances[name] * self.tol_scale

    def validate(self) -> None:
        for k, v in self.tolerances.items():
            if not (v > 0):
                raise ConfigError(f"tolerance {k} must be positive")
        if self.tol_scale <= 0:
            raise ConfigError("tol-scale must be positive")
        if self.d < 2:
            raise ConfigError("d must be at least 2")
        if self.c < 1:
            raise ConfigError("conductor c must be positive")
        if self.threads < 1:
            raise ConfigError("threads must be positive")
        if self.curve.endswith(".json") and not Path(self.curve).exists():
            raise ConfigError(f"curve file {self.curve} does not exist")
        if self.chi_index != "all":
            try:
                int(self.chi_index)
            except ValueError as exc:
                raise ConfigError(f"chi must be an integer or 'all', got {self.chi_index!r}") from exc


def read_config(path: Path) -> dict[str, dict[str, str]]:
    """key = value lines with optional [section] headers; bare keys go to [run]."""
    text = Path(path).read_text(encoding="utf-8")
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    return {s: dict(cp[s]) for s in cp.sections()}


def build_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        p = Path(args.config)
        if not p.exists():
            raise ConfigError(f"config file {p} does not exist")
        sec = read_config(p)
        run = sec.get("run", {})
        try:
            for key in ("curve",):
                if key in run:
                    setattr(cfg, key, run[key])
            for key in ("d", "c", "threads"):
                if key in run:
                    setattr(cfg, key, int(run[key]))
            if "chi" in run:
                cfg.chi_index = run["chi"]
            if "cache_dir" in run:
                cfg.cache_dir = Path(run["cache_dir"])
            if "tol_scale" in run:
                cfg.tol_scale = float(run["tol_scale"])
            for k, v in sec.get("tolerances", {}).items():
                cfg.tolerances[k] = float(v)
            for k, v in sec.get("truncations", {}).items():
                cfg.truncations[k] = int(v)
        except ValueError as exc:
            raise ConfigError(f"malformed config value: {exc}") from exc
    for key in ("curve", "d", "c"):
        val = getattr(args, key, None)
        if val is not None:
            setattr(cfg, key, val)
    if getattr(args, "chi", None) is not None:
        cfg.chi_index = str(args.chi)
    if args.tol_scale is not None:
        cfg.tol_scale = args.tol_scale
    if args.threads is not None:
        cfg.threads = args.threads
    if os.environ.get("GEOGREEN_CACHE"):
        cfg.cache_dir = Path(os.environ["GEOGREEN_CACHE"])
    elif args.cache_dir:
        cfg.cache_dir = Path(args.cache_dir)
    cfg.validate()
    return cfg


# -- helpers ----------------------------------------------------------------------------


def _curve(cfg: RunConfig):
    from .newform import KNOWN_CURVES, CurveSpec

    if cfg.curve in KNOWN_CURVES:
        return KNOWN_CURVES[cfg.curve]
    p = Path(cfg.curve)
    if p.exists():
        try:
            return CurveSpec.load(p)
        except (KeyError, ValueError, json.JSONDecodeError) as exc:
            raise ConfigError(f"malformed curve file {p}: {exc}") from exc
    raise ConfigError(f"unknown curve {cfg.curve!r}")


def _chis(cfg: RunConfig, n: int) -> list[int]:
    if cfg.chi_index == "all":
        return list(range(n))
    k = int(cfg.chi_index)
    if not 0 <= k < n:
        raise ConfigError(f"chi index {k} out of range (group order {n})")
    return [k]


def _tau(s: str) -> complex:
    try:
        t = complex(s.replace(" ", ""))
    except ValueError as exc:
        raise ConfigError(f"cannot parse tau {s!r}") from exc
    if t.imag <= 0:
        raise ConfigError("tau must lie in the upper half plane")
    return t


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, Path):
        return str(x)
    return x


def _check(report: dict, name: str, value: float, tol: float) -> None:
    report.setdefault("checks", {})[name] = {"value": value, "tol": tol, "ok": bool(value < tol)}
    if not value < tol:
        raise ToleranceFailure(f"{name} = {value:.3e} exceeds tolerance {tol:.1e}", report)


def _emit_grid(path: str, rows: list[tuple], header: list[str]) -> None:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with open(p, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


# -- subcommands ------------------------------------------------------------------------


def cmd_field(args, cfg: RunConfig) -> dict:
    from .lfunc import class_number_residual, dirichlet_L
    from .quadorder import fundamental_unit, make_field, ring_class_group

    F = make_field(cfg.d)
    U = fundamental_unit(F)
    G = ring_class_group(F, 1)
    res = class_number_residual(F, G.order)
    out = {
        "dK": F.d_K,
        "d": F.d,
        "pell": [U.t, U.u],
        "eps0": list(U.eps0),
        "eps0_norm": U.eps0_norm,
        "eps0_log": U.eps0_log,
        "epsK_log": U.epsK_log,
        "class_number": G.order,
        "L1_eta": float(np.real(dirichlet_L(F, 1))),
        "class_number_residual": res,
    }
    _check(out, "class_number_residual", res, cfg.tol("class_number"))
    return out


def cmd_classgroup(args, cfg: RunConfig) -> dict:
    from .quadorder import characters, make_field, ring_class_group

    F = make_field(cfg.d)
    G = ring_class_group(F, cfg.c)
    chis = characters(G)
    return {
        "dK": F.d_K,
        "c": cfg.c,
        "order": G.order,
        "classes": [{"label": G.label_str(i), "form": list(G.forms[i])} for i in range(G.order)],
        "characters": [list(ch.exponents) for ch in chis],
        "exponent": chis[0].exponent if chis else 1,
    }


def cmd_coeffs(args, cfg: RunConfig) -> dict:
    from .newform import coefficients, verify_table

    E = _curve(cfg)
    M = args.M or cfg.truncations.get("coeffs", 1000)
    T = coefficients(E, M, cfg.cache_dir)
    ok = verify_table(T, E.N)
    out = {"curve": E.to_json(), "M": T.M, "a": [int(x) for x in T.coeffs[1 : min(T.M, args.show) + 1]], "hecke_check": ok}
    if not ok:
        raise ToleranceFailure("Hecke relations fail on the coefficient table", out)
    return out


def cmd_theta(args, cfg: RunConfig) -> dict:
    from .quadorder import make_field, ring_class_group
    from .theta import class_rep_counts, divisor_eta_sum
    from .quadorder import kronecker

    F = make_field(cfg.d)
    G = ring_class_group(F, cfg.c)
    M = args.M or cfg.truncations.get("theta", 200)
    tables = class_rep_counts(G, M, cache=cfg.cache_dir)
    bad = []
    if cfg.c == 1:
        for m in range(1, M + 1):
            if sum(t[m] for t in tables) != divisor_eta_sum(m, lambda k: kronecker(F, k)):
                bad.append(m)
    out = {
        "dK": F.d_K,
        "M": M,
        "classes": {t.label: [int(t[m]) for m in range(0, min(M, args.show) + 1)] for t in tables},
        "identity_failures": bad,
    }
    if bad:
        raise ToleranceFailure("class-sum identity fails", out)
    return out


def _rankin_reports(cfg: RunConfig, derivative: bool, s: float | None = None) -> dict:
    from .lfunc import central_derivative, completed_value, fe_residual, rankin_job
    from .newform import coefficients, level_split
    from .quadorder import characters, make_field, ring_class_group

    E = _curve(cfg)
    F = make_field(cfg.d)
    G = ring_class_group(F, cfg.c, level=E.N)
    split = level_split(E.N, F)
    out = {"curve": E.label, "dK": F.d_K, "c": cfg.c, "ehh_holds": split.ehh_holds, "sign": split.sign, "reports": []}
    T = None
    for k in _chis(cfg, G.order):
        J = rankin_job(E, F, k, cfg.c, T, G)
        if derivative:
            rep = central_derivative(J)
            r = rep.to_json(chi=k)
        else:
            sv = 0.5 if s is None else s
            r = {"chi": k, "s": sv, "value": float(np.real(completed_value(J, sv))), "fe_residual": fe_residual(J, 0.6), "terms": len(J.coeffs) - 1}
            r["central_value"] = r["value"] if sv == 0.5 else float(np.real(completed_value(J, 0.5)))
        out["reports"].append(r)
    worst = max(r["fe_residual"] for r in out["reports"])
    _check(out, "fe_residual", worst, cfg.tol("fe"))
    if split.ehh_holds:
        van = max(abs(r["value"] if derivative else r["central_value"]) for r in out["reports"])
        _check(out, "central_vanishing", van, cfg.tol("vanishing"))
    return out


def cmd_lvalue(args, cfg: RunConfig) -> dict:
    return _rankin_reports(cfg, False, args.s)


def cmd_lderiv(args, cfg: RunConfig) -> dict:
    out = _rankin_reports(cfg, True)
    if args.oracle:
        from .lfunc import rank_one_oracle
        from .quadorder import make_field

        orc = rank_one_oracle(_curve(cfg), make_field(cfg.d))
        out["rank_one_oracle"] = orc
        for r in out["reports"]:
            if r["chi"] == 0:
                r["oracle_rel_gap"] = abs(r["derivative"] - orc["product"]) / abs(orc["product"])
    return out


def _class_lattices(cfg: RunConfig):
    from .qspace import lattice_from_level
    from .quadorder import make_field, ring_class_group

    F = make_field(cfg.d)
    G = ring_class_group(F, cfg.c)
    return F, G, [lattice_from_level(G.reps[a], 1) for a in range(G.order)]


def cmd_eis_fe(args, cfg: RunConfig) -> dict:
    from .eisenstein import completed_fe_residual, derivative_in_s, eisenstein_data, eval_fourier, lowering_residual

    F, G, lats = _class_lattices(cfg)
    L2 = lats[args.cls][2]
    E = eisenstein_data(L2)
    taus = [_tau(t) for t in args.tau]
    out = {"dK": F.d_K, "class": G.label_str(args.cls), "points": []}
    fe_worst, low_worst = 0.0, 0.0
    for tau in taus:
        for s in args.s:
            fe = completed_fe_residual(L2, tau, s, E)
            lo = lowering_residual(L2, tau, s, E)
            fe_worst, low_worst = max(fe_worst, fe), max(low_worst, lo)
            out["points"].append({"tau": [tau.real, tau.imag], "s": s, "fe_residual": fe, "lowering_residual": lo})
    if args.vanishing:
        d = derivative_in_s(L2, taus[0], 0, 0.0, E=E)
        out["derivative_at_0"] = {"norm": float(np.abs(d.value).max()), "error": d.error}
    if args.emit_grid:
        rows = []
        for u in np.linspace(-0.5, 0.5, 11):
            for v in (0.8, 1.0, 1.5, 2.0):
                val = eval_fourier(E, complex(u, v), args.s[0], 0)
                rows.append((u, v, *[float(abs(x)) for x in val]))
        _emit_grid(args.emit_grid, rows, ["u", "v"] + [f"abs_E_{i}" for i in range(L2.disc.order)])
        out["grid"] = args.emit_grid
    _check(out, "completed_fe_residual", fe_worst, cfg.tol("eis_fe"))
    _check(out, "lowering_residual", low_worst, cfg.tol("lowering"))
    return out


def cmd_eis_kappa(args, cfg: RunConfig) -> dict:
    from .eisenstein import KappaTable, eisenstein_data, kappa_table

    F, G, lats = _class_lattices(cfg)
    L2 = lats[args.cls][2]
    want = []
    for item in args.entry:
        try:
            mu, m = item.split(":")
            want.append((int(mu), Fraction(m)))
        except ValueError as exc:
            raise ConfigError(f"entry must be mu:m, got {item!r}") from exc
    key = f"dK{F.d_K}-A{args.cls}"
    path = Path(cfg.cache_dir) / f"kappa-{key}.json"
    table = None
    if path.exists() and not args.recompute:
        try:
            table = KappaTable.read(path)
        except (KeyError, ValueError, json.JSONDecodeError) as exc:
            raise CacheCorruption(f"kappa cache {path} unreadable: {exc}") from exc
        if not all(w in table.entries for w in want):
            table = None
    if table is None:
        table = kappa_table(L2, want, tol=cfg.tol("kappa"), E=eisenstein_data(L2), key=key, subtract_log=args.subtract_log)
        table.write(path)
    out = table.to_json()
    out["residuals"] = [{"mu": mu, "m": str(m), "residual": r} for (mu, m), r in sorted(table.residuals.items())]
    out["log_coeff"] = table.log_coeff
    return out


def cmd_siegel_weil(args, cfg: RunConfig) -> dict:
    from .eisenstein import siegel_weil_residual
    from .quadorder import make_field, ring_class_group

    F = make_field(cfg.d)
    G = ring_class_group(F, cfg.c)
    taus = [_tau(t) for t in args.tau]
    per = []
    consts = []
    worst = 0.0
    for A in range(G.order):
        rep = siegel_weil_residual(G, A, taus, quad_n=args.quad_n)
        per.append({"class": G.label_str(A), "constant": rep.constant, "residual": rep.residual})
        consts.append(rep.constant)
        worst = max(worst, rep.residual)
    spread = max(consts) - min(consts)
    out = {"dK": F.d_K, "classes": per, "constant": float(np.mean(consts)), "constant_spread": spread, "residual": worst}
    _check(out, "siegel_weil_residual", max(worst, spread), cfg.tol("siegel_weil"))
    return out


def _lift_input(args, L):
    from .reglift import invariant_input
    from .weilrep import HarmonicMaassInput

    if args.input in ("j", "j2", "const"):
        return invariant_input(L, args.input, args.scale)
    p = Path(args.input)
    if not p.exists():
        raise ConfigError(f"input file {p} does not exist")
    try:
        return HarmonicMaassInput.load(p, L.disc.negated())
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        raise ConfigError(f"malformed input file {p}: {exc}") from exc


def cmd_reglift(args, cfg: RunConfig) -> dict:
    from .reglift import LiftConfig, reg_integral
    from .theta import TubePoint

    F, G, lats = _class_lattices(cfg)
    L = lats[args.cls][0]
    f0 = _lift_input(args, L)
    z = TubePoint(_tau(args.z1), _tau(args.z2))
    lc = LiftConfig(stability_tol=cfg.tol("stability"))
    ev = reg_integral(f0, L, z, args.h, G, tuple(args.T))
    out = {"dK": F.d_K, "class": G.label_str(args.cls), "z": [[z.z1.real, z.z1.imag], [z.z2.real, z.z2.imag]], **ev.to_json()}
    if ev.A0 == 0:
        _check(out, "stability", ev.stability, lc.stability_tol)
    return out


def cmd_main_rhs(args, cfg: RunConfig) -> dict:
    from .reglift import ClassInput, main_formula_rhs
    from .quadorder import characters

    F, G, lats = _class_lattices(cfg)
    family = []
    for a in range(G.order):
        lab = G.label_str(a)
        f0 = None
        if args.inputs:
            p = Path(args.inputs) / f"class{a}.json"
            if p.exists():
                from .weilrep import HarmonicMaassInput

                f0 = HarmonicMaassInput.load(p, lats[a][0].disc.negated())
        family.append(ClassInput(lab, f0))
    reports = []
    for k in _chis(cfg, G.order):
        rep = main_formula_rhs(family, characters(G)[k], G, vol=args.vol)
        r = rep.to_json()
        r["chi"] = k
        r["inputs_supplied"] = any(c.f0 is not None for c in family)
        reports.append(r)
    return {"dK": F.d_K, "reports": reports}


def cmd_selftest(args, cfg: RunConfig) -> dict:
    from .eisenstein import completed_fe_residual
    from .lfunc import class_number_residual, curve_job, fe_residual
    from .newform import KNOWN_CURVES
    from .qspace import lattice_from_level
    from .quadorder import kronecker, make_field, ring_class_group
    from .reglift import LiftConfig, invariant_input, reg_integral
    from .theta import TubePoint, class_rep_counts, divisor_eta_sum
    from .weilrep import weil_generators

    results = {}

    def run(name, fn, tol):
        t0 = time.time()
        try:
            val = float(fn())
            ok = val < tol
        except Exception as exc:  # report, do not abort the suite
            val, ok = repr(exc), False
        results[name] = {"value": val, "tol": tol, "ok": ok, "seconds": round(time.time() - t0, 3)}

    for d in (5, 2, 13):
        run(f"class_number_d{make_field(d).d_K}", lambda d=d: class_number_residual(make_field(d)), cfg.tol("class_number"))

    def theta_identity():
        F = make_field(5)
        tabs = class_rep_counts(ring_class_group(F), 100)
        return sum(sum(t[m] for t in tabs) != divisor_eta_sum(m, lambda k: kronecker(F, k)) for m in range(1, 101))

    run("theta_identity_d5", theta_identity, 0.5)
    F5 = make_field(5)
    G5 = ring_class_group(F5)
    QA, V1, V2 = lattice_from_level(G5.reps[0], 1)
    run("weil_relations_d5", lambda: max(weil_generators(QA.disc).relation_residuals().values()), cfg.tol("weil"))
    run("curve_fe_11a", lambda: fe_residual(curve_job(KNOWN_CURVES["11a"]), 0.7), cfg.tol("fe"))
    run("eisenstein_fe_d5", lambda: completed_fe_residual(V2, 0.1 + 1.1j, 0.4), cfg.tol("eis_fe"))
    z = TubePoint(-0.4647 + 0.6683j, -0.4551 + 2.25j)
    run("reglift_stability_d5", lambda: reg_integral(invariant_input(QA, "j"), QA, z).stability, cfg.tol("stability"))
    out = {"version": __version__, "results": results, "ok": all(r["ok"] for r in results.values())}
    if not out["ok"]:
        raise ToleranceFailure("selftest failures: " + ", ".join(k for k, r in results.items() if not r["ok"]), out)
    return out


COMMANDS = {
    "field": cmd_field,
    "classgroup": cmd_classgroup,
    "coeffs": cmd_coeffs,
    "theta": cmd_theta,
    "lvalue": cmd_lvalue,
    "lderiv": cmd_lderiv,
    "eis-fe": cmd_eis_fe,
    "eis-kappa": cmd_eis_kappa,
    "siegel-weil": cmd_siegel_weil,
    "reglift": cmd_reglift,
    "main-rhs": cmd_main_rhs,
    "selftest": cmd_selftest,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="key = value file with [run], [tolerances], [truncations]")
    common.add_argument("--tol-scale", type=float, dest="tol_scale")
    common.add_argument("--threads", type=int)
    common.add_argument("--cache-dir", dest="cache_dir")
    common.add_argument("--d", type=int, help="squarefree d > 1 (field Q(sqrt d))")
    common.add_argument("--c", type=int, help="ring class conductor")
    common.add_argument("--curve", help="11a | 14a | 37a or a curve JSON file")
    common.add_argument("--chi", help="character index or 'all'")

    p = _Parser(prog="geogreen", description="central derivatives, Eisenstein data and regularized lifts")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.add_parser("field", parents=[common])
    sub.add_parser("classgroup", parents=[common])
    s = sub.add_parser("coeffs", parents=[common])
    s.add_argument("--M", type=int)
    s.add_argument("--show", type=int, default=50)
    s = sub.add_parser("theta", parents=[common])
    s.add_argument("--M", type=int)
    s.add_argument("--show", type=int, default=30)
    s = sub.add_parser("lvalue", parents=[common])
    s.add_argument("--s", type=float, default=0.5)
    s = sub.add_parser("lderiv", parents=[common])
    s.add_argument("--oracle", action="store_true", help="attach the rank-one product (trivial character)")
    s = sub.add_parser("eis-fe", parents=[common])
    s.add_argument("--cls", type=int, default=0)
    s.add_argument("--tau", nargs="+", default=["0.1+1.1j"])
    s.add_argument("--s", nargs="+", type=float, default=[0.4, 1.3])
    s.add_argument("--vanishing", action="store_true")
    s.add_argument("--emit-grid", dest="emit_grid")
    s = sub.add_parser("eis-kappa", parents=[common])
    s.add_argument("--cls", type=int, default=0)
    s.add_argument("--entry", nargs="+", default=["0:1"])
    s.add_argument("--subtract-log", dest="subtract_log", default="auto", choices=["auto", "always", "never"])
    s.add_argument("--recompute", action="store_true")
    s = sub.add_parser("siegel-weil", parents=[common])
    s.add_argument("--tau", nargs="+", default=["0.1+1.0j", "-0.3+1.3j", "0.25+0.9j"])
    s.add_argument("--quad-n", type=int, default=64, dest="quad_n")
    s = sub.add_parser("reglift", parents=[common])
    s.add_argument("--cls", type=int, default=0)
    s.add_argument("--input", default="j", help="j | j2 | const or a harmonic Maass JSON file")
    s.add_argument("--scale", type=float, default=1.0)
    s.add_argument("--z1", default="-0.4647+0.6683j")
    s.add_argument("--z2", default="-0.4551+2.25j")
    s.add_argument("--h", type=int, default=0)
    s.add_argument("--T", nargs="+", type=float, default=[8.0, 16.0])
    s = sub.add_parser("main-rhs", parents=[common])
    s.add_argument("--inputs", help="directory with class<k>.json harmonic Maass inputs")
    s.add_argument("--vol", type=float, default=1.0)
    sub.add_parser("selftest", parents=[common])
    return p


def _error(code: int, kind: str, msg: str, extra: dict | None = None) -> int:
    obj = {"error": {"code": code, "type": kind, "message": msg}}
    if extra:
        obj["report"] = _jsonable(extra)
    print(json.dumps(obj, sort_keys=True))
    return code


def main(argv=None) -> int:
    from .eisenstein import ContinuationError
    from .lfunc import KernelError
    from .quadorder import ValidationError
    from .theta import TruncationError

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise _UsageError("missing subcommand")
    except _UsageError as exc:
        return _error(EXIT_USAGE, "usage", str(exc))
    try:
        cfg = build_config(args)
    except ConfigError as exc:
        return _error(EXIT_CONFIG, "config", str(exc))
    try:
        out = COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        return _error(EXIT_CONFIG, "config", str(exc))
    except ToleranceFailure as exc:
        return _error(EXIT_NUMERIC, "tolerance", str(exc), exc.report)
    except (ValidationError, TruncationError, KernelError, ContinuationError, ArithmeticError) as exc:
        return _error(EXIT_NUMERIC, type(exc).__name__, str(exc))
    except CacheCorruption as exc:
        return _error(EXIT_CACHE, "cache", str(exc))
    print(json.dumps(_jsonable(out), sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
