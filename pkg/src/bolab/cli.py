"""Command-line front end: bolab {zd,soliton,resolvent,simulate,verify,report}.

Every output file carries the config hash and seed.  Exit codes: 0 success,
2 usage or config error, 3 numerical failure, 4 verification failure.
"""
import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import BolabError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERIFY = 0, 2, 3, 4


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


# ------------------------------------------------------------------ helpers

def config_hash(cfg):
    """sha256 of the canonical JSON of the run config (outputs excluded)."""
    keep = {k: v for k, v in cfg.items() if not k.startswith("out")}
    text = json.dumps(keep, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _stamp(cfg):
    return {"config_hash": config_hash(cfg), "seed": cfg.get("seed", 0),
            "version": __version__}


def _header_lines(cfg):
    st = _stamp(cfg)
    return [f"config_hash={st['config_hash']}", f"seed={st['seed']}",
            f"bolab={st['version']}"]


def write_csv(path, rows, cfg, columns=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = columns or (list(rows[0]) if rows else [])
    with open(path, "w", newline="") as fh:
        for line in _header_lines(cfg):
            fh.write(f"# {line}\n")
        w = csv.DictWriter(fh, fieldnames=columns)
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(r.get(k)) for k in columns})


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, complex):
        return repr(v)
    return v


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (complex, np.complexfloating)):
        return {"re": float(v.real), "im": float(v.imag)}
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if np.isfinite(f) else None
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def write_json(path, payload, cfg):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = dict(_stamp(cfg))
    doc["config"] = _jsonable(cfg)
    doc.update(_jsonable(payload))
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _complex(text):
    try:
        parts = [float(s) for s in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"bad complex number {text!r}; use RE,IM") from exc
    if len(parts) != 2:
        raise ConfigError(f"bad complex number {text!r}; use RE,IM")
    return complex(*parts)


def _range(text):
    try:
        a, b, k = text.split(":")
        return float(a), float(b), int(k)
    except ValueError as exc:
        raise ConfigError(f"bad range {text!r}; use MIN:MAX:COUNT") from exc


def _floats(text):
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad list {text!r}") from exc


def _load_config_file(path):
    if not path:
        return {}
    try:
        d = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    return d


def _merge(args, keys, defaults):
    """Config file values overridden by explicitly given flags."""
    cfg = dict(defaults)
    cfg.update({k: v for k, v in _load_config_file(args.config).items() if k in keys})
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    return cfg


def _symbol(cfg):
    from .rational import RealRationalSymbol, soliton_symbol
    if cfg.get("symbol"):
        src = cfg["symbol"]
        try:
            d = src if isinstance(src, dict) else json.loads(Path(src).read_text())
            if "symbol" in d and "poles" not in d:
                d = d["symbol"]
            return RealRationalSymbol.from_dict(d)
        except (OSError, json.JSONDecodeError, ValueError) as exc:
            raise ConfigError(f"cannot load symbol: {exc}") from exc
    if cfg.get("soliton"):
        try:
            return soliton_symbol(_complex(cfg["soliton"]))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    raise ConfigError("give --symbol FILE or --soliton RE,IM")


def _check_writable(cfg):
    for k, v in cfg.items():
        if k.startswith("out") and v:
            d = Path(v).parent
            try:
                d.mkdir(parents=True, exist_ok=True)
            except OSError as exc:
                raise ConfigError(f"output directory {d} not writable") from exc


# ----------------------------------------------------------------- commands

def cmd_zd(args):
    from . import zdlimit as zl
    keys = ["symbol", "soliton", "n", "t", "x", "oracle", "out", "seed", "method"]
    cfg = _merge(args, keys, {"n": 1, "t": 0.0, "x": "-5:5:101", "oracle": False,
                              "seed": 0, "method": "aberth"})
    u0 = _symbol(cfg)
    x0, x1, k = _range(cfg["x"])
    if k < 2 or cfg["n"] < 1:
        raise ConfigError("need COUNT >= 2 and n >= 1")
    _check_writable(cfg)
    samples = zl.zd_scan(u0, cfg["n"], cfg["t"], x0, x1, k, oracle=bool(cfg["oracle"]))
    rows = [s.as_row() for s in samples]
    crit = zl.critical_set(u0, cfg["n"], cfg["t"], (x0, x1)) if not u0.is_zero() else np.zeros(0)
    comps = _components([s for s in samples])
    errs = [r["oracle_err"] for r in rows if np.isfinite(r["oracle_err"])]
    summary = {"breaking_time": zl.breaking_time(u0, cfg["n"]) if not u0.is_zero() else None,
               "critical_set": list(crit), "components": comps,
               "max_oracle_err": max(errs) if errs else None,
               "critical_samples": int(sum(r["critical"] for r in rows))}
    out = cfg.get("out") or "zd"
    write_csv(f"{out}.csv", rows, cfg)
    write_json(f"{out}.json", {"command": "zd", "summary": summary, "samples": rows}, cfg)
    print(json.dumps(_jsonable(summary)))
    return EXIT_OK


def _components(samples):
    """Maximal runs of consecutive samples with the same branch count."""
    out = []
    for s in samples:
        ell = s.ell
        if out and out[-1]["ell"] == ell:
            out[-1]["x_max"] = s.x
        else:
            out.append({"ell": ell, "x_min": s.x, "x_max": s.x})
    return out


def cmd_soliton(args):
    from .hardy_grid import FourierGrid, explicit_formula_eval
    from .lax_spectral import discrete_spectrum, soliton_velocity, wu_residuals
    from .rational import soliton_symbol
    keys = ["p", "m", "factor", "t", "out", "seed"]
    cfg = _merge(args, keys, {"p": ["0,1"], "m": "512,1024", "factor": 20.0, "t": 0.5,
                              "seed": 0})
    ps = [_complex(s) for s in cfg["p"]]
    ms = [int(v) for v in _floats(str(cfg["m"]))]
    if any(p.imag <= 0 for p in ps):
        raise ConfigError("soliton parameter needs Im p > 0")
    _check_writable(cfg)
    rows = []
    for p in ps:
        u0 = soliton_symbol(p)
        target = -1 / (2 * p.imag)
        z = 1j
        for m in ms:
            g = FourierGrid(cfg["factor"] / p.imag, m)
            pairs = discrete_spectrum(u0, g)
            if not pairs:
                raise BolabError(f"no discrete eigenvalue for p={p} at M={m}")
            e = pairs[0]
            wu = wu_residuals(g, e.value, e.vector, g.sample(u0.hardy_part()))
            row = {"p_re": p.real, "p_im": p.imag, "m": m, "lambda": e.value,
                   "lambda_exact": target, "lambda_err": abs(e.value - target) / abs(target),
                   "wu_overlap": wu.overlap, "wu_trace": wu.trace}
            for n in (1, 2, 3):
                c = soliton_velocity(n, p)
                row[f"c{n}"] = c
                got = explicit_formula_eval(u0, n, cfg["t"], z, g)
                want = 1j / (z - c * cfg["t"] + p)
                row[f"formula_err_n{n}"] = abs(got - want) / abs(want)
            rows.append(row)
    out = cfg.get("out") or "soliton"
    write_csv(f"{out}.csv", rows, cfg)
    write_json(f"{out}.json", {"command": "soliton", "rows": rows}, cfg)
    for r in rows:
        print(f"p={complex(r['p_re'], r['p_im'])} M={r['m']} lambda={r['lambda']:.6f} "
              f"err={r['lambda_err']:.2e} c1={r['c1']:g} c2={r['c2']:g}")
    return EXIT_OK


def cmd_resolvent(args):
    from .hardy_grid import (FourierGrid, ResolventFormula, resolvent_norm,
                             write_operator)
    from .zdlimit import lambda_cramer
    keys = ["symbol", "soliton", "n", "t", "z", "m", "factor", "mode", "out", "dump",
            "seed", "cramer"]
    cfg = _merge(args, keys, {"n": 1, "t": 0.0, "z": ["0,1"], "m": 1024, "factor": 20.0,
                              "mode": "explicit", "seed": 0, "cramer": False})
    if cfg["mode"] not in ("explicit", "zd"):
        raise ConfigError("mode must be explicit or zd")
    u0 = _symbol(cfg)
    zs = [_complex(s) for s in cfg["z"]]
    if any(z.imag <= 0 for z in zs):
        raise ConfigError("Im z must be positive")
    _check_writable(cfg)
    g = FourierGrid.for_symbol(u0, m=int(cfg["m"]), factor=cfg["factor"])
    rf = ResolventFormula(u0, int(cfg["n"]), g, mode=cfg["mode"])
    A = rf.operator(cfg["t"])
    rows = []
    bound_amp = u0.l2_norm() / np.sqrt(2.0)
    for z in zs:
        v = rf(cfg["t"], z)
        row = {"z_re": z.real, "z_im": z.imag, "value_re": v.real, "value_im": v.imag,
               "resolvent_norm_x_imz": resolvent_norm(A, z) * z.imag,
               "amplitude_bound": bound_amp / (2 * np.sqrt(np.pi * z.imag))}
        if cfg["cramer"]:
            c = lambda_cramer(u0, int(cfg["n"]), cfg["t"], z)
            row["cramer_re"], row["cramer_im"] = c.real, c.imag
        rows.append(row)
    out = cfg.get("out") or "resolvent"
    write_csv(f"{out}.csv", rows, cfg)
    write_json(f"{out}.json", {"command": "resolvent", "grid": g.to_dict(), "rows": rows}, cfg)
    if cfg.get("dump"):
        write_operator(cfg["dump"], A)
    for r in rows:
        print(f"z={complex(r['z_re'], r['z_im'])} value={complex(r['value_re'], r['value_im'])}")
    return EXIT_OK


def _initial(spec):
    from .lax_spectral import traveling_wave
    from .pde_sim import gaussian
    kind, _, rest = (spec or "soliton:0,1").partition(":")
    if kind == "zero":
        return lambda x: np.zeros_like(x), None
    if kind == "soliton":
        p = _complex(rest or "0,1")
        if p.imag <= 0:
            raise ConfigError("soliton parameter needs Im p > 0")
        return (lambda x: traveling_wave(p, x)), p
    if kind == "gaussian":
        vals = _floats(rest) if rest else [0.0, 1.0]
        if len(vals) != 2 or vals[1] <= 0:
            raise ConfigError("gaussian:CENTER,WIDTH")
        return gaussian(*vals), None
    raise ConfigError(f"unknown initial datum {spec!r}")


def cmd_simulate(args):
    from . import pde_sim as ps
    keys = ["n", "eps", "L", "P", "dt", "T_final", "cfl", "dealias", "initial", "times",
            "eps_sweep", "test_center", "test_width", "out", "seed"]
    cfg = _merge(args, keys, {"n": 1, "eps": 0.1, "L": 80.0, "P": 2048, "dt": 0.0,
                              "T_final": 1.0, "cfl": 0.025, "dealias": 2.0 / 3.0,
                              "initial": "gaussian:0,1", "times": "", "eps_sweep": "",
                              "test_center": 0.0, "test_width": 1.0, "seed": 0})
    try:
        sim = ps.SimConfig.from_dict(cfg)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    u0, p = _initial(cfg["initial"])
    times = _floats(cfg["times"]) if isinstance(cfg["times"], str) else list(cfg["times"])
    _check_writable(cfg)
    out = cfg.get("out") or "simulate"
    res = ps.run(sim, u0, times=times + [0.0])
    hdr = _header_lines(cfg)
    ps.write_snapshots(f"{out}_snapshots.csv", res["x"], res["snapshots"], hdr)
    ps.write_log(f"{out}_conservation.csv", res["log"], hdr)
    log = np.array(res["log"])
    drift = (np.abs(log[-1, 1:] - log[0, 1:]) / np.maximum(np.abs(log[0, 1:]), 1e-300)).tolist()
    payload = {"command": "simulate", "dt": res["dt"], "dt_bound": res["dt_bound"],
               "relative_drift": dict(zip(["E0", "E1", "E2"], drift)),
               "tail_mass": float(np.abs(res["state"].u[[0, -1]]).max())}
    sweep = _floats(cfg["eps_sweep"]) if isinstance(cfg["eps_sweep"], str) else cfg["eps_sweep"]
    if sweep:
        rows = _eps_sweep(ps, sim, u0, p, sweep, cfg)
        write_csv(f"{out}_sweep.csv", rows, cfg)
        payload["sweep"] = rows
    write_json(f"{out}.json", payload, cfg)
    print(json.dumps(_jsonable({k: v for k, v in payload.items() if k != "sweep"})))
    return EXIT_OK


def _eps_sweep(ps, sim, u0, p, eps_list, cfg):
    from .rational import soliton_symbol
    phi = ps.gaussian(cfg["test_center"], cfg["test_width"])
    ref = None
    if p is not None:
        ref = zd_pairing(soliton_symbol(p), sim.n, sim.T_final, phi,
                         cfg["test_center"], cfg["test_width"])
    rows = []
    for eps in eps_list:
        c = ps.SimConfig.from_dict(dict(sim.to_dict(), eps=eps))
        st = ps.run(c, u0)["state"]
        w = ps.weak_pairing(st, phi, c)
        rows.append({"eps": eps, "pairing": w, "zd_pairing": ref,
                     "difference": abs(w - ref) if ref is not None else None})
    return rows


def zd_pairing(u0, n, t, phi, center, width, count=4001):
    """Trapezoidal quadrature of int ZD(t, x) phi(x) dx over center +- 7.5 width."""
    from . import zdlimit as zl
    xs = np.linspace(center - 7.5 * width, center + 7.5 * width, count)
    pr = zl._Prepared(u0, n)
    v = np.array([zl.zd_value(u0, n, t, x, pr).value for x in xs])
    bad = np.isnan(v)
    if np.any(bad):
        v[bad] = np.interp(xs[bad], xs[~bad], v[~bad])
    return float(np.trapezoid(v * phi(xs), xs))


def cmd_verify(args):
    from .checks import run_suite
    keys = ["seed", "fixtures", "out"]
    cfg = _merge(args, keys, {"seed": 0, "fixtures": None})
    try:
        results = run_suite(seed=int(cfg["seed"]), fixtures_dir=cfg["fixtures"])
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
        print(f"fixture error: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    width = max(len(r.name) for r in results)
    for r in results:
        mark = "PASS" if r.passed else "FAIL"
        print(f"{r.name:<{width}}  {mark}  value={r.value:.3e}  tol={r.tol:.1e}  {r.detail}")
    rows = [r.row() for r in results]
    if cfg.get("out"):
        write_csv(f"{cfg['out']}.csv", rows, cfg)
        write_json(f"{cfg['out']}.json", {"command": "verify", "rows": rows}, cfg)
    ok = all(r.passed for r in results)
    print(f"{sum(r.passed for r in results)}/{len(results)} checks passed")
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_report(args):
    keys = ["inputs", "out", "seed"]
    cfg = _merge(args, keys, {"inputs": [], "seed": 0})
    if not cfg["inputs"]:
        raise ConfigError("give --inputs FILE [FILE ...]")
    lines = ["# bolab report", ""]
    entries = []
    for path in cfg["inputs"]:
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from exc
        entries.append({"file": str(path), "command": doc.get("command"),
                        "config_hash": doc.get("config_hash"), "seed": doc.get("seed")})
        lines.append(f"## {path}")
        lines.append(f"command: {doc.get('command')}, config_hash: {doc.get('config_hash')}, "
                     f"seed: {doc.get('seed')}")
        for key in ("summary", "relative_drift"):
            if key in doc:
                lines.append(f"{key}: {json.dumps(doc[key], sort_keys=True)}")
        for key in ("rows", "sweep"):
            if key in doc and doc[key]:
                cols = list(doc[key][0])
                lines.append("")
                lines.append("| " + " | ".join(cols) + " |")
                lines.append("|" + "---|" * len(cols))
                for r in doc[key]:
                    lines.append("| " + " | ".join(_cell(r[c]) for c in cols) + " |")
        lines.append("")
    text = "\n".join(lines)
    if cfg.get("out"):
        Path(cfg["out"]).parent.mkdir(parents=True, exist_ok=True)
        Path(cfg["out"]).write_text(f"<!-- config_hash={config_hash(cfg)} seed={cfg['seed']} -->\n"
                                    + text + "\n")
    print(text)
    return EXIT_OK


def _cell(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


# ------------------------------------------------------------------- parser

def build_parser():
    ap = _Parser(prog="bolab", add_help=False, allow_abbrev=False,
                 description="Benjamin-Ono hierarchy: zero-dispersion limits, explicit "
                             "formula, solitons and small-dispersion simulation.")
    ap.add_argument("--help", action="help", help="show this help and exit")
    ap.add_argument("--version", action="version", version=f"bolab {__version__}")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    def new(name, helptext):
        p = sub.add_parser(name, add_help=False, allow_abbrev=False, help=helptext)
        p.add_argument("--help", action="help", help="show this help and exit")
        p.add_argument("--config", help="JSON file with parameters (flags override)")
        p.add_argument("--seed", type=int, help="64-bit seed recorded in outputs")
        p.add_argument("--out", help="output path prefix")
        return p

    def add_symbol(p):
        p.add_argument("--symbol", help="symbol JSON {poles:[{re_c,im_c,re_p,im_p}]}")
        p.add_argument("--soliton", help="use R_p for p given as RE,IM")

    p = new("zd", "zero-dispersion limit scan")
    add_symbol(p)
    p.add_argument("--n", type=int)
    p.add_argument("--t", type=float)
    p.add_argument("--x", help="MIN:MAX:COUNT")
    p.add_argument("--oracle", action="store_true", default=None,
                   help="add the linear-system boundary-limit column")
    p.add_argument("--method", choices=["aberth", "companion"])
    p.set_defaults(func=cmd_zd)

    p = new("soliton", "soliton spectrum, Wu residuals and velocities")
    p.add_argument("--p", action="append", help="soliton parameter RE,IM (repeatable)")
    p.add_argument("--m", help="comma-separated grid sizes")
    p.add_argument("--factor", type=float)
    p.add_argument("--t", type=float, help="time for the explicit-formula comparison")
    p.set_defaults(func=cmd_soliton)

    p = new("resolvent", "explicit formula or zero-dispersion resolvent")
    add_symbol(p)
    p.add_argument("--n", type=int)
    p.add_argument("--t", type=float)
    p.add_argument("--z", action="append", help="evaluation point RE,IM (repeatable)")
    p.add_argument("--m", type=int)
    p.add_argument("--factor", type=float)
    p.add_argument("--mode", choices=["explicit", "zd"])
    p.add_argument("--cramer", action="store_true", default=None,
                   help="also evaluate the linear-system value")
    p.add_argument("--dump", help="write the operator to a BOHG binary file")
    p.set_defaults(func=cmd_resolvent)

    p = new("simulate", "small-dispersion simulation")
    p.add_argument("--n", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--L", dest="L", type=float)
    p.add_argument("--P", dest="P", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--t-final", dest="T_final", type=float)
    p.add_argument("--cfl", type=float)
    p.add_argument("--dealias", type=float)
    p.add_argument("--initial", help="soliton:RE,IM | gaussian:CENTER,WIDTH | zero")
    p.add_argument("--times", help="comma-separated snapshot times")
    p.add_argument("--eps-sweep", dest="eps_sweep", help="comma-separated eps values")
    p.add_argument("--test-center", dest="test_center", type=float)
    p.add_argument("--test-width", dest="test_width", type=float)
    p.set_defaults(func=cmd_simulate)

    p = new("verify", "run the property suite")
    p.add_argument("--fixtures", help="directory of fixture JSON files")
    p.set_defaults(func=cmd_verify)

    p = new("report", "summarize JSON outputs")
    p.add_argument("--inputs", nargs="+")
    p.set_defaults(func=cmd_report)
    return ap


def _join_negative_values(argv):
    """Turn '--x -5:5:101' into '--x=-5:5:101' so values may start with '-'."""
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else ""
        if (a.startswith("--") and "=" not in a and len(nxt) > 1 and nxt[0] == "-"
                and (nxt[1].isdigit() or nxt[1] == ".")):
            out.append(f"{a}={nxt}")
            i += 2
        else:
            out.append(a)
            i += 1
    return out


def main(argv=None):
    ap = build_parser()
    argv = _join_negative_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = ap.parse_args(argv)
        if not getattr(args, "func", None):
            ap.print_help()
            return EXIT_CONFIG
        return args.func(args)
    except ConfigError as exc:
        print(f"bolab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BolabError as exc:
        print(f"bolab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except FloatingPointError as exc:
        print(f"bolab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
