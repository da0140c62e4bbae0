"""Property suite behind `bolab verify`: seeded randomized identity checks."""
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import toeplitz_exact as te
from . import zdlimit as zl
from .hardy_grid import (FourierGrid, amplitude, commutator_check, op_B_n, op_lax,
                         op_Xstar, resolvent_norm)
from .lax_spectral import discrete_spectrum, soliton_velocity, wu_residuals
from .rational import HardyRational, RealRationalSymbol


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    tol: float
    detail: str = ""

    def __post_init__(self):
        self.passed = bool(self.passed)
        self.value = float(self.value)
        self.tol = float(self.tol)

    def row(self):
        return {"check": self.name, "passed": int(self.passed), "value": self.value,
                "tol": self.tol, "detail": self.detail}


def random_symbol(rng, n_max=3, im_range=(0.5, 2.0), c_max=2.0, re_range=(-2.0, 2.0)):
    """Random real rational symbol with N <= n_max, |c| <= c_max."""
    N = int(rng.integers(1, n_max + 1))
    while True:
        p = rng.uniform(*re_range, N) + 1j * rng.uniform(*im_range, N)
        if N == 1 or np.min(np.abs(p[:, None] - p[None, :]) + 10 * np.eye(N)) > 0.2:
            break
    r = c_max * np.sqrt(rng.uniform(0, 1, N))
    c = r * np.exp(2j * np.pi * rng.uniform(0, 1, N))
    return RealRationalSymbol(c, p)


def random_hardy(rng, k_max=3, im_range=(0.3, 2.0)):
    k = int(rng.integers(1, k_max + 1))
    q = rng.uniform(-2, 2, k) - 1j * rng.uniform(*im_range, k)
    c = rng.normal(size=k) + 1j * rng.normal(size=k)
    return HardyRational(list(q), [[ci] for ci in c])


def load_fixtures(directory=None):
    """Fixture records from a directory (default: the bundled ones)."""
    if directory is None:
        files = sorted((p for p in resources.files("bolab").joinpath("fixtures").iterdir()
                        if p.name.endswith(".json")), key=lambda p: p.name)
    else:
        files = sorted(Path(directory).glob("*.json"))
    out = []
    for f in files:
        rec = json.loads(f.read_text())
        rec["symbol_obj"] = RealRationalSymbol.from_dict(rec["symbol"])
        out.append(rec)
    return out


def _max_or_zero(vals):
    return float(max(vals)) if len(vals) else 0.0


def check_sum_rule(rng, count=20):
    worst = []
    for _ in range(count):
        u0 = random_symbol(rng)
        n = int(rng.integers(2, 4))
        t = float(rng.choice([-1, 1]) * rng.uniform(0.1, 1.5))
        x = float(rng.uniform(-4, 4))
        worst.append(zl.sum_rule_check(u0, n, t, x))
    return CheckResult("sum_rule_n>=2", max(worst) <= 1e-9, max(worst), 1e-9)


def check_root_sum_n1(rng, count=10):
    errs = []
    for _ in range(count):
        u0 = random_symbol(rng)
        t = float(rng.uniform(0.1, 1.5))
        x = float(rng.uniform(-4, 4))
        roots, _ = zl._Prepared(u0, 1).roots(t, x)
        v = u0(roots.astype(complex))
        want = zl.root_sum(u0, 1, t, x)
        errs.append(abs(np.sum(v) - want) / (1 + np.max(np.abs(v))))
    return CheckResult("root_sum_n1", max(errs) <= 1e-9, max(errs), 1e-9)


def check_vandermonde(rng, count=20):
    errs = []
    for _ in range(count):
        k = int(rng.integers(2, 13))
        v = rng.normal(size=k) + 1j * rng.normal(size=k)
        errs.append(zl.vandermonde_ratio_check(v))
    return CheckResult("vandermonde", max(errs) <= 1e-10, max(errs), 1e-10)


def check_t0(fixtures):
    errs = []
    xs = np.linspace(-5, 5, 101)
    for rec in fixtures:
        u0 = rec["symbol_obj"]
        for n in (1, 2):
            vals = np.array([zl.zd_value(u0, n, 0.0, x).value for x in xs])
            errs.append(np.max(np.abs(vals - u0(xs))))
    return CheckResult("t0_identity", max(errs) <= 1e-12, max(errs), 1e-12)


def check_zd_oracle(fixtures, per=8):
    errs = []
    for rec in fixtures:
        u0 = rec["symbol_obj"]
        for n in (1, 2):
            pr = zl._Prepared(u0, n)
            for t in (0.3, 1.0):
                xs = np.linspace(-4, 4, 4 * per)
                xs = xs[zl.noncritical_mask(u0, n, t, xs)][:per]
                for x in xs:
                    v = zl.zd_value(u0, n, t, x, pr).value
                    o = zl.boundary_limit(u0, n, t, x, prepared=pr)
                    errs.append(abs(v - o) / (1 + abs(v)))
    return CheckResult("zd_oracle", _max_or_zero(errs) <= 1e-6, _max_or_zero(errs), 1e-6)


def check_toeplitz_formula(rng, count=4):
    errs = []
    y = np.linspace(-4, 4, 17)
    for _ in range(count):
        u0 = random_symbol(rng)
        f = random_hardy(rng)
        for n in (1, 2, 3):
            a = te.toeplitz_power_apply(u0, n, f)
            b, _ = te.toeplitz_power_formula(u0, n, f)
            errs.append(np.max(np.abs(a(y) - b(y))) / max(np.max(np.abs(a(y))), 1e-300))
    return CheckResult("toeplitz_formula", max(errs) <= 1e-10, max(errs), 1e-10)


def check_b1(rng, fixtures):
    errs = []
    y = np.linspace(-4, 4, 17)
    for rec in fixtures:
        f = random_hardy(rng)
        a = te.B_apply(rec["symbol_obj"], 1, f)
        b = te.B1_direct_apply(rec["symbol_obj"], f)
        errs.append(np.max(np.abs(a(y) - b(y))) / max(np.max(np.abs(b(y))), 1e-300))
    return CheckResult("b1_identity", max(errs) <= 1e-8, max(errs), 1e-8)


def check_skew(fixtures, m=256):
    errs = []
    for rec in fixtures:
        g = FourierGrid.for_symbol(rec["symbol_obj"], m=m)
        for n in (1, 2):
            errs.append(op_B_n(g, rec["symbol_obj"], n).skew_defect())
    return CheckResult("B_skew_adjoint", max(errs) <= 1e-10, max(errs), 1e-10)


def check_solitons(fixtures, m=512):
    out = []
    for rec in fixtures:
        sol = rec.get("soliton")
        if not sol:
            continue
        p = complex(*sol["p"])
        u0 = rec["symbol_obj"]
        lam = float(sol["lambda"])
        exact = te.lax_apply(u0, u0.hardy_part()) - u0.hardy_part() * lam
        out.append(CheckResult(f"eigen_relation[{rec['name']}]",
                               exact.max_abs_coeff() <= 1e-12, exact.max_abs_coeff(), 1e-12))
        g = FourierGrid.for_symbol(u0, m=m)
        pairs = discrete_spectrum(u0, g)
        if not pairs:
            out.append(CheckResult(f"soliton_lambda[{rec['name']}]", False, float("inf"), 1e-2,
                                   "no discrete eigenvalue"))
            continue
        e = pairs[0]
        rel = abs(e.value - lam) / abs(lam)
        out.append(CheckResult(f"soliton_lambda[{rec['name']}]", rel <= 1e-2, rel, 1e-2))
        wu = wu_residuals(g, e.value, e.vector, g.sample(u0.hardy_part()))
        w = max(wu.overlap, wu.trace)
        out.append(CheckResult(f"wu[{rec['name']}]", w <= 0.05, w, 0.05))
        verr = max(abs(soliton_velocity(int(k), p) - float(v))
                   for k, v in sol.get("velocities", {}).items())
        out.append(CheckResult(f"velocities[{rec['name']}]", verr <= 1e-12, verr, 1e-12))
    return out


def check_resolvent(rng, fixtures, m=256, count=5, slack=0.05):
    worst_norm, worst_amp = 0.0, 0.0
    for rec in fixtures:
        u0 = rec["symbol_obj"]
        g = FourierGrid.for_symbol(u0, m=m)
        X = op_Xstar(g).mat
        L = op_lax(g, u0).mat
        for n, t in ((1, 0.5), (2, -0.7)):
            A = X - (n + 1) * t * np.linalg.matrix_power(L, n)
            for im in (0.5, 1.0, 2.0):
                z = complex(rng.uniform(-2, 2), im)
                worst_norm = max(worst_norm, resolvent_norm(A, z) * im)
                for _ in range(count):
                    f = g.sample(random_hardy(rng))
                    a = abs(amplitude(g, A, z, f))
                    worst_amp = max(worst_amp, a / (g.norm(f) / (2 * np.sqrt(np.pi * im))))
    return [CheckResult("resolvent_bound", worst_norm <= 1 + slack, worst_norm, 1 + slack),
            CheckResult("amplitude_bound", worst_amp <= 1 + slack, worst_amp, 1 + slack)]


def check_commutator(fixtures, ms=(256, 512)):
    out = []
    for rec in fixtures[:1]:
        u0 = rec["symbol_obj"]
        for n in (1, 2):
            res = [commutator_check(u0, n, FourierGrid(40.0 / min(u0.poles.imag), m))["residual"]
                   for m in ms]
            out.append(CheckResult(f"commutator[n={n}]", res[-1] < res[0], res[-1], res[0],
                                   " -> ".join(f"{r:.3e}" for r in res)))
    return out


def run_suite(seed=0, fixtures_dir=None):
    """Run every check; returns a list of CheckResult."""
    rng = np.random.default_rng(seed)
    fx = load_fixtures(fixtures_dir)
    results = [check_sum_rule(rng), check_root_sum_n1(rng), check_vandermonde(rng),
               check_t0(fx), check_zd_oracle(fx), check_toeplitz_formula(rng),
               check_b1(rng, fx), check_skew(fx)]
    results += check_solitons(fx)
    results += check_resolvent(rng, fx)
    results += check_commutator(fx)
    return results
