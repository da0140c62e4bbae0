"""Zero-dispersion limit via the characteristic equation.

For a real rational u0 = P/Q, the characteristic polynomial

    (y - z) Q(y)^n - (-1)^n (n+1) t P(y)^n

has 2nN+1 roots.  At real z = x off the critical set its real roots
y_0 < ... < y_{2l} give the limit as the alternating sum
sum_k (-1)^k u0(y_k).  An independent route solves the linear system on
the nN+1 upper half-plane roots for complex z and recovers the same value
as the boundary limit 2 Re lambda(t, x + i0).
"""
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import DegenerateSystem, NoConvergence
from .polyroots import RootSet, classify, find_roots
from .rational import ComplexPoly

DELTAS = (1e-3, 1e-4, 1e-5)


@dataclass
class ZdSample:
    t: float
    x: float
    n: int
    real_branches: np.ndarray
    ell: int
    value: float
    critical: bool
    oracle_value: float = float("nan")
    oracle_err: float = float("nan")
    derivative_signs: tuple = field(default=())

    def as_row(self):
        return {"t": self.t, "x": self.x, "n": self.n, "ell": self.ell,
                "critical": int(self.critical), "zd_value": self.value,
                "branches": ";".join(f"{b:.16g}" for b in self.real_branches),
                "oracle_value": self.oracle_value, "oracle_err": self.oracle_err}


class _Prepared:
    """Cached polynomial data of a symbol (P, Q, powers, roots of Q)."""

    def __init__(self, u0, n):
        self.u0, self.n = u0, n
        self.P, self.Q = u0.to_pq()
        self.Pn, self.Qn = self.P ** n, self.Q ** n
        self.alpha = (-1) ** n * (n + 1)
        self.qroots = np.concatenate([u0.poles, np.conj(u0.poles)])

    def poly(self, t, z):
        return ComplexPoly([-z, 1.0]) * self.Qn - (self.alpha * t) * self.Pn

    def roots(self, t, z, method="aberth", start=None):
        if t == 0:
            # (y - z) Q^n: avoid root-finding the n-fold roots of Q
            r = np.concatenate([[complex(z)], np.repeat(self.qroots, self.n)])
            p = self.poly(t, z)
            return r, np.abs(p(r)) / np.maximum(p.scale_at(r), 1e-300)
        p = self.poly(t, z)
        try:
            rs = find_roots(p, method=method, start=start)
        except NoConvergence:
            rs = find_roots(p, method="companion")
        r = self.polish(rs.roots, t, z)
        return r, np.abs(p(r)) / np.maximum(p.scale_at(r), 1e-300)

    def polish(self, r, t, z, steps=3):
        """Newton on y - z - alpha t u0(y)^n in partial-fraction form.

        Roots of the polynomial cluster around the n-fold roots of Q^n and
        are ill-conditioned there; the rational form has no such clusters.
        """
        r = np.asarray(r, dtype=complex).copy()
        u0, n, a = self.u0, self.n, self.alpha * t
        with np.errstate(all="ignore"):
            for _ in range(steps):
                u = u0(r)
                g = r - z - a * u ** n
                dg = 1 - a * n * u ** (n - 1) * u0.derivative(r)
                new = r - g / dg
                gn = new - z - a * u0(new) ** n
                ok = np.isfinite(new) & (np.abs(gn) < np.abs(g))
                if not np.any(ok):
                    break
                r = np.where(ok, new, r)
        return r

    def dG(self, y, t):
        """d/dy of y - alpha t u0(y)^n."""
        u = self.u0(y)
        du = self.u0.derivative(y)
        if np.isrealobj(y):
            du = du.real
        return 1 - self.alpha * self.n * t * u ** (self.n - 1) * du


def _prep(u0, n, prepared):
    if prepared is not None and prepared.u0 is u0 and prepared.n == n:
        return prepared
    return _Prepared(u0, n)


def zd_value(u0, n, t, x, prepared=None, method="aberth"):
    """Alternating sum over the real branches at (t, x); NaN when critical."""
    t, x = float(t), float(x)
    if u0.is_zero():
        return ZdSample(t, x, n, np.array([x]), 0, 0.0, False)
    pr = _prep(u0, n, prepared)
    roots, res = pr.roots(t, x, method)
    cls = classify(RootSet(roots, res))
    reals = cls.real_roots
    critical = cls.ambiguous or reals.size % 2 == 0
    signs = ()
    if not critical:
        d = pr.dG(reals, t)
        signs = tuple(int(s) for s in np.sign(d))
        expected = tuple((-1) ** k for k in range(reals.size))
        if signs != expected:
            critical = True
    ell = (reals.size - 1) // 2 if not critical else -1
    if critical:
        value = float("nan")
    else:
        v = u0(reals)
        value = float(np.sum(v * (-1.0) ** np.arange(reals.size)))
    return ZdSample(t, x, n, reals, ell, value, bool(critical), derivative_signs=signs)


@dataclass
class CramerSystem:
    matrix: np.ndarray
    rhs: np.ndarray
    upper_roots: np.ndarray
    solution: np.ndarray

    @property
    def size(self):
        return self.rhs.size

    @property
    def lam(self):
        return complex(self.solution[0])


def upper_roots(u0, n, t, z, prepared=None):
    pr = _prep(u0, n, prepared)
    roots, _ = pr.roots(t, z)
    up = roots[roots.imag > 0]
    return up


def cramer_system(u0, n, t, z, prepared=None):
    """The (nN+1)-square system for lambda(t, z) and the mu coefficients."""
    z = complex(z)
    if not z.imag > 0:
        raise ValueError("Im z must be positive")
    return _cramer_solve(u0, n, upper_roots(u0, n, t, z, prepared))


def _cramer_solve(u0, n, up):
    N = u0.N
    size = n * N + 1
    if up.size != size:
        raise DegenerateSystem(f"{up.size} upper roots, expected {size}")
    d = np.abs(up[:, None] - up[None, :]) + np.eye(size)
    if np.min(d) <= 1e-12 * max(1.0, np.max(np.abs(up))):
        raise DegenerateSystem("upper roots collide")
    if np.min(np.abs(up[:, None] - u0.poles[None, :])) <= 1e-12:
        raise DegenerateSystem("upper root at a pole of u0")
    v = u0(up)
    A = np.empty((size, size), dtype=complex)
    A[:, 0] = 1.0
    col = 1
    for m in range(n):
        for p in u0.poles:
            A[:, col] = v ** m / (up - p)
            col += 1
    try:
        sol = linalg.solve(A, v)
    except linalg.LinAlgError as exc:
        raise DegenerateSystem(str(exc)) from exc
    if not np.all(np.isfinite(sol)):
        raise DegenerateSystem("non-finite solution")
    return CramerSystem(A, v, up, sol)


def lambda_cramer(u0, n, t, z, prepared=None):
    """Pi ZD[u0](t, z) for Im z > 0 from the LU solution of the system."""
    if u0.is_zero():
        return 0j
    if t == 0:
        # the system degenerates; the value is Pi u0(z)
        return complex(u0.hardy_part()(complex(z)))
    return cramer_system(u0, n, t, z, prepared).lam


def lambda_vandermonde(u0, n, t, z, prepared=None):
    """sum of u0 over the nN+1 upper half-plane roots."""
    up = upper_roots(u0, n, t, z, prepared)
    return complex(np.sum(u0(up)))


def _extrapolate(hs, fs):
    """Value at h = 0 of the interpolating polynomial through (hs, fs)."""
    hs = np.asarray(hs, float)
    fs = np.asarray(fs)
    out = 0.0
    for i in range(hs.size):
        w = 1.0
        for j in range(hs.size):
            if j != i:
                w *= (0 - hs[j]) / (hs[i] - hs[j])
        out = out + w * fs[i]
    return out


def boundary_limit(u0, n, t, x, deltas=DELTAS, prepared=None):
    """Extrapolated 2 Re lambda(t, x + i delta) as delta -> 0.

    The deltas are scaled by (1 + |x|) and the samples are combined by
    polynomial (Richardson) extrapolation to delta = 0.
    """
    if u0.is_zero() or t == 0:
        hs = [d * (1 + abs(x)) for d in deltas]
        fs = [2 * lambda_cramer(u0, n, t, x + 1j * h).real for h in hs]
        return float(_extrapolate(hs, fs))
    pr = _prep(u0, n, prepared)
    hs = [d * (1 + abs(x)) for d in deltas]
    fs, start = [], None
    for h in hs:
        # each solve starts from the roots at the previous, nearby delta
        roots, _ = pr.roots(t, x + 1j * h, start=start)
        start = roots
        fs.append(2 * _cramer_solve(u0, n, roots[roots.imag > 0]).lam.real)
    return float(_extrapolate(hs, fs))


def workers():
    env = os.environ.get("BOLAB_THREADS")
    n = os.cpu_count() or 1
    if env:
        try:
            n = max(1, min(n, int(env)))
        except ValueError:
            pass
    return n


def zd_scan(u0, n, t, x_min, x_max, count, oracle=False, max_workers=None):
    """Uniform scan of zd_value; samples are independent and merged in order."""
    if count < 2:
        raise ValueError("count must be at least 2")
    xs = np.linspace(x_min, x_max, int(count))
    pr = _Prepared(u0, n) if not u0.is_zero() else None

    def one(x):
        s = zd_value(u0, n, t, x, prepared=pr)
        if oracle and not s.critical and t != 0 and not u0.is_zero():
            try:
                s.oracle_value = boundary_limit(u0, n, t, x, prepared=pr)
                s.oracle_err = abs(s.oracle_value - s.value)
            except DegenerateSystem:
                pass
        elif oracle and not s.critical:
            s.oracle_value = s.value if u0.is_zero() else float(u0(x))
            s.oracle_err = abs(s.oracle_value - s.value)
        return s

    nw = max_workers or workers()
    if nw <= 1:
        return [one(x) for x in xs]
    with ThreadPoolExecutor(max_workers=nw) as ex:
        return list(ex.map(one, xs))


def _dG_numerator(u0, n, t):
    """Numerator polynomial of 1 - alpha n t u0^{n-1} u0' over Q^{n+1}."""
    P, Q = u0.to_pq()
    alpha = (-1) ** n * (n + 1)
    W = P.deriv() * Q - P * Q.deriv()
    return Q ** (n + 1) - (alpha * n * t) * (P ** (n - 1)) * W


def critical_set(u0, n, t, x_range=None, method="derivative", tol=1e-8, count=2001):
    """Critical values of y -> y - (-1)^n (n+1) t u0(y)^n inside x_range.

    method="derivative": real zeros of the derivative, mapped forward.
    method="bisection": sign changes of the branch count on a scan, refined
    by bisection to width ``tol``.
    """
    if t == 0 or u0.is_zero():
        return np.zeros(0)
    alpha = (-1) ** n * (n + 1)

    def g(y):
        return y - alpha * t * u0(y) ** n

    if method == "derivative":
        num = _dG_numerator(u0, n, t)
        rs = find_roots(num).roots
        ys = np.sort(rs[np.abs(rs.imag) <= 1e-7 * np.maximum(1, np.abs(rs))].real)
        xs = np.sort(g(ys))
        if x_range is not None:
            xs = xs[(xs >= x_range[0]) & (xs <= x_range[1])]
        return xs
    if x_range is None:
        raise ValueError("bisection needs an x range")
    pr = _Prepared(u0, n)

    def count_real(x):
        s = zd_value(u0, n, t, x, prepared=pr)
        return s.real_branches.size if not s.critical else -1

    xs = np.linspace(x_range[0], x_range[1], count)
    cs = [count_real(x) for x in xs]
    out = []
    i = 0
    while i < len(xs) - 1:
        if cs[i] < 0:
            i += 1
            continue
        j = i + 1
        while j < len(xs) and cs[j] < 0:
            j += 1
        if j < len(xs) and cs[j] != cs[i]:
            a, b, ca = xs[i], xs[j], cs[i]
            while b - a > tol:
                mid = 0.5 * (a + b)
                cm = count_real(mid)
                if cm == ca:
                    a = mid
                elif cm < 0:
                    # ambiguous midpoint: we are on top of the caustic
                    break
                else:
                    b = mid
            out.append(0.5 * (a + b))
        i = j
    return np.array(out)


def breaking_time(u0, n, samples=200001, radius=None):
    """Smallest t > 0 at which the characteristic map stops being monotone.

    Brute force over a fine y grid: t* = 1 / max(alpha n u0^{n-1} u0').
    """
    alpha = (-1) ** n * (n + 1)
    r = radius or 20 * (1 + np.max(np.abs(u0.poles)))
    y = np.linspace(-r, r, samples)
    s = alpha * n * u0(y) ** (n - 1) * u0.derivative(y).real
    m = np.max(s)
    return float(1 / m) if m > 0 else float("inf")


def vandermonde_ratio_check(v):
    """Relative residual of det(V~) - (sum v) det(V), V~ skipping one power."""
    v = np.asarray(v, dtype=complex).reshape(-1)
    k = v.size
    if k == 1:
        # V = (1), V~ = (v)
        return 0.0
    V = v[:, None] ** np.arange(k)
    Vt = V.copy()
    Vt[:, -1] = v ** k
    s1, l1 = np.linalg.slogdet(Vt)
    s0, l0 = np.linalg.slogdet(V)
    ratio = s1 / s0 * np.exp(l1 - l0)
    target = np.sum(v)
    scale = max(abs(target), np.max(np.abs(v)))
    return float(abs(ratio - target) / scale)


def sum_rule_check(u0, n, t, x, prepared=None):
    """|sum over all roots of u0(y_j)| normalized by 1 + max term."""
    if t == 0:
        raise ValueError("the sum rule needs t != 0")
    pr = _prep(u0, n, prepared)
    roots, _ = pr.roots(t, x)
    v = u0(roots.astype(complex))
    return float(abs(np.sum(v)) / (1 + np.max(np.abs(v))))


def root_sum(u0, n, t, x):
    """Closed form of sum_j u0(y_j) over all roots at real z = x.

    At the roots u0^n = (y - x) / (alpha t).  For n >= 2 the sum vanishes.
    For n = 1 it equals -(sum_j y_j - (2N+1) x) / (2t) with
    sum_j y_j = x + 2 sum Re(poles), i.e. (N x - sum Re(poles)) / t.
    """
    if t == 0:
        raise ValueError("needs t != 0")
    if n >= 2:
        return 0.0
    return float((u0.N * x - np.sum(u0.poles.real)) / t)


def consistency_zd(u0, n, t, x):
    """Compare the three expressions of the limit at a non-critical x.

    Returns the alternating sum, the split sum over real and complex roots
    2 sum_k u0(y_2k) + sum_complex u0 - root_sum, and the extrapolated boundary value
    2 Re lambda(t, x + i0) of the linear-system solution.
    """
    if t == 0:
        return {"skipped": True}
    pr = _Prepared(u0, n)
    s = zd_value(u0, n, t, x, prepared=pr)
    if s.critical:
        return {"skipped": True, "critical": True}
    roots, res = pr.roots(t, x)
    cls = classify(RootSet(roots, res))
    reals = cls.real_roots
    ups = np.array([a for a, _ in cls.conj_pairs], dtype=complex)
    lows = np.array([b for _, b in cls.conj_pairs], dtype=complex)
    alt = s.value
    # the split form equals the alternating sum plus the total root sum
    split = (2 * np.sum(u0(reals[0::2])) + np.sum(u0(ups)).real + np.sum(u0(lows)).real
             - root_sum(u0, n, t, x))
    boundary = boundary_limit(u0, n, t, x, prepared=pr)
    vals = np.array([alt, split, boundary])
    spread = float(np.max(vals) - np.min(vals)) / (1 + abs(alt))
    return {"skipped": False, "alternating": float(alt), "split": float(split),
            "boundary": float(boundary), "spread": spread}


def noncritical_mask(u0, n, t, xs, margin=0.02):
    """True where x is at distance >= margin (1 + |x|) from the critical set."""
    xs = np.asarray(xs, dtype=float)
    crit = critical_set(u0, n, t)
    if crit.size == 0:
        return np.ones(xs.shape, dtype=bool)
    d = np.min(np.abs(xs[..., None] - crit), axis=-1)
    return d >= margin * (1 + np.abs(xs))
