"""Exact Toeplitz calculus on rational symbols.

T_u f = Pi(u f) is computed by exact multiplication of pole expansions
followed by dropping the upper half-plane poles.  A second, independent
route evaluates the closed formula for T_u^n f,

    T^n f = u^n f - sum_{k<n} u^{n-1-k} sum_j c_j (T^k f)(p_j) / (y - p_j),

where the values (T^k f)(p_j) come from the pole-value recursion.
"""
import numpy as np

from .errors import PoleCollision
from .rational import (IDENTIFY_TOL, NEAR_TOL, HardyRational, PoleExpansion,
                       _scale, hardy_project, multiply)


def _check_collisions(u0, f):
    for q in f.poles:
        for p in u0.poles:
            d = abs(q - np.conj(p))
            s = _scale(q)
            if IDENTIFY_TOL * s < d <= NEAR_TOL * s:
                raise PoleCollision(f"pole {q} of f nearly collides with {np.conj(p)}")


def toeplitz_apply(u0, f):
    """Pi(u0 f) as an exact Hardy rational."""
    if u0.is_zero() or f.is_zero():
        return HardyRational()
    _check_collisions(u0, f)
    return hardy_project(multiply(u0.expansion(), f))


def toeplitz_power_apply(u0, n, f):
    """T_{u0}^n f by n-fold application."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    out = f
    for _ in range(n):
        out = toeplitz_apply(u0, out)
    return out


def _value_at_pole(u0, fv, dfj, j):
    # c_j f'(p_j) + sum_{l!=j} c_l (f(p_l)-f(p_j))/(p_l-p_j)
    #   + f(p_j) sum_l conj(c_l)/(p_j - conj(p_l))
    c, p = u0.residues, u0.poles
    pj = p[j]
    val = c[j] * dfj
    for l in range(u0.N):
        if l != j:
            val += c[l] * (fv[l] - fv[j]) / (p[l] - pj)
    val += fv[j] * np.sum(np.conj(c) / (pj - np.conj(p)))
    return complex(val)


def toeplitz_value_at_pole(u0, f, j):
    """(T_{u0} f)(p_j) from the values of f and f' at the poles of u0."""
    if u0.is_zero() or f.is_zero():
        return 0j
    _check_collisions(u0, f)
    return _value_at_pole(u0, f(u0.poles), f.derivative()(u0.poles[j]), j)


def _symbol_powers(u0, n):
    """[u0^0 (as None), u0^1, ..., u0^n] as full pole expansions."""
    e = u0.expansion()
    out = [None, e]
    for _ in range(2, n + 1):
        out.append(multiply(out[-1], e))
    return out


def formula_expansion(u0, n, f):
    """T^n f from the closed inductive formula, as a full pole expansion.

    The upper half-plane poles cancel only up to rounding; callers decide
    what to do with the residue.  Values (T^k f)(p_j) are obtained by the
    pole-value recursion, where T^{k-1} f and its derivative at the p_j are
    read off the Laurent series of the level k-1 formula.
    """
    if n == 0:
        return PoleExpansion(f.poles, f.coeffs)
    powers = _symbol_powers(u0, n)
    c, p = u0.residues, u0.poles

    def build(level, taus):
        # u^level f - sum_k u^{level-1-k} sum_j c_j tau[k][j]/(y - p_j)
        expr = multiply(powers[level], f) if level > 0 else PoleExpansion(f.poles, f.coeffs)
        for k in range(level):
            simple = PoleExpansion.from_terms([(c[j] * taus[k][j], p[j], 1) for j in range(u0.N)])
            m = level - 1 - k
            term = simple if m == 0 else multiply(powers[m], simple)
            expr = expr - term
        return expr

    # taus[k][j] = (T^k f)(p_j); level k+1 of the formula needs taus[0..k]
    taus = [f(p)]
    prev = PoleExpansion(f.poles, f.coeffs)
    for k in range(1, n + 1):
        prev = build(k, taus)
        if k == n:
            break
        # (T^k f)(p_j) from T^{k-1} f, whose regular part at p_j is read from
        # the Laurent series of the previous level
        last = build(k - 1, taus) if k > 1 else PoleExpansion(f.poles, f.coeffs)
        series = [last.laurent(q, 1, 0) for q in p]
        vals = np.array([s[0] for s in series])
        taus.append(np.array([_value_at_pole(u0, vals, series[j][1], j)
                              for j in range(u0.N)]))
    return prev


def toeplitz_power_formula(u0, n, f):
    """Hardy part of the closed-formula expansion of T^n f, plus the size
    of the cancelled upper half-plane residue (should be rounding level)."""
    full = formula_expansion(u0, n, f)
    upper = [c for q, c in zip(full.poles, full.coeffs) if q.imag > 0]
    leftover = max((float(np.max(np.abs(c))) for c in upper if c.size), default=0.0)
    return hardy_project(full), leftover


def apply_D(f):
    """D = (1/i) d/dy on a Hardy rational."""
    return f.derivative() * (-1j)


def lax_apply(u0, f):
    """L f = D f - T_{u0} f."""
    return apply_D(f) - toeplitz_apply(u0, f)


def lax_symbols(u0, n):
    """[L^k Pi u0 for k = 0..n] computed exactly."""
    out = [u0.hardy_part()]
    for _ in range(n):
        out.append(lax_apply(u0, out[-1]).pruned())
    return out


def symbol_toeplitz_apply(b, f):
    """Pi(b f) for any decaying pole expansion b (not necessarily real)."""
    if b.is_zero() or f.is_zero():
        return HardyRational()
    return hardy_project(multiply(b, f))


def abs_D_symbol(u0):
    """|D| u0 as a pole expansion: D on the Hardy part, -D on its conjugate."""
    h = u0.hardy_part()
    return apply_D(h) - apply_D(h.conj())


def B_apply(u0, n, f, symbols=None):
    """i (T_{g_n} + T_{conj g_n} - sum_j T_{g_j} T_{conj g_{n-1-j}}) f, g_k = L^k Pi u0."""
    if n < 1:
        raise ValueError("n must be positive")
    if u0.is_zero() or f.is_zero():
        return HardyRational()
    g = symbols if symbols is not None else lax_symbols(u0, n)
    acc = symbol_toeplitz_apply(g[n], f) + symbol_toeplitz_apply(g[n].conj(), f)
    for j in range(n):
        inner = symbol_toeplitz_apply(g[n - 1 - j].conj(), f)
        acc = acc - symbol_toeplitz_apply(g[j], inner)
    return acc * 1j


def B1_direct_apply(u0, f):
    """i (T_{|D|u0} - T_{u0}^2) f."""
    if u0.is_zero() or f.is_zero():
        return HardyRational()
    a = symbol_toeplitz_apply(abs_D_symbol(u0), f)
    return (a - toeplitz_power_apply(u0, 2, f)) * 1j
