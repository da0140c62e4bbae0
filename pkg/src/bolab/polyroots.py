"""Polynomial roots, real/conjugate classification, characteristic polynomials."""
from dataclasses import dataclass, field

import numpy as np

from .errors import DegreeCollapse, NoConvergence
from .rational import ComplexPoly

TAU_REAL = 1e-8
PAIR_TOL = 1e-7
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class RootSet:
    roots: np.ndarray
    residuals: np.ndarray
    real_roots: np.ndarray = field(default_factory=lambda: np.zeros(0))
    conj_pairs: tuple = ()
    ambiguous: bool = False
    classified: bool = False

    @property
    def degree(self):
        return self.roots.size

    @property
    def upper(self):
        """Roots with positive imaginary part (unclassified view)."""
        return self.roots[self.roots.imag > 0]


def _residuals(p, r):
    return np.abs(p(r)) / np.maximum(p.scale_at(r), np.finfo(float).tiny)


def _aberth(c_desc, z, maxiter):
    """Simultaneous Aberth-Ehrlich iteration on descending coefficients.

    A root is frozen once its correction is at rounding level relative to
    its size or its residual is at rounding level relative to sum |a_k||z|^k.
    """
    d = c_desc.size - 1
    c_asc = c_desc[::-1]
    dc_asc = c_asc[1:] * np.arange(1, d + 1)
    absc = np.abs(c_asc)
    pw = np.ones((d, d + 1), dtype=complex)
    active = np.ones(d, dtype=bool)
    eps = np.finfo(float).eps
    for it in range(maxiter):
        np.cumprod(np.broadcast_to(z[:, None], (d, d)), axis=1, out=pw[:, 1:])
        pv = pw @ c_asc
        dv = pw[:, :-1] @ dc_asc
        scale = np.abs(pw) @ absc
        active &= np.abs(pv) > 4 * eps * scale
        if not active.any():
            return z, True
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            ratio = pv / dv
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, np.inf)
            s = np.sum(1.0 / diff, axis=1)
            w = ratio / (1.0 - ratio * s)
        w = np.where(np.isfinite(w) & active, w, 0)
        z = z - w
        active &= np.abs(w) > 2 * eps * np.maximum(1, np.abs(z))
        if not active.any():
            return z, True
    return z, False


def _newton_polish(p, z, steps=3):
    dp = p.deriv()
    for _ in range(steps):
        pv, dv = p(z), dp(z)
        ok = dv != 0
        step = np.where(ok, pv / np.where(ok, dv, 1), 0)
        z_new = z - step
        better = np.abs(p(z_new)) <= np.abs(pv)
        z = np.where(better, z_new, z)
    return z


def find_roots(p, method="aberth", maxiter=500, start=None):
    """All roots of ``p`` with relative residual bound, Newton-polished.

    ``method`` is "aberth" (simultaneous iteration from a circle sized by the
    Fujiwara bound) or "companion" (eigenvalues of the companion matrix).
    ``start`` replaces the circle by given distinct starting points, e.g. the
    roots of a nearby polynomial of the same degree.
    """
    p = p if isinstance(p, ComplexPoly) else ComplexPoly(p)
    d = p.degree
    if d < 1:
        raise ValueError("degree must be at least 1")
    c = p.coeffs / p.lead
    pm = ComplexPoly(c)
    if method == "companion":
        z = np.roots(c[::-1]).astype(complex)
        ok = True
    elif start is not None and np.size(start) == d:
        z, ok = _aberth(c[::-1], np.array(start, dtype=complex), maxiter)
    else:
        # Fujiwara bound on root moduli
        k = np.arange(1, d + 1)
        a = np.abs(c[::-1][1:])
        bound = 2 * np.max(a ** (1.0 / k)) if np.any(a) else 1.0
        if bound == 0:
            bound = 1.0
        # start inside the bound, off the real axis and off symmetric points
        radius = 0.5 * bound
        centre = -c[d - 1] / d
        ang = 2 * np.pi * np.arange(d) / d + 0.4
        z = centre + radius * np.exp(1j * ang)
        z, ok = _aberth(c[::-1], z, maxiter)
    z = _newton_polish(pm, z)
    res = _residuals(pm, z)
    if not ok or np.any(res > RESIDUAL_TOL):
        if method == "aberth":
            # retry from the companion matrix before giving up
            z2 = _newton_polish(pm, np.roots(c[::-1]).astype(complex))
            res2 = _residuals(pm, z2)
            if np.max(res2) < np.max(res):
                z, res = z2, res2
        if np.any(res > RESIDUAL_TOL):
            raise NoConvergence(f"root residual {np.max(res):.2e}",
                                partial=RootSet(z, res))
    return RootSet(roots=z, residuals=res)


def classify(rs, scale=1.0, tau_real=TAU_REAL, pair_tol=PAIR_TOL):
    """Split roots into sorted real roots and (upper, lower) conjugate pairs.

    ``scale`` is the size of the symbol; it only enters through the
    max(1, |r|) normalization of the thresholds and may be left at 1.
    """
    r = np.asarray(rs.roots, dtype=complex)
    s = np.maximum(scale, np.abs(r))
    im = np.abs(r.imag)
    ambiguous = bool(np.any((im > tau_real * s) & (im < 10 * tau_real * s)))
    is_real = im <= tau_real * s
    reals = np.sort(r[is_real].real)
    if reals.size > 1 and np.any(np.diff(reals) <= 0):
        ambiguous = True
    rest = list(r[~is_real])
    ups = sorted([x for x in rest if x.imag > 0], key=lambda x: (x.real, x.imag))
    lows = [x for x in rest if x.imag < 0]
    pairs = []
    for u in ups:
        if not lows:
            ambiguous = True
            break
        dist = [abs(u - np.conj(v)) for v in lows]
        j = int(np.argmin(dist))
        if dist[j] > pair_tol * max(1.0, abs(u)):
            ambiguous = True
        pairs.append((u, lows.pop(j)))
    if lows or len(pairs) != len(ups):
        ambiguous = True
    if reals.size + 2 * len(pairs) != r.size:
        ambiguous = True
    return RootSet(roots=r, residuals=rs.residuals, real_roots=reals,
                   conj_pairs=tuple(pairs), ambiguous=ambiguous, classified=True)


def char_poly(u0, n, t, z, pq=None):
    """(y - z) Q^n - (-1)^n (n+1) t P^n for u0 = P/Q with Q monic."""
    if n < 1:
        raise ValueError("n must be positive")
    P, Q = pq if pq is not None else u0.to_pq()
    if Q.degree < 1:
        raise DegreeCollapse("constant denominator")
    Qn = Q ** n
    Pn = P ** n
    out = ComplexPoly([-z, 1.0]) * Qn - ((-1) ** n * (n + 1) * t) * Pn
    if out.degree != 2 * n * u0.N + 1:
        raise DegreeCollapse(f"degree {out.degree} != {2 * n * u0.N + 1}")
    return out
