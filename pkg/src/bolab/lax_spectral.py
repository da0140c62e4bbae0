"""Discrete spectrum of the Lax operator, Wu identities and soliton data."""
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import NoNegativeEigenvalue
from .hardy_grid import op_lax, op_Xstar
from .rational import soliton_symbol


@dataclass
class Eigenpair:
    value: float
    vector: np.ndarray
    residual: float


@dataclass
class SolitonData:
    p: complex
    lam: float
    phi: np.ndarray
    c: dict = field(default_factory=dict)


def _threshold(grid):
    return -10 * grid.dxi


def _spectrum(u0, grid):
    L = op_lax(grid, u0).mat
    H = 0.5 * (L + L.conj().T)
    defect = float(np.linalg.norm(L - L.conj().T) / max(np.linalg.norm(L), 1e-300))
    w, V = linalg.eigh(H)
    return L, H, w, V, defect


def discrete_spectrum(u0, grid, return_defect=False):
    """Eigenpairs of the grid Lax operator below -10 dxi, ascending.

    Eigenvectors are normalized in the grid L^2 norm and rotated so that
    <phi, Pi u0> is real and nonnegative.  An empty list means no discrete
    spectrum was found.
    """
    L, H, w, V, defect = _spectrum(u0, grid)
    h = grid.sample(u0.hardy_part())
    lnorm = np.max(np.abs(w))
    out = []
    for k in np.flatnonzero(w < _threshold(grid)):
        phi = V[:, k] / np.sqrt(grid.weight)
        ip = grid.inner(phi, h)
        if abs(ip) > 0:
            phi = phi * (abs(ip) / ip)
        res = np.linalg.norm(H @ phi - w[k] * phi) / (np.linalg.norm(phi) * lnorm)
        out.append(Eigenpair(float(w[k]), phi, float(res)))
    if return_defect:
        return out, defect
    return out


@dataclass
class WuResidual:
    eigenvalue: float
    overlap: float          # | |<phi, Pi u0>|^2 + 2 pi lam | / (2 pi |lam|)
    trace: float            # | lam I_+(phi) + <phi, Pi u0> | / (|lam| |I_+(phi)|)
    combination: float      # | <Pi u0, phi> I_+(phi) / (2 pi i) + i |


def wu_residuals(grid, lam, phi, h):
    ip = grid.inner(phi, h)
    tr = grid.trace(phi)
    r1 = abs(abs(ip) ** 2 + 2 * np.pi * lam) / (2 * np.pi * abs(lam))
    r2 = abs(lam * tr + ip) / (abs(lam) * abs(tr))
    r3 = abs(np.conj(ip) * tr / (2j * np.pi) + 1j)
    return WuResidual(float(lam), float(r1), float(r2), float(r3))


def wu_check(u0, grid):
    """Wu residuals for each discrete eigenpair of the Lax operator."""
    pairs = discrete_spectrum(u0, grid)
    if not pairs:
        raise NoNegativeEigenvalue("no eigenvalue below the essential threshold")
    h = grid.sample(u0.hardy_part())
    return [wu_residuals(grid, e.value, e.vector, h) for e in pairs]


def soliton_velocity(n, p):
    """(-1)^(n+1) (n+1) / (2 Im p)^n."""
    p = complex(p)
    if n < 1 or p.imag <= 0:
        raise ValueError("need n >= 1 and Im p > 0")
    return (-1) ** (n + 1) * (n + 1) / (2 * p.imag) ** n


def traveling_wave(p, x):
    """Samples of R_p(x) = 2 Im p / |x + p|^2."""
    p = complex(p)
    if p.imag <= 0:
        raise ValueError("Im p must be positive")
    x = np.asarray(x, dtype=float)
    return 2 * p.imag / np.abs(x + p) ** 2


def soliton_data(p, grid, nmax=3):
    """Lowest eigenpair of the Lax operator of R_p with velocities up to nmax."""
    pairs = discrete_spectrum(soliton_symbol(p), grid)
    if not pairs:
        raise NoNegativeEigenvalue("soliton eigenvalue not resolved on this grid")
    e = pairs[0]
    return SolitonData(complex(p), e.value, e.vector,
                       {n: soliton_velocity(n, p) for n in range(1, nmax + 1)})


def pole_from_eigenfunction(grid, phi):
    """-<X* phi, phi> / ||phi||^2, which recovers p for the soliton (diagnostic)."""
    X = op_Xstar(grid).mat
    return complex(-grid.inner(X @ phi, phi) / grid.inner(phi, phi))


def kernel_orthogonality_check(u0, c, n, grid, tol=None):
    """Is ker((n+1) L^n + c) nontrivial, and how much of Pi u0 lies in it?

    The kernel is searched among the discrete eigenvalues mu of L (those
    below -10 dxi): mu belongs when |(n+1) mu^n + c| <= tol.  The grid
    continuum near 0 is excluded because its eigenvectors are artifacts of
    truncation.
    """
    _, H, w, V, _ = _spectrum(u0, grid)
    if tol is None:
        tol = 1e-2 * max(1.0, abs(c))
    point = np.flatnonzero(w < _threshold(grid))
    ker = [k for k in point if abs((n + 1) * w[k] ** n + c) <= tol]
    h = grid.sample(u0.hardy_part())
    hn = grid.norm(h)
    if hn == 0:
        comp = 0.0
    elif ker:
        # V is orthonormal in the plain Euclidean sense
        coef = V[:, ker].conj().T @ h
        comp = float(np.linalg.norm(coef) / np.linalg.norm(h))
    else:
        comp = 0.0
    return {"nontrivial": bool(ker), "component": comp,
            "orthogonal_residual": float(np.sqrt(max(0.0, 1 - comp ** 2))),
            "kernel_eigenvalues": [float(w[k]) for k in ker],
            "point_spectrum": [float(w[k]) for k in point]}


def eigen_refinement(p, ms=(512, 1024, 2048), factor=20.0):
    """Errors |lam(M) + 1/(2 Im p)| along a refinement sequence."""
    from .hardy_grid import FourierGrid
    out = []
    target = -1 / (2 * complex(p).imag)
    for m in ms:
        g = FourierGrid(factor / complex(p).imag, m)
        e = soliton_data(p, g).lam
        out.append((m, e, abs(e - target) / abs(target)))
    return out


__all__ = ["Eigenpair", "SolitonData", "WuResidual", "discrete_spectrum", "wu_check",
           "wu_residuals", "soliton_velocity", "traveling_wave", "soliton_data",
           "pole_from_eigenfunction", "kernel_orthogonality_check", "eigen_refinement"]
