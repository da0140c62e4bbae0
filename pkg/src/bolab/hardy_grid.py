"""Hardy-space operators on a truncated Fourier half-line grid.

Functions in L^2_+ are represented by samples of their Fourier transform
at the staggered points xi_m = (m + 1/2) dxi, m = 0..M-1, with
dxi = xi_max / M.  The L^2 inner product is (dxi / 2 pi) sum f conj(g).

X* acts as i d/dxi.  It is discretized by a forward difference with the
outflow closure h(xi_max) = 0, which makes Im <X* f, f> <= 0 exactly, so
every A = X* - (Hermitian) obeys ||(A - z)^{-1}|| <= 1 / Im z on the grid.
"""
import json
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import SingularSystem
from .rational import PoleExpansion, RealRationalSymbol
from .toeplitz_exact import lax_symbols

MAGIC = b"BOHG"


class FourierGrid:
    """Half-line frequency grid with cutoff ``xi_max`` and ``m`` samples."""

    def __init__(self, xi_max, m):
        xi_max, m = float(xi_max), int(m)
        if not xi_max > 0:
            raise ValueError("xi_max must be positive")
        if m < 64:
            raise ValueError("grid needs at least 64 samples")
        self.xi_max = xi_max
        self.m = m
        self.dxi = xi_max / m
        self.xi = (np.arange(m) + 0.5) * self.dxi
        self.weight = self.dxi / (2 * np.pi)

    @classmethod
    def for_symbol(cls, u0, m=1024, factor=20.0, xi_min=None):
        """Cutoff xi_max = factor / min Im p so the data decays to e^-factor."""
        imp = np.min(u0.poles.imag) if u0.N else 1.0
        xi_max = factor / imp
        if xi_min is not None:
            xi_max = max(xi_max, xi_min)
        return cls(xi_max, m)

    def refined(self, factor=2):
        return FourierGrid(self.xi_max, self.m * factor)

    def sample(self, f):
        """Fourier samples of a pole expansion (or a Hardy function)."""
        if isinstance(f, RealRationalSymbol):
            f = f.hardy_part()
        return f.fourier(self.xi)

    def inner(self, f, g):
        return self.weight * np.vdot(g, f)

    def norm(self, f):
        return float(np.sqrt(self.weight * np.sum(np.abs(f) ** 2)))

    def trace(self, h):
        """I_+(h) = h(0+) by quadratic extrapolation from the first 3 samples."""
        h = np.asarray(h)
        return 15 / 8 * h[0] - 5 / 4 * h[1] + 3 / 8 * h[2]

    def trace_vector(self):
        """Row vector w with I_+(h) = w @ h."""
        w = np.zeros(self.m)
        w[:3] = [15 / 8, -5 / 4, 3 / 8]
        return w

    def to_dict(self):
        return {"xi_max": self.xi_max, "m": self.m}

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(d["xi_max"], d["m"])
        except KeyError as exc:
            raise ValueError(f"grid config missing {exc}") from exc

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def __repr__(self):
        return f"FourierGrid(xi_max={self.xi_max:g}, m={self.m})"


@dataclass
class GridOperator:
    mat: np.ndarray
    name: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.mat.shape

    def __matmul__(self, other):
        if isinstance(other, GridOperator):
            return GridOperator(self.mat @ other.mat, f"({self.name})({other.name})")
        return self.mat @ other

    def __add__(self, other):
        return GridOperator(self.mat + other.mat, f"{self.name} + {other.name}")

    def __sub__(self, other):
        return GridOperator(self.mat - other.mat, f"{self.name} - {other.name}")

    def __mul__(self, a):
        return GridOperator(a * self.mat, f"{a}*{self.name}")

    __rmul__ = __mul__

    def __neg__(self):
        return GridOperator(-self.mat, f"-{self.name}")

    def adjoint(self):
        return GridOperator(self.mat.conj().T, f"({self.name})*")

    def power(self, n):
        """n-th power by repeated multiplication."""
        out = np.eye(self.mat.shape[0], dtype=complex)
        for _ in range(n):
            out = out @ self.mat
        return GridOperator(out, f"({self.name})^{n}")

    def hermitian_defect(self):
        """||A - A*|| / ||A|| in Frobenius norm."""
        nrm = np.linalg.norm(self.mat)
        return float(np.linalg.norm(self.mat - self.mat.conj().T) / nrm) if nrm else 0.0

    def skew_defect(self):
        """||A + A*|| / ||A|| in Frobenius norm."""
        nrm = np.linalg.norm(self.mat)
        return float(np.linalg.norm(self.mat + self.mat.conj().T) / nrm) if nrm else 0.0


# ------------------------------------------------------------------ operators

def op_identity(grid):
    return GridOperator(np.eye(grid.m, dtype=complex), "Id")


def op_Xstar(grid):
    """i (h_{m+1} - h_m) / dxi with h_M = 0."""
    m = grid.m
    a = (np.eye(m, k=1) - np.eye(m)) * (1j / grid.dxi)
    return GridOperator(a.astype(complex), "X*")


def op_D(grid):
    return GridOperator(np.diag(grid.xi).astype(complex), "D")


def _kernel_matrix(grid, fhat):
    """(dxi/2pi) fhat(xi_m - xi_l) as a dense Toeplitz matrix."""
    k = np.arange(grid.m) * grid.dxi
    col = fhat(k)
    row = fhat(-k)
    return grid.weight * linalg.toeplitz(col, row)


def _expansion(symbol):
    if isinstance(symbol, RealRationalSymbol):
        return symbol.expansion()
    if isinstance(symbol, PoleExpansion):
        return symbol
    raise TypeError("symbol must be a RealRationalSymbol or a pole expansion")


def op_toeplitz(grid, symbol):
    """Grid Toeplitz operator T_b with kernel sampled from the exact transform."""
    e = _expansion(symbol)
    if e.is_zero():
        return GridOperator(np.zeros((grid.m, grid.m), complex), "T[0]")
    return GridOperator(_kernel_matrix(grid, e.fourier), "T")


def op_toeplitz_absD(grid, u0):
    """T_{|D| u} with the multiplier |xi| applied to the exact transform of u."""
    e = _expansion(u0)
    return GridOperator(_kernel_matrix(grid, lambda x: np.abs(x) * e.fourier(x)), "T[|D|u]")


def op_lax(grid, u0, eps=1.0):
    """eps D - T_u."""
    return GridOperator(eps * op_D(grid).mat - op_toeplitz(grid, u0).mat, "L")


def op_B_n(grid, u0, n, symbols=None):
    """i (T_{g_n} + T_{conj g_n} - sum_j T_{g_j} T_{conj g_{n-1-j}}), g_k = L^k Pi u."""
    if n < 1:
        raise ValueError("n must be positive")
    if u0.is_zero():
        return GridOperator(np.zeros((grid.m, grid.m), complex), f"B{n}[0]")
    g = symbols if symbols is not None else lax_symbols(u0, n)
    T = [op_toeplitz(grid, gk).mat for gk in g]
    Tc = [op_toeplitz(grid, gk.conj()).mat for gk in g]
    acc = T[n] + Tc[n]
    for j in range(n):
        acc = acc - T[j] @ Tc[n - 1 - j]
    return GridOperator(1j * acc, f"B{n}")


def op_B1_direct(grid, u0):
    """i (T_{|D|u} - T_u^2), assembled without the Lax symbols."""
    T = op_toeplitz(grid, u0).mat
    return GridOperator(1j * (op_toeplitz_absD(grid, u0).mat - T @ T), "B1 direct")


# -------------------------------------------------------------------- solves

def resolvent_solve(A, z, rhs, return_residual=False):
    """Solve (A - z) h = rhs by dense LU with partial pivoting."""
    z = complex(z)
    if not z.imag > 0:
        raise ValueError("Im z must be positive")
    a = A.mat if isinstance(A, GridOperator) else np.asarray(A)
    m = a.shape[0]
    shifted = a - z * np.eye(m)
    try:
        lu = linalg.lu_factor(shifted, check_finite=True)
    except (linalg.LinAlgError, ValueError) as exc:
        raise SingularSystem(str(exc)) from exc
    if np.any(np.diag(lu[0]) == 0):
        raise SingularSystem("zero pivot")
    h = linalg.lu_solve(lu, rhs)
    if not np.all(np.isfinite(h)):
        raise SingularSystem("non-finite solution")
    if return_residual:
        r = np.linalg.norm(shifted @ h - rhs) / max(np.linalg.norm(rhs), np.finfo(float).tiny)
        return h, float(r)
    return h


class ResolventFormula:
    """Pi u(t, z) = (1/2 pi i) I_+[(X* - (n+1) t P - z)^{-1} Pi u0].

    ``mode`` selects P: "explicit" uses (eps D - T)^n (eps = 1 gives the
    hierarchy flow, small eps the dispersive family), "zd" uses (-T)^n.
    Powers are built once and reused for every (t, z).
    """

    def __init__(self, u0, n, grid, mode="explicit", eps=1.0):
        if n < 1:
            raise ValueError("n must be positive")
        self.u0, self.n, self.grid, self.mode = u0, int(n), grid, mode
        self.eps = 0.0 if mode == "zd" else float(eps)
        base = op_lax(grid, u0, self.eps)
        self.power = base.power(self.n).mat
        self.xstar = op_Xstar(grid).mat
        self.rhs = grid.sample(u0.hardy_part())

    def operator(self, t):
        return GridOperator(self.xstar - (self.n + 1) * t * self.power, "A")

    def solve(self, t, z):
        return resolvent_solve(self.operator(t), z, self.rhs)

    def __call__(self, t, z):
        h = self.solve(t, z)
        return complex(self.grid.trace(h) / (2j * np.pi))


def explicit_formula_eval(u0, n, t, z, grid, eps=1.0):
    return ResolventFormula(u0, n, grid, "explicit", eps)(t, z)


def zd_resolvent_eval(u0, n, t, z, grid):
    return ResolventFormula(u0, n, grid, "zd")(t, z)


def amplitude(grid, A, z, f):
    """Omega f(z) = (1/2 pi i) I_+[(A - z)^{-1} f]."""
    return complex(grid.trace(resolvent_solve(A, z, f)) / (2j * np.pi))


def resolvent_norm(A, z):
    """Spectral norm of (A - z)^{-1}, i.e. 1 / smallest singular value."""
    a = A.mat if isinstance(A, GridOperator) else A
    s = linalg.svdvals(a - complex(z) * np.eye(a.shape[0]))
    return float(1.0 / s[-1])


def bump(grid, a, b):
    """Smooth test function compactly supported in (a, b) on the xi side."""
    x = grid.xi
    out = np.zeros(grid.m)
    inside = (x > a) & (x < b)
    s = (x[inside] - a) / (b - a)
    out[inside] = np.exp(-1.0 / (s * (1 - s)))
    return out.astype(complex)


def commutator_check(u0, n, grid, support=None, window=None):
    """Relative residual of [X*, B^(n)] f = -(n+1) L^n f - i [X*, L^{n+1}] f.

    f is a smooth bump inside ``support``; the residual is measured on the
    ``window`` of frequencies (both default to fractions of xi_max that stay
    clear of the outflow boundary).
    """
    X = op_Xstar(grid).mat
    B = op_B_n(grid, u0, n).mat
    L = op_lax(grid, u0).mat
    a, b = support or (0.1 * grid.xi_max, 0.3 * grid.xi_max)
    lo, hi = window or (0.0, 0.5 * grid.xi_max)
    f = bump(grid, a, b)
    Lnf = np.linalg.matrix_power(L, n) @ f
    Ln1 = np.linalg.matrix_power(L, n + 1)
    lhs = X @ (B @ f) - B @ (X @ f)
    rhs = -(n + 1) * Lnf - 1j * (X @ (Ln1 @ f) - Ln1 @ (X @ f))
    w = (grid.xi >= lo) & (grid.xi <= hi)
    scale = np.linalg.norm(((n + 1) * Lnf)[w])
    res = np.linalg.norm((lhs - rhs)[w]) / scale
    return {"residual": float(res), "m": grid.m, "xi_max": grid.xi_max, "n": n,
            "lhs_norm": float(np.linalg.norm(lhs[w])), "scale": float(scale)}


# ------------------------------------------------------------------- dumping

def write_operator(path, op):
    """Dump as 'BOHG' + u32 M + u32 reserved, then little-endian complex128."""
    a = op.mat if isinstance(op, GridOperator) else np.asarray(op)
    m = a.shape[0]
    if a.shape != (m, m):
        raise ValueError("operator must be square")
    with open(path, "wb") as fh:
        fh.write(MAGIC + struct.pack("<II", m, 0) + b"\0" * 4)
        fh.write(np.ascontiguousarray(a, dtype="<c16").tobytes())


def read_operator(path):
    with open(path, "rb") as fh:
        head = fh.read(16)
        if len(head) != 16 or head[:4] != MAGIC:
            raise ValueError("not a BOHG operator dump")
        m, _ = struct.unpack("<II", head[4:12])
        data = np.frombuffer(fh.read(), dtype="<c16")
    if data.size != m * m:
        raise ValueError("truncated operator dump")
    return GridOperator(data.reshape(m, m).astype(complex), f"dump[{m}]")
