"""Complex polynomials, pole expansions and real rational initial data.

Everything here is exact term-wise calculus carried out in double precision.
Rational functions that decay at infinity are stored as pole expansions

    f(y) = sum_q sum_{m=1}^{order(q)} a_{q,m} / (y - q)**m

so products, derivatives and the Hardy projection never need sampling.
"""
import json
from math import comb, factorial

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import (DegreeViolation, NonDecaying, PoleCollision, PoleHit,
                     RealPole)

# two poles are the same pole when closer than this (relative)
IDENTIFY_TOL = 1e-10
# closer than this but not identified: refuse, the expansion would be garbage
NEAR_TOL = 1e-7
# |Im q| below this (relative) counts as a pole on the real line
REAL_TOL = 1e-12


def _scale(q):
    return max(1.0, abs(q))


class ComplexPoly:
    """Dense polynomial with complex coefficients in ascending order."""

    def __init__(self, coeffs):
        c = np.atleast_1d(np.asarray(coeffs, dtype=complex)).copy()
        nz = np.flatnonzero(c)
        c = c[:nz[-1] + 1] if nz.size else c[:1] * 0
        c.setflags(write=False)
        self.coeffs = c

    @classmethod
    def from_roots(cls, roots, lead=1.0):
        roots = np.asarray(roots, dtype=complex)
        if roots.size == 0:
            return cls([lead])
        return cls(lead * npoly.polyfromroots(roots))

    @property
    def degree(self):
        if self.coeffs.size == 1 and self.coeffs[0] == 0:
            return -1
        return self.coeffs.size - 1

    def is_zero(self):
        return self.degree < 0

    @property
    def lead(self):
        return self.coeffs[-1]

    def __call__(self, y):
        # Horner
        y = np.asarray(y, dtype=complex)
        out = np.zeros_like(y)
        for a in self.coeffs[::-1]:
            out = out * y + a
        return out

    def eval_terms(self, y):
        """Term-by-term evaluation, used as a cross-check of Horner."""
        y = np.asarray(y, dtype=complex)
        k = np.arange(self.coeffs.size)
        return np.sum(self.coeffs * y[..., None] ** k, axis=-1)

    def scale_at(self, y):
        """sum_k |a_k||y|^k, the natural size of p(y) for residual tests."""
        k = np.arange(self.coeffs.size)
        return np.sum(np.abs(self.coeffs) * np.abs(np.asarray(y))[..., None] ** k, axis=-1)

    def __add__(self, other):
        other = _as_poly(other)
        return ComplexPoly(npoly.polyadd(self.coeffs, other.coeffs))

    __radd__ = __add__

    def __neg__(self):
        return ComplexPoly(-self.coeffs)

    def __sub__(self, other):
        return self + (-_as_poly(other))

    def __rsub__(self, other):
        return _as_poly(other) - self

    def __mul__(self, other):
        other = _as_poly(other)
        return ComplexPoly(npoly.polymul(self.coeffs, other.coeffs))

    __rmul__ = __mul__

    def __pow__(self, k):
        out = ComplexPoly([1.0])
        for _ in range(int(k)):
            out = out * self
        return out

    def deriv(self):
        if self.degree < 1:
            return ComplexPoly([0.0])
        return ComplexPoly(npoly.polyder(self.coeffs))

    def monic(self):
        return ComplexPoly(self.coeffs / self.lead)

    def is_real(self, tol=0.0):
        return bool(np.all(np.abs(self.coeffs.imag) <= tol * (1 + np.abs(self.coeffs))))

    def __eq__(self, other):
        other = _as_poly(other)
        return self.coeffs.shape == other.coeffs.shape and bool(np.all(self.coeffs == other.coeffs))

    def __repr__(self):
        return f"ComplexPoly({self.coeffs.tolist()})"


def _as_poly(p):
    return p if isinstance(p, ComplexPoly) else ComplexPoly(p)


# ----------------------------------------------------------------- expansions

class PoleExpansion:
    """Sum of terms a / (y - q)**m that decays at infinity.

    ``poles`` holds distinct poles, ``coeffs[i][m-1]`` the coefficient of
    order m at ``poles[i]``.
    """

    def __init__(self, poles=(), coeffs=()):
        self.poles = np.asarray(poles, dtype=complex).reshape(-1)
        self.coeffs = [np.asarray(c, dtype=complex).reshape(-1) for c in coeffs]
        if len(self.coeffs) != self.poles.size:
            raise ValueError("one coefficient array per pole")

    @classmethod
    def from_terms(cls, terms):
        """Build from (a, q, m) triples, merging identified poles."""
        poles, coeffs = [], []
        for a, q, m in terms:
            m = int(m)
            if m < 1:
                raise ValueError("pole order must be positive")
            q = complex(q)
            i = _find_pole(poles, q)
            if i is None:
                poles.append(q)
                coeffs.append(np.zeros(m, dtype=complex))
                i = len(poles) - 1
            if coeffs[i].size < m:
                coeffs[i] = np.concatenate([coeffs[i], np.zeros(m - coeffs[i].size, complex)])
            coeffs[i][m - 1] += a
        return cls(poles, coeffs)._as_own_type()

    def _as_own_type(self):
        return self

    @classmethod
    def zero(cls):
        return cls()

    # ---- inspection
    def terms(self):
        out = []
        for q, c in zip(self.poles, self.coeffs):
            for m, a in enumerate(c, start=1):
                if a != 0:
                    out.append((complex(a), complex(q), m))
        return out

    def order(self, i):
        return self.coeffs[i].size

    def is_zero(self):
        return all(np.all(c == 0) for c in self.coeffs)

    def max_abs_coeff(self):
        return max((np.max(np.abs(c)) for c in self.coeffs if c.size), default=0.0)

    def pruned(self, tol=0.0):
        """Drop coefficients with modulus <= tol and trailing zero orders."""
        poles, coeffs = [], []
        for q, c in zip(self.poles, self.coeffs):
            c = np.where(np.abs(c) <= tol, 0, c)
            nz = np.flatnonzero(c)
            if nz.size:
                poles.append(q)
                coeffs.append(c[:nz[-1] + 1])
        return type(self)._raw(poles, coeffs)

    @classmethod
    def _raw(cls, poles, coeffs):
        obj = cls.__new__(cls)
        PoleExpansion.__init__(obj, poles, coeffs)
        return obj

    # ---- evaluation
    def __call__(self, y):
        y = np.asarray(y, dtype=complex)
        out = np.zeros_like(y)
        for q, c in zip(self.poles, self.coeffs):
            w = y - q
            if np.any(w == 0):
                raise PoleHit(f"evaluation at pole {q}")
            inv = 1.0 / w
            acc = np.zeros_like(y)
            for a in c[::-1]:
                acc = (acc + a) * inv
            out = out + acc
        return out

    def laurent(self, q0, kmax, kmin=None):
        """Laurent coefficients at q0 for powers kmin..kmax of (y - q0).

        kmin defaults to minus the pole order at q0 (0 if q0 is regular).
        """
        q0 = complex(q0)
        i0 = _find_pole(self.poles, q0)
        m0 = self.order(i0) if i0 is not None else 0
        if kmin is None:
            kmin = -m0
        out = np.zeros(kmax - kmin + 1, dtype=complex)
        if i0 is not None:
            for m in range(1, m0 + 1):
                k = -m
                if kmin <= k <= kmax:
                    out[k - kmin] += self.coeffs[i0][m - 1]
        ks = np.arange(max(kmin, 0), kmax + 1)
        if ks.size == 0:
            return out
        for i, (r, c) in enumerate(zip(self.poles, self.coeffs)):
            if i == i0:
                continue
            d = q0 - r
            _check_separation(q0, r)
            for m, a in enumerate(c, start=1):
                if a == 0:
                    continue
                # a (d + w)^{-m} = a sum_k binom(-m, k) d^{-m-k} w^k
                bc = np.array([(-1) ** k * comb(m + k - 1, k) for k in ks], dtype=float)
                out[ks - kmin] += a * bc * d ** (-m - ks.astype(float))
        return out

    # ---- algebra
    def __add__(self, other):
        if isinstance(other, (int, float, complex)) and other == 0:
            return self
        if not isinstance(other, PoleExpansion):
            return NotImplemented
        res = PoleExpansion.from_terms(self.terms() + other.terms())
        return _coerce(res, self, other)

    __radd__ = __add__

    def __neg__(self):
        return type(self)._raw(self.poles, [-c for c in self.coeffs])

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, PoleExpansion):
            return _coerce(multiply(self, other), self, other)
        a = complex(other)
        return type(self)._raw(self.poles, [a * c for c in self.coeffs])

    def __rmul__(self, other):
        return self.__mul__(other)

    def derivative(self):
        coeffs = []
        for c in self.coeffs:
            m = np.arange(1, c.size + 1)
            coeffs.append(np.concatenate([[0], -m * c]))
        return type(self)._raw(self.poles, coeffs)

    def conj(self):
        """The function y -> conj(f(conj y)); on the real line this is conj(f)."""
        return PoleExpansion(np.conj(self.poles), [np.conj(c) for c in self.coeffs])

    # ---- Fourier side
    def fourier(self, xi):
        """Closed-form transform  int e^{-i x xi} f(x) dx  at the points xi.

        The jump at xi = 0 of first-order poles is replaced by its average.
        """
        xi = np.asarray(xi, dtype=float)
        out = np.zeros(xi.shape, dtype=complex)
        pos, neg, zer = xi > 0, xi < 0, xi == 0
        for q, c in zip(self.poles, self.coeffs):
            lower = q.imag < 0
            mask = pos if lower else neg
            sgn = -1.0 if lower else 1.0
            x = xi[mask]
            e = np.exp(-1j * q * x)
            acc = np.zeros(x.shape, dtype=complex)
            for m, a in enumerate(c, start=1):
                if a != 0:
                    acc += a * (-1j * x) ** (m - 1) / factorial(m - 1)
            out[mask] += sgn * 2j * np.pi * acc * e
            if c.size and c[0] != 0:
                out[zer] += sgn * 1j * np.pi * c[0]
        return out

    def __repr__(self):
        return f"{type(self).__name__}({self.terms()})"


class HardyRational(PoleExpansion):
    """Pole expansion with every pole in the lower half-plane."""

    def __init__(self, poles=(), coeffs=()):
        super().__init__(poles, coeffs)
        bad = self.poles.imag >= 0
        if np.any(bad):
            raise ValueError(f"Hardy function with pole(s) {self.poles[bad]} not in lower half-plane")

    def _as_own_type(self):
        return self

    @classmethod
    def from_terms(cls, terms):
        e = PoleExpansion.from_terms(terms)
        return cls(e.poles, e.coeffs)


def _coerce(res, a, b):
    if isinstance(a, HardyRational) and isinstance(b, HardyRational):
        return HardyRational(res.poles, res.coeffs)
    return res


def _find_pole(poles, q):
    for i, r in enumerate(poles):
        if abs(r - q) <= IDENTIFY_TOL * _scale(q):
            return i
    return None


def _check_separation(q, r):
    if abs(q - r) <= NEAR_TOL * _scale(q):
        raise PoleCollision(f"poles {q} and {r} nearly collide")


def multiply(f, g):
    """Exact product of two pole expansions, re-expanded at every pole."""
    poles = list(f.poles)
    for r in g.poles:
        if _find_pole(poles, r) is None:
            poles.append(complex(r))
    coeffs = []
    for q in poles:
        i, j = _find_pole(f.poles, q), _find_pole(g.poles, q)
        mf = f.order(i) if i is not None else 0
        mg = g.order(j) if j is not None else 0
        lf = f.laurent(q, mg - 1, -mf)
        lg = g.laurent(q, mf - 1, -mg)
        prod = np.convolve(lf, lg)
        # prod[0] is the power -(mf+mg); keep the negative powers
        principal = prod[:mf + mg]
        coeffs.append(principal[::-1])
    return PoleExpansion(poles, coeffs).pruned()


def differentiate(f):
    return f.derivative()


def hardy_project(f):
    """Hardy projection of a decaying rational: keep lower half-plane poles.

    ``f`` may be a PoleExpansion, a RealRationalSymbol or a pair (P, Q) of
    polynomials with Q having simple roots.
    """
    if isinstance(f, RealRationalSymbol):
        f = f.expansion()
    elif isinstance(f, tuple):
        f = _expand_pq(*f)
    for q in f.poles:
        if abs(q.imag) <= REAL_TOL * _scale(q):
            raise RealPole(f"pole {q} on the real axis")
    keep = [i for i, q in enumerate(f.poles) if q.imag < 0]
    return HardyRational([f.poles[i] for i in keep], [f.coeffs[i] for i in keep])


def _expand_pq(P, Q):
    from .polyroots import find_roots
    P, Q = _as_poly(P), _as_poly(Q)
    if P.degree >= Q.degree:
        raise NonDecaying("numerator degree must be below denominator degree")
    roots = find_roots(Q).roots
    dQ = Q.deriv()
    return PoleExpansion.from_terms([(P(r) / dQ(r), r, 1) for r in roots])


def l2_inner(f, g):
    """int f conj(g) over the real line for Hardy rationals, by residues."""
    prod = multiply(f, g.conj())
    total = 0j
    for q, c in zip(prod.poles, prod.coeffs):
        if q.imag > 0 and c.size:
            total += c[0]
    return 2j * np.pi * total


# ------------------------------------------------------------ real symbols

class RealRationalSymbol:
    """u0(y) = sum_j c_j/(y - p_j) + conj(c_j)/(y - conj(p_j)), Im p_j > 0."""

    def __init__(self, residues=(), poles=(), perturbed=False):
        c = np.asarray(residues, dtype=complex).reshape(-1)
        p = np.asarray(poles, dtype=complex).reshape(-1)
        if c.shape != p.shape:
            raise ValueError("residues and poles must have equal length")
        if np.any(p.imag <= 0):
            raise RealPole("symbol poles must satisfy Im p > 0")
        for i in range(p.size):
            for j in range(i):
                if abs(p[i] - p[j]) <= IDENTIFY_TOL * _scale(p[i]):
                    raise ValueError("symbol poles must be distinct")
        c.setflags(write=False)
        p.setflags(write=False)
        self.residues = c
        self.poles = p
        self.perturbed = bool(perturbed)

    @property
    def N(self):
        return self.poles.size

    def is_zero(self):
        return self.N == 0 or bool(np.all(self.residues == 0))

    def __call__(self, y):
        return eval_symbol(self, y)

    def expansion(self):
        terms = [(c, p, 1) for c, p in zip(self.residues, self.poles)]
        terms += [(np.conj(c), np.conj(p), 1) for c, p in zip(self.residues, self.poles)]
        return PoleExpansion.from_terms(terms)

    def hardy_part(self):
        """Pi u0 = sum conj(c_j)/(y - conj(p_j))."""
        return HardyRational(np.conj(self.poles), [[np.conj(c)] for c in self.residues])

    def derivative(self, y):
        y = np.asarray(y, dtype=complex)
        c, p = self.residues, self.poles
        return -np.sum(c / (y[..., None] - p) ** 2 + np.conj(c) / (y[..., None] - np.conj(p)) ** 2, axis=-1)

    def to_pq(self):
        """Real polynomials (P, Q) with Q monic and u0 = P/Q."""
        allp = np.concatenate([self.poles, np.conj(self.poles)])
        allc = np.concatenate([self.residues, np.conj(self.residues)])
        Q = ComplexPoly.from_roots(allp)
        P = ComplexPoly([0.0])
        for i in range(allp.size):
            P = P + allc[i] * ComplexPoly.from_roots(np.delete(allp, i))
        return ComplexPoly(P.coeffs.real), ComplexPoly(Q.coeffs.real)

    def l2_norm(self):
        """||u0||_{L^2} exactly, from ||u0||^2 = 2 ||Pi u0||^2."""
        h = self.hardy_part()
        return float(np.sqrt(max(0.0, 2 * l2_inner(h, h).real)))

    def sup_norm(self, radius=None, samples=20001):
        """max |u0| on the real line, by dense sampling around the poles."""
        if self.is_zero():
            return 0.0
        r = radius or 10 * (1 + np.max(np.abs(self.poles)))
        y = np.linspace(-r, r, samples)
        y = np.concatenate([y, self.poles.real])
        return float(np.max(np.abs(self(y).real)))

    def to_dict(self):
        return {"poles": [{"re_c": float(c.real), "im_c": float(c.imag),
                           "re_p": float(p.real), "im_p": float(p.imag)}
                          for c, p in zip(self.residues, self.poles)]}

    @classmethod
    def from_dict(cls, d):
        try:
            items = d["poles"]
            c = [complex(it["re_c"], it["im_c"]) for it in items]
            p = [complex(it["re_p"], it["im_p"]) for it in items]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed symbol: {exc}") from exc
        return cls(c, p)

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def __repr__(self):
        return f"RealRationalSymbol(residues={self.residues.tolist()}, poles={self.poles.tolist()})"


def soliton_symbol(p):
    """R_p(y) = 2 Im p / |y + p|^2 as a symbol: pole -conj(p), residue -i."""
    p = complex(p)
    if p.imag <= 0:
        raise ValueError("Im p must be positive")
    return RealRationalSymbol([-1j], [-np.conj(p)])


def eval_symbol(u0, y):
    y = np.asarray(y)
    yc = y.astype(complex)
    c, p = u0.residues, u0.poles
    if c.size == 0:
        return np.zeros(y.shape, dtype=float if np.isrealobj(y) else complex)
    d1 = yc[..., None] - p
    d2 = yc[..., None] - np.conj(p)
    if np.any(d1 == 0) or np.any(d2 == 0):
        raise PoleHit("evaluation at a pole of the symbol")
    val = np.sum(c / d1 + np.conj(c) / d2, axis=-1)
    if np.isrealobj(y):
        return val.real
    return val


def symbol_from_pq(P, Q, perturbation=None, cluster_tol=1e-5):
    """Partial-fraction symbol of the real rational P/Q.

    Multiple roots of Q are split into simple ones at distance
    ``perturbation`` from the cluster centre (default 1e-6 relative) and the
    result carries ``perturbed=True``.
    """
    from .polyroots import find_roots
    P, Q = _as_poly(P), _as_poly(Q)
    if not (P.is_real(1e-14) and Q.is_real(1e-14)):
        raise ValueError("P and Q must have real coefficients")
    if Q.degree < 1 or Q.is_zero():
        raise DegreeViolation("Q must be non-constant")
    if P.degree > Q.degree - 1:
        raise DegreeViolation("deg P must be at most deg Q - 1")
    lead = Q.lead.real
    P = ComplexPoly(P.coeffs.real / lead)
    Q = ComplexPoly(Q.coeffs.real / lead)
    roots = find_roots(Q).roots
    for r in roots:
        if abs(r.imag) <= 1e-8 * _scale(r):
            raise RealPole(f"Q vanishes near the real axis at {r}")
    upper = roots[roots.imag > 0]
    if 2 * upper.size != Q.degree:
        raise RealPole("Q must have only non-real roots in conjugate pairs")
    # cluster the upper roots
    clusters = []
    for r in upper:
        for cl in clusters:
            if abs(np.mean(cl) - r) <= cluster_tol * _scale(r):
                cl.append(r)
                break
        else:
            clusters.append([r])
    perturbed = any(len(cl) > 1 for cl in clusters)
    new_upper = []
    for cl in clusters:
        centre = complex(np.mean(cl))
        k = len(cl)
        if k == 1:
            new_upper.append(cl[0])
            continue
        rad = perturbation if perturbation else 1e-6 * _scale(centre)
        for j in range(k):
            new_upper.append(centre + rad * np.exp(2j * np.pi * j / k))
    new_upper = np.array(new_upper)
    if P.is_zero():
        return RealRationalSymbol([], [], perturbed=perturbed)
    allr = np.concatenate([new_upper, np.conj(new_upper)])
    res = []
    for j, pj in enumerate(new_upper):
        dq = np.prod(pj - np.delete(allr, j))
        res.append(P(pj) / dq)
    return RealRationalSymbol(res, new_upper, perturbed=perturbed)
