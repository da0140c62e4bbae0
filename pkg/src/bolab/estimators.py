"""sklearn-style wrappers: configure with hyperparameters, fit on a symbol.

The "data" of every estimator is the rational initial datum u0; predict
takes evaluation points.  These are thin shells over the module functions
so the parameters can be inspected, cloned and swept with sklearn tooling.
"""
import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_is_fitted

from . import zdlimit
from .hardy_grid import FourierGrid, ResolventFormula
from .lax_spectral import discrete_spectrum, wu_residuals
from .rational import RealRationalSymbol


def _check_symbol(u0):
    if not isinstance(u0, RealRationalSymbol):
        raise TypeError("fit expects a RealRationalSymbol")
    return u0


class ZeroDispersionLimit(BaseEstimator):
    """x -> ZD[u0](t, x) by the alternating sum over real branches."""

    def __init__(self, n=1, t=0.0, root_method="aberth", oracle=False):
        self.n = n
        self.t = t
        self.root_method = root_method
        self.oracle = oracle

    def fit(self, u0, y=None):
        self.symbol_ = _check_symbol(u0)
        if self.n < 1:
            raise ValueError("n must be positive")
        self.prepared_ = None if u0.is_zero() else zdlimit._Prepared(u0, self.n)
        return self

    def samples(self, X):
        check_is_fitted(self, "symbol_")
        xs = np.asarray(X, dtype=float).reshape(-1)
        out = []
        for x in xs:
            s = zdlimit.zd_value(self.symbol_, self.n, self.t, x, self.prepared_,
                                 method=self.root_method)
            if self.oracle and not s.critical and self.t != 0 and self.prepared_ is not None:
                s.oracle_value = zdlimit.boundary_limit(self.symbol_, self.n, self.t, x,
                                                        prepared=self.prepared_)
                s.oracle_err = abs(s.oracle_value - s.value)
            out.append(s)
        return out

    def predict(self, X):
        return np.array([s.value for s in self.samples(X)])


class ExplicitFormula(BaseEstimator):
    """z -> Pi u(t, z) from the discretized resolvent formula."""

    def __init__(self, n=1, t=0.0, m=1024, factor=20.0, mode="explicit"):
        self.n = n
        self.t = t
        self.m = m
        self.factor = factor
        self.mode = mode

    def fit(self, u0, y=None):
        self.symbol_ = _check_symbol(u0)
        self.grid_ = FourierGrid.for_symbol(u0, m=self.m, factor=self.factor)
        self.formula_ = ResolventFormula(u0, self.n, self.grid_, mode=self.mode)
        return self

    def predict(self, Z):
        if not hasattr(self, "formula_"):
            raise NotFittedError("call fit first")
        zs = np.asarray(Z, dtype=complex).reshape(-1)
        return np.array([self.formula_(self.t, z) for z in zs])


class LaxSpectrum(BaseEstimator):
    """Discrete spectrum of the grid Lax operator with Wu residuals."""

    def __init__(self, m=1024, factor=20.0):
        self.m = m
        self.factor = factor

    def fit(self, u0, y=None):
        self.symbol_ = _check_symbol(u0)
        g = FourierGrid.for_symbol(u0, m=self.m, factor=self.factor)
        pairs = discrete_spectrum(u0, g)
        h = g.sample(u0.hardy_part())
        self.grid_ = g
        self.eigenvalues_ = np.array([e.value for e in pairs])
        self.eigenvectors_ = [e.vector for e in pairs]
        self.wu_residuals_ = [wu_residuals(g, e.value, e.vector, h) for e in pairs]
        return self

    def predict(self, X=None):
        check_is_fitted(self, "eigenvalues_")
        return self.eigenvalues_
