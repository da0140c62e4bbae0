import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bolab.errors import DegreeCollapse
from bolab.polyroots import RootSet, char_poly, classify, find_roots
from bolab.rational import ComplexPoly, RealRationalSymbol, soliton_symbol

R_I = soliton_symbol(1j)


@pytest.mark.parametrize("method", ["aberth", "companion"])
def test_cube_roots_of_unity(method):
    rs = find_roots(ComplexPoly([-1, 0, 0, 1]), method=method)
    assert rs.degree == 3
    assert np.max(rs.residuals) <= 1e-12
    want = np.exp(2j * np.pi * np.arange(3) / 3)
    assert np.max([np.min(np.abs(want - r)) for r in rs.roots]) <= 1e-12


def test_simple_factorization():
    rs = find_roots(ComplexPoly.from_roots([2, 1j, -1j]))
    got = sorted(rs.roots, key=lambda r: (round(r.imag, 6), r.real))
    assert np.allclose(got, [-1j, 2, 1j], atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_degree_13_known_roots(seed):
    rng = np.random.default_rng(seed)
    roots = rng.uniform(-2, 2, 13) + 1j * rng.uniform(-2, 2, 13)
    rs = find_roots(ComplexPoly.from_roots(roots))
    err = max(np.min(np.abs(rs.roots - r)) for r in roots)
    assert err <= 1e-8


def test_aberth_matches_companion():
    p = char_poly(RealRationalSymbol([1 + 0.5j, -0.3j], [0.4 + 1j, -1 + 0.7j]), 3, 0.7, 0.4)
    a = find_roots(p, method="aberth").roots
    b = find_roots(p, method="companion").roots
    assert max(np.min(np.abs(b - r)) for r in a) <= 1e-9


def test_warm_start_from_nearby_roots():
    rng = np.random.default_rng(5)
    want = rng.normal(size=7) + 1j * rng.normal(size=7)
    p = ComplexPoly.from_roots(want)
    near = ComplexPoly.from_roots(want + 1e-3 * rng.normal(size=7))
    start = find_roots(near).roots
    got = find_roots(p, start=start).roots
    assert np.max(np.min(np.abs(got[:, None] - want[None, :]), axis=1)) <= 1e-12
    assert np.allclose(np.sort_complex(got), np.sort_complex(find_roots(p).roots), atol=1e-12)


def test_classify_collision_ambiguous():
    rs = RootSet(np.array([1.0, 2 + 1e-14j, 2 - 1e-14j]), np.zeros(3))
    c = classify(rs)
    assert c.ambiguous


def test_classify_simple_cubic():
    rs = find_roots(ComplexPoly([0, 1, 0, 1]))
    c = classify(rs)
    assert not c.ambiguous
    assert np.allclose(c.real_roots, [0], atol=1e-14)
    (u, l), = c.conj_pairs
    assert np.isclose(u, 1j) and np.isclose(l, -1j)


def test_classify_band_is_ambiguous():
    rs = RootSet(np.array([0.0, 1 + 3e-8j, 1 - 3e-8j]), np.zeros(3))
    assert classify(rs).ambiguous


def test_char_poly_soliton_n1():
    p = char_poly(R_I, 1, 0.3, 0.7)
    # (y - x)(y^2 + 1) + 4t
    want = [1.2 - 0.7, 1, -0.7, 1]
    assert np.allclose(p.coeffs, want)


def test_char_poly_soliton_n2():
    p = char_poly(R_I, 2, 1.0, 0.0)
    assert np.allclose(p.coeffs, [-12, 1, 0, 2, 0, 1])


def test_char_poly_t0_factorization():
    p = char_poly(R_I, 1, 0.0, 0.5)
    rs = find_roots(p).roots
    assert np.min(np.abs(rs - 0.5)) <= 1e-12
    assert np.min(np.abs(rs - 1j)) <= 1e-12


def test_char_poly_degree():
    with pytest.raises(DegreeCollapse):
        char_poly(RealRationalSymbol(), 1, 0.1, 0.0)


def test_pre_breaking_single_real_root():
    rs = classify(find_roots(char_poly(R_I, 1, 0.05, 0.0)))
    assert rs.real_roots.size == 1
    y = np.linspace(-20, 20, 400001)
    g = y + 2 * 0.05 * R_I(y)
    assert np.count_nonzero(np.diff(np.sign(g)) != 0) == 1


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.floats(-1.5, 1.5), st.floats(-4, 4),
       st.integers(0, 2 ** 32 - 1))
def test_root_invariants(N, n, t, x, seed):
    if abs(t) < 0.05:
        # t = 0 makes every pole of Q^n a multiple root; covered separately
        return
    rng = np.random.default_rng(seed)
    p = rng.uniform(-2, 2, N) + 1j * rng.uniform(0.5, 2, N)
    if N > 1 and np.min(np.abs(p[:, None] - p[None, :]) + 9 * np.eye(N)) < 0.2:
        return
    c = rng.normal(size=N) + 1j * rng.normal(size=N)
    u0 = RealRationalSymbol(c, p)
    poly = char_poly(u0, n, t, x)
    rs = find_roots(poly)
    assert rs.degree == 2 * n * N + 1
    assert np.max(rs.residuals) <= 1e-10
    # coefficient-root consistency
    s = -poly.coeffs[-2] / poly.coeffs[-1]
    assert abs(np.sum(rs.roots) - s) <= 1e-9 * (1 + abs(s))
    # real coefficients: conjugate closure
    r = rs.roots
    assert max(np.min(np.abs(r - np.conj(v))) for v in r) <= 1e-6 * (1 + np.max(np.abs(r)))
    cls = classify(rs)
    if not cls.ambiguous:
        assert cls.real_roots.size % 2 == 1
        assert cls.real_roots.size + 2 * len(cls.conj_pairs) == rs.degree
        assert np.all(np.diff(cls.real_roots) > 0)
