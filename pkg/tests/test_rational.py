import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bolab.errors import DegreeViolation, NonDecaying, PoleHit, RealPole
from bolab.rational import (ComplexPoly, HardyRational, PoleExpansion, RealRationalSymbol,
                            differentiate, eval_symbol, hardy_project, l2_inner, multiply,
                            soliton_symbol, symbol_from_pq)

R_I = soliton_symbol(1j)
TWO_POLE = RealRationalSymbol([1 + 0.5j, -0.3j], [0.4 + 1j, -1 + 0.7j])

cplx = st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False)


def test_poly_basic():
    p = ComplexPoly([1, 0, 2, 0])
    assert p.degree == 2
    assert p(2.0) == 9
    z = ComplexPoly([0, 0])
    assert z.is_zero()


@given(st.lists(cplx, min_size=1, max_size=12), cplx)
def test_horner_matches_terms(c, y):
    p = ComplexPoly(c)
    if p.is_zero():
        return
    y = y * 3
    direct = sum(ck * y ** k for k, ck in enumerate(p.coeffs))
    scale = sum(abs(ck) * abs(y) ** k for k, ck in enumerate(p.coeffs))
    assert abs(p(y) - direct) <= 1e-13 * scale


def test_from_roots_and_arithmetic():
    p = ComplexPoly.from_roots([1, 2j])
    assert np.allclose(p.coeffs, [2j * 1, -(1 + 2j), 1])
    q = p * p - p ** 2
    assert q.is_zero()
    assert (p.deriv())(0) == -(1 + 2j)


def test_symbol_from_pq_soliton():
    u = symbol_from_pq(ComplexPoly([2]), ComplexPoly([1, 0, 1]), perturbation=0)
    assert u.N == 1
    assert np.isclose(u.poles[0], 1j)
    assert np.isclose(u.residues[0], -1j)
    y = np.linspace(-3, 3, 7)
    assert np.allclose(u(y), R_I(y), atol=1e-14)


def test_symbol_from_pq_zero_and_errors():
    assert symbol_from_pq(ComplexPoly([0]), ComplexPoly([1, 0, 1])).is_zero()
    with pytest.raises(RealPole):
        symbol_from_pq(ComplexPoly([1]), ComplexPoly([-1, 0, 1]))
    with pytest.raises(DegreeViolation):
        symbol_from_pq(ComplexPoly([0, 0, 1]), ComplexPoly([1, 0, 1]))


def test_symbol_from_pq_multiple_roots_perturbed():
    P = ComplexPoly([0, 1])
    Q = ComplexPoly([1, 0, 1]) ** 2
    u = symbol_from_pq(P, Q, perturbation=1e-4)
    assert u.perturbed and u.N == 2
    y = np.linspace(-5, 5, 201)
    assert np.max(np.abs(u(y) - P(y).real / Q(y).real)) <= 1e-8


def test_eval_symbol_values():
    assert eval_symbol(R_I, 0.0) == pytest.approx(2)
    assert eval_symbol(R_I, 1.0) == pytest.approx(1)
    with pytest.raises(PoleHit):
        eval_symbol(R_I, 1j)


def test_eval_matches_pq():
    P, Q = TWO_POLE.to_pq()
    assert abs(TWO_POLE(3.0) - P(3.0) / Q(3.0)) <= 1e-12
    y = np.linspace(-4, 4, 33)
    v = TWO_POLE(y.astype(complex))
    assert np.max(np.abs(v.imag)) <= 1e-13 * np.max(np.abs(v))


def test_hardy_projection_soliton():
    h = hardy_project(R_I)
    assert isinstance(h, HardyRational)
    assert np.allclose(h.poles, [-1j])
    assert np.allclose(h.coeffs[0], [1j])
    assert hardy_project(h).poles.size == 1
    assert hardy_project(h.conj()).is_zero()


def test_hardy_project_errors():
    with pytest.raises(RealPole):
        hardy_project(PoleExpansion([1.0], [[1.0]]))
    with pytest.raises(NonDecaying):
        hardy_project((ComplexPoly([0, 0, 1]), ComplexPoly([1, 0, 1])))


def test_derivative_and_partial_fractions():
    f = PoleExpansion([-1j], [[1.0]])
    d = differentiate(f)
    assert np.allclose(d.coeffs[0], [0, -1])
    g = multiply(PoleExpansion([-1j], [[1.0]]), PoleExpansion([-2j], [[1.0]]))
    y = np.linspace(-2, 2, 9)
    want = (1 / 1j) * (1 / (y + 1j) - 1 / (y + 2j))
    assert np.allclose(g(y), want, atol=1e-14)


def _random_expansion(rng, k):
    q = rng.uniform(-2, 2, k) + 1j * rng.choice([-1, 1], k) * rng.uniform(0.3, 2, k)
    c = [rng.normal(size=int(rng.integers(1, 3))) + 1j * rng.normal(size=1) for _ in range(k)]
    return PoleExpansion(q, c)


@pytest.mark.parametrize("seed", range(5))
def test_product_vs_sampling(seed):
    rng = np.random.default_rng(seed)
    f, g, h = (_random_expansion(rng, 2) for _ in range(3))
    prod = multiply(multiply(f, g), h)
    y = rng.uniform(-3, 3, 20)
    want = f(y) * g(y) * h(y)
    assert np.max(np.abs(prod(y) - want)) <= 1e-11 * np.max(np.abs(want))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.integers(0, 2 ** 32 - 1))
def test_hardy_splitting_pointwise(n, seed):
    rng = np.random.default_rng(seed)
    p = rng.uniform(-2, 2, n) + 1j * rng.uniform(0.3, 2, n)
    c = rng.normal(size=n) + 1j * rng.normal(size=n)
    u = RealRationalSymbol(c, p)
    y = np.linspace(-5, 5, 41)
    h = u.hardy_part()
    assert np.max(np.abs(h(y) + np.conj(h(y)) - u(y))) <= 1e-12 * (1 + np.max(np.abs(u(y))))


def test_l2_norm_soliton():
    # int R_i^2 = 2 pi, computed by fine quadrature as the oracle
    y = np.linspace(-2000, 2000, 4_000_001)
    quad = np.trapezoid(R_I(y) ** 2, y) + 2 * 4 / (3 * 2000 ** 3)
    assert R_I.l2_norm() ** 2 == pytest.approx(quad, rel=1e-8)
    h = R_I.hardy_part()
    assert l2_inner(h, h).real == pytest.approx(np.pi, rel=1e-12)


def test_json_roundtrip():
    text = TWO_POLE.to_json()
    back = RealRationalSymbol.from_json(text)
    assert np.allclose(back.poles, TWO_POLE.poles)
    assert np.allclose(back.residues, TWO_POLE.residues)
    assert set(json.loads(text)["poles"][0]) == {"re_c", "im_c", "re_p", "im_p"}
    with pytest.raises(ValueError):
        RealRationalSymbol.from_dict({"poles": [{"re_c": 1}]})


def test_symbol_validation():
    with pytest.raises(RealPole):
        RealRationalSymbol([1], [1 - 1j])
