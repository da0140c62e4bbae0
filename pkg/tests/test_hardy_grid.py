import numpy as np
import pytest

from bolab import hardy_grid as hg
from bolab.checks import random_hardy
from bolab.errors import SingularSystem
from bolab.rational import RealRationalSymbol, soliton_symbol
from bolab.toeplitz_exact import toeplitz_apply
from bolab.zdlimit import lambda_cramer

R_I = soliton_symbol(1j)
TWO_POLE = RealRationalSymbol([1 + 0.5j, -0.3j], [0.4 + 1j, -1 + 0.7j])


def _xstar_err(m, p=1j):
    g = hg.FourierGrid(20.0, m)
    f = np.exp(1j * p * g.xi)
    got = hg.op_Xstar(g).mat @ f
    return g.norm(got + p * f) / g.norm(p * f)


def test_xstar_first_order():
    e = [_xstar_err(m) for m in (256, 512, 1024)]
    assert e[-1] < 1e-2
    for a, b in zip(e, e[1:]):
        assert 0.7 / 2 <= b / a <= 1.3 / 2


def test_xstar_constant_interior():
    g = hg.FourierGrid(10.0, 128)
    out = hg.op_Xstar(g).mat @ np.ones(g.m)
    assert np.max(np.abs(out[:-1])) == 0


def test_xstar_dissipative():
    g = hg.FourierGrid(10.0, 128)
    X = hg.op_Xstar(g).mat
    rng = np.random.default_rng(0)
    for _ in range(20):
        f = rng.normal(size=g.m) + 1j * rng.normal(size=g.m)
        assert g.inner(X @ f, f).imag <= 1e-12 * g.norm(f) ** 2
    # the Hermitian part of -i X* is nonpositive
    S = -1j * X
    w = np.linalg.eigvalsh(0.5 * (S + S.conj().T))
    assert np.max(w) <= 1e-12 / g.dxi


def test_trace_is_exact_on_quadratics():
    g = hg.FourierGrid(5.0, 64)
    for c in ([1, 0, 0], [0, 1, 0], [2, -1, 3]):
        h = c[0] + c[1] * g.xi + c[2] * g.xi ** 2
        assert g.trace(h) == pytest.approx(c[0], abs=1e-12)
    assert g.trace_vector() @ np.exp(-g.xi) == pytest.approx(g.trace(np.exp(-g.xi)))


def test_grid_norm_plancherel():
    g = hg.FourierGrid.for_symbol(R_I, m=2048)
    h = R_I.hardy_part()
    # midpoint rule on e^{-2 xi}: relative error (2 dxi)^2 / 24
    err = abs(g.norm(g.sample(h)) ** 2 / np.pi - 1)
    assert err <= 1.1 * (2 * g.dxi) ** 2 / 24


def test_grid_validation_and_json():
    with pytest.raises(ValueError):
        hg.FourierGrid(1.0, 10)
    with pytest.raises(ValueError):
        hg.FourierGrid(0.0, 128)
    g = hg.FourierGrid.from_json('{"xi_max": 40, "m": 256}')
    assert g.dxi == pytest.approx(40 / 256)
    with pytest.raises(ValueError):
        hg.FourierGrid.from_dict({"m": 64})
    assert hg.FourierGrid.for_symbol(TWO_POLE).xi_max == pytest.approx(20 / 0.7)


def test_op_D_real_nonnegative():
    g = hg.FourierGrid(10.0, 64)
    d = np.diag(hg.op_D(g).mat)
    assert np.all(d.imag == 0) and np.all(d.real > 0)


def test_toeplitz_zero_and_hermitian():
    g = hg.FourierGrid(20.0, 256)
    assert not np.any(hg.op_toeplitz(g, RealRationalSymbol()).mat)
    T = hg.op_toeplitz(g, TWO_POLE)
    assert T.hermitian_defect() <= 1e-14


def test_toeplitz_norm_bound():
    g = hg.FourierGrid.for_symbol(TWO_POLE, m=512)
    T = hg.op_toeplitz(g, TWO_POLE).mat
    # power iteration for the operator norm
    v = np.ones(g.m, complex)
    for _ in range(300):
        v = T @ v
        v /= np.linalg.norm(v)
    est = np.linalg.norm(T @ v)
    y = np.linspace(-50, 50, 200001)
    sup = np.max(np.abs(TWO_POLE(y)))
    assert est <= 1.1 * sup


def test_toeplitz_action_converges():
    errs = []
    for m in (256, 512, 1024):
        g = hg.FourierGrid.for_symbol(R_I, m=m)
        f = R_I.hardy_part()
        got = hg.op_toeplitz(g, R_I).mat @ g.sample(f)
        want = g.sample(toeplitz_apply(R_I, f))
        errs.append(g.norm(got - want) / g.norm(want))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] <= 1e-3


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_B_anti_selfadjoint(n):
    g = hg.FourierGrid.for_symbol(TWO_POLE, m=256)
    B = hg.op_B_n(g, TWO_POLE, n)
    assert B.skew_defect() <= 1e-10


def test_B_zero_and_validation():
    g = hg.FourierGrid(10.0, 64)
    assert not np.any(hg.op_B_n(g, RealRationalSymbol(), 2).mat)
    with pytest.raises(ValueError):
        hg.op_B_n(g, R_I, 0)


def test_B1_independent_assembly():
    # both sides reduce to T_{|D|u} on the grid; their agreement checks the symbol algebra
    for u0 in (R_I, TWO_POLE):
        g = hg.FourierGrid.for_symbol(u0, m=512)
        a = hg.op_B_n(g, u0, 1).mat
        b = hg.op_B1_direct(g, u0).mat
        rel = np.linalg.norm(a - b) / np.linalg.norm(b)
        assert rel <= 0.1
    errs = []
    for m in (256, 512, 1024):
        g = hg.FourierGrid.for_symbol(TWO_POLE, m=m)
        a = hg.op_B_n(g, TWO_POLE, 1).mat
        b = hg.op_B1_direct(g, TWO_POLE).mat
        errs.append(np.linalg.norm(a - b) / np.linalg.norm(b))
    assert errs[0] > errs[1] > errs[2]


def test_resolvent_diagonal():
    g = hg.FourierGrid(10.0, 64)
    rhs = np.exp(-g.xi).astype(complex)
    z = 0.3 + 0.5j
    h = hg.resolvent_solve(hg.op_D(g), z, rhs)
    assert np.allclose(h, rhs / (g.xi - z), rtol=1e-14)
    with pytest.raises(ValueError):
        hg.resolvent_solve(hg.op_D(g), 0.3, rhs)


@pytest.mark.filterwarnings("ignore::scipy.linalg.LinAlgWarning")
def test_resolvent_singular():
    with pytest.raises(SingularSystem):
        hg.resolvent_solve(np.eye(4) * 1j, 1j, np.ones(4))


def test_resolvent_random_dissipative():
    rng = np.random.default_rng(1)
    g = hg.FourierGrid(20.0, 200)
    H = rng.normal(size=(g.m, g.m)) + 1j * rng.normal(size=(g.m, g.m))
    A = hg.op_Xstar(g).mat - 0.05 * (H + H.conj().T)
    for z in (0.5j, 1 + 1j, -2 + 2j):
        rhs = rng.normal(size=g.m) + 1j * rng.normal(size=g.m)
        h, r = hg.resolvent_solve(A, z, rhs, return_residual=True)
        assert r <= 1e-10
        assert np.linalg.norm(h) <= np.linalg.norm(rhs) / z.imag * 1.05


@pytest.mark.parametrize("n", [1, 2])
def test_resolvent_norm_bound(n):
    g = hg.FourierGrid.for_symbol(TWO_POLE, m=256)
    rf = hg.ResolventFormula(TWO_POLE, n, g)
    for t in (0.3, -0.7):
        for z in (0.5j, 1j, 2 + 2j):
            assert hg.resolvent_norm(rf.operator(t), z) * z.imag <= 1.05


def test_explicit_formula_t0_reconstruction():
    g = hg.FourierGrid(40.0, 1024)
    for z in (1j, 0.5 + 1j, -1 + 1j):
        want = R_I.hardy_part()(z)
        got = hg.explicit_formula_eval(R_I, 2, 0.0, z, g)
        assert abs(got - want) <= 1e-2 * abs(want)


def test_explicit_formula_soliton_travels():
    z = 0.3 + 1j
    want = 1j / (z + 0.75 + 1j)
    errs = []
    for m in (256, 512, 1024):
        g = hg.FourierGrid(40.0, m)
        errs.append(abs(hg.explicit_formula_eval(R_I, 2, 1.0, z, g) - want) / abs(want))
    assert errs[-1] <= 2e-2
    assert errs[0] > errs[1] > errs[2]
    # refinement signature: each change is at most 0.7 of the previous one
    vals = [hg.explicit_formula_eval(R_I, 2, 1.0, z, hg.FourierGrid(40.0, m))
            for m in (256, 512, 1024, 2048)]
    d = np.abs(np.diff(vals))
    assert d[1] <= 0.7 * d[0] and d[2] <= 0.7 * d[1]


@pytest.mark.parametrize("n,p", [(1, 1j), (3, 1j), (1, 1 + 2j)])
def test_explicit_formula_soliton_closed_form(n, p):
    u0 = soliton_symbol(p)
    c = (-1) ** (n + 1) * (n + 1) / (2 * p.imag) ** n
    t, z = 0.5, 0.2 + 1.5j
    want = 1j / (z - c * t + p)
    g = hg.FourierGrid.for_symbol(u0, m=1024)
    got = hg.explicit_formula_eval(u0, n, t, z, g)
    assert abs(got - want) <= 2e-2 * abs(want)


def test_amplitude_bound_random_rhs():
    rng = np.random.default_rng(2)
    g = hg.FourierGrid.for_symbol(TWO_POLE, m=256)
    A = hg.ResolventFormula(TWO_POLE, 2, g).operator(0.4)
    for imz in (0.5, 1.0, 2.0):
        for _ in range(100):
            f = g.sample(random_hardy(rng, im_range=(0.3, 2)))
            z = rng.uniform(-2, 2) + 1j * imz
            bound = g.norm(f) / (2 * np.sqrt(np.pi * imz))
            assert abs(hg.amplitude(g, A, z, f)) <= bound * 1.05


def test_zd_resolvent_t0_and_cramer():
    g = hg.FourierGrid(40.0, 1024)
    z = 0.5 + 1j
    assert abs(hg.zd_resolvent_eval(R_I, 2, 0.0, z, g) - R_I.hardy_part()(z)) <= 1e-2
    for u0, n, t in ((R_I, 1, 0.4), (R_I, 2, 0.3), (TWO_POLE, 2, 0.2)):
        want = lambda_cramer(u0, n, t, z)
        errs = []
        for m in (512, 1024):
            gg = hg.FourierGrid.for_symbol(u0, m=m, xi_min=40)
            errs.append(abs(hg.zd_resolvent_eval(u0, n, t, z, gg) - want) / abs(want))
        assert errs[-1] <= 2e-2
        assert errs[1] < errs[0]


def test_eps_family_trends_to_zd():
    z, t = 0.5 + 1j, 0.3
    want = lambda_cramer(R_I, 2, t, z)
    g = hg.FourierGrid(40.0, 1024)
    errs = [abs(hg.ResolventFormula(R_I, 2, g, eps=e)(t, z) - want)
            for e in (0.4, 0.2, 0.1)]
    assert errs[0] > errs[1] > errs[2]


def test_commutator_zero_symbol():
    # on the grid [X*, D] is i times the forward shift, so the residual is O(dxi)
    for n in (1, 2, 3):
        res = [hg.commutator_check(RealRationalSymbol(), n, hg.FourierGrid(20.0, m))["residual"]
               for m in (256, 512, 1024)]
        assert res[-1] <= 0.03
        for a, b in zip(res, res[1:]):
            assert 0.45 <= b / a <= 0.55


@pytest.mark.parametrize("n", [1, 2])
def test_commutator_refinement(n):
    res = [hg.commutator_check(R_I, n, hg.FourierGrid(20.0, m))["residual"] for m in (256, 512, 1024)]
    assert res[0] > res[1] > res[2]


def test_operator_dump_roundtrip(tmp_path):
    g = hg.FourierGrid(10.0, 64)
    op = hg.op_toeplitz(g, R_I)
    path = tmp_path / "t.bohg"
    hg.write_operator(path, op)
    raw = path.read_bytes()
    assert raw[:4] == b"BOHG" and len(raw) == 16 + 16 * 64 * 64
    assert int.from_bytes(raw[4:8], "little") == 64
    back = hg.read_operator(path)
    assert np.array_equal(back.mat, op.mat)
    path.write_bytes(raw[:100])
    with pytest.raises(ValueError):
        hg.read_operator(path)
    path.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(ValueError):
        hg.read_operator(path)
