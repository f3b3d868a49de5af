import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from geonium.cat_states import (auto_axes, condition_on_momentum, expansion_from_product,
                                most_probable_momentum, wigner_of_superposition, wigner_ys_cat)
from geonium.decoherence import (TransformKernel, _branch, abc_coefficients, cat_initial_transform,
                                 characteristics_propagate, decohered_cat_axes,
                                 decohered_cat_oracle, decohered_cat_wigner,
                                 decohered_conditional_wigner, imn_integral, imn_table,
                                 initial_transform_central)
from geonium.errors import UnsupportedLimitError
from geonium.model_core import BathParams
from geonium.numerics import coherent_wavefunction

from oracles import crank_nicolson_transform, hermite_function_np as hermite_function

FIG6 = BathParams(6.0, 0.4, 10.0)


# --- coefficients ---------------------------------------------------------

def test_abc_at_zero_time():
    co = abc_coefficients(2.0, BathParams(6.0, 0.0, 10.0))
    assert (co.A, co.B, co.C) == (1.0, 1.0, 0.0)


def test_abc_double_entry_fig6():
    G, tau, N = (mpmath.mpf(x) for x in ("6", "0.4", "10"))
    with mpmath.workdps(30):
        x = mpmath.exp(-G * tau)
        A = (1 - x) ** 2 / G ** 2 + 1 + 2 * N * (1 - x ** 2) / G ** 2 - 8 * N * (1 - x) / G ** 2 \
            + 4 * N * tau / G
        B = x ** 2 + 2 * N * (1 - x ** 2)
        C = 2 * x * (1 - x) / G - 4 * N * (1 - x ** 2) / G + 8 * N * (1 - x) / G
    co = abc_coefficients(2.0, FIG6)
    assert co.A == pytest.approx(float(A), rel=1e-13)
    assert co.B == pytest.approx(float(B), rel=1e-13)
    assert co.C == pytest.approx(float(C), rel=1e-13, abs=1e-14)
    assert (co.A, co.B, co.C) == pytest.approx((2.22, 19.84, 5.54), abs=0.01)


def test_linear_coefficients_structure():
    b = 1.3 - 0.7j
    z, p = 0.4, -1.1
    co = abc_coefficients(b, FIG6, z, p)
    pr = abc_coefficients(b, FIG6, z, p, printed=True)
    e1 = math.exp(-FIG6.Gamma * FIG6.tau)
    r = 2 * math.sqrt(2)
    d12 = r * 1j * b.imag + r / FIG6.Gamma * 1j * b.real * (e1 - 1)
    assert co.D[0] == pytest.approx(-d12 + 2j * z)
    assert co.D[1] == pytest.approx(d12 + 2j * z)
    assert co.E[2] == pytest.approx(r * b.imag * e1 - 2j * p)
    np.testing.assert_array_equal(co.E, pr.E)
    assert pr.D[1] - pr.D[0] == pytest.approx(2 * (r * 1j * b.imag + d12.imag * 0 + (
        math.sqrt(2) / FIG6.Gamma) * 1j * b.real * (e1 - 1)))


def test_near_degenerate_flag():
    co = abc_coefficients(1.0, BathParams(50.0, 5.0, 0.0))
    assert co.B < 1e-100 and co.near_degenerate
    assert not abc_coefficients(1.0, FIG6).near_degenerate


@given(st.floats(0.01, 20), st.floats(0, 5), st.floats(0, 50))
@settings(max_examples=100, deadline=None)
def test_abc_positive_determinant(G, tau, N):
    co = abc_coefficients(1.0, BathParams(G, tau, N))
    assert co.det > 0 or co.near_degenerate


def test_gamma_zero_rejected():
    with pytest.raises(UnsupportedLimitError):
        abc_coefficients(1.0, BathParams(0.0, 0.1, 1.0))
    with pytest.raises(UnsupportedLimitError):
        characteristics_propagate(lambda q, v: q + v, 0.0, 0.0, BathParams(0.0, 0.1, 1.0))


# --- characteristics ------------------------------------------------------

def gauss(q, v):
    return np.exp(-(q - 0.3) ** 2 - 2 * v * v + 0.5j * v)


def test_propagate_zero_time():
    q, v = np.meshgrid(np.linspace(-2, 2, 9), np.linspace(-2, 2, 9))
    np.testing.assert_allclose(characteristics_propagate(gauss, q, v, BathParams(3.0, 0.0, 5.0)),
                               gauss(q, v), rtol=1e-14)


def test_propagate_zero_temperature():
    b = BathParams(2.0, 0.3, 0.0)
    q, v = 0.7, np.linspace(-2, 2, 9)
    e1 = math.exp(-0.6)
    np.testing.assert_allclose(characteristics_propagate(gauss, q, v, b),
                               gauss(q, (v + q / 2) * e1 - q / 2), rtol=1e-15)


@given(st.floats(0.1, 10), st.floats(0, 3), st.floats(0, 20))
@settings(max_examples=50, deadline=None)
def test_trace_preserved(G, tau, N):
    val = characteristics_propagate(gauss, 0.0, 0.0, BathParams(G, tau, N))
    assert val == pytest.approx(gauss(0.0, 0.0), rel=1e-14)


@pytest.mark.parametrize("q", [0.0, 0.4, -0.8])
@pytest.mark.parametrize("bath", [BathParams(1.0, 0.3, 0.5), BathParams(2.5, 0.2, 2.0)])
def test_propagate_against_crank_nicolson(q, bath):
    v = np.linspace(-8, 8, 3201)
    ref = crank_nicolson_transform(gauss, q, v, bath.Gamma, bath.N_th, bath.tau, steps=2000)
    got = characteristics_propagate(gauss, q, v, bath)
    assert np.max(np.abs(got - ref)) < 1e-4


def test_transform_kernel():
    k = TransformKernel(gauss, FIG6)
    assert k(0.2, 0.1) == characteristics_propagate(gauss, 0.2, 0.1, FIG6)
    assert TransformKernel(gauss)(0.2, 0.1) == gauss(0.2, 0.1)


# --- initial transforms ---------------------------------------------------

def _direct_branch(m, n, q, v):
    u = np.linspace(-14, 14, 5601)
    f = hermite_function(m, u + v) * hermite_function(n, u - v) * np.exp(-2j * q * u)
    return np.trapezoid(f, u)


@pytest.mark.parametrize("m, n", [(0, 0), (0, 2), (3, 1), (2, 2), (1, 4), (4, 0)])
@pytest.mark.parametrize("q, v", [(0.3, -0.2), (-0.7, 0.9)])
def test_branch_against_direct_integral(m, n, q, v):
    # printed normalisation: sqrt(pi) times the overlap integral
    ref = math.sqrt(math.pi) * _direct_branch(m, n, q, v)
    assert _branch(m, n, q, v) == pytest.approx(ref, abs=1e-10)


@given(st.integers(0, 12), st.integers(0, 12), st.floats(-3, 3), st.floats(-3, 3))
@settings(max_examples=80, deadline=None)
def test_branch_conjugate_symmetry(m, n, q, v):
    a = _branch(n, m, -q, -v)
    b = np.conj(_branch(m, n, q, v))
    assert abs(a - b) <= 1e-12 * max(1.0, abs(b))


def test_vacuum_initial_transform():
    exp = expansion_from_product(0.0, 1.0)
    Q, Y = 0.4, -0.3
    C0 = coherent_wavefunction(0j, Q + Y) * np.conj(coherent_wavefunction(0j, Q - Y))
    q, v = np.linspace(-2, 2, 5), np.linspace(-1, 1, 5)
    np.testing.assert_allclose(initial_transform_central(exp, Q, Y, q, v),
                               math.sqrt(math.pi) * np.exp(-v * v - q * q) * C0, rtol=1e-14)


def test_initial_transform_term_by_term():
    exp = expansion_from_product(1.0, 0.6 - 0.2j)
    Q, Y, q, v = 0.3, 0.5, -0.4, 0.2
    a = [w * coherent_wavefunction(z, Q + Y) for w, z in zip(exp.weights, exp.zetas)]
    b = [w * coherent_wavefunction(z, Q - Y) for w, z in zip(exp.weights, exp.zetas)]
    N = exp.n_max + 1
    ref = math.sqrt(math.pi) * sum(a[m] * np.conj(b[n]) * _direct_branch(m, n, q, v)
                                   for m in range(N) for n in range(N))
    assert initial_transform_central(exp, Q, Y, q, v) == pytest.approx(ref, abs=1e-10)


# --- I_mn -----------------------------------------------------------------

@pytest.mark.parametrize("bath", [BathParams(6.0, 1 / 60, 10.0), BathParams(1.0, 0.0, 3.0),
                                  BathParams(2.0, 1.0, 0.0)])
@pytest.mark.parametrize("p", [0.0, 0.6, -1.5])
def test_i00_closed_form(bath, p):
    e2 = math.exp(-2 * bath.Gamma * bath.tau)
    B = e2 + 2 * bath.N_th * (1 - e2)
    assert imn_integral(0, 0, p, bath) == pytest.approx(math.sqrt(math.pi / B) * math.exp(-p * p / B),
                                                        rel=1e-10)


@pytest.mark.parametrize("m, n", [(0, 1), (2, 5), (4, 7)])
def test_imn_odd_vanishes_at_zero_momentum(m, n):
    assert abs(imn_integral(m, n, 0.0, FIG6)) < 1e-10 * max(1.0, abs(imn_integral(m, n, 0.5, FIG6)))


@pytest.mark.parametrize("m", [0, 3, 9])
def test_imm_real(m):
    val = imn_integral(m, m, 0.6, BathParams(6.0, 1 / 60, 10.0))
    assert abs(val.imag) <= 1e-10 * max(1.0, abs(val))


def test_imn_hermitian_completion():
    b = BathParams(6.0, 1 / 60, 10.0)
    assert imn_integral(5, 2, 0.6, b) == np.conj(imn_integral(2, 5, 0.6, b))
    t = imn_table(6, 0.6, b)
    np.testing.assert_allclose(t, t.conj().T, rtol=1e-14, atol=1e-14)


def _momentum_element(m, n, p, bath):
    """<p| rho_mn(tau) |p> from Hermite overlaps and the q = 0 characteristic."""
    e1 = math.exp(-bath.Gamma * bath.tau)
    v = np.linspace(-9, 9, 721)
    u = np.linspace(-14, 14, 1121)
    hm = hermite_function(m, u[None, :] + e1 * v[:, None])
    hn = hermite_function(n, u[None, :] - e1 * v[:, None])
    P0 = np.trapezoid(hm * hn, u, axis=1)
    damp = np.exp(-2 * bath.N_th * v * v * (1 - e1 * e1))
    return np.trapezoid(np.exp(-2j * p * v) * P0 * damp, v)


def test_imn_against_momentum_elements():
    bath = BathParams(6.0, 1 / 60, 2.0)
    ratios = []
    for m, n in [(0, 0), (0, 1), (1, 3), (2, 2), (2, 4), (0, 5)]:
        ref = _momentum_element(m, n, 0.6, bath) * 2 ** ((m + n) / 2) * math.sqrt(
            math.factorial(m) * math.factorial(n))
        ratios.append(imn_integral(m, n, 0.6, bath) / ref)
    np.testing.assert_allclose(ratios, ratios[0], rtol=1e-8)
    assert ratios[0] == pytest.approx(1.0, rel=1e-8)


def test_imn_depends_on_product_only():
    a = imn_table(8, 0.6, BathParams(6.0, 1 / 60, 10.0))
    b = imn_table(8, 0.6, BathParams(2.0, 0.05, 10.0))
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-300)


# --- conditional cat under decoherence ------------------------------------

@pytest.fixture(scope="module")
def fig3_state():
    exp = expansion_from_product(1.0, -2.4j)
    pz = most_probable_momentum(exp)
    st_ = condition_on_momentum(exp, pz)
    return exp, pz, st_, auto_axes(st_)


def test_zero_time_matches_pure(fig3_state):
    exp, pz, st_, (q, p) = fig3_state
    pure = wigner_of_superposition(st_, q, p)
    dec = decohered_conditional_wigner(exp, pz, BathParams(6.0, 0.0, 10.0), q, p)
    assert np.max(np.abs(dec.values - pure.values)) < 1e-6


def test_short_time_continuity(fig3_state):
    exp, pz, _, (q, p) = fig3_state
    a = decohered_conditional_wigner(exp, pz, BathParams(6.0, 0.0, 0.0), q, p)
    b = decohered_conditional_wigner(exp, pz, BathParams(6.0, 1e-6, 0.0), q, p)
    assert np.max(np.abs(a.values - b.values)) < 1e-4


def test_fig4_negativity_reduced(fig3_state):
    exp, pz, _, (q, p) = fig3_state
    mins = []
    for tau in (0.0, 0.05, 0.2, 0.4):
        W = decohered_conditional_wigner(exp, pz, BathParams(6.0, tau / 6.0, 10.0), q, p)
        assert W.integral() == pytest.approx(1.0, abs=1e-3)
        assert W.imag_residual < 1e-8
        mins.append(W.min())
    assert abs(mins[1]) < abs(mins[0])
    assert all(b >= a - 1e-3 for a, b in zip(mins, mins[1:]))


# --- Kerr cat under decoherence -------------------------------------------

def test_cat_matches_oracle_fig6():
    g = np.linspace(-6, 6, 41)
    a = decohered_cat_wigner(2.0, FIG6, g, g, check=False)
    b = decohered_cat_oracle(2.0, FIG6, g, g)
    assert np.max(np.abs(a.values - b.values)) < 1e-6


@pytest.mark.parametrize("beta", [1.0 + 0.7j, -0.8j])
def test_cat_matches_oracle_complex_beta(beta):
    g = np.linspace(-5, 5, 21)
    bath = BathParams(2.0, 0.3, 1.5)
    a = decohered_cat_wigner(beta, bath, g, g, check=False)
    b = decohered_cat_oracle(beta, bath, g, g)
    assert np.max(np.abs(a.values - b.values)) < 1e-6


def test_printed_variant_matches_its_own_oracle():
    g = np.linspace(-5, 5, 21)
    bath = BathParams(2.0, 0.3, 1.5)
    a = decohered_cat_wigner(1.2, bath, g, g, printed=True, check=False)
    b = decohered_cat_oracle(1.2, bath, g, g, printed=True)
    c = decohered_cat_wigner(1.2, bath, g, g, check=False)
    assert np.max(np.abs(a.values - c.values)) > 1e-3
    # the printed D_i disagree with the propagated printed transform
    assert np.max(np.abs(a.values - b.values)) > 1e-6


@pytest.mark.parametrize("beta", [2.0, 1.0 - 1.0j])
def test_cat_short_time_limit(beta):
    g = np.linspace(-9, 9, 181)
    a = decohered_cat_wigner(beta, BathParams(6.0, 1e-9, 10.0), g, g)
    b = wigner_ys_cat(beta, g, g)
    assert np.max(np.abs(a.values - b.values)) < 1e-6


def test_cat_oracle_zero_time():
    g = np.linspace(-6, 6, 25)
    a = decohered_cat_oracle(2.0, BathParams(6.0, 0.0, 10.0), g, g)
    b = wigner_ys_cat(2.0, g, g, check=False)
    assert np.max(np.abs(a.values - b.values)) < 1e-6


def test_cat_oracle_vacuum():
    g = np.linspace(-6, 6, 25)
    a = decohered_cat_oracle(0.0, BathParams(6.0, 0.0, 10.0), g, g)
    Z, P = np.meshgrid(g, g, indexing="ij")
    assert np.max(np.abs(a.values - np.exp(-Z * Z - P * P) / math.pi)) < 1e-6


@pytest.mark.parametrize("beta", [2.0, 1.0 - 0.5j])
def test_cat_parity_covariance(beta):
    # the cat of -beta is the point reflection of the cat of beta
    z, p = decohered_cat_axes(beta, FIG6)
    a = decohered_cat_wigner(beta, FIG6, z, p).values
    b = decohered_cat_wigner(-beta, FIG6, z, p).values
    assert np.max(np.abs(a - b[::-1, ::-1])) < 1e-12


def test_cat_fringe_is_odd_in_z():
    # real beta: the fringe term is odd in Z, so there is no Z mirror symmetry
    g = np.linspace(-8, 8, 161)
    W = wigner_ys_cat(2.0, g, g).values
    hills = 0.5 * (W + W[::-1, :])
    assert np.max(np.abs(W - W[::-1, :])) > 0.1
    assert np.max(np.abs(hills - hills[:, ::-1])) < 1e-15


def test_cat_zero_time_centres():
    beta = 2.0
    bath = BathParams(6.0, 0.0, 10.0)
    z, p = decohered_cat_axes(beta, bath)
    W = decohered_cat_wigner(beta, bath, z, p).values
    step = z[1] - z[0]
    for sign in (1, -1):
        centre = (math.sqrt(2) * beta * 0, sign * math.sqrt(2) * beta)
        j = np.abs(p - centre[1]) < 1.0
        i, jj = np.unravel_index(np.argmax(np.where(j[None, :], W, -np.inf)), W.shape)
        assert abs(z[i] - centre[0]) <= step and abs(p[jj] - centre[1]) <= step


def test_cat_negativity_washout_monotone():
    mins = []
    for tau in (0.0, 0.05, 0.2, 0.4):
        bath = BathParams(6.0, tau, 10.0)
        z, p = decohered_cat_axes(2.0, bath)
        W = decohered_cat_wigner(2.0, bath, z, p)
        assert W.integral() == pytest.approx(1.0, abs=1e-3)
        mins.append(W.min())
    assert mins[0] < -0.2
    assert all(b >= a - 1e-3 for a, b in zip(mins, mins[1:]))
    assert abs(mins[-1]) < 1e-3 * abs(mins[0])


def test_cat_metadata_and_moments():
    beta = 2.0
    z, p = decohered_cat_axes(beta, FIG6)
    W = decohered_cat_wigner(beta, FIG6, z, p)
    A, B = W.metadata["A"], W.metadata["B"]
    assert A == pytest.approx(2.22, abs=0.01) and not W.metadata["near_degenerate"]
    # two hills with covariances A/2, B/2 centred at (+-zc, -+pc); fringes washed out
    e1 = math.exp(-FIG6.Gamma * FIG6.tau)
    zc = math.sqrt(2) / FIG6.Gamma * beta * (e1 - 1)
    pc = math.sqrt(2) * beta * e1
    Z, P = np.meshgrid(z, p, indexing="ij")
    h = (z[1] - z[0]) ** 2
    w = W.values * h
    assert (w * Z).sum() == pytest.approx(0.0, abs=2e-3)
    assert (w * Z * Z).sum() == pytest.approx(A / 2 + zc * zc, rel=1e-3)
    assert (w * P * P).sum() == pytest.approx(B / 2 + pc * pc, rel=1e-3)


def test_initial_cat_transform_trace():
    assert cat_initial_transform(2.0)(0.0, 0.0) == pytest.approx(1.0, rel=1e-12)
