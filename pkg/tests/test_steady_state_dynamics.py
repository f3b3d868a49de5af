import math
import warnings
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from geonium import presets
from geonium.errors import InstabilityError, SteadyStateError
from geonium.model_core import (DissipationConfig, DriveConfig, ModeFrequencies, ModelConfig,
                                with_numerics)
from geonium.steady_state_dynamics import (SteadyState, axial_momentum_spectrum, build_diffusion,
                                           build_drift, peak_separation, quadrature_variances,
                                           solve_steady_state, spectral_matrix, stability,
                                           uncoupled, variance_scan)

from oracles import dense_root_scan, lyapunov_variances


def make(eps=1.0 + 0j, k2=0.0, gc=1.5, Gam=20.0, N=0.0, f=0.0, delta=0.0, wz=2e6, wc=1e12):
    return ModelConfig(frequencies=ModeFrequencies(wz, wc),
                       drive=DriveConfig(epsilon=eps, kappa_sq=k2),
                       dissipation=DissipationConfig(gamma_c=gc, Gamma=Gam, N_th=N, f=f),
                       detuning=delta)


# --- steady state ---------------------------------------------------------

def test_uncoupled_limit():
    cfg = make(eps=3 - 1j, f=5e6, delta=4.0, gc=2.0)
    ss = solve_steady_state(cfg)
    assert ss.alpha_c == pytest.approx(-1j * (3 - 1j) / complex(1.0, 4.0), rel=1e-14)
    assert ss.Z_bar == pytest.approx(5e6 / 2e6, rel=1e-14) and ss.P_bar == 0.0


def test_zero_force():
    cfg = make(eps=2.0, k2=1e-3, f=0.0, delta=1.0)
    ss = solve_steady_state(cfg)
    assert ss.Z_bar == 0.0
    assert ss.alpha_c == pytest.approx(-2j / complex(0.75, 1.0), rel=1e-14)


def test_fig1_root_matches_dense_scan(fig1_cfg):
    ss = solve_steady_state(fig1_cfg)
    wz, k2, f = fig1_cfg.frequencies.omega_z, fig1_cfg.drive.kappa_sq, fig1_cfg.dissipation.f
    eps, gc, d = fig1_cfg.drive.epsilon, fig1_cfg.dissipation.gamma_c, fig1_cfg.detuning
    # independent elimination: alpha(Z) = -i eps (1 - k2 Z^2) / (gc/2 + i d)
    def g(z):
        a = -1j * eps * (1 - k2 * z * z) / complex(gc / 2, d)
        return -(wz - 2 * k2 * 2 * (np.conj(eps) * a).real) * z + f
    roots = dense_root_scan(g, 0.0, 2 * f / wz)
    near = min(roots, key=lambda r: abs(r - f / wz))
    assert ss.Z_bar == pytest.approx(near, rel=1e-8)
    assert max(ss.residuals) < 1e-10


def test_no_connected_root_raises():
    cfg = make(eps=1.4e4, k2=1e-6, f=1e11, delta=0.75, gc=1.5)
    with pytest.raises(SteadyStateError) as info:
        solve_steady_state(replace(cfg, detuning=0.75))
    assert "no steady-state root" in str(info.value)


def test_quadrature_amplitude():
    ss = SteadyState(alpha_c=1j, Z_bar=0.0)
    assert ss.quadrature_amplitude(math.pi / 2) == pytest.approx(math.sqrt(2))
    assert abs(ss.quadrature_amplitude(0.0)) < 1e-15


# --- drift and diffusion --------------------------------------------------

def test_drift_uncoupled_block_diagonal():
    cfg = make(eps=2.0, k2=0.0, gc=2.0, Gam=3.0, delta=5.0, wz=7.0, wc=1e4)
    M = build_drift(cfg, solve_steady_state(cfg)).matrix
    expected = np.zeros((4, 4), complex)
    expected[0, 0], expected[1, 1] = -1 - 5j, -1 + 5j
    expected[2, 3], expected[3, 2], expected[3, 3] = 7.0, -7.0, -3.0
    np.testing.assert_array_equal(M, expected)


def test_drift_entry_13():
    cfg = make(eps=1.0, k2=1e-6)
    M = build_drift(cfg, SteadyState(alpha_c=0j, Z_bar=1e3)).matrix
    assert M[0, 2] == pytest.approx(2e-3j, rel=1e-14)
    assert M[1, 2] == pytest.approx(-2e-3j, rel=1e-14)


def test_drift_43_plug_in(fig1_cfg):
    ss = solve_steady_state(fig1_cfg)
    M = build_drift(fig1_cfg, ss).matrix
    eps, k2 = fig1_cfg.drive.epsilon, fig1_cfg.drive.kappa_sq
    s = np.conj(eps) * ss.alpha_c + eps * np.conj(ss.alpha_c)
    assert M[3, 2] == pytest.approx(-fig1_cfg.frequencies.omega_z + 2 * k2 * s, rel=1e-14)


def test_provenance_flips_only_row4_cyclotron_entries(fig1_cfg):
    ss = solve_steady_state(fig1_cfg)
    p = build_drift(fig1_cfg, ss, "paper").matrix
    r = build_drift(fig1_cfg, ss, "rederived").matrix
    diff = np.argwhere(p != r)
    assert sorted(map(tuple, diff)) == [(3, 0), (3, 1)]
    np.testing.assert_allclose(p[3, :2], -r[3, :2], rtol=0)
    eps, k2, Z = fig1_cfg.drive.epsilon, fig1_cfg.drive.kappa_sq, ss.Z_bar
    assert r[3, 0] == pytest.approx(2 * k2 * np.conj(eps) * Z)
    with pytest.raises(ValueError):
        build_drift(fig1_cfg, ss, "other")


def test_diffusion_examples():
    assert not build_diffusion(make(gc=0.0, N=0.0)).matrix.any()
    d = build_diffusion(make(gc=1.5, Gam=20.0, N=1e3)).matrix
    assert d[0, 1] == 1.5 and d[3, 3] == 2e4
    assert np.count_nonzero(d) == 2
    d2 = build_diffusion(make(gc=1.5, Gam=20.0, N=2e3)).matrix
    assert d2[3, 3] == 2 * d[3, 3] and d2[0, 1] == d[0, 1]


def test_diffusion_factor():
    cfg = with_numerics(make(Gam=4.0, N=3.0), d44_factor=2.0)
    assert build_diffusion(cfg).matrix[3, 3] == 24.0


# --- spectral matrix ------------------------------------------------------

def test_spectral_matrix_example():
    cfg = make(gc=2.0, delta=0.0, k2=0.0)
    M = build_drift(cfg, solve_steady_state(cfg))
    S = spectral_matrix(M, build_diffusion(cfg), 0.0)
    assert S[0, 1] == pytest.approx(2.0, rel=1e-14)


def test_zero_diffusion_gives_zero_spectrum(fig1_cfg):
    M = build_drift(fig1_cfg, solve_steady_state(fig1_cfg))
    S = spectral_matrix(M, np.zeros((4, 4)), np.linspace(-1e6, 3e6, 7))
    assert not S.any()


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=40, deadline=None)
def test_spectral_reconstruction(seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    M = A - (np.abs(np.linalg.eigvals(A).real).max() + 0.5) * np.eye(4)
    D = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    w = rng.uniform(-5, 5)
    S = spectral_matrix(M, D, w)
    back = (1j * w * np.eye(4) - M) @ S @ (-1j * w * np.eye(4) - M.T)
    assert np.linalg.norm(back - D) < 1e-9 * np.linalg.norm(D)


def test_spectrum_decays_as_inverse_square(fig1_cfg):
    M = build_drift(fig1_cfg, solve_steady_state(fig1_cfg))
    D = build_diffusion(fig1_cfg)
    n1, n2, n3 = (np.linalg.norm(spectral_matrix(M, D, w)) for w in (1e9, 1e10, 1e11))
    assert n2 / n1 == pytest.approx(1e-2, rel=1e-2)
    assert n3 / n2 == pytest.approx(1e-2, rel=1e-2)


# --- spectrum and peaks ---------------------------------------------------

def test_uncoupled_single_peak_at_omega_z(fig1_cfg):
    res = peak_separation(uncoupled(fig1_cfg), points=2001)
    assert len(res["peaks_coupled"]) == 1
    wz = fig1_cfg.frequencies.omega_z
    step = res["omega"][1] - res["omega"][0]
    assert abs(res["peaks_coupled"][0].omega - wz) <= step


def test_fig1_spectrum_properties(fig1_cfg):
    res = peak_separation(fig1_cfg, points=2001)
    cpl, unc = res["coupled"], res["uncoupled"]
    for c in (cpl, unc):
        assert c.values.min() >= -1e-9 * c.values.max()
        assert c.diagnostics["max_imag_ratio"] < 1e-8
        assert c.diagnostics["stable"]
    assert res["separation"] > 0
    top_u = max(res["peaks_uncoupled"], key=lambda p: p.height)
    assert abs(top_u.omega - fig1_cfg.frequencies.omega_z) <= 2 * (res["omega"][1] - res["omega"][0])


def test_separation_monotone_in_force(fig1_cfg):
    seps = [peak_separation(replace(fig1_cfg, dissipation=replace(fig1_cfg.dissipation, f=f)),
                            points=2001)["separation"] for f in (0.5e11, 1e11, 2e11)]
    assert seps[0] < seps[1] < seps[2]


def _unstable_cfg(delta=-1.5e4):
    cfg = presets.fig1_config()
    return replace(cfg, frequencies=ModeFrequencies(1.5e4, 1e12), detuning=delta,
                   drive=replace(cfg.drive, drive_frequency=None))


def test_unstable_spectrum_requires_override():
    cfg = _unstable_cfg()
    with pytest.raises(InstabilityError) as info:
        axial_momentum_spectrum(cfg, [1e4, 1.5e4])
    assert info.value.eigenvalues.real.max() > 0
    curve = axial_momentum_spectrum(cfg, [1e4, 1.5e4], allow_unstable=True)
    assert not curve.diagnostics["stable"]


# --- stability ------------------------------------------------------------

def test_stable_uncoupled():
    cfg = make(eps=1.0, gc=1.0, Gam=2.0, delta=3.0, wz=5.0, wc=1e4)
    assert stability(build_drift(cfg, solve_steady_state(cfg))).stable


def test_marginal_warns_and_is_not_stable():
    cfg = make(eps=1.0, gc=0.0, Gam=0.0, delta=3.0, wz=5.0, wc=1e4)
    M = build_drift(cfg, SteadyState(alpha_c=0j, Z_bar=0.0))
    with pytest.warns(RuntimeWarning):
        st_ = stability(M)
    assert st_.marginal and not st_.stable


def test_fig1_stable_both_provenances(fig1_cfg):
    ss = solve_steady_state(fig1_cfg)
    flags = {p: stability(build_drift(fig1_cfg, ss, p)).stable for p in ("paper", "rederived")}
    assert flags == {"paper": True, "rederived": True}


# --- quadrature variances -------------------------------------------------

@pytest.mark.parametrize("varphi", [0.0, 0.4, 1.3, math.pi])
def test_uncoupled_vacuum_variance(varphi):
    cfg = make(eps=2.0, gc=1.5, delta=3.0, k2=0.0, N=10.0)
    va, vo = quadrature_variances(cfg, varphi)
    assert va == pytest.approx(0.5, abs=1e-9) and vo == pytest.approx(0.5, abs=1e-9)


@given(st.floats(0.1, 10), st.floats(-20, 20))
@settings(max_examples=10, deadline=None)
def test_vacuum_variance_random(gc, delta):
    va, vo = quadrature_variances(make(eps=1.0, gc=gc, delta=delta), 0.3)
    assert abs(va - 0.5) < 1e-3 and abs(vo - 0.5) < 1e-3


@pytest.mark.parametrize("delta", [-3.0, -0.4, 0.0, 8.0])
@pytest.mark.parametrize("prov", ["paper", "rederived"])
def test_variances_match_lyapunov(fig2_cfg, delta, prov):
    cfg = replace(fig2_cfg, detuning=delta)
    M = build_drift(cfg, solve_steady_state(cfg), prov)
    if not stability(M).stable:
        pytest.skip("unstable point")
    ref = lyapunov_variances(M.matrix, build_diffusion(cfg).matrix, 0.0)
    got = quadrature_variances(cfg, 0.0, provenance=prov)
    np.testing.assert_allclose(got, ref, rtol=1e-6)


def test_fig2_scan_squeezing_and_uncertainty(fig2_cfg):
    deltas = np.linspace(-10, 10, 81)
    scan = variance_scan(fig2_cfg, deltas, workers=2)
    ok = scan.stable
    assert ok.sum() > 20
    assert set(scan.status) <= {"ok", "unstable", "no_root"}
    assert np.all(np.isnan(scan.var_amp[~ok]))
    squeezed = ok & (scan.var_amp < 0.5) & (scan.var_orth > 0.5)
    assert squeezed.any()
    assert np.nanmin(scan.product) >= 0.25 - 1e-3


def test_scan_parallel_is_deterministic(fig2_cfg):
    d = np.linspace(-2, 2, 9)
    a = variance_scan(fig2_cfg, d, workers=1)
    b = variance_scan(fig2_cfg, d, workers=3)
    np.testing.assert_array_equal(a.var_amp, b.var_amp)
    np.testing.assert_array_equal(a.status, b.status)


def test_unstable_variances_raise():
    with pytest.raises(InstabilityError):
        quadrature_variances(_unstable_cfg(), 0.0)


@pytest.mark.parametrize("delta", [-5000.0, -2000.0])
def test_provenance_stability_discrepancy_is_reported(delta):
    # at omega_z = 1.5e4 the two sign choices disagree; both flags are reported
    cfg = _unstable_cfg(delta)
    ss = solve_steady_state(cfg)
    assert not stability(build_drift(cfg, ss, "paper")).stable
    assert stability(build_drift(cfg, ss, "rederived")).stable
