"""Quadratic-coupling regime: steady state, linearised noise and squeezing.

Fluctuations are ordered ``(a_c, a_c^dagger, Z, P_z)``.  Rates are in 1/s
and the axial variables are the dimensionless scaled ones, so every matrix
entry has units of 1/s.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np
from scipy import optimize

from .errors import InstabilityError, SteadyStateError
from .model_core import ModelConfig, PROVENANCES
from .numerics import QuadratureSpec, eigenvalues4, find_peaks, integrate_real_line, solve4

__all__ = [
    "SteadyState",
    "DriftMatrix",
    "DiffusionMatrix",
    "SpectrumCurve",
    "Stability",
    "VarianceScan",
    "solve_steady_state",
    "steady_state_residuals",
    "build_drift",
    "build_diffusion",
    "spectral_matrix",
    "stability",
    "axial_momentum_spectrum",
    "spectrum_window",
    "quadrature_variances",
    "variance_scan",
    "peak_separation",
    "uncoupled",
]

RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class SteadyState:
    """Stationary mean values.

    Attributes
    ----------
    alpha_c : complex
        Cyclotron amplitude.
    Z_bar, P_bar : float
        Scaled axial position and momentum (``P_bar`` is always 0).
    n_roots : int
        Number of real roots of the scalar steady-state cubic.
    residuals : tuple of float
        Relative residuals of the four stationarity relations.
    """

    alpha_c: complex
    Z_bar: float
    P_bar: float = 0.0
    n_roots: int = 1
    residuals: tuple[float, ...] = ()

    def quadrature_amplitude(self, varphi: float) -> float:
        """``sqrt(2) Re(alpha_c e^{-i varphi})``, the quadrature that shifts the axial line."""
        return math.sqrt(2.0) * (self.alpha_c * complex(math.cos(varphi), -math.sin(varphi))).real


@dataclass(frozen=True)
class DriftMatrix:
    matrix: np.ndarray
    provenance: str = "paper"


@dataclass(frozen=True)
class DiffusionMatrix:
    matrix: np.ndarray


@dataclass(frozen=True)
class SpectrumCurve:
    omega: np.ndarray
    values: np.ndarray
    element: str = "S44"
    diagnostics: dict = field(default_factory=dict)


class Stability(NamedTuple):
    stable: bool
    eigenvalues: np.ndarray
    marginal: bool = False


def uncoupled(cfg: ModelConfig) -> ModelConfig:
    """Same configuration with the beyond-dipole coupling switched off."""
    return replace(cfg, drive=replace(cfg.drive, kappa_sq=0.0, k=None))


# ---------------------------------------------------------------------------
# Steady state
# ---------------------------------------------------------------------------

def _cyclotron_response(cfg: ModelConfig) -> complex:
    """``-i eps / (gamma_c/2 + i Delta)``, the cyclotron mean per unit (1 - kappa^2 Z^2)."""
    den = complex(0.5 * cfg.dissipation.gamma_c, cfg.detuning)
    if den == 0:
        raise SteadyStateError("undamped resonant cyclotron mode has no steady state")
    return -1j * cfg.drive.epsilon / den


def steady_state_residuals(cfg: ModelConfig, alpha_c: complex, Z: float, P: float = 0.0) -> tuple:
    """Relative residuals of the four stationarity relations."""
    wz, eps, k2 = cfg.frequencies.omega_z, cfg.drive.epsilon, cfg.drive.kappa_sq
    gc, Gam, f = cfg.dissipation.gamma_c, cfg.dissipation.Gamma, cfg.dissipation.f
    lin = complex(0.5 * gc, cfg.detuning) * alpha_c
    src = 1j * eps * (1.0 - k2 * Z * Z)
    r1 = abs(-lin - src) / max(abs(lin) + abs(src), 1e-300)
    r2 = abs(np.conj(-lin - src)) / max(abs(lin) + abs(src), 1e-300)
    r3 = abs(wz * P) / wz
    s = 2.0 * (np.conj(eps) * alpha_c).real
    terms = (wz * Z, 2.0 * k2 * s * Z, f, Gam * P)
    r4 = abs(-(wz - 2.0 * k2 * s) * Z + f - Gam * P) / max(sum(abs(t) for t in terms), 1e-300)
    return (float(r1), float(r2), float(r3), float(r4))


def solve_steady_state(cfg: ModelConfig, scan_points: int = 4096, max_doublings: int = 80) -> SteadyState:
    """Stationary solution connected to the uncoupled one ``Z = f / omega_z``.

    Eliminating the cyclotron mean leaves the real cubic
    ``g(Z) = 2 kappa^4 c Z^3 - (omega_z + 2 kappa^2 c) Z + f`` with
    ``c = 2 |eps|^2 Delta / (gamma_c^2/4 + Delta^2)``.  Its smallest root on
    the side of ``sign(f)`` is the one that tends to ``f / omega_z`` as the
    coupling vanishes.  A sign-change scan of ``[0, 2|f|/omega_z]`` (doubled
    until a bracket appears) is followed by Brent polishing.

    Raises
    ------
    SteadyStateError
        If no root is bracketed or the residuals exceed ``1e-10``.
    """
    wz, k2 = cfg.frequencies.omega_z, cfg.drive.kappa_sq
    f = cfg.dissipation.f
    resp = _cyclotron_response(cfg)
    c = -2.0 * (np.conj(cfg.drive.epsilon) * resp).real
    a3, a1 = 2.0 * k2 * k2 * c, -(wz + 2.0 * k2 * c)

    coeffs = [a3, 0.0, a1, f]
    roots = np.roots(coeffs) if a3 != 0 else np.array([-f / a1]) if a1 != 0 else np.array([])
    real = roots[np.abs(roots.imag) <= 1e-9 * np.maximum(1.0, np.abs(roots))]
    n_roots = int(real.size)

    if f == 0.0:
        Z = 0.0
    else:
        fa = abs(f)

        def g(z):
            return a3 * z ** 3 + a1 * z + fa

        upper = 2.0 * fa / wz
        Z = None
        scanned = []
        for _ in range(max_doublings):
            zs = np.linspace(0.0, upper, scan_points)
            gs = g(zs)
            scanned.append(upper)
            hit = np.flatnonzero((gs[:-1] > 0) & (gs[1:] <= 0))
            if hit.size:
                i = hit[0]
                lo, hi = zs[i], zs[i + 1]
                Z = lo if gs[i] == 0 else hi if gs[i + 1] == 0 else optimize.brentq(
                    g, lo, hi, xtol=4 * np.finfo(float).tiny, rtol=4 * np.finfo(float).eps, maxiter=500)
                break
            upper *= 2.0
        if Z is None:
            raise SteadyStateError(
                f"no steady-state root for Z in [0, {scanned[-1]:.3g}] "
                f"(cubic coefficients a3={a3:.3g}, a1={a1:.3g}, f={f:.3g}; real roots: {real.real.tolist()})")
        Z = math.copysign(float(Z), f)

    alpha_c = complex(resp * (1.0 - k2 * Z * Z))
    res = steady_state_residuals(cfg, alpha_c, Z)
    if max(res) > RESIDUAL_TOL:
        raise SteadyStateError(f"steady-state residuals {res} exceed {RESIDUAL_TOL}")
    return SteadyState(alpha_c=alpha_c, Z_bar=Z, P_bar=0.0, n_roots=n_roots, residuals=res)


# ---------------------------------------------------------------------------
# Linearised dynamics
# ---------------------------------------------------------------------------

def build_drift(cfg: ModelConfig, ss: SteadyState, provenance: str | None = None) -> DriftMatrix:
    """Drift matrix of the linearised fluctuations.

    ``provenance="paper"`` keeps the printed signs of entries (4,1), (4,2);
    ``"rederived"`` uses the signs obtained by linearising the momentum
    equation directly (``+2 kappa^2 eps^* Z``, ``+2 kappa^2 eps Z``).
    """
    prov = cfg.numerics.provenance if provenance is None else provenance
    if prov not in PROVENANCES:
        raise ValueError(f"provenance must be one of {PROVENANCES}")
    wz, eps, k2 = cfg.frequencies.omega_z, cfg.drive.epsilon, cfg.drive.kappa_sq
    gc, Gam, Delta = cfg.dissipation.gamma_c, cfg.dissipation.Gamma, cfg.detuning
    Z, a = ss.Z_bar, ss.alpha_c
    ec = np.conj(eps)
    sign = -1.0 if prov == "paper" else 1.0
    s = 2.0 * (ec * a).real
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0] = -complex(0.5 * gc, Delta)
    m[0, 2] = 2j * eps * k2 * Z
    m[1, 1] = -complex(0.5 * gc, -Delta)
    m[1, 2] = -2j * ec * k2 * Z
    m[2, 3] = wz
    m[3, 0] = sign * 2.0 * ec * k2 * Z
    m[3, 1] = sign * 2.0 * eps * k2 * Z
    m[3, 2] = -wz + 2.0 * k2 * s
    m[3, 3] = -Gam
    return DriftMatrix(m, prov)


def build_diffusion(cfg: ModelConfig) -> DiffusionMatrix:
    """Diffusion matrix: ``D12 = gamma_c`` and ``D44 = Gamma N_th`` (times ``d44_factor``)."""
    d = np.zeros((4, 4), dtype=complex)
    d[0, 1] = cfg.dissipation.gamma_c
    d[3, 3] = cfg.dissipation.Gamma * cfg.dissipation.N_th * cfg.numerics.d44_factor
    return DiffusionMatrix(d)


def _mat(x) -> np.ndarray:
    return np.asarray(getattr(x, "matrix", x), dtype=complex)


def spectral_matrix(M, D, omega) -> np.ndarray:
    """``S(w) = (iw - M)^-1 D (-iw - M^T)^-1`` by two solves, no explicit inverse.

    ``omega`` may be a scalar or an array; the result has shape
    ``omega.shape + (4, 4)``.
    """
    m, d = _mat(M), _mat(D)
    w = np.asarray(omega, dtype=float)
    eye = np.eye(4)
    iw = 1j * w[..., None, None]
    x = solve4(iw * eye - m, np.broadcast_to(d, w.shape + (4, 4)))
    st = solve4(-iw * eye - m, np.swapaxes(x, -1, -2))
    return np.swapaxes(st, -1, -2)


def stability(M) -> Stability:
    """Stable iff every eigenvalue has a negative real part.

    Eigenvalues whose real part vanishes to rounding make the system
    marginal, which is reported as unstable with a warning.
    """
    m = _mat(M)
    lam = eigenvalues4(m)
    scale = max(float(np.abs(m).max()), 1e-300)
    marginal = bool(np.any(np.abs(lam.real) <= 1e-12 * scale))
    if marginal:
        warnings.warn("drift matrix has eigenvalues with zero real part", RuntimeWarning, stacklevel=2)
    stable = bool(np.all(lam.real < 0)) and not marginal
    return Stability(stable, lam, marginal)


def _linearise(cfg: ModelConfig, allow_unstable: bool, provenance: str | None = None):
    ss = solve_steady_state(cfg)
    M = build_drift(cfg, ss, provenance)
    st = stability(M)
    if not st.stable and not allow_unstable:
        raise InstabilityError(
            f"linearised dynamics unstable: max Re(lambda) = {st.eigenvalues.real.max():.6g}",
            st.eigenvalues)
    return ss, M, st


def _axial_pair(lam: np.ndarray, omega_z: float) -> complex:
    up = lam[lam.imag > 0]
    if up.size == 0:
        return complex(lam[np.argmax(lam.real)])
    return complex(up[np.argmin(np.abs(up.imag - omega_z))])


def spectrum_window(cfg: ModelConfig, points: int | None = None, provenance: str | None = None,
                    allow_unstable: bool = False) -> np.ndarray:
    """Uniform frequency grid around the coupled and uncoupled axial resonances.

    The window spans both line centres plus twelve half-widths on either side.
    """
    points = cfg.numerics.spectrum_points if points is None else int(points)
    wz = cfg.frequencies.omega_z
    centres, widths = [wz], [0.5 * cfg.dissipation.Gamma]
    for c in (cfg, uncoupled(cfg)):
        _, _, st = _linearise(c, True, provenance)
        lam = _axial_pair(st.eigenvalues, wz)
        centres.append(abs(lam.imag))
        widths.append(abs(lam.real))
    h = max(max(widths), 1e-6 * wz)
    lo, hi = min(centres) - 12.0 * h, max(centres) + 12.0 * h
    return np.linspace(max(lo, 0.0), hi, points)


def axial_momentum_spectrum(cfg: ModelConfig, omega, allow_unstable: bool = False,
                            provenance: str | None = None) -> SpectrumCurve:
    """``Re S44(omega)`` on the given grid with stability and realness diagnostics."""
    ss, M, st = _linearise(cfg, allow_unstable, provenance)
    D = build_diffusion(cfg)
    omega = np.asarray(omega, dtype=float)
    s44 = spectral_matrix(M, D, omega)[..., 3, 3]
    mag = np.maximum(np.abs(s44), 1e-300)
    diag = {
        "stable": st.stable,
        "eigenvalues": st.eigenvalues,
        "max_imag_ratio": float(np.max(np.abs(s44.imag) / mag)),
        "Z_bar": ss.Z_bar,
        "alpha_c": ss.alpha_c,
        "n_roots": ss.n_roots,
        "provenance": M.provenance,
    }
    return SpectrumCurve(omega, s44.real.copy(), "S44", diag)


def peak_separation(cfg: ModelConfig, points: int | None = None, provenance: str | None = None,
                    allow_unstable: bool = False) -> dict:
    """Axial line positions with and without coupling on a shared window.

    Returns
    -------
    dict
        ``omega``, both curves, their detected peaks and
        ``separation = peak(uncoupled) - peak(coupled)``.
    """
    omega = spectrum_window(cfg, points, provenance)
    cpl = axial_momentum_spectrum(cfg, omega, allow_unstable, provenance)
    unc = axial_momentum_spectrum(uncoupled(cfg), omega, allow_unstable, provenance)
    pc, pu = find_peaks(omega, cpl.values), find_peaks(omega, unc.values)
    sep = float("nan")
    if pc and pu:
        top_c = max(pc, key=lambda p: p.height)
        top_u = max(pu, key=lambda p: p.height)
        sep = top_u.omega - top_c.omega
    return {"omega": omega, "coupled": cpl, "uncoupled": unc,
            "peaks_coupled": pc, "peaks_uncoupled": pu, "separation": sep}


# ---------------------------------------------------------------------------
# Quadrature variances
# ---------------------------------------------------------------------------

def _variance_integrals(M: DriftMatrix, D: DiffusionMatrix, spec: QuadratureSpec) -> np.ndarray:
    lam = eigenvalues4(M.matrix)
    scale = max(float(np.abs(lam).max()), 1.0)
    bps = []
    for l in lam:
        for k in (0.0, -3.0, 3.0):
            w = l.imag + k * abs(l.real)
            bps.extend((w, -w))

    def integrand(w):
        s = spectral_matrix(M, D, w)
        return np.stack([s[:, 0, 0], s[:, 1, 1], s[:, 0, 1] + s[:, 1, 0]], axis=-1)

    return integrate_real_line(integrand, scale, bps, spec)


def quadrature_variances(cfg: ModelConfig, varphi: float = 0.0, allow_unstable: bool = False,
                         provenance: str | None = None,
                         spec: QuadratureSpec | None = None) -> tuple[float, float]:
    """Stationary variances of ``X_phi`` at ``phi = varphi`` and ``varphi + pi/2``.

    ``X_phi = (a e^{i phi} + a^dagger e^{-i phi}) / sqrt(2)`` so that
    ``Var = (1/2)(1/2pi) Int [e^{2i phi} S11 + e^{-2i phi} S22 + S12 + S21] dw``,
    which is exactly 1/2 for the vacuum.  The integral runs over the whole
    real line with panels seeded at the resolvent poles.
    """
    _, M, _ = _linearise(cfg, allow_unstable, provenance)
    D = build_diffusion(cfg)
    if spec is None:
        spec = QuadratureSpec(abs_tol=1e-12, rel_tol=1e-9,
                              max_subdivisions=cfg.numerics.max_subdivisions)
    i11, i22, i12 = _variance_integrals(M, D, spec)

    def var(phi):
        e = complex(math.cos(2 * phi), math.sin(2 * phi))
        return float((e * i11 + np.conj(e) * i22 + i12).real / (4.0 * math.pi))

    return var(varphi), var(varphi + 0.5 * math.pi)


@dataclass(frozen=True)
class VarianceScan:
    """Quadrature variances over a detuning sweep.

    ``status`` is ``"ok"``, ``"unstable"`` or ``"no_root"`` per detuning;
    variances are NaN wherever it is not ``"ok"`` (unless unstable points
    were explicitly allowed).
    """

    delta: np.ndarray
    var_amp: np.ndarray
    var_orth: np.ndarray
    status: np.ndarray
    max_real_eig: np.ndarray
    varphi: float

    @property
    def stable(self) -> np.ndarray:
        return self.status == "ok"

    @property
    def product(self) -> np.ndarray:
        return self.var_amp * self.var_orth


def variance_scan(cfg: ModelConfig, deltas: Sequence[float], varphi: float = 0.0,
                  allow_unstable: bool = False, provenance: str | None = None,
                  workers: int = 1) -> VarianceScan:
    """Evaluate :func:`quadrature_variances` for each detuning.

    Detunings without a connected steady state, or with an unstable one,
    are reported through ``status`` instead of aborting the sweep.
    """
    deltas = np.asarray(deltas, dtype=float)

    def one(delta):
        c = replace(cfg, detuning=float(delta), drive=replace(cfg.drive, drive_frequency=None))
        try:
            ss = solve_steady_state(c)
        except SteadyStateError:
            return math.nan, math.nan, "no_root", math.nan
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            st = stability(build_drift(c, ss, provenance))
        mr = float(st.eigenvalues.real.max())
        status = "ok" if st.stable else "unstable"
        if not st.stable and not allow_unstable:
            return math.nan, math.nan, status, mr
        va, vo = quadrature_variances(c, varphi, True, provenance)
        return va, vo, status, mr

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, deltas))
    else:
        rows = [one(d) for d in deltas]
    va = np.array([r[0] for r in rows], dtype=float)
    vo = np.array([r[1] for r in rows], dtype=float)
    status = np.array([r[2] for r in rows], dtype=object)
    mr = np.array([r[3] for r in rows], dtype=float)
    return VarianceScan(deltas, va, vo, status, mr, varphi)
