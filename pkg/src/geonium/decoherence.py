"""Thermal decoherence of axial cat states during a finite-time readout.

The axial density matrix is written in the variables ``u, v`` with
``Z' = u + v``, ``Z'' = u - v`` and Fourier transformed in ``u``:
``rho(u, v) = int dq e^{2iqu} P(q, v)``.  In a thermal bath the transform
obeys a first-order PDE solved by characteristics.  All rates and times
are scaled by the axial frequency.

Two corrections to the printed closed forms are built in (the printed
variants stay reachable through ``printed=True``):

* in the linear coefficients ``D_i`` the ``1/Gamma`` terms carry
  ``2 sqrt(2)``, as the characteristic flow of the initial transform gives;
* the interference pair of the cat Wigner function enters as
  ``+i (I_3 - I_4)``, which is the sign that reproduces the closed-form
  Wigner function of the Kerr cat at ``tau = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

from .cat_states import EntangledExpansion, WignerGrid, wigner_from_density
from .errors import DegeneracyError, UnsupportedLimitError
from .model_core import BathParams
from .numerics import (Grid2D, QuadratureSpec, assoc_laguerre, coherent_wavefunction,
                       integrate_line)

__all__ = [
    "BathParams",
    "ABCCoefficients",
    "TransformKernel",
    "abc_coefficients",
    "characteristics_propagate",
    "initial_transform_central",
    "cat_initial_transform",
    "imn_integral",
    "imn_table",
    "decohered_conditional_wigner",
    "decohered_cat_wigner",
    "decohered_cat_oracle",
    "decohered_cat_axes",
]

SQRT2 = math.sqrt(2.0)
NEAR_DEGENERATE = 1e-12


def _require_gamma(bath: BathParams) -> None:
    if bath.Gamma == 0.0:
        raise UnsupportedLimitError(
            "Gamma = 0 makes the characteristic solution singular; use a small positive Gamma",
            "bath.Gamma")


@dataclass(frozen=True)
class ABCCoefficients:
    """Quadratic (``A, B, C``) and linear (``D_i, E_i``) exponent coefficients.

    ``D`` and ``E`` have shape ``(4,) + Z.shape``.
    """

    A: float
    B: float
    C: float
    D: np.ndarray
    E: np.ndarray

    @property
    def det(self) -> float:
        return 4.0 * self.A * self.B - self.C ** 2

    @property
    def near_degenerate(self) -> bool:
        return self.det < NEAR_DEGENERATE


def abc_coefficients(beta: complex, bath: BathParams, Z=0.0, P_z=0.0,
                     printed: bool = False) -> ABCCoefficients:
    """Coefficients of the four Gaussian integrals of the decohered cat.

    Parameters
    ----------
    beta : complex
    bath : BathParams
        Requires ``Gamma > 0``.
    Z, P_z : float or ndarray
        Phase-space point(s).
    printed : bool
        Use ``sqrt(2)/Gamma`` in ``D_i`` as printed instead of ``2 sqrt(2)/Gamma``.

    Raises
    ------
    DegeneracyError
        If ``4AB - C^2 <= 0``.
    """
    _require_gamma(bath)
    G, tau, N = bath.Gamma, bath.tau, bath.N_th
    e1 = math.exp(-G * tau)
    e2 = e1 * e1
    A = ((e1 - 1.0) ** 2 / G ** 2 + 1.0 + 2.0 * N / G ** 2 * (1.0 - e2)
         - 8.0 * N / G ** 2 * (1.0 - e1) + 4.0 * N / G * tau)
    B = e2 + 2.0 * N * (1.0 - e2)
    C = -2.0 / G * e1 * (e1 - 1.0) - 4.0 * N / G * (1.0 - e2) + 8.0 * N / G * (1.0 - e1)
    if 4.0 * A * B - C * C <= 0.0:
        raise DegeneracyError(f"4AB - C^2 = {4 * A * B - C * C:.3g} is not positive")
    Z = np.asarray(Z, dtype=float)
    P = np.asarray(P_z, dtype=float)
    b = complex(beta)
    k = (SQRT2 if printed else 2.0 * SQRT2) / G
    d12 = 2.0 * SQRT2 * 1j * b.imag + k * 1j * b.real * (e1 - 1.0)
    d34 = 2.0 * SQRT2 * b.real + k * b.imag * (1.0 - e1)
    e12 = 2.0 * SQRT2 * 1j * b.real * e1
    e34 = 2.0 * SQRT2 * b.imag * e1
    zz, pp = 2j * Z, -2j * P
    D = np.stack(np.broadcast_arrays(-d12 + zz, d12 + zz, -d34 + zz, d34 + zz))
    E = np.stack(np.broadcast_arrays(-e12 + pp, e12 + pp, e34 + pp, -e34 + pp))
    return ABCCoefficients(float(A), float(B), float(C), D, E)


# ---------------------------------------------------------------------------
# Characteristics
# ---------------------------------------------------------------------------

def characteristics_propagate(initial: Callable, q, v, bath: BathParams):
    """Transform at time ``tau`` from the transform at time 0.

    ``P(q, v, tau) = P(q, (v + q/G) e^{-G tau} - q/G, 0)
    exp{-2N (v + q/G)^2 (1 - e^{-2 G tau}) + (8N/G) q (v + q/G)(1 - e^{-G tau})}
    e^{-4 q^2 N tau / G}``.
    """
    _require_gamma(bath)
    G, tau, N = bath.Gamma, bath.tau, bath.N_th
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    e1 = math.exp(-G * tau)
    w = v + q / G
    v0 = w * e1 - q / G
    damp = (-2.0 * N * w * w * (1.0 - e1 * e1) + 8.0 * N / G * q * w * (1.0 - e1)
            - 4.0 * q * q * N * tau / G)
    return initial(q, v0) * np.exp(damp)


@dataclass(frozen=True)
class TransformKernel:
    """Transform ``P(q, v, tau)``: an initial kernel plus an optional bath."""

    initial: Callable
    bath: BathParams | None = None

    def __call__(self, q, v):
        if self.bath is None or self.bath.tau == 0.0:
            return self.initial(np.asarray(q, float), np.asarray(v, float))
        return characteristics_propagate(self.initial, q, v, self.bath)


# ---------------------------------------------------------------------------
# Initial transforms
# ---------------------------------------------------------------------------

def _branch(m: int, n: int, q, v):
    """``sqrt(pi) int du e^{-2iqu} psi_m(u+v) psi_n(u-v)`` (normalised Hermite functions)."""
    lo, hi = min(m, n), max(m, n)
    # for m > n the roles of v flip: the term equals the (n, m) term at -v
    s = -v if m <= n else v
    x = 2.0 * (v * v + q * q)
    log_ratio = 0.5 * ((hi - lo) * math.log(2.0) + special.gammaln(lo + 1) - special.gammaln(hi + 1))
    return (math.sqrt(math.pi) * np.exp(-v * v - q * q + log_ratio)
            * (s - 1j * q) ** (hi - lo) * assoc_laguerre(lo, hi - lo, x))


def initial_transform_central(exp: EntangledExpansion, Q: float, Y: float, q, v):
    """Initial transform of the entangled state at cyclotron point ``(Q, Y)``.

    Returns ``sqrt(pi) e^{-v^2-q^2} sum_mn C_m C_n^* ...`` in the printed
    normalisation, i.e. ``pi^{3/2}`` times the transform defined by
    ``rho(u, v) = int dq e^{2iqu} P(q, v)``.  The three branches are
    ``m < n``: ``2^n m! (-v - iq)^{n-m} L_m^{n-m}``, ``m = n``:
    ``2^n n! L_n`` and ``m > n``: ``2^m n! (v - iq)^{m-n} L_n^{m-n}``,
    with the Hermite normalisation moved into the coefficients.
    """
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    a = exp.weights * np.array([coherent_wavefunction(z, Q + Y) for z in exp.zetas])
    b = np.conj(exp.weights * np.array([coherent_wavefunction(z, Q - Y) for z in exp.zetas]))
    total = np.zeros(np.broadcast(q, v).shape, dtype=complex)
    scale = max(np.abs(a).max() * np.abs(b).max(), 1e-300)
    for m in range(exp.n_max + 1):
        for n in range(exp.n_max + 1):
            c = a[m] * b[n]
            if abs(c) <= 1e-18 * scale:
                continue
            total = total + c * _branch(m, n, q, v)
    return total


def cat_initial_transform(beta: complex, printed: bool = False) -> Callable:
    """Initial transform of the Yurke-Stoler cat (``1/pi^2`` Wigner normalisation).

    ``printed=True`` keeps the printed signs ``-i, +i`` on the interference
    pair, which describes the cat of ``-beta``.
    """
    b = complex(beta)
    br, bi = b.real, b.imag
    pref = 0.5 * np.exp(-abs(b) ** 2 + (b * b).real)
    s = -1j if printed else 1j
    r = 2.0 * SQRT2

    def kernel(q, v):
        q = np.asarray(q, dtype=float)
        v = np.asarray(v, dtype=float)
        g = np.exp(-q * q - v * v)
        t1 = np.exp(2 * bi * bi - r * 1j * (bi * q + br * v))
        t2 = np.exp(2 * bi * bi + r * 1j * (bi * q + br * v))
        t3 = np.exp(-2 * br * br - r * br * q + r * bi * v)
        t4 = np.exp(-2 * br * br + r * br * q - r * bi * v)
        return pref * g * (t1 + t2 + s * t3 - s * t4)

    return kernel


# ---------------------------------------------------------------------------
# Conditional cat under decoherence
# ---------------------------------------------------------------------------

def _imn_half_width(m: int, n: int, B: float, p_z: float) -> float:
    sigma = 1.0 / math.sqrt(2.0 * B)
    bulk = math.sqrt(0.5 * (m + n) / B)
    return max(8.0, abs(p_z) + 8.0 * sigma, bulk + 12.0 * sigma)


def imn_integral(m: int, n: int, p_z: float, bath: BathParams,
                 spec: QuadratureSpec | None = None) -> complex:
    """``I_mn = 2^n m! int dv e^{-B v^2 - 2i P v} (-v e^{-G tau})^{n-m} L_m^{n-m}(2 v^2 e^{-2 G tau})``.

    Defined for ``n >= m``; for ``n < m`` the Hermitian completion
    ``I_mn = conj(I_nm)`` is returned.
    """
    m, n = int(m), int(n)
    if n < m:
        return complex(np.conj(imn_integral(n, m, p_z, bath, spec)))
    e1 = math.exp(-bath.Gamma * bath.tau)
    e2 = e1 * e1
    B = e2 + 2.0 * bath.N_th * (1.0 - e2)
    if not B > 0:
        raise DegeneracyError("Gaussian envelope of I_mn is not decaying")
    hw = _imn_half_width(m, n, B, p_z)
    if spec is None:
        spec = QuadratureSpec(abs_tol=1e-10, rel_tol=1e-10, half_width=hw)
    else:
        spec = QuadratureSpec(spec.abs_tol, spec.rel_tol, spec.max_subdivisions, max(hw, spec.half_width))
    pref = math.exp(n * math.log(2.0) + special.gammaln(m + 1))
    k = n - m

    def f(v):
        poly = (-v * e1) ** k * assoc_laguerre(m, k, 2.0 * v * v * e2)
        return pref * np.exp(-B * v * v - 2j * p_z * v) * poly

    return complex(integrate_line(f, spec))


def imn_table(n_max: int, p_z: float, bath: BathParams,
              spec: QuadratureSpec | None = None) -> np.ndarray:
    """All ``I_mn`` for ``m, n <= n_max``; the lower triangle by conjugation."""
    table = np.zeros((n_max + 1, n_max + 1), dtype=complex)
    for m in range(n_max + 1):
        for n in range(m, n_max + 1):
            table[m, n] = imn_integral(m, n, p_z, bath, spec)
            table[n, m] = np.conj(table[m, n])
    return table


def _log_weights(beta: complex, n_max: int) -> np.ndarray:
    """``beta^m / m! 2^{-m/2}`` in log space."""
    k = np.arange(n_max + 1)
    b = complex(beta)
    if b == 0:
        out = np.zeros(n_max + 1, dtype=complex)
        out[0] = 1.0
        return out
    mag = k * math.log(abs(b)) - special.gammaln(k + 1) - 0.5 * k * math.log(2.0)
    return np.exp(mag) * np.exp(1j * k * np.angle(b))


def decohered_conditional_wigner(exp: EntangledExpansion, p_z: float, bath: BathParams,
                                 q_axis, p_axis, spec: QuadratureSpec | None = None,
                                 check: bool = True, table: np.ndarray | None = None) -> WignerGrid:
    """Cyclotron Wigner function after a momentum readout lasting ``tau``.

    ``rho_c ~ sum_mn (beta^m/m!)(beta*^n/n!) 2^{-(m+n)/2} I_mn |zeta_m><zeta_n|``,
    normalised by its analytic trace.  The momentum phase convention is the
    standard ``(-i)^n`` one, which the ``I_mn`` integrals embody.
    """
    if table is None:
        table = imn_table(exp.n_max, p_z, bath, spec)
    w = _log_weights(exp.beta, exp.n_max)
    R = np.outer(w, np.conj(w)) * table
    meta = {"p_z": float(p_z), "Gamma": bath.Gamma, "tau": bath.tau, "N_th": bath.N_th,
            "n_max": exp.n_max}
    return wigner_from_density(R, exp.zetas, q_axis, p_axis, ("Q", "P"), imag_tol=1e-8,
                               check=check, metadata=meta)


# ---------------------------------------------------------------------------
# Yurke-Stoler cat under decoherence
# ---------------------------------------------------------------------------

def decohered_cat_wigner(beta: complex, bath: BathParams, z_axis, p_axis, printed: bool = False,
                         check: bool = True) -> WignerGrid:
    """Closed-form Wigner function of the Kerr cat after readout time ``tau``.

    ``W = (1/2) e^{-|b|^2 + Re(b^2)} {e^{2 Im(b)^2}(I_1 + I_2) + i e^{-2 Re(b)^2}(I_3 - I_4)}``
    with ``I_i = 2/(pi sqrt(4AB - C^2)) exp[(B D_i^2 + C D_i E_i + A E_i^2)/(4AB - C^2)]``.
    The trace is exactly one, so no renormalisation is applied.
    """
    b = complex(beta)
    Z = np.asarray(z_axis, dtype=float)
    P = np.asarray(p_axis, dtype=float)
    co = abc_coefficients(b, bath, Z[:, None], P[None, :], printed)
    det = co.det
    expo = (co.B * co.D ** 2 + co.C * co.D * co.E + co.A * co.E ** 2) / det
    pref = 0.5 * math.exp(-abs(b) ** 2 + (b * b).real)
    lw = np.array([2 * b.imag ** 2, 2 * b.imag ** 2, -2 * b.real ** 2, -2 * b.real ** 2])
    I = 2.0 / (math.pi * math.sqrt(det)) * np.exp(expo + lw[:, None, None])
    s = -1j if printed else 1j
    W = pref * (I[0] + I[1] + s * (I[2] - I[3]))
    imag = float(np.abs(W.imag).max())
    if imag > 1e-8:
        raise DegeneracyError(f"Wigner function has imaginary residual {imag:.3g}")
    meta = {"beta": b, "Gamma": bath.Gamma, "tau": bath.tau, "N_th": bath.N_th,
            "A": co.A, "B": co.B, "C": co.C, "near_degenerate": co.near_degenerate,
            "printed": printed}
    out = WignerGrid(Grid2D(Z, P, W.real.copy(), ("Z", "P_z")), 1.0, imag, meta)
    if check:
        out.check_domain()
    return out


def decohered_cat_oracle(beta: complex, bath: BathParams, z_axis, p_axis, printed: bool = False,
                         half_width: float | None = None, step: float | None = None) -> WignerGrid:
    """Brute-force ``W = (1/pi^2) int dv int dq P(q, v, tau) e^{-2i P v + 2i q Z}``.

    The propagated initial transform is sampled on a square ``(q, v)`` grid
    and summed with the trapezoid rule, which converges spectrally for these
    Gaussian-enveloped integrands.  Domain and step follow from the decay
    and oscillation scales of the integrand unless given.
    """
    b = complex(beta)
    Z = np.asarray(z_axis, dtype=float)
    P = np.asarray(p_axis, dtype=float)
    co = abc_coefficients(b, bath, 0.0, 0.0, printed)
    M = np.array([[co.A, -0.5 * co.C], [-0.5 * co.C, co.B]])
    lam = np.linalg.eigvalsh(M)
    if half_width is None:
        J = np.array([np.abs(co.D.real).max(), np.abs(co.E.real).max()])
        centre = float(np.abs(np.linalg.solve(M, J)).max()) / 2.0
        half_width = centre + 10.0 / math.sqrt(2.0 * lam[0]) + 2.0
    if step is None:
        kmax = (2.0 * max(np.abs(Z).max(), np.abs(P).max())
                + max(np.abs(co.D.imag).max(), np.abs(co.E.imag).max()))
        step = 2.0 * math.pi / (kmax + math.sqrt(160.0 * lam[1]) + 1.0)
    n = 2 * int(math.ceil(half_width / step)) + 1
    grid = np.linspace(-half_width, half_width, n)
    h = grid[1] - grid[0]
    kernel = TransformKernel(cat_initial_transform(b, printed), bath)
    Pt = kernel(grid[:, None], grid[None, :])
    Eq = np.exp(2j * Z[:, None] * grid[None, :])
    Ev = np.exp(-2j * grid[:, None] * P[None, :])
    W = (Eq @ Pt @ Ev) * h * h / math.pi ** 2
    meta = {"half_width": half_width, "step": h, "points": n}
    return WignerGrid(Grid2D(Z, P, W.real.copy(), ("Z", "P_z")), 1.0,
                      float(np.abs(W.imag).max()), meta)


def decohered_cat_axes(beta: complex, bath: BathParams, step: float = 0.1, sigmas: float = 9.0,
                       min_extent: float = 6.0):
    """Square axes wide enough for :func:`decohered_cat_wigner`.

    Each Gaussian term has variances ``A/2`` in ``Z`` and ``B/2`` in ``P_z``;
    the half-width is the cat separation plus ``sigmas`` of the wider one.
    """
    if bath.tau == 0.0 or bath.Gamma == 0.0:
        A = B = 1.0
    else:
        co = abc_coefficients(beta, bath, 0.0, 0.0)
        A, B = co.A, co.B
    half = max(min_extent, 2.0 * SQRT2 * abs(complex(beta)) + sigmas * math.sqrt(0.5 * max(A, B)))
    n = int(math.ceil(half / step))
    axis = step * np.arange(-n, n + 1)
    return axis, axis.copy()
