"""Linear-coupling regime (standing-wave phase pi/2).

A cyclotron quadrature ``X_varphi`` exerts the constant mean force
``F = -sqrt(2) hbar k |eps| X`` on the axial oscillator.  This module gives
the resulting mean trajectory, the driven momentum spectrum, the thermal
observability ratio, and quadrature marginals used for tomography.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import HBAR, K_B
from .errors import ConfigError, TruncationError
from .numerics import (HERMITE_MAX, coherent_fock_amplitudes, coherent_wavefunction,
                       hermite_functions, poisson_truncation)

__all__ = [
    "AxialMeanState",
    "QuadratureSetting",
    "QuadratureMarginal",
    "axial_force",
    "axial_mean_trajectory",
    "linear_momentum_spectrum",
    "observability_ratio",
    "quadrature_marginal",
]


@dataclass(frozen=True)
class AxialMeanState:
    """Mean axial position (cm) and momentum (g cm/s)."""

    z: float
    p_z: float

    def __post_init__(self):
        if not (math.isfinite(self.z) and math.isfinite(self.p_z)):
            raise ValueError("axial state must be finite")


@dataclass(frozen=True)
class QuadratureSetting:
    """Quadrature angle and its mean value."""

    varphi: float
    mean: float

    def __post_init__(self):
        if not (math.isfinite(self.varphi) and math.isfinite(self.mean)):
            raise ValueError("quadrature setting must be finite")


def axial_force(quad: QuadratureSetting, eps_abs: float, k: float, hbar: float = HBAR) -> float:
    """Mean force ``-sqrt(2) hbar k |eps| X`` (dyn)."""
    return -math.sqrt(2.0) * hbar * k * eps_abs * quad.mean


def axial_mean_trajectory(initial: AxialMeanState, quad: QuadratureSetting, eps_abs: float,
                          k: float, omega_z: float, m0: float, t, hbar: float = HBAR):
    """Undamped axial motion about the shifted equilibrium ``z_s = F / (m0 omega_z^2)``.

    Parameters
    ----------
    initial : AxialMeanState
    quad : QuadratureSetting
        Cyclotron quadrature treated as a c-number.
    eps_abs, k, omega_z, m0 : float
        Coupling (rad/s), wavenumber (1/cm), axial frequency (rad/s), mass (g).
    t : float or ndarray
        Time(s) in seconds.

    Returns
    -------
    AxialMeanState or tuple of ndarray
        A state for scalar ``t``, otherwise ``(z, p_z)`` arrays.
    """
    if not (omega_z > 0 and m0 > 0):
        raise ConfigError("omega_z and m0 must be positive", "frequencies.omega_z")
    z_s = axial_force(quad, eps_abs, k, hbar) / (m0 * omega_z ** 2)
    wt = omega_z * np.asarray(t, dtype=float)
    c, s = np.cos(wt), np.sin(wt)
    dz = initial.z - z_s
    z = dz * c + initial.p_z / (m0 * omega_z) * s + z_s
    p = -m0 * omega_z * dz * s + initial.p_z * c
    if np.ndim(t) == 0:
        return AxialMeanState(float(z), float(p))
    return z, p


def linear_momentum_spectrum(omega, S_X, gamma_z: float, kBT: float, force_scale: float,
                             omega_z: float, m0: float):
    """Axial momentum spectrum driven by a quadrature spectrum and thermal noise.

    ``[2 (hbar k |eps|)^2 S_X + 2 gamma_z k_B T] / |omega^2 - omega_z^2 - i omega gamma_z / m0|^2``
    with ``force_scale = hbar k |eps|``.
    """
    omega = np.asarray(omega, dtype=float)
    S_X = np.asarray(S_X, dtype=float)
    if np.any(S_X < 0):
        raise ValueError("quadrature spectrum must be non-negative")
    den = np.abs(omega ** 2 - omega_z ** 2 - 1j * omega * gamma_z / m0) ** 2
    return (2.0 * force_scale ** 2 * S_X + 2.0 * gamma_z * kBT) / den


def observability_ratio(gamma_z: float, T: float, force_scale: float, k_B: float = K_B) -> float:
    """``gamma_z k_B T / (hbar k |eps|)^2``; small values favour quantum readout."""
    if not force_scale > 0:
        raise ConfigError("undefined ratio: hbar k |eps| must be positive", "drive.epsilon")
    return gamma_z * k_B * T / force_scale ** 2


@dataclass(frozen=True)
class QuadratureMarginal:
    x: np.ndarray
    density: np.ndarray
    varphi: float
    n_max: int  # -1 when evaluated from wavefunctions

    def moments(self) -> tuple[float, float]:
        """Mean and variance by trapezoid integration."""
        mass = np.trapezoid(self.density, self.x)
        mean = np.trapezoid(self.x * self.density, self.x) / mass
        var = np.trapezoid((self.x - mean) ** 2 * self.density, self.x) / mass
        return float(mean), float(var)


def quadrature_marginal(state, varphi: float, x, n_max: int | None = None,
                        tail: float = 1e-8, method: str = "auto") -> QuadratureMarginal:
    """Probability density of ``X_varphi`` for a coherent-state superposition.

    ``X_varphi`` measured on ``|zeta>`` is distributed like ``X_0`` on
    ``|zeta e^{i varphi}>``.  With ``method="fock"`` each rotated component is
    expanded in Fock states and projected onto the Hermite functions; with
    ``"wavefunction"`` the coherent-state wavefunctions are summed directly.
    ``"auto"`` uses the Fock route unless the truncation would exceed the
    Hermite limit.

    Parameters
    ----------
    state : FockSuperposition
        Normalised superposition (see :mod:`geonium.cat_states`).
    varphi : float
    x : array_like
        Quadrature samples.
    n_max : int, optional
        Fock truncation; chosen from the largest ``|zeta|^2`` when omitted.

    Raises
    ------
    TruncationError
        If some component carries Fock weight above ``tail`` beyond ``n_max``.
    """
    if method not in ("auto", "fock", "wavefunction"):
        raise ValueError("method must be 'auto', 'fock' or 'wavefunction'")
    x = np.asarray(x, dtype=float)
    zetas = np.asarray(state.amplitudes, dtype=complex)
    coeffs = np.asarray(state.normalized().coefficients, dtype=complex)
    rot = complex(math.cos(varphi), math.sin(varphi))
    try:
        need = max(poisson_truncation(abs(z) ** 2, tail) for z in zetas)
    except TruncationError:
        if method == "fock":
            raise
        need = None
    if method == "auto":
        ok = need is not None and max(need, n_max or 0) <= HERMITE_MAX
        method = "fock" if ok else "wavefunction"
    if method == "wavefunction":
        amp = sum(c * coherent_wavefunction(z * rot, x) for c, z in zip(coeffs, zetas))
        return QuadratureMarginal(x, np.abs(amp) ** 2, varphi, -1)
    if n_max is None:
        n_max = need
    elif n_max < need:
        raise TruncationError(f"n_max={n_max} leaves Fock tail above {tail}; need {need}")
    fock = sum(c * coherent_fock_amplitudes(z * rot, n_max) for c, z in zip(coeffs, zetas))
    amp = fock @ hermite_functions(n_max, x)
    return QuadratureMarginal(x, np.abs(amp) ** 2, varphi, n_max)
