"""Schroedinger-cat states of the cyclotron and axial modes.

Two mechanisms are covered.  At the central resonance the cyclotron mode
becomes entangled with axial Fock states, ``sum_n w_n |zeta_n>_c |n>_z``
with ``zeta_n = i eps kappa^2 n t``, and a momentum measurement on the axial
mode leaves a cyclotron superposition of coherent states.  At the sideband
resonance the cyclotron mode can be eliminated, leaving a Kerr interaction
that turns an axial coherent state into a two-component (Yurke-Stoler) cat.

Wigner functions use ``W = (1/pi) int dy <q+y|rho|q-y> e^{-2ipy}``, which for
``|a><b|`` gives a Gaussian with complex centre; the sum over component
pairs is evaluated as one matrix product over the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import DegeneracyError, DomainError, TruncationError
from .model_core import PHASE_CONVENTIONS
from .numerics import (Grid2D, coherent_fock_amplitudes, grid_integral, hermite_functions,
                       poisson_tail, poisson_truncation)

__all__ = [
    "EntangledExpansion",
    "FockSuperposition",
    "FockState",
    "WignerGrid",
    "KerrParams",
    "default_truncation",
    "central_resonance_expansion",
    "expansion_from_product",
    "momentum_wavefunctions",
    "condition_on_momentum",
    "most_probable_momentum",
    "momentum_marginal",
    "coherent_overlap",
    "wigner_from_density",
    "wigner_of_superposition",
    "auto_axes",
    "effective_kerr_constant",
    "kerr_evolve",
    "yurke_stoler_cat",
    "wigner_ys_cat",
]

TAIL = 1e-8


def default_truncation(beta: complex, tail: float = TAIL) -> int:
    """Twice the smallest ``N`` with Poisson tail below ``tail`` (room for cross terms)."""
    return max(2 * poisson_truncation(abs(beta) ** 2, tail), 1)


def coherent_overlap(a, b):
    """``<a|b>`` for coherent states (broadcasts)."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    return np.exp(-0.5 * np.abs(a) ** 2 - 0.5 * np.abs(b) ** 2 + np.conj(a) * b)


# ---------------------------------------------------------------------------
# State containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EntangledExpansion:
    """``sum_n w_n |zeta_n>_c |n>_z`` truncated at ``n_max``.

    Attributes
    ----------
    beta : complex
        Initial axial coherent amplitude.
    weights : ndarray
        ``w_n = e^{-|beta|^2/2} beta^n / sqrt(n!)``.
    zetas : ndarray
        Cyclotron amplitudes ``zeta_n = n * theta_t``.
    theta_t : complex
        ``i eps kappa^2 t``, the amplitude step per axial quantum.
    displacement : complex or None
        Common cyclotron displacement ``alpha - i eps (1 - kappa^2/2) t``
        that the expansion leaves out; ``None`` when only the product
        ``eps kappa^2 t`` is known.
    """

    beta: complex
    weights: np.ndarray
    zetas: np.ndarray
    theta_t: complex
    n_max: int
    displacement: complex | None = None
    epsilon: complex | None = None
    kappa_sq: float | None = None
    t: float | None = None

    @property
    def tail(self) -> float:
        return poisson_tail(abs(self.beta) ** 2, self.n_max)

    @property
    def macroscopicity(self) -> float:
        """``|eps| kappa^2 t``; values above 1 separate neighbouring components."""
        return abs(self.theta_t)


def _expansion(beta, theta_t, n_max, tail, **meta) -> EntangledExpansion:
    beta = complex(beta)
    if n_max is None:
        n_max = default_truncation(beta, tail)
    n_max = int(n_max)
    if poisson_tail(abs(beta) ** 2, n_max) >= tail:
        need = poisson_truncation(abs(beta) ** 2, tail)
        raise TruncationError(f"n_max={n_max} leaves Poisson tail >= {tail}; use n_max >= {need}")
    w = coherent_fock_amplitudes(beta, n_max)
    zetas = complex(theta_t) * np.arange(n_max + 1)
    return EntangledExpansion(beta, w, zetas, complex(theta_t), n_max, **meta)


def central_resonance_expansion(beta: complex, epsilon: complex, kappa_sq: float, t: float,
                                n_max: int | None = None, alpha: complex = 0j,
                                tail: float = TAIL) -> EntangledExpansion:
    """Entangled state after time ``t`` at the central resonance ``Omega = omega_c``."""
    eps = complex(epsilon)
    disp = complex(alpha) - 1j * eps * (1.0 - 0.5 * kappa_sq) * t
    return _expansion(beta, 1j * eps * kappa_sq * t, n_max, tail, displacement=disp,
                      epsilon=eps, kappa_sq=float(kappa_sq), t=float(t))


def expansion_from_product(beta: complex, eps_kappa2_t: complex, n_max: int | None = None,
                           tail: float = TAIL) -> EntangledExpansion:
    """Expansion specified through the product ``eps kappa^2 t`` only."""
    return _expansion(beta, 1j * complex(eps_kappa2_t), n_max, tail)


@dataclass(frozen=True)
class FockSuperposition:
    """Superposition ``N sum_k c_k |zeta_k>`` of coherent states.

    ``coefficients`` already include the normalisation factor
    ``normalization`` once :meth:`normalized` has been applied.
    """

    coefficients: np.ndarray
    amplitudes: np.ndarray
    normalization: float = 1.0

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coefficients, dtype=complex))
        z = np.atleast_1d(np.asarray(self.amplitudes, dtype=complex))
        if c.shape != z.shape or c.ndim != 1:
            raise ValueError("coefficients and amplitudes must be 1-D of equal length")
        object.__setattr__(self, "coefficients", c)
        object.__setattr__(self, "amplitudes", z)

    def overlaps(self) -> np.ndarray:
        z = self.amplitudes
        return coherent_overlap(z[:, None], z[None, :])

    def norm2(self) -> float:
        c = self.coefficients
        return float((np.conj(c) @ self.overlaps() @ c).real)

    def normalized(self) -> "FockSuperposition":
        n2 = self.norm2()
        if not n2 > 0:
            raise DegeneracyError("superposition has zero norm")
        k = 1.0 / math.sqrt(n2)
        return FockSuperposition(self.coefficients * k, self.amplitudes, self.normalization * k)

    def to_fock(self, n_max: int) -> np.ndarray:
        """Number-basis amplitudes ``<n|psi>`` for ``n <= n_max``."""
        return sum(c * coherent_fock_amplitudes(z, n_max)
                   for c, z in zip(self.coefficients, self.amplitudes))

    def density_coefficients(self) -> np.ndarray:
        """``R`` with ``rho = sum_mn R_mn |zeta_m><zeta_n|``."""
        c = self.coefficients
        return np.outer(c, np.conj(c))


@dataclass(frozen=True)
class FockState:
    """State given by number-basis amplitudes."""

    coefficients: np.ndarray

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.coefficients) ** 2)))

    def overlap(self, other) -> complex:
        """``<self|other>``; ``other`` may be a FockState or a FockSuperposition."""
        a = self.coefficients
        b = other.to_fock(a.size - 1) if isinstance(other, FockSuperposition) else other.coefficients
        n = min(a.size, b.size)
        return complex(np.vdot(a[:n], b[:n]))

    def fidelity(self, other) -> float:
        """``|<self|other>|`` for normalised pure states."""
        return abs(self.overlap(other))


# ---------------------------------------------------------------------------
# Conditional measurement
# ---------------------------------------------------------------------------

def momentum_wavefunctions(n_max: int, p, convention: str = "standard") -> np.ndarray:
    """``<P|n>`` for ``n <= n_max``: ``(-i)^n psi_n(P)`` (standard) or ``psi_n(P)`` (plain)."""
    if convention not in PHASE_CONVENTIONS:
        raise ValueError(f"convention must be one of {PHASE_CONVENTIONS}")
    psi = hermite_functions(n_max, p).astype(complex)
    if convention == "standard":
        phase = (-1j) ** np.arange(n_max + 1)
        psi *= phase.reshape((-1,) + (1,) * (psi.ndim - 1))
    return psi


def condition_on_momentum(exp: EntangledExpansion, p_z: float,
                          convention: str = "standard") -> FockSuperposition:
    """Cyclotron state after the axial momentum is found equal to ``p_z``.

    Raises
    ------
    DegeneracyError
        When the outcome has zero probability.
    """
    amp = exp.weights * momentum_wavefunctions(exp.n_max, float(p_z), convention)
    if not np.any(np.abs(amp) > 0) or np.sum(np.abs(amp) ** 2) < 1e-300:
        raise DegeneracyError(f"momentum outcome {p_z} has zero probability")
    return FockSuperposition(amp, exp.zetas).normalized()


def momentum_marginal(exp: EntangledExpansion, p) -> np.ndarray:
    """Axial momentum distribution ``sum_n |w_n|^2 psi_n(P)^2``."""
    psi = hermite_functions(exp.n_max, p)
    w2 = np.abs(exp.weights) ** 2
    return np.tensordot(w2, psi * psi, axes=(0, 0))


def most_probable_momentum(exp: EntangledExpansion, points: int = 4001) -> float:
    """Non-negative maximiser of the momentum marginal.

    The marginal is even in ``P``; among equally probable values the one
    with the smallest ``|P|`` is returned.
    """
    half = math.sqrt(2.0 * exp.n_max + 1.0) + 4.0
    grid = np.linspace(0.0, half, points)
    vals = momentum_marginal(exp, grid)
    i = int(np.argmax(vals))
    h = grid[1] - grid[0]
    best_p, best_v = float(grid[i]), float(vals[i])
    lo, hi = max(0.0, best_p - h), best_p + h
    res = optimize.minimize_scalar(lambda p: -float(momentum_marginal(exp, p)), bounds=(lo, hi),
                                   method="bounded", options={"xatol": 1e-12})
    if res.success and -res.fun > best_v * (1.0 + 1e-14):
        best_p = float(res.x)
    return best_p


# ---------------------------------------------------------------------------
# Wigner functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WignerGrid:
    """Real Wigner function on a grid with normalisation diagnostics.

    Attributes
    ----------
    grid : Grid2D
    trace : float
        Analytic trace of the (unnormalised) operator that was divided out.
    imag_residual : float
        Largest imaginary part discarded when realising the values.
    metadata : dict
    """

    grid: Grid2D
    trace: float = 1.0
    imag_residual: float = 0.0
    metadata: dict = field(default_factory=dict)

    @property
    def values(self) -> np.ndarray:
        return self.grid.values

    @property
    def q_axis(self) -> np.ndarray:
        return self.grid.q_axis

    @property
    def p_axis(self) -> np.ndarray:
        return self.grid.p_axis

    def integral(self) -> float:
        return grid_integral(self.grid).real

    def min(self) -> float:
        return float(self.values.min())

    def max(self) -> float:
        return float(self.values.max())

    def value_at(self, q: float, p: float) -> float:
        i = int(np.argmin(np.abs(self.q_axis - q)))
        j = int(np.argmin(np.abs(self.p_axis - p)))
        return float(self.values[i, j])

    def check_domain(self, rel: float = 1e-6) -> None:
        """Raise :class:`DomainError` if the function has not decayed at the border."""
        peak = float(np.abs(self.values).max())
        edge = self.grid.boundary_max()
        if edge > rel * peak:
            raise DomainError(f"grid too small: boundary |W| = {edge:.3g} exceeds {rel:g} x max {peak:.3g}")


def _pair_factors(a: np.ndarray, b: np.ndarray, q: np.ndarray, p: np.ndarray):
    """Bounded factors of ``W[|a><b|](q, p) = K A(q) B(p)``."""
    s = a + np.conj(b)
    d = a - np.conj(b)
    r2 = math.sqrt(2.0)
    A = np.exp(-(q[None, :] - s[:, None] / r2) ** 2 - 0.5 * (s.imag ** 2)[:, None])
    B = np.exp(-(p[None, :] + 1j * d[:, None] / r2) ** 2 - 0.5 * (d.real ** 2)[:, None])
    K = np.exp(1j * (a * np.conj(b)).imag) / math.pi
    return K, A, B


def wigner_from_density(R: np.ndarray, zetas: np.ndarray, q_axis, p_axis, labels=("Q", "P"),
                        imag_tol: float = 1e-10, check: bool = True, metadata: dict | None = None,
                        drop: float = 1e-18) -> WignerGrid:
    """Wigner function of ``rho = sum_mn R_mn |zeta_m><zeta_n|`` normalised by its trace.

    Pairs with ``|R_mn| <= drop * max|R|`` are skipped.

    Raises
    ------
    DegeneracyError
        If the trace vanishes or the imaginary residual exceeds ``imag_tol``.
    DomainError
        If ``check`` and the grid cuts off the function.
    """
    q = np.asarray(q_axis, dtype=float)
    p = np.asarray(p_axis, dtype=float)
    R = np.asarray(R, dtype=complex)
    z = np.asarray(zetas, dtype=complex)
    trace = complex(np.sum(R * coherent_overlap(z[None, :], z[:, None])))
    if not abs(trace) > 0:
        raise DegeneracyError("density operator has zero trace")
    m_idx, n_idx = np.nonzero(np.abs(R) > drop * np.abs(R).max())
    K, A, B = _pair_factors(z[m_idx], z[n_idx], q, p)
    coef = R[m_idx, n_idx] * K / trace
    W = (coef[:, None] * A).T @ B
    imag = float(np.abs(W.imag).max())
    if imag > imag_tol:
        raise DegeneracyError(f"Wigner function has imaginary residual {imag:.3g}")
    out = WignerGrid(Grid2D(q, p, W.real.copy(), tuple(labels)), float(trace.real), imag,
                     dict(metadata or {}))
    if check:
        out.check_domain()
    return out


def wigner_of_superposition(state: FockSuperposition, q_axis, p_axis, labels=("Q", "P"),
                            check: bool = True, drop: float = 1e-18) -> WignerGrid:
    """Wigner function of a coherent-state superposition, normalised with overlaps."""
    return wigner_from_density(state.density_coefficients(), state.amplitudes, q_axis, p_axis,
                               labels, check=check, drop=drop,
                               metadata={"normalization": state.normalization})


def auto_axes(state: FockSuperposition, step: float = 0.1, margin: float = 6.0,
              min_extent: float = 8.0, weight_floor: float = 1e-14):
    """Grid axes that contain every component carrying non-negligible weight.

    The box covers ``[-min_extent, min_extent]^2`` and each centre
    ``sqrt(2) (Re zeta, Im zeta)`` with relative weight above ``weight_floor``
    plus ``margin``; samples are ``step`` apart and include the origin.
    """
    w = np.abs(state.coefficients) ** 2
    keep = w > weight_floor * w.max()
    cq = math.sqrt(2.0) * state.amplitudes[keep].real
    cp = math.sqrt(2.0) * state.amplitudes[keep].imag
    axes = []
    for c in (cq, cp):
        lo = min(-min_extent, float(c.min()) - margin)
        hi = max(min_extent, float(c.max()) + margin)
        i_lo, i_hi = math.floor(lo / step), math.ceil(hi / step)
        axes.append(step * np.arange(i_lo, i_hi + 1))
    return axes[0], axes[1]


# ---------------------------------------------------------------------------
# Kerr cat
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KerrParams:
    """Effective Kerr constant ``G = |eps|^2 kappa^4 / (4 delta)``."""

    G: float
    delta: float
    eps_abs: float
    kappa_sq: float
    adiabatic_ratio: float | None = None


def effective_kerr_constant(eps_abs: float, kappa_sq: float, delta: float,
                            omega_z: float | None = None) -> KerrParams:
    """Kerr constant after adiabatic elimination of the cyclotron mode.

    ``adiabatic_ratio = |delta| / omega_z`` is recorded when ``omega_z`` is
    given; elimination requires it to be small.
    """
    if delta == 0:
        raise ZeroDivisionError("Kerr constant undefined for delta = 0")
    G = eps_abs ** 2 * kappa_sq ** 2 / (4.0 * delta)
    ratio = abs(delta) / omega_z if omega_z else None
    return KerrParams(G, float(delta), float(eps_abs), float(kappa_sq), ratio)


def kerr_evolve(beta: complex, G: float, t: float, n_max: int | None = None,
                tail: float = TAIL) -> FockState:
    """``exp[i G (n^2 - n) t] |beta>`` in the number basis."""
    if n_max is None:
        n_max = default_truncation(beta, tail)
    if poisson_tail(abs(beta) ** 2, n_max) >= tail:
        raise TruncationError(f"n_max={n_max} too small for beta={beta}")
    n = np.arange(n_max + 1)
    # reduce the phase modulo 2 pi before exponentiating
    phase = np.mod(G * t * (n * n - n).astype(float), 2.0 * math.pi)
    return FockState(coherent_fock_amplitudes(complex(beta), n_max) * np.exp(1j * phase))


def yurke_stoler_cat(beta: complex, printed: bool = False) -> FockSuperposition:
    """Two-component cat reached by the Kerr evolution at ``t = pi / (2G)``.

    The default is ``(e^{i pi/4}|-i beta> + e^{-i pi/4}|i beta>)/sqrt 2``,
    which is what ``exp[i G (n^2 - n) t]`` produces and what the closed-form
    Wigner function :func:`wigner_ys_cat` describes.  ``printed=True``
    returns the variant with the two phases exchanged, which equals the
    default cat of ``-beta``.
    """
    b = complex(beta)
    ph = complex(math.cos(math.pi / 4), math.sin(math.pi / 4)) / math.sqrt(2.0)
    coeffs = [np.conj(ph), ph] if printed else [ph, np.conj(ph)]
    return FockSuperposition(np.array(coeffs), np.array([-1j * b, 1j * b]))


def wigner_ys_cat(beta: complex, z_axis, p_axis, check: bool = True) -> WignerGrid:
    """Closed-form Wigner function of :func:`yurke_stoler_cat` on a ``(Z, P_z)`` grid."""
    b = complex(beta)
    Z = np.asarray(z_axis, dtype=float)[:, None]
    P = np.asarray(p_axis, dtype=float)[None, :]
    r = 2.0 * math.sqrt(2.0)
    a2 = abs(b) ** 2
    env = np.exp(-a2 - Z * Z - P * P) / math.pi
    W = env * (math.exp(-a2) * np.cosh(r * (P * b.real - Z * b.imag))
               + math.exp(a2) * np.sin(r * (P * b.imag + Z * b.real)))
    out = WignerGrid(Grid2D(np.asarray(z_axis, float), np.asarray(p_axis, float), W, ("Z", "P_z")),
                     metadata={"beta": b})
    if check:
        out.check_domain()
    return out
