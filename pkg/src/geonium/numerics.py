"""Numerical kernel: orthogonal polynomials, quadrature, 4x4 algebra, grids.

Everything here is a pure function of its arguments.  Routines accept
numpy arrays and broadcast where it is cheap to do so, because phase-space
grids and frequency sweeps dominate the run time of the figure pipelines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import signal, special

from .errors import IntegrationError, SingularMatrixError, TruncationError

__all__ = [
    "HERMITE_MAX",
    "LAGUERRE_MAX",
    "QuadratureSpec",
    "QuadratureResult",
    "Grid2D",
    "Peak",
    "hermite",
    "hermite_functions",
    "assoc_laguerre",
    "coherent_fock_amplitudes",
    "poisson_tail",
    "coherent_wavefunction",
    "poisson_truncation",
    "integrate_line",
    "integrate_real_line",
    "solve4",
    "eigenvalues4",
    "grid_integral",
    "find_peaks",
]

HERMITE_MAX = 200
LAGUERRE_MAX = 400


# ---------------------------------------------------------------------------
# Orthogonal polynomials
# ---------------------------------------------------------------------------

def hermite(n: int, x, n_max: int = HERMITE_MAX):
    """Physicists' Hermite polynomial by the three-term recurrence.

    Parameters
    ----------
    n : int
        Degree, ``0 <= n <= n_max``.
    x : float or ndarray
        Evaluation points.
    n_max : int
        Largest admissible degree.

    Returns
    -------
    float or ndarray
        ``H_n(x)`` with the same shape as ``x``.
    """
    n = int(n)
    if n < 0:
        raise ValueError("Hermite degree must be non-negative")
    if n > n_max:
        raise TruncationError(f"Hermite degree {n} exceeds maximum {n_max}")
    x = np.asarray(x, dtype=float)
    h_prev = np.ones_like(x)
    if n == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    h = 2.0 * x
    for j in range(1, n):
        h_prev, h = h, 2.0 * x * h - 2.0 * j * h_prev
    return h if h.ndim else float(h)


def hermite_functions(n_max: int, x) -> np.ndarray:
    """Normalised Hermite functions ``psi_0 .. psi_{n_max}``.

    ``psi_n(x) = pi^(-1/4) (2^n n!)^(-1/2) H_n(x) exp(-x^2/2)`` computed by
    the normalised recurrence, which stays finite far beyond the range
    where ``H_n`` alone overflows.

    Returns
    -------
    ndarray
        Shape ``(n_max + 1,) + x.shape``.
    """
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    if n_max > 4 * HERMITE_MAX:
        raise TruncationError(f"Hermite function order {n_max} too large")
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max + 1,) + x.shape)
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * x * x)
    if n_max >= 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for n in range(1, n_max):
        out[n + 1] = np.sqrt(2.0 / (n + 1)) * x * out[n] - np.sqrt(n / (n + 1)) * out[n - 1]
    return out


def assoc_laguerre(n: int, k: int, x, n_max: int = LAGUERRE_MAX):
    """Associated Laguerre polynomial ``L_n^k(x)`` by upward recurrence."""
    n, k = int(n), int(k)
    if n < 0 or k < 0:
        raise ValueError("Laguerre indices must be non-negative")
    if n > n_max or k > n_max:
        raise TruncationError(f"Laguerre index ({n}, {k}) exceeds maximum {n_max}")
    x = np.asarray(x, dtype=float)
    l_prev = np.ones_like(x)
    if n == 0:
        return l_prev if l_prev.ndim else float(l_prev)
    ell = 1.0 + k - x
    for j in range(1, n):
        l_prev, ell = ell, ((2 * j + 1 + k - x) * ell - (j + k) * l_prev) / (j + 1)
    return ell if ell.ndim else float(ell)


# ---------------------------------------------------------------------------
# Poisson weights (log space)
# ---------------------------------------------------------------------------

def coherent_fock_amplitudes(zeta: complex, n_max: int) -> np.ndarray:
    """Fock amplitudes ``<n|zeta> = exp(-|zeta|^2/2) zeta^n / sqrt(n!)``.

    Magnitudes are assembled in log space so that ``n`` in the hundreds
    neither overflows nor underflows prematurely.
    """
    n = np.arange(n_max + 1)
    out = np.zeros(n_max + 1, dtype=complex)
    r = abs(zeta)
    if r == 0.0:
        out[0] = 1.0
        return out
    logmag = -0.5 * r * r + n * np.log(r) - 0.5 * special.gammaln(n + 1)
    return np.exp(logmag) * np.exp(1j * n * np.angle(zeta))


def coherent_wavefunction(zeta: complex, x):
    """``<x|zeta> = pi^{-1/4} exp(-x^2/2 + sqrt2 zeta x - zeta^2/2 - |zeta|^2/2)``."""
    z = complex(zeta)
    x = np.asarray(x, dtype=float)
    return np.pi ** -0.25 * np.exp(-0.5 * x * x + math.sqrt(2.0) * z * x - 0.5 * z * z
                                   - 0.5 * abs(z) ** 2)


def poisson_tail(mean: float, n: int) -> float:
    """Probability that a Poisson variable of the given mean exceeds ``n``."""
    if mean <= 0.0:
        return 0.0
    return float(special.gammainc(n + 1, mean))


def poisson_truncation(mean: float, tail: float = 1e-8, n_max: int = 4 * HERMITE_MAX) -> int:
    """Smallest ``N`` whose Poisson tail beyond ``N`` is below ``tail``."""
    n = 0
    while poisson_tail(mean, n) >= tail:
        n += 1
        if n > n_max:
            raise TruncationError(f"Poisson mean {mean} needs more than {n_max} levels")
    return n


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------

# 7-point Gauss / 15-point Kronrod pair (QUADPACK qk15 constants).
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_WK = np.concatenate([_WGK[:-1], _WGK[::-1]])
_WG_FULL = np.zeros(15)
_WG_FULL[1:7:2] = _WG[:3]
_WG_FULL[7] = _WG[3]
_WG_FULL[9:14:2] = _WG[2::-1]


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and truncation for line integrals.

    Attributes
    ----------
    abs_tol, rel_tol : float
        Target error ``max(abs_tol, rel_tol * |I|)``.
    max_subdivisions : int
        Cap on the number of Gauss-Kronrod panels.
    half_width : float
        Truncation half-width for integrals over the real line.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_subdivisions: int = 4000
    half_width: float = 8.0

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1 or not self.half_width > 0:
            raise ValueError("max_subdivisions and half_width must be positive")


@dataclass(frozen=True)
class QuadratureResult:
    value: complex | np.ndarray
    error: float
    intervals: int


def _gk_panels(f, lo: np.ndarray, hi: np.ndarray):
    c = 0.5 * (lo + hi)
    h = 0.5 * (hi - lo)
    x = c[:, None] + h[:, None] * _NODES[None, :]
    y = np.asarray(f(x.ravel()))
    y = y.reshape((len(lo), 15) + y.shape[1:])
    hw = h.reshape((-1,) + (1,) * (y.ndim - 2))
    kron = hw * np.einsum("k,nk...->n...", _WK, y)
    gauss = hw * np.einsum("k,nk...->n...", _WG_FULL, y)
    diff = np.abs(kron - gauss)
    err = diff.reshape(len(lo), -1).max(axis=1) if diff.ndim > 1 else diff
    return kron, err


def _adaptive(f, edges: np.ndarray, spec: QuadratureSpec) -> QuadratureResult:
    lo, hi = edges[:-1].copy(), edges[1:].copy()
    vals, errs = _gk_panels(f, lo, hi)
    while True:
        total = vals.sum(axis=0)
        err_tot = float(errs.sum())
        tol = max(spec.abs_tol, spec.rel_tol * float(np.max(np.abs(total))))
        if not np.all(np.isfinite(total)):
            raise IntegrationError("non-finite integrand", total, np.inf)
        if err_tot <= tol:
            return QuadratureResult(total if total.ndim else complex(total), err_tot, len(lo))
        share = tol / len(lo)
        pick = np.flatnonzero(errs > share)
        if pick.size == 0:
            pick = np.array([int(np.argmax(errs))])
        room = spec.max_subdivisions - len(lo)
        if room <= 0:
            raise IntegrationError(
                f"quadrature did not converge in {spec.max_subdivisions} panels "
                f"(error {err_tot:.3g} > {tol:.3g})", total, err_tot)
        if pick.size > room:
            pick = pick[np.argsort(errs[pick])[::-1][:room]]
        mid = 0.5 * (lo[pick] + hi[pick])
        if np.any((mid <= lo[pick]) | (mid >= hi[pick])):
            raise IntegrationError("panel width reached machine resolution", total, err_tot)
        new_lo = np.concatenate([lo[pick], mid])
        new_hi = np.concatenate([mid, hi[pick]])
        nv, ne = _gk_panels(f, new_lo, new_hi)
        keep = np.ones(len(lo), dtype=bool)
        keep[pick] = False
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        vals = np.concatenate([vals[keep], nv])
        errs = np.concatenate([errs[keep], ne])


def integrate_line(f: Callable, spec: QuadratureSpec = QuadratureSpec(), center: float = 0.0,
                   breakpoints: Sequence[float] = (), full_output: bool = False):
    """Integrate a vectorised real-to-complex function over a truncated line.

    The integral runs over ``[center - spec.half_width, center + spec.half_width]``
    with globally adaptive 7/15-point Gauss-Kronrod panels.

    Parameters
    ----------
    f : callable
        Maps a 1-D float array to an array of values (complex allowed).
    spec : QuadratureSpec
    center : float
        Midpoint of the truncation window.
    breakpoints : sequence of float
        Extra initial panel edges, e.g. at known features.
    full_output : bool
        Return a :class:`QuadratureResult` instead of the bare value.

    Raises
    ------
    IntegrationError
        When the tolerance is not met within ``spec.max_subdivisions`` panels.
    """
    a, b = center - spec.half_width, center + spec.half_width
    inner = [p for p in breakpoints if a < p < b]
    edges = np.unique(np.concatenate([[a, b], inner, np.linspace(a, b, 9)]))
    res = _adaptive(f, edges, spec)
    return res if full_output else res.value


def integrate_real_line(f: Callable, scale: float, breakpoints: Sequence[float] = (),
                        spec: QuadratureSpec = QuadratureSpec(), full_output: bool = False):
    """Integrate over the whole real line through ``x = s t / (1 - t^2)``.

    Suited to integrands with algebraic tails such as noise spectra.  The
    breakpoints (e.g. resolvent poles) become initial panel edges in ``t``.
    """
    if not scale > 0:
        raise ValueError("scale must be positive")

    def mapped(t):
        one = 1.0 - t * t
        x = scale * t / one
        jac = scale * (1.0 + t * t) / (one * one)
        y = np.asarray(f(x))
        return y * jac.reshape((-1,) + (1,) * (y.ndim - 1))

    bp = np.asarray(list(breakpoints), dtype=float)
    tb = np.where(bp == 0.0, 0.0, 2.0 * bp / (scale + np.sqrt(scale * scale + 4.0 * bp * bp)))
    edges = np.unique(np.concatenate([[-1.0, 1.0], np.linspace(-1, 1, 17), tb]))
    res = _adaptive(mapped, edges, spec)
    return res if full_output else res.value


# ---------------------------------------------------------------------------
# 4x4 complex linear algebra
# ---------------------------------------------------------------------------

def solve4(a, b, pivot_floor: float = 1e-300) -> np.ndarray:
    """Solve ``a x = b`` by Gaussian elimination with partial pivoting.

    Works on a single system or a stack of systems.

    Parameters
    ----------
    a : array_like, shape (..., n, n)
    b : array_like, shape (..., n) or (..., n, k)

    Raises
    ------
    SingularMatrixError
        If a pivot magnitude falls below ``pivot_floor``.
    """
    a = np.array(a, dtype=complex)
    b = np.array(b, dtype=complex)
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    n = a.shape[-1]
    vec = b.ndim == a.ndim - 1
    if vec:
        b = b[..., None]
    batch = a.shape[:-2]
    a = a.reshape((-1, n, n))
    b = np.broadcast_to(b, batch + b.shape[-2:]).reshape((-1, n, b.shape[-1])).copy()
    rows = np.arange(a.shape[0])
    for j in range(n):
        p = j + np.argmax(np.abs(a[:, j:, j]), axis=1)
        piv = np.abs(a[rows, p, j])
        if np.any(piv < pivot_floor):
            worst = float(piv.min())
            raise SingularMatrixError(f"singular matrix: pivot {worst:.3g} in column {j}", worst)
        swap = p != j
        if np.any(swap):
            idx = rows[swap]
            a[idx, j], a[idx, p[swap]] = a[idx, p[swap]].copy(), a[idx, j].copy()
            b[idx, j], b[idx, p[swap]] = b[idx, p[swap]].copy(), b[idx, j].copy()
        factor = a[:, j + 1:, j] / a[:, j, j][:, None]
        a[:, j + 1:, j:] -= factor[:, :, None] * a[:, j, None, j:]
        b[:, j + 1:] -= factor[:, :, None] * b[:, j, None, :]
    x = np.empty_like(b)
    for j in range(n - 1, -1, -1):
        acc = b[:, j] - np.einsum("bk,bkm->bm", a[:, j, j + 1:], x[:, j + 1:])
        x[:, j] = acc / a[:, j, j][:, None]
    x = x.reshape(batch + x.shape[-2:])
    return x[..., 0] if vec else x


def eigenvalues4(a) -> np.ndarray:
    """Eigenvalues of a small complex matrix, sorted by real then imaginary part.

    LAPACK (through numpy) is backward stable, which matters here: the drift
    matrices mix frequencies near 1e6 with damping rates near 1, so the
    characteristic polynomial route loses the real parts that decide stability.
    """
    a = np.asarray(a, dtype=complex)
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    lam = np.linalg.eigvals(a)
    return lam[np.lexsort((lam.imag, lam.real))]


# ---------------------------------------------------------------------------
# Grids and curves
# ---------------------------------------------------------------------------

def _check_axis(axis: np.ndarray, name: str, rtol: float = 1e-9):
    if axis.ndim != 1 or axis.size < 2:
        raise ValueError(f"{name} must be a 1-D array with at least two samples")
    step = np.diff(axis)
    if np.any(step <= 0):
        raise ValueError(f"{name} must be strictly increasing")
    if np.ptp(step) > rtol * max(abs(step.mean()), 1e-300) * axis.size:
        raise ValueError(f"{name} must be uniformly spaced")


@dataclass(frozen=True)
class Grid2D:
    """Values sampled on a uniform rectangular grid (rows follow ``q_axis``)."""

    q_axis: np.ndarray
    p_axis: np.ndarray
    values: np.ndarray
    labels: tuple[str, str] = ("q", "p")

    def __post_init__(self):
        q = np.asarray(self.q_axis, dtype=float)
        p = np.asarray(self.p_axis, dtype=float)
        v = np.asarray(self.values)
        _check_axis(q, "q_axis")
        _check_axis(p, "p_axis")
        if v.shape != (q.size, p.size):
            raise ValueError(f"values shape {v.shape} does not match axes ({q.size}, {p.size})")
        object.__setattr__(self, "q_axis", q)
        object.__setattr__(self, "p_axis", p)
        object.__setattr__(self, "values", v)

    @property
    def step(self) -> tuple[float, float]:
        return float(self.q_axis[1] - self.q_axis[0]), float(self.p_axis[1] - self.p_axis[0])

    def boundary_max(self) -> float:
        """Largest magnitude on the outer frame of the grid."""
        v = np.abs(self.values)
        return float(max(v[0].max(), v[-1].max(), v[:, 0].max(), v[:, -1].max()))

    def argmax(self) -> tuple[float, float]:
        i, j = np.unravel_index(np.argmax(self.values.real), self.values.shape)
        return float(self.q_axis[i]), float(self.p_axis[j])


def grid_integral(g: Grid2D) -> complex:
    """Two-dimensional trapezoid estimate of the integral of ``g.values``."""
    inner = np.trapezoid(g.values, g.p_axis, axis=1)
    return complex(np.trapezoid(inner, g.q_axis))


@dataclass(frozen=True)
class Peak:
    omega: float
    height: float


def find_peaks(omega, values, rel_prominence: float = 1e-3) -> list[Peak]:
    """Local maxima of a sampled curve, refined by parabolic interpolation.

    Parameters
    ----------
    omega, values : array_like
        Increasing abscissae and curve samples.
    rel_prominence : float
        Minimum prominence as a fraction of the curve's range.
    """
    omega = np.asarray(omega, dtype=float)
    values = np.asarray(values, dtype=float)
    if omega.size == 0:
        raise ValueError("empty curve")
    if omega.shape != values.shape or np.any(np.diff(omega) <= 0):
        raise ValueError("curve must be sampled on strictly increasing abscissae")
    span = float(np.ptp(values))
    if omega.size < 3 or span == 0.0:
        return []
    idx, _ = signal.find_peaks(values, prominence=rel_prominence * span)
    peaks = []
    for i in idx:
        # parabola in coordinates local to the sample, to avoid cancellation
        u0, u2 = omega[i - 1] - omega[i], omega[i + 1] - omega[i]
        y0, y1, y2 = values[i - 1:i + 2]
        d0, d2 = (y0 - y1) / u0, (y2 - y1) / u2
        a = (d2 - d0) / (u2 - u0)
        b = d0 - a * u0
        if a < 0:
            uv = -b / (2 * a)
            peaks.append(Peak(float(omega[i] + uv), float(y1 + b * uv + a * uv * uv)))
        else:
            peaks.append(Peak(float(omega[i]), float(y1)))
    return peaks
