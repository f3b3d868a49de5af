"""Configuration types, physical parameter derivation and the config file format.

Units are Gaussian-CGS.  The dynamics modules only need rates in 1/s, so a
:class:`ModelConfig` may be built from frequencies directly; the trap
hardware (:class:`TrapParameters`) is optional.

Config file format
------------------
UTF-8 text, one ``key = value`` per line, ``#`` starts a comment.  Complex
numbers are written ``re+imj``.  Recognised keys:

=============================  ==========================================
``trap.e, trap.m0, trap.c``    charge (esu), mass (g), light speed (cm/s)
``trap.V0, trap.d, trap.B``    potential (statvolt), size (cm), field (G)
``trap.hbar``                  Planck constant (erg s), default CGS value
``frequencies.omega_z``        axial frequency (rad/s)
``frequencies.omega_c``        cyclotron frequency (rad/s)
``frequencies.omega_m``        magnetron frequency, checked if given
``drive.epsilon``              complex coupling (rad/s)
``drive.alpha``                complex field amplitude (needs trap, k)
``drive.chi``                  quadratic coupling (rad/s), derived if absent
``drive.kappa_sq``             Lamb-Dicke-like parameter
``drive.k``                    wavenumber (1/cm)
``drive.phi``                  standing-wave phase (rad)
``drive.Omega``                drive frequency (rad/s)
``drive.detuning``             Delta = omega_c - Omega (rad/s)
``dissipation.gamma_c``        cyclotron damping (1/s)
``dissipation.Gamma``          axial damping gamma_z/m0 (1/s)
``dissipation.N_th``           thermal occupation
``dissipation.f``              axial drive (1/s)
``dissipation.T``              temperature (K)
``cat.beta``                   axial coherent amplitude
``cat.eps_kappa2_t``           product epsilon kappa^2 t
``cat.p_z``                    measured scaled momentum (auto if absent)
``bath.Gamma, bath.tau``       scaled damping and readout time
``bath.N_th``                  readout bath occupation
``numerics.*``                 see :class:`NumericsConfig`
=============================  ==========================================
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, fields, replace
from typing import Any

import numpy as np

from .constants import HBAR
from .errors import ConfigError, HierarchyError

__all__ = [
    "TrapParameters",
    "ModeFrequencies",
    "DriveConfig",
    "DissipationConfig",
    "NumericsConfig",
    "CatConfig",
    "BathParams",
    "ModelConfig",
    "derive_frequencies",
    "derive_drive_couplings",
    "classify_regime",
    "parse_config",
    "load_config",
    "format_config",
    "format_complex",
    "parse_complex",
]

IDENTITY_RTOL = 1e-12


def _positive(value: float, key: str) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise ConfigError(f"must be a positive finite number, got {value!r}", key)
    return value


def _non_negative(value: float, key: str) -> float:
    value = float(value)
    if not math.isfinite(value) or value < 0.0:
        raise ConfigError(f"must be a non-negative finite number, got {value!r}", key)
    return value


def _finite(value: float, key: str) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"must be finite, got {value!r}", key)
    return value


def _finite_complex(value: complex, key: str) -> complex:
    value = complex(value)
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        raise ConfigError(f"must be finite, got {value!r}", key)
    return value


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrapParameters:
    """Penning-trap hardware in Gaussian-CGS units."""

    e: float
    m0: float
    c: float
    V0: float
    d: float
    B: float

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, _positive(getattr(self, f.name), f"trap.{f.name}"))


@dataclass(frozen=True)
class ModeFrequencies:
    """Axial, cyclotron and magnetron angular frequencies (rad/s).

    ``omega_m`` is always ``omega_z**2 / (2 omega_c)``; passing a different
    value is an error.
    """

    omega_z: float
    omega_c: float
    omega_m: float | None = None

    def __post_init__(self):
        wz = _positive(self.omega_z, "frequencies.omega_z")
        wc = _positive(self.omega_c, "frequencies.omega_c")
        if wz > wc:
            raise HierarchyError(
                f"hierarchy violation: omega_z={wz!r} exceeds omega_c={wc!r}", "frequencies.omega_z")
        wm = wz * wz / (2.0 * wc)
        if self.omega_m is not None and not math.isclose(float(self.omega_m), wm, rel_tol=1e-12):
            raise ConfigError(f"omega_m={self.omega_m!r} differs from omega_z^2/(2 omega_c)={wm!r}",
                              "frequencies.omega_m")
        object.__setattr__(self, "omega_z", wz)
        object.__setattr__(self, "omega_c", wc)
        object.__setattr__(self, "omega_m", wm)


@dataclass(frozen=True)
class DriveConfig:
    """Radiation-field couplings.

    Attributes
    ----------
    epsilon : complex
        Dipole-like coupling (rad/s); its argument is ``varphi``.
    chi : float or None
        Quadratic coupling (rad/s).  ``None`` means "derive from epsilon".
    kappa_sq : float
        ``hbar k^2 / (2 m0 omega_z)``.
    alpha, k, standing_phase, drive_frequency
        Raw field amplitude, wavenumber (1/cm), phase phi (rad) and Omega
        (rad/s); optional bookkeeping.
    """

    epsilon: complex = 0j
    chi: float | None = None
    kappa_sq: float = 0.0
    alpha: complex | None = None
    k: float | None = None
    standing_phase: float = 0.0
    drive_frequency: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "epsilon", _finite_complex(self.epsilon, "drive.epsilon"))
        object.__setattr__(self, "kappa_sq", _non_negative(self.kappa_sq, "drive.kappa_sq"))
        object.__setattr__(self, "standing_phase", _finite(self.standing_phase, "drive.phi"))
        if self.chi is not None:
            object.__setattr__(self, "chi", _non_negative(self.chi, "drive.chi"))
        if self.alpha is not None:
            object.__setattr__(self, "alpha", _finite_complex(self.alpha, "drive.alpha"))
        if self.k is not None:
            object.__setattr__(self, "k", _non_negative(self.k, "drive.k"))
            if self.k > 0 and self.kappa_sq == 0.0:
                raise ConfigError("kappa_sq must be positive when k > 0", "drive.kappa_sq")
        if self.drive_frequency is not None:
            object.__setattr__(self, "drive_frequency", _non_negative(self.drive_frequency, "drive.Omega"))

    @property
    def varphi(self) -> float:
        """Phase of ``epsilon`` (rad)."""
        return float(np.angle(self.epsilon))

    @property
    def eps_abs(self) -> float:
        return abs(self.epsilon)

    @classmethod
    def from_polar(cls, eps_abs: float, varphi: float, **kw) -> "DriveConfig":
        return cls(epsilon=complex(eps_abs * math.cos(varphi), eps_abs * math.sin(varphi)), **kw)


@dataclass(frozen=True)
class DissipationConfig:
    """Damping and noise: rates in 1/s, occupation dimensionless."""

    gamma_c: float = 0.0
    Gamma: float = 0.0
    N_th: float = 0.0
    f: float = 0.0
    temperature: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "gamma_c", _non_negative(self.gamma_c, "dissipation.gamma_c"))
        object.__setattr__(self, "Gamma", _non_negative(self.Gamma, "dissipation.Gamma"))
        object.__setattr__(self, "N_th", _non_negative(self.N_th, "dissipation.N_th"))
        object.__setattr__(self, "f", _finite(self.f, "dissipation.f"))
        if self.temperature is not None:
            object.__setattr__(self, "temperature", _non_negative(self.temperature, "dissipation.T"))


@dataclass(frozen=True)
class BathParams:
    """Readout bath in units scaled by the axial frequency."""

    Gamma: float
    tau: float
    N_th: float

    def __post_init__(self):
        object.__setattr__(self, "Gamma", _non_negative(self.Gamma, "bath.Gamma"))
        object.__setattr__(self, "tau", _non_negative(self.tau, "bath.tau"))
        object.__setattr__(self, "N_th", _non_negative(self.N_th, "bath.N_th"))

    @classmethod
    def from_raw(cls, Gamma_per_s: float, tau_s: float, N_th: float, omega_z: float) -> "BathParams":
        """Scale a damping rate (1/s) and a duration (s) by ``omega_z``."""
        omega_z = _positive(omega_z, "frequencies.omega_z")
        return cls(Gamma_per_s / omega_z, tau_s * omega_z, N_th)


@dataclass(frozen=True)
class CatConfig:
    """Axial coherent amplitude and cat-generation parameters."""

    beta: complex = 1.0 + 0j
    eps_kappa2_t: complex = -2.4j
    p_z: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "beta", _finite_complex(self.beta, "cat.beta"))
        object.__setattr__(self, "eps_kappa2_t", _finite_complex(self.eps_kappa2_t, "cat.eps_kappa2_t"))
        if self.p_z is not None:
            object.__setattr__(self, "p_z", _finite(self.p_z, "cat.p_z"))


PROVENANCES = ("paper", "rederived")
PHASE_CONVENTIONS = ("standard", "plain")


@dataclass(frozen=True)
class NumericsConfig:
    """Grid sizes, truncations and tolerances.

    Attributes
    ----------
    n_max : int or None
        Fock truncation; ``None`` selects it from the Poisson tail.
    grid_points, grid_extent : int, float or None
        Wigner grid; ``None`` lets each pipeline choose.
    spectrum_points : int
        Samples of a spectrum curve.
    abs_tol, rel_tol, max_subdivisions
        Quadrature controls.
    provenance : {"paper", "rederived"}
        Drift-matrix variant.
    d44_factor : float
        Multiplier on the printed axial diffusion entry (2 gives 2 Gamma N_th).
    phase_convention : {"standard", "plain"}
        Momentum wavefunction phase, ``(-i)^n`` or none.
    delta_min, delta_max, delta_points
        Detuning scan for the variance figure.
    """

    n_max: int | None = None
    grid_points: int | None = None
    grid_extent: float | None = None
    spectrum_points: int = 2001
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_subdivisions: int = 4000
    provenance: str = "paper"
    d44_factor: float = 1.0
    phase_convention: str = "standard"
    delta_min: float = -10.0
    delta_max: float = 10.0
    delta_points: int = 401

    def __post_init__(self):
        if self.n_max is not None and int(self.n_max) < 0:
            raise ConfigError("must be non-negative", "numerics.n_max")
        if self.grid_points is not None and int(self.grid_points) < 3:
            raise ConfigError("must be at least 3", "numerics.grid_points")
        if self.grid_extent is not None:
            _positive(self.grid_extent, "numerics.grid_extent")
        if int(self.spectrum_points) < 3:
            raise ConfigError("must be at least 3", "numerics.spectrum_points")
        _positive(self.abs_tol, "numerics.abs_tol")
        _positive(self.rel_tol, "numerics.rel_tol")
        if int(self.max_subdivisions) < 1:
            raise ConfigError("must be positive", "numerics.max_subdivisions")
        if self.provenance not in PROVENANCES:
            raise ConfigError(f"must be one of {PROVENANCES}", "numerics.provenance")
        if self.phase_convention not in PHASE_CONVENTIONS:
            raise ConfigError(f"must be one of {PHASE_CONVENTIONS}", "numerics.phase_convention")
        _positive(self.d44_factor, "numerics.d44_factor")
        if not self.delta_max > self.delta_min:
            raise ConfigError("delta_max must exceed delta_min", "numerics.delta_max")
        if int(self.delta_points) < 2:
            raise ConfigError("must be at least 2", "numerics.delta_points")


@dataclass(frozen=True)
class ModelConfig:
    """Everything a pipeline needs.  Immutable; use :func:`dataclasses.replace`."""

    frequencies: ModeFrequencies
    drive: DriveConfig = field(default_factory=DriveConfig)
    dissipation: DissipationConfig = field(default_factory=DissipationConfig)
    detuning: float = 0.0
    numerics: NumericsConfig = field(default_factory=NumericsConfig)
    trap: TrapParameters | None = None
    cat: CatConfig = field(default_factory=CatConfig)
    bath: BathParams | None = None
    hbar: float = HBAR

    def __post_init__(self):
        object.__setattr__(self, "detuning", _finite(self.detuning, "drive.detuning"))
        _positive(self.hbar, "trap.hbar")
        self.validate()

    @property
    def chi(self) -> float:
        """Quadratic coupling, from the config or from ``|eps|^2 / (2 omega_c)``."""
        if self.drive.chi is not None:
            return self.drive.chi
        return self.drive.eps_abs ** 2 / (2.0 * self.frequencies.omega_c)

    def validate(self) -> None:
        """Check cross-field invariants; raise :class:`ConfigError` on the first failure."""
        fr, dr = self.frequencies, self.drive
        if self.trap is not None:
            derived = derive_frequencies(self.trap)
            for name in ("omega_z", "omega_c"):
                a, b = getattr(fr, name), getattr(derived, name)
                if not math.isclose(a, b, rel_tol=1e-9):
                    raise ConfigError(f"{name}={a!r} inconsistent with trap-derived {b!r}",
                                      f"frequencies.{name}")
        if dr.drive_frequency is not None:
            expect = fr.omega_c - dr.drive_frequency
            if not math.isclose(self.detuning, expect, rel_tol=1e-9, abs_tol=1e-9 * fr.omega_c):
                raise ConfigError(f"detuning {self.detuning!r} differs from omega_c - Omega = {expect!r}",
                                  "drive.detuning")
        if dr.chi is not None:
            lhs, rhs = 2.0 * fr.omega_c * dr.chi, dr.eps_abs ** 2
            if abs(lhs - rhs) > IDENTITY_RTOL * max(abs(rhs), abs(lhs), 1e-300) and (lhs or rhs):
                raise ConfigError(f"coupling identity 2 omega_c chi = |eps|^2 violated ({lhs!r} vs {rhs!r})",
                                  "drive.chi")


# ---------------------------------------------------------------------------
# Derivations
# ---------------------------------------------------------------------------

def derive_frequencies(trap: TrapParameters) -> ModeFrequencies:
    """Mode frequencies of the ideal Penning trap (CGS, ``c`` in omega_z as well).

    Examples
    --------
    >>> derive_frequencies(TrapParameters(1, 1, 1, 1, 1, 100)).omega_m
    0.005
    """
    omega_z = math.sqrt(trap.e * trap.V0 / (trap.m0 * trap.c * trap.d ** 2))
    omega_c = trap.e * trap.B / (trap.m0 * trap.c)
    return ModeFrequencies(omega_z, omega_c)


def derive_drive_couplings(alpha: complex, trap: TrapParameters, frequencies: ModeFrequencies,
                           k: float, Omega: float | None = None, phi: float = 0.0,
                           hbar: float = HBAR) -> DriveConfig:
    """Couplings of the standing wave to the electron.

    ``epsilon = sqrt(2 e^3 B / (hbar m0^2 c^3)) alpha``,
    ``chi = e^2 |alpha|^2 / (hbar m0 c^2)`` and
    ``kappa^2 = hbar k^2 / (2 m0 omega_z)``.
    """
    _positive(hbar, "trap.hbar")
    k = _non_negative(k, "drive.k")
    alpha = complex(alpha)
    e, m0, c, B = trap.e, trap.m0, trap.c, trap.B
    eps = math.sqrt(2.0 * e ** 3 * B / (hbar * m0 ** 2 * c ** 3)) * alpha
    chi = e * e * abs(alpha) ** 2 / (hbar * m0 * c * c)
    kappa_sq = hbar * k * k / (2.0 * m0 * frequencies.omega_z)
    return DriveConfig(epsilon=eps, chi=chi, kappa_sq=kappa_sq, alpha=alpha, k=k,
                       standing_phase=phi, drive_frequency=Omega)


def classify_regime(phi: float) -> tuple[float, float]:
    """Weights ``(cos phi, -sin phi)`` of the quadratic and linear channels."""
    return math.cos(phi), -math.sin(phi)


# ---------------------------------------------------------------------------
# Config file I/O
# ---------------------------------------------------------------------------

def format_complex(z: complex) -> str:
    z = complex(z)
    im = repr(z.imag)
    return f"{z.real!r}{'' if im.startswith('-') else '+'}{im}j"


def parse_complex(text: str) -> complex:
    return complex(text.replace(" ", "").replace("i", "j"))


# key -> (section, field, kind)
_KEYS: dict[str, tuple[str, str, str]] = {
    "trap.e": ("trap", "e", "float"),
    "trap.m0": ("trap", "m0", "float"),
    "trap.c": ("trap", "c", "float"),
    "trap.V0": ("trap", "V0", "float"),
    "trap.d": ("trap", "d", "float"),
    "trap.B": ("trap", "B", "float"),
    "trap.hbar": ("", "hbar", "float"),
    "frequencies.omega_z": ("frequencies", "omega_z", "float"),
    "frequencies.omega_c": ("frequencies", "omega_c", "float"),
    "frequencies.omega_m": ("frequencies", "omega_m", "float"),
    "drive.epsilon": ("drive", "epsilon", "complex"),
    "drive.alpha": ("drive", "alpha", "complex"),
    "drive.chi": ("drive", "chi", "float"),
    "drive.kappa_sq": ("drive", "kappa_sq", "float"),
    "drive.k": ("drive", "k", "float"),
    "drive.phi": ("drive", "standing_phase", "float"),
    "drive.Omega": ("drive", "drive_frequency", "float"),
    "drive.detuning": ("", "detuning", "float"),
    "dissipation.gamma_c": ("dissipation", "gamma_c", "float"),
    "dissipation.Gamma": ("dissipation", "Gamma", "float"),
    "dissipation.N_th": ("dissipation", "N_th", "float"),
    "dissipation.f": ("dissipation", "f", "float"),
    "dissipation.T": ("dissipation", "temperature", "float"),
    "cat.beta": ("cat", "beta", "complex"),
    "cat.eps_kappa2_t": ("cat", "eps_kappa2_t", "complex"),
    "cat.p_z": ("cat", "p_z", "float"),
    "bath.Gamma": ("bath", "Gamma", "float"),
    "bath.tau": ("bath", "tau", "float"),
    "bath.N_th": ("bath", "N_th", "float"),
}
for _f in fields(NumericsConfig):
    _kind = {"provenance": "str", "phase_convention": "str"}.get(_f.name)
    if _kind is None:
        _kind = "int" if _f.name in ("n_max", "grid_points", "spectrum_points", "max_subdivisions",
                                     "delta_points") else "float"
    _KEYS[f"numerics.{_f.name}"] = ("numerics", _f.name, _kind)

CONFIG_KEYS = tuple(_KEYS)


def _convert(raw: str, kind: str, key: str) -> Any:
    try:
        if kind == "float":
            return float(raw)
        if kind == "int":
            val = float(raw)
            if val != int(val):
                raise ValueError
            return int(val)
        if kind == "complex":
            return parse_complex(raw)
        return raw
    except ValueError:
        raise ConfigError(f"cannot parse {raw!r} as {kind}", key) from None


def parse_config(text: str, base: ModelConfig | None = None) -> ModelConfig:
    """Build a :class:`ModelConfig` from config-file text.

    Values in ``text`` override those of ``base``.  Frequencies fall back to
    the trap-derived ones and ``epsilon`` to the value derived from
    ``drive.alpha`` when ``drive.k`` and a trap are given.
    """
    values: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'", f"line {lineno}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"unknown key {key!r}", key)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", key)
        values[key] = _convert(raw, _KEYS[key][2], key)
    return _assemble(values, base)


def _section(values: dict, name: str) -> dict:
    return {_KEYS[k][1]: v for k, v in values.items() if _KEYS[k][0] == name}


def _assemble(values: dict, base: ModelConfig | None) -> ModelConfig:
    def merged(name, obj):
        upd = _section(values, name)
        if obj is None:
            return upd or None
        return {**{f.name: getattr(obj, f.name) for f in fields(obj)}, **upd}

    top = _section(values, "")
    hbar = top.get("hbar", base.hbar if base else HBAR)

    trap_kw = merged("trap", base.trap if base else None)
    trap = TrapParameters(**trap_kw) if trap_kw else None
    if trap_kw and len(trap_kw) != 6:
        missing = sorted(set(f.name for f in fields(TrapParameters)) - set(trap_kw))
        raise ConfigError(f"incomplete trap, missing {missing}", f"trap.{missing[0]}")

    given = _section(values, "frequencies")
    if base is not None:
        freq_kw = {"omega_z": base.frequencies.omega_z, "omega_c": base.frequencies.omega_c}
    else:
        freq_kw = {}
    if trap is not None and not ({"omega_z", "omega_c"} & set(given)):
        derived = derive_frequencies(trap)
        freq_kw = {"omega_z": derived.omega_z, "omega_c": derived.omega_c}
    freq_kw.update(given)
    if "omega_z" not in freq_kw or "omega_c" not in freq_kw:
        key = "frequencies.omega_z" if "omega_z" not in freq_kw else "frequencies.omega_c"
        raise ConfigError("required (directly or through trap.*)", key)
    frequencies = ModeFrequencies(**freq_kw)

    drive_kw = merged("drive", base.drive if base else None) or {}
    if "epsilon" not in _section(values, "drive") and drive_kw.get("alpha") is not None \
            and trap is not None and drive_kw.get("k") is not None:
        derived = derive_drive_couplings(drive_kw["alpha"], trap, frequencies, drive_kw["k"],
                                         drive_kw.get("drive_frequency"),
                                         drive_kw.get("standing_phase", 0.0), hbar)
        for name in ("epsilon", "chi", "kappa_sq"):
            if name not in _section(values, "drive"):
                drive_kw[name] = getattr(derived, name)
    drive = DriveConfig(**drive_kw)

    diss = DissipationConfig(**(merged("dissipation", base.dissipation if base else None) or {}))
    numerics = NumericsConfig(**(merged("numerics", base.numerics if base else None) or {}))
    cat = CatConfig(**(merged("cat", base.cat if base else None) or {}))
    bath_kw = merged("bath", base.bath if base else None)
    bath = None
    if bath_kw:
        missing = sorted({"Gamma", "tau", "N_th"} - set(bath_kw))
        if missing:
            raise ConfigError(f"incomplete bath, missing {missing}", f"bath.{missing[0]}")
        bath = BathParams(**bath_kw)
    detuning = top.get("detuning", base.detuning if base else 0.0)
    return ModelConfig(frequencies=frequencies, drive=drive, dissipation=diss, detuning=detuning,
                       numerics=numerics, trap=trap, cat=cat, bath=bath, hbar=hbar)


def load_config(path: str | os.PathLike, base: ModelConfig | None = None) -> ModelConfig:
    """Read a config file; see the module docstring for the key list."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", "--config") from None
    return parse_config(text, base)


def _format_value(value: Any, kind: str) -> str:
    if kind == "complex":
        return format_complex(value)
    if kind == "float":
        return repr(float(value))
    return str(value)


def format_config(cfg: ModelConfig) -> str:
    """Serialise ``cfg`` so that :func:`parse_config` reproduces it exactly."""
    objs = {"trap": cfg.trap, "frequencies": cfg.frequencies, "drive": cfg.drive,
            "dissipation": cfg.dissipation, "numerics": cfg.numerics, "cat": cfg.cat,
            "bath": cfg.bath, "": cfg}
    lines = []
    for key, (section, name, kind) in _KEYS.items():
        obj = objs[section]
        if obj is None or key == "frequencies.omega_m":
            continue
        value = getattr(obj, name)
        if value is None:
            continue
        lines.append(f"{key} = {_format_value(value, kind)}")
    return "\n".join(lines) + "\n"


def with_numerics(cfg: ModelConfig, **changes) -> ModelConfig:
    """Copy of ``cfg`` with some numerics fields replaced."""
    return replace(cfg, numerics=replace(cfg.numerics, **changes))
