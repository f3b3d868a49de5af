"""Command-line front end.

Usage::

    geonium [run] COMMAND [--config PATH] [--out DIR] [flags]
    geonium validate [--config PATH]

Commands: ``fig1`` ... ``fig6``, ``steady-state``, ``spectrum``,
``variance-scan``, ``wigner``, ``decohere`` and ``marginal``.  Each run
writes its data files plus one JSON manifest into ``--out``.

Config files hold ``key = value`` lines with ``#`` comments; complex values
are written ``re+imj``.  Values override the command's preset.  Keys::

    trap.e trap.m0 trap.c trap.V0 trap.d trap.B trap.hbar
    frequencies.omega_z frequencies.omega_c frequencies.omega_m
    drive.epsilon drive.alpha drive.chi drive.kappa_sq drive.k drive.phi
    drive.Omega drive.detuning
    dissipation.gamma_c dissipation.Gamma dissipation.N_th dissipation.f dissipation.T
    cat.beta cat.eps_kappa2_t cat.p_z
    bath.Gamma bath.tau bath.N_th        (scaled by omega_z)
    numerics.<field>                     (see NumericsConfig)

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure,
4 instability (override with ``--allow-unstable``).  ``GEONIUM_THREADS``
caps the worker count of detuning scans.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from dataclasses import replace
from pathlib import Path
from typing import Callable

import numpy as np

from . import presets
from .cat_states import (FockSuperposition, auto_axes, condition_on_momentum,
                         expansion_from_product, most_probable_momentum, wigner_of_superposition,
                         wigner_ys_cat)
from .decoherence import (decohered_cat_axes, decohered_cat_wigner,
                          decohered_conditional_wigner)
from .errors import ConfigError, GeoniumError, InstabilityError, NumericalError
from .linear_drive import quadrature_marginal
from .model_core import (CONFIG_KEYS, ModelConfig, classify_regime, format_config, parse_config,
                         with_numerics)
from .output import RunManifest, write_curve, write_grid
from .steady_state_dynamics import (axial_momentum_spectrum, build_drift, peak_separation,
                                    solve_steady_state, spectrum_window, stability, uncoupled,
                                    variance_scan)

__all__ = ["main", "run", "validate", "COMMANDS", "EXIT_OK", "EXIT_CONFIG", "EXIT_NUMERICAL",
           "EXIT_UNSTABLE"]

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_UNSTABLE = 0, 2, 3, 4


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

class _Emitter:
    """Collects data files (CSV) or inline data (JSON) for one manifest."""

    def __init__(self, out: Path, fmt: str):
        self.out = out
        self.fmt = fmt
        self.files: list[str] = []
        self.data: dict = {}

    def curve(self, name: str, header: str, *cols) -> None:
        if self.fmt == "csv":
            write_curve(self.out / f"{name}.csv", header, *cols)
            self.files.append(f"{name}.csv")
        else:
            self.data[name] = {h: np.asarray(c, dtype=float)
                               for h, c in zip(header.split(","), cols)}

    def grid(self, name: str, wg, header: str = "q,p,w") -> None:
        if self.fmt == "csv":
            write_grid(self.out / f"{name}.csv", wg.grid, header)
            self.files.append(f"{name}.csv")
        else:
            q, p, w = header.split(",")
            self.data[name] = {q: wg.q_axis, p: wg.p_axis, w: wg.values}

    def finish(self, manifest: RunManifest, base: str) -> Path:
        name = f"{base}.json"
        manifest.outputs = self.files + [name]
        return manifest.write(self.out / name, self.data if self.fmt == "json" else None)


def _threads() -> int:
    raw = os.environ.get("GEONIUM_THREADS")
    if raw is None or raw == "":
        return min(4, os.cpu_count() or 1)
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"GEONIUM_THREADS={raw!r} is not an integer", "GEONIUM_THREADS") from None
    if n < 1:
        raise ConfigError("GEONIUM_THREADS must be at least 1", "GEONIUM_THREADS")
    return n


def _given_keys(text: str) -> set[str]:
    keys = set()
    for line in text.splitlines():
        line = line.split("#", 1)[0]
        if "=" in line:
            keys.add(line.split("=", 1)[0].strip())
    return keys


# config key (or flag) that overrides each assumed value
_ASSUMED_KEYS = {
    "omega_z": ("frequencies.omega_z",),
    "omega_c": ("frequencies.omega_c",),
    "delta_min": ("numerics.delta_min",),
    "delta_max": ("numerics.delta_max",),
    "delta_points": ("numerics.delta_points", "--grid"),
    "spectrum_points": ("numerics.spectrum_points", "--grid"),
    "Gamma": ("bath.Gamma",),
    "tau": ("bath.tau",),
    "p_z": ("cat.p_z",),
    "grid": ("numerics.grid_points", "numerics.grid_extent", "--grid", "--extent"),
    "grid_step": ("numerics.grid_points", "numerics.grid_extent", "--grid", "--extent"),
    "grid_points": ("numerics.grid_points", "--grid"),
    "grid_extent": ("numerics.grid_extent", "--extent"),
    "phase_convention": ("numerics.phase_convention", "--convention-phase"),
}


def _assumed(command: str, given: set[str]) -> dict:
    out = {}
    for k, v in presets.ASSUMED.get(command, {}).items():
        if not given.intersection(_ASSUMED_KEYS.get(k, ())):
            out[k] = v
    return out


def _square_axes(cfg: ModelConfig, points: int = 161, extent: float = 8.0):
    n = cfg.numerics.grid_points or points
    x = cfg.numerics.grid_extent or extent
    axis = np.linspace(-x, x, int(n))
    return axis, axis.copy()


def _explicit_grid(cfg: ModelConfig) -> bool:
    return cfg.numerics.grid_points is not None or cfg.numerics.grid_extent is not None


def _wigner_diag(wg) -> dict:
    return {"min_w": wg.min(), "max_w": wg.max(), "integral": wg.integral(), "trace": wg.trace,
            "imag_residual": wg.imag_residual, "grid_shape": list(wg.values.shape),
            "q_range": [float(wg.q_axis[0]), float(wg.q_axis[-1])],
            "p_range": [float(wg.p_axis[0]), float(wg.p_axis[-1])]}


# ---------------------------------------------------------------------------
# Pipelines
# ---------------------------------------------------------------------------

def _spectrum_diag(curve) -> dict:
    d = curve.diagnostics
    return {"stable": d["stable"], "eigenvalues": d["eigenvalues"],
            "max_imag_ratio": d["max_imag_ratio"], "Z_bar": d["Z_bar"], "alpha_c": d["alpha_c"],
            "n_roots": d["n_roots"], "provenance": d["provenance"]}


def _fig1(cfg: ModelConfig, opts, em: _Emitter) -> dict:
    prov, allow = cfg.numerics.provenance, opts.allow_unstable
    if opts.no_coupling:
        cfg = uncoupled(cfg)
    res = peak_separation(cfg, None, prov, allow)
    em.curve("fig1_spectrum", "omega,value", res["omega"], res["coupled"].values)
    em.curve("fig1_uncoupled", "omega,value", res["omega"], res["uncoupled"].values)
    diag = {"coupled": _spectrum_diag(res["coupled"]),
            "uncoupled": _spectrum_diag(res["uncoupled"]),
            "peaks_coupled": [(p.omega, p.height) for p in res["peaks_coupled"]],
            "peaks_uncoupled": [(p.omega, p.height) for p in res["peaks_uncoupled"]],
            "separation": res["separation"], "coupling": not opts.no_coupling}
    if not opts.no_coupling:
        seps = []
        for i, f in enumerate(presets.F_SWEEP):
            c = replace(cfg, dissipation=replace(cfg.dissipation, f=f))
            r = peak_separation(c, None, prov, allow)
            em.curve(f"fig1_sweep_{i}", "omega,value", r["omega"], r["coupled"].values)
            seps.append(r["separation"])
        diag["sweep_f"] = list(presets.F_SWEEP)
        diag["sweep_separation"] = seps
        diag["sweep_monotone"] = bool(np.all(np.diff(seps) > 0))
    return diag


def _scan(cfg: ModelConfig, opts, em: _Emitter, name: str) -> dict:
    n = cfg.numerics
    deltas = np.linspace(n.delta_min, n.delta_max, n.delta_points)
    scan = variance_scan(cfg, deltas, opts.varphi, opts.allow_unstable, n.provenance,
                         workers=_threads())
    em.curve(name, "delta,var_amp,var_orth", scan.delta, scan.var_amp, scan.var_orth)
    ok = scan.stable
    diag = {"varphi": opts.varphi, "status_counts": {s: int(np.sum(scan.status == s))
                                                     for s in ("ok", "unstable", "no_root")}}
    if np.any(ok):
        va, vo = scan.var_amp[ok], scan.var_orth[ok]
        i = int(np.argmin(va))
        j = int(np.argmin(vo))
        diag.update({
            "min_var_amp": float(va[i]), "min_var_amp_delta": float(scan.delta[ok][i]),
            "var_orth_at_min_amp": float(vo[i]),
            "min_var_orth": float(vo[j]), "min_var_orth_delta": float(scan.delta[ok][j]),
            "min_product": float(np.min(va * vo)),
            "squeezing": bool(np.any((va < 0.5) & (vo > 0.5)) or np.any((vo < 0.5) & (va > 0.5))),
        })
    return diag


def _fig2(cfg, opts, em):
    return _scan(cfg, opts, em, "fig2_variance")


def _variance_scan(cfg, opts, em):
    return _scan(cfg, opts, em, "variance_scan")


def _conditional(cfg: ModelConfig):
    exp = expansion_from_product(cfg.cat.beta, cfg.cat.eps_kappa2_t, cfg.numerics.n_max)
    p_z = cfg.cat.p_z if cfg.cat.p_z is not None else most_probable_momentum(exp)
    return exp, p_z


def _conditional_wigner(cfg: ModelConfig, em: _Emitter, name: str) -> dict:
    exp, p_z = _conditional(cfg)
    state = condition_on_momentum(exp, p_z, cfg.numerics.phase_convention)
    q, p = _square_axes(cfg) if _explicit_grid(cfg) else auto_axes(state, presets.WIGNER_STEP)
    wg = wigner_of_superposition(state, q, p)
    em.grid(name, wg)
    return {"p_z": p_z, "n_max": exp.n_max, "tail": exp.tail, "beta": exp.beta,
            "eps_kappa2_t": cfg.cat.eps_kappa2_t, "normalization": state.normalization,
            "phase_convention": cfg.numerics.phase_convention, **_wigner_diag(wg)}


def _require_standard(cfg: ModelConfig) -> None:
    if cfg.numerics.phase_convention != "standard":
        raise ConfigError("the decoherence integrals assume the standard (-i)^n momentum phase",
                          "numerics.phase_convention")


def _decohered_conditional(cfg: ModelConfig, em: _Emitter, name: str) -> dict:
    _require_standard(cfg)
    if cfg.bath is None:
        raise ConfigError("a readout bath is required", "bath.Gamma")
    exp, p_z = _conditional(cfg)
    if _explicit_grid(cfg):
        q, p = _square_axes(cfg)
    else:
        q, p = auto_axes(FockSuperposition(exp.weights, exp.zetas), presets.WIGNER_STEP)
    wg = decohered_conditional_wigner(exp, p_z, cfg.bath, q, p)
    em.grid(name, wg)
    b = cfg.bath
    return {"p_z": p_z, "n_max": exp.n_max, "beta": exp.beta, "eps_kappa2_t": cfg.cat.eps_kappa2_t,
            "bath": {"Gamma": b.Gamma, "tau": b.tau, "N_th": b.N_th, "Gamma_tau": b.Gamma * b.tau},
            "phase_convention": "standard", **_wigner_diag(wg)}


def _ys(cfg: ModelConfig, em: _Emitter, name: str) -> dict:
    beta = cfg.cat.beta
    q, p = _square_axes(cfg)
    wg = wigner_ys_cat(beta, q, p)
    em.grid(name, wg)
    expected = math.exp(-2.0 * abs(beta) ** 2) / math.pi
    # the central fringes outgrow the hills, so search beyond half the hill offset
    cut = abs(beta) / math.sqrt(2.0)
    upper, lower = p > cut, p < -cut
    vals = wg.values
    hills = []
    for mask in (upper, lower):
        sub = vals[:, mask]
        i, j = np.unravel_index(int(np.argmax(sub)), sub.shape)
        hills.append((float(q[i]), float(p[mask][j])))
    return {"beta": beta, "w_origin": wg.value_at(0.0, 0.0), "w_origin_expected": expected,
            "hill_centres": hills, **_wigner_diag(wg)}


def _decohered_ys(cfg: ModelConfig, em: _Emitter, name: str) -> dict:
    if cfg.bath is None:
        raise ConfigError("a readout bath is required", "bath.Gamma")
    beta = cfg.cat.beta
    if _explicit_grid(cfg):
        q, p = _square_axes(cfg)
    else:
        q, p = decohered_cat_axes(beta, cfg.bath, presets.WIGNER_STEP, sigmas=6.0)
    wg = decohered_cat_wigner(beta, cfg.bath, q, p)
    em.grid(name, wg)
    pure = wigner_ys_cat(beta, q, p, check=False)
    m = wg.metadata
    return {"beta": beta, "bath": {"Gamma": cfg.bath.Gamma, "tau": cfg.bath.tau,
                                   "N_th": cfg.bath.N_th},
            "A": m["A"], "B": m["B"], "C": m["C"], "near_degenerate": m["near_degenerate"],
            "pure_min_w": pure.min(), **_wigner_diag(wg)}


def _fig3(cfg, opts, em):
    return _conditional_wigner(cfg, em, "fig3_wigner")


def _fig4(cfg, opts, em):
    return _decohered_conditional(cfg, em, "fig4_wigner")


def _fig5(cfg, opts, em):
    return _ys(cfg, em, "fig5_wigner")


def _fig6(cfg, opts, em):
    return _decohered_ys(cfg, em, "fig6_wigner")


def _wigner(cfg, opts, em):
    if opts.state == "ys":
        return _ys(cfg, em, "wigner")
    return _conditional_wigner(cfg, em, "wigner")


def _decohere(cfg, opts, em):
    if opts.state == "ys":
        return _decohered_ys(cfg, em, "decohere")
    return _decohered_conditional(cfg, em, "decohere")


def _steady_state(cfg, opts, em):
    ss = solve_steady_state(cfg)
    st = stability(build_drift(cfg, ss, cfg.numerics.provenance))
    if not st.stable and not opts.allow_unstable:
        raise InstabilityError("linearised dynamics unstable", st.eigenvalues)
    em.data["steady_state"] = {"alpha_c": ss.alpha_c, "Z_bar": ss.Z_bar, "P_bar": ss.P_bar}
    return {"alpha_c": ss.alpha_c, "Z_bar": ss.Z_bar, "P_bar": ss.P_bar, "n_roots": ss.n_roots,
            "residuals": list(ss.residuals), "stable": st.stable, "eigenvalues": st.eigenvalues,
            "provenance": cfg.numerics.provenance}


def _spectrum(cfg, opts, em):
    if opts.no_coupling:
        cfg = uncoupled(cfg)
    prov = cfg.numerics.provenance
    omega = spectrum_window(cfg, None, prov)
    curve = axial_momentum_spectrum(cfg, omega, opts.allow_unstable, prov)
    em.curve("spectrum", "omega,value", curve.omega, curve.values)
    return _spectrum_diag(curve)


def _marginal(cfg, opts, em):
    exp, p_z = _conditional(cfg)
    state = condition_on_momentum(exp, p_z, cfg.numerics.phase_convention)
    reach = math.sqrt(2.0) * float(np.abs(state.amplitudes).max()) + 8.0
    x = np.linspace(-reach, reach, cfg.numerics.grid_points or 4001)
    marg = quadrature_marginal(state, opts.varphi, x)
    em.curve("marginal", "x,density", marg.x, marg.density)
    mean, var = marg.moments()
    return {"p_z": p_z, "varphi": opts.varphi, "n_max": exp.n_max, "marginal_n_max": marg.n_max,
            "mass": float(np.trapezoid(marg.density, marg.x)), "mean": mean, "variance": var}


_PRESETS: dict[str, Callable[[], ModelConfig]] = {
    "fig1": presets.fig1_config, "fig2": presets.fig2_config, "fig3": presets.fig3_config,
    "fig4": presets.fig4_config, "fig5": presets.fig5_config, "fig6": presets.fig6_config,
    "steady-state": presets.fig1_config, "spectrum": presets.fig1_config,
    "variance-scan": presets.fig2_config, "wigner": presets.fig3_config,
    "decohere": presets.fig4_config, "marginal": presets.fig3_config,
}

_PIPELINES = {
    "fig1": _fig1, "fig2": _fig2, "fig3": _fig3, "fig4": _fig4, "fig5": _fig5, "fig6": _fig6,
    "steady-state": _steady_state, "spectrum": _spectrum, "variance-scan": _variance_scan,
    "wigner": _wigner, "decohere": _decohere, "marginal": _marginal,
}

_MANIFEST_BASE = {
    "fig1": "fig1_spectrum", "fig2": "fig2_variance", "fig3": "fig3_wigner",
    "fig4": "fig4_wigner", "fig5": "fig5_wigner", "fig6": "fig6_wigner",
    "steady-state": "steady_state", "spectrum": "spectrum", "variance-scan": "variance_scan",
    "wigner": "wigner", "decohere": "decohere", "marginal": "marginal",
}

COMMANDS = tuple(_PIPELINES)
_CURVE_COMMANDS = {"fig1": "spectrum_points", "spectrum": "spectrum_points",
                   "fig2": "delta_points", "variance-scan": "delta_points"}


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------

def _resolve(command: str, opts) -> tuple[ModelConfig, set[str]]:
    base = _PRESETS[command]()
    given: set[str] = set()
    if opts.config:
        try:
            text = Path(opts.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}", "--config") from None
        given = _given_keys(text)
        cfg = parse_config(text, base)
    else:
        cfg = base
    changes = {}
    if opts.grid is not None:
        changes[_CURVE_COMMANDS.get(command, "grid_points")] = opts.grid
        given.add("--grid")
    if opts.extent is not None:
        changes["grid_extent"] = opts.extent
        given.add("--extent")
    if opts.truncation is not None:
        changes["n_max"] = opts.truncation
    if opts.provenance is not None:
        changes["provenance"] = opts.provenance
    if opts.convention_phase is not None:
        changes["phase_convention"] = opts.convention_phase
        given.add("--convention-phase")
    if changes:
        cfg = with_numerics(cfg, **changes)
    return cfg, given


def run(command: str, opts) -> int:
    """Execute one pipeline; returns the process exit code."""
    t0 = time.perf_counter()
    cfg, given = _resolve(command, opts)
    out = Path(opts.out)
    out.mkdir(parents=True, exist_ok=True)
    em = _Emitter(out, opts.format)
    diag = _PIPELINES[command](cfg, opts, em)
    flags = {"provenance": cfg.numerics.provenance, "phase_convention": cfg.numerics.phase_convention,
             "allow_unstable": bool(opts.allow_unstable), "format": opts.format,
             "no_coupling": bool(opts.no_coupling), "state": opts.state, "varphi": opts.varphi}
    manifest = RunManifest(command, format_config(cfg), diagnostics=diag,
                           assumed=_assumed(command, given), flags=flags,
                           duration_s=time.perf_counter() - t0)
    path = em.finish(manifest, _MANIFEST_BASE[command])
    print(f"{command}: wrote {', '.join(manifest.outputs)} to {out}")
    print(f"manifest: {path}")
    return EXIT_OK


def validate(opts) -> int:
    """Check configuration invariants and preview stability."""
    cfg, _ = _resolve("fig1", opts)
    fr, dr = cfg.frequencies, cfg.drive
    lines = [f"omega_z = {fr.omega_z!r}, omega_c = {fr.omega_c!r}, omega_m = {fr.omega_m!r}",
             f"hierarchy omega_z <= omega_c: ok"]
    eps2 = dr.eps_abs ** 2
    if eps2 > 0:
        rel = abs(2.0 * fr.omega_c * cfg.chi - eps2) / eps2
        lines.append(f"coupling identity 2 omega_c chi = |eps|^2: relative error {rel:.3g}")
    cw, sw = classify_regime(dr.standing_phase)
    lines.append(f"regime weights: quadratic {cw:.6g}, linear {sw:.6g}")
    try:
        ss = solve_steady_state(cfg)
        st = stability(build_drift(cfg, ss, cfg.numerics.provenance))
        verdict = "stable" if st.stable else "unstable"
        lines.append(f"stability preview: {verdict}, max Re(lambda) = {st.eigenvalues.real.max():.6g}")
    except NumericalError as exc:
        lines.append(f"stability preview: no steady state ({exc})")
    print("config valid")
    for line in lines:
        print("  " + line)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="geonium",
                                description="Geonium beyond the dipole approximation: figure pipelines.",
                                epilog="Config keys: " + ", ".join(CONFIG_KEYS))
    p.add_argument("command", choices=COMMANDS + ("validate",), metavar="COMMAND",
                   help="one of: " + ", ".join(COMMANDS + ("validate",)))
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--out", default=".", help="output directory (default: current)")
    p.add_argument("--grid", type=int, help="grid points per axis (samples for curves)")
    p.add_argument("--extent", type=float, help="Wigner grid half-width")
    p.add_argument("--truncation", type=int, help="Fock truncation N_max")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--provenance", choices=("paper", "rederived"))
    p.add_argument("--allow-unstable", action="store_true")
    p.add_argument("--convention-phase", choices=("standard", "plain"))
    p.add_argument("--no-coupling", action="store_true",
                   help="switch off the beyond-dipole coupling (fig1, spectrum)")
    p.add_argument("--state", choices=("conditional", "ys"), default="conditional",
                   help="state for the wigner and decohere commands")
    p.add_argument("--varphi", type=float, default=0.0,
                   help="quadrature angle for variance-scan and marginal")
    return p


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] == "run":
        argv = argv[1:]
    opts = build_parser().parse_args(argv)
    try:
        if opts.command == "validate":
            return validate(opts)
        return run(opts.command, opts)
    except ConfigError as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InstabilityError as exc:
        print(f"error: {exc} (use --allow-unstable to proceed)", file=sys.stderr)
        return EXIT_UNSTABLE
    except (NumericalError, GeoniumError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
