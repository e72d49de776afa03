"""Scenario files, the simulation pipeline and its CSV outputs.

A scenario is a flat ``key = value`` file with ``[section]`` headers::

    [physical]
    resonant_frequency_GHz = 30
    josephson_energy_ueV = 34
    flux_phase_rad = 0.7853981633974483

    [initial]
    alpha = 2

Dimensioned keys carry a mandatory unit suffix.  Every key has a default,
so an empty section list is valid but an empty file is not.
"""
from __future__ import annotations

import configparser
import copy
import datetime as _dt
import hashlib
import json
import math
import os
import re
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import __version__
from .bath import BathSpec, DiscretizedBath, discretize, golden_rule_rate
from .dynamics import PropagatorCoefficients, analytic_coefficients, exact_coefficients, lamb_shift
from .errors import ConfigParseError, InsufficientSamplesError, InvalidConfigError
from .hamiltonian import (
    BranchHamiltonian,
    Displacements,
    build_branch,
    check_weak_nonlinearity,
    linear_term_residual,
    solve_displacements,
)
from .observables import (
    InitialState,
    RunResult,
    decoherence_closed_form,
    decoherence_exact,
    forcing_offset,
    photon_number,
    short_time_rate,
)
from .physparams import (
    DEFAULT_MODE_VOLUME,
    DEFAULT_SQUID_AREA,
    PhysicalConfig,
    ghz,
    phi0,
    screening_phase,
    ueV,
)

ROUTES = ("closed_form", "exact", "fock")
RESULT_COLUMNS = ("t", "n_k0", "n_k1", "F", "D_exact", "D_closed")
FIT_SAMPLES = 200_001


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _routes(text: str) -> tuple:
    items = tuple(r.strip() for r in text.split(",") if r.strip())
    bad = [r for r in items if r not in ROUTES]
    if bad or not items:
        raise ValueError(f"routes must be a nonempty subset of {', '.join(ROUTES)}")
    return items


def _optional_float(text: str) -> Optional[float]:
    return None if text.strip().lower() in ("", "none") else float(text)


# section -> key -> (parser, default).  Keys are case sensitive.
SCHEMA: dict[str, dict[str, tuple[Callable, object]]] = {
    "physical": {
        "resonant_frequency_GHz": (float, 30.0),
        "quality_factor": (float, 1e6),
        "charging_energy_ueV": (float, 122.0),
        "josephson_energy_ueV": (float, 34.0),
        "gate_charge": (float, 0.5),
        "flux_phase_rad": (float, math.pi / 4),
        "screening_parameter": (float, 0.0),
        "curvature_radius_m": (float, 2.55e-3),
        "cavity_length_m": (float, 0.5e-2),
        "squid_area_m2": (float, DEFAULT_SQUID_AREA),
        "mode_volume_m3": (float, DEFAULT_MODE_VOLUME),
        "squid_position_m": (_optional_float, None),
        "decay_rate_rad_per_s": (_optional_float, None),
    },
    "bath": {
        "mode_count": (int, 401),
        "bandwidth_over_gamma": (float, 40.0),
        "lorentz_amplitude": (float, 1.0),
        "lorentz_width_over_gamma": (float, 1000.0),
    },
    "initial": {
        "resonant": (str, "coherent"),
        "alpha": (float, 2.0),
        "alpha_phase_rad": (float, 0.0),
        "fock_n": (int, 0),
        "bath": (str, "vacuum"),
        "bath_alpha": (float, 0.0),
        "qubit_c0": (complex, complex(1 / math.sqrt(2))),
        "qubit_c1": (complex, complex(1 / math.sqrt(2))),
    },
    "time": {
        "t_max_over_gamma": (float, 20.0),
        "sample_count": (int, 2001),
    },
    "run": {
        "routes": (_routes, ("closed_form", "exact")),
        "output": (str, "results.csv"),
        "forcing": (_bool, False),
        "detuning_over_gamma": (_optional_float, None),
        "fock_bath_modes": (int, 2),
        "fock_cutoff": (_optional_float, None),
        "fock_samples": (int, 41),
    },
}

NUMERIC_TYPES = (float, int, _optional_float)


def _unit_hint(section: str, key: str) -> Optional[str]:
    for known in SCHEMA[section]:
        if known.startswith(key + "_") and known != key:
            return known
    return None


@dataclass
class Scenario:
    values: dict = field(default_factory=lambda: {s: {k: d for k, (_, d) in keys.items()} for s, keys in SCHEMA.items()})
    source: str = "<defaults>"

    # -- construction -----------------------------------------------------
    def copy(self) -> "Scenario":
        return Scenario(copy.deepcopy(self.values), self.source)

    def set(self, dotted: str, raw) -> None:
        """Set ``section.key`` (or an unambiguous bare key) from text or a value."""
        section, key = resolve_key(dotted)
        parser = SCHEMA[section][key][0]
        self.values[section][key] = parser(raw) if isinstance(raw, str) else raw

    # -- derived objects --------------------------------------------------
    @property
    def physical(self) -> dict:
        return self.values["physical"]

    def flux_phase(self) -> float:
        """Effective classical flux phase after loop screening."""
        p = self.physical
        return screening_phase(p["flux_phase_rad"], p["screening_parameter"])

    def physical_config(self) -> PhysicalConfig:
        p = self.physical
        return PhysicalConfig(
            resonant_angular_frequency=ghz(p["resonant_frequency_GHz"]),
            quality_factor=p["quality_factor"],
            charging_energy=ueV(p["charging_energy_ueV"]),
            josephson_energy=ueV(p["josephson_energy_ueV"]),
            gate_charge=p["gate_charge"],
            classical_flux_phase=self.flux_phase(),
            screening_parameter=p["screening_parameter"],
            curvature_radius=p["curvature_radius_m"],
            cavity_length=p["cavity_length_m"],
            squid_area=p["squid_area_m2"],
            mode_volume=p["mode_volume_m3"],
            squid_position=p["squid_position_m"],
            decay_rate=p["decay_rate_rad_per_s"],
        )

    def bath_spec(self, gamma: float) -> BathSpec:
        b = self.values["bath"]
        return BathSpec(
            mode_count=b["mode_count"],
            half_bandwidth=b["bandwidth_over_gamma"] * gamma / 2,
            target_decay=gamma,
            lorentz_amplitude=b["lorentz_amplitude"],
            lorentz_width=b["lorentz_width_over_gamma"] * gamma,
        )

    def initial_state(self) -> InitialState:
        i = self.values["initial"]
        c = np.array([i["qubit_c0"], i["qubit_c1"]], dtype=complex)
        norm = np.linalg.norm(c)
        if norm == 0:
            raise InvalidConfigError("qubit amplitudes are both zero")
        kw = dict(bath_kind=i["bath"], qubit_amplitudes=tuple(c / norm))
        if i["bath"] == "coherent":
            kw["bath_alphas"] = i["bath_alpha"]
        if i["resonant"] == "fock":
            return InitialState.fock(i["fock_n"], **kw)
        if i["resonant"] != "coherent":
            raise InvalidConfigError(f"initial.resonant must be 'fock' or 'coherent', got {i['resonant']!r}")
        return InitialState.coherent(i["alpha"] * np.exp(1j * i["alpha_phase_rad"]), **kw)

    def times(self, gamma: float) -> np.ndarray:
        t = self.values["time"]
        if t["sample_count"] < 2:
            raise InvalidConfigError("time.sample_count must be >= 2")
        if not t["t_max_over_gamma"] > 0:
            raise InvalidConfigError("time.t_max_over_gamma must be positive")
        return np.linspace(0.0, t["t_max_over_gamma"] / gamma, t["sample_count"])

    @property
    def routes(self) -> tuple:
        return self.values["run"]["routes"]

    @property
    def output(self) -> str:
        return self.values["run"]["output"]

    def config_hash(self) -> str:
        canon = json.dumps(self.values, sort_keys=True, default=repr)
        return hashlib.sha256(canon.encode()).hexdigest()[:16]


def valid_keys() -> list:
    return [f"{s}.{k}" for s, keys in SCHEMA.items() for k in keys]


def numeric_keys() -> list:
    return [f"{s}.{k}" for s, keys in SCHEMA.items() for k, (p, _) in keys.items() if p in NUMERIC_TYPES]


def resolve_key(dotted: str) -> tuple:
    if "." in dotted:
        section, key = dotted.split(".", 1)
        if section in SCHEMA and key in SCHEMA[section]:
            return section, key
    else:
        hits = [(s, dotted) for s in SCHEMA if dotted in SCHEMA[s]]
        if len(hits) == 1:
            return hits[0]
        if len(hits) > 1:
            raise ConfigParseError(f"key {dotted!r} is ambiguous; use one of {[f'{s}.{k}' for s, k in hits]}")
    raise ConfigParseError(f"unknown key {dotted!r}; valid keys: {', '.join(valid_keys())}")


def _line_of(text: str, section: str, key: str) -> int:
    current = None
    for n, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        m = re.match(r"\[(.+)\]", stripped)
        if m:
            current = m.group(1).strip()
        elif current == section and re.match(rf"{re.escape(key)}\s*[=:]", stripped):
            return n
    return 0


def parse_config(text: str, source: str = "<string>") -> Scenario:
    """Parse scenario text; errors carry the file, line and key."""
    content = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith(("#", ";"))]
    if not content:
        raise ConfigParseError(f"{source}: empty configuration")
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigParseError(f"{source}: {exc}") from None
    sc = Scenario(source=source)
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigParseError(
                f"{source}:{_line_of(text, section, '') or '?'}: unknown section [{section}]; "
                f"expected one of {', '.join(SCHEMA)}"
            )
        for key, raw in cp.items(section):
            line = _line_of(text, section, key)
            if key not in SCHEMA[section]:
                hint = _unit_hint(section, key)
                msg = f"missing unit suffix, write {hint}" if hint else (
                    f"unknown key; valid keys: {', '.join(SCHEMA[section])}"
                )
                raise ConfigParseError(f"{source}:{line}: [{section}] {key}: {msg}")
            parser = SCHEMA[section][key][0]
            try:
                sc.values[section][key] = parser(raw)
            except (TypeError, ValueError) as exc:
                raise ConfigParseError(f"{source}:{line}: [{section}] {key} = {raw!r}: {exc}") from None
    return sc


def load_config(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigParseError(f"cannot read {path}: {exc}") from None
    return parse_config(text, str(path))


#: Illustrative branch detuning of the built-in decoherence curve, in units of gamma.
FIG2_DETUNING = 5.0


def fig2_scenario(detuning_over_gamma: Optional[float] = FIG2_DETUNING) -> Scenario:
    """Built-in decoherence-curve scenario: alpha = 2, closed form only.

    The device parameters put the two branch frequencies only ~2e-4 gamma
    apart, which gives a monotone curve.  An illustrative detuning of a few
    gamma makes the oscillation visible; pass ``None`` to use the model value.
    """
    sc = Scenario(source="<fig2>")
    sc.values["initial"]["alpha"] = 2.0
    sc.values["run"]["routes"] = ("closed_form",)
    sc.values["run"]["output"] = "fig2.csv"
    sc.values["run"]["detuning_over_gamma"] = detuning_over_gamma
    return sc


# -- pipeline -----------------------------------------------------------------


@dataclass
class Pipeline:
    """Intermediate objects of one run, kept for validation and tests."""

    scenario: Scenario
    config: PhysicalConfig
    bath: DiscretizedBath
    branches: list
    displacements: list
    shifts: list
    times: np.ndarray
    state: InitialState
    coefficients: list
    result: RunResult
    decay: float


def _coefficients(h: BranchHamiltonian, gamma: float, shift: float, t: np.ndarray, exact: bool, tensor: bool):
    if exact:
        return exact_coefficients(h, t, bath_tensor=tensor)
    return analytic_coefficients(h, gamma, shift, t, bath_tensor=tensor)


def run_pipeline(sc: Scenario, bath: Optional[DiscretizedBath] = None) -> Pipeline:
    cfg = sc.physical_config()
    gamma = cfg.gamma
    if bath is None:
        bath = discretize(sc.bath_spec(gamma), cfg)
    t = sc.times(gamma)
    bath.check_horizon(t[-1])
    state = sc.initial_state()
    forcing = sc.values["run"]["forcing"]
    routes = sc.routes

    branches = [build_branch(k, cfg, bath) for k in (0, 1)]
    if not forcing:
        branches = [h.without_forcing() for h in branches]
    weak_ok = check_weak_nonlinearity(cfg, state.mean_photons)
    # decay of the actual couplings: gamma after calibration, zero when E_J or cos(phi_c) vanish
    decay = golden_rule_rate(bath, np.abs(branches[0].couplings))
    shifts = [lamb_shift(h, bath) for h in branches]
    disps = [solve_displacements(h) if forcing else Displacements.zero(len(bath)) for h in branches]
    needs_tensor = forcing or state.bath_kind == "coherent"
    exact = "exact" in routes
    coeffs = [_coefficients(h, decay, dw, t, exact, needs_tensor) for h, dw in zip(branches, shifts)]

    n_k = [photon_number(p, d, state) for p, d in zip(coeffs, disps)]
    F = forcing_offset(coeffs[0], disps[0], state)

    omega_t = [h.shifted_frequency + dw for h, dw in zip(branches, shifts)]
    detuning = omega_t[1] - omega_t[0]
    override = sc.values["run"]["detuning_over_gamma"]
    if override is not None:
        detuning = override * gamma
    D = {}
    coherent = state.resonant_kind == "coherent"
    if "closed_form" in routes and coherent:
        D["closed_form"] = decoherence_closed_form(0.0, detuning, decay, state.alpha, t)
    if exact and coherent:
        D["exact"] = decoherence_exact(coeffs[0], coeffs[1], state, disps[0], disps[1])

    p = sc.physical
    manifest = {
        "package_version": __version__,
        "config_hash": sc.config_hash(),
        "config_source": sc.source,
        "routes": ",".join(routes),
        "photon_number_source": coeffs[0].source,
        "forcing": "on (extension: forced decoherence beyond the unforced model)" if forcing else "off",
        "F_branch": 0,
        "gamma_rad_per_s": gamma,
        "gamma_source": "override" if p["decay_rate_rad_per_s"] is not None else "omega/Q",
        "flux_phase_external_rad": p["flux_phase_rad"],
        "flux_phase_effective_rad": cfg.classical_flux_phase,
        "gate_charge": cfg.gate_charge,
        "squid_area_m2": cfg.squid_area,
        "mode_volume_m3": cfg.mode_volume,
        "phi0": phi0(cfg),
        "weak_nonlinearity_ok": weak_ok,
        "bath_mode_count": len(bath),
        "bath_spacing_rad_per_s": bath.spacing,
        "bath_lorentz_width_rad_per_s": bath.metadata.get("lorentz_width", float("nan")),
        "bath_calibration_scalar": bath.calibration,
        "golden_rule_rate_rad_per_s": decay,
        "revival_time_s": bath.revival_time,
        "t_max_s": t[-1],
        "lamb_shift_k0_rad_per_s": shifts[0],
        "lamb_shift_k1_rad_per_s": shifts[1],
        "omega_tilde_k0_rad_per_s": omega_t[0],
        "omega_tilde_k1_rad_per_s": omega_t[1],
        "detuning_rad_per_s": detuning,
        "detuning_source": "override" if override is not None else "model",
        "displacement_k0": disps[0].resonant,
        "initial_state": state.resonant_kind,
        "alpha": state.alpha,
        "fock_n": state.n,
    }
    if coherent and D:
        route = "closed_form" if "closed_form" in D else "exact"
        manifest["rate_route"] = route
        manifest["gamma_abs_alpha2_rad_per_s"] = gamma * abs(state.alpha) ** 2
        try:
            if route == "closed_form":
                # the closed form is cheap, so the fit gets its own fine grid
                tf = np.linspace(0.0, t[-1], FIT_SAMPLES)
                manifest["fitted_rate_rad_per_s"] = short_time_rate(
                    decoherence_closed_form(0.0, detuning, decay, state.alpha, tf), tf
                )
            else:
                manifest["fitted_rate_rad_per_s"] = short_time_rate(D[route], t)
        except InsufficientSamplesError as exc:
            manifest["fitted_rate_rad_per_s"] = float("nan")
            manifest["fitted_rate_note"] = str(exc)
        manifest["plateau"] = float(D[route][-1])
        manifest["plateau_expected"] = math.exp(-abs(state.alpha) ** 2)
    if "fock" in routes:
        manifest.update(_fock_crosscheck(sc, branches, t, state))

    result = RunResult(t, {0: n_k[0], 1: n_k[1]}, F, D, manifest)
    return Pipeline(sc, cfg, bath, branches, disps, shifts, t, state, coeffs, result, decay)


def reduced_branch(h: BranchHamiltonian, center: float, modes: int) -> BranchHamiltonian:
    """Keep only the ``modes`` bath modes closest to ``center``."""
    idx = np.sort(np.argsort(np.abs(h.bath_frequencies - center), kind="stable")[:modes])
    return BranchHamiltonian(
        h.branch,
        h.shifted_frequency,
        h.couplings[idx],
        h.resonant_forcing,
        h.bath_forcings[idx],
        h.constant_offset,
        h.bath_frequencies[idx],
    )


def _fock_crosscheck(sc: Scenario, branches, t, state) -> dict:
    """Compare the Fock oracle with the mode-space route on a reduced bath."""
    from .fockcheck import FockConfig, coherent_tail, evolve_state, overlap_magnitude, photon_numbers

    run = sc.values["run"]
    modes = run["fock_bath_modes"]
    center = 0.5 * (branches[0].shifted_frequency + branches[1].shifted_frequency)
    small = [reduced_branch(h, center, modes) for h in branches]
    if any(h.is_forced for h in small):
        small = [h.without_forcing() for h in small]
    idx = np.unique(np.linspace(0, t.size - 1, run["fock_samples"]).round().astype(int))
    ts = t[idx]
    reduced_state = InitialState(state.resonant_kind, state.n, state.alpha)
    cutoff = run["fock_cutoff"]
    if cutoff is None:
        cutoff = max(state.n, 4)
        while coherent_tail(state.alpha, cutoff) > 1e-8:
            cutoff += 1
    cutoff = int(cutoff)
    evs = [evolve_state(FockConfig(h, cutoff), reduced_state, ts) for h in small]
    ps = [exact_coefficients(h, ts) for h in small]
    out = {"fock_bath_modes": modes, "fock_cutoff": cutoff, "fock_samples": ts.size}
    n_fock = photon_numbers(FockConfig(small[0], cutoff), evs[0])
    n_mode = photon_number(ps[0], None, reduced_state)
    out["fock_photon_number_max_deviation"] = float(np.max(np.abs(n_fock - n_mode)))
    if state.resonant_kind == "coherent":
        d_fock = overlap_magnitude(evs[0], evs[1])
        d_mode = decoherence_exact(ps[0], ps[1], reduced_state)
        out["fock_overlap_max_deviation"] = float(np.max(np.abs(d_fock - d_mode)))
    out["fock_norm_drift"] = max(ev.norm_drift for ev in evs)
    return out


def run(sc: Scenario, bath: Optional[DiscretizedBath] = None) -> RunResult:
    return run_pipeline(sc, bath).result


# -- validation ---------------------------------------------------------------


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.tolerance)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<34} {self.value:.3e} (tolerance {self.tolerance:.1e})"


def validate(sc: Scenario, bath: Optional[DiscretizedBath] = None) -> list:
    """Unitarity, calibration, displacement and route-agreement checks."""
    sc = sc.copy()
    sc.values["run"]["routes"] = ("closed_form", "exact")
    sc.values["run"]["forcing"] = False
    sc.values["run"]["detuning_over_gamma"] = None
    pipe = run_pipeline(sc, bath)
    gamma = pipe.config.gamma
    checks = []
    exact = pipe.coefficients
    checks.append(Check("unitarity exact", max(float(np.max(np.abs(p.unitarity() - 1))) for p in exact), 1e-10))
    analytic = [
        analytic_coefficients(h, pipe.decay, dw, pipe.times) for h, dw in zip(pipe.branches, pipe.shifts)
    ]
    checks.append(
        Check("unitarity analytic", max(float(np.max(np.abs(p.unitarity() - 1))) for p in analytic), 2e-2)
    )
    rate = golden_rule_rate(pipe.bath, np.abs(pipe.branches[0].couplings))
    checks.append(Check("golden-rule calibration", abs(rate / gamma - 1), 1e-2))
    forced = [build_branch(k, pipe.config, pipe.bath) for k in (0, 1)]
    if any(h.is_forced for h in forced):
        resid = max(linear_term_residual(h, solve_displacements(h)) for h in forced)
    else:
        resid = 0.0
    checks.append(Check("displacement residual", resid, 1e-12))
    D = pipe.result.decoherence
    if "exact" in D and "closed_form" in D:
        checks.append(Check("route agreement exact/closed", float(np.max(np.abs(D["exact"] - D["closed_form"]))), 2e-2))
    return checks


# -- output -------------------------------------------------------------------


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (complex, np.complexfloating)):
        x = complex(x)
        if x.imag == 0:
            return format(x.real, ".17g")
        return f"{format(x.real, '.17g')}{'+' if x.imag >= 0 else '-'}{format(abs(x.imag), '.17g')}j"
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def manifest_block(manifest: dict, timestamp: bool = True) -> str:
    lines = []
    if timestamp:
        stamp = _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0).isoformat()
        lines.append(f"# created = {stamp}")
    lines += [f"# {k} = {fmt(v)}" for k, v in manifest.items()]
    return "\n".join(lines) + "\n"


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _nan_column(result: RunResult, key: str) -> np.ndarray:
    col = result.decoherence.get(key)
    return np.full(result.times.shape, np.nan) if col is None else col


def results_csv(result: RunResult, timestamp: bool = True) -> str:
    cols = [
        result.times,
        result.photon_number[0],
        result.photon_number[1],
        result.forcing_offset,
        _nan_column(result, "exact"),
        _nan_column(result, "closed_form"),
    ]
    body = "\n".join(",".join(fmt(c[i]) for c in cols) for i in range(result.times.size))
    return manifest_block(result.manifest, timestamp) + ",".join(RESULT_COLUMNS) + "\n" + body + "\n"


def bath_csv(bath: DiscretizedBath) -> str:
    meta = {
        "center_rad_per_s": bath.center,
        "spacing_rad_per_s": bath.spacing,
        "calibration_scalar": bath.calibration,
        "target_decay_rad_per_s": bath.target_decay if bath.target_decay is not None else float("nan"),
    }
    head = "".join(f"# {k} = {fmt(v)}\n" for k, v in meta.items())
    rows = "\n".join(
        f"{fmt(w)},{fmt(m)},{fmt(p)}" for w, m, p in zip(bath.frequencies, bath.weights, bath.phase_couplings)
    )
    return head + "omega_j,M_j,phi_j\n" + rows + "\n"


def read_bath_csv(path) -> DiscretizedBath:
    meta, rows = {}, []
    header_seen = False
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            if "=" in line:
                k, v = line[1:].split("=", 1)
                meta[k.strip()] = v.strip()
            continue
        if not header_seen:
            if line.strip() != "omega_j,M_j,phi_j":
                raise ConfigParseError(f"{path}:{n}: expected header 'omega_j,M_j,phi_j'")
            header_seen = True
            continue
        try:
            rows.append([float(x) for x in line.split(",")])
        except ValueError:
            raise ConfigParseError(f"{path}:{n}: malformed row {line!r}") from None
    if not rows:
        raise ConfigParseError(f"{path}: no bath modes")
    arr = np.array(rows)
    freqs = arr[:, 0]
    spacing = float(meta.get("spacing_rad_per_s", np.mean(np.diff(freqs)) if freqs.size > 1 else "nan"))
    center = float(meta.get("center_rad_per_s", 0.5 * (freqs[0] + freqs[-1])))
    target = float(meta["target_decay_rad_per_s"]) if "target_decay_rad_per_s" in meta else None
    return DiscretizedBath(
        frequencies=freqs,
        weights=arr[:, 1],
        phase_couplings=arr[:, 2],
        spacing=spacing,
        center=center,
        calibration=float(meta.get("calibration_scalar", 1.0)),
        target_decay=target,
    )


def coefficients_csv(p: PropagatorCoefficients) -> str:
    sum_v2 = np.sum(np.abs(p.v) ** 2, axis=1)
    rows = "\n".join(
        f"{fmt(t)},{fmt(u.real)},{fmt(u.imag)},{fmt(s)}" for t, u, s in zip(p.times, p.u, sum_v2)
    )
    return f"# source = {p.source}\nt,re_u,im_u,sum_v2\n" + rows + "\n"


def sibling(path, suffix: str) -> Path:
    path = Path(path)
    return path.with_name(f"{path.stem}{suffix}{path.suffix or '.csv'}")


def write_outputs(pipe: Pipeline, out, timestamp: bool = True) -> dict:
    """Write results, bath and coefficient CSVs next to each other; return their paths."""
    out = Path(out)
    paths = {
        "results": out,
        "bath": sibling(out, "_bath"),
        "coefficients": sibling(out, "_coefficients"),
    }
    atomic_write(paths["results"], results_csv(pipe.result, timestamp))
    atomic_write(paths["bath"], bath_csv(pipe.bath))
    atomic_write(paths["coefficients"], coefficients_csv(pipe.coefficients[0]))
    return paths


# -- sweeps -------------------------------------------------------------------


def _value_tag(value) -> str:
    return re.sub(r"[^0-9A-Za-z.+-]", "_", fmt(value))


def sweep_scenarios(sc: Scenario, key: str, values) -> list:
    section, name = resolve_key(key)
    parser = SCHEMA[section][name][0]
    if parser not in NUMERIC_TYPES:
        raise ConfigParseError(f"{section}.{name} is not numeric; numeric keys: {', '.join(numeric_keys())}")
    out = []
    for raw in values:
        s = sc.copy()
        s.set(f"{section}.{name}", raw)
        val = s.values[section][name]
        s.values["run"]["output"] = str(sibling(sc.output, f"_{name}-{_value_tag(val)}"))
        out.append((val, s))
    return out


def _sweep_one(sc: Scenario):
    pipe = run_pipeline(sc)
    exact_vs_analytic = float("nan")
    if "exact" in sc.routes:
        g = pipe.config.gamma
        exact_vs_analytic = float(np.max(np.abs(np.abs(pipe.coefficients[0].u) - np.exp(-0.5 * g * pipe.times))))
    return pipe, exact_vs_analytic


def sweep(sc: Scenario, key: str, values, workers: int = 1, write: bool = True, timestamp: bool = True):
    """Run one scenario per value; return ``(rows, results)``.

    Each row holds the swept value, fitted short-time rate, ``gamma |alpha|^2``,
    final decoherence value and the exact-vs-analytic deviation of ``|u|``.
    """
    jobs = sweep_scenarios(sc, key, values)
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_sweep_one, [s for _, s in jobs]))
    else:
        outcomes = [_sweep_one(s) for _, s in jobs]
    rows, results = [], []
    for (val, s), (pipe, dev) in zip(jobs, outcomes):
        m = pipe.result.manifest
        rows.append(
            {
                "value": val,
                "fitted_rate": m.get("fitted_rate_rad_per_s", float("nan")),
                "gamma_abs_alpha2": m.get("gamma_abs_alpha2_rad_per_s", float("nan")),
                "plateau": m.get("plateau", float("nan")),
                "exact_vs_analytic": dev,
            }
        )
        results.append(pipe.result)
        if write:
            write_outputs(pipe, s.output, timestamp)
    if write:
        _, name = resolve_key(key)
        header = "value,fitted_rate,gamma_abs_alpha2,plateau,exact_vs_analytic\n"
        body = "".join(",".join(fmt(r[c]) for c in r) + "\n" for r in rows)
        atomic_write(sibling(sc.output, f"_sweep_{name}"), header + body)
    return rows, results
