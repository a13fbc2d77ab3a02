"""Batch driver: study configuration, convergence runs, rate fits, reports, CLI.

A convergence study builds seeded rough data, computes a cross-validated
fine-step reference, sweeps the configured step sizes, measures terminal
errors in the study norm, fits the order by least squares on the log-log
cloud, and emits deterministic CSV/JSON reports.

Exit codes of the command-line driver: 0 success, 2 reference validation
failure, 3 blow-up, 4 configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import re
import sys
import tempfile
import time
from typing import Callable, Sequence

import numpy as np

from .diagnostics import (
    Trajectory,
    nls_local_error_oracle,
    nullform_norm,
    strichartz_l4,
    trajectory_of,
    wave_local_error_oracle,
)
from .nls_integrators import (
    NlsProblem,
    NlsStepperKind,
    lri_step,
    nls_reference_solve,
    run_nls,
)
from .torus_spectral import (
    BlowUpError,
    RoughDataSpec,
    SpectralField,
    TorusGrid,
    WaveState,
    hermitian_part,
    random_rough_field,
    regrid,
    sobolev_norm,
)
from .wave_integrators import (
    Nonlinearity,
    WaveProblem,
    corrected_lie_step,
    run_wave,
    wave_reference_solve,
    wave_state_norm,
)

VERSION = "0.1.0"

FIT_FLOOR = 1e-11
FIT_CEILING = 1.0

# Streams for the velocity component are split off the user seed by a fixed
# documented offset so (u, v) draws never collide.
V_SEED_OFFSET = 1_000_003

_NLS_SCHEMES = ("lri", "lie")
_WAVE_SCHEMES = ("corrected_lie", "lie")


class ConfigError(ValueError):
    """Invalid study configuration or command line."""


class ValidationError(RuntimeError):
    """Two-scheme reference cross-validation exceeded its tolerance."""

    def __init__(self, message: str, record: dict | None = None):
        super().__init__(message)
        self.record = record or {}


def _is_pow2(n: int) -> bool:
    return n >= 8 and n & (n - 1) == 0


@dataclasses.dataclass(frozen=True)
class StudyConfig:
    """Everything a convergence study needs; validated on construction."""

    equation: str
    tau_list: tuple[float, ...]
    scheme: str = ""
    mu: int = 1
    nonlinearity: str = "quadratic"
    theta: float = 1.0
    delta: float = 0.01
    seed: int = 1
    amplitude: float = 0.5
    n_modes: int = 1024
    t_end: float = 1.0
    error_norm: str = ""
    norm_r: float = 0.75
    ref_factor: int = 64
    cross_val_tol: float = 1e-6
    output_path: str | None = None
    max_over_steps: bool = False
    spatial_check: bool = True

    def __post_init__(self) -> None:
        if self.equation not in ("nls", "wave"):
            raise ConfigError(f"equation must be 'nls' or 'wave', got {self.equation!r}")
        if not self.scheme:
            object.__setattr__(
                self, "scheme", "lri" if self.equation == "nls" else "corrected_lie"
            )
        allowed = _NLS_SCHEMES if self.equation == "nls" else _WAVE_SCHEMES
        if self.scheme not in allowed:
            raise ConfigError(f"scheme for {self.equation} must be one of {allowed}")
        if not self.error_norm:
            object.__setattr__(
                self, "error_norm", "L2" if self.equation == "nls" else "H1xL2"
            )
        norms = ("L2", "Hr") if self.equation == "nls" else ("H1xL2",)
        if self.error_norm not in norms:
            raise ConfigError(
                f"error_norm for {self.equation} must be one of {norms}, "
                f"got {self.error_norm!r}"
            )
        if self.mu not in (-1, 1):
            raise ConfigError("mu must be +1 or -1")
        if self.nonlinearity and self.equation == "wave":
            Nonlinearity.preset(self.nonlinearity)
        if self.theta < 0 or self.delta <= 0 or self.amplitude <= 0:
            raise ConfigError("theta >= 0, delta > 0 and amplitude > 0 are required")
        if not _is_pow2(self.n_modes):
            raise ConfigError("n_modes must be a power of two >= 8")
        if self.t_end <= 0:
            raise ConfigError("t_end must be > 0")
        taus = tuple(float(t) for t in self.tau_list)
        if not taus:
            raise ConfigError("tau_list must not be empty")
        if any(t <= 0 for t in taus):
            raise ConfigError("all step sizes must be > 0")
        if any(a <= b for a, b in zip(taus, taus[1:])):
            raise ConfigError("tau_list must be strictly decreasing")
        for t in taus:
            n = self.t_end / t
            if abs(n - round(n)) > 1e-9 * max(1.0, n):
                raise ConfigError(f"step size {t} does not divide t_end = {self.t_end}")
        object.__setattr__(self, "tau_list", taus)
        if self.ref_factor < 16:
            raise ConfigError("ref_factor must be >= 16")
        if self.cross_val_tol <= 0:
            raise ConfigError("cross_val_tol must be > 0")

    @property
    def norm_label(self) -> str:
        if self.error_norm == "Hr":
            return f"H{self.norm_r:g}"
        return self.error_norm


@dataclasses.dataclass
class ConvergenceReport:
    """Per-step-size errors plus the fitted order and full provenance."""

    equation: str
    scheme: str
    seed: int
    norm_label: str
    taus: list[float]
    errors: list[float]
    fitted_order: float | None
    r_squared: float | None
    validation: dict
    config: dict
    version: str = VERSION
    spatially_resolved: bool | None = None
    spatial_change: float | None = None
    wall_time: float | None = dataclasses.field(default=None, compare=False)

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "equation": self.equation,
            "scheme": self.scheme,
            "seed": self.seed,
            "norm": self.norm_label,
            "taus": list(self.taus),
            "errors": list(self.errors),
            "fitted_order": self.fitted_order,
            "r_squared": self.r_squared,
            "validation": self.validation,
            "spatially_resolved": self.spatially_resolved,
            "spatial_change": self.spatial_change,
            "config": self.config,
        }

    @staticmethod
    def from_dict(data: dict) -> "ConvergenceReport":
        return ConvergenceReport(
            equation=data["equation"],
            scheme=data["scheme"],
            seed=data["seed"],
            norm_label=data["norm"],
            taus=list(data["taus"]),
            errors=list(data["errors"]),
            fitted_order=data["fitted_order"],
            r_squared=data["r_squared"],
            validation=data["validation"],
            config=data["config"],
            version=data["version"],
            spatially_resolved=data["spatially_resolved"],
            spatial_change=data["spatial_change"],
        )


def fit_rate(pairs: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """Least-squares slope and r^2 of log(error) against log(tau).

    Errors outside the window [1e-11, 1] are dropped before fitting, which
    strips the roundoff floor and the pre-asymptotic ceiling.
    """
    usable = [(t, e) for t, e in pairs if FIT_FLOOR <= e <= FIT_CEILING]
    if len(usable) < 2:
        raise ValueError("fewer than 2 usable (tau, error) pairs after filtering")
    x = np.log([t for t, _ in usable])
    y = np.log([e for _, e in usable])
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        r_squared = 1.0 if ss_res < 1e-28 else 0.0
    else:
        r_squared = 1.0 - ss_res / ss_tot
    return float(slope), float(r_squared)


def _count_usable(pairs) -> int:
    return sum(1 for _, e in pairs if FIT_FLOOR <= e <= FIT_CEILING)


def smooth_data_spec(seed: int, delta: float = 0.01, amplitude: float = 1.0,
                     real_valued: bool = False) -> RoughDataSpec:
    """Spec whose coefficient magnitudes decay like (1+|k|)^-6 exactly."""
    return RoughDataSpec(
        theta=5.5 - delta, seed=seed, delta=delta,
        real_valued=real_valued, amplitude=amplitude,
    )


def _initial_state(config: StudyConfig, grid: TorusGrid):
    if config.equation == "nls":
        spec = RoughDataSpec(
            theta=config.theta, seed=config.seed, delta=config.delta,
            real_valued=False, amplitude=config.amplitude,
        )
        return random_rough_field(spec, grid)
    u_spec = RoughDataSpec(
        theta=config.theta, seed=config.seed, delta=config.delta,
        real_valued=True, amplitude=config.amplitude,
    )
    v_spec = RoughDataSpec(
        theta=max(config.theta - 1.0, 0.0), seed=config.seed + V_SEED_OFFSET,
        delta=config.delta, real_valued=True, amplitude=config.amplitude,
    )
    return WaveState(random_rough_field(u_spec, grid), random_rough_field(v_spec, grid))


def _norm_fn(config: StudyConfig) -> Callable:
    if config.equation == "nls":
        r = 0.0 if config.error_norm == "L2" else config.norm_r
        return lambda f: sobolev_norm(f, r)
    return wave_state_norm


def _diff(a, b):
    if isinstance(a, WaveState):
        # Resymmetrize: the roundoff asymmetry of a difference of two nearly
        # equal real fields is not small relative to the difference itself.
        return WaveState(
            SpectralField(a.grid, hermitian_part(a.u.coeffs - b.u.coeffs), True),
            SpectralField(a.grid, hermitian_part(a.v.coeffs - b.v.coeffs), True),
        )
    return SpectralField(a.grid, a.coeffs - b.coeffs, False)


def _run_scheme(initial, equation, scheme, nl, mu, tau, n_steps, record_every=None):
    if equation == "nls":
        kind = NlsStepperKind.LOW_REGULARITY if scheme == "lri" else NlsStepperKind.LIE_SPLITTING
        return run_nls(initial, tau, n_steps, mu, kind, record_every=record_every)
    return run_wave(
        initial, tau, n_steps, nl,
        corrected=(scheme != "lie"), record_every=record_every,
    )


def _steps_for(t_end: float, tau: float) -> int:
    n = t_end / tau
    if abs(n - round(n)) > 1e-9 * max(1.0, n):
        raise ConfigError(f"step size {tau} does not divide the horizon {t_end}")
    return round(n)


def cross_validate_reference(problem, tau_ref: float, *, norm_fn=None, tol: float | None = None) -> dict:
    """Run the designated reference scheme and its comparator at tau_ref.

    Returns a validation record with the terminal-state distance; raises
    ``ValidationError`` if the distance exceeds ``tol`` (an absolute
    tolerance; the caller usually supplies rel_tol * initial_norm).
    """
    if tau_ref <= 0:
        raise ConfigError("tau_ref must be > 0")
    if isinstance(problem, NlsProblem):
        equation, nl, mu, initial = "nls", None, problem.mu, problem.u0
        schemes = _NLS_SCHEMES
        if norm_fn is None:
            norm_fn = lambda f: sobolev_norm(f, 0.0)
        initial_norm = norm_fn(initial)
    else:
        equation, nl = "wave", problem.nonlinearity
        mu, initial = 1, problem.initial
        schemes = _WAVE_SCHEMES
        if norm_fn is None:
            norm_fn = wave_state_norm
        initial_norm = norm_fn(initial)
    if tol is None:
        tol = 1e-6 * initial_norm
    n_steps = _steps_for(problem.t_end, tau_ref)
    ref = _run_scheme(initial, equation, schemes[0], nl, mu, tau_ref, n_steps)[-1]
    comp = _run_scheme(initial, equation, schemes[1], nl, mu, tau_ref, n_steps)[-1]
    distance = norm_fn(_diff(ref, comp))
    record = {
        "tau_ref": tau_ref,
        "reference_scheme": schemes[0],
        "comparator_scheme": schemes[1],
        "distance": distance,
        "initial_norm": initial_norm,
        "tolerance": tol,
        "passed": bool(distance <= tol),
    }
    if distance > tol:
        raise ValidationError(
            f"reference cross-validation failed: two-scheme distance "
            f"{distance:.3e} exceeds tolerance {tol:.3e} at tau_ref={tau_ref:g}",
            record,
        )
    return record


def _reference_run(config: StudyConfig, initial, nl, tau_ref: float):
    """Reference trajectory at tau_ref plus the cross-validation record."""
    norm_fn = _norm_fn(config)
    initial_norm = norm_fn(initial)
    tol = config.cross_val_tol * initial_norm
    n_steps = _steps_for(config.t_end, tau_ref)
    canonical = _NLS_SCHEMES[0] if config.equation == "nls" else _WAVE_SCHEMES[0]
    comparator = "lie"
    record_every = None
    if config.max_over_steps:
        record_every = _steps_for(config.tau_list[-1], tau_ref)
    ref_states = _run_scheme(
        initial, config.equation, canonical, nl, config.mu, tau_ref, n_steps,
        record_every=record_every,
    )
    comp = _run_scheme(
        initial, config.equation, comparator, nl, config.mu, tau_ref, n_steps
    )[-1]
    distance = norm_fn(_diff(ref_states[-1], comp))
    record = {
        "tau_ref": tau_ref,
        "reference_scheme": canonical,
        "comparator_scheme": comparator,
        "distance": distance,
        "initial_norm": initial_norm,
        "tolerance": tol,
        "passed": bool(distance <= tol),
    }
    if distance > tol:
        raise ValidationError(
            f"reference cross-validation failed: two-scheme distance "
            f"{distance:.3e} exceeds tolerance {tol:.3e} at tau_ref={tau_ref:g}",
            record,
        )
    return ref_states, record


def _sweep_errors(config: StudyConfig, initial, nl, ref_states, tau_ref: float, norm_fn):
    errors = []
    for tau in config.tau_list:
        n_steps = _steps_for(config.t_end, tau)
        try:
            if config.max_over_steps:
                states = _run_scheme(
                    initial, config.equation, config.scheme, nl, config.mu,
                    tau, n_steps, record_every=1,
                )
                stride = _steps_for(tau, config.tau_list[-1])
                err = 0.0
                for j in range(1, n_steps + 1):
                    err = max(err, norm_fn(_diff(states[j], ref_states[j * stride])))
            else:
                terminal = _run_scheme(
                    initial, config.equation, config.scheme, nl, config.mu,
                    tau, n_steps,
                )[-1]
                err = norm_fn(_diff(terminal, ref_states[-1]))
        except BlowUpError as exc:
            raise BlowUpError(f"blow-up during the tau={tau:g} run: {exc}") from exc
        errors.append(float(err))
    return errors


def _spatial_check(config: StudyConfig, initial, nl, norm_fn):
    """Error at the largest step, recomputed at N and 2N from the same datum.

    Both errors use a dedicated mini-reference at tau_max/max(ref_factor, 256)
    so the comparison isolates the spatial layer.  Returns (resolved, change).
    """
    tau_c = config.tau_list[0]
    factor = max(config.ref_factor, 256)
    tau_mini = tau_c / factor
    canonical = _NLS_SCHEMES[0] if config.equation == "nls" else _WAVE_SCHEMES[0]

    def error_on(state0):
        n_steps = _steps_for(config.t_end, tau_c)
        coarse = _run_scheme(
            state0, config.equation, config.scheme, nl, config.mu, tau_c, n_steps
        )[-1]
        fine = _run_scheme(
            state0, config.equation, canonical, nl, config.mu, tau_mini,
            n_steps * factor,
        )[-1]
        return norm_fn(_diff(coarse, fine))

    big = TorusGrid(2 * config.n_modes)
    if isinstance(initial, WaveState):
        embedded = WaveState(regrid(initial.u, big), regrid(initial.v, big))
    else:
        embedded = regrid(initial, big)
    e_base = error_on(initial)
    e_fine = error_on(embedded)
    change = abs(e_fine - e_base) / max(e_base, 1e-300)
    return bool(change < 0.01), float(change)


def run_convergence_study(config: StudyConfig) -> ConvergenceReport:
    """Execute one full study; see the module docstring for the pipeline."""
    started = time.perf_counter()
    grid = TorusGrid(config.n_modes)
    initial = _initial_state(config, grid)
    nl = Nonlinearity.preset(config.nonlinearity) if config.equation == "wave" else None
    norm_fn = _norm_fn(config)
    tau_ref = config.tau_list[-1] / config.ref_factor

    ref_states, validation = _reference_run(config, initial, nl, tau_ref)
    errors = _sweep_errors(config, initial, nl, ref_states, tau_ref, norm_fn)

    pairs = list(zip(config.tau_list, errors))
    fitted_order = r_squared = None
    if _count_usable(pairs) >= 4:
        fitted_order, r_squared = fit_rate(pairs)

    resolved = change = None
    if config.spatial_check:
        resolved, change = _spatial_check(config, initial, nl, norm_fn)

    config_echo = dataclasses.asdict(config)
    config_echo["tau_list"] = list(config.tau_list)
    report = ConvergenceReport(
        equation=config.equation,
        scheme=config.scheme,
        seed=config.seed,
        norm_label=config.norm_label,
        taus=list(config.tau_list),
        errors=errors,
        fitted_order=fitted_order,
        r_squared=r_squared,
        validation=validation,
        config=config_echo,
        spatially_resolved=resolved,
        spatial_change=change,
        wall_time=time.perf_counter() - started,
    )
    if config.output_path:
        emit_report(report, "csv", config.output_path + ".csv")
        emit_report(report, "json", config.output_path + ".json")
    return report


def _atomic_write(path: str, payload: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".report-")
    try:
        with os.fdopen(fd, "w", encoding="ascii") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_report(report: ConvergenceReport, format: str, path: str) -> str:
    """Write one report file atomically; bytes depend only on the report."""
    if not report.errors:
        raise ValueError("reports are never empty")
    if format == "csv":
        lines = ["tau,error,norm,scheme,seed"]
        for tau, err in zip(report.taus, report.errors):
            lines.append(
                f"{tau!r},{err!r},{report.norm_label},{report.scheme},{report.seed}"
            )
        payload = "\n".join(lines) + "\n"
    elif format == "json":
        payload = json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    else:
        raise ValueError("format must be 'csv' or 'json'")
    _atomic_write(path, payload)
    return path


def report_from_json(path: str) -> ConvergenceReport:
    with open(path, encoding="ascii") as fh:
        return ConvergenceReport.from_dict(json.load(fh))


# Command-line interface ----------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); config errors are exit 4
        raise ConfigError(message)


def parse_taus(text: str) -> tuple[float, ...]:
    """Parse '2^-4..2^-10', a single '2^-6', or a comma list of floats."""
    text = text.strip()
    m = re.fullmatch(r"2\^(-?\d+)\.\.2\^(-?\d+)", text)
    if m:
        a, b = int(m.group(1)), int(m.group(2))
        step = -1 if b < a else 1
        return tuple(2.0**e for e in range(a, b + step, step))
    taus = []
    for token in text.split(","):
        token = token.strip()
        m = re.fullmatch(r"2\^(-?\d+)", token)
        taus.append(2.0 ** int(m.group(1)) if m else float(token))
    return tuple(taus)


def parse_norm(text: str) -> tuple[str, float | None]:
    if text.startswith("Hr:"):
        return "Hr", float(text.partition(":")[2])
    return text, None


_CONFIG_KEYS = {
    "scheme": str,
    "mu": int,
    "nonlinearity": str,
    "theta": float,
    "delta": float,
    "seed": int,
    "amplitude": float,
    "modes": int,
    "t_end": float,
    "taus": parse_taus,
    "norm": str,
    "ref_factor": int,
    "cross_val_tol": float,
    "out": str,
    "max_over_steps": lambda s: s.lower() in ("1", "true", "yes", "on"),
    "spatial_check": lambda s: s.lower() in ("1", "true", "yes", "on"),
}


def read_config_file(path: str) -> dict:
    """Plain-text key/value study settings; '#' starts a comment."""
    values: dict = {}
    try:
        with open(path, encoding="utf-8") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(raw.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, _, value = line.partition("=")
        else:
            key, _, value = line.partition(" ")
        key = key.strip().lower().replace("-", "_")
        value = value.strip()
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
        try:
            values[key] = _CONFIG_KEYS[key](value)
        except (ValueError, AttributeError) as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {value!r}") from exc
    return values


def _add_study_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="plain-text key/value file; flags override it")
    p.add_argument("--scheme", help="integrator under study")
    p.add_argument("--theta", type=float, help="data regularity exponent")
    p.add_argument("--delta", type=float, help="extra coefficient decay margin")
    p.add_argument("--seed", type=int, help="64-bit data seed")
    p.add_argument("--amplitude", type=float, help="data amplitude scale")
    p.add_argument("--modes", type=int, help="number of Fourier modes")
    p.add_argument("--t-end", type=float, help="final time")
    p.add_argument("--taus", help="step sizes, e.g. 2^-4..2^-10 or 0.1,0.05")
    p.add_argument("--norm", help="error norm: L2, H1xL2, or Hr:<r>")
    p.add_argument("--ref-factor", type=int, help="tau_min / tau_ref ratio")
    p.add_argument("--cross-val-tol", type=float,
                   help="relative two-scheme agreement tolerance")
    p.add_argument("--out", help="output path stem; writes <out>.csv and <out>.json")
    p.add_argument("--max-over-steps", action="store_true", default=None,
                   help="measure the maximum error over all steps, not just the end")
    p.add_argument("--no-spatial-check", action="store_true", default=None,
                   help="skip the 2N spatial-resolution certification")


def _study_config_from_args(args, equation: str) -> StudyConfig:
    file_values = read_config_file(args.config) if args.config else {}

    def pick(cli_value, key, fallback):
        if cli_value is not None:
            return cli_value
        if key in file_values:
            return file_values[key]
        return fallback

    norm_text = pick(args.norm, "norm", None)
    error_norm, norm_r = ("", None) if norm_text is None else parse_norm(norm_text)
    taus = args.taus
    if taus is not None:
        taus = parse_taus(taus)
    taus = pick(taus, "taus", parse_taus("2^-4..2^-10"))
    kwargs = dict(
        equation=equation,
        tau_list=taus,
        scheme=pick(args.scheme, "scheme", ""),
        theta=pick(args.theta, "theta", 1.0),
        delta=pick(args.delta, "delta", 0.01),
        seed=pick(args.seed, "seed", 1),
        amplitude=pick(args.amplitude, "amplitude", 0.5),
        n_modes=pick(args.modes, "modes", 1024),
        t_end=pick(getattr(args, "t_end"), "t_end", 1.0),
        error_norm=error_norm,
        ref_factor=pick(args.ref_factor, "ref_factor", 64),
        cross_val_tol=pick(args.cross_val_tol, "cross_val_tol", 1e-6),
        output_path=pick(args.out, "out", None),
        max_over_steps=bool(pick(args.max_over_steps, "max_over_steps", False)),
        spatial_check=(
            False
            if args.no_spatial_check
            else bool(file_values.get("spatial_check", True))
        ),
    )
    if norm_r is not None:
        kwargs["norm_r"] = norm_r
    if equation == "nls":
        kwargs["mu"] = pick(getattr(args, "mu", None), "mu", 1)
    else:
        kwargs["nonlinearity"] = pick(
            getattr(args, "nonlinearity", None), "nonlinearity", "quadratic"
        )
    try:
        return StudyConfig(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _print_report(report: ConvergenceReport) -> None:
    for tau, err in zip(report.taus, report.errors):
        print(f"tau {tau!r} error {err!r}")
    print(f"fitted_order {report.fitted_order}")
    print(f"r_squared {report.r_squared}")
    print(f"cross_validation_distance {report.validation['distance']!r}")
    if report.spatially_resolved is not None:
        label = "yes" if report.spatially_resolved else "NO (spatially under-resolved)"
        print(f"spatially_resolved {label} (change {report.spatial_change:.3e})")
    if report.config.get("output_path"):
        print(f"wrote {report.config['output_path']}.csv")
        print(f"wrote {report.config['output_path']}.json")


def _cmd_converge(args, equation: str) -> int:
    config = _study_config_from_args(args, equation)
    report = run_convergence_study(config)
    _print_report(report)
    return 0


def _diagnose_common(args):
    seed = args.seed if args.seed is not None else 42
    modes = args.modes if args.modes is not None else 512
    t_end = args.t_end if args.t_end is not None else 1.0
    samples = args.samples if args.samples is not None else 128
    tau_ref = args.tau_ref if args.tau_ref is not None else t_end / 4096
    amplitude = args.amplitude if args.amplitude is not None else 0.5
    theta = args.theta if args.theta is not None else 1.0
    return seed, modes, t_end, samples, tau_ref, amplitude, theta


def _cmd_diagnose_strichartz(args) -> int:
    seed, modes, t_end, samples, tau_ref, amplitude, theta = _diagnose_common(args)
    grid = TorusGrid(modes)
    datum = random_rough_field(
        RoughDataSpec(theta=theta, seed=seed, real_valued=False, amplitude=amplitude),
        grid,
    )

    def value_on(field, n_out, step):
        problem = NlsProblem(args.mu if args.mu is not None else 1, field, t_end)
        states = nls_reference_solve(problem, n_out, step)
        return strichartz_l4(trajectory_of(states, 0.0, t_end, scheme="lri",
                                           tau_ref=step, seed=seed))

    value = value_on(datum, samples, tau_ref)
    print(f"strichartz_l4 {value!r}")
    results = {"functional": "strichartz_l4", "value": value, "seed": seed,
               "modes": modes, "t_end": t_end, "samples": samples}
    if args.refine:
        refined = value_on(regrid(datum, TorusGrid(2 * modes)), 2 * samples, tau_ref)
        change = abs(refined - value) / max(value, 1e-300)
        print(f"strichartz_l4_refined {refined!r}")
        print(f"relative_change {change!r}")
        results.update({"refined_value": refined, "relative_change": change})
    if args.out:
        _atomic_write(args.out, json.dumps(results, indent=2, sort_keys=True) + "\n")
        print(f"wrote {args.out}")
    return 0


def _cmd_diagnose_nullform(args) -> int:
    seed, modes, t_end, samples, tau_ref, amplitude, theta = _diagnose_common(args)
    nl = Nonlinearity.preset(args.nonlinearity or "quadratic")
    grid = TorusGrid(modes)

    def datum_on(g: TorusGrid) -> WaveState:
        u = random_rough_field(
            RoughDataSpec(theta=theta, seed=seed, amplitude=amplitude), g
        )
        v = random_rough_field(
            RoughDataSpec(theta=max(theta - 1.0, 0.0), seed=seed + V_SEED_OFFSET,
                          amplitude=amplitude), g
        )
        return WaveState(u, v)

    base = datum_on(grid)

    def value_on(state, n_out, step):
        problem = WaveProblem(nl, state, t_end)
        states = wave_reference_solve(problem, n_out, step)
        return nullform_norm(trajectory_of(states, 0.0, t_end, scheme="corrected_lie",
                                           tau_ref=step, seed=seed))

    value = value_on(base, samples, tau_ref)
    print(f"nullform_norm {value!r}")
    results = {"functional": "nullform_norm", "value": value, "seed": seed,
               "modes": modes, "t_end": t_end, "samples": samples,
               "nonlinearity": nl.tag}
    if args.refine:
        big = TorusGrid(2 * modes)
        embedded = WaveState(regrid(base.u, big), regrid(base.v, big))
        refined = value_on(embedded, 2 * samples, tau_ref)
        change = abs(refined - value) / max(value, 1e-300)
        print(f"nullform_norm_refined {refined!r}")
        print(f"relative_change {change!r}")
        results.update({"refined_value": refined, "relative_change": change})
    if args.out:
        _atomic_write(args.out, json.dumps(results, indent=2, sort_keys=True) + "\n")
        print(f"wrote {args.out}")
    return 0


def _cmd_local_error_check(args) -> int:
    equation = args.equation
    modes = args.modes if args.modes is not None else 128
    tau = args.tau if args.tau is not None else 2.0**-6
    quad_order = args.quad_order if args.quad_order is not None else 64
    seed = args.seed if args.seed is not None else 7
    amplitude = args.amplitude if args.amplitude is not None else 0.5
    grid = TorusGrid(modes)
    n_out = 4 * quad_order
    # The micro step must leave the reference far more accurate than either
    # quadrature so the refined discrepancy is not floored by reference error.
    micro_per = 256 if equation == "nls" else 16
    tau_micro = tau / (micro_per * n_out)

    if equation == "nls":
        datum = random_rough_field(smooth_data_spec(seed, amplitude=amplitude), grid)
        states = nls_reference_solve(NlsProblem(1, datum, tau), n_out, tau_micro)
        traj = trajectory_of(states, 0.0, tau)
        pairs = [
            nls_local_error_oracle(traj, tau, 1, q)
            for q in (quad_order, 4 * quad_order)
        ]
        scale = sobolev_norm(pairs[0][0], 0.0)
        discrepancies = [
            sobolev_norm(_diff(direct, integral), 0.0) / max(scale, 1e-300)
            for direct, integral in pairs
        ]
    else:
        nl = Nonlinearity.preset(args.nonlinearity or "quadratic")
        u = random_rough_field(
            smooth_data_spec(seed, amplitude=amplitude, real_valued=True), grid
        )
        v = random_rough_field(
            smooth_data_spec(seed + V_SEED_OFFSET, amplitude=amplitude,
                             real_valued=True), grid
        )
        states = wave_reference_solve(
            WaveProblem(nl, WaveState(u, v), tau), n_out, tau_micro
        )
        traj = trajectory_of(states, 0.0, tau)
        pairs = [
            wave_local_error_oracle(traj, tau, nl, q)
            for q in (quad_order, 4 * quad_order)
        ]
        scale = wave_state_norm(pairs[0][0])
        discrepancies = [
            wave_state_norm(_diff(direct, integral)) / max(scale, 1e-300)
            for direct, integral in pairs
        ]

    improvement = discrepancies[0] / max(discrepancies[1], 1e-300)
    print(f"relative_discrepancy {discrepancies[0]!r}")
    print(f"relative_discrepancy_refined {discrepancies[1]!r}")
    print(f"improvement_factor {improvement!r}")
    if args.out:
        _atomic_write(args.out, json.dumps({
            "check": "local_error", "equation": equation, "tau": tau,
            "quad_order": quad_order,
            "relative_discrepancy": discrepancies[0],
            "relative_discrepancy_refined": discrepancies[1],
            "improvement_factor": improvement,
        }, indent=2, sort_keys=True) + "\n")
        print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="lowreg",
        description="Convergence studies and diagnostics for two low-regularity "
                    "time integrators on the periodic line.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("nls-converge", parents=[], help="Schrödinger convergence study")
    _add_study_flags(p)
    p.add_argument("--mu", type=int, choices=(-1, 1), help="nonlinearity sign")
    p.set_defaults(handler=lambda a: _cmd_converge(a, "nls"))

    p = sub.add_parser("wave-converge", help="wave convergence study")
    _add_study_flags(p)
    p.add_argument("--nonlinearity", help="preset: quadratic, cubic_minus, sine")
    p.set_defaults(handler=lambda a: _cmd_converge(a, "wave"))

    def add_diag_flags(p):
        p.add_argument("--theta", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--amplitude", type=float)
        p.add_argument("--modes", type=int)
        p.add_argument("--t-end", type=float)
        p.add_argument("--samples", type=int, help="trajectory snapshot count")
        p.add_argument("--tau-ref", type=float, help="reference step size")
        p.add_argument("--refine", action="store_true",
                       help="also report the value after doubling N and samples")
        p.add_argument("--out", help="write a JSON record here")

    p = sub.add_parser("diagnose-strichartz",
                       help="space-time L4 functional on a Schrödinger trajectory")
    add_diag_flags(p)
    p.add_argument("--mu", type=int, choices=(-1, 1))
    p.set_defaults(handler=_cmd_diagnose_strichartz)

    p = sub.add_parser("diagnose-nullform",
                       help="space-time L2 null-form functional on a wave trajectory")
    add_diag_flags(p)
    p.add_argument("--nonlinearity")
    p.set_defaults(handler=_cmd_diagnose_nullform)

    p = sub.add_parser("local-error-check",
                       help="compare a one-step error against its integral representation")
    p.add_argument("--equation", choices=("nls", "wave"), required=True)
    p.add_argument("--modes", type=int)
    p.add_argument("--tau", type=float)
    p.add_argument("--quad-order", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--amplitude", type=float)
    p.add_argument("--nonlinearity")
    p.add_argument("--out")
    p.set_defaults(handler=_cmd_local_error_check)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.handler(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 4
    except ValidationError as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return 2
    except BlowUpError as exc:
        print(f"blow-up: {exc}", file=sys.stderr)
        return 3


def console_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_entry()
