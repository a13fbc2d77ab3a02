"""Space-time functionals and local-error integral oracles.

Operates on uniformly sampled trajectories of Schrödinger fields or wave
states.  The two ``*_local_error_oracle`` functions compare the one-step
error of a scheme measured directly (fine reference minus one step) against
an independent evaluation of its exact double-integral representation, with
quadrature nodes snapped to the trajectory's own time samples.
"""

from __future__ import annotations

import dataclasses
from typing import Iterator, Sequence

import numpy as np

from .nls_integrators import lri_step
from .torus_spectral import (
    SpectralField,
    TorusGrid,
    WaveState,
    _conj_perm,
    dealiased_product_coeffs,
    derivative,
    field_from_lines,
    field_to_lines,
    hermitian_part,
    pad_coeffs,
    spacetime_norm,
    truncate_coeffs,
    wave_state_from_lines,
    wave_state_to_lines,
)
from .wave_integrators import (
    Nonlinearity,
    _apply_block,
    _flow_entries,
    b_map,
    corrected_lie_step,
)


@dataclasses.dataclass(frozen=True, eq=False)
class Trajectory:
    """Uniformly spaced snapshots of one evolution, with provenance tags."""

    times: np.ndarray
    states: Sequence[SpectralField] | Sequence[WaveState]
    meta: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=np.float64)
        if times.size < 3:
            raise ValueError("a trajectory needs at least 3 samples")
        if times.size != len(self.states):
            raise ValueError("one state per time sample is required")
        steps = np.diff(times)
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
            raise ValueError("time samples must be uniformly spaced")
        grids = {s.grid.n_modes for s in self.states}
        if len(grids) != 1:
            raise ValueError("all states must share one grid")
        times.setflags(write=False)
        object.__setattr__(self, "times", times)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def grid(self) -> TorusGrid:
        return self.states[0].grid

    @property
    def is_wave(self) -> bool:
        return isinstance(self.states[0], WaveState)


def trajectory_of(
    states: Sequence[SpectralField] | Sequence[WaveState],
    t0: float,
    t_end: float,
    **meta,
) -> Trajectory:
    """Wrap equispaced snapshots covering [t0, t_end]."""
    times = np.linspace(t0, t_end, len(states))
    return Trajectory(times, list(states), dict(meta))


def strichartz_l4(traj: Trajectory) -> float:
    """Space-time L^4 norm of u_x over the trajectory's window."""
    if traj.is_wave:
        raise ValueError("strichartz_l4 expects a trajectory of scalar fields")
    samples = [derivative(s, 1) for s in traj.states]
    return spacetime_norm(samples, traj.dt, 4, 4)


def null_form_field(w: WaveState) -> SpectralField:
    """Pointwise v^2 - (u_x)^2, dealiased on the 2x grid.

    The difference of two squares can cancel to roundoff (single movers), so
    the result is projected back onto exact Hermitian symmetry.
    """
    ux = derivative(w.u, 1)
    coeffs = dealiased_product_coeffs(
        [w.v.coeffs, w.v.coeffs], w.grid.n_modes
    ) - dealiased_product_coeffs([ux.coeffs, ux.coeffs], w.grid.n_modes)
    return SpectralField(w.grid, hermitian_part(coeffs), True)


def nullform_norm(traj: Trajectory) -> float:
    """Space-time L^2 norm of v^2 - (u_x)^2 over the trajectory's window."""
    if not traj.is_wave:
        raise ValueError("nullform_norm expects a trajectory of wave states")
    samples = [null_form_field(w) for w in traj.states]
    return spacetime_norm(samples, traj.dt, 2, 2)


def dalembert_split(w: WaveState) -> tuple[SpectralField, SpectralField]:
    """Left/right mover data (u_x + v)/2 and (u_x - v)/2.

    For the homogeneous flow from (u, v), the first profile travels left and
    the second right: v(t, x) = left(x + t) - right(x - t).
    """
    ux = derivative(w.u, 1)
    half_sum = hermitian_part(0.5 * (ux.coeffs + w.v.coeffs))
    half_diff = hermitian_part(0.5 * (ux.coeffs - w.v.coeffs))
    return (
        SpectralField(w.grid, half_sum, True),
        SpectralField(w.grid, half_diff, True),
    )


def _quadrature_layout(traj: Trajectory, tau: float, quad_order: int):
    span = float(traj.times[-1] - traj.times[0])
    if abs(span - tau) > 1e-9 * max(tau, 1.0):
        raise ValueError("trajectory must cover exactly one step [t0, t0 + tau]")
    n_sub = len(traj.states) - 1
    if quad_order < 2:
        raise ValueError("quad_order must be >= 2")
    if quad_order > n_sub or n_sub % quad_order:
        raise ValueError(
            f"insufficient trajectory resolution: {n_sub} sub-steps cannot "
            f"host {quad_order} quadrature panels"
        )
    return n_sub // quad_order, tau / quad_order


def nls_local_error_oracle(
    traj: Trajectory, tau: float, mu: float, quad_order: int
) -> tuple[SpectralField, SpectralField]:
    """Direct one-step error versus its double-integral representation.

    direct   = u_ref(t0 + tau) - one step of the exponential integrator,
    integral = mu * int_0^tau int_0^s P(tau - sigma) D(sigma, s) dsigma ds,

    where P(t) is the free flow and D collects the three integrand terms

        D1 = mu * u^2 * (P2(sigma - s)(|u|^2 conj u) - 2|u|^2 * P2(sigma - s)(conj u)),
        D2 = -2 * (u_x)^2 * P2(sigma - s)(conj u),
        D3 = -4 * u * u_x * P2(sigma - s)(conj u_x),

    with P2(t) the multiplier of exp(2*i*t*dxx).  Both integrals use composite
    trapezoid rules whose nodes are trajectory samples; ``quad_order`` panels
    per step.
    """
    if traj.is_wave:
        raise ValueError("nls_local_error_oracle expects scalar fields")
    stride, h = _quadrature_layout(traj, tau, quad_order)
    grid = traj.grid
    n = grid.n_modes
    m = 2 * n
    k2 = grid.freqs.astype(np.float64) ** 2
    dsym = 1j * grid.freqs.astype(np.complex128)
    dsym[n // 2] = 0.0
    rev = _conj_perm(n)

    def phys(coeffs: np.ndarray) -> np.ndarray:
        return np.fft.ifft(pad_coeffs(coeffs, m)) * m

    def coeffs_of(values: np.ndarray) -> np.ndarray:
        return truncate_coeffs(np.fft.fft(values) / m, n)

    nodes = traj.states[::stride]
    fac_a: list[np.ndarray] = []  # coefficient arrays of |u|^2 conj(u)
    fac_c: list[np.ndarray] = []  # coefficients of conj(u)
    fac_e: list[np.ndarray] = []  # coefficients of conj(u_x)
    mul_a: list[np.ndarray] = []  # physical factor mu * u^2
    mul_c: list[np.ndarray] = []  # physical factor -2*(mu*u^2*|u|^2 + u_x^2)
    mul_e: list[np.ndarray] = []  # physical factor -4 * u * u_x
    for node in nodes:
        c = node.coeffs
        up = phys(c)
        uxp = phys(dsym * c)
        absu2 = np.abs(up) ** 2
        fac_a.append(coeffs_of(absu2 * np.conj(up)))
        fac_c.append(np.conj(c[rev]))
        fac_e.append(np.conj((dsym * c)[rev]))
        mul_a.append(mu * up * up)
        mul_c.append(-2.0 * (mu * up * up * absu2 + uxp * uxp))
        mul_e.append(-4.0 * up * uxp)

    # exp(2i*(sigma - s)*dxx) has multiplier exp(2i*(s - sigma)*k^2); the
    # outer propagator exp(i*(tau - sigma)*dxx) has exp(-i*(tau - sigma)*k^2).
    shift = [np.exp(2j * (d * h) * k2) for d in range(quad_order + 1)]
    prop = [np.exp(-1j * (tau - j * h) * k2) for j in range(quad_order + 1)]

    total = np.zeros(n, dtype=np.complex128)
    for l in range(1, quad_order + 1):
        inner = np.zeros(n, dtype=np.complex128)
        for j in range(l + 1):
            d = l - j
            pa = phys(shift[d] * fac_a[j])
            pc = phys(shift[d] * fac_c[j])
            pe = phys(shift[d] * fac_e[j])
            integrand = coeffs_of(mul_a[j] * pa + mul_c[j] * pc + mul_e[j] * pe)
            w_in = 0.5 * h if j in (0, l) else h
            inner += w_in * (prop[j] * integrand)
        w_out = 0.5 * h if l == quad_order else h
        total += w_out * inner
    integral = SpectralField(grid, mu * total, False)

    direct_coeffs = traj.states[-1].coeffs - lri_step(traj.states[0], tau, mu).coeffs
    return SpectralField(grid, direct_coeffs, False), integral


def wave_local_error_oracle(
    traj: Trajectory, tau: float, nl: Nonlinearity, quad_order: int
) -> tuple[WaveState, WaveState]:
    """Direct one-step error versus its double-integral representation.

    direct   = U_ref(t0 + tau) - one corrected Lie splitting step,
    integral = e^{tau A} int_0^tau (tau - s) e^{-2sA} int_0^s e^{sigma A}
               B(U(sigma)) dsigma ds,

    with B the first-order remainder map.  Quadrature as in the Schrödinger
    oracle.
    """
    if not traj.is_wave:
        raise ValueError("wave_local_error_oracle expects wave states")
    stride, h = _quadrature_layout(traj, tau, quad_order)
    grid = traj.grid

    nodes = traj.states[::stride]
    pushed: list[tuple[np.ndarray, np.ndarray]] = []
    for j, node in enumerate(nodes):
        bu = b_map(node, nl)
        flowed = _apply_block(*_flow_entries(grid, j * h), bu.u.coeffs, bu.v.coeffs)
        pushed.append(flowed)

    zeros = np.zeros(grid.n_modes, dtype=np.complex128)
    inner_u, inner_v = zeros.copy(), zeros.copy()
    total_u, total_v = zeros.copy(), zeros.copy()
    for l in range(1, quad_order + 1):
        inner_u = inner_u + 0.5 * h * (pushed[l - 1][0] + pushed[l][0])
        inner_v = inner_v + 0.5 * h * (pushed[l - 1][1] + pushed[l][1])
        s = l * h
        if l == quad_order:
            continue  # the (tau - s) weight vanishes at s = tau
        back_u, back_v = _apply_block(*_flow_entries(grid, -2.0 * s), inner_u, inner_v)
        total_u += h * (tau - s) * back_u
        total_v += h * (tau - s) * back_v
    final_u, final_v = _apply_block(*_flow_entries(grid, tau), total_u, total_v)
    integral = WaveState(
        SpectralField(grid, hermitian_part(final_u), True),
        SpectralField(grid, hermitian_part(final_v), True),
    )

    # The difference of two nearly equal real fields needs resymmetrizing:
    # its roundoff asymmetry is not small relative to the difference itself.
    stepped = corrected_lie_step(traj.states[0], tau, nl)
    direct = WaveState(
        SpectralField(
            grid, hermitian_part(traj.states[-1].u.coeffs - stepped.u.coeffs), True
        ),
        SpectralField(
            grid, hermitian_part(traj.states[-1].v.coeffs - stepped.v.coeffs), True
        ),
    )
    return direct, integral


# Trajectory files: a "trajectory" header, kind, sample count, time grid and
# meta lines, followed by one field or wave-state record per sample.


def write_trajectory(traj: Trajectory, path) -> None:
    lines = [
        "trajectory",
        f"kind {'wave' if traj.is_wave else 'nls'}",
        f"samples {len(traj.states)}",
        f"t0 {float(traj.times[0])!r}",
        f"dt {traj.dt!r}",
        f"meta {len(traj.meta)}",
    ]
    for key in sorted(traj.meta):
        lines.append(f"{key} {traj.meta[key]}")
    for state in traj.states:
        if traj.is_wave:
            lines.extend(wave_state_to_lines(state))
        else:
            lines.extend(field_to_lines(state))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def read_trajectory(path) -> Trajectory:
    with open(path, encoding="ascii") as fh:
        lines: Iterator[str] = iter(fh.read().splitlines())
    if next(lines).strip() != "trajectory":
        raise ValueError("not a trajectory file")
    kind = next(lines).split()[1]
    count = int(next(lines).split()[1])
    t0 = float(next(lines).split()[1])
    dt = float(next(lines).split()[1])
    n_meta = int(next(lines).split()[1])
    meta = {}
    for _ in range(n_meta):
        key, _, value = next(lines).partition(" ")
        meta[key] = value
    reader = wave_state_from_lines if kind == "wave" else field_from_lines
    states = [reader(lines) for _ in range(count)]
    times = t0 + dt * np.arange(count)
    return Trajectory(times, states, meta)
