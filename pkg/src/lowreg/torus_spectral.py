"""Spectral core for periodic functions on the torus [0, 2*pi).

A field is stored by its Fourier coefficients ``u_hat[k]`` with

    u(x) = sum_k u_hat[k] * exp(i*k*x),      k in {-N/2, ..., N/2 - 1},

kept in FFT order.  The analysis conventions used throughout:

* Sobolev norms are plain coefficient sums, ``H^r = sqrt(sum (1+k^2)^r |u_hat|^2)``.
* Lebesgue norms use the physical measure ``dx`` on [0, 2*pi), so
  ``||u||_L2 = sqrt(2*pi) * ||u_hat||_l2``.
* Nonlinear products are evaluated on a 2x zero-padded grid and truncated
  back, which keeps all quadratic and cubic products alias-free.
"""

from __future__ import annotations

import dataclasses
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

TWO_PI = 2.0 * np.pi

HERMITIAN_TOL = 1e-12


class BlowUpError(RuntimeError):
    """Raised when an evolved state exceeds the configured growth guard."""


@dataclasses.dataclass(frozen=True)
class TorusGrid:
    """Equispaced grid x_j = 2*pi*j/N with N Fourier modes, N a power of two."""

    n_modes: int
    points: np.ndarray = dataclasses.field(init=False, repr=False, compare=False)
    freqs: np.ndarray = dataclasses.field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        n = self.n_modes
        if n < 8 or n & (n - 1):
            raise ValueError(f"n_modes must be a power of two >= 8, got {n}")
        points = TWO_PI * np.arange(n) / n
        freqs = np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)
        points.setflags(write=False)
        freqs.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "freqs", freqs)

    @property
    def nyquist_index(self) -> int:
        return self.n_modes // 2


def _conj_perm(n: int) -> np.ndarray:
    """Index permutation sending the slot of wavenumber k to that of -k."""
    return (-np.arange(n)) % n


def hermitian_defect(coeffs: np.ndarray) -> float:
    """Relative deviation of a coefficient array from Hermitian symmetry."""
    c = np.asarray(coeffs)
    scale = float(np.linalg.norm(c))
    if scale == 0.0:
        return 0.0
    defect = float(np.linalg.norm(c - np.conj(c[_conj_perm(c.size)])))
    return defect / scale


def hermitian_part(coeffs: np.ndarray) -> np.ndarray:
    """Project coefficients onto exact Hermitian symmetry.

    Differences of two nearly equal real fields carry roundoff asymmetry that
    can dominate the tiny difference itself; this projection removes it
    without changing the represented real function beyond roundoff.
    """
    c = np.asarray(coeffs, dtype=np.complex128)
    return 0.5 * (c + np.conj(c[_conj_perm(c.size)]))


@dataclasses.dataclass(frozen=True, eq=False)
class SpectralField:
    """One periodic function as Fourier coefficients in FFT order."""

    grid: TorusGrid
    coeffs: np.ndarray
    is_real: bool = False

    def __post_init__(self) -> None:
        c = np.array(self.coeffs, dtype=np.complex128)
        if c.shape != (self.grid.n_modes,):
            raise ValueError(
                f"expected {self.grid.n_modes} coefficients, got shape {c.shape}"
            )
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        if self.is_real and hermitian_defect(c) > HERMITIAN_TOL:
            raise ValueError(
                "coefficients violate Hermitian symmetry for a real field "
                f"(relative defect {hermitian_defect(c):.3e})"
            )


@dataclasses.dataclass(frozen=True, eq=False)
class WaveState:
    """Pair (u, v) of real fields on one grid; v plays the role of du/dt."""

    u: SpectralField
    v: SpectralField

    def __post_init__(self) -> None:
        if self.u.grid != self.v.grid:
            raise ValueError("u and v must share one grid")
        if not (self.u.is_real and self.v.is_real):
            raise ValueError("wave states hold real fields only")

    @property
    def grid(self) -> TorusGrid:
        return self.u.grid


@dataclasses.dataclass(frozen=True)
class RoughDataSpec:
    """Recipe for seeded random data with prescribed coefficient decay.

    The produced field has ``|u_hat[k]| = amplitude * (1+|k|)^(-theta-1/2-delta)``
    exactly, so its H^theta norm stays bounded as the grid is refined while the
    H^(theta+1) norm grows without bound.
    """

    theta: float
    seed: int
    delta: float = 0.01
    real_valued: bool = True
    amplitude: float = 1.0

    def __post_init__(self) -> None:
        if self.theta < 0:
            raise ValueError("theta must be >= 0")
        if self.delta <= 0:
            raise ValueError("delta must be > 0")
        if self.amplitude <= 0:
            raise ValueError("amplitude must be > 0")


def zero_field(grid: TorusGrid, is_real: bool = True) -> SpectralField:
    return SpectralField(grid, np.zeros(grid.n_modes, dtype=np.complex128), is_real)


def field_like(f: SpectralField, coeffs: np.ndarray, is_real: bool | None = None) -> SpectralField:
    """Wrap raw coefficients on the grid of ``f``; autodetect realness if unset."""
    if is_real is None:
        is_real = hermitian_defect(coeffs) <= HERMITIAN_TOL
    return SpectralField(f.grid, coeffs, is_real)


def pad_coeffs(c: np.ndarray, m: int) -> np.ndarray:
    """Embed FFT-order coefficients into a length-m FFT-order array (m >= len)."""
    n = c.size
    if m == n:
        return np.array(c, dtype=np.complex128)
    h = n // 2
    out = np.zeros(m, dtype=np.complex128)
    out[:h] = c[:h]
    out[m - h :] = c[h:]
    return out


def truncate_coeffs(c: np.ndarray, n: int) -> np.ndarray:
    """Restrict FFT-order coefficients to n modes, folding the +-N/2 pair.

    Folding reproduces exactly what sampling the underlying function on the
    n-point grid does to the two Nyquist-conjugate modes, so truncation of a
    Hermitian array stays Hermitian.
    """
    m = c.size
    if m == n:
        return np.array(c, dtype=np.complex128)
    h = n // 2
    out = np.empty(n, dtype=np.complex128)
    out[:h] = c[:h]
    out[h:] = c[m - h :]
    out[h] += c[h]
    return out


def to_physical(f: SpectralField, oversample: int = 1) -> np.ndarray:
    """Evaluate the trigonometric polynomial at oversample*N equispaced nodes."""
    if oversample not in (1, 2, 4):
        raise ValueError("oversample must be one of {1, 2, 4}")
    m = oversample * f.grid.n_modes
    return np.fft.ifft(pad_coeffs(f.coeffs, m)) * m


def from_physical(values: np.ndarray, grid: TorusGrid) -> SpectralField:
    """Interpolate N nodal values; inverse of ``to_physical`` at oversample 1."""
    values = np.asarray(values)
    if values.shape != (grid.n_modes,):
        raise ValueError(
            f"expected {grid.n_modes} samples, got shape {values.shape}"
        )
    coeffs = np.fft.fft(values.astype(np.complex128)) / grid.n_modes
    return SpectralField(grid, coeffs, hermitian_defect(coeffs) <= HERMITIAN_TOL)


def conjugate(f: SpectralField) -> SpectralField:
    """Complex conjugate, computed in coefficient space as conj(u_hat[-k])."""
    c = np.conj(f.coeffs[_conj_perm(f.grid.n_modes)])
    return SpectralField(f.grid, c, f.is_real)


def translate(f: SpectralField, shift: float) -> SpectralField:
    """Return x -> f(x + shift).

    For real fields the unpaired Nyquist cosine keeps only the representable
    part of its translate, cos(k(x + shift)) -> cos(k*shift) * cos(kx).
    """
    c = f.coeffs * np.exp(1j * f.grid.freqs * shift)
    if f.is_real:
        c = hermitian_part(c)
    return SpectralField(f.grid, c, f.is_real)


def derivative(f: SpectralField, order: int) -> SpectralField:
    """Spectral derivative; order 1 zeroes the Nyquist mode to stay real."""
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    k = f.grid.freqs
    if order == 1:
        symbol = 1j * k.astype(np.complex128)
        symbol[f.grid.nyquist_index] = 0.0
    else:
        symbol = -(k.astype(np.float64) ** 2)
    return SpectralField(f.grid, f.coeffs * symbol, f.is_real)


def dealiased_product_coeffs(
    coeff_arrays: Sequence[np.ndarray], n: int
) -> np.ndarray:
    """Pointwise product of 2 or 3 coefficient arrays via a 2x padded grid."""
    m = 2 * n
    phys = np.fft.ifft(pad_coeffs(coeff_arrays[0], m)) * m
    for c in coeff_arrays[1:]:
        phys = phys * (np.fft.ifft(pad_coeffs(c, m)) * m)
    return truncate_coeffs(np.fft.fft(phys) / m, n)


def dealiased_product(
    factors: Sequence[SpectralField],
    conjugate_flags: Sequence[bool] | None = None,
) -> SpectralField:
    """Alias-free pointwise product of 2 or 3 fields on one grid.

    Factors flagged in ``conjugate_flags`` enter as their complex conjugate
    (taken in coefficient space).  The product is formed on the 2x-oversampled
    grid and truncated back, which is exact for quadratic and cubic products.
    """
    if len(factors) not in (2, 3):
        raise ValueError("dealiased_product takes 2 or 3 factors")
    grid = factors[0].grid
    if any(f.grid != grid for f in factors):
        raise ValueError("all factors must share one grid")
    if conjugate_flags is None:
        conjugate_flags = [False] * len(factors)
    if len(conjugate_flags) != len(factors):
        raise ValueError("one conjugation flag per factor is required")
    arrays = [
        conjugate(f).coeffs if flag else f.coeffs
        for f, flag in zip(factors, conjugate_flags)
    ]
    coeffs = dealiased_product_coeffs(arrays, grid.n_modes)
    return SpectralField(grid, coeffs, all(f.is_real for f in factors))


def sobolev_norm(f: SpectralField, r: float) -> float:
    """Coefficient-weighted norm sqrt(sum (1+k^2)^r |u_hat[k]|^2)."""
    w = (1.0 + f.grid.freqs.astype(np.float64) ** 2) ** r
    return float(np.sqrt(np.sum(w * np.abs(f.coeffs) ** 2)))


def lebesgue_norm(f: SpectralField, p: float) -> float:
    """L^p norm on [0, 2*pi); rectangle rule on a 4x grid, exact for p in {2, 4}."""
    values = np.abs(to_physical(f, oversample=4))
    if p == np.inf:
        return float(values.max(initial=0.0))
    if p not in (2, 4):
        raise ValueError("p must be 2, 4, or inf")
    m = values.size
    return float((TWO_PI / m * np.sum(values**p)) ** (1.0 / p))


def spacetime_norm(
    samples: Sequence[SpectralField],
    dt: float,
    p_space: float,
    p_time: float,
) -> float:
    """Mixed L^p_t L^p_x norm over a uniformly sampled time interval.

    Composite trapezoid rule in time applied to per-sample spatial norms
    raised to ``p_time``, followed by the ``p_time``-th root.
    """
    if len(samples) < 2:
        raise ValueError("spacetime_norm needs at least 2 samples")
    if dt <= 0:
        raise ValueError("dt must be > 0")
    a = np.array([lebesgue_norm(s, p_space) for s in samples])
    if p_time == np.inf:
        return float(a.max())
    powered = a**p_time
    integral = dt * (powered.sum() - 0.5 * (powered[0] + powered[-1]))
    return float(integral ** (1.0 / p_time))


# Deterministic per-mode random streams.
#
# Each (seed, k, slot) triple is hashed to one 64-bit word by xoring the
# inputs against fixed odd multipliers and applying the splitmix64 finalizer
# (xor-shift / multiply avalanche).  The word, scaled by 2^-64, gives one
# uniform draw in [0, 1).  Streams are therefore splittable per wavenumber:
# refining the grid keeps every existing coefficient bit-identical.

_MIX_A = np.uint64(0xBF58476D1CE4E5B9)
_MIX_B = np.uint64(0x94D049BB133111EB)
_SEED_MULT = 0x9E3779B97F4A7C15
_SLOT_MULT = 0xD6E8FEB86659FD93
_MASK64 = (1 << 64) - 1


def _mix64(x: np.ndarray) -> np.ndarray:
    x = x.astype(np.uint64, copy=True)
    x ^= x >> np.uint64(30)
    x *= _MIX_A
    x ^= x >> np.uint64(27)
    x *= _MIX_B
    x ^= x >> np.uint64(31)
    return x


def unit_uniform(seed: int, kvals: np.ndarray, slot: int) -> np.ndarray:
    """Uniform draws in [0, 1), one per wavenumber, reproducible bit-for-bit."""
    ks = np.asarray(kvals, dtype=np.int64).astype(np.uint64)
    # Scalar words are hashed with exact Python ints (wrapping mod 2^64) so
    # numpy never sees a scalar overflow; array ops wrap silently by design.
    seed_word = ((int(seed) & _MASK64) * _SEED_MULT) & _MASK64
    slot_word = ((int(slot) & _MASK64) * _SLOT_MULT) & _MASK64
    state = np.uint64(seed_word ^ slot_word) ^ (ks * _MIX_B)
    return _mix64(state).astype(np.float64) * 2.0**-64


def random_rough_field(spec: RoughDataSpec, grid: TorusGrid) -> SpectralField:
    """Seeded field with coefficient magnitudes amplitude*(1+|k|)^(-theta-1/2-delta)."""
    n = grid.n_modes
    k = grid.freqs
    mags = spec.amplitude * (1.0 + np.abs(k).astype(np.float64)) ** (
        -(spec.theta + 0.5 + spec.delta)
    )
    if not spec.real_valued:
        phases = TWO_PI * unit_uniform(spec.seed, k, 0)
        return SpectralField(grid, mags * np.exp(1j * phases), False)
    coeffs = np.zeros(n, dtype=np.complex128)
    pos = np.arange(1, n // 2)
    phases = TWO_PI * unit_uniform(spec.seed, pos, 0)
    coeffs[pos] = mags[pos] * np.exp(1j * phases)
    coeffs[-pos] = np.conj(coeffs[pos])
    signs = np.where(unit_uniform(spec.seed, np.array([0, -n // 2]), 1) < 0.5, 1.0, -1.0)
    coeffs[0] = signs[0] * mags[0]
    coeffs[n // 2] = signs[1] * mags[n // 2]
    return SpectralField(grid, coeffs, True)


def regrid(f: SpectralField, grid: TorusGrid) -> SpectralField:
    """Re-express a field on a finer or coarser grid.

    Embedding splits a real field's Nyquist coefficient evenly over the +-N/2
    pair of the finer grid so Hermitian symmetry survives; coarsening folds
    the pair back.  Grid values at shared nodes are preserved exactly.
    """
    n_old, n_new = f.grid.n_modes, grid.n_modes
    if n_new == n_old:
        return SpectralField(grid, f.coeffs, f.is_real)
    if n_new > n_old:
        c = pad_coeffs(f.coeffs, n_new)
        nyq = f.coeffs[n_old // 2]
        c[n_new - n_old // 2] = 0.5 * nyq if f.is_real else nyq
        if f.is_real:
            c[n_old // 2] = 0.5 * np.conj(nyq)
        return SpectralField(grid, c, f.is_real)
    return SpectralField(grid, truncate_coeffs(f.coeffs, n_new), f.is_real)


# Serialization: plain-text records.  A field is written as a header line
# "field <N> <is_real>" followed by N lines "<re> <im>" in ascending
# wavenumber order -N/2 .. N/2-1; a wave state is "wavestate" plus two field
# records.  Floats are written with shortest round-trip repr.


def field_to_lines(f: SpectralField) -> list[str]:
    lines = [f"field {f.grid.n_modes} {int(f.is_real)}"]
    shifted = np.fft.fftshift(f.coeffs)
    lines.extend(f"{float(z.real)!r} {float(z.imag)!r}" for z in shifted)
    return lines


def field_from_lines(lines: Iterator[str]) -> SpectralField:
    header = next(lines).split()
    if len(header) != 3 or header[0] != "field":
        raise ValueError(f"malformed field header: {header}")
    n, is_real = int(header[1]), bool(int(header[2]))
    shifted = np.empty(n, dtype=np.complex128)
    for j in range(n):
        re, im = next(lines).split()
        shifted[j] = complex(float(re), float(im))
    return SpectralField(TorusGrid(n), np.fft.ifftshift(shifted), is_real)


def wave_state_to_lines(w: WaveState) -> list[str]:
    return ["wavestate"] + field_to_lines(w.u) + field_to_lines(w.v)


def wave_state_from_lines(lines: Iterator[str]) -> WaveState:
    header = next(lines).strip()
    if header != "wavestate":
        raise ValueError(f"malformed wave state header: {header!r}")
    return WaveState(field_from_lines(lines), field_from_lines(lines))


def write_field(f: SpectralField, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(field_to_lines(f)) + "\n")


def read_field(path) -> SpectralField:
    with open(path, encoding="ascii") as fh:
        return field_from_lines(iter(fh.read().splitlines()))


def write_wave_state(w: WaveState, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(wave_state_to_lines(w)) + "\n")


def read_wave_state(path) -> WaveState:
    with open(path, encoding="ascii") as fh:
        return wave_state_from_lines(iter(fh.read().splitlines()))
