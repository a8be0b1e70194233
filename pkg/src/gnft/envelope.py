"""Time-domain signal container, unit conversion, and energy/containment metrics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

NORMALIZED = "normalized"
PHYSICAL = "physical-ps-sqrtW"

# B_0.999 is reported as an angular width (rad per unit time) times this
# constant.  Calibrated once against the published duration/bandwidth table
# for the reference pulses; recorded in run metadata.
BANDWIDTH_CALIBRATION = 1.0


@dataclass(frozen=True)
class PhysicalParams:
    """Fiber and noise parameters in engineering units (ps, km, W)."""

    beta2: float            # group-velocity dispersion, ps^2/km (anomalous: < 0)
    gamma: float            # Kerr nonlinearity, 1/(W km)
    span_length: float      # link length, km
    n_ase: float = 0.0      # distributed-noise spectral density, W s/m
    alpha: float = 0.0      # power attenuation, 1/km
    t0: float = 1.0         # free time-scale parameter, ps

    def __post_init__(self):
        if not self.beta2 < 0:
            raise ValueError("beta2 must be negative (anomalous dispersion)")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not self.t0 > 0:
            raise ValueError("t0 must be positive")
        if self.n_ase < 0:
            raise ValueError("n_ase must be nonnegative")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if not self.span_length >= 0:
            raise ValueError("span_length must be nonnegative")

    @property
    def z_unit_km(self) -> float:
        """Physical length of one normalized distance unit: 2 T0^2 / |beta2|."""
        return 2.0 * self.t0**2 / abs(self.beta2)

    @property
    def amplitude_unit(self) -> float:
        """sqrt(W) carried by unit normalized amplitude: sqrt(|beta2|/gamma)/T0."""
        return np.sqrt(abs(self.beta2) / self.gamma) / self.t0


@dataclass(frozen=True)
class SampledEnvelope:
    """Complex field on a uniform time grid t_n = t_start + n*dt."""

    t_start: float
    dt: float
    samples: np.ndarray
    units: str = NORMALIZED

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.complex128)
        if samples.ndim != 1 or samples.size < 2:
            raise ValueError("samples must be a 1-D array of length >= 2")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        if self.units not in (NORMALIZED, PHYSICAL):
            raise ValueError(f"unknown units tag {self.units!r}")
        samples = samples.copy()
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def t(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.n)

    @property
    def span(self) -> float:
        return self.dt * (self.n - 1)

    def with_samples(self, samples: np.ndarray, units: str | None = None) -> "SampledEnvelope":
        return SampledEnvelope(self.t_start, self.dt, samples, units or self.units)

    @classmethod
    def centered(cls, samples: np.ndarray, dt: float, units: str = NORMALIZED) -> "SampledEnvelope":
        n = np.asarray(samples).size
        return cls(-0.5 * dt * (n - 1), dt, samples, units)


def centered_grid(window: float, dt: float) -> np.ndarray:
    """Uniform grid of spacing dt spanning ~window, centered on t = 0."""
    n = int(round(window / dt)) + 1
    return -0.5 * dt * (n - 1) + dt * np.arange(n)


def normalize(env: SampledEnvelope, p: PhysicalParams) -> SampledEnvelope:
    """Physical (ps, sqrt(W)) -> normalized units; t = T/T0, q = Q T0 sqrt(gamma/|beta2|)."""
    if env.units != PHYSICAL:
        raise ValueError("normalize expects an envelope in physical units")
    scale = 1.0 / p.amplitude_unit
    return SampledEnvelope(env.t_start / p.t0, env.dt / p.t0, env.samples * scale, NORMALIZED)


def denormalize(env: SampledEnvelope, p: PhysicalParams) -> SampledEnvelope:
    """Inverse of :func:`normalize`."""
    if env.units != NORMALIZED:
        raise ValueError("denormalize expects an envelope in normalized units")
    return SampledEnvelope(env.t_start * p.t0, env.dt * p.t0, env.samples * p.amplitude_unit, PHYSICAL)


def energy(env: SampledEnvelope) -> float:
    """Trapezoidal integral of |q(t)|^2."""
    return float(np.trapezoid(np.abs(env.samples) ** 2, dx=env.dt))


def _cumulative(power: np.ndarray, dx: float) -> np.ndarray:
    out = np.empty(power.size, dtype=float)
    out[0] = 0.0
    np.cumsum(0.5 * (power[1:] + power[:-1]) * dx, out=out[1:])
    return out


def _centered_width(power: np.ndarray, grid: np.ndarray, fraction: float) -> tuple[float, Callable[[float], float]]:
    """Smallest window centered on the energy centroid holding >= fraction.

    Returns the width and a callable giving the energy fraction outside a
    centered window of given length.
    """
    dx = grid[1] - grid[0]
    cum = _cumulative(power, dx)
    total = cum[-1]
    if total <= 0:
        return 0.0, lambda width: 0.0
    centroid = float(np.trapezoid(grid * power, dx=dx) / total)
    idx = np.arange(cum.size)

    def fraction_inside(width: float) -> float:
        lo = np.clip((centroid - 0.5 * width - grid[0]) / dx, 0, cum.size - 1)
        hi = np.clip((centroid + 0.5 * width - grid[0]) / dx, 0, cum.size - 1)
        return float((np.interp(hi, idx, cum) - np.interp(lo, idx, cum)) / total)

    lo, hi = 0.0, grid[-1] - grid[0]
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if fraction_inside(mid) >= fraction:
            hi = mid
        else:
            lo = mid
    return hi, lambda width: max(0.0, 1.0 - fraction_inside(width))


@dataclass(frozen=True)
class Containment:
    """Duration/bandwidth holding a given energy fraction, plus the truncation curve."""

    duration: float
    bandwidth: float
    trunc_energy: Callable[[float], float]


def containment(env: SampledEnvelope, fraction: float = 0.999) -> Containment:
    """Energy containment metrics of an envelope.

    duration: smallest interval centered on the energy centroid holding
    >= fraction of the energy.  bandwidth: same measure on the discrete
    Fourier power spectrum, in angular frequency times BANDWIDTH_CALIBRATION.
    trunc_energy(T): energy fraction outside a centered window of length T.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie in (0, 1)")
    power = np.abs(env.samples) ** 2
    duration, trunc = _centered_width(power, env.t, fraction)

    spectrum = np.fft.fftshift(np.fft.fft(env.samples))
    omega = 2.0 * np.pi * np.fft.fftshift(np.fft.fftfreq(env.n, d=env.dt))
    bwidth, _ = _centered_width(np.abs(spectrum) ** 2, omega, fraction)
    return Containment(duration, bwidth * BANDWIDTH_CALIBRATION, trunc)


def nmse(realizations: np.ndarray) -> float:
    """Normalized mean square error E[|x - mean|^2] / |mean|^2 over realizations."""
    x = np.asarray(realizations).ravel()
    if x.size < 2:
        raise ValueError("nmse needs at least two realizations")
    mean = x.mean()
    denom = abs(mean) ** 2
    if denom == 0.0:
        raise ValueError("nmse undefined: sample mean is zero")
    return float(np.mean(np.abs(x - mean) ** 2) / denom)
