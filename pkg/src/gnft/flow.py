"""Jordan-block evolution of the discrete spectrum, spectral-domain transforms,
and trace constants (constants of motion)."""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from .direct import DiscreteMode, GnftSpectrum


@dataclass(frozen=True)
class JordanLambda:
    """Upper-bidiagonal L x L block with -j*lambda on the diagonal and -1 above."""

    lam: complex
    size: int

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("block size must be >= 1")

    @property
    def matrix(self) -> np.ndarray:
        m = -1j * self.lam * np.eye(self.size, dtype=complex)
        m += np.diag(-np.ones(self.size - 1), 1)
        return m


def lambda_matrix(lam: complex, L: int) -> JordanLambda:
    return JordanLambda(complex(lam), int(L))


def expm_shifted_nilpotent(m: np.ndarray) -> np.ndarray:
    """Exact exponential of alpha*I + V with V nilpotent (strictly triangular).

    Any polynomial of a Jordan block has this shape, so the exponential is a
    scalar factor times a terminating series; no iterative approximation.
    """
    n = m.shape[0]
    alpha = m[0, 0]
    v = m - alpha * np.eye(n)
    out = np.eye(n, dtype=complex)
    p = np.eye(n, dtype=complex)
    for k in range(1, n):
        p = p @ v
        out += p / factorial(k)
    return np.exp(alpha) * out


def _flow_matrix(lam: complex, L: int, z: float, sign: float) -> np.ndarray:
    block = lambda_matrix(lam, L).matrix
    return expm_shifted_nilpotent(sign * (-4j) * (block @ block) * z)


def evolve(modes, z: float) -> list[DiscreteMode]:
    """Distance evolution of norming constants: row vector times e^{-4j Lambda^2 z}."""
    out = []
    for mode in modes:
        row = mode.norming @ _flow_matrix(mode.lam, mode.multiplicity, z, +1.0)
        out.append(DiscreteMode(mode.lam, mode.multiplicity, row))
    return out


def equalize(modes, z: float) -> list[DiscreteMode]:
    """Inverse of :func:`evolve`: right-multiplication by e^{+4j Lambda^2 z}."""
    out = []
    for mode in modes:
        row = mode.norming @ _flow_matrix(mode.lam, mode.multiplicity, z, -1.0)
        out.append(DiscreteMode(mode.lam, mode.multiplicity, row))
    return out


def evolve_spectrum(spec: GnftSpectrum, z: float) -> GnftSpectrum:
    """Noise-free NLSE flow of the whole spectrum."""
    qc = spec.continuous * np.exp(4j * spec.lam_grid.astype(complex) ** 2 * z)
    return GnftSpectrum(spec.lam_grid, qc, tuple(evolve(spec.modes, z)))


def _resample(grid: np.ndarray, values: np.ndarray, where: np.ndarray) -> np.ndarray:
    # linear interpolation component-wise, zero outside the sampled support
    re = np.interp(where, grid, values.real, left=0.0, right=0.0)
    im = np.interp(where, grid, values.imag, left=0.0, right=0.0)
    return re + 1j * im


def phase_shift(spec: GnftSpectrum, phi0: float) -> GnftSpectrum:
    rot = np.exp(-1j * phi0)
    modes = tuple(
        DiscreteMode(m.lam, m.multiplicity, m.norming * rot) for m in spec.modes
    )
    return GnftSpectrum(spec.lam_grid, spec.continuous * rot, modes)


def time_shift(spec: GnftSpectrum, t0: float) -> GnftSpectrum:
    qc = spec.continuous * np.exp(-2j * spec.lam_grid * t0)
    modes = []
    for m in spec.modes:
        shift = expm_shifted_nilpotent(2.0 * t0 * lambda_matrix(m.lam, m.multiplicity).matrix)
        modes.append(DiscreteMode(m.lam, m.multiplicity, m.norming @ shift))
    return GnftSpectrum(spec.lam_grid, qc, tuple(modes))


def freq_shift(spec: GnftSpectrum, omega0: float) -> GnftSpectrum:
    qc = _resample(spec.lam_grid, spec.continuous, spec.lam_grid - omega0)
    modes = tuple(
        DiscreteMode(m.lam + omega0, m.multiplicity, m.norming) for m in spec.modes
    )
    return GnftSpectrum(spec.lam_grid, qc, modes)


def dilate(spec: GnftSpectrum, T: float) -> GnftSpectrum:
    if not T > 0:
        raise ValueError("dilation factor must be positive")
    qc = _resample(spec.lam_grid, spec.continuous, T * spec.lam_grid)
    modes = []
    for m in spec.modes:
        L = m.multiplicity
        ells = np.arange(L - 1, -1, -1)  # norming is ordered [Q_{L-1}, ..., Q_0]
        modes.append(DiscreteMode(m.lam / T, L, m.norming / T ** (ells + 1)))
    return GnftSpectrum(spec.lam_grid, qc, tuple(modes))


def apply_transform(spec: GnftSpectrum, kind: str, value: float) -> GnftSpectrum:
    """Dispatch on {phase, time, freq, dilate}; see the individual functions."""
    table = {"phase": phase_shift, "time": time_shift, "freq": freq_shift, "dilate": dilate}
    if kind not in table:
        raise ValueError(f"unknown transform {kind!r}")
    return table[kind](spec, value)


def trace_constant(spec: GnftSpectrum, n: int) -> complex:
    """n-th constant of motion from the trace formula (n = 0 is the energy)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    lam = spec.lam_grid
    integrand = (2j * lam) ** n * np.log1p(np.abs(spec.continuous) ** 2)
    cont = np.trapezoid(integrand, lam) / np.pi if lam.size >= 2 else 0.0
    disc = sum(
        m.multiplicity * np.imag(m.lam ** (n + 1)) for m in spec.modes
    )
    return complex(cont + 4.0 / (n + 1) * (2j) ** n * disc)
