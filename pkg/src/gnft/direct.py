"""Eigenvalue search with multiplicity detection, norming constants, full transform."""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from .envelope import SampledEnvelope, containment
from .scattering import (
    MAX_JET_ORDER,
    ScatteringJet,
    scatter,
    scatter_fb,
    transfer_jets,
)
from .series import (
    partition_weight,
    partitions,
    series_derivative,
    series_from_derivs,
    series_mul,
    series_pow,
    series_shift,
)


class NearDegenerateError(ArithmeticError):
    """Spectral-amplitude denominator below the stability floor."""


class SpectralSingularityError(ArithmeticError):
    """a(lambda) vanishes on the real axis."""


@dataclass(frozen=True)
class DiscreteMode:
    """Eigenvalue with multiplicity L and norming constants [Q_{L-1}, ..., Q_0]."""

    lam: complex
    multiplicity: int
    norming: np.ndarray

    def __post_init__(self):
        if self.lam.imag <= 0:
            raise ValueError("discrete eigenvalues must lie in the upper half plane")
        if self.multiplicity < 1:
            raise ValueError("multiplicity must be >= 1")
        norming = np.asarray(self.norming, dtype=complex)
        if norming.shape != (self.multiplicity,):
            raise ValueError("norming must hold exactly L constants")
        norming = norming.copy()
        norming.flags.writeable = False
        object.__setattr__(self, "norming", norming)


@dataclass(frozen=True)
class GnftSpectrum:
    """Sampled continuous spectrum plus discrete modes."""

    lam_grid: np.ndarray
    continuous: np.ndarray
    modes: tuple[DiscreteMode, ...]

    def __post_init__(self):
        grid = np.asarray(self.lam_grid, dtype=float)
        qc = np.asarray(self.continuous, dtype=complex)
        if grid.shape != qc.shape or grid.ndim != 1:
            raise ValueError("lam_grid and continuous must be matching 1-D arrays")
        if grid.size >= 2 and not np.all(np.diff(grid) > 0):
            raise ValueError("lam_grid must be strictly increasing")
        grid = grid.copy()
        qc = qc.copy()
        grid.flags.writeable = False
        qc.flags.writeable = False
        object.__setattr__(self, "lam_grid", grid)
        object.__setattr__(self, "continuous", qc)
        object.__setattr__(self, "modes", tuple(self.modes))


def empty_spectrum(lam_grid: np.ndarray | None = None) -> GnftSpectrum:
    grid = np.linspace(-1.0, 1.0, 3) if lam_grid is None else np.asarray(lam_grid, float)
    return GnftSpectrum(grid, np.zeros(grid.size, complex), ())


@dataclass(frozen=True)
class SearchConfig:
    """Newton search over a box in the upper half plane.

    mode: "auto" clusters converged roots with cluster_radius and assigns
    multiplicity by the jet-magnitude test; "simple" never merges clusters;
    "mult:L" merges everything into one eigenvalue of the given multiplicity.
    """

    box: tuple[float, float, float, float] | None = None  # re_min, re_max, im_min, im_max
    grid: tuple[int, int] = (32, 32)
    newton_tol: float = 1e-11
    max_iter: int = 60
    cluster_radius: float = 8e-3
    mult_threshold: float = 1e-4
    mode: str = "auto"
    max_multiplicity: int = 4
    simple_floor: float = 1e-6

    def __post_init__(self):
        if not self.cluster_radius > 0:
            raise ValueError("cluster_radius must be positive")
        if not 0 < self.mult_threshold < 1:
            raise ValueError("mult_threshold must lie in (0, 1)")
        _parse_mode(self.mode)


def _parse_mode(mode: str) -> tuple[str, int | None]:
    if mode == "auto":
        return "auto", None
    if mode in ("simple", "force_simple"):
        return "simple", None
    if mode.startswith("mult:"):
        L = int(mode.split(":", 1)[1])
        if L < 1:
            raise ValueError("forced multiplicity must be >= 1")
        return "mult", L
    raise ValueError(f"unknown search mode {mode!r}")


def _default_box(env: SampledEnvelope) -> tuple[float, float, float, float]:
    # The L1 norm bounds Im(lambda); the exponential factors bound what the
    # recursion can represent, so cap the seed heights accordingly.
    bw = containment(env).bandwidth
    l1 = float(np.trapezoid(np.abs(env.samples), dx=env.dt))
    t_span = abs(env.span)
    im_cap = 250.0 / max(2.0 * t_span, 1e-9)
    return (-bw, bw, 0.0, max(min(0.5 * l1, im_cap), 1e-3))


def _newton(env, seeds, cfg, deriv_level=0):
    """Batched Newton on a^(deriv_level); returns converged roots."""
    lam = np.asarray(seeds, dtype=complex).copy()
    active = np.ones(lam.size, dtype=bool)
    done = np.zeros(lam.size, dtype=bool)
    box = cfg.box if cfg.box is not None else _default_box(env)
    re_lim = 2.0 * max(abs(box[0]), abs(box[1])) + 1.0
    im_lim = 2.0 * box[3] + 1.0
    for _ in range(cfg.max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        a, _ = transfer_jets(env.samples, env.t_start, env.dt, lam[idx], deriv_level + 1)
        denom = a[deriv_level + 1]
        bad = (denom == 0) | ~np.isfinite(denom) | ~np.isfinite(a[deriv_level])
        step = np.where(bad, np.inf, a[deriv_level] / np.where(denom == 0, 1.0, denom))
        new = lam[idx] - step
        diverged = bad | ~np.isfinite(new) | (np.abs(new.real) > re_lim) | (new.imag > im_lim) | (new.imag <= 0)
        conv = (np.abs(step) < cfg.newton_tol) & ~diverged
        lam[idx] = np.where(diverged, lam[idx], new)
        done[idx[conv]] = True
        active[idx[conv | diverged]] = False
    return lam[done]


def _dedupe(roots: np.ndarray, radius: float) -> list[complex]:
    out: list[complex] = []
    for z in sorted(roots, key=lambda v: (v.imag, v.real)):
        if not any(abs(z - u) <= radius for u in out):
            out.append(complex(z))
    return out


def _cluster(roots: list[complex], radius: float) -> list[list[complex]]:
    clusters: list[list[complex]] = []
    for z in roots:
        for cl in clusters:
            if any(abs(z - u) <= radius for u in cl):
                cl.append(z)
                break
        else:
            clusters.append([z])
    return clusters


def _multiplicity(env, lam, cfg) -> int:
    """Smallest m with a non-negligible m-th Taylor contribution at the
    cluster-resolution scale: |a^(m)| delta_c^m / m! compared across orders.

    The raw derivative magnitudes cannot be compared directly because they
    grow combinatorially with the window length.
    """
    order = min(2 * cfg.max_multiplicity - 1, MAX_JET_ORDER)
    a, _ = transfer_jets(env.samples, env.t_start, env.dt, np.array([lam]), order)
    weights = cfg.cluster_radius ** np.arange(order + 1) / factorial_array(order)
    mags = np.abs(a[:, 0]) * weights
    ref = mags.max()
    if ref == 0:
        return 1
    for m in range(1, order + 1):
        if mags[m] >= cfg.mult_threshold * ref:
            return min(m, cfg.max_multiplicity)
    return cfg.max_multiplicity


def factorial_array(order: int) -> np.ndarray:
    out = np.ones(order + 1)
    for k in range(1, order + 1):
        out[k] = out[k - 1] * k
    return out


def find_modes(env: SampledEnvelope, cfg: SearchConfig | None = None) -> list[tuple[complex, int]]:
    """Locate discrete eigenvalues and their multiplicities.

    Newton iteration from a seed grid over the search box; converged roots
    are deduplicated, clustered, and assigned a multiplicity.  Returns a
    list of (lambda, L) sorted by (Im, Re); empty when nothing converges.
    """
    cfg = cfg or SearchConfig()
    kind, forced_l = _parse_mode(cfg.mode)
    box = cfg.box if cfg.box is not None else _default_box(env)
    nx, ny = cfg.grid
    res = np.linspace(box[0], box[1], nx)
    ims = box[2] + (np.arange(ny) + 0.5) / ny * (box[3] - box[2])
    seeds = (res[:, None] + 1j * ims[None, :]).ravel()
    roots = _newton(env, seeds, cfg)
    if roots.size == 0:
        return []
    tiny = max(10.0 * cfg.newton_tol, 1e-9)
    unique = _dedupe(roots, tiny)

    if kind == "simple":
        out = [(z, 1) for z in unique]
    elif kind == "mult":
        centroid = complex(np.mean(unique))
        refined = _refine(env, centroid, forced_l, cfg)
        out = [(refined, forced_l)]
    else:
        out = []
        for cl in _cluster(unique, cfg.cluster_radius):
            centroid = complex(np.mean(cl))
            # a cluster that merged k distinct roots is at least k-fold; the
            # jet test resolves exact multiples that converge to one point
            L = min(max(_multiplicity(env, centroid, cfg), len(cl)), cfg.max_multiplicity)
            out.append((_refine(env, centroid, L, cfg), L))
    return sorted(out, key=lambda item: (item[0].imag, item[0].real))


def _refine(env, lam, L, cfg) -> complex:
    """Newton on a^(L-1) restores convergence at a multiple zero."""
    if L <= 1:
        return complex(lam)
    refined = _newton(env, np.array([lam]), cfg, deriv_level=L - 1)
    return complex(refined[0]) if refined.size else complex(lam)


def continuous_spectrum(env: SampledEnvelope, lam_grid: np.ndarray) -> np.ndarray:
    """Qc = b/a on a real grid."""
    lam_grid = np.asarray(lam_grid, dtype=float)
    a, b = transfer_jets(env.samples, env.t_start, env.dt, lam_grid.astype(complex), 0)
    a0 = a[0]
    if np.any(np.abs(a0) < 1e-6):
        lam_bad = lam_grid[int(np.argmin(np.abs(a0)))]
        raise SpectralSingularityError(f"a(lambda) ~ 0 on the real axis near lambda = {lam_bad}")
    return b[0] / a0


def _floor_check(jet: ScatteringJet, level: int, floor: float, what: str):
    mags = np.abs(jet.a_derivs)
    if floor > 0 and mags[level] < floor * mags.max():
        raise NearDegenerateError(
            f"near-degenerate eigenvalue at {jet.lam}: |a^({level})| below stability floor; {what}"
        )


def norming_simple(jet: ScatteringJet, floor: float = 1e-6) -> complex:
    """Spectral amplitude b/a' of a simple eigenvalue."""
    if jet.order < 1:
        raise ValueError("jet order must be >= 1")
    _floor_check(jet, 1, floor, "use GNFT (multiplicity-aware) processing")
    return complex(jet.b_derivs[0] / jet.a_derivs[1])


def norming_double(jet: ScatteringJet, floor: float = 1e-6) -> tuple[complex, complex]:
    """(Q_1, Q_0) of a double eigenvalue from the closed-form L = 2 reduction."""
    if jet.order < 3:
        raise ValueError("norming_double needs a jet of order >= 3")
    _floor_check(jet, 2, floor, "eigenvalue is not an order-2 zero")
    a2, a3 = jet.a_derivs[2], jet.a_derivs[3]
    b0, b1 = jet.b_derivs[0], jet.b_derivs[1]
    q1 = 2j * b0 / a2
    q0 = 2.0 * b1 / a2 - (2.0 / 3.0) * b0 * a3 / a2**2
    return complex(q1), complex(q0)


def norming_general(jet: ScatteringJet, L: int, ell: int, floor: float = 1e-6) -> complex:
    """Norming constant Q_{k,ell} of an order-L eigenvalue.

    Evaluates the L'Hopital-reduced Laurent-coefficient formula: a numerator
    built from partition sums, differentiated r = L(L-ell) times, over the
    same-order derivative of a^{L-ell}.  Only a^(m) for m in [L, 2L-ell-1]
    and b^(n) for n in [0, L-ell-1] enter; the low-order a-derivatives are
    projected to the exact multiple-zero hypothesis.
    """
    if not 0 <= ell < L:
        raise ValueError("need 0 <= ell < L")
    if jet.order < 2 * L - ell - 1:
        raise ValueError(f"jet order {jet.order} insufficient; need {2 * L - ell - 1}")
    _floor_check(jet, L, floor, f"eigenvalue is not an order-{L} zero")
    r = L * (L - ell)
    a_derivs = jet.a_derivs.copy()
    a_derivs[:L] = 0.0
    a_series = series_from_derivs(a_derivs, r)
    b_series = series_from_derivs(jet.b_derivs, r)
    c_series = series_shift(b_series, L, r)  # c = (lam - lam_k)^L b

    g = np.zeros(r + 1, dtype=complex)
    for m in range(L - ell):
        c_deriv = series_derivative(c_series, L - ell - m - 1, r)
        for p in partitions(m):
            card = sum(p)
            coeff = (
                1j**ell
                * (-1) ** card
                * factorial(card)
                * partition_weight(p)
                / (factorial(m) * factorial(L - ell - m - 1))
            )
            term = series_pow(a_series, L - ell - card - 1, r)
            for i, pi in enumerate(p, start=1):
                for _ in range(pi):
                    term = series_mul(term, series_derivative(a_series, i, r), r)
            g += coeff * series_mul(c_deriv, term, r)

    lead = a_series[L]  # a^(L)/L!; an order-L zero makes x^r the leading term below
    return complex(g[r] / lead ** (L - ell))


def _jet_norming(jet: ScatteringJet, L: int, floor: float) -> np.ndarray:
    if L == 1:
        return np.array([norming_simple(jet, floor)])
    return np.array([norming_general(jet, L, ell, floor) for ell in range(L - 1, -1, -1)])


def mode_norming(env: SampledEnvelope, lam: complex, L: int, floor: float = 1e-6,
                 method: str = "auto", split_index: int | None = None) -> DiscreteMode:
    """Norming constants of one eigenvalue from its scattering jet.

    A sampled signal's residual a(lam) != 0 contaminates the plain-forward b
    with an exponentially grown term on wide windows; the forward-backward
    route is protected but carries a small dropped-term offset at near-split
    multiple eigenvalues.  "auto" evaluates both and keeps the plain result
    only when the two routes agree.
    """
    if method not in ("auto", "plain", "fb"):
        raise ValueError(f"unknown jet method {method!r}")
    order = 2 * L - 1
    norming = None
    if method in ("auto", "plain"):
        plain = _jet_norming(scatter(env, lam, order=order), L, floor)
        norming = plain
    if method in ("auto", "fb"):
        fb = _jet_norming(scatter_fb(env, lam, order=order, split_index=split_index), L, floor)
        norming = fb
    if method == "auto":
        agree = np.abs(plain - fb) <= 1e-2 * np.abs(fb)
        norming = np.where(agree.all(), plain, fb)
    return DiscreteMode(complex(lam), L, norming)


def gnft(
    env: SampledEnvelope,
    cfg: SearchConfig | None = None,
    lam_grid: np.ndarray | None = None,
    floor: float = 1e-6,
) -> GnftSpectrum:
    """Full transform: eigenvalue search, norming constants, continuous spectrum."""
    cfg = cfg or SearchConfig()
    modes = [mode_norming(env, lam, L, floor) for lam, L in find_modes(env, cfg)]
    if lam_grid is None:
        bw = max(containment(env).bandwidth, 1.0)
        lam_grid = np.linspace(-bw, bw, 513)
    qc = continuous_spectrum(env, lam_grid)
    return GnftSpectrum(lam_grid, qc, tuple(modes))
