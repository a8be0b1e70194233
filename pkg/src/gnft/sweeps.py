"""Experiment drivers: truncation/sampling/attenuation robustness sweeps, the
distributed-noise sweep, and the soliton-communication link run.

Every driver returns a list of row dicts (one per sweep point) and can write
them as CSV; identical seeds give byte-identical files.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from .channel import SsfmConfig, propagate_batch
from .comms import (
    FrameConfig,
    FrameRecord,
    PULSE_MODES,
    constellation,
    estimate_mi,
    launch_power_dbm,
    measure_tbp,
    receive_batch,
    spectral_efficiency,
    symbol_modes,
    synthesize,
    t0_for_power,
    transmit_batch,
)
from .direct import SearchConfig, find_modes, mode_norming, norming_simple
from .envelope import NORMALIZED, PHYSICAL, PhysicalParams, SampledEnvelope, centered_grid, containment
from .scattering import scatter

log = logging.getLogger(__name__)

# Reference pulse constants: one double eigenvalue, two simple ones, one simple one.
TABLE_I_CONSTANTS = {
    "DS": np.array([6.25, 40.10], dtype=complex),
    "2S": np.array([20.6956, 7.2477], dtype=complex),
    "1S": np.array([5.0], dtype=complex),
}

# Link simulation parameters (dispersion ps^2/km, nonlinearity 1/(W km),
# length km, noise density W s/m).
LINK_PARAMS = PhysicalParams(
    beta2=-21.667, gamma=1.2578, span_length=4000.0, n_ase=6.4893e-24, t0=1.0
)

TRUNCATION_RATIOS = (
    0.598170731707317, 0.74997921286031, 0.901787694013304, 1.0535961751663,
    1.20540465631929, 1.35721313747228, 1.50902161862528, 1.66083009977827,
    1.81263858093126,
)
SAMPLING_PRODUCTS = (
    0.0795378169852995, 0.159075633970599, 0.318151267941198,
    0.636302535882396, 1.27260507176479, 2.54521014352958, 5.09042028705917,
)


def table_pulse(kind: str, t_grid: np.ndarray, z: float = 0.0) -> np.ndarray:
    """Reference pulse of the given kind on a normalized grid."""
    return synthesize(kind, TABLE_I_CONSTANTS[kind], np.asarray(t_grid, float), z)


@lru_cache(maxsize=None)
def reference_metrics(kind: str) -> tuple[float, float]:
    """(duration, bandwidth) of the reference pulse at fine resolution."""
    window = 40.0 if kind != "1S" else 16.0
    grid = centered_grid(window, 0.004)
    env = SampledEnvelope(grid[0], 0.004, table_pulse(kind, grid), NORMALIZED)
    c = containment(env)
    return c.duration, c.bandwidth


def _search_cfg(mode: str = "auto") -> SearchConfig:
    # Reference eigenvalues all sit within |Re| < 0.7, Im < 3; a compact seed
    # grid keeps the sweeps fast without losing any of them.
    return SearchConfig(box=(-0.7, 0.7, 0.05, 3.2), grid=(9, 9), mode=mode, cluster_radius=8e-3)


def _nominal_etas(kind: str) -> np.ndarray:
    return np.array(sorted((lam.imag for lam, _ in PULSE_MODES[kind]), reverse=True))


def _mode_columns(kind: str, env: SampledEnvelope) -> dict:
    """Eigenvalue detection plus GNFT/NFT processing columns for one signal."""
    row: dict = {}
    found = find_modes(env, _search_cfg("auto"))
    etas = sorted((lam.imag for lam, _ in found), reverse=True)
    row["n_modes"] = len(found)
    row["multiplicity_sum"] = sum(L for _, L in found)
    nominal = _nominal_etas(kind)
    for i in range(2):
        row[f"eta{i + 1}"] = etas[i] if i < len(etas) else float("nan")
        ref = nominal[min(i, nominal.size - 1)]
        row[f"deta{i + 1}_rel"] = (etas[i] - ref) / ref if i < len(etas) else float("nan")

    # multiplicity-aware processing against the reference constants
    ref_consts = TABLE_I_CONSTANTS[kind]
    if kind == "DS":
        forced = find_modes(env, _search_cfg("mult:2"))
        if forced:
            lam, L = forced[0]
            mode = mode_norming(env, lam, L, floor=0.0)
            errs = np.abs(mode.norming - ref_consts) / np.abs(ref_consts)
        else:
            errs = np.full(2, np.nan)
        row["q_err1"], row["q_err2"] = errs.tolist()
        # simple-hypothesis processing of the same signal (unstable by design)
        simple = find_modes(env, _search_cfg("simple"))
        amps = []
        for lam, _ in sorted(simple, key=lambda m: -m[0].imag)[:2]:
            jet = scatter(env, lam, order=1)
            amps.append(norming_simple(jet, floor=0.0))
        for i in range(2):
            if i < len(amps):
                row[f"nft_q_err{i + 1}"] = abs(amps[i] - ref_consts[i]) / abs(ref_consts[i])
                row[f"nft_q_abs{i + 1}"] = abs(amps[i])
            else:
                row[f"nft_q_err{i + 1}"] = float("nan")
                row[f"nft_q_abs{i + 1}"] = float("nan")
    else:
        simple = find_modes(env, _search_cfg("simple"))
        nominal_lams = sorted((lam for lam, _ in PULSE_MODES[kind]), key=lambda v: -v.imag)
        errs = []
        for i, lam_ref in enumerate(nominal_lams):
            cand = [lam for lam, _ in simple if abs(lam - lam_ref) < 0.4]
            if not cand:
                errs.append(float("nan"))
                continue
            lam = min(cand, key=lambda v: abs(v - lam_ref))
            jet = scatter(env, lam, order=1)
            errs.append(abs(norming_simple(jet, floor=0.0) - ref_consts[i]) / abs(ref_consts[i]))
        for i in range(2):
            row[f"q_err{i + 1}"] = errs[i] if i < len(errs) else float("nan")
        row["nft_q_err1"] = row["nft_q_err2"] = float("nan")
        row["nft_q_abs1"] = row["nft_q_abs2"] = float("nan")
    return row


@dataclass(frozen=True)
class TruncationConfig:
    pulses: tuple[str, ...] = ("DS", "2S", "1S")
    ratios: tuple[float, ...] = TRUNCATION_RATIOS
    ts: float = 0.0058


def truncation_sweep(cfg: TruncationConfig = TruncationConfig()) -> list[dict]:
    """Eigenvalue detection and constant errors versus the truncation window."""
    rows = []
    for kind in cfg.pulses:
        duration, _ = reference_metrics(kind)
        for ratio in cfg.ratios:
            grid = centered_grid(ratio * duration, cfg.ts)
            env = SampledEnvelope(grid[0], cfg.ts, table_pulse(kind, grid), NORMALIZED)
            row = {"pulse": kind, "ratio": ratio, "window": ratio * duration}
            row.update(_mode_columns(kind, env))
            rows.append(row)
            log.info("truncation %s ratio %.3f: %d modes", kind, ratio, row["n_modes"])
    return rows


@dataclass(frozen=True)
class SamplingConfig:
    pulses: tuple[str, ...] = ("DS", "2S", "1S")
    products: tuple[float, ...] = SAMPLING_PRODUCTS  # values of Ts * B_0.999
    window: float = 10.5866


def sampling_sweep(cfg: SamplingConfig = SamplingConfig()) -> list[dict]:
    """Same processing columns versus the sampling period at a wide window."""
    rows = []
    for kind in cfg.pulses:
        _, bandwidth = reference_metrics(kind)
        for product in cfg.products:
            ts = product / bandwidth
            grid = centered_grid(cfg.window, ts)
            env = SampledEnvelope(grid[0], ts, table_pulse(kind, grid), NORMALIZED)
            row = {"pulse": kind, "ts_bandwidth": product, "ts": ts}
            row.update(_mode_columns(kind, env))
            rows.append(row)
            log.info("sampling %s Ts*B %.4f: %d modes", kind, product, row["n_modes"])
    return rows


@dataclass(frozen=True)
class AttenuationConfig:
    pulses: tuple[str, ...] = ("DS", "2S", "1S")
    alpha: float = 0.4646
    z_points: tuple[float, ...] = tuple(np.round(np.arange(0.0, 1.0001, 0.05), 4))
    ts: float = 0.0058
    window: float = 10.5866
    dz: float = 1e-3


def attenuation_sweep(cfg: AttenuationConfig = AttenuationConfig()) -> list[dict]:
    """Eigenvalues and constant magnitudes along a lossy normalized link."""
    rows = []
    ssfm = SsfmConfig(dz=cfg.dz, units=NORMALIZED, alpha=cfg.alpha)
    for kind in cfg.pulses:
        grid = centered_grid(cfg.window, cfg.ts)
        q = table_pulse(kind, grid)[None, :]
        z_prev = 0.0
        for z in cfg.z_points:
            if z > z_prev:
                q = propagate_batch(q, cfg.ts, z - z_prev, ssfm)
                z_prev = z
            env = SampledEnvelope(grid[0], cfg.ts, q[0], NORMALIZED)
            row = {"pulse": kind, "z": z}
            found = find_modes(env, _search_cfg("auto"))
            etas = sorted((lam.imag for lam, _ in found), reverse=True)
            row["n_modes"] = len(found)
            for i in range(2):
                row[f"eta{i + 1}"] = etas[i] if i < len(etas) else float("nan")
            if kind == "DS":
                forced = find_modes(env, _search_cfg("mult:2"))
                if forced:
                    mode = mode_norming(env, forced[0][0], 2, floor=0.0)
                    row["q_abs1"], row["q_abs2"] = np.abs(mode.norming).tolist()
                else:
                    row["q_abs1"] = row["q_abs2"] = float("nan")
                amps = []
                for lam, _ in sorted(find_modes(env, _search_cfg("simple")), key=lambda m: -m[0].imag)[:2]:
                    amps.append(abs(norming_simple(scatter(env, lam, order=1), floor=0.0)))
                row["nft_q_abs1"] = amps[0] if amps else float("nan")
                row["nft_q_abs2"] = amps[1] if len(amps) > 1 else float("nan")
            else:
                amps = []
                nominal_lams = sorted((lam for lam, _ in PULSE_MODES[kind]), key=lambda v: -v.imag)
                for lam_ref in nominal_lams:
                    cand = [lam for lam, _ in found if abs(lam - lam_ref) < 0.45]
                    if cand:
                        lam = min(cand, key=lambda v: abs(v - lam_ref))
                        amps.append(abs(norming_simple(scatter(env, lam, order=1), floor=0.0)))
                    else:
                        amps.append(float("nan"))
                row["q_abs1"] = amps[0]
                row["q_abs2"] = amps[1] if len(amps) > 1 else float("nan")
                row["nft_q_abs1"] = row["nft_q_abs2"] = float("nan")
            rows.append(row)
            log.info("attenuation %s z=%.2f: %d modes", kind, z, row["n_modes"])
    return rows


@dataclass(frozen=True)
class NoiseConfig:
    pulses: tuple[str, ...] = ("DS", "2S", "1S")
    powers_dbm: tuple[float, ...] = (-37.0, -29.5, -22.0, -14.5, -7.0)
    realizations: int = 200
    seed: int = 2024
    dz_km: float = 2.0
    params: PhysicalParams = LINK_PARAMS
    frame: FrameConfig = field(default_factory=FrameConfig)


def noise_sweep(cfg: NoiseConfig = NoiseConfig()) -> list[dict]:
    """NMSE of eigenvalues and equalized constants under distributed noise.

    The launch power is set through the free time-scale parameter; each
    realization owns a counter-based noise stream.
    """
    rows = []
    grid = cfg.frame.t_grid
    for kind_idx, kind in enumerate(cfg.pulses):
        q_norm = table_pulse(kind, grid)
        for p_idx, power in enumerate(cfg.powers_dbm):
            t0 = t0_for_power(kind, power, cfg.params, cfg.frame)
            params = replace(cfg.params, t0=t0)
            qs = np.tile(q_norm * params.amplitude_unit, (cfg.realizations, 1))
            frames = kind_idx * 1_000_000 + p_idx * 10_000 + np.arange(cfg.realizations)
            ssfm = SsfmConfig(dz=cfg.dz_km, seed=cfg.seed, noise=True, units=PHYSICAL)
            out = propagate_batch(qs, cfg.frame.ts * t0, params.span_length, ssfm, params, frames)
            rx = receive_batch(out, grid[0] * t0, cfg.frame.ts * t0, kind, params.span_length, params)
            ok = ~rx.erased
            row = {
                "pulse": kind,
                "power_dbm": power,
                "t0_ps": t0,
                "z_norm": params.span_length / params.z_unit_km,
                "erasures": int(rx.erased.sum()),
            }
            from .envelope import nmse as _nmse

            etas = np.sort(rx.lams[ok].imag, axis=1)[:, ::-1]
            for i in range(2):
                row[f"nmse_eta{i + 1}"] = (
                    _nmse(etas[:, i]) if i < etas.shape[1] else float("nan")
                )
            for i in range(rx.constants.shape[1]):
                row[f"nmse_q{i + 1}"] = _nmse(rx.constants[ok, i])
            if rx.constants.shape[1] == 1:
                row["nmse_q2"] = float("nan")
            rows.append(row)
            log.info("noise %s %.1f dBm: erasures %d", kind, power, row["erasures"])
    return rows


@dataclass(frozen=True)
class LinkConfig:
    pulses: tuple[str, ...] = ("2S", "DS", "1S")
    powers_dbm: tuple[float, ...] = (-13.443350238481, -10.4330502818412, -7.42275032520141)
    frames: int = 512
    seed: int = 77
    dz_km: float = 2.0
    estimator: str = "gaussian_aux"
    params: PhysicalParams = LINK_PARAMS
    # finer frame sampling than the robustness studies: keeps the receiver's
    # discretization bias far below the ring/phase decision distances
    frame: FrameConfig = field(default_factory=lambda: FrameConfig(ts=0.02))
    noise: bool = True


def link_run(cfg: LinkConfig = LinkConfig()) -> list[dict]:
    """End-to-end link: random symbols, noisy propagation, equalizing receiver,
    mutual information and spectral efficiency per launch power."""
    rows = []
    for kind_idx, kind in enumerate(cfg.pulses):
        spec = constellation(kind)
        for p_idx, power in enumerate(cfg.powers_dbm):
            t0 = t0_for_power(kind, power, cfg.params, cfg.frame)
            params = replace(cfg.params, t0=t0)
            sym_rng = np.random.Generator(
                np.random.Philox(np.random.SeedSequence((cfg.seed, 7_777, kind_idx, p_idx)))
            )
            indices = sym_rng.integers(0, spec.alphabet_size, cfg.frames)
            qs, t_start, dt = transmit_batch(indices, kind, params, cfg.frame)
            frames = kind_idx * 1_000_000 + p_idx * 10_000 + np.arange(cfg.frames)
            ssfm = SsfmConfig(dz=cfg.dz_km, seed=cfg.seed, noise=cfg.noise, units=PHYSICAL)
            out = propagate_batch(qs, dt, params.span_length, ssfm, params, frames)
            rx = receive_batch(out, t_start, dt, kind, params.span_length, params)
            record = FrameRecord(
                tx_indices=indices,
                tx_constants=spec.points(indices),
                rx_constants=rx.constants,
                power_dbm=launch_power_dbm(kind, params, cfg.frame),
                seed=cfg.seed,
                erased=rx.erased,
            )
            mi = estimate_mi(record, spec, cfg.estimator)
            z_n = params.span_length / params.z_unit_km
            tbp = measure_tbp(kind, cfg.frame, z_values=(0.0, 0.5 * z_n, z_n))
            ok = ~rx.erased
            decided = spec.nearest(rx.constants[ok])
            errors = int((decided != indices[ok]).sum())
            rows.append(
                {
                    "pulse": kind,
                    "power_dbm": power,
                    "t0_ps": t0,
                    "z_norm": z_n,
                    "frames": cfg.frames,
                    "erasure_rate": float(rx.erased.mean()),
                    "symbol_errors": errors,
                    "mi_bits": mi,
                    "tbp": tbp,
                    "se": spectral_efficiency(mi, tbp),
                }
            )
            log.info("link %s %.1f dBm: MI %.2f bits, SE %.3f", kind, power, mi, rows[-1]["se"])
    return rows


def noiseless_symbol_errors(
    kind: str = "DS",
    power_dbm: float = -10.4330502818412,
    dz_km: float = 5.0,
    params: PhysicalParams = LINK_PARAMS,
    frame: FrameConfig = FrameConfig(ts=0.02),
    batch: int = 512,
) -> int:
    """Hard-decision errors over the whole alphabet after noise-free propagation."""
    spec = constellation(kind)
    t0 = t0_for_power(kind, power_dbm, params, frame)
    params = replace(params, t0=t0)
    ssfm = SsfmConfig(dz=dz_km, noise=False, units=PHYSICAL)
    errors = 0
    for start in range(0, spec.alphabet_size, batch):
        indices = np.arange(start, min(start + batch, spec.alphabet_size))
        qs, t_start, dt = transmit_batch(indices, kind, params, frame)
        out = propagate_batch(qs, dt, params.span_length, ssfm, params)
        rx = receive_batch(out, t_start, dt, kind, params.span_length, params)
        errors += int(rx.erased.sum())
        ok = ~rx.erased
        errors += int((spec.nearest(rx.constants[ok]) != indices[ok]).sum())
    return errors


_EXPERIMENTS = {
    "truncation": (TruncationConfig, truncation_sweep),
    "sampling": (SamplingConfig, sampling_sweep),
    "attenuation": (AttenuationConfig, attenuation_sweep),
    "noise": (NoiseConfig, noise_sweep),
    "link": (LinkConfig, link_run),
}


def run_sweep(experiment: str, config: dict | None = None, out: str | Path | None = None) -> list[dict]:
    """Dispatch one experiment; config keys override the dataclass defaults."""
    if experiment not in _EXPERIMENTS:
        raise ValueError(f"unknown experiment {experiment!r}; pick from {sorted(_EXPERIMENTS)}")
    cfg_cls, runner = _EXPERIMENTS[experiment]
    overrides = dict(config or {})
    if "pulses" in overrides:
        overrides["pulses"] = tuple(overrides["pulses"])
    for key in ("ratios", "products", "z_points", "powers_dbm"):
        if key in overrides:
            overrides[key] = tuple(overrides[key])
    if "params" in overrides and isinstance(overrides["params"], dict):
        overrides["params"] = PhysicalParams(**overrides["params"])
    if "frame" in overrides and isinstance(overrides["frame"], dict):
        overrides["frame"] = FrameConfig(**overrides["frame"])
    cfg = cfg_cls(**overrides)
    rows = runner(cfg)
    if out is not None:
        write_rows_csv(out, rows)
    return rows


def write_rows_csv(path: str | Path, rows: list[dict]) -> None:
    """Deterministic CSV: stable column order, repr-exact floats."""
    if not rows:
        Path(path).write_text("")
        return
    columns = list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(c)) for c in columns])


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)
