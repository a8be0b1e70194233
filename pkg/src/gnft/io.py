"""File formats: envelope CSV/JSON, spectrum JSON, run metadata."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .direct import DiscreteMode, GnftSpectrum
from .envelope import BANDWIDTH_CALIBRATION, SampledEnvelope


def write_envelope_csv(path: str | Path, env: SampledEnvelope) -> None:
    lines = [
        f"# t_start={float(env.t_start)!r} dt={float(env.dt)!r} n={env.n} units={env.units}"
    ]
    for v in env.samples:
        lines.append(f"{float(v.real)!r},{float(v.imag)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_envelope(path: str | Path) -> SampledEnvelope:
    """Read either the CSV or the JSON envelope format."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        samples = np.array([complex(re, im) for re, im in doc["samples"]])
        if "n" in doc and int(doc["n"]) != samples.size:
            raise ValueError("envelope JSON: n does not match the sample count")
        return SampledEnvelope(float(doc["t_start"]), float(doc["dt"]), samples, doc["units"])
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header = lines[0]
    if not header.startswith("#"):
        raise ValueError("envelope CSV must start with a '# t_start=... dt=... n=... units=...' header")
    fields = dict(item.split("=", 1) for item in header.lstrip("# ").split())
    samples = np.array([complex(float(a), float(b)) for a, b in (ln.split(",") for ln in lines[1:])])
    if int(fields["n"]) != samples.size:
        raise ValueError("envelope CSV: n does not match the number of rows")
    return SampledEnvelope(float(fields["t_start"]), float(fields["dt"]), samples, fields["units"])


def write_envelope_json(path: str | Path, env: SampledEnvelope) -> None:
    doc = {
        "t_start": env.t_start,
        "dt": env.dt,
        "n": env.n,
        "units": env.units,
        "samples": [[v.real, v.imag] for v in env.samples],
    }
    Path(path).write_text(json.dumps(doc))


def spectrum_to_dict(spec: GnftSpectrum) -> dict:
    return {
        "continuous": [
            [float(lam), qc.real, qc.imag] for lam, qc in zip(spec.lam_grid, spec.continuous)
        ],
        "modes": [
            {
                "lambda": [m.lam.real, m.lam.imag],
                "L": m.multiplicity,
                "norming": [[q.real, q.imag] for q in m.norming],
            }
            for m in spec.modes
        ],
    }


def spectrum_from_dict(doc: dict) -> GnftSpectrum:
    cont = np.asarray(doc.get("continuous", []), dtype=float)
    if cont.size:
        grid = cont[:, 0]
        qc = cont[:, 1] + 1j * cont[:, 2]
    else:
        grid = np.linspace(-1.0, 1.0, 3)
        qc = np.zeros(3, dtype=complex)
    modes = tuple(
        DiscreteMode(
            complex(*m["lambda"]),
            int(m["L"]),
            np.array([complex(re, im) for re, im in m["norming"]]),
        )
        for m in doc.get("modes", [])
    )
    return GnftSpectrum(grid, qc, modes)


def write_spectrum(path: str | Path, spec: GnftSpectrum) -> None:
    Path(path).write_text(json.dumps(spectrum_to_dict(spec)))


def read_spectrum(path: str | Path) -> GnftSpectrum:
    return spectrum_from_dict(json.loads(Path(path).read_text()))


def run_metadata(**entries) -> dict:
    """Run provenance: package/library versions, calibration constants, parameters."""
    from . import __version__

    meta = {
        "gnft_version": __version__,
        "numpy_version": np.__version__,
        "bandwidth_calibration": BANDWIDTH_CALIBRATION,
    }
    meta.update(entries)
    return meta


def write_metadata(path: str | Path, **entries) -> dict:
    meta = run_metadata(**entries)
    Path(path).write_text(json.dumps(meta, indent=2, sort_keys=True))
    return meta
