import json

import numpy as np
import pytest

from gnft.cli import main
from gnft.direct import DiscreteMode, GnftSpectrum
from gnft.envelope import NORMALIZED, SampledEnvelope, centered_grid
from gnft.io import (
    read_envelope,
    read_spectrum,
    write_envelope_csv,
    write_envelope_json,
    write_spectrum,
)
from gnft.sweeps import run_sweep, table_pulse, write_rows_csv


def sample_envelope():
    rng = np.random.default_rng(0)
    return SampledEnvelope(-1.5, 0.25, rng.standard_normal(13) + 1j * rng.standard_normal(13))


def sample_spectrum():
    grid = np.linspace(-2.0, 2.0, 9)
    qc = np.exp(-grid**2) * (1.0 + 0.5j)
    return GnftSpectrum(grid, qc, (DiscreteMode(1.25j, 2, np.array([6.25, 40.10 + 1j])),))


class TestEnvelopeFiles:
    def test_csv_round_trip(self, tmp_path):
        env = sample_envelope()
        path = tmp_path / "env.csv"
        write_envelope_csv(path, env)
        back = read_envelope(path)
        assert back.t_start == env.t_start and back.dt == env.dt and back.units == env.units
        assert np.array_equal(back.samples, env.samples)

    def test_csv_header_format(self, tmp_path):
        env = sample_envelope()
        path = tmp_path / "env.csv"
        write_envelope_csv(path, env)
        header = path.read_text().splitlines()[0]
        assert header.startswith("# t_start=")
        assert "dt=" in header and "n=13" in header and "units=normalized" in header

    def test_json_round_trip(self, tmp_path):
        env = sample_envelope()
        path = tmp_path / "env.json"
        write_envelope_json(path, env)
        back = read_envelope(path)
        assert np.array_equal(back.samples, env.samples)

    def test_sample_count_validated(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("# t_start=0.0 dt=0.1 n=5 units=normalized\n1.0,0.0\n")
        with pytest.raises(ValueError):
            read_envelope(path)


class TestSpectrumFiles:
    def test_round_trip(self, tmp_path):
        spec = sample_spectrum()
        path = tmp_path / "spec.json"
        write_spectrum(path, spec)
        back = read_spectrum(path)
        assert np.allclose(back.lam_grid, spec.lam_grid)
        assert np.allclose(back.continuous, spec.continuous)
        assert back.modes[0].multiplicity == 2
        assert np.allclose(back.modes[0].norming, spec.modes[0].norming)

    def test_schema_layout(self, tmp_path):
        path = tmp_path / "spec.json"
        write_spectrum(path, sample_spectrum())
        doc = json.loads(path.read_text())
        assert set(doc) == {"continuous", "modes"}
        assert len(doc["continuous"][0]) == 3
        assert set(doc["modes"][0]) == {"lambda", "L", "norming"}


class TestCli:
    def test_forward_inverse_cycle(self, tmp_path):
        grid = centered_grid(16.0, 0.01)
        env = SampledEnvelope(grid[0], 0.01, table_pulse("DS", grid), NORMALIZED)
        env_path = tmp_path / "ds.csv"
        write_envelope_csv(env_path, env)
        spec_path = tmp_path / "spec.json"
        rc = main([
            "forward", str(env_path),
            "--search-box=-0.7,0.7,0.05,3.2", "--grid", "9,9",
            "--out", str(spec_path),
        ])
        assert rc == 0
        spec = read_spectrum(spec_path)
        assert len(spec.modes) == 1 and spec.modes[0].multiplicity == 2
        assert (tmp_path / "spec.meta.json").exists()

        out_path = tmp_path / "rebuilt.csv"
        rc = main([
            "inverse", str(spec_path), "--method", "closed",
            "--t-grid=-8,0.01,1601", "--out", str(out_path),
        ])
        assert rc == 0
        rebuilt = read_envelope(out_path)
        assert np.max(np.abs(rebuilt.samples - env.samples)) < 5e-3

    def test_propagate_normalized(self, tmp_path):
        grid = centered_grid(10.5866, 0.0058)
        env = SampledEnvelope(grid[0], 0.0058, table_pulse("1S", grid), NORMALIZED)
        env_path = tmp_path / "s1.csv"
        write_envelope_csv(env_path, env)
        out_path = tmp_path / "prop.csv"
        rc = main([
            "propagate", str(env_path), "--z", "0.05", "--dz", "1e-3",
            "--out", str(out_path), "--metadata", str(tmp_path / "m.json"),
        ])
        assert rc == 0
        meta = json.loads((tmp_path / "m.json").read_text())
        assert meta["command"] == "propagate"
        assert "wraparound_margin" in meta and "gnft_version" in meta

    def test_sweep_command(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"pulses": ["1S"], "ratios": [1.2, 1.6]}))
        out = tmp_path / "trunc.csv"
        rc = main(["sweep", "truncation", "--config", str(cfg), "--out", str(out)])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 3  # header + 2 rows
        assert lines[0].startswith("pulse,ratio")


class TestSweepDeterminism:
    def test_csv_byte_identical_across_runs(self, tmp_path):
        cfg = {"pulses": ["1S"], "ratios": [1.0, 1.5]}
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run_sweep("truncation", cfg, out=a)
        run_sweep("truncation", cfg, out=b)
        assert a.read_bytes() == b.read_bytes()

    def test_unknown_experiment_rejected(self):
        with pytest.raises(ValueError):
            run_sweep("warp", {})

    def test_rows_csv_formatting(self, tmp_path):
        path = tmp_path / "rows.csv"
        write_rows_csv(path, [{"a": 1.5, "b": "x"}, {"a": float("nan"), "b": "y"}])
        assert path.read_text() == "a,b\n1.5,x\nnan,y\n"
