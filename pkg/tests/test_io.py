import csv
import math
import struct

import numpy as np
import pytest

from sparsephase import io as fio
from sparsephase.solver import SolverConfig, run
from sparsephase.simulate import SimulationSpec, simulate_instance


def test_complex_round_trip_bit_exact(tmp_path, rng):
    f = rng.normal(size=(128, 128)) + 1j * rng.normal(size=(128, 128))
    f[0, 0] = complex(-0.0, np.nextafter(0, 1))
    fio.write_field(tmp_path / "f.spf", f)
    g = fio.read_field(tmp_path / "f.spf")
    assert g.dtype == np.complex128 and g.tobytes() == f.tobytes()


def test_real_round_trip_and_size(tmp_path):
    fio.write_field(tmp_path / "z.spf", np.zeros((1, 1)))
    data = (tmp_path / "z.spf").read_bytes()
    assert len(data) == 25
    assert data[:8] == b"SPRFLD01" and data[8] == 0
    assert struct.unpack("<II", data[9:17]) == (1, 1)
    g = fio.read_field(tmp_path / "z.spf")
    assert g.dtype == np.float64 and g.shape == (1, 1) and g[0, 0] == 0


def test_header_layout(tmp_path):
    f = np.arange(6, dtype=float).reshape(2, 3) + 1j
    fio.write_field(tmp_path / "c.spf", f)
    data = (tmp_path / "c.spf").read_bytes()
    assert data[8] == 1 and struct.unpack("<II", data[9:17]) == (2, 3)
    assert len(data) == 17 + 6 * 16
    assert struct.unpack("<dd", data[17:33]) == (0.0, 1.0)  # real, imag interleaved


def test_bad_magic(tmp_path):
    fio.write_field(tmp_path / "f.spf", np.ones((2, 2)))
    data = bytearray((tmp_path / "f.spf").read_bytes())
    data[0:8] = b"NOTAFILE"
    (tmp_path / "f.spf").write_bytes(bytes(data))
    with pytest.raises(fio.BadMagicError, match="bad magic"):
        fio.read_field(tmp_path / "f.spf")


def test_truncated(tmp_path):
    fio.write_field(tmp_path / "f.spf", np.ones((3, 3)))
    data = (tmp_path / "f.spf").read_bytes()
    (tmp_path / "f.spf").write_bytes(data[:-1])
    with pytest.raises(fio.TruncatedPayloadError):
        fio.read_field(tmp_path / "f.spf")
    (tmp_path / "f.spf").write_bytes(data[:12])
    with pytest.raises(fio.TruncatedPayloadError):
        fio.read_field(tmp_path / "f.spf")


def test_dimension_overflow(tmp_path):
    (tmp_path / "f.spf").write_bytes(fio.HEADER.pack(fio.MAGIC, 1, 2**32 - 1, 2**32 - 1))
    with pytest.raises(fio.DimensionOverflowError):
        fio.read_field(tmp_path / "f.spf")


def test_unknown_dtype(tmp_path):
    (tmp_path / "f.spf").write_bytes(fio.HEADER.pack(fio.MAGIC, 7, 1, 1) + bytes(8))
    with pytest.raises(fio.UnknownDtypeError):
        fio.read_field(tmp_path / "f.spf")


def _trace(n, dists=False):
    sim = simulate_instance(SimulationSpec(n=16, aperture_diameter=12, sparsity_level=8, seed=2))
    return run(sim.problem(9), SolverConfig(tolerance=0, max_iterations=n, record_set_distances=dists),
               truth=sim.truth).trace


def test_trace_csv_round_trip(tmp_path):
    t = _trace(40, dists=True)
    fio.write_trace(tmp_path / "t.csv", t)
    back = fio.read_trace(tmp_path / "t.csv")
    for col in ("k", "change", "rms_support", "rms_full", "dist1", "dist2", "dist3"):
        assert getattr(back, col) == getattr(t, col)


def test_trace_csv_shape_and_empty_distances(tmp_path):
    t = _trace(1200)
    fio.write_trace(tmp_path / "t.csv", t)
    text = (tmp_path / "t.csv").read_bytes().decode()
    lines = text.split("\n")
    assert lines[-1] == "" and len(lines) - 1 == 1201
    assert "\r" not in text
    assert lines[0] == "k,change,rms_support,rms_full,dist1,dist2,dist3"
    assert lines[1].endswith(",,,")


def test_float_format_17_digits():
    x = 0.1 + 0.2
    assert float(fio.fmt_float(x)) == x
    assert fio.fmt_float(1 / 3) == "0.33333333333333331"
    assert fio.fmt_float(None) == ""


def _record(run_id="r1", **kw):
    base = dict(run_id=run_id, algorithm="srop", n=128, aperture_diameter=64, true_sparsity=319,
                s_parameter=335, photon_budget=None, seed=1, iterations_used=1200,
                termination_reason="max_iterations", final_change=1 / 3, final_rms_support=math.pi / 7,
                final_rms_full=1e-17, measured_sparsity=319, rate_estimate=None, rate_r2=None,
                wall_time_ms=12.5)
    base.update(kw)
    return fio.RunRecord(**base)


def test_run_records(tmp_path):
    path = tmp_path / "results.csv"
    fio.append_run_record(path, _record("a"))
    fio.append_run_record(path, _record("b", photon_budget=1e6, algorithm="gs"))
    rows = list(csv.reader(open(path, newline="")))
    assert tuple(rows[0]) == fio.RUN_COLUMNS
    assert rows[0] == ["run_id", "algorithm", "n", "aperture_diameter", "true_sparsity", "s_parameter",
                       "photon_budget", "seed", "iterations_used", "termination_reason", "final_change",
                       "final_rms_support", "final_rms_full", "measured_sparsity", "rate_estimate",
                       "rate_r2", "wall_time_ms"]
    assert rows[1][6] == "" and rows[2][6] == "1000000"
    back = fio.read_run_records(path)
    assert back[0].final_change == 1 / 3 and back[0].final_rms_support == math.pi / 7
    assert back[1].photon_budget == 1e6 and back[0].photon_budget is None
    assert [r.run_id for r in back] == ["a", "b"]
