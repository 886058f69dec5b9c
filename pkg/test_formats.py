#!/usr/bin/env python3
"""
Test dei formati su file, della configurazione e dei preset.
"""

import sys
import tempfile
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

from config import DEFAULTS, load_config, parse_config_text
from formats import (
    TIMESTAMP_HEADER,
    FormatError,
    quantize_times,
    read_curve,
    read_timestamps,
    write_curve,
    write_timestamps,
)
from models import ConfigError, DeadTimeArrivals, NumericFailure, PhotonStream
from presets import PRESETS, T0_REF, get_all_presets, get_description, get_preset_by_name, is_valid_preset


def _raises(exc_type, func, *args, **kwargs):
    try:
        func(*args, **kwargs)
    except exc_type as exc:
        return exc
    raise AssertionError(f"{exc_type.__name__} non sollevata")


def _write(directory, name, text):
    path = Path(directory) / name
    path.write_text(text, encoding="utf-8")
    return path


# ------------------------------------------------------------------
# File dei tempi di arrivo
# ------------------------------------------------------------------
def test_timestamps_round_trip():
    rng = np.random.default_rng(0)
    times = quantize_times(np.sort(rng.random(500) * 3.5))
    detectors = rng.integers(0, 2, size=500)
    with tempfile.TemporaryDirectory() as tmp:
        path = write_timestamps(Path(tmp) / "a.txt", PhotonStream(times, detectors, 3.5))
        back = read_timestamps(path, 3.5)
        assert np.array_equal(back.times, times)
        assert np.array_equal(back.detectors, detectors)
        assert back.duration == 3.5

        again = write_timestamps(Path(tmp) / "b.txt", back)
        assert path.read_bytes() == again.read_bytes()


def test_timestamps_layout():
    stream = PhotonStream(np.array([0.5, 1.25]), np.array([1, 0]), 2.0)
    with tempfile.TemporaryDirectory() as tmp:
        path = write_timestamps(Path(tmp) / "s.txt", stream)
        lines = path.read_text(encoding="utf-8").splitlines()
    assert lines == [TIMESTAMP_HEADER, "0.500000000000,1", "1.250000000000,0"]


def test_timestamps_default_duration_and_empty():
    with tempfile.TemporaryDirectory() as tmp:
        path = _write(tmp, "s.txt", f"{TIMESTAMP_HEADER}\n0.1,0\n0.4,1\n")
        stream = read_timestamps(path)
        assert stream.duration == np.nextafter(0.4, np.inf)
        assert stream.times[-1] < stream.duration
        assert read_timestamps(path, 10.0).duration == 10.0

        empty = _write(tmp, "e.txt", f"{TIMESTAMP_HEADER}\n")
        stream = read_timestamps(empty)
        assert len(stream) == 0 and stream.duration == 0.0


def test_timestamps_malformed():
    bad = {
        "header.txt": "# other v1\n0.1,0\n",
        "detector.txt": f"{TIMESTAMP_HEADER}\n0.1,2\n",
        "order.txt": f"{TIMESTAMP_HEADER}\n0.2,0\n0.1,1\n",
        "fields.txt": f"{TIMESTAMP_HEADER}\n0.1\n",
        "number.txt": f"{TIMESTAMP_HEADER}\nabc,0\n",
        "negative.txt": f"{TIMESTAMP_HEADER}\n-0.1,0\n",
    }
    with tempfile.TemporaryDirectory() as tmp:
        for name, text in bad.items():
            err = _raises(FormatError, read_timestamps, _write(tmp, name, text))
            assert isinstance(err, OSError), name
        _raises(OSError, read_timestamps, Path(tmp) / "missing.txt")


def test_timestamps_not_utf8():
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "bin.txt"
        path.write_bytes(f"{TIMESTAMP_HEADER}\n1.0,0\n".encode("utf-8") + b"\xff\xfe,1\n")
        err = _raises(FormatError, read_timestamps, path)
        assert "UTF-8" in str(err)
        curve = Path(tmp) / "bin.csv"
        curve.write_bytes(b"tau_s,g2\n\xff,1.0\n")
        _raises(FormatError, read_curve, curve)


def test_timestamps_beyond_duration():
    with tempfile.TemporaryDirectory() as tmp:
        path = _write(tmp, "s.txt", f"{TIMESTAMP_HEADER}\n0.5,0\n2.0,1\n")
        err = _raises(FormatError, read_timestamps, path, 2.0)
        assert ":3:" in str(err)
        assert len(read_timestamps(path, 2.5)) == 2


# ------------------------------------------------------------------
# Curve CSV
# ------------------------------------------------------------------
def test_curve_round_trip():
    columns = {
        "sample": np.arange(4),
        "tau_s": np.array([0.0, 1e-7, 2.5e-7, 1 / 3]),
        "g2": np.array([1.0, 6.8, 0.1 + 0.2, 1.0]),
    }
    with tempfile.TemporaryDirectory() as tmp:
        path = write_curve(Path(tmp) / "c.csv", columns)
        assert path.read_text(encoding="utf-8").splitlines()[0] == "sample,tau_s,g2"
        back = read_curve(path)
    assert list(back) == ["sample", "tau_s", "g2"]
    assert back["sample"].dtype == np.int64
    assert np.array_equal(back["sample"], columns["sample"])
    assert np.array_equal(back["tau_s"], columns["tau_s"])
    assert np.array_equal(back["g2"], columns["g2"])


def test_curve_rejects_bad_columns():
    with tempfile.TemporaryDirectory() as tmp:
        _raises(NumericFailure, write_curve, Path(tmp) / "n.csv", {"g2": np.array([1.0, np.nan])})
        _raises(ValueError, write_curve, Path(tmp) / "l.csv", {"a": [1.0, 2.0], "b": [1.0]})
        _raises(FormatError, read_curve, _write(tmp, "r.csv", "a,b\n1.0\n"))
        _raises(FormatError, read_curve, _write(tmp, "v.csv", ""))


# ------------------------------------------------------------------
# Configurazione
# ------------------------------------------------------------------
def test_defaults_are_valid():
    cfg = load_config()
    assert cfg["beam.nbar"] == 0.1
    assert abs(cfg.atom_params().omega * T0_REF - 25.0) < 1e-9
    assert cfg.histogram_spec().n_bins == 200


def test_config_file_parsing():
    text = (
        "# parametri di prova\n"
        "atom.beta = 2.0e4\n"
        "beam.arrival_model = deadtime\n"
        "beam.dead_time = 7e-5\n"
        "corr.signed = true\n"
        "sim.seed = 42\n"
    )
    values = parse_config_text(text)
    assert values == {
        "atom.beta": 2.0e4,
        "beam.arrival_model": "deadtime",
        "beam.dead_time": 7e-5,
        "corr.signed": True,
        "sim.seed": 42,
    }
    with tempfile.TemporaryDirectory() as tmp:
        cfg = load_config(_write(tmp, "run.cfg", text))
    assert isinstance(cfg.beam_params().arrival_model, DeadTimeArrivals)
    assert cfg.histogram_spec().signed


def test_config_errors_name_the_key():
    cases = {
        "atom.gamma = 1.0\n": "atom.gamma",
        "atom.beta = fast\n": "atom.beta",
        "sim.seed = 1.5\n": "sim.seed",
        "beam.envelope = lorentz\n": "beam.envelope",
    }
    for text, key in cases.items():
        assert _raises(ConfigError, parse_config_text, text).key == key

    assert _raises(ConfigError, load_config, overrides={"sim.duration": 0.0}).key == "sim.duration"
    assert _raises(ConfigError, load_config, overrides={"atom.beta": -1.0}).key == "atom.beta"
    assert _raises(ConfigError, load_config, preset="nope").key == "preset"
    infeasible = {"beam.arrival_model": "deadtime", "beam.dead_time": 1.0, "beam.nbar": 0.1}
    assert _raises(ConfigError, load_config, overrides=infeasible).key == "beam.dead_time"
    _raises(OSError, load_config, "/nonexistent/run.cfg")

    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "bin.cfg"
        path.write_bytes(b"atom.beta = 1\xff\n")
        assert _raises(ConfigError, load_config, path).key == "config"


def test_overrides_and_presets():
    cfg = load_config(preset="subpoissonian", overrides={"sim.seed": 5, "sim.jobs": None})
    assert cfg["sim.seed"] == 5 and cfg["sim.jobs"] == DEFAULTS["sim.jobs"]
    assert cfg["beam.arrival_model"] == "deadtime"
    assert cfg.beam_params().arrival_model.delta == 2.0 * T0_REF

    with tempfile.TemporaryDirectory() as tmp:
        # il file vince sul preset
        cfg = load_config(_write(tmp, "run.cfg", "background.ratio = 0.25\n"), preset="figure1_bg")
    assert cfg.background().b == 0.25


def test_digest():
    base = load_config(preset="bright")
    assert base.digest() == load_config(preset="bright").digest()
    assert base.digest() == load_config(preset="bright", overrides={"sim.jobs": 4}).digest()
    assert base.digest() != load_config(preset="bright", overrides={"sim.seed": 1}).digest()
    assert base.digest() != load_config(preset="figure1").digest()


def test_preset_lookup():
    names = [name for name, _ in get_all_presets()]
    assert names == list(PRESETS)
    assert {"figure1", "figure1_bg", "bright", "subpoissonian"} <= set(names)
    assert is_valid_preset("bright") and not is_valid_preset("dim")
    assert get_description("dim") == "Preset sconosciuto"
    values = get_preset_by_name("figure1_bg")
    values["background.ratio"] = 9.0
    assert get_preset_by_name("figure1_bg")["background.ratio"] == 0.5
    _raises(KeyError, get_preset_by_name, "dim")
    for name in names:
        load_config(preset=name)


if __name__ == "__main__":
    for name, func in list(globals().items()):
        if name.startswith("test_") and callable(func):
            func()
            print(f"✅ {name}")
