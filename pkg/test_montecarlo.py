#!/usr/bin/env python3
"""
Test dell'esperimento Monte Carlo: sorgente, fondo, HBT, catena completa.
I controlli statistici usano t0 = 1 come unità di tempo.
"""

import functools
import math
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

import montecarlo
from atomdyn import g2_atom_closed_form, photons_per_transit, steady_state
from beam import atom_number_stats, sample_arrivals
from composite import expected_signal_rate, g2_beam, mandel_q_from_g2
from config import load_config
from correlator import counting_stats, cross_correlation, rate, reduced_chi_square
from models import (
    AtomParams,
    BeamParams,
    ConfigError,
    DeadTimeArrivals,
    DetectorParams,
    HistogramSpec,
)
from montecarlo import (
    STREAM_ARRIVALS,
    add_background,
    hbt_split,
    run_experiment,
    simulate_source,
    substream,
)
from presets import T0_REF

BRIGHT = AtomParams(1.0, 25.0)
FIGURE = AtomParams(0.1, 25.0)
IDEAL = DetectorParams()


def _raises(exc_type, func, *args, **kwargs):
    try:
        func(*args, **kwargs)
    except exc_type as exc:
        return exc
    raise AssertionError(f"{exc_type.__name__} non sollevata")


@functools.lru_cache(maxsize=None)
def _source(which, duration, seed):
    atom = BRIGHT if which == "bright" else FIGURE
    return simulate_source(atom, BeamParams(0.1, 1.0), duration, seed)


def _split(times, duration, seed):
    stream = hbt_split(times, IDEAL, IDEAL, np.random.default_rng(seed), duration)
    return stream.channel(0), stream.channel(1)


# ------------------------------------------------------------------
# Flussi casuali e sorgente
# ------------------------------------------------------------------
def test_substreams_are_reproducible_and_distinct():
    a = substream(7, 1, 3).random(5)
    assert np.array_equal(a, substream(7, 1, 3).random(5))
    assert not np.array_equal(a, substream(7, 1, 4).random(5))
    assert not np.array_equal(a, substream(7, 2, 3).random(5))
    assert not np.array_equal(a, substream(8, 1, 3).random(5))


def test_zero_drive_emits_nothing():
    times = simulate_source(AtomParams(1.0, 0.0), BeamParams(0.1, 1.0), 1000.0, seed=1)
    assert times.size == 0


def test_source_is_sorted_and_inside_run():
    times = _source("bright", 2e5, 1)
    assert np.all(np.diff(times) >= 0)
    assert times[0] >= 0.0 and times[-1] < 2e5


def test_source_rate_matches_photons_per_transit():
    times = _source("bright", 2e5, 1)
    expected = expected_signal_rate(BRIGHT, BeamParams(0.1, 1.0)) * 2e5
    assert abs(times.size / expected - 1.0) < 0.02


def test_single_transit_stays_in_window():
    times = simulate_source(BRIGHT, BeamParams(0.1, 1.0), 200.0, seed=5, arrivals=np.array([10.0]))
    assert np.all((times >= 10.0) & (times < 11.0))


def test_source_same_seed_same_stream():
    beam = BeamParams(0.1, 1.0)
    first = simulate_source(BRIGHT, beam, 2000.0, seed=9)
    assert np.array_equal(first, simulate_source(BRIGHT, beam, 2000.0, seed=9))
    assert not np.array_equal(first, simulate_source(BRIGHT, beam, 2000.0, seed=10))


def test_parallel_source_is_bit_identical():
    beam = BeamParams(0.1, 1.0)
    serial = simulate_source(BRIGHT, beam, 2000.0, seed=9)
    saved = montecarlo.ATOMS_PER_CHUNK
    montecarlo.ATOMS_PER_CHUNK = 50
    try:
        parallel = simulate_source(BRIGHT, beam, 2000.0, seed=9, n_jobs=2)
    finally:
        montecarlo.ATOMS_PER_CHUNK = saved
    assert np.array_equal(serial, parallel)


def test_short_run_rejected():
    err = _raises(ConfigError, simulate_source, BRIGHT, BeamParams(0.1, 1.0), 50.0, 1)
    assert err.key == "sim.duration"


# ------------------------------------------------------------------
# Fondo e rivelatori
# ------------------------------------------------------------------
def test_background_zero_returns_copy():
    times = np.array([1.0, 2.0, 3.0])
    merged = add_background(times, 0.0, 5.0, 10.0, np.random.default_rng(0))
    assert np.array_equal(merged, times) and merged is not times


def test_background_rate():
    signal = np.sort(np.random.default_rng(1).random(20_000) * 1e4)
    merged = add_background(signal, 1.5, 2.0, 1e4, np.random.default_rng(2))
    assert np.all(np.diff(merged) >= 0)
    extra = merged.size - signal.size
    assert abs(extra - 3e4) < 5.0 * math.sqrt(3e4)
    _raises(ConfigError, add_background, signal, -0.1, 2.0, 1e4, np.random.default_rng(3))


def test_hbt_ideal_conserves_photons():
    times = np.sort(np.random.default_rng(4).random(100_000) * 1e5)
    stream = hbt_split(times, IDEAL, IDEAL, np.random.default_rng(5), 1e5)
    assert len(stream) == times.size
    assert np.array_equal(stream.times, times)
    n0 = np.count_nonzero(stream.detectors == 0)
    assert abs(n0 - 50_000) < 3.0 * math.sqrt(25_000)


def test_hbt_detector_effects():
    times = np.sort(np.random.default_rng(6).random(100_000) * 1e5)
    lossy = DetectorParams(efficiency=0.5, dead_time=3.0)
    stream = hbt_split(times, lossy, IDEAL, np.random.default_rng(7), 1e5)
    d0, d1 = stream.channel(0), stream.channel(1)
    assert np.diff(d0).min() >= 3.0
    assert d0.size < 0.5 * d1.size
    assert np.all(np.diff(stream.times) >= 0)

    dark = DetectorParams(dark_rate=100.0)
    noisy = hbt_split(np.array([]), dark, dark, np.random.default_rng(8), 100.0)
    assert abs(noisy.channel(0).size - 1e4) < 5.0 * 100.0
    assert abs(noisy.channel(1).size - 1e4) < 5.0 * 100.0


# ------------------------------------------------------------------
# Esperimento completo
# ------------------------------------------------------------------
def _bright_config(**overrides):
    values = {"sim.duration": 2000 * T0_REF, "sim.seed": 3}
    values.update(overrides)
    return load_config(preset="bright", overrides=values)


def test_run_experiment_is_deterministic():
    first, summary = run_experiment(_bright_config())
    second, _ = run_experiment(_bright_config())
    assert np.array_equal(first.times, second.times)
    assert np.array_equal(first.detectors, second.detectors)
    assert first.metadata["seed"] == 3

    other, _ = run_experiment(_bright_config(**{"sim.seed": 4}))
    assert not np.array_equal(first.times, other.times)


def test_run_experiment_summary():
    stream, summary = run_experiment(_bright_config())
    assert summary["n_detector0"] + summary["n_detector1"] == len(stream)
    assert summary["rate"] == len(stream) / summary["duration"]
    assert summary["n_background"] == 0
    assert summary["config_digest"] == stream.metadata["config_digest"]
    assert np.all(stream.times < summary["duration"])


def test_run_experiment_jobs_do_not_change_result():
    stream, summary = run_experiment(_bright_config())
    saved = montecarlo.ATOMS_PER_CHUNK
    montecarlo.ATOMS_PER_CHUNK = 50
    try:
        parallel, parallel_summary = run_experiment(_bright_config(**{"sim.jobs": 2}))
    finally:
        montecarlo.ATOMS_PER_CHUNK = saved
    assert np.array_equal(stream.times, parallel.times)
    assert summary["config_digest"] == parallel_summary["config_digest"]


# ------------------------------------------------------------------
# Confronto con le curve analitiche
# ------------------------------------------------------------------
def test_bright_stream_matches_g2_beam():
    duration = 1e6
    a, b = _split(_source("bright", duration, 11), duration, 12)
    curve = cross_correlation(a, b, HistogramSpec(0.01, 2.0), duration)
    model = g2_beam(BRIGHT, BeamParams(0.1, 1.0), 0.0, curve.tau_grid).g2
    assert reduced_chi_square(curve, model) < 2.0
    # primo bin: g_A ancora piccola, g^2 vicina a 1
    assert curve.counts[0] > 0
    assert abs(curve.g2[0] - 1.0) < 3.0 * curve.sigma[0]


def test_figure_stream_matches_bin_averaged_g2_beam():
    duration = 1e6
    a, b = _split(_source("figure", duration, 13), duration, 14)
    spec = HistogramSpec(0.1, 1.2)
    curve = cross_correlation(a, b, spec, duration)
    # media del modello sul bin: le oscillazioni hanno periodo ~ 2.5 bin
    offsets = (np.arange(20) + 0.5) / 20 - 0.5
    fine = curve.tau_grid[:, None] + offsets[None, :] * spec.bin_width
    model = g2_beam(FIGURE, BeamParams(0.1, 1.0), 0.0, fine.ravel()).g2.reshape(fine.shape).mean(axis=1)
    assert reduced_chi_square(curve, model) < 2.0


def test_dead_time_beam_is_antibunched():
    duration = 1e6
    beam = BeamParams(0.1, 1.0, DeadTimeArrivals(2.0))
    arrivals = sample_arrivals(beam, duration, substream(21, STREAM_ARRIVALS))
    times = simulate_source(BRIGHT, beam, duration, seed=21, arrivals=arrivals)
    a, b = _split(times, duration, 22)
    curve = cross_correlation(a, b, HistogramSpec(0.005, 0.5), duration)

    q_a = atom_number_stats(arrivals, 1.0, duration).q_a
    assert curve.g2[0] + 3.0 * curve.sigma[0] < 1.0
    assert abs(curve.g2[0] - (1.0 + q_a / beam.nbar)) <= 0.2


def test_counting_q_matches_integrated_g2():
    tau = np.linspace(0.0, 1.0, 4001)
    for which, atom, duration, seed in (("bright", BRIGHT, 2e5, 1), ("figure", FIGURE, 1e6, 13)):
        times = _source(which, duration, seed)
        measured = counting_stats(times, 1.0, duration)
        curve = g2_beam(atom, BeamParams(0.1, 1.0), 0.0, tau)
        predicted = mandel_q_from_g2(curve, rate(times, duration), 1.0)
        assert predicted > 0.0
        assert abs(measured.q / predicted - 1.0) < 0.10, (which, measured.q, predicted)


def test_detector_efficiency_leaves_g2_unchanged():
    duration = 1e6
    times = _source("bright", duration, 11)
    half = DetectorParams(efficiency=0.5)
    # stesso seed: stesso instradamento, il flusso ridotto è un sottoinsieme
    full = hbt_split(times, IDEAL, IDEAL, np.random.default_rng(15), duration)
    lossy = hbt_split(times, half, half, np.random.default_rng(15), duration)
    assert abs(len(lossy) / len(full) - 0.5) < 0.01

    spec = HistogramSpec(0.1, 1.5)
    ref = cross_correlation(full.channel(0), full.channel(1), spec, duration)
    curve = cross_correlation(lossy.channel(0), lossy.channel(1), spec, duration)
    assert np.all(curve.counts > 0)
    assert np.all(np.abs(curve.g2 - ref.g2) < 3.0 * curve.sigma)


def test_isolated_atoms_pair_correlation():
    # un atomo ogni 4 t0: le coppie entro 0.8 t0 vengono dallo stesso transito
    n_atoms = 50_000
    arrivals = 1.0 + 4.0 * np.arange(n_atoms)
    duration = 4.0 * n_atoms + 2.0
    times = simulate_source(BRIGHT, BeamParams(0.1, 1.0), duration, seed=31, arrivals=arrivals)
    a, b = _split(times, duration, 32)
    spec = HistogramSpec(0.05, 0.8)
    curve = cross_correlation(a, b, spec, duration)

    emission_rate = 2.0 * BRIGHT.beta * steady_state(BRIGHT).excited_population
    offsets = (np.arange(8) + 0.5) / 8 - 0.5
    tau = (curve.tau_grid[:, None] + offsets[None, :] * spec.bin_width).ravel()
    g_a = g2_atom_closed_form(BRIGHT, tau)
    # D1 prima di D2: un quarto delle coppie ordinate
    scale = 0.25 * n_atoms * emission_rate * spec.bin_width

    # coppie a ritardo tau: fotoni emessi nei primi t0 - tau, partendo dal fondamentale
    emitted = np.array([photons_per_transit(BRIGHT, None, 1.0 - t) for t in tau])
    pairs = scale * (g_a * emitted).reshape(-1, offsets.size).mean(axis=1)
    assert reduced_chi_square(curve, pairs / curve.norm) < 2.0

    # regime stazionario: g_A^2 per il triangolo (1 - tau/t0)
    triangle = scale * emission_rate * (g_a * (1.0 - tau)).reshape(-1, offsets.size).mean(axis=1)
    assert abs(curve.counts.sum() / triangle.sum() - 1.0) < 0.10


def test_figure_stream_is_super_poissonian():
    duration = 1e6
    stats = counting_stats(_source("figure", duration, 13), 1.0, duration)
    assert stats.q > 3.0 * stats.sigma_q


if __name__ == "__main__":
    for name, func in list(globals().items()):
        if name.startswith("test_") and callable(func):
            func()
            print(f"✅ {name}")
