# montecarlo.py
"""Esperimento stocastico completo.

Arrivi degli atomi -> emissioni per salti quantistici di ogni transito ->
fondo poissoniano -> divisore di fascio e due rivelatori (HBT).

Ogni entità ha il proprio flusso casuale, derivato da
SeedSequence(seed, spawn_key=(flusso, indice)): il risultato non dipende
dal numero di processi usati.
"""

from __future__ import annotations

import numpy as np
from joblib import Parallel, delayed
from numba import njit

from atomdyn import sample_emission_times
from beam import amplitude_envelope, sample_arrivals, transit_window
from composite import expected_signal_rate
from config import RunConfig
from correlator import rate
from formats import quantize_times
from models import AtomParams, BeamParams, ConfigError, DetectorParams, PhotonStream

# ------------------------------------------------------------------
# 1) Flussi casuali indicizzati
# ------------------------------------------------------------------
STREAM_ARRIVALS = 0
STREAM_ATOM = 1
STREAM_BACKGROUND = 2
STREAM_ROUTING = 3
STREAM_PHASE = 4

# atomi per blocco di lavoro
ATOMS_PER_CHUNK = 5_000


def substream(seed: int, stream: int, index: int = 0) -> np.random.Generator:
    """Generatore indipendente per (seed, flusso, indice)."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(stream, int(index))))


# ------------------------------------------------------------------
# 2) Sorgente: fascio di atomi
# ------------------------------------------------------------------
def transit_emissions(atom: AtomParams, beam: BeamParams, arrival: float,
                      rng: np.random.Generator) -> np.ndarray:
    """Tempi di emissione assoluti di un singolo transito iniziato in `arrival`."""
    offset, length = transit_window(beam)
    local = sample_emission_times(atom, amplitude_envelope(beam), length, rng)
    return arrival + offset + local


def _simulate_chunk(atom: AtomParams, beam: BeamParams, arrivals: np.ndarray,
                    first_index: int, seed: int) -> np.ndarray:
    pieces = []
    for i, arrival in enumerate(arrivals):
        rng = substream(seed, STREAM_ATOM, first_index + i)
        emitted = transit_emissions(atom, beam, float(arrival), rng)
        if emitted.size:
            pieces.append(emitted)
    if not pieces:
        return np.empty(0, dtype=float)
    return np.concatenate(pieces)


def _run_source(atom: AtomParams, beam: BeamParams, duration: float, seed: int,
                n_jobs: int = 1, arrivals=None) -> tuple[np.ndarray, int]:
    if duration < 100.0 * beam.t0:
        raise ConfigError("sim.duration", "serve sim.duration >= 100 * beam.t0")
    if arrivals is None:
        arrivals = sample_arrivals(beam, duration, substream(seed, STREAM_ARRIVALS))
    arrivals = np.asarray(arrivals, dtype=float)
    if atom.omega == 0.0 or arrivals.size == 0:
        return np.empty(0, dtype=float), int(arrivals.size)

    starts = range(0, arrivals.size, ATOMS_PER_CHUNK)
    tasks = [(arrivals[s:s + ATOMS_PER_CHUNK], s) for s in starts]
    if n_jobs == 1:
        parts = [_simulate_chunk(atom, beam, chunk, s, seed) for chunk, s in tasks]
    else:
        parts = Parallel(n_jobs=n_jobs)(
            delayed(_simulate_chunk)(atom, beam, chunk, s, seed) for chunk, s in tasks
        )
    times = np.concatenate(parts) if parts else np.empty(0, dtype=float)
    times = times[(times >= 0.0) & (times < duration)]
    return np.sort(times, kind="stable"), int(arrivals.size)


def simulate_source(atom: AtomParams, beam: BeamParams, duration: float, seed: int,
                    n_jobs: int = 1, arrivals=None) -> np.ndarray:
    """Tempi di emissione ordinati di tutti gli atomi del fascio in [0, duration)."""
    times, _ = _run_source(atom, beam, duration, seed, n_jobs=n_jobs, arrivals=arrivals)
    return times


# ------------------------------------------------------------------
# 3) Fondo e rivelazione
# ------------------------------------------------------------------
def add_background(times, b: float, signal_rate: float, duration: float,
                   rng: np.random.Generator) -> np.ndarray:
    """Unisce un flusso poissoniano indipendente di frequenza b * signal_rate."""
    times = np.asarray(times, dtype=float)
    if b < 0:
        raise ConfigError("background.ratio", "deve essere >= 0")
    if b == 0.0 or signal_rate <= 0.0:
        return times.copy()
    n = rng.poisson(b * signal_rate * duration)
    background = rng.random(n) * duration
    return np.sort(np.concatenate((times, background)), kind="stable")


@njit(cache=True)
def _dead_time_mask(times, dead_time):
    keep = np.zeros(times.size, dtype=np.bool_)
    last = -np.inf
    for i in range(times.size):
        if times[i] - last >= dead_time:
            keep[i] = True
            last = times[i]
    return keep


def _detect(times: np.ndarray, det: DetectorParams, duration: float,
            rng: np.random.Generator) -> np.ndarray:
    n_dark = rng.poisson(det.dark_rate * duration) if det.dark_rate > 0 else 0
    if n_dark:
        times = np.sort(np.concatenate((times, rng.random(n_dark) * duration)), kind="stable")
    if det.dead_time > 0 and times.size:
        times = times[_dead_time_mask(times, det.dead_time)]
    return times


def hbt_split(times, d1: DetectorParams, d2: DetectorParams, rng: np.random.Generator,
              duration: float) -> PhotonStream:
    """Divisore 50/50, efficienza, conteggi di buio e tempo morto per rivelatore."""
    times = np.asarray(times, dtype=float)
    route = (rng.random(times.size) >= 0.5).astype(np.int8)
    efficiency = np.where(route == 0, d1.efficiency, d2.efficiency)
    kept = rng.random(times.size) < efficiency

    channels = []
    for label, det in ((0, d1), (1, d2)):
        ch = _detect(times[kept & (route == label)], det, duration, rng)
        channels.append((ch, np.full(ch.size, label, dtype=np.int8)))

    all_times = np.concatenate([c[0] for c in channels])
    all_labels = np.concatenate([c[1] for c in channels])
    order = np.lexsort((all_labels, all_times))
    return PhotonStream(all_times[order], all_labels[order], duration)


# ------------------------------------------------------------------
# 4) Esperimento completo
# ------------------------------------------------------------------
def run_experiment(config: RunConfig, verbose: bool = False, echo=print) -> tuple[PhotonStream, dict]:
    """Esegue la catena completa; identico per stesso config + seed."""
    atom = config.atom_params()
    beam = config.beam_params()
    background = config.background()
    duration = config["sim.duration"]
    seed = config["sim.seed"]

    if verbose:
        echo(f"🔄 Simulazione sorgente: {duration:g} s, seed {seed}")
    source, n_atoms = _run_source(atom, beam, duration, seed, n_jobs=config["sim.jobs"])
    signal_rate = expected_signal_rate(atom, beam)
    merged = add_background(source, background.b, signal_rate, duration,
                            substream(seed, STREAM_BACKGROUND))
    if verbose:
        echo(f"📊 {n_atoms} atomi, {source.size} fotoni di segnale, {merged.size - source.size} di fondo")

    stream = hbt_split(merged, config.detector(1), config.detector(2),
                       substream(seed, STREAM_ROUTING), duration)
    # risoluzione del file: rileggere il file restituisce gli stessi valori
    times = quantize_times(stream.times)
    inside = times < duration
    stream = PhotonStream(times[inside], stream.detectors[inside], duration,
                          metadata={"config_digest": config.digest(), "seed": seed})

    summary = {
        "seed": seed,
        "config_digest": config.digest(),
        "duration": duration,
        "n_atoms": n_atoms,
        "n_signal": int(source.size),
        "n_background": int(merged.size - source.size),
        "n_detector0": int(np.count_nonzero(stream.detectors == 0)),
        "n_detector1": int(np.count_nonzero(stream.detectors == 1)),
        "rate": rate(stream.times, duration),
        "expected_signal_rate": signal_rate,
    }
    if verbose:
        echo(f"✅ {len(stream)} rivelazioni ({summary['n_detector0']} su D1, {summary['n_detector1']} su D2)")
    return stream, summary
