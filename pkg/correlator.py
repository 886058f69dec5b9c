# correlator.py
"""Analisi dei tempi di arrivo dei fotoni.

* istogramma di correlazione incrociata D1 x D2 con finestra scorrevole
  a due puntatori (costo lineare negli eventi per l'occupazione media
  della finestra), normalizzato a g^2(tau) con barre d'errore poissoniane
* statistica dei conteggi (Q di Mandel) e frequenze

L'accumulo può essere diviso in blocchi paralleli: i conteggi sono
interi e la somma dei blocchi coincide bit per bit con il calcolo seriale.
"""

from __future__ import annotations

import math

import numpy as np
from joblib import Parallel, delayed
from numba import njit

from models import (
    ConfigError,
    CorrelationCurve,
    CountingStats,
    EmptyStreamError,
    HistogramSpec,
)

# eventi di D1 per blocco nell'accumulo parallelo
CHUNK_EVENTS = 200_000


# ------------------------------------------------------------------
# 1) Conteggio delle coppie
# ------------------------------------------------------------------
@njit(cache=True)
def _pair_counts(a, b, bin_width, lag_lo, n_bins, lo_start):
    counts = np.zeros(n_bins, dtype=np.int64)
    lag_hi = lag_lo + n_bins * bin_width
    nb = b.size
    lo = lo_start
    for i in range(a.size):
        ai = a[i]
        while lo < nb and b[lo] - ai < lag_lo:
            lo += 1
        j = lo
        while j < nb:
            d = b[j] - ai
            if d >= lag_hi:
                break
            k = int(math.floor((d - lag_lo) / bin_width))
            if k >= 0 and k < n_bins:
                counts[k] += 1
            j += 1
    return counts


def _chunk_counts(a_chunk, b, spec: HistogramSpec) -> np.ndarray:
    if a_chunk.size == 0:
        return np.zeros(spec.total_bins, dtype=np.int64)
    # partenza prudente: il kernel avanza comunque con il proprio confronto
    lo_start = int(np.searchsorted(b, a_chunk[0] + spec.lag_lo - spec.bin_width, side="left"))
    return _pair_counts(a_chunk, b, spec.bin_width, spec.lag_lo, spec.total_bins, max(lo_start, 0))


def pair_histogram(a, b, spec: HistogramSpec, n_jobs: int = 1) -> np.ndarray:
    """Conteggi C_k delle coppie con b_j - a_i in [lag_lo + k dt, lag_lo + (k+1) dt)."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if n_jobs == 1 or a.size <= CHUNK_EVENTS:
        return _chunk_counts(a, b, spec)
    chunks = [a[i:i + CHUNK_EVENTS] for i in range(0, a.size, CHUNK_EVENTS)]
    parts = Parallel(n_jobs=n_jobs)(delayed(_chunk_counts)(c, b, spec) for c in chunks)
    return np.sum(parts, axis=0, dtype=np.int64)


def brute_force_pairs(a, b, spec: HistogramSpec) -> np.ndarray:
    """Conteggio O(N^2) con la stessa aritmetica dei bin del kernel."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n_bins = spec.total_bins
    lag_lo = spec.lag_lo
    lag_hi = lag_lo + n_bins * spec.bin_width
    d = (b[None, :] - a[:, None]).ravel()
    d = d[(d >= lag_lo) & (d < lag_hi)]
    k = np.floor((d - lag_lo) / spec.bin_width).astype(np.int64)
    k = k[(k >= 0) & (k < n_bins)]
    return np.bincount(k, minlength=n_bins).astype(np.int64)


# ------------------------------------------------------------------
# 2) Stimatore di g^2
# ------------------------------------------------------------------
def rate(times, duration: float) -> float:
    """Eventi al secondo."""
    if not duration > 0:
        raise ConfigError("duration", "deve essere > 0")
    return len(times) / duration


def cross_correlation(a, b, spec: HistogramSpec, duration: float, n_jobs: int = 1) -> CorrelationCurve:
    """g^2_k = C_k / (r_a r_b dt (duration - |tau_k|)), sigma_k = sqrt(C_k) / stesso denominatore."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise EmptyStreamError("flusso vuoto su uno dei due rivelatori")
    if spec.max_lag >= duration:
        raise ConfigError("corr.max_lag", "i bin superano la durata della misura")
    if np.any(np.diff(a) < 0) or np.any(np.diff(b) < 0):
        raise ConfigError("times", "i flussi devono essere ordinati")

    counts = pair_histogram(a, b, spec, n_jobs=n_jobs)
    tau = spec.lag_lo + (np.arange(spec.total_bins) + 0.5) * spec.bin_width
    norm = rate(a, duration) * rate(b, duration) * spec.bin_width * (duration - np.abs(tau))
    g2 = counts / norm
    sigma = np.sqrt(counts) / norm
    return CorrelationCurve(tau, g2, sigma, counts=counts, norm=norm)


def reduced_chi_square(measured: CorrelationCurve, model_g2, mask=None) -> float:
    """Chi quadro ridotto di Pearson con i conteggi attesi dal modello (ammette bin vuoti)."""
    if measured.counts is None or measured.norm is None:
        raise ConfigError("curve", "servono i conteggi grezzi della curva misurata")
    expected = np.asarray(model_g2, dtype=float) * measured.norm
    keep = expected > 0
    if mask is not None:
        keep &= np.asarray(mask, dtype=bool)
    if not np.any(keep):
        raise EmptyStreamError("nessun bin con conteggi attesi")
    resid = (measured.counts[keep] - expected[keep]) ** 2 / expected[keep]
    return float(resid.sum() / keep.sum())


def thin(times, fraction: float, rng: np.random.Generator) -> np.ndarray:
    """Mantiene ogni evento con probabilità `fraction`."""
    times = np.asarray(times, dtype=float)
    return times[rng.random(times.size) < fraction]


# ------------------------------------------------------------------
# 3) Statistica dei conteggi
# ------------------------------------------------------------------
def counting_stats(times, window: float, duration: float) -> CountingStats:
    """Conteggi in finestre disgiunte; varianza non distorta; sigma_q = sqrt(2/m)(1+q)."""
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        raise EmptyStreamError("flusso vuoto: statistica dei conteggi non definita")
    if not window > 0:
        raise ConfigError("stats.window", "deve essere > 0")
    if duration < 100.0 * window:
        raise ConfigError("stats.window", "serve duration >= 100 * window")

    m = int(math.floor(duration / window))
    idx = np.floor(times[times >= 0.0] / window).astype(np.int64)
    idx = idx[idx < m]
    counts = np.bincount(idx, minlength=m)
    mean = float(counts.mean())
    if mean == 0.0:
        raise EmptyStreamError("nessun evento nelle finestre di conteggio")
    variance = float(counts.var(ddof=1))
    q = (variance - mean) / mean
    sigma_q = abs(math.sqrt(2.0 / m) * (1.0 + q))
    return CountingStats(window, mean, variance, q, sigma_q, n_windows=m)
