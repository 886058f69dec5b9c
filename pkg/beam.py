# beam.py
"""Statistica del fascio atomico.

Processi di arrivo (poissoniano e con tempo morto), inviluppi di
transito, statistica del numero di atomi Q_A e funzione di
sovrapposizione F(tau) degli inviluppi.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad

from atomdyn import ConstantEnvelope
from models import (
    BeamParams,
    ConfigError,
    DeadTimeArrivals,
    EmptyStreamError,
    EnvelopeOverlap,
    NumberStats,
)

# ------------------------------------------------------------------
# 1) Inviluppi di transito
# ------------------------------------------------------------------
QUAD_EPSREL = 1e-8
# la gaussiana h(t) = exp(-8 t^2/t0^2) si integra su +-GAUSS_SPAN t0 dal centro
GAUSS_SPAN = 4.0


class GaussianEnvelope:
    """Inviluppo d'ampiezza exp(-4 (t - center)^2 / t0^2); il suo quadrato è h."""

    def __init__(self, center: float, t0: float):
        self.center = float(center)
        self.t0 = float(t0)

    def __call__(self, t):
        x = (np.asarray(t, dtype=float) - self.center) / self.t0
        value = np.exp(-4.0 * x * x)
        return float(value) if value.ndim == 0 else value

    def __repr__(self):
        return f"<GaussianEnvelope centro={self.center:g} t0={self.t0:g}>"


def transit_window(params: BeamParams) -> tuple[float, float]:
    """(offset rispetto all'arrivo, durata) della finestra simulata per ogni transito."""
    if params.envelope == "gaussian":
        return -params.t0, 3.0 * params.t0
    return 0.0, params.t0


def amplitude_envelope(params: BeamParams):
    """Modulazione dell'ampiezza di Rabi nel tempo locale della finestra di transito."""
    if params.envelope == "gaussian":
        offset, _ = transit_window(params)
        return GaussianEnvelope(0.5 * params.t0 - offset, params.t0)
    return ConstantEnvelope(1.0)


# ------------------------------------------------------------------
# 2) Processi di arrivo
# ------------------------------------------------------------------
def effective_rate(params: BeamParams) -> float:
    """Frequenza media degli ingressi R = nbar / t0."""
    return params.rate


def dead_time_base_rate(params: BeamParams) -> float:
    """rho tale che R = rho / (1 + rho delta), con R = nbar/t0."""
    model = params.arrival_model
    rate = effective_rate(params)
    if not isinstance(model, DeadTimeArrivals):
        return rate
    return rate / (1.0 - rate * model.delta)


def _enforce_min_gap(times: np.ndarray, delta: float) -> np.ndarray:
    # l'arrotondamento di cumsum può accorciare un intervallo di un ulp
    pending = list(np.flatnonzero(np.diff(times) < delta))
    while pending:
        i = pending.pop(0)
        if times[i + 1] - times[i] >= delta:
            continue
        t = times[i] + delta
        while t - times[i] < delta:
            t = np.nextafter(t, np.inf)
        times[i + 1] = t
        if i + 2 < times.size and times[i + 2] - times[i + 1] < delta:
            pending.insert(0, i + 1)
    return times


def sample_arrivals(params: BeamParams, duration: float, rng: np.random.Generator) -> np.ndarray:
    """Tempi di arrivo crescenti in [-t0, duration).

    Gli atomi arrivati in [-t0, 0) sono già in transito all'istante 0.
    """
    if not duration > 0:
        raise ConfigError("sim.duration", "deve essere > 0")
    start = -params.t0
    span = duration + params.t0
    model = params.arrival_model

    if not isinstance(model, DeadTimeArrivals):
        n = rng.poisson(params.rate * span)
        return np.sort(start + span * rng.random(n))

    delta = model.delta
    rho = dead_time_base_rate(params)
    mean_gap = 1.0 / params.rate
    t = start - 10.0 * mean_gap  # burn-in verso la stazionarietà
    chunk = int(1.2 * (duration - t) * params.rate) + 16
    pieces = []
    while t < duration:
        gaps = delta + rng.exponential(1.0 / rho, size=chunk)
        seq = t + np.cumsum(gaps)
        pieces.append(seq)
        t = float(seq[-1])
    times = np.concatenate(pieces)
    times = times[times >= start]
    if delta > 0:
        times = _enforce_min_gap(times, delta)
    return times[times < duration]


# ------------------------------------------------------------------
# 3) Statistica del numero di atomi
# ------------------------------------------------------------------
def atom_number_stats(arrivals, window: float, duration: float) -> NumberStats:
    """Conta gli atomi entrati in ciascuna finestra disgiunta [jW, (j+1)W).

    Con W = t0 è il numero di atomi presenti nel volume di interazione
    all'istante di chiusura della finestra.
    """
    arrivals = np.asarray(arrivals, dtype=float)
    if arrivals.size == 0:
        raise EmptyStreamError("nessun arrivo: statistica del numero di atomi non definita")
    if not window > 0:
        raise ConfigError("stats.window", "deve essere > 0")
    if duration < 100.0 * window:
        raise ConfigError("sim.duration", "serve duration >= 100 * window")

    m = int(math.floor(duration / window))
    inside = arrivals[arrivals >= 0.0]
    idx = np.floor(inside / window).astype(np.int64)
    idx = idx[idx < m]
    counts = np.bincount(idx, minlength=m)
    mean = float(counts.mean())
    if mean == 0.0:
        raise EmptyStreamError("nessun atomo nelle finestre di conteggio")
    variance = float(counts.var(ddof=1))
    q_a = (variance - mean) / mean
    sigma_q = math.sqrt(2.0 / m) * (1.0 + q_a)
    return NumberStats(mean, variance, q_a, sigma_q=abs(sigma_q), n_windows=m)


# ------------------------------------------------------------------
# 4) Sovrapposizione degli inviluppi
# ------------------------------------------------------------------
def _gaussian_h(x: float) -> float:
    return math.exp(-8.0 * x * x)


def _gaussian_overlap(x_tau: float) -> float:
    # integrazione in unità di t0; il fattore t0 si semplifica
    center = -0.5 * x_tau
    num, _ = quad(lambda s: _gaussian_h(s) * _gaussian_h(s + x_tau),
                  center - GAUSS_SPAN, center + GAUSS_SPAN,
                  epsabs=0.0, epsrel=QUAD_EPSREL, limit=200)
    norm, _ = quad(_gaussian_h, -GAUSS_SPAN, GAUSS_SPAN,
                   epsabs=0.0, epsrel=QUAD_EPSREL, limit=200)
    return num / (norm * norm)


def envelope_overlap(params: BeamParams, tau_grid) -> EnvelopeOverlap:
    """F(tau) = t0 * int h(s) h(s+tau) ds / (int h ds)^2."""
    tau = np.asarray(tau_grid, dtype=float)
    x = np.abs(tau) / params.t0
    if params.envelope == "gaussian":
        cache: dict[float, float] = {}
        f = np.empty_like(x)
        for i, xi in enumerate(x.flat):
            if xi not in cache:
                cache[xi] = _gaussian_overlap(float(xi))
            f.flat[i] = cache[xi]
    else:
        f = np.maximum(0.0, 1.0 - x)
    return EnvelopeOverlap(tau, f)
