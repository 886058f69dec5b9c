# composite.py
"""Composizione analitica: g^(2)(tau) del fascio, fondo, Q di Mandel.

g^2(tau) = 1 + [Q_A + g_A^2(tau)] F(tau) / Nbar

Il termine di fluttuazione del numero Q_A F(tau)/Nbar usa lo stesso
inviluppo del termine dello stesso atomo; la relazione è esatta solo a
tau = 0.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import trapezoid

from atomdyn import g2_atom, photons_per_transit, steady_state
from beam import (
    amplitude_envelope,
    atom_number_stats,
    effective_rate,
    envelope_overlap,
    sample_arrivals,
    transit_window,
)
from models import (
    AtomParams,
    BackgroundModel,
    BeamParams,
    ConfigError,
    CorrelationCurve,
    DeadTimeArrivals,
    PoissonArrivals,
)
from presets import FIGURE1, FIGURE1_BACKGROUND


# ------------------------------------------------------------------
# 1) g^2 del fascio
# ------------------------------------------------------------------
def _g2_atom_abs(atom: AtomParams, tau: np.ndarray) -> np.ndarray:
    """g_A^2 valutata su |tau| per griglie qualsiasi (anche negative o senza lo 0)."""
    uniq, inverse = np.unique(np.abs(tau), return_inverse=True)
    offset = 0 if uniq[0] == 0.0 else 1
    grid = uniq if offset == 0 else np.concatenate(([0.0], uniq))
    values = g2_atom(atom, grid).g2[offset:]
    return values[inverse.reshape(tau.shape)]


def g2_beam(atom: AtomParams, beam: BeamParams, q_a: float, tau_grid) -> CorrelationCurve:
    """g^2(tau) della luce di un fascio con numero di atomi fluttuante."""
    tau = np.asarray(tau_grid, dtype=float)
    if isinstance(beam.arrival_model, PoissonArrivals) and q_a != 0.0:
        raise ConfigError("beam.q_a", "un fascio poissoniano ha Q_A = 0")
    if tau.size == 0:
        return CorrelationCurve.analytic(tau, tau)
    g_a = _g2_atom_abs(atom, tau)
    f = envelope_overlap(beam, tau).f
    g2 = 1.0 + (q_a + g_a) * f / beam.nbar
    return CorrelationCurve.analytic(tau, g2)


def atom_number_q(beam: BeamParams, seed: int = 0, n_transits: float = 2e5) -> float:
    """Q_A del modello di arrivo in una finestra t0.

    Poisson: 0. Tempo morto >= t0: al più un ingresso per finestra, Q_A = -Nbar.
    Altrimenti stima Monte Carlo su `n_transits` tempi di transito.
    """
    model = beam.arrival_model
    if not isinstance(model, DeadTimeArrivals):
        return 0.0
    if model.delta >= beam.t0:
        return -beam.nbar
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(99,)))
    duration = n_transits * beam.t0
    arrivals = sample_arrivals(beam, duration, rng)
    return atom_number_stats(arrivals, beam.t0, duration).q_a


# ------------------------------------------------------------------
# 2) Fondo e Q di Mandel
# ------------------------------------------------------------------
def g2_with_background(src: CorrelationCurve, bg: BackgroundModel) -> CorrelationCurve:
    """g^2_obs = 1 + (g^2_src - 1) / (1 + b)^2."""
    if bg.b == 0.0:
        return CorrelationCurve(src.tau_grid.copy(), src.g2.copy(), src.sigma.copy())
    scale = 1.0 / (1.0 + bg.b) ** 2
    return CorrelationCurve(src.tau_grid.copy(), 1.0 + (src.g2 - 1.0) * scale, src.sigma * scale)


def mandel_q_from_g2(curve: CorrelationCurve, rate: float, window: float) -> float:
    """Q(T) = (2 rate / T) * int_0^T (T - tau)(g^2(tau) - 1) dtau (trapezi)."""
    tau = np.asarray(curve.tau_grid, dtype=float)
    g2 = np.asarray(curve.g2, dtype=float)
    if not window > 0:
        raise ConfigError("stats.window", "deve essere > 0")
    if tau.size < 2 or tau[0] > 0.0 or tau[-1] < window:
        raise ConfigError("tau_grid", f"la griglia deve coprire [0, {window:g}]")
    inside = (tau >= 0.0) & (tau <= window)
    x = tau[inside]
    y = g2[inside] - 1.0
    if x[0] > 0.0:
        x = np.concatenate(([0.0], x))
        y = np.concatenate(([np.interp(0.0, tau, g2) - 1.0], y))
    if x[-1] < window:
        x = np.append(x, window)
        y = np.append(y, np.interp(window, tau, g2) - 1.0)
    integral = trapezoid((window - x) * y, x)
    return 2.0 * rate / window * integral


def classify(q: float, sigma: float) -> str:
    """Sub se q < -3 sigma, Super se q > 3 sigma, altrimenti Poissonian."""
    if sigma < 0:
        raise ConfigError("sigma", "deve essere >= 0")
    if q < -3.0 * sigma:
        return "Sub"
    if q > 3.0 * sigma:
        return "Super"
    return "Poissonian"


# ------------------------------------------------------------------
# 3) Bilancio dei conteggi
# ------------------------------------------------------------------
def expected_signal_rate(atom: AtomParams, beam: BeamParams) -> float:
    """Frequenza media di emissione del fascio: R * fotoni per transito."""
    _, length = transit_window(beam)
    return effective_rate(beam) * photons_per_transit(atom, amplitude_envelope(beam), length)


def duty_factor(atom: AtomParams, beam: BeamParams) -> float:
    """Fotoni per transito divisi per 2 beta rho_ss t0."""
    rho_ss = steady_state(atom).excited_population
    if rho_ss == 0.0:
        return 0.0
    _, length = transit_window(beam)
    return photons_per_transit(atom, amplitude_envelope(beam), length) / (2.0 * atom.beta * rho_ss * beam.t0)


def local_maxima(tau, values) -> np.ndarray:
    """Posizioni dei massimi locali stretti, raffinate con una parabola sui tre punti."""
    tau = np.asarray(tau, dtype=float)
    y = np.asarray(values, dtype=float)
    idx = np.flatnonzero((y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:])) + 1
    peaks = []
    for i in idx:
        y0, y1, y2 = y[i - 1], y[i], y[i + 1]
        den = y0 - 2.0 * y1 + y2
        shift = 0.5 * (y0 - y2) / den if den != 0.0 else 0.0
        step = 0.5 * (tau[i + 1] - tau[i - 1])
        peaks.append(tau[i] + shift * step)
    return np.asarray(peaks, dtype=float)


# ------------------------------------------------------------------
# 4) Curve di riferimento (figure1)
# ------------------------------------------------------------------
def figure1_params() -> tuple[AtomParams, BeamParams]:
    atom = AtomParams(FIGURE1["atom.beta"], FIGURE1["atom.omega"], FIGURE1["atom.delta"])
    beam = BeamParams(FIGURE1["beam.nbar"], FIGURE1["beam.t0"], envelope=FIGURE1["beam.envelope"])
    return atom, beam


def figure1_curves(tau_grid) -> tuple[CorrelationCurve, CorrelationCurve]:
    """(traccia senza fondo, traccia con fondo/segnale 0.5) sulla griglia in secondi."""
    tau = np.asarray(tau_grid, dtype=float)
    atom, beam = figure1_params()
    if tau.size and (tau.min() < 0.0 or tau.max() > 4.0 * beam.t0 * (1.0 + 1e-12)):
        raise ConfigError("tau_grid", "la griglia deve stare in [0, 4 t0]")
    upper = g2_beam(atom, beam, 0.0, tau)
    lower = g2_with_background(upper, BackgroundModel(FIGURE1_BACKGROUND))
    return upper, lower


def ringing_period(atom: AtomParams) -> float:
    """Periodo atteso delle oscillazioni di Rabi, 2 pi / Omega'."""
    return 2.0 * math.pi / math.hypot(atom.omega, atom.delta)
