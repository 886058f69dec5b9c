# cavityphase.py
"""Geometria del modo stazionario e variazioni di fase del campo emesso.

L'accoppiamento normalizzato è cos(2 pi x / lambda) exp(-(y^2 + z^2)/w0^2):
onda stazionaria lungo l'asse della cavità x, profilo gaussiano
trasverso, atomi in volo lungo z. Durante l'emissione un atomo con
velocità v_x accumula la fase ottica assiale k v_x T; ogni nodo
attraversato inverte il segno dell'ampiezza.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.stats import norm

from models import ConfigError, ExcursionStats, KinematicParams, ModeGeometry, Trajectory

MIN_SAMPLES = 1000


# ------------------------------------------------------------------
# 1) Geometria
# ------------------------------------------------------------------
def coupling(pos, geom: ModeGeometry) -> float:
    """g(r)/g0 in [-1, 1]."""
    x, y, z = (float(c) for c in pos)
    axial = math.cos(geom.k * x)
    r2 = y * y + z * z
    if geom.w0 == 0.0:
        # waist nullo: il modo esiste solo sull'asse
        return axial if r2 == 0.0 else 0.0
    return axial * math.exp(-r2 / (geom.w0 * geom.w0))


def transit_time(geom: ModeGeometry, kin: KinematicParams) -> float:
    """t0 = 2 w0 / v_z."""
    return 2.0 * geom.w0 / kin.v_z


# ------------------------------------------------------------------
# 2) Escursioni di fase
# ------------------------------------------------------------------
def _node_crossings(x_start, x_end, wavelength: float):
    # nodi in lambda/4 + n lambda/2; conta quelli in (min, max]
    lo = np.minimum(x_start, x_end) / wavelength
    hi = np.maximum(x_start, x_end) / wavelength
    return (np.floor((hi - 0.25) / 0.5) - np.floor((lo - 0.25) / 0.5)).astype(np.int64)


def phase_excursion(traj: Trajectory, window: float, geom: ModeGeometry) -> tuple[float, int]:
    """(delta_phi [rad], numero di nodi attraversati) nella finestra di emissione."""
    if not window > 0:
        raise ConfigError("phase.window", "deve essere > 0")
    x0 = float(traj.r0[0])
    vx = float(traj.v[0])
    delta_phi = geom.k * vx * window
    flips = int(_node_crossings(x0, x0 + vx * window, geom.wavelength))
    return delta_phi, flips


def sample_excursions(geom: ModeGeometry, kin: KinematicParams, window: float, n_samples: int,
                      rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """v_x ~ N(0, sigma_vx), x0 uniforme su una lunghezza d'onda; restituisce (delta_phi, flips)."""
    if not window > 0:
        raise ConfigError("phase.window", "deve essere > 0")
    if n_samples < 1:
        raise ConfigError("phase.samples", "deve essere >= 1")
    x0 = rng.random(n_samples) * geom.wavelength
    vx = rng.normal(0.0, kin.sigma_vx, size=n_samples)
    delta_phi = geom.k * vx * window
    flips = _node_crossings(x0, x0 + vx * window, geom.wavelength)
    return delta_phi, flips


def expected_fraction(std: float) -> float:
    """P(|delta_phi| >= pi/2) per una fase gaussiana centrata di deviazione std."""
    if std <= 0.0:
        return 0.0
    return float(2.0 * norm.sf(0.5 * math.pi / std))


def excursion_stats(geom: ModeGeometry, kin: KinematicParams, window: float, n_samples: int,
                    rng: np.random.Generator) -> ExcursionStats:
    """Media, deviazione standard e frazione |delta_phi| >= pi/2, con errori standard."""
    if n_samples < MIN_SAMPLES:
        raise ConfigError("phase.samples", f"servono almeno {MIN_SAMPLES} campioni")
    delta_phi, _ = sample_excursions(geom, kin, window, n_samples, rng)
    return summarize_excursions(delta_phi)


def summarize_excursions(delta_phi) -> ExcursionStats:
    delta_phi = np.asarray(delta_phi, dtype=float)
    n = delta_phi.size
    if n < 2:
        raise ConfigError("phase.samples", "servono almeno 2 campioni")
    std = float(delta_phi.std(ddof=1))
    fraction = float(np.mean(np.abs(delta_phi) >= 0.5 * math.pi))
    return ExcursionStats(
        mean=float(delta_phi.mean()),
        std=std,
        fraction=fraction,
        mean_se=std / math.sqrt(n),
        std_se=std / math.sqrt(2.0 * (n - 1)),
        fraction_se=math.sqrt(fraction * (1.0 - fraction) / n),
        n_samples=n,
    )
