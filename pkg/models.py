# models.py
"""Tipi di dominio del simulatore: parametri, stati, curve e flussi di fotoni.

Ogni modulo importa da qui i propri tipi. Le invarianti vengono
controllate in `__post_init__` e sollevano `ConfigError` con il nome
della chiave di configurazione.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np


# ------------------------------------------------------------------
# 1) Eccezioni
# ------------------------------------------------------------------
class SimulationError(Exception):
    """Errore base del simulatore."""


class ConfigError(SimulationError):
    """Parametro fuori dominio o chiave di configurazione non valida."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


class NumericFailure(SimulationError):
    """Fallimento numerico (integratore, correlazione non definita, ...)."""


class EmptyStreamError(NumericFailure):
    """Statistiche non definite su un flusso vuoto."""


def _check_finite(key: str, value: float) -> None:
    if not math.isfinite(value):
        raise ConfigError(key, f"valore non finito ({value!r})")


# ------------------------------------------------------------------
# 2) Atomo a due livelli
# ------------------------------------------------------------------
@dataclass(frozen=True)
class AtomParams:
    """Parametri di pilotaggio/decadimento: beta [1/s], omega [rad/s], delta [rad/s]."""

    beta: float
    omega: float
    delta: float = 0.0

    def __post_init__(self):
        for name in ("beta", "omega", "delta"):
            _check_finite(f"atom.{name}", getattr(self, name))
        if self.beta <= 0:
            raise ConfigError("atom.beta", "deve essere > 0")
        if self.omega < 0:
            raise ConfigError("atom.omega", "deve essere >= 0")

    @property
    def gamma(self) -> float:
        # decadimento longitudinale puramente radiativo
        return 2.0 * self.beta


@dataclass(frozen=True)
class BlochState:
    """Componenti di Bloch (u, v, w); usato anche per le derivate."""

    u: float
    v: float
    w: float

    def as_array(self) -> np.ndarray:
        return np.array([self.u, self.v, self.w], dtype=float)

    @classmethod
    def from_array(cls, y) -> BlochState:
        return cls(float(y[0]), float(y[1]), float(y[2]))

    @property
    def excited_population(self) -> float:
        return 0.5 * (1.0 + self.w)

    @property
    def purity(self) -> float:
        return self.u * self.u + self.v * self.v + self.w * self.w


@dataclass
class AtomCorrelation:
    """g_A^(2)(tau) di un singolo atomo sulla griglia tau_grid."""

    tau_grid: np.ndarray
    g2: np.ndarray


# ------------------------------------------------------------------
# 3) Fascio atomico
# ------------------------------------------------------------------
@dataclass(frozen=True)
class PoissonArrivals:
    """Arrivi poissoniani omogenei."""

    name = "poisson"


@dataclass(frozen=True)
class DeadTimeArrivals:
    """Processo di rinnovo con tempo morto `delta` [s] dopo ogni arrivo."""

    delta: float
    name = "deadtime"

    def __post_init__(self):
        _check_finite("beam.dead_time", self.delta)
        if self.delta < 0:
            raise ConfigError("beam.dead_time", "deve essere >= 0")


ArrivalModel = Union[PoissonArrivals, DeadTimeArrivals]

# Inviluppi di transito disponibili: codice -> descrizione
ENVELOPES = {
    "tophat": "intensità costante su [0, t0]",
    "gaussian": "h(t) = exp(-8 t^2 / t0^2), attraversamento del waist",
}


@dataclass(frozen=True)
class BeamParams:
    """Statistica del fascio: nbar, t0 [s], modello di arrivo, inviluppo."""

    nbar: float
    t0: float
    arrival_model: ArrivalModel = field(default_factory=PoissonArrivals)
    envelope: str = "tophat"

    def __post_init__(self):
        _check_finite("beam.nbar", self.nbar)
        _check_finite("beam.t0", self.t0)
        if self.nbar <= 0:
            raise ConfigError("beam.nbar", "deve essere > 0")
        if self.t0 <= 0:
            raise ConfigError("beam.t0", "deve essere > 0")
        if self.envelope not in ENVELOPES:
            raise ConfigError("beam.envelope", f"inviluppo sconosciuto {self.envelope!r}")
        if isinstance(self.arrival_model, DeadTimeArrivals):
            # la frequenza efficace deve restare raggiungibile
            if self.nbar / self.t0 * self.arrival_model.delta >= 1.0:
                raise ConfigError(
                    "beam.dead_time",
                    "processo non realizzabile: nbar/t0 deve essere < 1/dead_time",
                )

    @property
    def rate(self) -> float:
        return self.nbar / self.t0


@dataclass(frozen=True)
class NumberStats:
    """Statistica del numero di atomi: media, varianza, Q_A."""

    mean: float
    variance: float
    q_a: float
    sigma_q: float = 0.0
    n_windows: int = 0


@dataclass
class EnvelopeOverlap:
    """Fattore di sovrapposizione F(tau) dell'inviluppo di transito."""

    tau_grid: np.ndarray
    f: np.ndarray


# ------------------------------------------------------------------
# 4) Curve di correlazione e fondo
# ------------------------------------------------------------------
@dataclass
class CorrelationCurve:
    """g^(2)(tau) con incertezza; `counts`/`norm` presenti solo se stimata da dati."""

    tau_grid: np.ndarray
    g2: np.ndarray
    sigma: np.ndarray
    counts: np.ndarray | None = None
    norm: np.ndarray | None = None

    @classmethod
    def analytic(cls, tau_grid, g2) -> CorrelationCurve:
        tau_grid = np.asarray(tau_grid, dtype=float)
        return cls(tau_grid, np.asarray(g2, dtype=float), np.zeros_like(tau_grid))


@dataclass(frozen=True)
class BackgroundModel:
    """Rapporto fondo/segnale b = B/S."""

    b: float = 0.0

    def __post_init__(self):
        _check_finite("background.ratio", self.b)
        if self.b < 0:
            raise ConfigError("background.ratio", "deve essere >= 0")


# ------------------------------------------------------------------
# 5) Rivelatori e flussi di fotoni
# ------------------------------------------------------------------
@dataclass(frozen=True)
class DetectorParams:
    """Efficienza, conteggi di buio [1/s] e tempo morto [s] di un rivelatore."""

    efficiency: float = 1.0
    dark_rate: float = 0.0
    dead_time: float = 0.0
    label: str = "detector"

    def __post_init__(self):
        for name in ("efficiency", "dark_rate", "dead_time"):
            _check_finite(f"{self.label}.{name}", getattr(self, name))
        if not 0.0 <= self.efficiency <= 1.0:
            raise ConfigError(f"{self.label}.efficiency", "deve stare in [0, 1]")
        if self.dark_rate < 0:
            raise ConfigError(f"{self.label}.dark_rate", "deve essere >= 0")
        if self.dead_time < 0:
            raise ConfigError(f"{self.label}.dead_time", "deve essere >= 0")


@dataclass
class PhotonStream:
    """Registrazioni (tempo, rivelatore) ordinate nel tempo su [0, duration)."""

    times: np.ndarray
    detectors: np.ndarray
    duration: float
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.detectors = np.asarray(self.detectors, dtype=np.int8)
        if self.times.shape != self.detectors.shape:
            raise ValueError("times e detectors devono avere la stessa lunghezza")

    def __len__(self) -> int:
        return int(self.times.size)

    def channel(self, detector: int) -> np.ndarray:
        """Tempi del solo rivelatore `detector` (0 o 1)."""
        return self.times[self.detectors == detector]

    def __repr__(self):
        return f"<PhotonStream {len(self)} eventi su {self.duration:g} s>"


@dataclass(frozen=True)
class HistogramSpec:
    """Larghezza del bin e ritardo massimo [s]; `signed` usa [-max_lag, max_lag)."""

    bin_width: float
    max_lag: float
    signed: bool = False

    def __post_init__(self):
        _check_finite("corr.bin_width", self.bin_width)
        _check_finite("corr.max_lag", self.max_lag)
        if self.bin_width <= 0:
            raise ConfigError("corr.bin_width", "deve essere > 0")
        if self.bin_width > self.max_lag:
            raise ConfigError("corr.bin_width", "deve essere <= corr.max_lag")

    @property
    def n_bins(self) -> int:
        # bin interi nel semiasse positivo
        return int(math.floor(self.max_lag / self.bin_width + 1e-9))

    @property
    def lag_lo(self) -> float:
        return -self.n_bins * self.bin_width if self.signed else 0.0

    @property
    def total_bins(self) -> int:
        return 2 * self.n_bins if self.signed else self.n_bins


@dataclass(frozen=True)
class CountingStats:
    """Statistica dei conteggi in finestre disgiunte."""

    window: float
    mean: float
    variance: float
    q: float
    sigma_q: float
    n_windows: int = 0


# ------------------------------------------------------------------
# 6) Geometria del modo e cinematica
# ------------------------------------------------------------------
@dataclass(frozen=True)
class ModeGeometry:
    """Modo gaussiano stazionario: lunghezza d'onda, waist [m], accoppiamento g0."""

    wavelength: float
    w0: float
    g0: float = 1.0

    def __post_init__(self):
        _check_finite("geometry.lambda", self.wavelength)
        _check_finite("geometry.w0", self.w0)
        if self.wavelength <= 0:
            raise ConfigError("geometry.lambda", "deve essere > 0")
        if self.w0 < 0:
            raise ConfigError("geometry.w0", "deve essere >= 0")

    @property
    def k(self) -> float:
        return 2.0 * math.pi / self.wavelength


@dataclass(frozen=True)
class KinematicParams:
    """Velocità di passaggio v_z e velocità trasversa rms lungo l'asse sigma_vx [m/s]."""

    v_z: float
    sigma_vx: float = 0.0

    def __post_init__(self):
        _check_finite("geometry.vz", self.v_z)
        _check_finite("geometry.sigma_vx", self.sigma_vx)
        if self.v_z <= 0:
            raise ConfigError("geometry.vz", "deve essere > 0")
        if self.sigma_vx < 0:
            raise ConfigError("geometry.sigma_vx", "deve essere >= 0")


@dataclass(frozen=True)
class Trajectory:
    """Traiettoria rettilinea: posizione iniziale r0 e velocità v."""

    r0: tuple[float, float, float]
    v: tuple[float, float, float]

    def __post_init__(self):
        for i, value in enumerate(tuple(self.r0) + tuple(self.v)):
            _check_finite(f"trajectory[{i}]", float(value))

    def position(self, t: float) -> tuple[float, float, float]:
        return tuple(p + q * t for p, q in zip(self.r0, self.v))


@dataclass(frozen=True)
class ExcursionStats:
    """Statistiche campionarie di delta_phi con errori standard."""

    mean: float
    std: float
    fraction: float
    mean_se: float
    std_se: float
    fraction_se: float
    n_samples: int
