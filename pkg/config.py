# config.py
"""Configurazione dell'esperimento: file `chiave = valore` con commenti `#`.

Ordine di caricamento: DEFAULTS <- preset <- file <- override da riga di
comando. Ogni chiave è validata contro le invarianti del tipo del suo
modulo; le chiavi sconosciute sono rifiutate con il nome della chiave.
"""

from __future__ import annotations

import hashlib
import io
import math
from pathlib import Path
from typing import Any, Callable

from dotenv import dotenv_values

from models import (
    AtomParams,
    BackgroundModel,
    BeamParams,
    ConfigError,
    DeadTimeArrivals,
    DetectorParams,
    HistogramSpec,
    KinematicParams,
    ModeGeometry,
    PoissonArrivals,
)
from presets import FIGURE1, T0_REF, get_preset_by_name, is_valid_preset

# ------------------------------------------------------------------
# 1) Valori di default
# ------------------------------------------------------------------
WAVELENGTH_REF = 780e-9

DEFAULTS: dict[str, Any] = {
    **FIGURE1,
    "detector1.efficiency": 1.0,
    "detector1.dark_rate": 0.0,
    "detector1.dead_time": 0.0,
    "detector2.efficiency": 1.0,
    "detector2.dark_rate": 0.0,
    "detector2.dead_time": 0.0,
    "sim.duration": 1e5 * T0_REF,
    "sim.seed": 12345,
    "sim.jobs": 1,
    "corr.bin_width": 0.01 * T0_REF,
    "corr.max_lag": 2.0 * T0_REF,
    "corr.signed": False,
    "stats.window": T0_REF,
    "geometry.lambda": WAVELENGTH_REF,
    "geometry.w0": 35e-6,
    "geometry.vz": 2.0,
    # sigma_vx * phase.window = lambda/4: deviazione standard di pi/2 sulla fase
    "geometry.sigma_vx": WAVELENGTH_REF / (4.0 * T0_REF),
    "phase.window": T0_REF,
    "phase.samples": 10_000,
    "analytic.max_tau": 3.0,
    "analytic.step": 0.005,
}


# ------------------------------------------------------------------
# 2) Parser per chiave
# ------------------------------------------------------------------
def _float(key: str, text: str) -> float:
    try:
        value = float(text)
    except ValueError as exc:
        raise ConfigError(key, f"numero non valido {text!r}") from exc
    if not math.isfinite(value):
        raise ConfigError(key, f"valore non finito {text!r}")
    return value


def _int(key: str, text: str) -> int:
    try:
        return int(text, 0)
    except ValueError as exc:
        raise ConfigError(key, f"intero non valido {text!r}") from exc


def _bool(key: str, text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "si", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(key, f"booleano non valido {text!r}")


def _choice(*allowed: str) -> Callable[[str, str], str]:
    def parse(key: str, text: str) -> str:
        value = text.strip().lower()
        if value not in allowed:
            raise ConfigError(key, f"valore {text!r} non in {', '.join(allowed)}")
        return value

    return parse


PARSERS: dict[str, Callable[[str, str], Any]] = {
    key: (_int if isinstance(value, int) and not isinstance(value, bool) else
          _bool if isinstance(value, bool) else _float)
    for key, value in DEFAULTS.items()
    if not isinstance(value, str)
}
PARSERS["beam.arrival_model"] = _choice("poisson", "deadtime")
PARSERS["beam.envelope"] = _choice("tophat", "gaussian")


def _require(key: str, ok: bool, message: str) -> None:
    if not ok:
        raise ConfigError(key, message)


# ------------------------------------------------------------------
# 3) RunConfig
# ------------------------------------------------------------------
class RunConfig:
    """Configurazione piatta validata con accesso ai tipi dei moduli."""

    def __init__(self, values: dict[str, Any]):
        self.values = dict(values)
        self.validate()

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    def __repr__(self):
        return f"<RunConfig {self.digest()[:12]}>"

    # --- tipi dei moduli ---
    def atom_params(self) -> AtomParams:
        return AtomParams(self["atom.beta"], self["atom.omega"], self["atom.delta"])

    def beam_params(self) -> BeamParams:
        if self["beam.arrival_model"] == "deadtime":
            model = DeadTimeArrivals(self["beam.dead_time"])
        else:
            model = PoissonArrivals()
        return BeamParams(self["beam.nbar"], self["beam.t0"], model, self["beam.envelope"])

    def background(self) -> BackgroundModel:
        return BackgroundModel(self["background.ratio"])

    def detector(self, index: int) -> DetectorParams:
        label = f"detector{index}"
        return DetectorParams(
            self[f"{label}.efficiency"],
            self[f"{label}.dark_rate"],
            self[f"{label}.dead_time"],
            label=label,
        )

    def histogram_spec(self) -> HistogramSpec:
        return HistogramSpec(self["corr.bin_width"], self["corr.max_lag"], self["corr.signed"])

    def geometry(self) -> ModeGeometry:
        return ModeGeometry(self["geometry.lambda"], self["geometry.w0"])

    def kinematics(self) -> KinematicParams:
        return KinematicParams(self["geometry.vz"], self["geometry.sigma_vx"])

    # --- validazione ---
    def validate(self) -> None:
        unknown = sorted(set(self.values) - set(DEFAULTS))
        if unknown:
            raise ConfigError(unknown[0], "chiave sconosciuta")
        missing = sorted(set(DEFAULTS) - set(self.values))
        if missing:
            raise ConfigError(missing[0], "chiave mancante")

        # i costruttori dei tipi controllano le invarianti campo per campo
        beam = self.beam_params()
        self.atom_params()
        self.background()
        self.detector(1)
        self.detector(2)
        self.histogram_spec()
        self.geometry()
        self.kinematics()

        duration = self["sim.duration"]
        _require("sim.duration", duration > 0, "deve essere > 0")
        _require("sim.duration", duration >= 100.0 * beam.t0, "serve sim.duration >= 100 * beam.t0")
        _require("sim.seed", 0 <= self["sim.seed"] < 2 ** 64, "deve stare in [0, 2^64)")
        _require("sim.jobs", self["sim.jobs"] != 0, "deve essere diverso da 0")
        _require("corr.max_lag", self["corr.max_lag"] < duration, "deve essere < sim.duration")
        _require("stats.window", self["stats.window"] > 0, "deve essere > 0")
        _require("phase.window", self["phase.window"] > 0, "deve essere > 0")
        _require("phase.samples", self["phase.samples"] >= 1000, "servono almeno 1000 campioni")
        _require("analytic.max_tau", self["analytic.max_tau"] > 0, "deve essere > 0")
        _require("analytic.step", 0 < self["analytic.step"] <= self["analytic.max_tau"],
                 "deve stare in (0, analytic.max_tau]")

    # --- serializzazione ---
    def to_text(self, exclude: tuple[str, ...] = ()) -> str:
        lines = []
        for key in sorted(set(self.values) - set(exclude)):
            value = self.values[key]
            if isinstance(value, bool):
                text = "true" if value else "false"
            elif isinstance(value, float):
                text = repr(value)
            else:
                text = str(value)
            lines.append(f"{key} = {text}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        # il numero di processi non cambia il risultato
        return hashlib.sha256(self.to_text(exclude=("sim.jobs",)).encode("utf-8")).hexdigest()


# ------------------------------------------------------------------
# 4) Caricamento
# ------------------------------------------------------------------
def parse_config_text(text: str) -> dict[str, Any]:
    """Interpreta il testo `chiave = valore` e restituisce i valori tipizzati."""
    raw = dotenv_values(stream=io.StringIO(text), interpolate=False)
    parsed: dict[str, Any] = {}
    for key, value in raw.items():
        if key not in DEFAULTS:
            raise ConfigError(key, "chiave sconosciuta")
        if value is None:
            raise ConfigError(key, "manca il valore")
        parsed[key] = PARSERS[key](key, value.strip())
    return parsed


def load_config(path: Path | str | None = None, preset: str | None = None,
                overrides: dict[str, Any] | None = None) -> RunConfig:
    """DEFAULTS <- preset <- file <- overrides."""
    values = dict(DEFAULTS)
    if preset:
        if not is_valid_preset(preset):
            raise ConfigError("preset", f"preset sconosciuto {preset!r}")
        values.update(get_preset_by_name(preset))
    if path is not None:
        path = Path(path)
        # dotenv_values non segnala i file mancanti
        try:
            text = path.read_text(encoding="utf-8")
        except UnicodeDecodeError as exc:
            raise ConfigError("config", f"{path}: byte non UTF-8 in posizione {exc.start}") from exc
        values.update(parse_config_text(text))
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(values)
