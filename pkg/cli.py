# cli.py
"""Riga di comando del simulatore.

    python cli.py analytic  --config run.cfg --out analytic.csv
    python cli.py figure1   --out figure1.csv
    python cli.py simulate  --config run.cfg --out stream.txt --seed 7
    python cli.py correlate --in stream.txt --out g2.csv --bin 3.5e-7 --maxlag 7e-5
    python cli.py stats     --in stream.txt --window 3.5e-5
    python cli.py phase     --config run.cfg --out phase.csv

Codici di uscita: 0 ok, 2 configurazione/uso, 3 I/O, 4 errore numerico.
I dati (riepiloghi `chiave=valore`) vanno su stdout, lo stato su stderr.
"""

from __future__ import annotations

import functools
import math
import sys
from pathlib import Path

import click
import numpy as np

from atomdyn import g2_atom
from beam import envelope_overlap
from cavityphase import expected_fraction, sample_excursions, summarize_excursions, transit_time
from composite import (
    atom_number_q,
    classify,
    figure1_curves,
    figure1_params,
    g2_beam,
    g2_with_background,
)
from config import load_config
from correlator import counting_stats, cross_correlation
from formats import read_timestamps, write_curve, write_timestamps
from models import ConfigError, HistogramSpec, NumericFailure
from montecarlo import STREAM_PHASE, run_experiment, substream
from presets import get_all_presets, get_description

# ------------------------------------------------------------------
# 1) .env
# ------------------------------------------------------------------
try:
    from dotenv import load_dotenv  # type: ignore

    # `.env` accanto a questo file; le variabili già presenti vincono
    load_dotenv(Path(__file__).with_name(".env"), override=False)
except ModuleNotFoundError:
    pass

EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERIC = 4

FIGURE1_MAX_TAU = 3.0
FIGURE1_STEP = 0.005


# ------------------------------------------------------------------
# 2) Gestione errori
# ------------------------------------------------------------------
def handle_errors(name: str):
    """Traduce le eccezioni del simulatore in messaggio su stderr + codice d'uscita."""

    def decorator(func):
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            try:
                return func(*args, **kwargs)
            except ConfigError as exc:
                sys.stderr.write(f"[{name}] ❌ Configurazione: {exc}\n")
                raise SystemExit(EXIT_CONFIG) from exc
            except OSError as exc:
                sys.stderr.write(f"[{name}] ❌ I/O: {exc}\n")
                raise SystemExit(EXIT_IO) from exc
            except NumericFailure as exc:
                sys.stderr.write(f"[{name}] ❌ Errore numerico: {exc}\n")
                raise SystemExit(EXIT_NUMERIC) from exc

        return wrapper

    return decorator


def _status(message: str) -> None:
    click.echo(message, err=True)


def _emit(summary: dict) -> None:
    for key, value in summary.items():
        text = repr(value) if isinstance(value, float) else str(value)
        click.echo(f"{key}={text}")


def _tau_grid(max_tau: float, step: float) -> np.ndarray:
    n = int(math.floor(max_tau / step + 1e-9)) + 1
    return np.linspace(0.0, (n - 1) * step, n)


# ------------------------------------------------------------------
# 3) Opzioni comuni
# ------------------------------------------------------------------
config_option = click.option(
    "--config", "config_path", type=click.Path(dir_okay=False, path_type=Path),
    envvar="ATOMBEAM_CONFIG", default=None, help="File `chiave = valore`.",
)
preset_option = click.option(
    "--preset", default=None,
    help="Preset di parametri: " + ", ".join(nome for nome, _ in get_all_presets()) + ".",
)
seed_option = click.option("--seed", type=int, envvar="ATOMBEAM_SEED", default=None,
                           help="Seed (sostituisce sim.seed).")
out_option = click.option("--out", "out_path", type=click.Path(dir_okay=False, path_type=Path),
                          required=True, help="File di uscita.")
in_option = click.option("--in", "in_path", type=click.Path(dir_okay=False, path_type=Path),
                         required=True, help="File di tempi `photon-timestamps v1`.")


def _load(config_path, preset, seed=None):
    cfg = load_config(config_path, preset=preset, overrides={"sim.seed": seed})
    if preset:
        _status(f"📋 Preset {preset}: {get_description(preset)}")
    return cfg


@click.group()
def cli() -> None:
    """Statistica dei fotoni di un fascio di atomi a due livelli."""


# ------------------------------------------------------------------
# 4) Comandi analitici
# ------------------------------------------------------------------
@cli.command()
@config_option
@preset_option
@out_option
@handle_errors("analytic")
def analytic(config_path, preset, out_path) -> None:
    """g_A^2, F, g^2 del fascio con e senza fondo in funzione di tau/t0."""
    cfg = _load(config_path, preset)
    atom, beam = cfg.atom_params(), cfg.beam_params()
    x = _tau_grid(cfg["analytic.max_tau"], cfg["analytic.step"])
    tau = x * beam.t0

    q_a = atom_number_q(beam, seed=cfg["sim.seed"])
    atom_curve = g2_atom(atom, tau)
    beam_curve = g2_beam(atom, beam, q_a, tau)
    bg_curve = g2_with_background(beam_curve, cfg.background())
    write_curve(out_path, {
        "tau_over_t0": x,
        "g2_atom": atom_curve.g2,
        "F": envelope_overlap(beam, tau).f,
        "g2_beam": beam_curve.g2,
        "g2_beam_bg": bg_curve.g2,
    })
    _status(f"✅ {x.size} righe scritte in {out_path} (Q_A = {q_a:g})")


@cli.command()
@out_option
@handle_errors("figure1")
def figure1(out_path) -> None:
    """Curve di riferimento: senza fondo e con fondo/segnale 0.5."""
    _, beam = figure1_params()
    x = _tau_grid(FIGURE1_MAX_TAU, FIGURE1_STEP)
    upper, lower = figure1_curves(x * beam.t0)
    write_curve(out_path, {"tau_over_t0": x, "g2_nobg": upper.g2, "g2_bg05": lower.g2})
    _status(f"✅ {x.size} righe scritte in {out_path}")


# ------------------------------------------------------------------
# 5) Simulazione e analisi dei tempi di arrivo
# ------------------------------------------------------------------
@cli.command()
@config_option
@preset_option
@seed_option
@out_option
@handle_errors("simulate")
def simulate(config_path, preset, seed, out_path) -> None:
    """Esegue l'esperimento Monte Carlo e scrive i tempi di arrivo."""
    cfg = _load(config_path, preset, seed)
    stream, summary = run_experiment(cfg, verbose=True, echo=_status)
    write_timestamps(out_path, stream)
    _status(f"📊 {len(stream)} eventi scritti in {out_path}")
    _emit(summary)


@cli.command()
@config_option
@preset_option
@in_option
@out_option
@click.option("--bin", "bin_width", type=float, default=None, help="Larghezza del bin [s].")
@click.option("--maxlag", "max_lag", type=float, default=None, help="Ritardo massimo [s].")
@click.option("--signed/--unsigned", default=None, help="Ritardi con segno in [-maxlag, maxlag).")
@click.option("--duration", type=float, default=None, help="Durata della misura [s].")
@click.option("--jobs", type=int, default=None, help="Processi per l'istogramma.")
@handle_errors("correlate")
def correlate(config_path, preset, in_path, out_path, bin_width, max_lag, signed, duration, jobs) -> None:
    """Istogramma D1 x D2 normalizzato a g^2(tau)."""
    cfg = _load(config_path, preset)
    spec = HistogramSpec(
        bin_width if bin_width is not None else cfg["corr.bin_width"],
        max_lag if max_lag is not None else cfg["corr.max_lag"],
        signed if signed is not None else cfg["corr.signed"],
    )
    if duration is None and (config_path is not None or preset):
        duration = cfg["sim.duration"]
    stream = read_timestamps(in_path, duration)
    _status(f"🔄 Correlazione di {len(stream)} eventi su {stream.duration:g} s")
    curve = cross_correlation(stream.channel(0), stream.channel(1), spec, stream.duration,
                              n_jobs=jobs if jobs is not None else cfg["sim.jobs"])
    write_curve(out_path, {"tau_s": curve.tau_grid, "g2": curve.g2, "sigma": curve.sigma})
    _status(f"✅ {curve.tau_grid.size} bin scritti in {out_path}")


@cli.command()
@config_option
@preset_option
@in_option
@click.option("--window", type=float, default=None, help="Finestra di conteggio [s].")
@click.option("--duration", type=float, default=None, help="Durata della misura [s].")
@handle_errors("stats")
def stats(config_path, preset, in_path, window, duration) -> None:
    """Statistica dei conteggi e classificazione della luce."""
    cfg = _load(config_path, preset)
    if window is None:
        window = cfg["stats.window"]
    if duration is None and (config_path is not None or preset):
        duration = cfg["sim.duration"]
    stream = read_timestamps(in_path, duration)
    result = counting_stats(stream.times, window, stream.duration)
    _emit({
        "mean": result.mean,
        "variance": result.variance,
        "q": result.q,
        "sigma_q": result.sigma_q,
        "classification": classify(result.q, result.sigma_q),
    })


# ------------------------------------------------------------------
# 6) Fase del campo emesso
# ------------------------------------------------------------------
@cli.command()
@config_option
@preset_option
@seed_option
@out_option
@handle_errors("phase")
def phase(config_path, preset, seed, out_path) -> None:
    """Escursioni di fase assiali per atomi non localizzati."""
    cfg = _load(config_path, preset, seed)
    geom, kin = cfg.geometry(), cfg.kinematics()
    window = cfg["phase.window"]
    rng = substream(cfg["sim.seed"], STREAM_PHASE)
    delta_phi, flips = sample_excursions(geom, kin, window, cfg["phase.samples"], rng)
    write_curve(out_path, {
        "sample": np.arange(delta_phi.size),
        "delta_phi_rad": delta_phi,
        "sign_flips": flips,
    })
    summary = summarize_excursions(delta_phi)
    expected_std = geom.k * kin.sigma_vx * window
    _status(f"✅ {delta_phi.size} campioni scritti in {out_path}")
    _emit({
        "mean": summary.mean,
        "std": summary.std,
        "std_se": summary.std_se,
        "fraction": summary.fraction,
        "fraction_se": summary.fraction_se,
        "expected_std": expected_std,
        "expected_fraction": expected_fraction(expected_std),
        "mean_sign_flips": float(np.mean(flips)),
        "transit_time": transit_time(geom, kin),
    })


if __name__ == "__main__":  # pragma: no cover
    cli()
