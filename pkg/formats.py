# formats.py
"""Formati dei file: tempi di arrivo dei fotoni e curve CSV.

TimestampFile
-------------
* prima riga esattamente `# photon-timestamps v1`
* poi un record per riga `time_s,detector` con 12 cifre decimali
* detector in {0, 1}, tempi non decrescenti

CurveFile
---------
CSV con intestazione fissa (`tau_s,g2,sigma`, `tau_over_t0,...`) e
numeri scritti con la rappresentazione più corta che si rilegge identica.
"""

from __future__ import annotations

import csv
import io
import math
import re
from pathlib import Path
from typing import Iterable

import numpy as np

from models import NumericFailure, PhotonStream

TIMESTAMP_HEADER = "# photon-timestamps v1"
TIME_DECIMALS = 12
_TIME_FORMAT = f"%.{TIME_DECIMALS}f"
_INT_PATTERN = re.compile(r"-?\d+")


class FormatError(OSError):
    """File illeggibile o non conforme al formato."""


def _read_text(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: byte non UTF-8 in posizione {exc.start}") from exc


# ------------------------------------------------------------------
# 1) Tempi di arrivo
# ------------------------------------------------------------------
def format_times(times) -> np.ndarray:
    """Stringhe dei tempi come vengono scritte su file."""
    return np.char.mod(_TIME_FORMAT, np.asarray(times, dtype=float))


def quantize_times(times) -> np.ndarray:
    """Arrotonda i tempi alla risoluzione del file (scrivi-poi-rileggi è l'identità)."""
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        return times.copy()
    return format_times(times).astype(float)


def write_timestamps(path: Path | str, stream: PhotonStream) -> Path:
    """Scrive il flusso nel formato `photon-timestamps v1`."""
    path = Path(path)
    lines = [TIMESTAMP_HEADER]
    if len(stream):
        texts = format_times(stream.times)
        lines.extend(f"{t},{int(d)}" for t, d in zip(texts, stream.detectors))
    with path.open("w", newline="", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
    return path


def read_timestamps(path: Path | str, duration: float | None = None) -> PhotonStream:
    """Legge un file di tempi; senza `duration` la misura finisce subito dopo l'ultimo evento."""
    path = Path(path)
    times: list[float] = []
    detectors: list[int] = []
    lines = _read_text(path).splitlines()
    header = lines[0] if lines else ""
    if header != TIMESTAMP_HEADER:
        raise FormatError(f"{path}: intestazione non valida {header!r}")
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        fields = line.split(",")
        if len(fields) != 2:
            raise FormatError(f"{path}:{lineno}: attesi 2 campi, trovati {len(fields)}")
        try:
            t = float(fields[0])
            d = int(fields[1])
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: record non numerico {line!r}") from exc
        if not math.isfinite(t) or t < 0:
            raise FormatError(f"{path}:{lineno}: tempo non valido {fields[0]!r}")
        if duration is not None and t >= duration:
            raise FormatError(f"{path}:{lineno}: tempo {t!r} oltre la durata {duration!r}")
        if d not in (0, 1):
            raise FormatError(f"{path}:{lineno}: rivelatore non valido {d}")
        if times and t < times[-1]:
            raise FormatError(f"{path}:{lineno}: tempi non ordinati")
        times.append(t)
        detectors.append(d)
    if duration is None:
        # tempi in [0, duration)
        duration = float(np.nextafter(times[-1], np.inf)) if times else 0.0
    return PhotonStream(np.asarray(times, dtype=float), np.asarray(detectors, dtype=np.int8),
                        float(duration), metadata={"source": str(path)})


# ------------------------------------------------------------------
# 2) Curve CSV
# ------------------------------------------------------------------
def _format_number(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_curve(path: Path | str, columns: dict[str, Iterable]) -> Path:
    """Scrive colonne di pari lunghezza; i campi devono essere finiti."""
    path = Path(path)
    names = list(columns)
    data = [np.asarray(columns[name]) for name in names]
    n = len(data[0]) if data else 0
    for name, col in zip(names, data):
        if len(col) != n:
            raise ValueError(f"colonna {name!r}: lunghezza {len(col)} invece di {n}")
        if col.dtype.kind == "f" and not np.all(np.isfinite(col)):
            raise NumericFailure(f"colonna {name!r}: valori non finiti")
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(names)
        for i in range(n):
            writer.writerow([_format_number(col[i]) for col in data])
    return path


def read_curve(path: Path | str) -> dict[str, np.ndarray]:
    """Legge un CurveFile in un dizionario colonna -> array."""
    path = Path(path)
    reader = csv.reader(io.StringIO(_read_text(path)))
    try:
        names = next(reader)
    except StopIteration as exc:
        raise FormatError(f"{path}: file vuoto") from exc
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if len(row) != len(names):
            raise FormatError(f"{path}:{lineno}: attese {len(names)} colonne, trovate {len(row)}")
        try:
            values = [float(x) for x in row]
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: valore non numerico") from exc
        if not all(math.isfinite(v) for v in values):
            raise FormatError(f"{path}:{lineno}: valore non finito")
        rows.append(row)
    columns = {}
    for i, name in enumerate(names):
        texts = [row[i] for row in rows]
        # colonne intere (indici, conteggi) restano intere
        if texts and all(_INT_PATTERN.fullmatch(t) for t in texts):
            columns[name] = np.asarray([int(t) for t in texts], dtype=np.int64)
        else:
            columns[name] = np.asarray([float(t) for t in texts], dtype=float)
    return columns
