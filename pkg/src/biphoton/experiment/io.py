"""CSV readers and writers for measurements, sweeps and amplitude maps."""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path

from biphoton.errors import DataFormatError
from biphoton.experiment.config import MeasuredPoint

SWEEP_HEADER = ("T_C", "m", "E", "I1", "I2", "Rpp", "Rpm", "relative_rate")
AMPLITUDE_HEADER = (
    "tau_a", "tau_b", "re_first", "im_first", "re_second", "im_second", "re_sum", "im_sum"
)


def read_measurements(source) -> list[MeasuredPoint]:
    """Parse ``T_C,E[,sigma]`` rows; '#' comments, blank lines and a header row are skipped."""
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source.read()
    points = []
    first = True
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        cells = [c.strip() for c in row]
        if not any(cells) or cells[0].startswith("#"):
            continue
        try:
            values = [float(c) for c in cells if c != ""]
        except ValueError:
            if first:
                first = False
                continue  # header row
            raise DataFormatError(f"line {lineno}: non-numeric value in {row!r}") from None
        first = False
        if len(values) not in (2, 3):
            raise DataFormatError(f"line {lineno}: expected T_C,E[,sigma], got {len(values)} columns")
        try:
            points.append(MeasuredPoint(*values))
        except ValueError as exc:
            raise DataFormatError(f"line {lineno}: {exc}") from None
    return points


def _fmt(x) -> str:
    x = float(x)
    return "nan" if math.isnan(x) else repr(x)


def _open_out(target):
    if isinstance(target, (str, Path)):
        return open(target, "w", newline="", encoding="utf-8"), True
    return target, False


def write_sweep_csv(rows, target) -> None:
    fh, owned = _open_out(target)
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_HEADER)
        for r in rows:
            writer.writerow([_fmt(v) for v in (r.T, r.m, r.E, r.i1, r.i2, r.rpp, r.rpm, r.relative_rate)])
    finally:
        if owned:
            fh.close()


def write_amplitude_csv(amp_map, target) -> None:
    fh, owned = _open_out(target)
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(AMPLITUDE_HEADER)
        for rec in amp_map.rows():
            writer.writerow([_fmt(v) for v in rec])
    finally:
        if owned:
            fh.close()
