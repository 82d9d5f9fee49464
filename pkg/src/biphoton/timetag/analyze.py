"""Coincidence analysis of a tag stream with adjustable window and channel offsets.

Pairing rule: among all Alice/Bob event pairs with |t_A - t_B| <= window
(after offsets), the closest pairs are taken first and every event is used
at most once (ties go to the earlier events). Same-side doubles are matched
the same way in a separate pool, so an event may count both in a
coincidence and in a double. Because longer pairs are only considered after
all shorter ones, every tally is non-decreasing in the window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from biphoton.errors import DegenerateInputError, TagFormatError
from biphoton.timetag.stream import TagStream

DEFAULT_WINDOW_PS = 1000.0
AMBIGUITY_FRACTION = 0.10


@dataclass(frozen=True)
class CoincidenceReport:
    singles: tuple
    rpp: int
    rpm: int
    rmp: int
    rmm: int
    raa: int
    rbb: int
    triples: int
    window: float
    offsets: tuple
    duration: float
    ambiguous_fraction: float = 0.0
    warnings: tuple = field(default=())

    @property
    def coincidences(self) -> tuple:
        return (self.rpp, self.rpm, self.rmp, self.rmm)

    @property
    def total_coincidences(self) -> int:
        return sum(self.coincidences)

    def as_dict(self) -> dict:
        return {
            "singles": list(self.singles),
            "coincidences": {"++": self.rpp, "+-": self.rpm, "-+": self.rmp, "--": self.rmm},
            "doubles": {"AA": self.raa, "BB": self.rbb},
            "triples": self.triples,
            "window_ps": self.window,
            "offsets_ps": list(self.offsets),
            "duration_s": self.duration,
            "ambiguous_fraction": self.ambiguous_fraction,
            "warnings": list(self.warnings),
        }


class CorrelationEstimate(NamedTuple):
    E: float
    stderr: float
    n: int


def _greedy_pairs(t, ch, left_set, right_set, width):
    """Greedy nearest-first matching inside one cluster -> list of (i, j)."""
    cand = []
    n = t.size
    for i in range(n):
        for j in range(i + 1, n):
            dt = t[j] - t[i]
            if dt > width:
                break
            ci, cj = ch[i], ch[j]
            if (ci in left_set and cj in right_set) or (ci in right_set and cj in left_set):
                if left_set is right_set and ci == cj:
                    continue
                cand.append((dt, i, j))
    cand.sort()
    used = set()
    out = []
    for _, i, j in cand:
        if i in used or j in used:
            continue
        used.add(i)
        used.add(j)
        out.append((i, j))
    return out


def analyze(
    stream: TagStream,
    window: float = DEFAULT_WINDOW_PS,
    offsets=(0.0, 0.0, 0.0, 0.0),
) -> CoincidenceReport:
    """Singles, coincidences, doubles and triples of ``stream``.

    ``window`` and ``offsets`` are in picoseconds; each channel's offset is
    added to its timestamps before pairing. A warning is attached when more
    than 10% of events have two or more opposite-side partners in range.
    """
    if not window > 0:
        raise ValueError("window must be > 0")
    offsets = tuple(float(o) for o in offsets)
    if len(offsets) != 4:
        raise ValueError("need one offset per channel (4)")
    times = stream.times
    if times.size and np.any(times[1:] < times[:-1]):
        raise TagFormatError("input stream is not sorted by time")

    scale = stream.ticks_per_second / 1e12
    width = window * scale
    ch = stream.channels.astype(np.int64)
    t = times.astype(np.float64) + np.asarray(offsets)[ch] * scale if ch.size else times.astype(float)
    order = np.argsort(t, kind="stable")
    t, ch = t[order], ch[order]
    singles = tuple(int(k) for k in np.bincount(ch, minlength=4)[:4])

    counts = np.zeros((4, 4), dtype=np.int64)
    raa = rbb = 0
    alice = ch < 2
    if t.size:
        cuts = np.flatnonzero(np.diff(t) > width) + 1
        starts = np.concatenate([[0], cuts])
        ends = np.concatenate([cuts, [t.size]])
        sizes = ends - starts

        two = starts[sizes == 2]
        c0, c1 = ch[two], ch[two + 1]
        cross = (c0 < 2) != (c1 < 2)
        a_ch = np.where(c0 < 2, c0, c1)[cross]
        b_ch = np.where(c0 < 2, c1, c0)[cross]
        np.add.at(counts, (a_ch, b_ch), 1)
        same_side = ~cross & (c0 != c1)
        raa += int(np.count_nonzero(same_side & (c0 < 2)))
        rbb += int(np.count_nonzero(same_side & (c0 >= 2)))

        A, B = {0, 1}, {2, 3}
        for s, e in zip(starts[sizes > 2], ends[sizes > 2]):
            tc, cc = t[s:e], ch[s:e].tolist()
            for i, j in _greedy_pairs(tc, cc, A, B, width):
                a, b = (cc[i], cc[j]) if cc[i] < 2 else (cc[j], cc[i])
                counts[a, b] += 1
            raa += len(_greedy_pairs(tc, cc, A, A, width))
            rbb += len(_greedy_pairs(tc, cc, B, B, width))

    triples = _count_triples(t, ch, width)

    # events with several opposite-side partners make the pairing order matter
    ambiguous = 0
    if t.size:
        for mine, other in ((alice, ~alice), (~alice, alice)):
            to = t[other]
            tm = t[mine]
            n_in = np.searchsorted(to, tm + width, "right") - np.searchsorted(to, tm - width, "left")
            ambiguous += int(np.count_nonzero(n_in >= 2))
    frac = ambiguous / t.size if t.size else 0.0
    warnings = ()
    if frac > AMBIGUITY_FRACTION:
        warnings = (
            f"{100 * frac:.1f}% of events have several opposite-side partners within the window; "
            "pairing is ambiguous, consider a smaller window",
        )

    return CoincidenceReport(
        singles=singles,
        rpp=int(counts[0, 2]),
        rpm=int(counts[0, 3]),
        rmp=int(counts[1, 2]),
        rmm=int(counts[1, 3]),
        raa=raa,
        rbb=rbb,
        triples=triples,
        window=float(window),
        offsets=offsets,
        duration=stream.duration,
        ambiguous_fraction=frac,
        warnings=warnings,
    )


def _count_triples(t, ch, width) -> int:
    """Events opening a window [t, t + width] that holds >= 3 distinct detectors."""
    if t.size < 3:
        return 0
    end = np.searchsorted(t, t + width, "right")
    start = np.arange(t.size)
    distinct = np.zeros(t.size, dtype=np.int64)
    for c in range(4):
        cum = np.concatenate([[0], np.cumsum(ch == c)])
        distinct += (cum[end] - cum[start]) > 0
    return int(np.count_nonzero(distinct >= 3))


def correlation_from_report(report: CoincidenceReport) -> CorrelationEstimate:
    """E = (N++ - N+- - N-+ + N--) / N with binomial standard error sqrt((1 - E^2) / N)."""
    n = report.total_coincidences
    if n <= 0:
        raise DegenerateInputError("no coincidences; correlation undefined")
    E = (report.rpp - report.rpm - report.rmp + report.rmm) / n
    return CorrelationEstimate(E, math.sqrt(max(1.0 - E * E, 0.0) / n), n)


def accidental_counts(singles, window: float, duration: float) -> tuple:
    """Expected chance coincidences 2 * window * S_i * S_j / T for (++, +-, -+, --)."""
    w = window * 1e-12
    s = [float(x) for x in singles]
    return tuple(2.0 * w * s[a] * s[b] / duration for a, b in ((0, 2), (0, 3), (1, 2), (1, 3)))


def predicted_correlation(true_counts, accidentals) -> float:
    """Correlation of expected true plus accidental coincidence counts."""
    n = [a + b for a, b in zip(true_counts, accidentals)]
    total = sum(n)
    if total <= 0:
        raise DegenerateInputError("no expected coincidences")
    return (n[0] - n[1] - n[2] + n[3]) / total


def unpaired_singles(report: CoincidenceReport) -> tuple:
    """Singles per channel not consumed by a coincidence."""
    s = list(report.singles)
    s[0] -= report.rpp + report.rpm
    s[1] -= report.rmp + report.rmm
    s[2] -= report.rpp + report.rmp
    s[3] -= report.rpm + report.rmm
    return tuple(s)


def closure_check(report: CoincidenceReport, probabilities) -> dict:
    """Compare the recovered correlation with the model plus accidental floor.

    Accidentals are estimated from the unpaired singles (events already in
    a true pair are taken first by the nearest-in-time pairing). The
    standard error combines the binomial spread at the predicted E with the
    Poisson spread of the accidental count.
    """
    est = correlation_from_report(report)
    acc = accidental_counts(unpaired_singles(report), report.window, report.duration)
    n_acc = sum(acc)
    n_true = max(est.n - n_acc, 0.0)
    expected = [p * n_true for p in probabilities]
    predicted = predicted_correlation(expected, acc)
    se = math.sqrt(max(1.0 - predicted**2, 0.0) / est.n + (2.0 * math.sqrt(n_acc) / est.n) ** 2)
    return {
        "E": est.E,
        "predicted": predicted,
        "stderr": se,
        "z": (est.E - predicted) / se if se > 0 else (0.0 if est.E == predicted else math.inf),
        "accidentals": n_acc,
        "n": est.n,
    }
