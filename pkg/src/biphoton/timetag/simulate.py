"""Monte Carlo generation of detector clicks from the coincidence model."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from biphoton.model import FilterSpec, HwpAngles, OperatingPoint
from biphoton.physics import general_rates
from biphoton.timetag.stream import TICKS_PER_SECOND, TagStream

# Beam-splitter routing: both photons to Alice, both to Bob, one each
ROUTING = (0.25, 0.25, 0.5)


@dataclass(frozen=True)
class SimConfig:
    pair_rate: float = 1e5
    duration: float = 1.0
    angles: HwpAngles = field(default_factory=HwpAngles.diagonal)
    point: OperatingPoint = field(default_factory=OperatingPoint)
    filter: FilterSpec = field(default_factory=lambda: FilterSpec.gaussian(7.8))
    efficiency: float = 0.60
    dark_rate: float = 25.0
    jitter_sigma: float = 0.0  # ps
    seed: int = 0
    ticks_per_second: int = TICKS_PER_SECOND

    def __post_init__(self):
        if not 0 <= self.efficiency <= 1:
            raise ValueError("efficiency must be in [0, 1]")
        if self.pair_rate < 0 or self.dark_rate < 0 or self.jitter_sigma < 0:
            raise ValueError("rates and jitter must be >= 0")
        if not self.duration > 0:
            raise ValueError("duration must be > 0")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")


def outcome_probabilities(config: SimConfig) -> np.ndarray:
    """P(++), P(+-), P(-+), P(--) for a pair split between Alice and Bob."""
    rates = np.array(general_rates(config.angles, config.point, config.filter).as_tuple())
    return rates / rates.sum()


def _plus_probability(theta: float):
    """P(+) behind a plate at theta for an H and for a V photon."""
    return math.cos(2 * theta) ** 2, math.sin(2 * theta) ** 2


def simulate_tags(config: SimConfig) -> TagStream:
    """Draw one acquisition: pairs, routing, outcomes, losses, jitter and darks.

    Photons that share a side are projected independently (no interference
    within a side); two photons on the same detector give a single click.
    """
    rng = np.random.default_rng(config.seed)
    tps = config.ticks_per_second
    duration_ticks = int(round(config.duration * tps))

    n_pairs = int(rng.poisson(config.pair_rate * config.duration))
    birth = rng.uniform(0.0, config.duration, n_pairs) * tps
    route = rng.choice(3, size=n_pairs, p=ROUTING)

    chan_1 = np.empty(n_pairs, dtype=np.int64)
    chan_2 = np.empty(n_pairs, dtype=np.int64)

    split = route == 2
    if split.any():
        outcome = rng.choice(4, size=int(split.sum()), p=outcome_probabilities(config))
        chan_1[split] = np.where(outcome < 2, 0, 1)  # Alice: ++, +- -> A+
        chan_2[split] = np.where(outcome % 2 == 0, 2, 3)  # Bob: ++, -+ -> B+
    for side, theta, base in ((0, config.angles.alpha, 0), (1, config.angles.beta, 2)):
        sel = route == side
        k = int(sel.sum())
        if not k:
            continue
        p_h, p_v = _plus_probability(theta)
        chan_1[sel] = base + (rng.random(k) >= p_h)
        chan_2[sel] = base + (rng.random(k) >= p_v)

    keep_1 = rng.random(n_pairs) < config.efficiency
    keep_2 = rng.random(n_pairs) < config.efficiency
    # a single detector fires once even if both photons of a pair reach it
    same = chan_1 == chan_2
    keep_1 = keep_1 | (same & keep_2)
    keep_2 = keep_2 & ~same

    times = np.concatenate([birth[keep_1], birth[keep_2]])
    chans = np.concatenate([chan_1[keep_1], chan_2[keep_2]])
    if config.jitter_sigma > 0:
        times = times + rng.normal(0.0, config.jitter_sigma * tps / 1e12, times.size)

    n_dark = rng.poisson(config.dark_rate * config.duration, size=4)
    dark_t = rng.uniform(0.0, config.duration, int(n_dark.sum())) * tps
    dark_c = np.repeat(np.arange(4), n_dark)

    times = np.concatenate([times, dark_t])
    chans = np.concatenate([chans, dark_c])
    ticks = np.clip(np.floor(times), 0, duration_ticks - 1).astype(np.uint64)
    order = np.lexsort((chans, ticks))
    return TagStream(duration_ticks, chans[order].astype(np.uint8), ticks[order], tps)
