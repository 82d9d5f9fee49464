"""Two-photon detection amplitude over the (tau_A, tau_B) plane.

Times are in units of DL. The amplitude of an H photon reaching Alice at
``tau_a`` and a V photon reaching Bob at ``tau_b`` is a sum of two terms:

    first  = exp(-i k (tau_a + tau_b)) * A1(tau_a - tau_b)
    second = exp(-i k (tau_a + tau_b)) * A2(tau_a - tau_b)

where ``k`` is the rendering carrier and the envelopes are frequency
integrals of the filtered spectral amplitude,

    A1(s) =  int e^{-iz/2} sinc_half(z) G^2(z + m/2) e^{-i(z + m/2) s} dz
    A2(s) = -int e^{-iz/2} sinc_half(z) G^2(z + m/2) e^{+i(z + m/2)(s - d)} dz.

Without a filter A1 is a boxcar supported on s in [-1, 0] and A2 the same
box moved to [d, d + 1]; at m = 0 and d = -1 they cancel exactly.
"""

from __future__ import annotations

import math
from typing import Literal

import numpy as np
from scipy.integrate import trapezoid

from biphoton.model import FilterSpec, OperatingPoint, sinc_half
from biphoton.numerics import tails
from biphoton.numerics.quadrature import DEFAULT_SETTINGS, QuadratureSettings, integrate

Term = Literal["first", "second", "both"]

DEFAULT_CARRIER = 40.0
# envelope components integrated together per quadrature call
_CHUNK = 256


def _box_tail(q: float, cutoff: float) -> float:
    """int_{|z|>cutoff} sinc_half(z) e^{-i z q} dz (real by symmetry)."""
    return 2.0 * (tails.sin_over_x(q + 0.5, cutoff) - tails.sin_over_x(q - 0.5, cutoff))


def band_envelopes(s, point: OperatingPoint, filt: FilterSpec, settings: QuadratureSettings | None = None):
    """Envelopes (A1(s), A2(s)) as complex arrays, for an array of s = tau_a - tau_b."""
    settings = settings or DEFAULT_SETTINGS
    s = np.atleast_1d(np.asarray(s, dtype=float))
    c = 0.5 * point.m
    d = point.d
    if filt.kind == "none":
        lo, hi = -(64.0 * math.pi + 4.0 * abs(c)), 64.0 * math.pi + 4.0 * abs(c)
    else:
        # G^2 at half the rate cutoff is exp(-32) by default, far below rel_tol
        half = filt.support(0.5 * settings.truncation_bound)
        lo, hi = -c - half, -c + half

    a1 = np.empty(s.size, dtype=complex)
    a2 = np.empty(s.size, dtype=complex)
    for start in range(0, s.size, _CHUNK):
        part = s[start:start + _CHUNK]
        shift = part - d

        def integrand(z, part=part, shift=shift):
            base = np.exp(-0.5j * z) * sinc_half(z) * filt.amplitude(z + c) ** 2
            u = (z + c)[:, None]
            first = base[:, None] * np.exp(-1j * u * part[None, :])
            second = -base[:, None] * np.exp(1j * u * shift[None, :])
            return np.concatenate([first, second], axis=1)

        fastest = 1.0 + float(np.max(np.abs(np.concatenate([part, shift]))))
        res = integrate(
            integrand, lo, hi, settings, breakpoints=(-c, 0.0), max_width=2.0 * math.pi / fastest
        )
        vals = np.asarray(res.value)
        a1[start:start + part.size] = vals[: part.size]
        a2[start:start + part.size] = vals[part.size:]

    if filt.kind == "none":
        cutoff = hi
        t1 = np.array([_box_tail(v + 0.5, cutoff) for v in s])
        t2 = np.array([_box_tail(0.5 - v + d, cutoff) for v in s])
        a1 += np.exp(-1j * c * s) * t1
        a2 -= np.exp(1j * c * (s - d)) * t2
    return a1, a2


def two_photon_amplitude(
    tau_a,
    tau_b,
    point: OperatingPoint,
    filt: FilterSpec,
    carrier: float = DEFAULT_CARRIER,
    term: Term = "both",
    settings: QuadratureSettings | None = None,
):
    """Complex two-photon amplitude at (tau_a, tau_b), arbitrary normalisation.

    Accepts scalars or broadcastable arrays. ``term`` selects the first or
    second emission-order contribution or their sum; ``carrier = 0`` gives
    the envelope alone.
    """
    if carrier < 0:
        raise ValueError("carrier must be >= 0")
    if term not in ("first", "second", "both"):
        raise ValueError(f"term must be first, second or both, got {term!r}")
    ta, tb = np.broadcast_arrays(np.asarray(tau_a, dtype=float), np.asarray(tau_b, dtype=float))
    diff = (ta - tb).ravel()
    unique, inverse = np.unique(diff, return_inverse=True)
    a1, a2 = band_envelopes(unique, point, filt, settings)
    env = {"first": a1, "second": a2, "both": a1 + a2}[term][inverse].reshape(ta.shape)
    value = np.exp(-1j * carrier * (ta + tb)) * env
    return complex(value) if value.ndim == 0 else value


def envelope_width(s, values) -> float:
    """RMS width of |values|^2 over the sample positions ``s``."""
    s = np.asarray(s, dtype=float)
    w = np.abs(np.asarray(values)) ** 2
    total = trapezoid(w, s)
    if not total > 0:
        return 0.0
    mean = trapezoid(w * s, s) / total
    return float(math.sqrt(max(trapezoid(w * (s - mean) ** 2, s) / total, 0.0)))


def equal_phase_direction(tau_a, tau_b, values):
    """Unit vector along lines of equal phase of a sampled complex map.

    ``values[i, j]`` is the amplitude at (tau_a[j], tau_b[i]). The mean phase
    gradient is estimated from neighbour products weighted by |value|^2;
    the returned direction is perpendicular to it, oriented with a
    non-negative tau_a component.
    """
    values = np.asarray(values)
    ha = float(tau_a[1] - tau_a[0])
    hb = float(tau_b[1] - tau_b[0])
    pa = values[:, 1:] * np.conj(values[:, :-1])
    pb = values[1:, :] * np.conj(values[:-1, :])
    ga = np.sum(np.abs(pa) * np.angle(pa)) / (np.sum(np.abs(pa)) * ha)
    gb = np.sum(np.abs(pb) * np.angle(pb)) / (np.sum(np.abs(pb)) * hb)
    direction = np.array([gb, -ga])
    norm = np.hypot(*direction)
    if norm == 0:
        raise ValueError("phase is constant; no equal-phase direction")
    direction /= norm
    if direction[0] < 0 or (direction[0] == 0 and direction[1] < 0):
        direction = -direction
    return direction
