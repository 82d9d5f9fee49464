import math

import numpy as np
import pytest

from biphoton import FilterSpec, HwpAngles, OperatingPoint, diagonal_rates, general_rates
from biphoton.errors import OracleResolutionError
from biphoton.numerics.oracle import oracle_rate_bruteforce, spectral_amplitude

DIAG = HwpAngles.diagonal()
G78 = FilterSpec.gaussian(7.8)


def test_spectral_amplitude_is_literal_and_regular():
    z = np.array([1e-9, 0.7, -3.0])
    literal = (1 - np.exp(-1j * z)) / (1j * z)
    assert np.allclose(spectral_amplitude(z), literal, atol=1e-12)
    assert spectral_amplitude(np.array([0.0]))[0] == 1.0


def test_hom_centre_without_filter():
    r = oracle_rate_bruteforce(DIAG, OperatingPoint(0.0), FilterSpec.none(), tol=1e-5)
    assert r.rpp / r.rpm < 1e-6


def test_unfiltered_default_tolerance_is_out_of_reach():
    with pytest.raises(OracleResolutionError, match="increase grid"):
        oracle_rate_bruteforce(DIAG, OperatingPoint(3.0), FilterSpec.none(), grid=400)


def test_matches_diagonal_rates_at_m5():
    o = oracle_rate_bruteforce(DIAG, OperatingPoint(5.0), G78)
    c = diagonal_rates(OperatingPoint(5.0), G78)
    assert o.as_tuple() == pytest.approx(c.as_tuple(), rel=1e-6)


def test_total_rate_angle_independent_within_estimate():
    point = OperatingPoint(2.0)
    totals, errs = [], []
    for a, b in ((0.0, 0.0), (0.3, 1.1), (math.pi / 8, math.pi / 8), (1.0, -0.4)):
        r = oracle_rate_bruteforce(HwpAngles(a, b), point, FilterSpec.gaussian(1.0))
        totals.append(r.total)
        errs.append(r.estimated_error)
    assert max(totals) - min(totals) <= 4 * max(errs) + 1e-13 * max(totals)


def test_refinement_reduces_error_without_filter():
    angles, point = HwpAngles(0.3, 1.1), OperatingPoint(3.0)
    closed = np.array(general_rates(angles, point, FilterSpec.none()).as_tuple())
    errors = []
    for grid in (200, 400, 800):
        o = oracle_rate_bruteforce(angles, point, FilterSpec.none(), grid=grid, tol=None)
        errors.append(np.max(np.abs(np.array(o.as_tuple()) - closed)) / closed.sum())
    assert errors[0] > errors[1] > errors[2]


def test_refinement_never_hurts_with_gaussian():
    angles, point = HwpAngles(0.3, 1.1), OperatingPoint(3.0)
    closed = np.array(general_rates(angles, point, G78).as_tuple())
    errors = [
        np.max(np.abs(np.array(oracle_rate_bruteforce(angles, point, G78, grid=g).as_tuple()) - closed))
        for g in (200, 400, 800)
    ]
    assert errors[2] <= errors[0] + 1e-14 * closed.sum()


def test_coarse_grid_is_rejected():
    with pytest.raises(OracleResolutionError):
        oracle_rate_bruteforce(DIAG, OperatingPoint(0.0), G78, grid=50)
    with pytest.raises(OracleResolutionError):
        # Z = 80 needs far more than 400 steps across the band
        oracle_rate_bruteforce(DIAG, OperatingPoint(0.0), FilterSpec.gaussian(80.0), grid=400)


def test_unresolved_tail_is_reported():
    # a sharp-edged filter rings for a long time; the default window cannot reach 1e-7
    with pytest.raises(OracleResolutionError):
        oracle_rate_bruteforce(HwpAngles(0.3, 1.1), OperatingPoint(3.0), FilterSpec.rectangular(2.0))


def test_result_metadata():
    r = oracle_rate_bruteforce(DIAG, OperatingPoint(1.0), G78, grid=400)
    assert r.grid_resolution == 400
    assert r.estimated_error >= 0
    assert r.total == pytest.approx(sum(r.as_tuple()))
