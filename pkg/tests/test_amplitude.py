import math

import numpy as np
import pytest

from biphoton import FilterSpec, OperatingPoint
from biphoton.amplitude import band_envelopes, envelope_width, equal_phase_direction, two_photon_amplitude
from biphoton.experiment.derived import AmplitudeMap, GridSpec, amplitude_map_export


def test_first_term_vanishes_outside_band():
    value = two_photon_amplitude(0.5, 0.0, OperatingPoint(3.0), FilterSpec.none(), term="first")
    assert abs(value) < 1e-9


def test_boxcar_values_without_filter():
    a1, _ = band_envelopes(np.array([-1.5, -1.0, -0.5, 0.0, 0.5]), OperatingPoint(0.0), FilterSpec.none())
    assert np.allclose(a1, [0, math.pi, 2 * math.pi, math.pi, 0], atol=1e-9)


def test_terms_cancel_at_hom_centre():
    value = two_photon_amplitude(-0.5, 0.0, OperatingPoint(0.0, -1.0), FilterSpec.none())
    assert abs(value) < 1e-9
    # with a filter the emission orders still cancel pointwise at m = 0
    a1, a2 = band_envelopes(np.linspace(-2, 1, 31), OperatingPoint(0.0), FilterSpec.gaussian(1.0))
    assert np.max(np.abs(a1 + a2)) < 1e-9 * np.max(np.abs(a1))


def test_carrier_only_changes_phase():
    args = (np.array([-0.3, 0.2]), np.array([0.1, -0.4]), OperatingPoint(5.0), FilterSpec.gaussian(7.8))
    a = two_photon_amplitude(*args, carrier=0.0)
    b = two_photon_amplitude(*args, carrier=40.0)
    assert np.allclose(np.abs(a), np.abs(b))


def test_invalid_arguments():
    with pytest.raises(ValueError):
        two_photon_amplitude(0.0, 0.0, OperatingPoint(), FilterSpec.none(), carrier=-1)
    with pytest.raises(ValueError):
        two_photon_amplitude(0.0, 0.0, OperatingPoint(), FilterSpec.none(), term="third")


def test_band_widens_with_narrower_filter():
    s = np.linspace(-8, 7, 1501)
    widths = {}
    for Z in (80.0, 7.8, 1.0):
        a1, a2 = band_envelopes(s, OperatingPoint(5.0), FilterSpec.gaussian(Z))
        widths[Z] = envelope_width(s, a1)
    assert widths[80.0] == pytest.approx(0.2813188, abs=1e-6)
    assert widths[80.0] < widths[7.8] < widths[1.0]
    box = envelope_width(s, ((s > -1) & (s < 0)).astype(float))
    assert widths[80.0] == pytest.approx(box, rel=0.03)
    assert widths[1.0] > 4 * box


def test_equal_phase_lines_rotate_towards_antidiagonal():
    # the first emission order alone: a flat spectrum tilts its phase fronts by
    # the detuning, a narrow filter pins them to tau_a + tau_b = const
    grid = GridSpec(-2.0, 1.0, -2.0, 1.0, 61, 61)
    target = np.array([1.0, -1.0]) / math.sqrt(2)
    angle = {}
    for filt in (FilterSpec.none(), FilterSpec.gaussian(1.0)):
        amp = amplitude_map_export(OperatingPoint(5.0), filt, grid_spec=grid)
        direction = equal_phase_direction(amp.tau_a, amp.tau_b, amp.first)
        angle[filt.kind] = math.acos(min(1.0, abs(direction @ target)))
    assert angle["gaussian"] < angle["none"]
    assert angle["gaussian"] < math.radians(2.0)


def test_equal_phase_direction_of_plane_wave():
    ta = tb = np.linspace(0, 1, 21)
    A, B = np.meshgrid(ta, tb)
    d = equal_phase_direction(ta, tb, np.exp(1j * (3 * A + 3 * B)))
    assert d == pytest.approx([1 / math.sqrt(2), -1 / math.sqrt(2)])
    with pytest.raises(ValueError):
        equal_phase_direction(ta, tb, np.ones_like(A))


def test_map_layout_and_samples():
    grid = GridSpec(-1.0, 0.5, -2.0, 0.0, 4, 3)
    amp = amplitude_map_export(OperatingPoint(2.0), FilterSpec.gaussian(7.8), grid_spec=grid)
    assert isinstance(amp, AmplitudeMap)
    assert amp.first.shape == (3, 4)
    rows = list(amp.rows())
    assert len(rows) == 12 and rows[1][:2] == (amp.tau_a[1], amp.tau_b[0])
    sample = amp.samples("first")[5]
    direct = two_photon_amplitude(sample.tau_a, sample.tau_b, OperatingPoint(2.0), FilterSpec.gaussian(7.8),
                                  term="first")
    assert sample.value == pytest.approx(direct)
    with pytest.raises(ValueError):
        GridSpec(n_a=1)
