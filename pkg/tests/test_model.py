import math

import numpy as np
import pytest

from biphoton import FilterSpec, HwpAngles, OperatingPoint, filter_amplitude, sinc_half


@pytest.mark.parametrize("x, expected", [(0.0, 1.0), (2 * math.pi, 0.0), (math.pi, 2 / math.pi)])
def test_sinc_half_values(x, expected):
    assert sinc_half(x) == pytest.approx(expected, abs=1e-15)


def test_sinc_half_near_zero_is_smooth():
    x = np.array([1e-12, 1e-8, 1e-4])
    assert np.allclose(sinc_half(x), 1 - x**2 / 24, rtol=0, atol=1e-15)


def test_filter_amplitudes():
    assert filter_amplitude(FilterSpec.gaussian(7.8), 0.0) == 1.0
    assert filter_amplitude(FilterSpec.gaussian(7.8), 7.8) == pytest.approx(math.exp(-1))
    assert filter_amplitude(FilterSpec.rectangular(2.0), 3.0) == 0.0
    assert filter_amplitude(FilterSpec.rectangular(2.0), 1.0) == 1.0
    assert np.all(filter_amplitude(FilterSpec.none(), np.linspace(-1e3, 1e3, 5)) == 1.0)


@pytest.mark.parametrize("text, spec", [
    ("none", FilterSpec.none()),
    ("gaussian:7.8", FilterSpec.gaussian(7.8)),
    ("rect:2", FilterSpec.rectangular(2.0)),
    ("Rectangular:0.5", FilterSpec.rectangular(0.5)),
])
def test_filter_parse(text, spec):
    assert FilterSpec.parse(text) == spec


@pytest.mark.parametrize("text", ["gaussian", "none:3", "lorentz:2", "gaussian:-1", "rect:0"])
def test_filter_parse_rejects(text):
    with pytest.raises(ValueError):
        FilterSpec.parse(text)


def test_operating_point_must_be_finite():
    with pytest.raises(ValueError):
        OperatingPoint(float("nan"))
    with pytest.raises(ValueError):
        OperatingPoint(0.0, float("inf"))


def test_diagonal_coefficients_are_one_half():
    assert np.allclose(HwpAngles.diagonal().coefficients(), 0.5)


def test_coefficients_sum_of_squares():
    for a, b in np.random.default_rng(1).uniform(-3, 3, (20, 2)):
        c1, c2, d1, d2 = HwpAngles(a, b).coefficients()
        assert c1**2 + c2**2 + d1**2 + d2**2 == pytest.approx(1.0)
