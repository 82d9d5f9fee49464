import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from biphoton import FilterSpec, OperatingPoint, pair_integrals
from biphoton.errors import AmbiguityError, DataFormatError, RegimeError
from biphoton.experiment.config import (
    CrystalConfig,
    MeasuredPoint,
    PhysicalFilter,
    dimensionless_filter_width,
    m_of_temperature,
    operating_point,
    resolve_filter,
)
from biphoton.experiment.derived import OPTIMAL_CHSH, chsh, fringe_visibility, visibility_scan
from biphoton.experiment.fitting import apply_fit, fit_slope, synthetic_data
from biphoton.experiment.io import read_measurements, write_amplitude_csv, write_sweep_csv
from biphoton.experiment.sweep import (
    MEASURED_PEAK_TEMPERATURES,
    calibrate_slope,
    correlation_peak,
    temperature_grid,
    temperature_sweep,
)
from biphoton.experiment.derived import GridSpec, amplitude_map_export

A_STAR = 1.2925e12
CRYSTAL = CrystalConfig(slope_a=A_STAR)
G78 = FilterSpec.gaussian(7.8)


# ---------------------------------------------------------------- units


def test_filter_width_conversion():
    assert dimensionless_filter_width(CrystalConfig(), PhysicalFilter()) == pytest.approx(7.8, rel=0.02)
    wide = dimensionless_filter_width(CrystalConfig(), PhysicalFilter(gaussian_width_W=6.4e-9))
    assert wide == pytest.approx(78.0, rel=0.02)
    tiny = dimensionless_filter_width(CrystalConfig(), PhysicalFilter(gaussian_width_W=1e-15))
    assert tiny < 1e-4


def test_filter_width_regime_guard():
    with pytest.raises(RegimeError):
        dimensionless_filter_width(CrystalConfig(), PhysicalFilter(gaussian_width_W=100e-9))


def test_crystal_geometry():
    c = CrystalConfig()
    assert c.delay_DL == pytest.approx(0.09 * 10e-3 / 299_792_458.0)
    assert c.Lc == pytest.approx(5e-3) and c.d == pytest.approx(-1.0)
    assert CrystalConfig(compensator_length=0.0).d == 0.0
    with pytest.raises(ValueError):
        CrystalConfig(n1=1.9, n2=1.8)
    with pytest.raises(ValueError):
        CrystalConfig(slope_a=-1.0)


def test_m_of_temperature():
    assert m_of_temperature(CRYSTAL, CRYSTAL.T_opt) == 0.0
    t1, t2 = 21.3, 30.7
    lhs = m_of_temperature(CRYSTAL, t1) + m_of_temperature(CRYSTAL, t2)
    rhs = m_of_temperature(CRYSTAL, t1 + t2 - CRYSTAL.T_opt) + m_of_temperature(CRYSTAL, CRYSTAL.T_opt)
    assert lhs == pytest.approx(rhs)
    with pytest.raises(ValueError):
        m_of_temperature(CrystalConfig(), 20.0)
    assert operating_point(CRYSTAL, 30.0).d == -1.0


def test_resolve_filter():
    assert resolve_filter(CRYSTAL, G78) is G78
    assert resolve_filter(CRYSTAL, PhysicalFilter()).kind == "gaussian"
    assert resolve_filter(CRYSTAL, None) == FilterSpec.none()
    with pytest.raises(TypeError):
        resolve_filter(CRYSTAL, "gaussian:7.8")


def test_measured_point_validation():
    with pytest.raises(ValueError):
        MeasuredPoint(20.0, 1.5)
    with pytest.raises(ValueError):
        MeasuredPoint(20.0, 0.1, sigma=0.0)


# ---------------------------------------------------------------- sweeps


def test_temperature_grid_inclusive():
    g = temperature_grid(5.0, 36.0, 0.05)
    assert g[0] == 5.0 and g[-1] == 36.0 and g.size == 621
    with pytest.raises(ValueError):
        temperature_grid(5.0, 6.0, 0.0)


def test_sweep_row_at_optimum():
    rows = temperature_sweep(CRYSTAL, G78, (30.0, 40.0), 0.1)
    at_opt = min(rows, key=lambda r: abs(r.T - CRYSTAL.T_opt))
    assert at_opt.E == pytest.approx(-1.0, abs=1e-9)
    assert max(rows, key=lambda r: r.relative_rate) is at_opt


def test_sweep_mirror_symmetry():
    T_opt = CRYSTAL.T_opt
    rows = temperature_sweep(CRYSTAL, G78, (T_opt - 6, T_opt + 6), 0.5)
    E = [r.E for r in rows]
    assert np.allclose(E, E[::-1], atol=1e-9)


def test_sweep_records_failures(monkeypatch):
    import biphoton.experiment.sweep as sweep
    from biphoton.errors import QuadratureError

    real = sweep.pair_integrals

    def flaky(point, *args, **kwargs):
        if point.m > 2:
            raise QuadratureError("budget exhausted")
        return real(point, *args, **kwargs)

    monkeypatch.setattr(sweep, "pair_integrals", flaky)
    rows = temperature_sweep(CRYSTAL, G78, (34.0, 36.0), 0.5)
    bad = [r for r in rows if r.error]
    assert bad and all(math.isnan(r.E) for r in bad)
    assert all(not math.isnan(r.E) for r in rows if not r.error)


def test_wide_filter_has_smaller_oscillations():
    narrow = temperature_sweep(CRYSTAL, G78, (5.0, 30.0), 0.1)
    wide = temperature_sweep(CRYSTAL, FilterSpec.gaussian(80.0), (5.0, 30.0), 0.1)
    assert max(abs(r.E) for r in wide) < max(abs(r.E) for r in narrow)


def test_correlation_peak_near_four_pi():
    m, E = correlation_peak(G78, 1)
    assert abs(m - 4 * math.pi) < 1.0 and E > 0.4


def test_slope_calibration_places_first_peak():
    cal = calibrate_slope(CrystalConfig(), G78, MEASURED_PEAK_TEMPERATURES)
    assert cal.order == 2
    assert cal.predicted_peaks[0] == pytest.approx(28.6, abs=1e-9)
    assert all(abs(p - t) < 0.5 for p, t in zip(cal.predicted_peaks, MEASURED_PEAK_TEMPERATURES))
    assert cal.slope_a == pytest.approx(A_STAR, rel=1e-3)
    with pytest.raises(ValueError):
        calibrate_slope(CrystalConfig(), G78, (40.0,))


# ---------------------------------------------------------------- fitting


FIT_T = np.arange(20.0, 35.01, 0.5)


def test_fit_recovers_noise_free_slope():
    data = synthetic_data(CRYSTAL, G78, FIT_T)
    result = fit_slope(data, CrystalConfig(), G78)
    assert result.slope_a == pytest.approx(A_STAR, rel=1e-3)
    assert result.residual < 1e-8
    assert apply_fit(CrystalConfig(), result).slope_a == result.slope_a


@pytest.mark.slow
def test_fit_with_noise_over_100_seeds():
    worst = 0.0
    for seed in range(100):
        data = synthetic_data(CRYSTAL, G78, FIT_T, noise=0.05, rng=np.random.default_rng(seed))
        worst = max(worst, abs(fit_slope(data, CrystalConfig(), G78).slope_a / A_STAR - 1))
    assert worst < 0.02


def test_fit_round_trip_with_t_opt():
    truth = CrystalConfig(slope_a=A_STAR, T_opt=35.6)
    data = synthetic_data(truth, G78, FIT_T)
    result = fit_slope(data, CrystalConfig(), G78, fit_T_opt=True)
    assert result.fitted_T_opt
    assert result.slope_a == pytest.approx(A_STAR, rel=1e-3)
    assert result.T_opt == pytest.approx(35.6, abs=0.01)


def test_fit_round_trip_from_sweep():
    rows = temperature_sweep(CRYSTAL, G78, (18.0, 35.0), 0.5)
    data = [MeasuredPoint(r.T, r.E) for r in rows]
    assert fit_slope(data, CrystalConfig(), G78).slope_a == pytest.approx(A_STAR, rel=1e-3)


def test_fit_needs_five_points():
    data = synthetic_data(CRYSTAL, G78, [25.0, 28.0, 31.0])
    with pytest.raises(AmbiguityError):
        fit_slope(data, CrystalConfig(), G78)


def test_fit_flat_data_is_ambiguous():
    data = [MeasuredPoint(T, -1.0) for T in (35.1, 35.1, 35.1, 35.1, 35.1)]
    with pytest.raises(AmbiguityError):
        fit_slope(data, CrystalConfig(), G78)


def test_fit_rejects_bad_range():
    data = synthetic_data(CRYSTAL, G78, FIT_T[:8])
    with pytest.raises(ValueError):
        fit_slope(data, CrystalConfig(), G78, a_range=(1e12, 1e11))


# ---------------------------------------------------------------- derived quantities


def test_chsh_optimum_and_degradation():
    assert chsh(OperatingPoint(0.0), G78, OPTIMAL_CHSH) == pytest.approx(2 * math.sqrt(2), abs=1e-12)
    assert chsh(OperatingPoint(5.0), G78) < 2 * math.sqrt(2)


def test_visibility_scan():
    betas = np.linspace(0, math.pi / 2, 91)
    assert visibility_scan(0.0, betas, OperatingPoint(0.0), G78) == pytest.approx(1.0, abs=1e-12)
    off_peak = visibility_scan(math.pi / 8, betas, OperatingPoint(5.0), G78)
    pi = pair_integrals(OperatingPoint(5.0), G78)
    assert off_peak == pytest.approx(abs(pi.i2) / pi.i1, rel=1e-3)
    with pytest.raises(ValueError):
        visibility_scan(0.0, [0.0, 0.1, 0.2], OperatingPoint(0.0), G78)


def test_fringe_visibility():
    assert fringe_visibility([1.0, 3.0, 2.0]) == pytest.approx(0.5)
    assert fringe_visibility([0.0, 0.0]) == 0.0


# ---------------------------------------------------------------- CSV


def test_read_measurements_formats():
    text = "# run 1\nT_C,E,sigma\n20.0,-0.5,0.02\n\n21.0,0.3\n"
    points = read_measurements(io.StringIO(text))
    assert points == [MeasuredPoint(20.0, -0.5, 0.02), MeasuredPoint(21.0, 0.3)]


@pytest.mark.parametrize("text, line", [
    ("T,E\n20,abc\n", 2),
    ("20,0.1\nT,E\n", 2),
    ("20,0.1,0.01,5\n", 1),
    ("20,1.7\n", 1),
])
def test_read_measurements_errors(text, line):
    with pytest.raises(DataFormatError, match=f"line {line}"):
        read_measurements(io.StringIO(text))


def test_sweep_csv_round_trip(tmp_path):
    rows = temperature_sweep(CRYSTAL, G78, (30.0, 31.0), 0.5)
    path = tmp_path / "sweep.csv"
    write_sweep_csv(rows, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "T_C,m,E,I1,I2,Rpp,Rpm,relative_rate"
    first = [float(x) for x in lines[1].split(",")]
    assert first[0] == 30.0 and first[2] == rows[0].E


def test_amplitude_csv(tmp_path):
    amp = amplitude_map_export(OperatingPoint(1.0), G78, grid_spec=GridSpec(n_a=3, n_b=2))
    buf = io.StringIO()
    write_amplitude_csv(amp, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0].startswith("tau_a,tau_b,re_first") and len(lines) == 7


@settings(max_examples=25, deadline=None)
@given(st.floats(5.0, 65.0))
def test_mirror_property(T):
    a = pair_integrals(operating_point(CRYSTAL, T), G78).diagonal_correlation
    b = pair_integrals(operating_point(CRYSTAL, 2 * CRYSTAL.T_opt - T), G78).diagonal_correlation
    assert a == pytest.approx(b, abs=1e-9)
