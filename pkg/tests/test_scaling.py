import io
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nvpower.concentrators import CpwGeometry, GridSpec, LoopGeometry
from nvpower.core import (Beam, DetectorModel, NoiseModel, NVEnsemble, Protocol, ProtocolKind,
                          Regime)
from nvpower.errors import DomainError
from nvpower.scaling import (SweepParameter, SweepRow, SweepSpec, auto_windows, chain_sensitivity,
                             classify_fixed_thickness, cpw_loop_ratio, crossover_width,
                             fit_exponent, fixed_thickness_eta_scaling, fixed_thickness_zeta,
                             predicted_exponents, probe_geometry, sweep_csv, sweep_sensitivity,
                             verify_size_exponents)


def model(kind="slope", kn=0.5, p=1.0):
    return DetectorModel(Protocol(kind, 1e4), NoiseModel(kn, 1.0), NVEnsemble(8e23, 1e5), p, 1e9)


def close(a, b, rel):
    return a == pytest.approx(b, rel=rel, abs=0)


@pytest.mark.parametrize("geometry,beam,regime,kp,kn,size,l", [
    ("cpw", "parallel", "saturated", 1, 0.5, 0, Fraction(-1)),
    ("cpw", "parallel", "saturated", 2, 0.5, 1, Fraction(-1, 2)),
    ("cpw", "parallel", "linear", 1, 0.0, 2, -2),
    ("cpw", "perpendicular", "saturated", 1, 0.5, -1, -1),
    ("cpw", "perpendicular", "linear", 2, 0.5, Fraction(3, 2), 0),
    ("loop", "loop", "saturated", 1, 0.5, -1, None),
    ("loop", "loop", "saturated", 2, 0.0, -1, None),
    ("loop", "loop", "linear", 2, 0.5, Fraction(3, 2), None),
])
def test_predicted_exponents(geometry, beam, regime, kp, kn, size, l):
    pred = predicted_exponents(geometry, beam, regime, kp, kn)
    assert pred.size_exp == size and isinstance(pred.size_exp, Fraction)
    assert pred.l_exp == l


def test_predicted_exponents_rejects():
    with pytest.raises(DomainError):
        predicted_exponents("cpw", "parallel", "intermediate", 1, 0.5)
    with pytest.raises(DomainError):
        predicted_exponents("cpw", "parallel", "saturated", 3, 0.5)
    with pytest.raises(DomainError):
        predicted_exponents("loop", "parallel", "saturated", 1, 0.5)


def _rows(fn, sizes, regime=Regime.SATURATED):
    return [SweepRow(float(s), fn(s), "W/Hz", regime, 1.0) for s in sizes]


def test_fit_recovers_synthetic_power_law():
    sizes = np.logspace(-7, -5, 21)
    fit = fit_exponent(_rows(lambda w: 3 * w * w, sizes), (1e-7, 1e-5))
    assert abs(fit.exponent - 2) < 1e-9
    assert fit.points == 21 and fit.max_residual < 1e-9


def test_fit_rejects_mixed_regimes_and_short_windows():
    sizes = np.logspace(-7, -5, 10)
    rows = _rows(lambda w: w, sizes[:5]) + _rows(lambda w: w, sizes[5:], Regime.LINEAR)
    with pytest.raises(DomainError, match="mixed"):
        fit_exponent(rows, (1e-7, 1e-5))
    with pytest.raises(DomainError):
        fit_exponent(rows, (1e-7, 1.2e-7))


def test_crossover_examples():
    assert close(crossover_width(1.0, 1e9), math.sqrt(1e-9), 1e-12)
    assert round(crossover_width(1.0, 1e9) / 1e-6, 1) == 31.6
    assert close(crossover_width(0.01, 1e9, "loop", Beam.LOOP_AXIAL), math.sqrt(1e-11 / math.pi), 1e-12)
    assert close(crossover_width(1.0, 1e9, "cpw", Beam.PERPENDICULAR_CPW, c1=0.5), math.sqrt(2e-9), 1e-12)
    lo, hi = auto_windows(1e-7, 1e-3, 1e-5)
    assert close(lo[1], 1e-6, 1e-12) and close(hi[0], 1e-4, 1e-12)


def test_ratio_examples():
    assert close(cpw_loop_ratio(10e-6, 1e-3, 1, 0.5), 1e-2, 1e-12)
    assert close(cpw_loop_ratio(10e-6, 1e-3, 2, 0.5), 1e-1, 1e-12)
    assert close(cpw_loop_ratio(10e-6, 1e-3, 1, 0.0), 1e-4, 1e-12)
    with pytest.raises(DomainError):
        cpw_loop_ratio(0.0, 1e-3, 1, 0.5)


def test_fixed_thickness_zeta_examples():
    assert close(fixed_thickness_zeta(1.0, 1.0, 1), 1 / math.sqrt(2), 1e-14)
    assert close(fixed_thickness_zeta(1.0, 1.0, 2), 0.5, 1e-14)
    assert fixed_thickness_zeta(1.0, 1e-9, 1) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        fixed_thickness_eta_scaling(1.0, 1.0, 1, 0.5, Regime.INTERMEDIATE)


@given(r=st.floats(1e-3, 1e3), t=st.floats(1e-3, 1e3))
def test_fixed_thickness_linear_regime_increasing(r, t):
    f = lambda x: fixed_thickness_eta_scaling(x, t, 2, 0.5, Regime.LINEAR)
    assert f(r * 1.01) > f(r)


def test_fixed_thickness_shapes():
    slope = classify_fixed_thickness(1)
    assert slope.kind == "decreasing" and slope.plateau == "large-R"
    var = classify_fixed_thickness(2)
    assert var.kind == "minimum" and var.stationary_r_over_t == pytest.approx(1.0, abs=1e-6)
    assert classify_fixed_thickness(1, regime=Regime.LINEAR).kind == "increasing"


def test_probe_geometry_shapes():
    w = 10e-6
    _, v, a, d = probe_geometry(CpwGeometry(w), Beam.PARALLEL_CPW)
    assert close(v, w * w * 1e-3, 1e-12) and close(a, w * w, 1e-12) and d == 1e-3
    _, v, a, d = probe_geometry(CpwGeometry(w), Beam.PERPENDICULAR_CPW)
    assert close(a, w * w, 1e-12) and close(v, w ** 3, 1e-12)
    _, v, a, _ = probe_geometry(LoopGeometry(w), Beam.LOOP_AXIAL)
    assert close(a, math.pi * w * w, 1e-12) and close(v, math.pi * w ** 3, 1e-12)
    with pytest.raises(DomainError):
        probe_geometry(LoopGeometry(w), Beam.PARALLEL_CPW)


def _sweep(parameter, beam, kind, **kw):
    spec = SweepSpec(parameter, 1e-7, 1e-3, 81, model(kind), beam, **kw)
    return sweep_sensitivity(spec)


def test_sweep_parallel_slope_plateau_then_rise():
    rows = _sweep(SweepParameter.CPW_WIDTH, Beam.PARALLEL_CPW, "slope")
    etas = np.array([r.eta for r in rows])
    sizes = np.array([r.param for r in rows])
    small = etas[sizes < 1e-6]
    assert small.max() / small.min() < 1.01
    large = etas[sizes > 1e-4]
    assert np.all(np.diff(large) > 0)


def test_sweep_perpendicular_slope_has_minimum():
    rows = _sweep(SweepParameter.CPW_WIDTH, Beam.PERPENDICULAR_CPW, "slope")
    etas = [r.eta for r in rows]
    k = int(np.argmin(etas))
    assert 0 < k < len(etas) - 1
    assert np.all(np.diff(etas[:k + 1]) < 0) and np.all(np.diff(etas[k:]) > 0)


def test_sweep_loop_variance_monotone():
    rows = _sweep(SweepParameter.LOOP_RADIUS, Beam.LOOP_AXIAL, "variance")
    assert np.all(np.diff([r.eta for r in rows]) > 0)


def test_linear_regime_favours_smaller_concentrators():
    # in the linear window shrinking w towards saturation always helps
    rows = _sweep(SweepParameter.CPW_WIDTH, Beam.PARALLEL_CPW, "variance", p_lasers=(0.01,))
    lin = [r.eta for r in rows if r.regime is Regime.LINEAR]
    assert len(lin) > 10 and np.all(np.diff(lin) > 0)


def test_sweep_ordering_and_regime_tags():
    rows = _sweep(SweepParameter.CPW_WIDTH, Beam.PARALLEL_CPW, "slope", p_lasers=(1.0, 0.01))
    assert [r.p_laser for r in rows] == [0.01] * 81 + [1.0] * 81
    order = {Regime.SATURATED: 0, Regime.INTERMEDIATE: 1, Regime.LINEAR: 2}
    for p in (0.01, 1.0):
        tags = [order[r.regime] for r in rows if r.p_laser == p]
        assert tags == sorted(tags)


def test_sweep_csv_header():
    rows = _sweep(SweepParameter.CPW_WIDTH, Beam.PARALLEL_CPW, "slope")
    buf = io.StringIO()
    sweep_csv(rows, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "param_m,eta,unit,regime,p_laser_w"
    assert len(lines) == 82 and lines[1].endswith(",W/Hz,saturated,1.00000000e+00")


def test_sweep_spec_validation():
    with pytest.raises(DomainError):
        SweepSpec(SweepParameter.LOOP_RADIUS, 1e-7, 1e-3, 81, model(), Beam.PARALLEL_CPW)
    with pytest.raises(DomainError):
        SweepSpec(SweepParameter.CPW_WIDTH, 1e-3, 1e-7, 81, model())
    with pytest.raises(DomainError):
        SweepSpec(SweepParameter.CPW_WIDTH, 1e-7, 1e-3, 81, model(), mode="exact")


def test_field_map_sweep_mode():
    rows = sweep_sensitivity(SweepSpec(SweepParameter.CPW_WIDTH, 1e-6, 1e-4, 8, model(),
                                       Beam.PARALLEL_CPW, mode="field-map", grid=GridSpec(61, 61)))
    analytic = sweep_sensitivity(SweepSpec(SweepParameter.CPW_WIDTH, 1e-6, 1e-4, 8, model()))
    ratios = [a.eta / f.eta for a, f in zip(analytic, rows)]
    # zeta is size independent, so the field-map curve is the analytic one times a constant
    assert max(ratios) / min(ratios) == pytest.approx(1.0, abs=1e-6)
    assert all(r.error is None for r in rows)


def test_chain_uses_zeta_as_a_factor():
    g = CpwGeometry(10e-6)
    a = chain_sensitivity(model(), g, Beam.PARALLEL_CPW)
    b = chain_sensitivity(model(), g, Beam.PARALLEL_CPW, zeta=0.5)
    assert close(b.eta / a.eta, 4.0, 1e-12)
    v = chain_sensitivity(model("variance"), g, Beam.PARALLEL_CPW)
    vb = chain_sensitivity(model("variance"), g, Beam.PARALLEL_CPW, zeta=0.5)
    assert close(vb.eta / v.eta, 2.0, 1e-12)


def test_size_exponents_all_pass():
    records = verify_size_exponents(model(), "cpw", Beam.PARALLEL_CPW)
    assert records and all(r.passed for r in records)
