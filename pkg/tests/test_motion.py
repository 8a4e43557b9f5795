import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from isac6d import (ArrayGeometry, EchoTensor, EstimationError, NoTargetError, OfdmGrid, PipelineConfig, SphericalPoint,
                    TargetState, UnobservableError, VirtualVelocitySample, estimate_6d, estimate_distance,
                    estimate_horizontal, estimate_pitch, estimate_virtual_velocities, fit_plane,
                    plane_coeffs_forward, recover_velocities)
from isac6d.channel import RangeAmbiguityWarning
from isac6d.harness import config_from_mapping, run_trial
from isac6d.harness.sweep import errors_in_report_units, truth_vector
from isac6d.motion import velocity_ambiguity

from conftest import DESK, DF, F0, HALF_LAMBDA, dt_eec

D = HALF_LAMBDA


def _at(theta_deg, phi_deg, **kw):
    return TargetState(SphericalPoint(kw.pop("r", 120.0), math.radians(theta_deg), math.radians(phi_deg)), **kw)


@pytest.fixture
def g16():
    return OfdmGrid(16, DF, F0, 16)


def test_pitch_examples(hu, ru, g16):
    zero = estimate_pitch(dt_eec(_at(75, 0, v_r=10.0), hu, ru, g16), ru, F0, D)
    assert zero.value == pytest.approx(0, abs=1e-6)
    up = estimate_pitch(dt_eec(_at(75, 20, v_r=10.0), hu, ru, g16), ru, F0, D)
    assert math.degrees(up.value) == pytest.approx(20, abs=0.01)
    down = estimate_pitch(dt_eec(_at(75, -30, v_r=10.0), hu, ru, g16), ru, F0, D)
    assert down.kappa < 0 and math.degrees(down.value) == pytest.approx(-30, abs=0.01)


def test_horizontal_examples(hu, ru, g16):
    t = dt_eec(_at(90, 20, v_r=10.0), hu, ru, g16)
    phi = estimate_pitch(t, ru, F0, D).value
    assert math.degrees(estimate_horizontal(t, ru, F0, D, phi).value) == pytest.approx(90, abs=1e-6)
    t = dt_eec(_at(75, 20, v_r=10.0), hu, ru, g16)
    phi = estimate_pitch(t, ru, F0, D).value
    assert math.degrees(estimate_horizontal(t, ru, F0, D, phi).value) == pytest.approx(75, abs=0.01)


def test_horizontal_clamps_at_endfire(hu, ru, g16):
    t = dt_eec(_at(0, 0, v_r=10.0), hu, ru, g16)
    est = estimate_horizontal(t, ru, F0, D, phi_hat=1e-4)
    assert est.value == 0.0


def test_horizontal_unobservable_at_zenith(hu, ru, g16):
    t = dt_eec(_at(75, 20, v_r=10.0), hu, ru, g16)
    with pytest.raises(UnobservableError):
        estimate_horizontal(t, ru, F0, D, phi_hat=math.pi / 2)


def test_distance_examples(hu, ru, grid):
    flat = EchoTensor(np.ones((2, 2, 4, 8), dtype=complex), "dt_eec")
    assert estimate_distance(flat, grid).value == pytest.approx(0, abs=1e-9)
    assert estimate_distance(dt_eec(_at(75, 20, v_r=10.0), hu, ru, grid), grid).value == pytest.approx(120, abs=0.05)
    near = dt_eec(_at(75, 20, r=312.0, v_r=10.0), hu, ru, grid)
    assert estimate_distance(near, grid).value == pytest.approx(312, abs=0.05)
    with pytest.warns(RangeAmbiguityWarning):
        far = dt_eec(_at(75, 20, r=320.0, v_r=10.0), hu, ru, grid)
    assert estimate_distance(far, grid).value == pytest.approx(7.5, abs=0.05)


def test_virtual_velocity_examples(hu, ru, grid):
    still = dt_eec(_at(75, 20), hu, ru, grid, suppression=False)
    assert all(abs(s.v) < 1e-9 for s in estimate_virtual_velocities(still, grid, F0))
    radial = dt_eec(_at(75, 20, v_r=15.0), hu, ru, grid)
    samples = estimate_virtual_velocities(radial, grid, F0)
    assert len(samples) == ru.size
    assert all(abs(s.v - 15) < 1e-3 for s in samples)


def test_virtual_velocity_pitch_slope(hu, ru, grid):
    t = _at(75, 20, v_r=15.0, omega_phi=math.radians(8))
    samples = estimate_virtual_velocities(dt_eec(t, hu, ru, grid), grid, F0)
    want = plane_coeffs_forward(t, hu, D)
    column = sorted((s.n_z, s.v) for s in samples if s.n_x == 0)
    slope = np.polyfit([z for z, _ in column], [v for _, v in column], 1)[0]
    assert slope == pytest.approx(want.c, rel=1e-3)


def test_velocity_ambiguity(grid):
    assert velocity_ambiguity(grid) == pytest.approx(3e8 / (4 * F0 * grid.t_s))


def _plane_samples(a, b, c, nx=6, nz=5, noise=None):
    out = []
    for i in range(nx):
        for j in range(nz):
            v = a + b * i + c * j + (0.0 if noise is None else noise())
            out.append(VirtualVelocitySample(i, j, v))
    return out


def test_fit_plane_exact_and_flat():
    assert fit_plane(_plane_samples(3.0, -0.2, 0.05)) == pytest.approx((3.0, -0.2, 0.05), abs=1e-12)
    assert fit_plane(_plane_samples(7.0, 0.0, 0.0)) == pytest.approx((7.0, 0.0, 0.0), abs=1e-12)


def test_fit_plane_line_for_single_column():
    coeffs = fit_plane(_plane_samples(1.0, 0.0, 0.3, nx=1, nz=8))
    assert coeffs == pytest.approx((1.0, 0.0, 0.3), abs=1e-12)


def test_fit_plane_degenerate():
    with pytest.raises(EstimationError, match="both x and z"):
        fit_plane([VirtualVelocitySample(2, 3, v) for v in (1.0, 2.0, 3.0)])
    with pytest.raises(EstimationError, match="two samples"):
        fit_plane(_plane_samples(1.0, 0.0, 0.0, nx=1, nz=1))
    diagonal = [VirtualVelocitySample(i, i, float(i)) for i in range(5)]
    with pytest.raises(EstimationError, match="collinear"):
        fit_plane(diagonal)


def test_fit_plane_noise_scaling():
    rng = np.random.default_rng(0)
    sizes = [4, 8, 16, 32]
    errs = []
    for n in sizes:
        trials = [fit_plane(_plane_samples(2.0, 0.1, -0.1, n, n, lambda: rng.normal(0, 0.5))).a - 2.0
                  for _ in range(400)]
        errs.append(np.sqrt(np.mean(np.square(trials))))
    counts = np.square(sizes)
    slope = np.polyfit(np.log(counts), np.log(errs), 1)[0]
    assert slope == pytest.approx(-0.5, abs=0.1)


def test_recover_examples(hu):
    v = recover_velocities((4.0, 0.0, 0.0), 1.0, 0.3, hu, D)
    assert v[:3] == pytest.approx((4.0, 0.0, 0.0)) and v.unobservable == ()
    v = recover_velocities((0.0, 0.0, 0.01), 1.0, 0.0, hu, D)
    assert v.omega_phi == pytest.approx(-2 * 0.01 / D, rel=1e-15)


def test_recover_flags_unobservable(hu):
    v = recover_velocities((1.0, 0.1, 0.1), 0.0, 0.2, hu, D)
    assert math.isnan(v.omega_theta) and "omega_theta" in v.unobservable
    v = recover_velocities((1.0, 0.1, 0.1), 1.0, math.pi / 2, hu, D)
    assert set(v.unobservable) == {"omega_phi", "omega_theta", "v_r"}


@settings(max_examples=300)
@given(st.floats(0.05, math.pi - 0.05), st.floats(-1.5, 1.5), st.floats(-50, 50),
       st.floats(-1, 1), st.floats(-1, 1), st.integers(1, 16), st.integers(1, 16))
def test_forward_inverse_identity(theta, phi, v_r, w_t, w_p, nx, nz):
    hu = ArrayGeometry(nx, nz, D, F0)
    s = TargetState(SphericalPoint(100.0, theta, phi), v_r, w_t, w_p)
    got = recover_velocities(plane_coeffs_forward(s, hu, D), theta, phi, hu, D)
    for est, true in zip(got[:3], (v_r, w_t, w_p)):
        assert est == pytest.approx(true, rel=1e-9, abs=1e-9)


def _pipeline(hu, ru, grid, **kw):
    return PipelineConfig(hu, ru, grid, **kw)


def test_end_to_end_noiseless(hu, ru, grid, target):
    est = estimate_6d(dt_eec(target, hu, ru, grid), _pipeline(hu, ru, grid))
    assert est.r_hat == pytest.approx(120, abs=0.1)
    assert math.degrees(est.theta_hat) == pytest.approx(75, abs=0.05)
    assert math.degrees(est.phi_hat) == pytest.approx(20, abs=0.05)
    assert est.v_r_hat == pytest.approx(15, abs=0.05)
    assert math.degrees(est.omega_theta_hat) == pytest.approx(2, abs=0.5)
    assert math.degrees(est.omega_phi_hat) == pytest.approx(8, abs=0.5)
    assert est.diagnostics.residual_rms < 1e-6
    assert est.diagnostics.failed_antennas == 0


def test_raw_tensor_needs_symbols(hu, ru, grid, target):
    t = EchoTensor(np.ones((16, 16, 32, 32), dtype=complex))
    with pytest.raises(Exception, match="erasure"):
        estimate_6d(t, _pipeline(hu, ru, grid))


def test_zero_signal_reports_no_target(hu, ru, grid):
    t = EchoTensor(np.zeros((16, 16, 32, 32), dtype=complex), "dt_eec")
    with pytest.raises(NoTargetError) as info:
        estimate_6d(t, _pipeline(hu, ru, grid))
    assert info.value.step == "pitch"
    assert "mdl" in str(info.value)


def test_four_d_channel_has_no_rotation(hu, ru, grid, target):
    est = estimate_6d(dt_eec(target, hu, ru, grid, mode="four_d"), _pipeline(hu, ru, grid))
    assert math.degrees(est.omega_theta_hat) == pytest.approx(0, abs=1e-3)
    assert math.degrees(est.omega_phi_hat) == pytest.approx(0, abs=1e-3)
    assert est.v_r_hat == pytest.approx(15, abs=1e-3)


def test_single_column_falls_back_to_aim(hu, grid, target):
    ru = ArrayGeometry(1, 16, D, F0)
    cfg = _pipeline(hu, ru, grid, aim_theta=target.position.theta)
    est = estimate_6d(dt_eec(target, hu, ru, grid), cfg)
    assert est.theta_hat == target.position.theta
    assert any("beam aim" in f for f in est.diagnostics.flags)


def _mc_errors(cfg, snr_db, trials, offset=0):
    truth = truth_vector(cfg)
    out = []
    for i in range(trials):
        est = run_trial(cfg, snr_db, offset + i)
        out.append(errors_in_report_units(est, truth))
    return np.array(out)


def test_monotone_noise_response():
    cfg = config_from_mapping(DESK)
    mean_abs = np.array([np.mean(np.abs(_mc_errors(cfg, snr, 50)), axis=0) for snr in (0.0, 10.0, 20.0)])
    for col in mean_abs.T:
        inversions = [(a, b) for a, b in zip(col, col[1:]) if b > a]
        assert len(inversions) <= 1
        assert all(b <= 1.1 * a for a, b in inversions)


@pytest.fixture(scope="module")
def errors_20db():
    return _mc_errors(config_from_mapping(DESK), 20.0, 200, offset=10_000)


# The pitch estimate sees the frame-averaged elevation, which sits omega_phi * T_s * (N-1)/2
# below the frame-start value; at 20 dB that offset is about a third of the RMSE.
@pytest.mark.parametrize("index", [
    0, 1,
    pytest.param(2, marks=pytest.mark.xfail(strict=True, reason="mid-frame pitch offset")),
    3, 4, 5,
])
def test_unbiasedness_proxy(errors_20db, index):
    col = errors_20db[:, index]
    assert abs(col.mean()) < 0.1 * np.sqrt(np.mean(col ** 2))
