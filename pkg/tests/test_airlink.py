import cmath
import math

import numpy as np
import pytest

from isac6d import (ArrayGeometry, ClutterModel, EchoTensor, OfdmGrid, SensingScene, SphericalPoint,
                    SymbolFrame, TargetState, erase_symbols, fading_factor, load_tensor, save_tensor,
                    suppress_clutter, synthesize_echoes, tx_beam, upa_steering, sdd_of)
from isac6d.airlink import StageError
from isac6d.channel import draw_clutter_frame

from conftest import DF, F0, HALF_LAMBDA

C = 3e8


def _geometric(count, u):
    """sum_{i<count} exp(j u i) in closed form."""
    if abs(u) < 1e-12:
        return complex(count)
    return (1 - cmath.exp(1j * u * count)) / (1 - cmath.exp(1j * u))


def closed_form_eec(target, hu, ru, grid, aim, power=1.0, rho=1.0):
    """Target-only EEC from the separable model: range and Doppler phases, RX steering,
    and the transmit beam gain written as a product of two geometric series."""
    k = 2 * math.pi * F0 * HALF_LAMBDA / C
    alpha = fading_factor(target.position.r, target.rcs, F0)
    aim_sdd = sdd_of(*aim)
    out = np.zeros((ru.nx, ru.nz, grid.n_symbols, grid.m_subcarriers), dtype=complex)
    for n in range(grid.n_symbols):
        th = target.position.theta - target.omega_theta * n * grid.t_s
        ph = target.position.phi - target.omega_phi * n * grid.t_s
        psi, omega = math.cos(ph) * math.cos(th), math.sin(ph)
        gain = math.sqrt(rho * power / hu.size) * _geometric(hu.nx, k * (psi - aim_sdd.psi)) \
            * _geometric(hu.nz, k * (omega - aim_sdd.omega))
        doppler = cmath.exp(4j * math.pi * F0 * target.v_r * n * grid.t_s / C)
        for m in range(grid.m_subcarriers):
            rng_phase = cmath.exp(-4j * math.pi * (F0 + m * DF) * target.position.r / C)
            for i in range(ru.nx):
                for j in range(ru.nz):
                    steer = cmath.exp(1j * k * (psi * i + omega * j))
                    out[i, j, n, m] = alpha * rng_phase * doppler * steer * gain
    return out


@pytest.fixture
def small():
    grid = OfdmGrid(8, DF, F0, 8)
    return (ArrayGeometry(4, 4, HALF_LAMBDA, F0), ArrayGeometry(4, 4, HALF_LAMBDA, F0), grid)


def test_beam_power_and_broadside(hu):
    b = tx_beam(hu, math.pi / 2, 0.0, power=2.0, rho=0.5)
    assert np.vdot(b, b).real == pytest.approx(1.0, rel=1e-14)
    assert np.allclose(b, math.sqrt(1.0 / hu.size))


def test_beam_peak_gain(hu, target):
    p = target.position
    b = tx_beam(hu, p.theta, p.phi, power=3.0, rho=0.8)
    g = upa_steering(hu, sdd_of(p.theta, p.phi)) @ np.conj(b)
    assert abs(g) == pytest.approx(math.sqrt(0.8 * 3.0 / hu.size) * hu.size, rel=1e-13)


def test_beam_rejects_bad_rho(hu):
    with pytest.raises(ValueError):
        tx_beam(hu, 1.0, 0.0, rho=0.0)


def test_zero_channel_zero_tensor(small):
    hu, ru, grid = small
    scene = SensingScene(hu, ru, grid)
    t = synthesize_echoes(scene, tx_beam(hu, 1.0, 0.1), SymbolFrame.ones(8, 8), 0.0)
    assert t.stage == "raw" and t.shape == (4, 4, 8, 8)
    assert not np.any(t.data)


def test_synthesis_matches_closed_form(small):
    hu, ru, grid = small
    tgt = TargetState(SphericalPoint(80.0, math.radians(70), math.radians(15)), 12.0,
                      math.radians(30), math.radians(-40), rcs=2.0)
    aim = (math.radians(72), math.radians(14))
    sym = SymbolFrame.qpsk(8, 8, np.random.default_rng(4))
    scene = SensingScene(hu, ru, grid, [tgt])
    eec = erase_symbols(synthesize_echoes(scene, tx_beam(hu, *aim, 1.5, 0.9), sym, 0.0), sym)
    want = closed_form_eec(tgt, hu, ru, grid, aim, 1.5, 0.9)
    assert np.max(np.abs(eec.data - want)) < 1e-8 * np.max(np.abs(want))
    dt = suppress_clutter(eec)
    want_dt = want - want.mean(axis=2, keepdims=True)
    assert np.max(np.abs(dt.data - want_dt)) < 1e-8 * np.max(np.abs(want))


def test_noise_variance(small):
    hu, ru, grid = small
    big = OfdmGrid(64, DF, F0, 128)
    scene = SensingScene(hu, ru, big)
    t = synthesize_echoes(scene, tx_beam(hu, 1.0, 0.0), SymbolFrame.ones(128, 64), 0.3,
                          np.random.default_rng(8))
    assert t.data.size >= 1e5
    assert np.mean(np.abs(t.data) ** 2) == pytest.approx(0.09, rel=0.05)
    assert abs(np.mean(t.data)) < 0.01


def test_erasure_identity_and_noise(small):
    hu, ru, grid = small
    ones = SymbolFrame.ones(8, 8)
    raw = EchoTensor(np.random.default_rng(1).standard_normal((4, 4, 8, 8)) + 0j)
    assert np.array_equal(erase_symbols(raw, ones).data, raw.data)
    tgt = TargetState(SphericalPoint(60.0, 1.2, 0.2), v_r=4.0, omega_phi=0.1)
    scene = SensingScene(hu, ru, grid, [tgt])
    beam = tx_beam(hu, 1.2, 0.2)
    sym = SymbolFrame.qpsk(8, 8, np.random.default_rng(2))
    a = erase_symbols(synthesize_echoes(scene, beam, sym, 1e-9, np.random.default_rng(3)), sym)
    b = erase_symbols(synthesize_echoes(scene, beam, ones, 1e-9, np.random.default_rng(3)), ones)
    signal = erase_symbols(synthesize_echoes(scene, beam, ones, 0.0), ones).data
    # same noise draws, rotated by unit-modulus symbols
    assert np.allclose(a.data - signal, (b.data - signal) / sym.symbols, atol=1e-20)
    assert np.mean(np.abs(a.data - signal) ** 2) == pytest.approx(np.mean(np.abs(b.data - signal) ** 2))


def test_symbol_frame_must_be_unit_modulus():
    with pytest.raises(ValueError):
        SymbolFrame(np.full((2, 2), 0.5 + 0j))


def test_stage_checks():
    t = EchoTensor(np.zeros((2, 2, 4, 3), dtype=complex))
    with pytest.raises(StageError):
        suppress_clutter(t)
    eec = erase_symbols(t, SymbolFrame.ones(4, 3))
    with pytest.raises(StageError):
        erase_symbols(eec, SymbolFrame.ones(4, 3))
    with pytest.raises(ValueError):
        suppress_clutter(EchoTensor(np.zeros((2, 2, 1, 3), dtype=complex), "eec"))


def test_static_clutter_removed_exactly(small):
    hu, ru, grid = small
    frame = draw_clutter_frame(ClutterModel("gaussian", beta_c=1.0), ru, hu, grid, np.random.default_rng(0))
    scene = SensingScene(hu, ru, grid, clutter=frame)
    sym = SymbolFrame.qpsk(8, 8, np.random.default_rng(1))
    dt = suppress_clutter(erase_symbols(synthesize_echoes(scene, tx_beam(hu, 1.0, 0.0), sym, 0.0), sym))
    assert np.max(np.abs(dt.data)) < 1e-14


def test_suppression_idempotent():
    data = np.random.default_rng(6).standard_normal((3, 2, 8, 5)) + 0j
    once = suppress_clutter(EchoTensor(data, "eec"))
    twice = suppress_clutter(EchoTensor(once.data, "eec"))
    assert np.allclose(once.data, twice.data, atol=1e-15)


def _kept_energy(n_symbols, kappa):
    tone = np.exp(1j * kappa * np.arange(n_symbols))[None, None, :, None]
    out = suppress_clutter(EchoTensor(tone, "eec"))
    return np.sum(np.abs(out.data) ** 2) / n_symbols


@pytest.mark.parametrize("n_symbols", [16, 32])
def test_suppression_energy_matches_dirichlet(n_symbols):
    for kappa in np.linspace(0.01, math.pi, 40):
        dirichlet = abs(np.mean(np.exp(1j * kappa * np.arange(n_symbols)))) ** 2
        assert _kept_energy(n_symbols, kappa) == pytest.approx(1 - dirichlet, abs=1e-12)


def test_suppression_energy_bound():
    # beyond the first null the kept fraction is at least 1 - 1/N for N = 16 everywhere,
    # and for any N on the DFT grid
    for kappa in np.linspace(2 * math.pi / 16 + 1e-9, math.pi, 200):
        assert _kept_energy(16, kappa) >= 1 - 1 / 16
    for k in range(1, 17):
        assert _kept_energy(32, 2 * math.pi * k / 32) >= 1 - 1 / 32 - 1e-12


def test_clutter_reduction_with_moving_target(hu, ru, grid, target):
    rng = np.random.default_rng(12)
    beam = tx_beam(hu, target.position.theta, target.position.phi)
    sym = SymbolFrame.qpsk(grid.n_symbols, grid.m_subcarriers, rng)
    alone = SensingScene(hu, ru, grid, [target])
    ref = erase_symbols(synthesize_echoes(alone, beam, sym, 0.0), sym)
    p_target = np.mean(np.abs(ref.data) ** 2)
    beta = math.sqrt(10 * p_target)
    frame = draw_clutter_frame(ClutterModel("gaussian", beta_c=beta), ru, hu, grid, rng)
    mixed = erase_symbols(synthesize_echoes(SensingScene(hu, ru, grid, [target], None, frame), beam, sym, 0.0), sym)
    clutter_in = np.sum(np.abs(mixed.data - ref.data) ** 2)
    assert clutter_in / np.sum(np.abs(ref.data) ** 2) == pytest.approx(10, rel=0.05)
    residual = suppress_clutter(mixed).data - suppress_clutter(ref).data
    assert 10 * math.log10(clutter_in / np.sum(np.abs(residual) ** 2)) >= 30


def test_dump_round_trip(tmp_path):
    data = (np.random.default_rng(0).standard_normal((2, 3, 4, 5))
            + 1j * np.random.default_rng(1).standard_normal((2, 3, 4, 5)))
    for stage in ("raw", "eec", "dt_eec"):
        save_tensor(tmp_path / "t.bin", EchoTensor(data, stage), seed=2 ** 63 + 5)
        back, seed = load_tensor(tmp_path / "t.bin")
        assert back.stage == stage and seed == 2 ** 63 + 5
        assert np.array_equal(back.data, data.astype(np.complex64))


def test_dump_rejects_garbage(tmp_path):
    (tmp_path / "bad.bin").write_bytes(b"not a tensor at all, just bytes!!!!!")
    with pytest.raises(ValueError):
        load_tensor(tmp_path / "bad.bin")
