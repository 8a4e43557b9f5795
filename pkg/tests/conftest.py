import math

import pytest

from isac6d import ArrayGeometry, OfdmGrid, SphericalPoint, TargetState

F0 = 28e9
DF = 480e3
HALF_LAMBDA = 3e8 / (2 * F0)


@pytest.fixture
def grid():
    return OfdmGrid(32, DF, F0, 32)


@pytest.fixture
def hu():
    return ArrayGeometry(8, 8, HALF_LAMBDA, F0)


@pytest.fixture
def ru():
    return ArrayGeometry(16, 16, HALF_LAMBDA, F0)


@pytest.fixture
def target():
    pos = SphericalPoint(120.0, math.radians(75), math.radians(20))
    return TargetState(pos, 15.0, math.radians(2), math.radians(8))


def dt_eec(target, hu, ru, grid, mode="six_d", suppression=True):
    """Noiseless target-only tensor with the beam on the target."""
    from isac6d import SensingScene, SymbolFrame, erase_symbols, suppress_clutter, synthesize_echoes, tx_beam

    ones = SymbolFrame.ones(grid.n_symbols, grid.m_subcarriers)
    scene = SensingScene(hu, ru, grid, [target], None, None, mode)
    beam = tx_beam(hu, target.position.theta, target.position.phi)
    eec = erase_symbols(synthesize_echoes(scene, beam, ones, 0.0), ones)
    return suppress_clutter(eec) if suppression else eec


DESK = {
    "seed": 20240611,
    "target": {"r_m": 120.0, "theta_deg": 75.0, "phi_deg": 20.0, "v_r_mps": 15.0,
               "omega_theta_degps": 2.0, "omega_phi_degps": 8.0},
}


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
