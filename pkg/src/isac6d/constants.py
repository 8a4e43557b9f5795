"""Physical constants and numerical guards shared across the package."""

SPEED_OF_LIGHT = 3e8
"""Propagation speed (m/s). The rounded value keeps range/Doppler bounds at the familiar figures."""

TRIG_EPS = 1e-3
"""Smallest |cos| or |sin| accepted as a denominator when inverting angles."""
