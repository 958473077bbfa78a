"""Physical constants, CODATA 2018 exact values."""

import math

HBAR = 1.054571817e-34  # J s
KB = 1.380649e-23  # J/K
C_LIGHT = 299792458.0  # m/s

TWO_PI = 2.0 * math.pi
