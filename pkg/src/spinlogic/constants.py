"""Physical constants (CODATA 2018, SI) shared by every module."""

HBAR = 1.054571817e-34  # J s
M0 = 9.1093837015e-31  # kg
EV = 1.602176634e-19  # J per eV
E_CHARGE = 1.602176634e-19  # C
H_PLANCK = 6.62607015e-34  # J s

# Conductance quantum per spin channel, e^2/h, in siemens.
G_SPIN = E_CHARGE**2 / H_PLANCK
