"""Physical constants (CODATA), SI units."""

HBAR = 1.054571817e-34   # J s
KB = 1.380649e-23        # J / K
MU_B = 9.274009994e-24   # J / T
G_E = 2.00231930         # electron g-factor
