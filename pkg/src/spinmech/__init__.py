"""Simulator for spin qubits in a suspended membrane coupled to a
vibrational mode: sideband cooling, multicomponent cat preparation and
mechanical squeezing, driven by Lindblad master equations on truncated
qubit (x) Fock spaces."""

__version__ = "0.1.0"
