"""Unit system and physical constants.

Energies are in eV, lengths in Å, times in fs. Rates in Hz only appear at the
I/O boundary, through :data:`HZ_PER_INVERSE_FS`.
"""

import math

HBAR = 0.6582119569
"""Reduced Planck constant in eV·fs."""

H_PLANCK = 2.0 * math.pi * HBAR
"""Planck constant in eV·fs."""

COULOMB_K = 14.39964
"""e²/4πε₀ in eV·Å."""

HBAR2_OVER_2ME = 3.80998
"""ħ²/2mₑ in eV·Å²."""

BOHR_RADIUS = 0.529177210903
"""Hydrogen Bohr radius in Å."""

HZ_PER_INVERSE_FS = 1.0e15
"""Conversion from 1/fs to Hz."""

EV_TO_J = 1.602176634e-19
"""Joules per eV."""

HBAR_SI = 1.054571817e-34
"""Reduced Planck constant in J·s."""

ANGSTROM_TO_M = 1.0e-10
"""Metres per Å."""

MIN_PAIR_SEPARATION = 3.84
"""Smallest allowed intra-pair separation in Å (inclusive)."""

TUNNEL_RANGE = 16.0
"""Tunneling range in Å: pairs must lie within it, distinct pairs beyond it."""

MAX_SWEEP_SEPARATION = 20.0
"""Upper end of the separation sweep in Å."""

FIG1_SEPARATIONS = (15.36, 7.68)
"""Intra-pair separations of the two qubits drawn in the device figure, Å."""

DFT_ANCHORS = ((3.84, 0.3077), (7.72, 0.0887))
"""Cluster-calculation tunnel splittings as (separation Å, splitting eV)."""

HUBBARD_DIM_CAP = 4096
"""Largest dense many-body sector handled by the Hubbard module."""

STATEVECTOR_QUBIT_CAP = 12
"""Largest register for state-vector evolution."""

DENSITY_QUBIT_CAP = 6
"""Largest register for density-matrix evolution."""

TIME_QUANTUM = 1.0e-3
"""Granularity of synthesized gate schedules, fs."""

LINDBLAD_STEP_CONTRACT = 0.05
"""Upper bound of dt·(‖H‖/ħ + Σγ) for the RK4 integrator."""
