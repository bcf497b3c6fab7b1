"""dfsim: simulator and pulse-tuning toolkit for protected quantum gates
in a neutral-atom decoherence-free subspace.

Logical qubits live in two-atom states |0_L> = |01>, |1_L> = |10>, which
collective dephasing shifts only by a global phase.  The package builds
the rotating-frame Hamiltonians of the protected primitives (detuned
single-atom phase pulses and four-photon Rydberg pair pulses), propagates
them under Ornstein-Uhlenbeck collective phase noise and non-Hermitian
spontaneous-emission loss, averages the evolution superoperator over
noise trajectories, and reports worst-case fidelities over input-state
sets.  A derivative-free refinement loop tunes pulse parameters around
the closed-form perturbative seeds.
"""

__version__ = "0.1.0"

from . import atoms, effective, engine, gates, kernels, linalg, noise
from .rng import Rng

__all__ = ["atoms", "effective", "engine", "gates", "kernels", "linalg",
           "noise", "Rng", "__version__"]
