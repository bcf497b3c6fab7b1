"""Atomic register model and rotating-frame Hamiltonian builders.

Levels per atom are drawn from ``("0", "1", "e", "r")`` with that fixed
ordering; the product-space basis index of a multi-atom state is the
mixed-radix number over per-atom level indices (atom 0 most significant).

All Hamiltonians are returned divided by hbar, i.e. in angular-frequency
units (rad/s).  Drive builders return Hermitian matrices; the spontaneous
-emission term is anti-Hermitian and is added to the Hamiltonian before
exponentiation.

By default the excited state used by the dephasing pulse and the Rydberg
state are one and the same level ("r"); distinct levels remain available
by giving an atom both "e" and "r".
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .linalg import kron

__all__ = [
    "LEVEL_ORDER",
    "LevelSet",
    "Register",
    "DephaserPulse",
    "RydbergPulse",
    "BlockadeModulation",
    "DecayConfig",
    "embed",
    "dephaser_hamiltonian",
    "rydberg_pair_hamiltonian",
    "raman_hamiltonian",
    "noise_hamiltonian",
    "noise_weights",
    "decay_term",
    "decay_weights",
]

LEVEL_ORDER = ("0", "1", "e", "r")


class LevelError(ValueError):
    """A pulse references a level its target atom does not have."""


@dataclass(frozen=True)
class LevelSet:
    """Ordered subset of ("0","1","e","r") for one atom; always holds 0 and 1."""

    levels: Tuple[str, ...]

    def __init__(self, levels: Sequence[str] = ("0", "1")):
        levels = tuple(levels)
        for lv in levels:
            if lv not in LEVEL_ORDER:
                raise ValueError(f"unknown level {lv!r}")
        if "0" not in levels or "1" not in levels:
            raise ValueError("a LevelSet must contain levels '0' and '1'")
        ordered = tuple(lv for lv in LEVEL_ORDER if lv in levels)
        object.__setattr__(self, "levels", ordered)

    @property
    def dim(self) -> int:
        return len(self.levels)

    def index(self, level: str) -> int:
        try:
            return self.levels.index(level)
        except ValueError:
            raise LevelError(f"level {level!r} not in {self.levels}") from None

    def __contains__(self, level: str) -> bool:
        return level in self.levels


@dataclass(frozen=True)
class Register:
    """Ordered atoms with per-atom level sets and logical (DFS) pairs."""

    level_sets: Tuple[LevelSet, ...]
    pairs: Tuple[Tuple[int, int], ...] = ()

    def __init__(self, level_sets: Sequence[LevelSet], pairs: Sequence[Tuple[int, int]] = ()):
        level_sets = tuple(level_sets)
        pairs = tuple((int(a), int(b)) for a, b in pairs)
        seen = set()
        for a, b in pairs:
            for x in (a, b):
                if not 0 <= x < len(level_sets):
                    raise ValueError(f"pair atom {x} out of range")
                if x in seen:
                    raise ValueError(f"atom {x} belongs to more than one logical pair")
                seen.add(x)
        object.__setattr__(self, "level_sets", level_sets)
        object.__setattr__(self, "pairs", pairs)

    @property
    def n_atoms(self) -> int:
        return len(self.level_sets)

    @property
    def dims(self) -> Tuple[int, ...]:
        return tuple(ls.dim for ls in self.level_sets)

    @property
    def dim(self) -> int:
        d = 1
        for ls in self.level_sets:
            d *= ls.dim
        return d

    def basis_index(self, labels: Sequence[str]) -> int:
        """Index of the product state given one level label per atom."""
        if len(labels) != self.n_atoms:
            raise ValueError("need one level label per atom")
        idx = 0
        for ls, lv in zip(self.level_sets, labels):
            idx = idx * ls.dim + ls.index(lv)
        return idx

    def basis_labels(self) -> list:
        """All product-state label tuples in basis order."""
        return [
            labels
            for labels in itertools.product(*(ls.levels for ls in self.level_sets))
        ]

    def basis_state(self, labels: Sequence[str]) -> np.ndarray:
        psi = np.zeros(self.dim, dtype=complex)
        psi[self.basis_index(labels)] = 1.0
        return psi


def uniform_register(n_atoms: int, levels: Sequence[str] = ("0", "1"),
                     pairs: Sequence[Tuple[int, int]] = ()) -> Register:
    return Register([LevelSet(levels)] * n_atoms, pairs)


# --------------------------------------------------------------------------
# pulses
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class DephaserPulse:
    """Detuned drive of |1> -> excited on a single atom.

    rabi/detuning in rad/s, duration in seconds.  ``excited_level`` is "e"
    for a dedicated excited state or "r" when the shared-level convention
    is in force.
    """

    atom: int
    rabi: complex
    detuning: float
    duration: float
    excited_level: str = "e"

    def __post_init__(self):
        if self.excited_level not in ("e", "r"):
            raise ValueError("excited_level must be 'e' or 'r'")
        if self.generalized_rabi <= 0.0:
            raise ValueError("dephaser pulse needs sqrt(|rabi|^2 + detuning^2) > 0")

    @property
    def generalized_rabi(self) -> float:
        return float(np.hypot(abs(self.rabi), self.detuning))


@dataclass(frozen=True)
class BlockadeModulation:
    """Harmonic variation of the blockade shift: x(t) = 1 + depth*sin(2*pi*f*t + phase)."""

    depth: float = 0.2
    frequency: float = 0.0   # Hz, required > 0 when depth != 0
    phase: float = 0.0

    def __post_init__(self):
        if self.depth != 0.0 and self.frequency <= 0.0:
            raise ValueError("blockade modulation requires a positive frequency")

    def factor(self, t: float) -> float:
        return 1.0 + self.depth * np.sin(2.0 * np.pi * self.frequency * t + self.phase)


@dataclass(frozen=True)
class RydbergPulse:
    """Two-laser drive of an atom pair through the Rydberg level.

    rabi_0 couples |0>-|r> and rabi_1 couples |1>-|r> (complex amplitudes,
    rad/s); detuning / detuning_raman are the paper's single- and two-photon
    detunings (rad/s); blockade is the |rr> shift (rad/s).  ``drive_mask``
    scales the two couplings per atom, which expresses single-atom resonant
    pulses of the unprotected blockade-gate sequence.
    """

    atoms: Tuple[int, int]
    rabi_0: complex
    rabi_1: complex
    detuning: float
    detuning_raman: float
    blockade: float
    duration: float
    modulation: Optional[BlockadeModulation] = None
    drive_mask: Tuple[float, float] = (1.0, 1.0)

    def perturbative_margin(self) -> float:
        """max |Omega| / min |detuning scale|; small means perturbative."""
        om = max(abs(self.rabi_0), abs(self.rabi_1))
        scales = [self.detuning, self.detuning_raman,
                  self.detuning_raman - self.detuning, self.blockade]
        dmin = min(abs(s) for s in scales)
        return float("inf") if dmin == 0.0 else om / dmin

    def is_perturbative(self, threshold: float = 0.1) -> bool:
        return self.perturbative_margin() <= threshold


@dataclass(frozen=True)
class RamanPulse:
    """Resonant |0> <-> |1> rotation on one atom (effective Raman drive).

    The complex phase of ``rabi`` sets the equatorial rotation axis.
    """

    atom: int
    rabi: complex
    duration: float


@dataclass(frozen=True)
class DecayConfig:
    """Spontaneous-emission rates (rad/s) for the excited and Rydberg levels."""

    gamma_e: float = 0.0
    gamma_r: float = 0.0

    def __post_init__(self):
        if self.gamma_e < 0.0 or self.gamma_r < 0.0:
            raise ValueError("decay rates must be >= 0")

    @property
    def is_zero(self) -> bool:
        return self.gamma_e == 0.0 and self.gamma_r == 0.0


# --------------------------------------------------------------------------
# operator builders
# --------------------------------------------------------------------------

def embed(op: np.ndarray, atom: int, reg: Register) -> np.ndarray:
    """Lift a single-atom operator to the register product space."""
    if not 0 <= atom < reg.n_atoms:
        raise ValueError(f"atom index {atom} out of range")
    op = np.asarray(op, dtype=complex)
    d = reg.level_sets[atom].dim
    if op.shape != (d, d):
        raise ValueError(f"operator shape {op.shape} != atom dimension {d}")
    out = np.eye(1, dtype=complex)
    for i, ls in enumerate(reg.level_sets):
        out = kron(out, op if i == atom else np.eye(ls.dim))
    return out


def _single_atom_dephaser(p: DephaserPulse, ls: LevelSet) -> np.ndarray:
    h = np.zeros((ls.dim, ls.dim), dtype=complex)
    ie = ls.index(p.excited_level)
    i1 = ls.index("1")
    h[ie, ie] = -p.detuning
    h[ie, i1] = 0.5 * p.rabi
    h[i1, ie] = 0.5 * np.conj(p.rabi)
    return h


def dephaser_hamiltonian(p: DephaserPulse, reg: Register) -> np.ndarray:
    """Rotating-frame drive of the dephasing (phase) gate on one atom."""
    return embed(_single_atom_dephaser(p, reg.level_sets[p.atom]), p.atom, reg)


def _single_atom_rydberg(p: RydbergPulse, ls: LevelSet, mask: float) -> np.ndarray:
    h = np.zeros((ls.dim, ls.dim), dtype=complex)
    i0, i1, ir = ls.index("0"), ls.index("1"), ls.index("r")
    h[i1, i1] = -p.detuning_raman
    h[ir, ir] = -p.detuning
    h[ir, i0] = 0.5 * mask * p.rabi_0
    h[i0, ir] = np.conj(h[ir, i0])
    h[ir, i1] = 0.5 * mask * p.rabi_1
    h[i1, ir] = np.conj(h[ir, i1])
    return h


def blockade_projector(atoms: Tuple[int, int], reg: Register) -> np.ndarray:
    """Diagonal projector onto |rr> of the given atom pair, on the register space."""
    diag = np.ones(1)
    for i, ls in enumerate(reg.level_sets):
        v = np.zeros(ls.dim)
        if i in atoms:
            v[ls.index("r")] = 1.0
        else:
            v[:] = 1.0
        diag = np.kron(diag, v)
    return np.diag(diag.astype(complex))


def rydberg_pair_hamiltonian(p: RydbergPulse, reg: Register, time: float = 0.0) -> np.ndarray:
    """Rotating-frame pair drive plus the (possibly modulated) blockade shift.

    ``time`` is the schedule time (s) at which the blockade modulation is
    evaluated; it is irrelevant without modulation.
    """
    a, b = p.atoms
    h = embed(_single_atom_rydberg(p, reg.level_sets[a], p.drive_mask[0]), a, reg)
    h += embed(_single_atom_rydberg(p, reg.level_sets[b], p.drive_mask[1]), b, reg)
    shift = p.blockade
    if p.modulation is not None:
        shift = p.blockade * p.modulation.factor(time)
    h += shift * blockade_projector(p.atoms, reg)
    return h


def raman_hamiltonian(p: RamanPulse, reg: Register) -> np.ndarray:
    """Resonant |0> <-> |1> drive on one atom."""
    ls = reg.level_sets[p.atom]
    h = np.zeros((ls.dim, ls.dim), dtype=complex)
    i0, i1 = ls.index("0"), ls.index("1")
    h[i1, i0] = 0.5 * p.rabi
    h[i0, i1] = np.conj(h[i1, i0])
    return embed(h, p.atom, reg)


_NOISE_WEIGHT = {"0": 0.0, "1": 1.0}


def noise_weights(reg: Register, alpha_e: float, alpha_r: float) -> np.ndarray:
    """Diagonal of the collective error Hamiltonian per unit eps_1.

    Entry for a product state is the sum over atoms of the per-level weight
    (0, 1, alpha_e, alpha_r); the same eps_1 multiplies every atom.
    """
    w = {**_NOISE_WEIGHT, "e": alpha_e, "r": alpha_r}
    diag = np.zeros(1)
    for ls in reg.level_sets:
        v = np.array([w[lv] for lv in ls.levels])
        diag = (diag[:, None] + v[None, :]).reshape(-1)
    return diag


def noise_hamiltonian(eps1: float, alpha_e: float, alpha_r: float, reg: Register) -> np.ndarray:
    """Collective dephasing Hamiltonian at instantaneous error eps_1 (rad/s)."""
    return np.diag(eps1 * noise_weights(reg, alpha_e, alpha_r)).astype(complex)


def decay_weights(reg: Register, d: DecayConfig) -> np.ndarray:
    """Diagonal of the total population-loss rate gamma(state) (rad/s)."""
    rates = {"0": 0.0, "1": 0.0, "e": d.gamma_e, "r": d.gamma_r}
    diag = np.zeros(1)
    for ls in reg.level_sets:
        v = np.array([rates[lv] for lv in ls.levels])
        diag = (diag[:, None] + v[None, :]).reshape(-1)
    return diag


def decay_term(d: DecayConfig, reg: Register) -> np.ndarray:
    """Anti-Hermitian spontaneous-emission term -i/2 * sum gamma |lvl><lvl|."""
    return np.diag(-0.5j * decay_weights(reg, d))
