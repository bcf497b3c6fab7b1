"""The protected universal gate set on the decoherence-free subspace,
plus the unprotected blockade-gate baseline.

Logical encoding: one logical qubit lives in two atoms as |0_L> = |01>,
|1_L> = |10>; two logical qubits use atom pairs (0,1) and (2,3) with
basis |00_L> = |0101>, |01_L> = |0110>, |10_L> = |1001>, |11_L> = |1010>.

Protected gates are built from two primitives that never take the state
out of the subspace: the single-atom detuned phase pulse P(phi) acting on
the first atom of a pair, and the two-atom four-photon pulse realizing
R(theta) within a pair or a conditional phase between the first atoms of
two pairs.  The composition for the Hadamard uses P-phases 3*pi/2 or
pi/2 depending on the sign of the effective swap rate; the choice is made
by checking the composed 2x2 matrix.

The unprotected baseline drives bare-atom transitions: blockade
controlled-phase (pi control, 2*pi target, pi control, with the two
control pulses a half-turn apart in laser phase so the control's net
phase cancels), single-atom rotations for the Hadamard, and one resonant
phase-fixup pulse per controlled-phase to land exactly on the target
unitary instead of "up to single-qubit phases".
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .atoms import (
    BlockadeModulation,
    DephaserPulse,
    LevelSet,
    RamanPulse,
    Register,
    RydbergPulse,
)
from .effective import (
    PhaseGateSolution,
    params_of_pulse,
    solve_dephaser,
    solve_phase_gate,
    solve_swap_duration,
)
from .engine import (
    NoiseAverage,
    PulseSegment,
    Schedule,
    StateSet,
    logical_block,
    min_fidelity,
    propagate_ideal,
)

__all__ = [
    "TWO_PI",
    "ReferencePoint",
    "REFERENCE",
    "LogicalMap",
    "GateRecipe",
    "encode_dfs",
    "decode_dfs",
    "recipe_T",
    "recipe_H",
    "recipe_Uphase",
    "recipe_CNOT",
    "recipe_unprotected",
    "HADAMARD",
    "T_GATE",
    "CZ_GATE",
    "CNOT_GATE",
]

TWO_PI = 2.0 * np.pi

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)
T_GATE = np.diag([1.0, np.exp(1j * np.pi / 4.0)]).astype(complex)
CZ_GATE = np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)
CNOT_GATE = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


@dataclass(frozen=True)
class ReferencePoint:
    """Published operating point for the gate set (all rad/s)."""

    p_rabi: float = TWO_PI * 5.0e6
    p_detuning: float = -TWO_PI * 49.81e6
    p_cycles: int = 50
    r_rabi_0: float = TWO_PI * 3.91e6
    r_rabi_1: float = TWO_PI * 1.97e6
    r_detuning: float = TWO_PI * 60.34e6
    r_detuning_raman: float = TWO_PI * 30.70e6
    uphase_rabi_0: float = TWO_PI * 3.93e6
    uphase_rabi_1: float = TWO_PI * 1.96e6
    uphase_detuning: float = TWO_PI * 60.48e6
    uphase_detuning_raman: float = TWO_PI * 30.05e6
    blockade: float = TWO_PI * 100.0e6
    unprotected_rabi: float = TWO_PI * 0.5e6

    def r_pulse(self, atoms=(0, 1), duration=1.0,
                modulation: Optional[BlockadeModulation] = None) -> RydbergPulse:
        return RydbergPulse(atoms=atoms, rabi_0=self.r_rabi_0,
                            rabi_1=self.r_rabi_1, detuning=self.r_detuning,
                            detuning_raman=self.r_detuning_raman,
                            blockade=self.blockade, duration=duration,
                            modulation=modulation)

    def uphase_pulse(self, atoms=(0, 2), duration=1.0,
                     modulation: Optional[BlockadeModulation] = None) -> RydbergPulse:
        return RydbergPulse(atoms=atoms, rabi_0=self.uphase_rabi_0,
                            rabi_1=self.uphase_rabi_1,
                            detuning=self.uphase_detuning,
                            detuning_raman=self.uphase_detuning_raman,
                            blockade=self.blockade, duration=duration,
                            modulation=modulation)


REFERENCE = ReferencePoint()


# --------------------------------------------------------------------------
# logical encoding
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LogicalMap:
    """Embedding of the DFS logical basis into a register's product space.

    Every atom must belong to a logical pair; logical qubit i is the i-th
    pair, |0_L> = |01>, |1_L> = |10> on its atoms.
    """

    register: Register

    def __post_init__(self):
        paired = {a for p in self.register.pairs for a in p}
        if paired != set(range(self.register.n_atoms)):
            raise ValueError("every atom must belong to exactly one logical pair")

    @property
    def n_qubits(self) -> int:
        return len(self.register.pairs)

    @property
    def dim(self) -> int:
        return 2 ** self.n_qubits

    def basis_labels(self, bits: Sequence[int]) -> Tuple[str, ...]:
        labels = [""] * self.register.n_atoms
        for (a, b), bit in zip(self.register.pairs, bits):
            labels[a] = "1" if bit else "0"
            labels[b] = "0" if bit else "1"
        return tuple(labels)

    def embedding(self) -> np.ndarray:
        """(N, 2^n) matrix whose columns are the embedded logical states."""
        e = np.zeros((self.register.dim, self.dim), dtype=complex)
        for k in range(self.dim):
            bits = [(k >> (self.n_qubits - 1 - i)) & 1
                    for i in range(self.n_qubits)]
            e[self.register.basis_index(self.basis_labels(bits)), k] = 1.0
        return e


def encode_dfs(c0: complex, c1: complex) -> np.ndarray:
    """c0|01> + c1|10> on a two-atom {0,1}x{0,1} register."""
    if abs(abs(c0) ** 2 + abs(c1) ** 2 - 1.0) > 1e-10:
        raise ValueError("encoding requires |c0|^2 + |c1|^2 = 1")
    psi = np.zeros(4, dtype=complex)
    psi[1] = c0      # |01>
    psi[2] = c1      # |10>
    return psi


def decode_dfs(psi: np.ndarray) -> Tuple[complex, complex]:
    """Inverse of :func:`encode_dfs` (a second CNOT in hardware)."""
    psi = np.asarray(psi, dtype=complex).reshape(4)
    return psi[1], psi[2]


def encoding_cnot() -> np.ndarray:
    """The two-atom CNOT that maps (c0|0>+c1|1>)|1> onto the DFS pair."""
    return CNOT_GATE.copy()


# --------------------------------------------------------------------------
# recipes
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GateRecipe:
    """A named schedule with its intended logical unitary and provenance."""

    name: str
    schedule: Schedule
    provenance: str                 # "reference" | "solved" | "refined" | "file"
    warnings: Tuple[str, ...] = ()

    @property
    def ideal_target(self) -> np.ndarray:
        return self.schedule.ideal_target

    @property
    def duration(self) -> float:
        return self.schedule.duration

    def ideal_logical_action(self, dt: float = 1e-8) -> np.ndarray:
        return logical_block(self.schedule, propagate_ideal(self.schedule, dt))

    def ideal_infidelity(self, states: Optional[StateSet] = None,
                         dt: float = 1e-8) -> float:
        """1 - min over input states of F for the noise-free schedule."""
        avg = NoiseAverage.from_propagators(
            [propagate_ideal(self.schedule, dt)], self.schedule)
        return 1.0 - min_fidelity(avg, self.ideal_target, states).f_min

    def phase_certificate(self, dt: float = 1e-8) -> float:
        """Max spread of the eigenvalue phases of target^dag @ action
        around their common value (global-phase-equivalence check;
        magnitude loss from leakage is measured by the infidelity)."""
        w = np.linalg.eigvals(self.ideal_target.conj().T
                              @ self.ideal_logical_action(dt))
        w = w / np.abs(w)
        mean = w.mean()
        return float(np.abs(w - mean / abs(mean)).max())


def _pair_register(excited: str = "r") -> Register:
    return Register([LevelSet(("0", "1", excited)), LevelSet(("0", "1"))],
                    pairs=((0, 1),))


def _p_segment(phi: float, rabi: float, atom: int, excited: str) -> PulseSegment:
    return PulseSegment.of(solve_dephaser(phi, rabi, atom=atom,
                                          excited_level=excited))


def recipe_T(ref: ReferencePoint = REFERENCE, excited: str = "r") -> GateRecipe:
    """pi/8 gate: one P(pi/4) pulse on the pair's first atom."""
    reg = _pair_register(excited)
    seg = _p_segment(np.pi / 4.0, ref.p_rabi, 0, excited)
    sched = Schedule(reg, (seg,), T_GATE, LogicalMap(reg).embedding())
    return GateRecipe("T", sched, "solved")


def _h_register() -> Register:
    ls = LevelSet(("0", "1", "r"))
    return Register([ls, ls], pairs=((0, 1),))


def _r_logical_block(r_pulse: RydbergPulse, reg: Register) -> np.ndarray:
    sched = Schedule(reg, (PulseSegment.of(r_pulse),), np.eye(2),
                     LogicalMap(reg).embedding())
    return logical_block(sched, propagate_ideal(sched))


def _h_segments(r_pulse: RydbergPulse, p_rabi: float, excited: str,
                reg: Register) -> Tuple[PulseSegment, ...]:
    """P(phi) R P(phi) with phi chosen for the sign of the swap coupling.

    The composed matrix equals the Hadamard when the P phase is 3*pi/2
    for +i*sin off-diagonals and pi/2 for -i*sin; the sign is read off
    the full model rather than the effective expression, whose overall
    sign convention is checked only numerically.
    """
    blk = _r_logical_block(r_pulse, reg)
    offdiag = blk[0, 1] * np.exp(-1j * np.angle(blk[0, 0]))
    phi = 1.5 * np.pi if offdiag.imag > 0 else 0.5 * np.pi
    p = np.diag([1.0, np.exp(1j * phi)])
    composed = p @ (blk / np.exp(1j * np.angle(blk[0, 0]))) @ p
    score = np.abs(np.trace(composed.conj().T @ HADAMARD))
    if score < 1.8:
        raise RuntimeError("P/R composition does not realize the Hadamard")
    atom = r_pulse.atoms[0]
    pseg = _p_segment(phi, p_rabi, atom, excited)
    return (pseg, PulseSegment.of(r_pulse), pseg)


def recipe_H(ref: ReferencePoint = REFERENCE,
             r_pulse: Optional[RydbergPulse] = None,
             provenance: Optional[str] = None) -> GateRecipe:
    """Hadamard: P, four-photon R(pi/4) on the pair, P."""
    reg = _h_register()
    if r_pulse is None:
        seed = ref.r_pulse(atoms=(0, 1))
        r_pulse = RydbergPulse(
            atoms=(0, 1), rabi_0=seed.rabi_0, rabi_1=seed.rabi_1,
            detuning=seed.detuning, detuning_raman=seed.detuning_raman,
            blockade=seed.blockade,
            duration=solve_swap_duration(np.pi / 4.0, seed))
        provenance = provenance or "solved"
    else:
        provenance = provenance or "reference"
    segs = _h_segments(r_pulse, ref.p_rabi, "r", reg)
    sched = Schedule(reg, segs, HADAMARD, LogicalMap(reg).embedding())
    return GateRecipe("H", sched, provenance)


def _two_pair_register(second_pair_driven: bool = False) -> Register:
    """Four atoms, two logical pairs; atoms 0 and 2 always carry the
    Rydberg level, atom 3 only when the second pair is itself driven."""
    r3 = LevelSet(("0", "1", "r"))
    q2 = LevelSet(("0", "1"))
    return Register([r3, q2, r3, r3 if second_pair_driven else q2],
                    pairs=((0, 1), (2, 3)))


def recipe_Uphase(ref: ReferencePoint = REFERENCE,
                  solution: Optional[PhaseGateSolution] = None,
                  pulse: Optional[RydbergPulse] = None,
                  modulation: Optional[BlockadeModulation] = None) -> GateRecipe:
    """Conditional phase gate: one pair pulse on the first atoms of the
    two logical pairs."""
    reg = _two_pair_register()
    if pulse is not None:
        provenance = "refined"
    else:
        if solution is None:
            seed = ref.uphase_pulse(atoms=(0, 2))
            solution = solve_phase_gate(ref.blockade, seed)
        pulse = solution.pulse
        provenance = "solved"
    if modulation is not None:
        pulse = RydbergPulse(
            atoms=pulse.atoms, rabi_0=pulse.rabi_0, rabi_1=pulse.rabi_1,
            detuning=pulse.detuning, detuning_raman=pulse.detuning_raman,
            blockade=pulse.blockade, duration=pulse.duration,
            modulation=modulation, drive_mask=pulse.drive_mask)
    if pulse.atoms != (0, 2):
        raise ValueError("the conditional phase pulse acts on atoms (0, 2)")
    sched = Schedule(reg, (PulseSegment.of(pulse),), CZ_GATE,
                     LogicalMap(reg).embedding())
    return GateRecipe("Uphase", sched, provenance)


def _shift_segment(seg: PulseSegment, offset: int) -> PulseSegment:
    pulse = seg.pulse
    if isinstance(pulse, DephaserPulse):
        moved = DephaserPulse(pulse.atom + offset, pulse.rabi, pulse.detuning,
                              pulse.duration, pulse.excited_level)
    elif isinstance(pulse, RydbergPulse):
        moved = RydbergPulse(
            atoms=(pulse.atoms[0] + offset, pulse.atoms[1] + offset),
            rabi_0=pulse.rabi_0, rabi_1=pulse.rabi_1, detuning=pulse.detuning,
            detuning_raman=pulse.detuning_raman, blockade=pulse.blockade,
            duration=pulse.duration, modulation=pulse.modulation,
            drive_mask=pulse.drive_mask)
    elif isinstance(pulse, RamanPulse):
        moved = RamanPulse(pulse.atom + offset, pulse.rabi, pulse.duration)
    else:
        return seg
    return PulseSegment.of(moved)


def recipe_CNOT(h: Optional[GateRecipe] = None,
                uphase: Optional[GateRecipe] = None,
                ref: ReferencePoint = REFERENCE) -> GateRecipe:
    """Protected CNOT: Hadamard on logical qubit 2, conditional phase
    between the pairs, Hadamard on logical qubit 2."""
    if h is None:
        h = recipe_H(ref)
    if uphase is None:
        uphase = recipe_Uphase(ref)
    reg = _two_pair_register(second_pair_driven=True)
    h_segs = tuple(_shift_segment(s, 2) for s in h.schedule.segments)
    segs = h_segs + uphase.schedule.segments + h_segs
    sched = Schedule(reg, segs, CNOT_GATE, LogicalMap(reg).embedding())
    return GateRecipe("CNOT", sched, uphase.provenance,
                      warnings=h.warnings + uphase.warnings)


# --------------------------------------------------------------------------
# unprotected baseline
# --------------------------------------------------------------------------

def _jaksch_cz_segments(control: int, target: int, rabi: float,
                        blockade: float, p_rabi: float) -> Tuple[PulseSegment, ...]:
    """pi(control) / 2pi(target) / pi(control) blockade phase gate.

    The second control pulse is a half-turn apart in laser phase, so the
    control's round trip contributes no phase; the remaining single-atom
    phase (a minus sign on the target's |1>) is cancelled by one resonant
    P(pi) fixup pulse, landing exactly on diag(1,1,1,-1).
    """
    t_pi = np.pi / rabi
    t_2pi = 2.0 * np.pi / rabi

    def ctrl(phase: float) -> PulseSegment:
        return PulseSegment.of(RydbergPulse(
            atoms=(control, target), rabi_0=0.0,
            rabi_1=rabi * np.exp(1j * phase), detuning=0.0, detuning_raman=0.0,
            blockade=blockade, duration=t_pi, drive_mask=(1.0, 0.0)))

    tgt = PulseSegment.of(RydbergPulse(
        atoms=(control, target), rabi_0=0.0, rabi_1=rabi, detuning=0.0,
        detuning_raman=0.0, blockade=blockade, duration=t_2pi,
        drive_mask=(0.0, 1.0)))
    fixup = _p_segment(np.pi, p_rabi, target, "r")
    return (fixup, ctrl(0.0), tgt, ctrl(np.pi))


def _hadamard_segments(atom: int, rabi: float) -> Tuple[PulseSegment, ...]:
    """H (up to a global phase) as an x-axis pi rotation after a y-axis
    pi/2 rotation."""
    t_pi = np.pi / rabi
    ry = PulseSegment.of(RamanPulse(atom, rabi * np.exp(0.5j * np.pi), t_pi / 2.0))
    rx = PulseSegment.of(RamanPulse(atom, rabi, t_pi))
    return (ry, rx)


def _physical_cnot_segments(control: int, target: int, rabi: float,
                            blockade: float, p_rabi: float) -> Tuple[PulseSegment, ...]:
    h_t = _hadamard_segments(target, rabi)
    return h_t + _jaksch_cz_segments(control, target, rabi, blockade, p_rabi) + h_t


def recipe_unprotected(kind: str, ref: ReferencePoint = REFERENCE,
                       rabi: Optional[float] = None,
                       blockade: Optional[float] = None) -> GateRecipe:
    """Unprotected baseline gates on bare atoms: "CZ" (two atoms,
    computational basis), "H" and "CNOT" (logical action on DFS pairs via
    physical CNOTs)."""
    rabi = ref.unprotected_rabi if rabi is None else rabi
    blockade = ref.blockade if blockade is None else blockade
    warnings = ()
    if abs(rabi) >= abs(blockade) / 10.0:
        warnings = ("blockade regime violated: |rabi| >= |blockade|/10",)

    if kind == "CZ":
        ls = LevelSet(("0", "1", "r"))
        reg = Register([ls, ls])
        segs = _jaksch_cz_segments(0, 1, rabi, blockade, ref.p_rabi)
        e = np.zeros((reg.dim, 4), dtype=complex)
        for k, (b0, b1) in enumerate(("00", "01", "10", "11")):
            e[reg.basis_index((b0, b1)), k] = 1.0
        sched = Schedule(reg, segs, CZ_GATE, e)
        return GateRecipe("CZ-unprotected", sched, "reference", warnings)

    if kind == "H":
        reg = _h_register()
        cnot = _physical_cnot_segments(0, 1, rabi, blockade, ref.p_rabi)
        segs = cnot + _hadamard_segments(0, rabi) + cnot
        sched = Schedule(reg, segs, HADAMARD, LogicalMap(reg).embedding())
        return GateRecipe("H-unprotected", sched, "reference", warnings)

    if kind == "CNOT":
        ls3 = LevelSet(("0", "1", "r"))
        reg = Register([ls3, LevelSet(("0", "1")), ls3, ls3],
                       pairs=((0, 1), (2, 3)))
        segs = _physical_cnot_segments(0, 3, rabi, blockade, ref.p_rabi) \
            + _physical_cnot_segments(0, 2, rabi, blockade, ref.p_rabi)
        sched = Schedule(reg, segs, CNOT_GATE, LogicalMap(reg).embedding())
        return GateRecipe("CNOT-unprotected", sched, "reference", warnings)

    raise ValueError(f"unknown unprotected gate kind {kind!r}")
