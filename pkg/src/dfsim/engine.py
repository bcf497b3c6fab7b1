"""Time-stepped propagation of pulse schedules under collective dephasing
and spontaneous emission, superoperator averaging over noise trajectories,
and the worst-case fidelity measure.

Propagation semantics: a schedule is a sequence of segments, each with a
constant drive Hamiltonian (time-dependent only through the optional
blockade modulation); noise is piecewise constant per step at the path's
dt; the propagator is the ordered product of per-step exponentials

    exp(-i*dt*(H_drive + H_noise(eps1[i]) + H_decay))

Each segment's Hamiltonian is block-structured: the driven ("active")
atoms carry the dense part while idle atoms contribute only commuting
diagonal noise/decay terms, so the step exponential factorizes exactly
into a dense active factor (computed by the kernels) and a closed-form
diagonal idle factor.  Segment durations that are not grid multiples get
one exact remainder step.

Fidelity follows the vectorized density-matrix formula:
F(psi) = Re[vec(rho_ideal)^dag M_av vec(rho)] with rho = |psi><psi| and
rho_ideal = U_ideal rho U_ideal^dag, averaged over trajectories; trace
loss from decay lowers F (no renormalization).  Every state lives in the
logical (DFS) subspace, so M_av restricted to that subspace - built from
the per-trajectory logical blocks E^dag U E - carries the same value; the
explicit register-space M_av is stored when the register dimension is at
most `FULL_SUPEROP_MAX_DIM`.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from . import kernels
from .atoms import (
    DecayConfig,
    DephaserPulse,
    RamanPulse,
    Register,
    RydbergPulse,
    blockade_projector,
    decay_weights,
    dephaser_hamiltonian,
    noise_weights,
    raman_hamiltonian,
    rydberg_pair_hamiltonian,
)
from .linalg import expm
from .noise import OUConfig, OUPath, sample_path
from .rng import Rng

__all__ = [
    "PulseSegment",
    "Schedule",
    "NoiseAverage",
    "StateSet",
    "MinFidelityResult",
    "propagate",
    "propagate_ideal",
    "average_superoperator",
    "fidelity",
    "min_fidelity",
    "leakage_profile",
    "segment_steps",
]

FULL_SUPEROP_MAX_DIM = 16

Pulse = Union[DephaserPulse, RydbergPulse, RamanPulse]


@dataclass(frozen=True)
class PulseSegment:
    """One schedule element: a pulse (or idle hold) with a duration."""

    kind: str            # "dephaser" | "rydberg_pair" | "raman" | "idle"
    pulse: Optional[Pulse]
    duration: float

    def __post_init__(self):
        if self.kind not in ("dephaser", "rydberg_pair", "raman", "idle"):
            raise ValueError(f"unknown segment kind {self.kind!r}")
        if self.duration <= 0.0:
            raise ValueError("segment duration must be > 0")
        if (self.pulse is None) != (self.kind == "idle"):
            raise ValueError("idle segments carry no pulse; others need one")

    @classmethod
    def idle(cls, duration: float) -> "PulseSegment":
        return cls("idle", None, duration)

    @classmethod
    def of(cls, pulse: Pulse) -> "PulseSegment":
        kind = {DephaserPulse: "dephaser", RydbergPulse: "rydberg_pair",
                RamanPulse: "raman"}[type(pulse)]
        return cls(kind, pulse, pulse.duration)

    @property
    def active_atoms(self) -> Tuple[int, ...]:
        if self.kind == "idle":
            return ()
        if self.kind == "rydberg_pair":
            return tuple(self.pulse.atoms)
        return (self.pulse.atom,)


@dataclass(frozen=True)
class Schedule:
    """A gate realization: register, ordered segments, logical ideal target.

    ``logical_basis`` embeds the logical (DFS) subspace into the register
    space: an (N, L) matrix whose columns are the embedded logical basis
    states.  ``ideal_target`` is the intended L x L logical unitary.
    """

    register: Register
    segments: Tuple[PulseSegment, ...]
    ideal_target: np.ndarray
    logical_basis: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        target = np.asarray(self.ideal_target, dtype=complex)
        basis = np.asarray(self.logical_basis, dtype=complex)
        l = target.shape[0]
        if target.shape != (l, l):
            raise ValueError("ideal_target must be square")
        if np.abs(target.conj().T @ target - np.eye(l)).max() > 1e-10:
            raise ValueError("ideal_target must be unitary")
        if basis.shape != (self.register.dim, l):
            raise ValueError("logical_basis must be (register dim, logical dim)")
        for seg in self.segments:
            for atom in seg.active_atoms:
                if not 0 <= atom < self.register.n_atoms:
                    raise ValueError(f"segment atom {atom} outside register")
        object.__setattr__(self, "ideal_target", target)
        object.__setattr__(self, "logical_basis", basis)

    @property
    def duration(self) -> float:
        return sum(seg.duration for seg in self.segments)

    @property
    def logical_dim(self) -> int:
        return self.ideal_target.shape[0]


def segment_steps(duration: float, dt: float) -> Tuple[int, float]:
    """Number of full dt steps and the remainder-step length (0 if exact)."""
    ratio = duration / dt
    if abs(ratio - round(ratio)) < 1e-9 * max(1.0, abs(round(ratio))):
        return int(round(ratio)), 0.0
    n_full = int(np.floor(ratio))
    return n_full, duration - n_full * dt


def _sub_register(reg: Register, atoms: Sequence[int]) -> Register:
    return Register([reg.level_sets[a] for a in atoms])


def _reindex(pulse: Pulse, atoms: Sequence[int]) -> Pulse:
    """The pulse with atom indices renumbered into the active subspace."""
    lookup = {a: i for i, a in enumerate(atoms)}
    if isinstance(pulse, RydbergPulse):
        return RydbergPulse(
            atoms=(lookup[pulse.atoms[0]], lookup[pulse.atoms[1]]),
            rabi_0=pulse.rabi_0, rabi_1=pulse.rabi_1,
            detuning=pulse.detuning, detuning_raman=pulse.detuning_raman,
            blockade=pulse.blockade, duration=pulse.duration,
            modulation=pulse.modulation, drive_mask=pulse.drive_mask,
        )
    if isinstance(pulse, DephaserPulse):
        return DephaserPulse(lookup[pulse.atom], pulse.rabi, pulse.detuning,
                             pulse.duration, pulse.excited_level)
    return RamanPulse(lookup[pulse.atom], pulse.rabi, pulse.duration)


@dataclass
class _SegmentPlan:
    """Precomputed per-segment data for the kernels and the embedding."""

    duration: float
    n_steps: int                      # incl. remainder step
    dts: np.ndarray
    active: Tuple[int, ...]
    a_active: np.ndarray              # dense active drive + decay
    noise_w_active: np.ndarray
    mod_diag: Optional[np.ndarray]
    mod_freq: float
    mod_phase: float
    t_start: float
    groups: list                      # [(full-index array, idle state idx)]
    idle_noise_w: np.ndarray          # per idle state
    idle_gamma: np.ndarray


def _plan_segments(schedule: Schedule, dt: float, decay: DecayConfig,
                   alpha_e: float, alpha_r: float) -> list:
    reg = schedule.register
    plans = []
    t_start = 0.0
    for seg in schedule.segments:
        n_full, rem = segment_steps(seg.duration, dt)
        dts = np.full(n_full + (1 if rem > 0.0 else 0), dt)
        if rem > 0.0:
            dts[-1] = rem

        active = seg.active_atoms
        idle = tuple(a for a in range(reg.n_atoms) if a not in active)
        sub = _sub_register(reg, active)
        idle_sub = _sub_register(reg, idle)

        if seg.kind == "idle":
            a_active = np.zeros((1, 1), dtype=complex)
            noise_w_active = np.zeros(1)
            mod_diag = None
            mod_freq = mod_phase = 0.0
        else:
            pulse = _reindex(seg.pulse, active)
            mod_diag = None
            mod_freq = mod_phase = 0.0
            if seg.kind == "dephaser":
                a_active = dephaser_hamiltonian(pulse, sub)
            elif seg.kind == "raman":
                a_active = raman_hamiltonian(pulse, sub)
            elif pulse.modulation is None or pulse.modulation.depth == 0.0:
                a_active = rydberg_pair_hamiltonian(pulse, sub)
            else:
                # constant blockade goes into the static part; the
                # oscillating remainder becomes the kernels' diagonal channel
                bare = RydbergPulse(
                    atoms=pulse.atoms, rabi_0=pulse.rabi_0, rabi_1=pulse.rabi_1,
                    detuning=pulse.detuning, detuning_raman=pulse.detuning_raman,
                    blockade=pulse.blockade, duration=pulse.duration,
                    drive_mask=pulse.drive_mask,
                )
                a_active = rydberg_pair_hamiltonian(bare, sub)
                proj = np.real(np.diag(blockade_projector(pulse.atoms, sub)))
                mod_diag = pulse.blockade * pulse.modulation.depth * proj
                mod_freq = pulse.modulation.frequency
                mod_phase = pulse.modulation.phase
            a_active = a_active - 0.5j * np.diag(decay_weights(sub, decay))
            noise_w_active = noise_weights(sub, alpha_e, alpha_r)

        # group register basis indices by their idle-subspace configuration
        dims = reg.dims
        n_act = int(np.prod([dims[a] for a in active])) if active else 1
        n_idl = int(np.prod([dims[a] for a in idle])) if idle else 1
        act_index = np.zeros(reg.dim, dtype=np.intp)
        idl_index = np.zeros(reg.dim, dtype=np.intp)
        for full_idx, labels in enumerate(reg.basis_labels()):
            ai = ii = 0
            for a in active:
                ai = ai * dims[a] + reg.level_sets[a].index(labels[a])
            for a in idle:
                ii = ii * dims[a] + reg.level_sets[a].index(labels[a])
            act_index[full_idx] = ai
            idl_index[full_idx] = ii
        groups = []
        for k in range(n_idl):
            sel = np.nonzero(idl_index == k)[0]
            order = np.argsort(act_index[sel])
            groups.append((sel[order], k))
        if active:
            assert all(len(sel) == n_act for sel, _ in groups)

        idle_noise_w = noise_weights(idle_sub, alpha_e, alpha_r) if idle \
            else np.zeros(1)
        idle_gamma = decay_weights(idle_sub, decay) if idle else np.zeros(1)

        plans.append(_SegmentPlan(
            duration=seg.duration, n_steps=len(dts), dts=dts, active=active,
            a_active=a_active, noise_w_active=noise_w_active,
            mod_diag=mod_diag, mod_freq=mod_freq, mod_phase=mod_phase,
            t_start=t_start, groups=groups, idle_noise_w=idle_noise_w,
            idle_gamma=idle_gamma,
        ))
        t_start += seg.duration
    return plans


def _mod_values(plan: _SegmentPlan) -> Optional[np.ndarray]:
    if plan.mod_diag is None:
        return None
    t_mid = plan.t_start + np.cumsum(plan.dts) - 0.5 * plan.dts
    return np.sin(2.0 * np.pi * plan.mod_freq * t_mid + plan.mod_phase)


def _num_threads() -> int:
    env = os.environ.get("DFSIM_NUM_THREADS", "")
    if env:
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


def _kernel_batch(plan: _SegmentPlan, eps_seg: np.ndarray) -> np.ndarray:
    """Active-subspace propagators for a batch of trajectories."""
    mod_vals = _mod_values(plan)
    n_threads = _num_threads()
    batch = eps_seg.shape[0]
    if n_threads == 1 or batch < 2 * n_threads:
        return kernels.propagate_segment(
            plan.a_active, plan.noise_w_active, eps_seg, plan.dts,
            plan.mod_diag, mod_vals)
    bounds = np.linspace(0, batch, n_threads + 1).astype(int)
    with ThreadPoolExecutor(n_threads) as pool:
        parts = list(pool.map(
            lambda se: kernels.propagate_segment(
                plan.a_active, plan.noise_w_active, eps_seg[se[0]:se[1]],
                plan.dts, plan.mod_diag, mod_vals),
            zip(bounds[:-1], bounds[1:])))
    return np.concatenate(parts, axis=0)


def _segment_full_batch(plan: _SegmentPlan, reg_dim: int,
                        eps_seg: np.ndarray) -> np.ndarray:
    """Full-register propagators for one segment, batched over trajectories.

    The active factor is stepped numerically; idle atoms enter through the
    exact diagonal factor exp(-i*w*int(eps) - gamma*T/2) per idle state.
    """
    batch = eps_seg.shape[0]
    eps_int = eps_seg @ plan.dts
    u_act = _kernel_batch(plan, eps_seg) if plan.active \
        else np.ones((batch, 1, 1), dtype=complex)
    u_full = np.zeros((batch, reg_dim, reg_dim), dtype=complex)
    for sel, k in plan.groups:
        idle_factor = np.exp(-1j * plan.idle_noise_w[k] * eps_int
                             - 0.5 * plan.idle_gamma[k] * plan.duration)
        u_full[:, sel[:, None], sel[None, :]] = \
            u_act * idle_factor[:, None, None]
    return u_full


def _propagate_batch(schedule: Schedule, eps: np.ndarray, dt: float,
                     decay: DecayConfig, alpha_e: float,
                     alpha_r: float) -> np.ndarray:
    """Full-schedule propagators for a (batch, steps+) noise array."""
    plans = _plan_segments(schedule, dt, decay, alpha_e, alpha_r)
    total = sum(p.n_steps for p in plans)
    if eps.shape[1] < total:
        raise ValueError(
            f"noise path has {eps.shape[1]} samples but the schedule needs "
            f"{total} steps at dt={dt}")
    n = schedule.register.dim
    u = np.broadcast_to(np.eye(n, dtype=complex),
                        (eps.shape[0], n, n)).copy()
    ofs = 0
    for plan in plans:
        u_seg = _segment_full_batch(plan, n, eps[:, ofs:ofs + plan.n_steps])
        u = u_seg @ u
        ofs += plan.n_steps
    return u


def propagate(schedule: Schedule, path: OUPath,
              decay: DecayConfig = DecayConfig()) -> np.ndarray:
    """Full-register propagator for one noise realization.

    The path must cover the schedule duration at its dt (the engine step is
    locked to the noise step; a final sub-dt remainder step per segment
    reuses the last covered sample).
    """
    return _propagate_batch(schedule, np.atleast_2d(path.eps1), path.dt,
                            decay, path.alpha_e, path.alpha_r)[0]


def propagate_ideal(schedule: Schedule, dt: float = 1e-8) -> np.ndarray:
    """Noise-free, decay-free propagator.

    Unmodulated segments have constant Hamiltonians, so the per-step
    product collapses to one exact exponential per segment; modulated
    segments are stepped at dt.
    """
    plans = _plan_segments(schedule, dt, DecayConfig(), 0.0, 0.0)
    n = schedule.register.dim
    u = np.eye(n, dtype=complex)
    for plan in plans:
        if plan.active:
            if plan.mod_diag is None:
                u_act = expm(-1j * plan.duration * plan.a_active)[None]
            else:
                u_act = _kernel_batch(plan, np.zeros((1, plan.n_steps)))
        else:
            u_act = np.ones((1, 1, 1), dtype=complex)
        u_seg = np.zeros((n, n), dtype=complex)
        for sel, _k in plan.groups:
            u_seg[sel[:, None], sel[None, :]] = u_act[0]
        u = u_seg @ u
    return u


def logical_block(schedule: Schedule, u_full: np.ndarray) -> np.ndarray:
    """E^dag U E: the propagator block on the embedded logical subspace."""
    e = schedule.logical_basis
    return e.conj().T @ u_full @ e


# --------------------------------------------------------------------------
# noise averaging
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class NoiseAverage:
    """Trajectory-averaged evolution data of one schedule.

    ``logical_blocks`` stacks E^dag U_j E per trajectory; ``m_av`` is the
    register-space average superoperator mean(conj(U_j) kron U_j), stored
    for registers of dimension <= FULL_SUPEROP_MAX_DIM (the fidelity of
    logical states only needs the blocks, by linearity).
    """

    logical_blocks: np.ndarray
    ideal_dim: int
    n_traj: int
    m_av: Optional[np.ndarray] = None
    trace_loss_mean: float = 0.0
    trace_loss_std: float = 0.0

    @classmethod
    def from_propagators(cls, us: Sequence[np.ndarray], schedule: Schedule,
                         store_full: Optional[bool] = None) -> "NoiseAverage":
        us = np.asarray(us, dtype=complex)
        n = us.shape[-1]
        if store_full is None:
            store_full = n <= FULL_SUPEROP_MAX_DIM
        blocks = np.einsum("nl,jnm,mk->jlk", schedule.logical_basis.conj(),
                           us, schedule.logical_basis, optimize=True)
        l = blocks.shape[-1]
        losses = 1.0 - np.einsum("jlk,jlk->j", blocks.conj(), blocks).real / l
        m_av = None
        if store_full:
            m_av = np.zeros((n * n, n * n), dtype=complex)
            for u in us:
                m_av += np.kron(u.conj(), u)
            m_av /= len(us)
        return cls(logical_blocks=blocks, ideal_dim=l, n_traj=len(us),
                   m_av=m_av, trace_loss_mean=float(losses.mean()),
                   trace_loss_std=float(losses.std()))


def average_superoperator(schedule: Schedule, noise: OUConfig,
                          decay: DecayConfig, n_traj: int,
                          store_full: Optional[bool] = None,
                          chunk_size: Optional[int] = None) -> NoiseAverage:
    """Average the evolution superoperator over noise trajectories.

    Trajectory j draws its path from ``noise.rng.substream(j)``; results
    are deterministic for a given base stream and independent of chunking
    or thread count.  ``noise.steps`` is ignored - the step count follows
    from the schedule duration at ``noise.dt``.  ``chunk_size`` caps how
    many trajectories are propagated per batch (default: memory-based).
    """
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    reg_dim = schedule.register.dim
    if store_full is None:
        store_full = reg_dim <= FULL_SUPEROP_MAX_DIM
    plans = _plan_segments(schedule, noise.dt, decay, noise.alpha_e,
                           noise.alpha_r)
    total_steps = sum(p.n_steps for p in plans)

    chunk = chunk_size if chunk_size is not None else \
        max(1, min(n_traj, int(32e6 // max(1, total_steps * 8))))
    blocks = []
    m_av = np.zeros((reg_dim**2, reg_dim**2), dtype=complex) if store_full \
        else None
    e = schedule.logical_basis
    for j0 in range(0, n_traj, chunk):
        js = range(j0, min(j0 + chunk, n_traj))
        eps = np.empty((len(js), total_steps + 1))
        for i, j in enumerate(js):
            cfg = OUConfig(noise.tau, noise.c, noise.dt, total_steps,
                           noise.rng.substream(j), noise.stationary_start,
                           noise.alpha_e, noise.alpha_r)
            eps[i] = sample_path(cfg).eps1
        us = _propagate_batch(schedule, eps, noise.dt, decay,
                              noise.alpha_e, noise.alpha_r)
        blocks.append(np.einsum("nl,jnm,mk->jlk", e.conj(), us, e,
                                optimize=True))
        if store_full:
            for u in us:
                m_av += np.kron(u.conj(), u)
    blocks = np.concatenate(blocks, axis=0)
    if store_full:
        m_av /= n_traj
    l = blocks.shape[-1]
    losses = 1.0 - np.einsum("jlk,jlk->j", blocks.conj(), blocks).real / l
    return NoiseAverage(logical_blocks=blocks, ideal_dim=l, n_traj=n_traj,
                        m_av=m_av, trace_loss_mean=float(losses.mean()),
                        trace_loss_std=float(losses.std()))


# --------------------------------------------------------------------------
# fidelity
# --------------------------------------------------------------------------

def _check_state(psi: np.ndarray, dim: int) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if psi.size != dim:
        raise ValueError(f"state has dimension {psi.size}, expected {dim}")
    if abs(np.linalg.norm(psi) - 1.0) > 1e-10:
        raise ValueError("state is not normalized")
    return psi


def _per_trajectory_fidelities(avg: NoiseAverage, ideal: np.ndarray,
                               psi: np.ndarray) -> np.ndarray:
    psi_ideal = np.asarray(ideal, dtype=complex) @ psi
    amps = np.einsum("l,jlk,k->j", psi_ideal.conj(), avg.logical_blocks, psi)
    return np.abs(amps) ** 2


def fidelity(avg: NoiseAverage, ideal: np.ndarray, psi: np.ndarray) -> float:
    """Worst-case-measure integrand: F(psi) for one logical input state.

    ``psi`` is expressed in the logical basis (dimension L).  Equals
    Re[vec(rho_ideal)^dag M_av vec(rho)] on the embedded states; computed
    from the per-trajectory logical blocks (identical by linearity).
    """
    psi = _check_state(psi, avg.ideal_dim)
    return float(_per_trajectory_fidelities(avg, ideal, psi).mean())


@dataclass(frozen=True)
class MinFidelityResult:
    f_min: float
    state_id: str
    state: np.ndarray
    stderr: float

    def __iter__(self):
        yield self.f_min
        yield self.state


@dataclass(frozen=True)
class StateSet:
    """Deterministic set of logical input states for the worst-case search."""

    states: np.ndarray            # (n_states, L)
    ids: Tuple[str, ...]

    def __len__(self) -> int:
        return self.states.shape[0]

    @classmethod
    def single_qubit(cls, n_grid: int = 32) -> "StateSet":
        """6 cardinal states plus an n-point Fibonacci Bloch-sphere grid."""
        inv2 = 1.0 / np.sqrt(2.0)
        states = [
            ([1, 0], "z+"), ([0, 1], "z-"),
            ([inv2, inv2], "x+"), ([inv2, -inv2], "x-"),
            ([inv2, 1j * inv2], "y+"), ([inv2, -1j * inv2], "y-"),
        ]
        out = [np.array(s, dtype=complex) for s, _ in states]
        ids = [i for _, i in states]
        golden = np.pi * (3.0 - np.sqrt(5.0))
        for k in range(n_grid):
            theta = np.arccos(1.0 - 2.0 * (k + 0.5) / n_grid)
            phi = golden * k
            out.append(np.array([np.cos(theta / 2.0),
                                 np.exp(1j * phi) * np.sin(theta / 2.0)]))
            ids.append(f"grid{k}")
        return cls(np.array(out), tuple(ids))

    @classmethod
    def two_qubit(cls, n_random: int = 64, seed: int = 20060601) -> "StateSet":
        """Cardinal products, the four Bell states, and seeded Haar states."""
        single = cls.single_qubit(n_grid=0)
        out, ids = [], []
        for i, a in enumerate(single.states):
            for j, b in enumerate(single.states):
                out.append(np.kron(a, b))
                ids.append(f"{single.ids[i]}*{single.ids[j]}")
        inv2 = 1.0 / np.sqrt(2.0)
        bells = [
            (np.array([1, 0, 0, 1]) * inv2, "bell-phi+"),
            (np.array([1, 0, 0, -1]) * inv2, "bell-phi-"),
            (np.array([0, 1, 1, 0]) * inv2, "bell-psi+"),
            (np.array([0, 1, -1, 0]) * inv2, "bell-psi-"),
        ]
        for s, i in bells:
            out.append(s.astype(complex))
            ids.append(i)
        rng = Rng(seed, 0)
        for k in range(n_random):
            v = rng.normal(4) + 1j * rng.normal(4)
            out.append(v / np.linalg.norm(v))
            ids.append(f"haar{k}")
        return cls(np.array(out), tuple(ids))

    @classmethod
    def default_for(cls, logical_dim: int) -> "StateSet":
        if logical_dim == 2:
            return cls.single_qubit()
        if logical_dim == 4:
            return cls.two_qubit()
        raise ValueError(f"no default state set for logical dimension {logical_dim}")


def min_fidelity(avg: NoiseAverage, ideal: np.ndarray,
                 states: Optional[StateSet] = None) -> MinFidelityResult:
    """Minimum of F over the state set, with the argmin state and its
    Monte-Carlo standard error."""
    if states is None:
        states = StateSet.default_for(avg.ideal_dim)
    if len(states) == 0:
        raise ValueError("state set is empty")
    best = None
    for idx in range(len(states)):
        psi = _check_state(states.states[idx], avg.ideal_dim)
        fj = _per_trajectory_fidelities(avg, ideal, psi)
        f = float(fj.mean())
        if best is None or f < best[0]:
            stderr = float(fj.std(ddof=1) / np.sqrt(len(fj))) if len(fj) > 1 \
                else 0.0
            best = (f, idx, stderr)
    f, idx, stderr = best
    return MinFidelityResult(f, states.ids[idx], states.states[idx], stderr)


def leakage_profile(schedule: Schedule, dt: float = 1e-8) -> np.ndarray:
    """Max population outside the logical subspace after each segment,
    over the logical basis inputs, for the ideal (noise-free) evolution."""
    plans = _plan_segments(schedule, dt, DecayConfig(), 0.0, 0.0)
    n = schedule.register.dim
    e = schedule.logical_basis
    psi = e.copy()              # columns: embedded logical basis states
    out = [0.0]
    for plan in plans:
        if plan.active:
            if plan.mod_diag is None:
                u_act = expm(-1j * plan.duration * plan.a_active)[None]
            else:
                u_act = _kernel_batch(plan, np.zeros((1, plan.n_steps)))
        else:
            u_act = np.ones((1, 1, 1), dtype=complex)
        u_seg = np.zeros((n, n), dtype=complex)
        for sel, _k in plan.groups:
            u_seg[sel[:, None], sel[None, :]] = u_act[0]
        psi = u_seg @ psi
        inside = np.abs(e.conj().T @ psi) ** 2
        out.append(float((1.0 - inside.sum(axis=0)).max()))
    return np.array(out)
