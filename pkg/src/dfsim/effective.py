"""Closed-form effective theory of the four-photon pair gate.

The perturbative reduction of the driven two-atom system onto the
computational subspace {|00>,|01>,|10>,|11>} is parameterized by the
quadruple (Omega_R, Delta_0, Delta_00, Delta_11); this module evaluates
those expressions, the resulting 4x4 evolution operator, the exact phase
formula of the single-atom dephasing gate, and the condition solver that
turns the pair gate into a conditional phase gate.

Sign convention: Omega_R evaluates negative at the reference parameters.
Durations always use |Omega_R|; compositions carry the sign through the
swap angle theta = Omega_R * t / 2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.optimize

from .atoms import RydbergPulse, DephaserPulse

__all__ = [
    "EffectiveParams",
    "PhaseGateSolution",
    "SingularParameterError",
    "NoSolutionError",
    "effective_params",
    "u_eff",
    "dephaser_phase",
    "solve_dephaser",
    "solve_phase_gate",
    "solve_swap_duration",
]


class SingularParameterError(ValueError):
    """A denominator of the effective expressions vanishes."""


class NoSolutionError(RuntimeError):
    """The requested gate conditions cannot be met in the search range."""


@dataclass(frozen=True)
class EffectiveParams:
    """Effective swap rate and light shifts (all rad/s)."""

    omega_r: float
    delta_0: float
    delta_00: float
    delta_11: float


_DENOMINATORS = (
    ("detuning", lambda d, dp, drr: d),
    ("detuning - detuning_raman", lambda d, dp, drr: d - dp),
    ("blockade + detuning_raman - 2*detuning", lambda d, dp, drr: drr + dp - 2 * d),
    ("blockade - 2*detuning", lambda d, dp, drr: drr - 2 * d),
    ("detuning_raman", lambda d, dp, drr: dp),
    ("blockade + 2*detuning_raman - 2*detuning", lambda d, dp, drr: drr + 2 * dp - 2 * d),
)


def effective_params(rabi_0: complex, rabi_1: complex, detuning: float,
                     detuning_raman: float, blockade: float) -> EffectiveParams:
    """Evaluate the fourth-order effective parameters.

    Arguments follow the pair-pulse convention: detuning is the
    single-photon detuning, detuning_raman the two-photon one,
    blockade the |rr> shift; all rad/s.
    """
    d, dp, drr = float(detuning), float(detuning_raman), float(blockade)
    scale = max(abs(d), abs(dp), abs(drr), 1.0)
    for name, fn in _DENOMINATORS:
        if abs(fn(d, dp, drr)) <= 1e-14 * scale:
            raise SingularParameterError(f"singular parameter combination: {name} = 0")

    w0 = abs(rabi_0) ** 2
    w1 = abs(rabi_1) ** 2

    omega_r = (w0 * w1 / 8.0) * drr * (dp - 2 * d) / (
        (drr + dp - 2 * d) * d**2 * (dp - d) ** 2
    )

    delta_0 = (
        w0 / (4 * d)
        + w1 / (4 * (d - dp))
        - (1.0 / 16.0) * (
            w0**2 / d**3
            + w1**2 / (d - dp) ** 3
            + w0 * w1 * (2 * drr + dp - 2 * d) * (2 * d - dp)
            / ((drr + dp - 2 * d) * d**2 * (dp - d) ** 2)
        )
    )

    delta_00 = (w0 / (2 * d)) * (
        1.0 + (1.0 / (2 * d)) * (
            w1 / (2 * dp) - w0 * (drr - d) / (d * (drr - 2 * d))
        )
    )

    delta_11 = (w1 / (2 * (d - dp))) * (
        1.0 + (1.0 / (2 * (dp - d))) * (
            w0 / (2 * dp) + w1 * (drr + dp - d) / ((d - dp) * (drr + 2 * dp - 2 * d))
        )
    )

    return EffectiveParams(omega_r, delta_0, delta_00, delta_11)


def params_of_pulse(p: RydbergPulse) -> EffectiveParams:
    return effective_params(p.rabi_0, p.rabi_1, p.detuning, p.detuning_raman, p.blockade)


def u_eff(t: float, ep: EffectiveParams, detuning_raman: float) -> np.ndarray:
    """Effective 4x4 evolution operator on (|00>,|01>,|10>,|11>)."""
    half = 0.5 * ep.omega_r * t
    u = np.zeros((4, 4), dtype=complex)
    u[0, 0] = np.exp(-1j * (ep.delta_00 - ep.delta_0) * t)
    u[1, 1] = u[2, 2] = np.cos(half)
    u[1, 2] = u[2, 1] = 1j * np.sin(half)
    u[3, 3] = np.exp(-1j * (ep.delta_11 - ep.delta_0) * t)
    return np.exp(-1j * (ep.delta_0 - detuning_raman) * t) * u


# --------------------------------------------------------------------------
# dephasing (phase) gate
# --------------------------------------------------------------------------

def dephaser_phase(n: int, rabi: complex, detuning: float) -> Tuple[float, float]:
    """Phase picked up by |1> and the pulse duration for n full cycles.

    Returns (phi, t_d) with phi = n*pi*(1 + detuning/Omega_R) and
    t_d = n*2*pi/Omega_R, Omega_R = sqrt(|rabi|^2 + detuning^2).
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    om_r = float(np.hypot(abs(rabi), detuning))
    if om_r <= 0.0:
        raise ValueError("rabi and detuning cannot both vanish")
    phi = n * np.pi * (1.0 + detuning / om_r)
    t_d = n * 2.0 * np.pi / om_r
    return phi, t_d


def solve_dephaser(phi_target: float, rabi: complex, ratio_min: float = 8.0,
                   ratio_target: float = 10.0, atom: int = 0,
                   excited_level: str = "e") -> DephaserPulse:
    """Find (n, detuning) realizing the phase phi_target at given |rabi|.

    Picks the cycle count n so that |detuning|/|rabi| lands near
    ``ratio_target`` (keeping the excited state essentially unpopulated),
    then solves the phase formula exactly for the detuning.  If phi_target
    is an exact multiple of pi the resonant solution (detuning 0, n =
    phi/pi) is returned instead.
    """
    if not 0.0 < phi_target < 2.0 * np.pi:
        raise ValueError("phi_target must lie in (0, 2*pi)")
    om = abs(rabi)
    if om <= 0.0:
        raise ValueError("rabi must be nonzero")

    k = phi_target / np.pi
    if abs(k - round(k)) < 1e-12 and round(k) >= 1:
        n = int(round(k))
        _, t_d = dephaser_phase(n, rabi, 0.0)
        return DephaserPulse(atom, rabi, 0.0, t_d, excited_level)

    # fraction g = phi/(n*pi) achieved at |detuning| = ratio*|rabi|, detuning < 0
    def g_of_ratio(r: float) -> float:
        return 1.0 - r / np.hypot(1.0, r)

    n = max(1, round(phi_target / (np.pi * g_of_ratio(ratio_target))))
    for _ in range(10_000):
        g = phi_target / (n * np.pi)
        if g >= 1.0:
            n += 1
            continue
        det = -(1.0 - g) * om / np.sqrt(1.0 - (1.0 - g) ** 2)
        if abs(det) / om >= ratio_min:
            phi, t_d = dephaser_phase(n, rabi, det)
            if abs(phi - phi_target) > 1e-9:
                raise NoSolutionError(
                    f"phase solve residual {abs(phi - phi_target):.3e} rad"
                )
            return DephaserPulse(atom, rabi, det, t_d, excited_level)
        n += 1
    raise NoSolutionError(
        f"no dephaser solution for phi={phi_target} under ratio >= {ratio_min}"
    )


# --------------------------------------------------------------------------
# pair-gate condition solver
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PhaseGateSolution:
    """A pair pulse satisfying the conditional-phase conditions."""

    pulse: RydbergPulse
    k: int
    l: int
    duration: float
    residual: float
    params: EffectiveParams


def _condition_ratios(rabi_0, rabi_1, detuning, detuning_raman, blockade):
    ep = effective_params(rabi_0, rabi_1, detuning, detuning_raman, blockade)
    om = abs(ep.omega_r)
    return (ep.delta_00 - ep.delta_0) / om, (ep.delta_11 - ep.delta_0) / om, ep


def solve_ratio_conditions(ratio_fn, k_range, l_range,
                           residual_tol: float = 1e-6,
                           box: Tuple[float, float] = (0.7, 1.3),
                           grid_n: int = 81):
    """Solve y00(a, b) = k/2 and y11(a, b) = 1/4 + l/2 over relative
    parameter scales (a, b), searching the given integer ranges.

    ``ratio_fn(alpha, beta) -> (y00, y11)`` may raise
    :class:`SingularParameterError` inside the box.  The two ratios share
    a dominant common factor, so their difference moves freely while
    their sum is stiff and roots can sit on folds of the iso-difference
    curves; a coarse grid prunes (k, l) pairs and seeds a sum-weighted
    simplex descent, polished by damped Newton steps.  Returns
    (residual, k, l, alpha, beta) for the admissible root closest to
    (1, 1); raises :class:`NoSolutionError` when none reaches the
    tolerance.
    """
    alphas = np.linspace(box[0], box[1], grid_n)
    betas = np.linspace(box[0], box[1], grid_n)
    diff_grid = np.full((alphas.size, betas.size), np.nan)
    sum_grid = np.full((alphas.size, betas.size), np.nan)
    for ia, al in enumerate(alphas):
        for ib, be in enumerate(betas):
            try:
                a, b = ratio_fn(al, be)
            except (SingularParameterError, RuntimeError):
                continue
            diff_grid[ia, ib] = a - b
            sum_grid[ia, ib] = a + b

    def residuals(x, td, ts):
        try:
            a, b = ratio_fn(x[0], x[1])
        except (SingularParameterError, RuntimeError):
            return np.array([1e6, 1e6])
        return np.array([(a - b) - td, (a + b) - ts])

    # the sum direction is ~100x stiffer than the difference direction
    w_sum = 200.0

    def newton_polish(x, td, ts):
        for _ in range(60):
            r = residuals(x, td, ts)
            if np.max(np.abs(r)) < 1e-10:
                break
            jac = np.empty((2, 2))
            for j in range(2):
                h = 1e-7
                xp = x.copy(); xp[j] += h
                xm = x.copy(); xm[j] -= h
                jac[:, j] = (residuals(xp, td, ts)
                             - residuals(xm, td, ts)) / (2 * h)
            try:
                dx = np.linalg.solve(jac, -r)
            except np.linalg.LinAlgError:
                break
            stepped = False
            for lam in (1.0, 0.5, 0.25, 0.1, 0.03):
                xn = x + lam * dx
                if np.max(np.abs(residuals(xn, td, ts))) < np.max(np.abs(r)):
                    x = xn
                    stepped = True
                    break
            if not stepped:
                break
        return x

    candidates = []
    for k in k_range:
        for l in l_range:
            td = 0.5 * k - 0.25 - 0.5 * l
            ts = 0.5 * k + 0.25 + 0.5 * l
            score = np.abs(diff_grid - td) + w_sum * np.abs(sum_grid - ts)
            if not np.isfinite(score).any() or np.nanmin(score) > 4.0 * w_sum * 0.02:
                continue
            flat = np.argsort(np.where(np.isfinite(score), score, np.inf),
                              axis=None)[:3]
            for pos in flat:
                ia, ib = np.unravel_index(pos, score.shape)
                x0 = np.array([alphas[ia], betas[ib]])
                nm = scipy.optimize.minimize(
                    lambda x: float(np.sum((residuals(x, td, ts)
                                            * [1.0, w_sum]) ** 2)),
                    x0, method="Nelder-Mead",
                    options={"xatol": 1e-13, "fatol": 1e-26, "maxiter": 600})
                x = newton_polish(nm.x, td, ts)
                res = float(np.max(np.abs(residuals(x, td, ts))))
                dist = float(abs(x[0] - 1.0) + abs(x[1] - 1.0))
                candidates.append((res, dist, k, l, x[0], x[1]))

    good = [c for c in candidates if c[0] <= residual_tol]
    if not good:
        got = "none" if not candidates else f"{min(c[0] for c in candidates):.3e}"
        raise NoSolutionError(f"no conditions root in range (best residual {got})")
    res, _dist, k, l, alpha, beta = min(good, key=lambda c: (c[1], c[0]))
    return res, k, l, alpha, beta


def solve_phase_gate(blockade: float, seed_pulse: RydbergPulse,
                     k_range: range = None, l_range: range = None,
                     residual_tol: float = 1e-6,
                     regime_threshold: float = 0.2) -> PhaseGateSolution:
    """Adjust (detuning_raman, |rabi_1|) so one 4pi/|Omega_R| pulse is a
    conditional phase gate.

    With t = 4*pi/|Omega_R| enforced, the two remaining conditions are
    (Delta_00-Delta_0)/|Omega_R| = k/2 and (Delta_11-Delta_0)/|Omega_R| =
    1/4 + l/2 for integers k, l; these are root-found from the seed for
    every (k, l) in range and the smallest-residual solution is returned.

    The regime threshold admits the reference operating point, whose
    largest amplitude-to-detuning ratio is about 0.13.
    """
    if not seed_pulse.is_perturbative(regime_threshold):
        raise ValueError("seed pulse is not in the perturbative regime")
    y00, y11, _ = _condition_ratios(
        seed_pulse.rabi_0, seed_pulse.rabi_1, seed_pulse.detuning,
        seed_pulse.detuning_raman, blockade,
    )
    k0 = round(2.0 * y00)
    l0 = round(2.0 * (y11 - 0.25))
    if k_range is None:
        k_range = range(k0 - 6, k0 + 7)
    if l_range is None:
        l_range = range(l0 - 6, l0 + 7)

    om1_seed = abs(seed_pulse.rabi_1)
    dp_seed = seed_pulse.detuning_raman

    def ratio_fn(alpha: float, beta: float):
        a, b, _ = _condition_ratios(seed_pulse.rabi_0, beta * om1_seed,
                                    seed_pulse.detuning, alpha * dp_seed,
                                    blockade)
        return a, b

    res, k, l, alpha, beta = solve_ratio_conditions(
        ratio_fn, k_range, l_range, residual_tol)
    dp, om1 = alpha * dp_seed, beta * om1_seed
    ep = effective_params(seed_pulse.rabi_0, om1, seed_pulse.detuning, dp, blockade)
    tau = 4.0 * np.pi / abs(ep.omega_r)
    pulse = RydbergPulse(
        atoms=seed_pulse.atoms,
        rabi_0=seed_pulse.rabi_0,
        rabi_1=om1,
        detuning=seed_pulse.detuning,
        detuning_raman=dp,
        blockade=blockade,
        duration=tau,
        modulation=seed_pulse.modulation,
    )
    return PhaseGateSolution(pulse, k, l, tau, res, ep)


def solve_swap_duration(theta: float, pulse: RydbergPulse) -> float:
    """Duration realizing a swap angle |Omega_R|*t/2 = |theta| for the pulse."""
    ep = params_of_pulse(pulse)
    return 2.0 * abs(theta) / abs(ep.omega_r)
