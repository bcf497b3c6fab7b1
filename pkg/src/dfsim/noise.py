"""Ornstein-Uhlenbeck dephasing paths and their statistics.

The error on level |1> follows the discrete update

    eps(t+dt) = eps(t) * (1 - dt/tau) + sqrt(c*dt) * G(t)

with relaxation time tau, diffusion constant c and unit Gaussians G; the
stationary process has variance tau*c/2 and correlation time tau.  Errors
on the other levels are fully correlated: eps_e = alpha_e * eps_1 and
eps_r = alpha_r * eps_1 (eps_0 is identically 0 - with collective errors a
|0> term is a global phase that the density-matrix fidelity cannot see).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import scipy.signal

from .rng import Rng

__all__ = ["OUConfig", "OUPath", "sample_path", "path_stats", "DegenerateFitError"]


class DegenerateFitError(RuntimeError):
    """Statistics requested on a constant path."""


@dataclass(frozen=True)
class OUConfig:
    """Parameters of one dephasing-path draw.

    tau: relaxation time (s); c: diffusion constant ((rad/s)^2 / s);
    dt: step (s), at most tau/10; steps: number of updates; rng: stream
    identity; stationary_start draws eps[0] from N(0, tau*c/2), otherwise
    the path starts cold at 0.
    """

    tau: float
    c: float
    dt: float
    steps: int
    rng: Rng
    stationary_start: bool = True
    alpha_e: float = 1.5
    alpha_r: float = 1.5

    def __post_init__(self):
        if self.tau <= 0.0 or self.dt <= 0.0:
            raise ValueError("tau and dt must be positive")
        if self.dt > self.tau / 10.0 * (1.0 + 1e-12):
            raise ValueError(f"dt={self.dt} exceeds tau/10={self.tau / 10.0}")
        if self.steps < 0:
            raise ValueError("steps must be >= 0")

    @property
    def variance(self) -> float:
        """Steady-state variance tau*c/2."""
        return 0.5 * self.tau * self.c


@dataclass(frozen=True)
class OUPath:
    """One realization eps_1[i] at times i*dt, i = 0..steps.

    The correlated channels are eps_e = alpha_e*eps1, eps_r = alpha_r*eps1.
    """

    eps1: np.ndarray
    dt: float
    tau: float
    c: float
    alpha_e: float = 1.5
    alpha_r: float = 1.5

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.eps1.size)

    @property
    def eps_e(self) -> np.ndarray:
        return self.alpha_e * self.eps1

    @property
    def eps_r(self) -> np.ndarray:
        return self.alpha_r * self.eps1

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time_s", "eps1_rad_s"])
            for t, e in zip(self.times, self.eps1):
                w.writerow([repr(float(t)), repr(float(e))])


def sample_path(cfg: OUConfig) -> OUPath:
    """Draw one path by iterating the discrete update rule.

    The recursion is evaluated by a linear IIR filter, which computes
    exactly eps[i+1] = eps[i]*(1 - dt/tau) + sqrt(c*dt)*G[i].
    """
    decay = 1.0 - cfg.dt / cfg.tau
    eps0 = 0.0
    if cfg.stationary_start:
        eps0 = float(cfg.rng.normal()) * np.sqrt(cfg.variance)
    eps = np.empty(cfg.steps + 1)
    eps[0] = eps0
    if cfg.steps > 0:
        g = cfg.rng.normal(cfg.steps)
        drive = np.sqrt(cfg.c * cfg.dt) * g
        eps[1:], _ = scipy.signal.lfilter([1.0], [1.0, -decay], drive,
                                          zi=np.array([decay * eps0]))
    return OUPath(eps, cfg.dt, cfg.tau, cfg.c, cfg.alpha_e, cfg.alpha_r)


def path_stats(path: OUPath, min_samples: int = 1000) -> Tuple[float, float]:
    """Empirical variance and exponential-fit correlation time of a path."""
    x = np.asarray(path.eps1, dtype=float)
    if x.size < min_samples:
        raise ValueError(f"need at least {min_samples} samples, got {x.size}")
    x = x - x.mean()
    var = float(np.dot(x, x) / (x.size - 1))
    if var == 0.0:
        raise DegenerateFitError("constant path has no correlation time")

    # autocorrelation by FFT, fit log C(k) over the first couple of decay times
    n = x.size
    nfft = 1 << int(np.ceil(np.log2(2 * n)))
    f = np.fft.rfft(x, nfft)
    acf = np.fft.irfft(f * np.conj(f), nfft)[: n] / np.arange(n, 0, -1)
    acf /= acf[0]
    kmax = min(n - 1, max(5, int(round(2.0 * path.tau / path.dt))))
    c = acf[1 : kmax + 1]
    good = c > 0.05
    if not np.any(good):
        raise DegenerateFitError("autocorrelation decays below fit window")
    lags = path.dt * np.arange(1, kmax + 1)[good]
    slope = np.polyfit(lags, np.log(c[good]), 1)[0]
    if slope >= 0.0:
        raise DegenerateFitError("autocorrelation does not decay")
    return var, float(-1.0 / slope)
