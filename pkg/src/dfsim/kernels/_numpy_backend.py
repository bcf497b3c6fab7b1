"""Pure-numpy kernel backend.

Implements the hot operation of the engine - the ordered product of
per-step propagators exp(-i*dt*(A + eps_i*diag(w) + b_i*diag(v))) for one
pulse segment - batched over noise trajectories so the step loop stays in
numpy.  The matrix exponential is scaling-and-squaring with diagonal Pade
approximants (orders chosen from 1-norm thresholds) applied to the whole
trajectory stack at once, after a trace shift that removes the common
diagonal offset.

Functionally identical to the compiled backend in ``_cykernel``; selection
happens in :mod:`dfsim.kernels`.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"

# diagonal Pade coefficients and 1-norm switch points (Higham 2005)
_B = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0),
    13: (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
         1187353796428800.0, 129060195264000.0, 10559470521600.0,
         670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
         960960.0, 16380.0, 182.0, 1.0),
}
_THETA = ((3, 1.495585217958292e-2), (5, 2.539398330063230e-1),
          (7, 9.504178996162932e-1), (9, 2.097847961257068))
_THETA13 = 5.371920351148152


def _pade_uv(a, order):
    b = _B[order]
    n = a.shape[-1]
    eye = np.eye(n, dtype=a.dtype)
    a2 = a @ a
    if order == 3:
        u = a @ (b[3] * a2 + b[1] * eye)
        v = b[2] * a2 + b[0] * eye
        return u, v
    a4 = a2 @ a2
    if order == 5:
        u = a @ (b[5] * a4 + b[3] * a2 + b[1] * eye)
        v = b[4] * a4 + b[2] * a2 + b[0] * eye
        return u, v
    a6 = a2 @ a4
    if order == 7:
        u = a @ (b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * eye)
        v = b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * eye
        return u, v
    if order == 9:
        a8 = a4 @ a4
        u = a @ (b[9] * a8 + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * eye)
        v = b[8] * a8 + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * eye
        return u, v
    w = a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
    u = a @ (w + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * eye)
    v = a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2) \
        + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * eye
    return u, v


def expm_batch(m: np.ndarray) -> np.ndarray:
    """exp() of a (batch, n, n) complex stack, trace-shifted Pade."""
    m = np.asarray(m, dtype=complex)
    squeeze = m.ndim == 2
    if squeeze:
        m = m[None]
    n = m.shape[-1]
    # midrange diagonal shift, as in the compiled backend
    d = m.diagonal(axis1=-2, axis2=-1)
    mu = 0.5 * (d.real.min(axis=-1) + d.real.max(axis=-1)) \
        + 0.5j * (d.imag.min(axis=-1) + d.imag.max(axis=-1))
    a = m - mu[:, None, None] * np.eye(n, dtype=complex)

    norm = float(np.abs(a).sum(axis=-2).max()) if a.size else 0.0
    order, squarings = 13, 0
    for m_ord, theta in _THETA:
        if norm <= theta:
            order = m_ord
            break
    else:
        if norm > _THETA13:
            squarings = int(np.ceil(np.log2(norm / _THETA13)))
            a = a * (0.5 ** squarings)

    u, v = _pade_uv(a, order)
    r = np.linalg.solve(v - u, v + u)
    for _ in range(squarings):
        r = r @ r
    r *= np.exp(mu)[:, None, None]
    return r[0] if squeeze else r


def propagate_segment(a: np.ndarray, noise_w: np.ndarray, eps: np.ndarray,
                      dts: np.ndarray, mod_diag=None, mod_vals=None,
                      u0: np.ndarray = None) -> np.ndarray:
    """Ordered product of per-step propagators for one segment.

    a: (n, n) constant drive-plus-decay matrix (rad/s).
    noise_w: (n,) diagonal noise weights; step i adds eps[:, i]*noise_w.
    eps: (batch, nsteps) noise samples (rad/s).
    dts: (nsteps,) step durations (s).
    mod_diag/mod_vals: optional diagonal modulation channel; step i adds
        mod_vals[i]*mod_diag.
    u0: optional (batch, n, n) initial propagators, updated in place.

    Returns the (batch, n, n) stack of left-multiplied step products.
    """
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    eps = np.atleast_2d(np.asarray(eps, dtype=float))
    batch, nsteps = eps.shape
    dts = np.asarray(dts, dtype=float)
    if dts.shape != (nsteps,):
        raise ValueError("dts must have one entry per step")
    u = np.broadcast_to(np.eye(n, dtype=complex), (batch, n, n)).copy() \
        if u0 is None else u0
    if nsteps == 0:
        return u
    diag_idx = np.arange(n)
    base = np.broadcast_to(a, (batch, n, n))
    for i in range(nsteps):
        m = base.copy()
        v = eps[:, i, None] * noise_w[None, :]
        if mod_vals is not None:
            v = v + mod_vals[i] * np.asarray(mod_diag)[None, :]
        m[:, diag_idx, diag_idx] += v
        m *= -1j * dts[i]
        u = expm_batch(m) @ u
    return u
