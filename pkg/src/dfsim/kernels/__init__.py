"""Kernel backend selection.

The hot inner loop of the engine (per-step propagator products) has two
interchangeable implementations: a compiled Cython extension and a pure
numpy fallback.  The compiled one is used when importable; set
``DFSIM_FORCE_FALLBACK=1`` to force the numpy path.  Both expose

    propagate_segment(a, noise_w, eps, dts, mod_diag, mod_vals, u0)

with identical semantics; ``benchmarks/bench_kernels.py`` compares them.
"""

from __future__ import annotations

import os

from . import _numpy_backend

if os.environ.get("DFSIM_FORCE_FALLBACK", "") not in ("", "0"):
    _impl = _numpy_backend
else:
    try:
        from . import _cykernel as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _numpy_backend

propagate_segment = _impl.propagate_segment
expm_batch = _numpy_backend.expm_batch


def backend_name() -> str:
    return _impl.NAME


__all__ = ["propagate_segment", "expm_batch", "backend_name"]
