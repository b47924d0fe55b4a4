"""Adaptive DOP853 stepping for array-valued ODEs (real or complex).

This is the NumPy counterpart of the 3-component kernel in ``_kernels``: it
advances arbitrary arrays, such as density matrices in operator form, and
lets the caller post-process every accepted state.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

from ._kernels import TAB_A, TAB_B, TAB_E3, TAB_E5

__all__ = ["StepUnderflow", "dop853"]


class StepUnderflow(RuntimeError):
    """The step size fell below the minimum allowed."""


def _error_norm(y, y_new, k, h, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
    e5 = np.tensordot(TAB_E5, k, axes=(0, 0)) / scale
    e3 = np.tensordot(TAB_E3, k, axes=(0, 0)) / scale
    n5 = np.sum(np.abs(e5) ** 2)
    n3 = np.sum(np.abs(e3) ** 2)
    den = n5 + 0.01 * n3
    return 0.0 if den == 0 else float(abs(h) * n5 / np.sqrt(den * y.size))


def dop853(fun: Callable, y0, t_out, rtol=1e-10, atol=1e-12, h_max=np.inf,
           h_min=1e-14, max_steps=10_000_000, post_step: Callable | None = None):
    """Integrate ``dy/dt = fun(y)`` and return ``y`` at every time in ``t_out``.

    The field is autonomous. Steps are clipped so that they land on the
    requested times. ``post_step`` maps each accepted state to the state
    actually kept (e.g. Hermitian symmetrization). Raises
    :class:`StepUnderflow` if the step collapses.
    """
    t_out = np.asarray(t_out, dtype=float)
    y = np.array(y0, dtype=np.result_type(np.asarray(y0).dtype, float))
    out = np.empty((len(t_out),) + y.shape, dtype=y.dtype)
    out[0] = y
    ns = len(TAB_B)
    k = np.empty((ns + 1,) + y.shape, dtype=y.dtype)
    k[0] = fun(y)
    fn = np.linalg.norm(k[0]) / np.sqrt(y.size)
    h = 1e-3 if fn == 0 else min(1e-1, 1e-2 / fn)
    t = float(t_out[0])
    steps = 0
    for idx in range(1, len(t_out)):
        t_next = float(t_out[idx])
        while t < t_next:
            if steps >= max_steps:
                raise RuntimeError("step budget exhausted")
            steps += 1
            h = min(h, h_max)
            clipped = t + h >= t_next
            h_step = t_next - t if clipped else h
            if h_step < h_min and not clipped:
                raise StepUnderflow(f"step size {h_step:.3g} below minimum at t={t:.6g}")
            for s in range(1, ns):
                k[s] = fun(y + h_step * np.tensordot(TAB_A[s, :s], k[:s], axes=(0, 0)))
            y_new = y + h_step * np.tensordot(TAB_B, k[:ns], axes=(0, 0))
            k[ns] = fun(y_new)
            err = _error_norm(y, y_new, k, h_step, rtol, atol)
            if not np.isfinite(err):
                raise RuntimeError(f"non-finite state at t={t:.6g}")
            if err <= 1.0:
                t = t_next if clipped else t + h_step
                if post_step is None:
                    y = y_new
                    k[0] = k[ns]
                else:
                    y = post_step(y_new)
                    k[0] = fun(y)
                fac = 10.0 if err == 0 else min(10.0, max(0.2, 0.9 * err ** -0.125))
                h = max(h, h_step * fac) if clipped else h_step * fac
            else:
                h = h_step * max(0.2, 0.9 * err ** -0.125)
        out[idx] = y
    return out
