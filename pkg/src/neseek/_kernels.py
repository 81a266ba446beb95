"""RK4 inner loops: numba-compiled when available, pure numpy otherwise.

The closed loop is linear, so one simulation is nsteps repetitions of
four dense matvecs plus the exact exogenous update.  That loop is the
only hot path in the package; everything else is setup.  Set
NESEEK_DISABLE_NUMBA=1 to force the numpy path (also used by the
benchmark to compare both).
"""

import os

import numpy as np

_DISABLED = os.environ.get("NESEEK_DISABLE_NUMBA", "") not in ("", "0")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit
    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False


def _rk4_loop(A_c, P_c, E_half, E_full, z, v, dt, n_steps, stride, Z, V):
    """Advance n_steps, recording every stride-th step plus the last.

    Z and V must be preallocated with row 0 = initial condition already
    counted; returns (bad_step, rows_written) where bad_step is the
    1-based step index of the first non-finite state, or 0 if none.
    """
    Z[0] = z
    V[0] = v
    rec = 1
    for k in range(n_steps):
        vh = E_half @ v
        vf = E_full @ v
        k1 = A_c @ z + P_c @ v
        k2 = A_c @ (z + 0.5 * dt * k1) + P_c @ vh
        k3 = A_c @ (z + 0.5 * dt * k2) + P_c @ vh
        k4 = A_c @ (z + dt * k3) + P_c @ vf
        z = z + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        v = vf
        if not np.all(np.isfinite(z)):
            return k + 1, rec
        if (k + 1) % stride == 0 or k + 1 == n_steps:
            Z[rec] = z
            V[rec] = v
            rec += 1
    return 0, rec


if HAS_NUMBA:
    _rk4_loop_numpy = _rk4_loop
    _rk4_loop = njit(cache=True)(_rk4_loop)
else:
    _rk4_loop_numpy = _rk4_loop


def kernel_name():
    return "numba" if HAS_NUMBA else "numpy"


def record_steps(n_steps, stride):
    """Step indices the loop records: 0, stride, 2*stride, ..., n_steps."""
    steps = list(range(0, n_steps + 1, stride))
    if steps[-1] != n_steps:
        steps.append(n_steps)
    return np.asarray(steps, dtype=int)


def rk4_run(A_c, P_c, E_half, E_full, z0, v0, dt, n_steps, stride, use_numba=None):
    """Run the loop and return (Z, V, bad_step); rows follow record_steps.

    bad_step is 0 for a clean run.  On divergence the arrays are
    truncated to the rows recorded before the bad step.
    """
    steps = record_steps(n_steps, stride)
    Z = np.empty((len(steps), len(z0)))
    V = np.empty((len(steps), len(v0)))
    loop = _rk4_loop
    if use_numba is False:
        loop = _rk4_loop_numpy
    bad, rec = loop(
        np.ascontiguousarray(A_c, dtype=float),
        np.ascontiguousarray(P_c, dtype=float),
        np.ascontiguousarray(E_half, dtype=float),
        np.ascontiguousarray(E_full, dtype=float),
        np.asarray(z0, dtype=float).copy(),
        np.asarray(v0, dtype=float).copy(),
        float(dt), int(n_steps), int(stride), Z, V,
    )
    if bad:
        return Z[:rec], V[:rec], int(bad)
    return Z, V, 0
