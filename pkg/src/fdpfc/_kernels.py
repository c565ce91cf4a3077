"""Hot numeric kernels of the switching simulator.

The per-phase LC output filter

    L di/dt = u_chop - u_C
    C du/dt = i - u_C / R

is integrated with the classical fixed-step 4th-order Runge-Kutta update,
evaluating the chopped bridge voltage at the step midpoints.  The chopped
voltage itself is precomputed on a half-step grid by `chopped_voltages`
(vectorized numpy, shared by both backends).

Two interchangeable integrators exist:

* `rk4_loop` -- the explicit stage loop, numba-compiled when available;
* `rk4_scan` -- the same update map collapsed into the affine recurrence
  x[n+1] = M x[n] + P0 u0 + P1 u1 + P2 u2 and evaluated by a vectorized
  eigen-mode scan (pure numpy fallback).

Both produce the RK4 trajectory; they differ only in float rounding order.
"""

from __future__ import annotations

import math

import numpy as np

from .backend import HAS_NUMBA, active_backend

# Duty / input-voltage phase offsets per phase (radians), matching the
# converter model: duty of phase b leads by +120 deg at double frequency.
_DUTY_OFF = (0.0, 2.0 * math.pi / 3.0, -2.0 * math.pi / 3.0)
_VOLT_OFF = (0.0, -2.0 * math.pi / 3.0, 2.0 * math.pi / 3.0)

# Nudge when flooring t * f_s so that samples landing on a carrier boundary
# latch the new period's duty regardless of last-ulp float error.
_CARRIER_EPS = 1e-9


def chopped_voltages(
    half_step0: int,
    n_steps: int,
    dt: float,
    k0: float,
    k2: float,
    beta2_rad: float,
    omega: float,
    u_im: float,
    f_s: float,
) -> np.ndarray:
    """Chopped bridge voltages on the half-step grid, shape (3, 2*n_steps + 1).

    Column j holds the value at t = (half_step0 + j) * dt / 2; indexing by
    the global half-step integer keeps chunk-boundary samples bit-identical
    across chunks.  The duty is latched once per carrier period (regular
    sampling), so a polarity change takes effect at the next period boundary.
    Within a period the bridge conducts sign(d) for the first |d| * T_s
    seconds (leading-edge sawtooth carrier); |d| >= 1 saturates to full
    conduction.
    """
    th = (half_step0 + np.arange(2 * n_steps + 1, dtype=np.int64)) * (0.5 * dt)
    carrier = th * f_s
    pidx = np.floor(carrier + _CARRIER_EPS)
    t_latch = pidx / f_s
    frac = carrier - pidx
    out = np.empty((3, th.size))
    for p in range(3):
        d = k0 + k2 * np.sin(2.0 * omega * t_latch + beta2_rad + _DUTY_OFF[p])
        gate = np.sign(d) * (frac < np.abs(d))
        out[p] = gate * (u_im * np.sin(omega * th + _VOLT_OFF[p]))
    return out


def _rk4_loop_py(u_chop, x0, h, lf, cf, rl):
    """RK4 stage loop; returns (2, 3, n) trajectory of (i_L, u_C) per phase."""
    n = (u_chop.shape[1] - 1) // 2
    out = np.empty((2, 3, n))
    for p in range(3):
        il = x0[0, p]
        uc = x0[1, p]
        for i in range(n):
            u0 = u_chop[p, 2 * i]
            u1 = u_chop[p, 2 * i + 1]
            u2 = u_chop[p, 2 * i + 2]
            k1i = (u0 - uc) / lf
            k1u = (il - uc / rl) / cf
            il_s = il + 0.5 * h * k1i
            uc_s = uc + 0.5 * h * k1u
            k2i = (u1 - uc_s) / lf
            k2u = (il_s - uc_s / rl) / cf
            il_s = il + 0.5 * h * k2i
            uc_s = uc + 0.5 * h * k2u
            k3i = (u1 - uc_s) / lf
            k3u = (il_s - uc_s / rl) / cf
            il_s = il + h * k3i
            uc_s = uc + h * k3u
            k4i = (u2 - uc_s) / lf
            k4u = (il_s - uc_s / rl) / cf
            il += h / 6.0 * (k1i + 2.0 * k2i + 2.0 * k3i + k4i)
            uc += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
            out[0, p, i] = il
            out[1, p, i] = uc
    return out


if HAS_NUMBA:
    from numba import njit

    _rk4_loop_numba = njit(cache=True)(_rk4_loop_py)


def rk4_update_matrices(h: float, lf: float, cf: float, rl: float):
    """Affine form of one RK4 step: x+ = M x + P0 u(t) + P1 u(t+h/2) + P2 u(t+h)."""
    a = np.array([[0.0, -1.0 / lf], [1.0 / cf, -1.0 / (rl * cf)]])
    b = np.array([1.0 / lf, 0.0])
    a2 = a @ a
    a3 = a2 @ a
    a4 = a3 @ a
    eye = np.eye(2)
    m = eye + h * a + (h**2 / 2.0) * a2 + (h**3 / 6.0) * a3 + (h**4 / 24.0) * a4
    p0 = (h / 6.0) * (b + h * (a @ b) + (h**2 / 2.0) * (a2 @ b) + (h**3 / 4.0) * (a3 @ b))
    p1 = (h / 6.0) * (4.0 * b + 2.0 * h * (a @ b) + (h**2 / 2.0) * (a2 @ b))
    p2 = (h / 6.0) * b
    return m, p0, p1, p2


def _mode_scan(lam: complex, g: np.ndarray, s0: complex) -> np.ndarray:
    """Scalar linear recurrence s[n+1] = lam * s[n] + g[n], vectorized in blocks.

    Within a block, s[i+1] = lam^i * (lam * s_start + cumsum(lam^-j g[j])).
    The block length bounds |lam|^(+-j) so the renormalized cumulative sum
    stays in range; a diverging recurrence (unstable step) is allowed to
    overflow to inf/nan, which the caller reports as a diagnostic.
    """
    n = g.size
    mag = abs(lam)
    if abs(math.log(max(mag, 1e-300))) < 1e-12:
        block = 8192
    else:
        block = max(16, min(8192, int(6.0 * math.log(10.0) / abs(math.log(mag)))))
    out = np.empty(n, dtype=complex)
    s = s0
    with np.errstate(over="ignore", invalid="ignore"):
        for start in range(0, n, block):
            gb = g[start : start + block]
            nb = gb.size
            j = np.arange(nb)
            c = np.cumsum(gb * lam ** (-j))
            sb = lam**j * (lam * s + c)
            out[start : start + nb] = sb
            s = sb[-1]
    return out


def _rk4_scan(u_chop, x0, h, lf, cf, rl):
    """Vectorized evaluation of the RK4 recurrence via eigen-mode scans."""
    n = (u_chop.shape[1] - 1) // 2
    m, p0, p1, p2 = rk4_update_matrices(h, lf, cf, rl)
    lam, vec = np.linalg.eig(m)
    if np.linalg.cond(vec) > 1e8:
        return _rk4_loop_py(u_chop, x0, h, lf, cf, rl)
    vinv = np.linalg.inv(vec)
    out = np.empty((2, 3, n))
    with np.errstate(over="ignore", invalid="ignore"):
        for p in range(3):
            u = u_chop[p]
            f = (
                np.outer(u[0:-2:2], p0)
                + np.outer(u[1::2], p1)
                + np.outer(u[2::2], p2)
            )  # (n, 2) forcing per step
            g = f @ vinv.T
            s0 = vinv @ x0[:, p].astype(complex)
            s = np.column_stack([_mode_scan(lam[k], g[:, k], s0[k]) for k in range(2)])
            out[:, p, :] = (s @ vec.T).real.T
    return out


def rk4_lc_chunk(
    u_chop: np.ndarray,
    x0: np.ndarray,
    h: float,
    lf: float,
    cf: float,
    rl: float,
    backend: str | None = None,
) -> np.ndarray:
    """Integrate one chunk of the per-phase LC filters.

    ``u_chop`` is the (3, 2n+1) half-step chopped-voltage grid, ``x0`` the
    (2, 3) initial state [i_L; u_C].  Returns the (2, 3, n) trajectory at the
    n full steps after the chunk start.
    """
    be = backend if backend is not None else active_backend()
    if be == "numba":
        return _rk4_loop_numba(u_chop, x0, h, lf, cf, rl)
    if be == "numpy":
        return _rk4_scan(u_chop, x0, h, lf, cf, rl)
    raise ValueError(f"unknown backend {be!r}")
