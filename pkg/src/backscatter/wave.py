"""Spectral wave propagation on the periodic cube, Born terms, and a split-step
solver for ``(d_t^2 - Delta + v) u = 0`` with ``u(0) = 0``, ``u_t(0) = f``.

The box must be large enough (``2L`` above the support diameter plus
``2 t``) that nothing wraps around during the simulated time.
"""
from dataclasses import dataclass
import math

import numpy as np

from .exceptions import UnstableTimestep
from .grid import GridField, fftn, ifftn


def _sin_over_k(t, k):
    # sin(t k) / k, equal to t at k = 0
    return t * np.sinc(t * k / np.pi)


def free_propagate(f, t):
    """``sin(t|D|)/|D| f``."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    k = f.frequency_modulus
    return GridField(ifftn(_sin_over_k(t, k) * fftn(f.samples)), f.L, t)


def free_velocity(f, t):
    """``cos(t|D|) f``, the time derivative of :func:`free_propagate`."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    k = f.frequency_modulus
    return GridField(ifftn(np.cos(t * k) * fftn(f.samples)), f.L, t)


def born_bound(v_sup, t, N):
    """``||v||_inf^N t^{2N+1} / (2N+1)!``, the operator-norm bound on ``K_N(t)``."""
    return v_sup**N * t ** (2 * N + 1) / math.factorial(2 * N + 1)


class _StreamingSimpson:
    """Cumulative integral of samples arriving one node at a time on a uniform grid.

    Even nodes use composite Simpson; odd nodes past the third use Simpson up
    to ``i - 3`` plus the 3/8 rule; node 1 uses the trapezoid rule (the Born
    integrands vanish at ``s = 0`` to high order).
    """

    def __init__(self, h):
        self.h = h
        self.recent = []
        self.even = {}
        self.i = -1

    def push(self, y):
        self.i += 1
        i, h = self.i, self.h
        self.recent = (self.recent + [y])[-4:]
        r = self.recent
        if i == 0:
            self.even = {0: np.zeros_like(y)}
            return self.even[0]
        if i % 2 == 0:
            val = self.even[i - 2] + h / 3 * (r[-3] + 4 * r[-2] + r[-1])
            self.even = {i - 2: self.even[i - 2], i: val}
            return val
        if i == 1:
            return h / 2 * (r[0] + r[1])
        return self.even[i - 3] + 3 * h / 8 * (r[0] + 3 * r[1] + 3 * r[2] + r[3])


def _born_levels(v, f, N_max, t, steps):
    if steps < 4:
        raise ValueError("steps must be at least 4")
    steps += steps % 2
    k = f.frequency_modulus
    fh = fftn(f.samples)
    vs = v.samples
    h = t / steps
    cos_acc = [_StreamingSimpson(h) for _ in range(N_max)]
    sin_acc = [_StreamingSimpson(h) for _ in range(N_max)]
    for i in range(steps + 1):
        s = i * h
        sk, ck = _sin_over_k(s, k), np.cos(s * k)
        level = sk * fh
        out = [level]
        for N in range(N_max):
            g = fftn(vs * ifftn(level))
            A = cos_acc[N].push(ck * g)
            B = sin_acc[N].push(sk * g)
            level = sk * A - ck * B
            out.append(level)
    return [GridField(ifftn(u), f.L, t) for u in out]


def born_series(v, f, N_max, t, steps=64, richardson=False):
    """Born terms ``K_0(t) f, ..., K_{N_max}(t) f``.

    Each term solves ``(d_t^2 - Delta) u_N = v u_{N-1}`` with zero data, written
    as ``u_N(t) = int_0^t K_0(t - s) v u_{N-1}(s) ds``. Splitting the sine of
    ``t - s`` makes the time integrals cumulative, so all orders advance
    together in one sweep of ``steps`` Simpson intervals. With ``richardson``
    a second sweep at ``2 steps`` removes the leading error term.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if N_max < 0:
        raise ValueError("N_max must be nonnegative")
    coarse = _born_levels(v, f, N_max, t, steps)
    if not richardson:
        return coarse
    fine = _born_levels(v, f, N_max, t, 2 * steps)
    return [(16 * b - a) * (1 / 15) for a, b in zip(coarse, fine)]


def born_term(v, f, N, t, steps=64, richardson=False):
    """The single Born term ``K_N(t) f``."""
    if N == 0:
        return free_propagate(f, t)
    return born_series(v, f, N, t, steps, richardson)[N]


@dataclass
class WaveState:
    u: GridField
    u_dot: GridField
    time: float


def stability_limit(field):
    return 2.0 / float(field.frequency_modulus.max())


def wave_solve(v, f, t, dt=None):
    """Strang splitting: exact spectral free half-steps around the kicks
    ``u_dot -= dt v u``. Returns the state at time ``t``."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    dt = t / 1024 if dt is None else dt
    limit = stability_limit(f)
    if not dt < limit:
        raise UnstableTimestep(f"dt={dt:.4g} not below the stability limit {limit:.4g}")
    n = max(1, math.ceil(t / dt - 1e-12)) if t > 0 else 0
    dt = t / n if n else 0.0
    k = f.frequency_modulus
    vs = v.samples
    U = np.zeros_like(f.samples)
    V = fftn(f.samples)

    def free(U, V, tau):
        c, s = np.cos(tau * k), _sin_over_k(tau, k)
        return c * U + s * V, -(k**2) * s * U + c * V

    for step in range(n):
        U, V = free(U, V, dt / 2)
        V = V - dt * fftn(vs * ifftn(U))
        U, V = free(U, V, dt / 2)
    return WaveState(GridField(ifftn(U), f.L, t), GridField(ifftn(V), f.L, t), t)


def energy(state, v=None):
    """``int |u_t|^2 + |grad u|^2 + v |u|^2 dx``."""
    u = state.u
    spec = u.spectrum()
    grad2 = np.sum(u.frequency_modulus**2 * np.abs(spec.coefficients) ** 2)
    grad2 *= u.dual_cell_volume / (2 * np.pi) ** 3
    kinetic = np.sum(np.abs(state.u_dot.samples) ** 2) * u.cell_volume
    potential = 0.0
    if v is not None:
        potential = np.sum(np.real(v.samples) * np.abs(u.samples) ** 2) * u.cell_volume
    return float(kinetic + grad2 + potential)
