"""Independent reference computations used by the tests.

None of these call the closed forms they are compared against.
"""
import math

import numpy as np
from scipy.integrate import quad


def _gl_unit(n_panels, order=16):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, 1.0, n_panels + 1)
    mid, half = (edges[1:] + edges[:-1]) / 2, (edges[1:] - edges[:-1]) / 2
    nodes = (mid[:, None] + half[:, None] * x).ravel()
    weights = (half[:, None] * w).ravel()
    return nodes, weights


def phi_ref(a, t):
    t = np.asarray(t, dtype=float)
    if a == 0:
        return np.where(t >= 0, t, 0.0)
    return np.where(t >= 0, np.sin(a * t) / a, 0.0)


def chain_by_time_quadrature(a, t, n_panels=4):
    """``phi_{a_1} * ... * phi_{a_N}`` at ``t`` by nested Gauss-Legendre in time."""
    x, w = _gl_unit(n_panels)

    def conv(radii, tau):
        if len(radii) == 1:
            return phi_ref(radii[0], tau)
        sig = tau[:, None] * x[None, :]
        inner = conv(radii[:-1], sig.ravel()).reshape(sig.shape)
        return tau * np.sum(w * inner * phi_ref(radii[-1], tau[:, None] - sig), axis=1)

    return conv(list(a), np.atleast_1d(np.asarray(t, dtype=float)))


def laplace_by_quad(a, sigma):
    """``int_0^inf phi_a(t) cos(t b) e^{-sigma t} dt`` for one chain radius."""
    a0, b = a

    def f(t):
        return float(phi_ref(a0, t)) * math.cos(b * t)

    # quad's 'cos' weight does not combine with exp, so integrate on a long finite range
    T = 60.0 / sigma
    val, _ = quad(lambda t: f(t) * math.exp(-sigma * t), 0, T, limit=4000, epsabs=1e-14, epsrel=1e-12)
    return val


def gaussian_pair_pv(a, b):
    """``<E_2, exp(-a|x|^2 - b|y|^2)>`` from the Fourier side as a principal value.

    In polar coordinates for the moduli the radial integral is elementary and
    leaves one Cauchy principal value in the angle.
    """
    def c(x):
        return math.cos(x) ** 2 / (4 * a) + math.sin(x) ** 2 / (4 * b)

    def f(x):
        d = x - math.pi / 4
        ratio = -0.5 if abs(d) < 1e-9 else d / math.cos(2 * x)
        return math.cos(x) ** 2 * math.sin(x) ** 2 / (2 * c(x) ** 2) * ratio

    v, _ = quad(f, 0, math.pi / 2, weight="cauchy", wvar=math.pi / 4, epsabs=1e-14, epsrel=1e-12)
    g0 = math.pi**3 / (a * b) ** 1.5
    return -(4 * math.pi) ** 2 * g0 * v / (2 * math.pi) ** 6

