"""Sobolev norms ``||f||_(s) = ((2 pi)^-3 int <xi>^{2s} |f^(xi)|^2 d xi)^{1/2}`` on grids
and for radial functions, plus the bump-localized upper bound of the quotient norm."""
import math

import numpy as np

from .grid import GridField
from .kernels import CutoffSpec, chi
from .quadrature import panel_nodes

BUMP_ORDER = 3
# the bump is 1 on B(0, R) and vanishes outside B(0, (1 + 1/BUMP_STRETCH) R)
BUMP_STRETCH = 5.0


def sobolev_norm(f, s):
    """Lattice Riemann sum of the weighted Parseval integral."""
    if s < 0:
        raise ValueError("s must be nonnegative")
    spec = f.spectrum()
    w = (1.0 + spec.modulus**2) ** s
    total = np.sum(w * np.abs(spec.coefficients) ** 2) * f.dual_cell_volume / (2 * np.pi) ** 3
    return float(math.sqrt(total))


def bump(r, R):
    """``psi_R(|x|) = chi_3(1 + 5 max(0, |x|/R - 1))``: 1 on ``B(0, R)``, 0 beyond ``1.2 R``."""
    r = np.asarray(r, dtype=float)
    arg = 1.0 + BUMP_STRETCH * np.maximum(0.0, r / R - 1.0)
    return chi(CutoffSpec(BUMP_ORDER), arg)


def local_sobolev(f, s, R):
    """Upper bound ``||psi_R f||_(s)`` for the norm of ``f`` restricted to ``B(0, R)``."""
    if not R < f.L / 2:
        raise ValueError(f"R={R} must be below L/2={f.L / 2}")
    return sobolev_norm(GridField(bump(f.radius(), R) * f.samples, f.L), s)


# -- radial functions --------------------------------------------------------


def radial_nodes(r_max, n_panels=64, order=16):
    return panel_nodes(0.0, r_max, n_panels, order)


def hankel(values, r, w, k):
    """3-D Fourier transform of a radial function sampled at quadrature nodes ``r``:
    ``4 pi int f(r) r^2 sinc(k r) dr``."""
    kr = np.outer(np.asarray(k, dtype=float), r)
    return 4 * np.pi * (np.sinc(kr / np.pi) * (r * r * w)) @ values


def inverse_hankel(values, k, w, r):
    """Inverse of :func:`hankel`: ``(2 pi)^-3 4 pi int F(k) k^2 sinc(k r) dk``."""
    return hankel(values, k, w, r) / (2 * np.pi) ** 3


def radial_sobolev(fhat, k, w, s):
    """``||f||_(s)`` from samples ``fhat`` of a radial transform at quadrature nodes ``k``."""
    dens = (1 + k * k) ** s * np.abs(fhat) ** 2 * 4 * np.pi * k * k
    return float(math.sqrt(w @ dens / (2 * np.pi) ** 3))


def radial_local_sobolev(profile, r, w, k, wk, s, R):
    """Bump-localized norm of a radial function given on nodes ``r`` (weights ``w``);
    the transform is taken on nodes ``k`` (weights ``wk``)."""
    loc = bump(r, R) * profile
    return radial_sobolev(hankel(loc, r, w, k), k, wk, s)
