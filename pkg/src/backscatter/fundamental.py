"""The truncated fundamental solution ``E_{N,R}`` on the Fourier side, the
sigma-regularized product relations of ``E_N``, and the physical pairing of
``E_2`` in three dimensions.

Fourier convention: ``F f(xi) = int e^{-i<x, xi>} f(x) dx`` with inverse
``(2 pi)^{-n} int e^{i<x, xi>} ... d xi``.
"""
from dataclasses import dataclass
import csv
import math

import numpy as np

from ._validation import check_order, check_positive, check_radii
from .exceptions import DegenerateRadii, TableRangeExceeded
from .kernels import SEPARATION, F_N_closed, F_N_eval, laplace_F_closed
from .quadrature import QuadratureSpec, integrate, sphere_rule


class TruncatedKernel:
    """``E_{N,R}``: the fundamental solution of ``prod_{j<N} (Delta_j - Delta_N)``
    cut off smoothly in time at scale ``R``.

    Parameters
    ----------
    order : int
        Number of space slots ``N >= 2``.
    radius : float
        Cutoff radius ``R``; ``E_{N,R} = E_N`` wherever ``|x_N| <= R``.
    table : KernelTable, optional
        Tabulated ``F_N``. When absent, values come from the closed form.
    on_demand : bool
        Evaluate outside the table range instead of raising.
    method : {"closed", "quadrature"}
        Evaluator used when no table applies.
    quadrature : QuadratureSpec, optional
        Must match the table's settings when both are given.
    """

    def __init__(self, order, radius, table=None, on_demand=True, method="closed", quadrature=None):
        self.order = check_order(order)
        self.radius = check_positive(radius, "radius")
        if method not in ("closed", "quadrature"):
            raise ValueError(f"unknown method {method!r}")
        if table is not None:
            if table.order != self.order:
                raise ValueError(f"table is for N={table.order}, kernel has N={self.order}")
            if quadrature is not None and quadrature != table.quadrature:
                raise ValueError("table was built with different quadrature settings")
        self.table = table
        self.on_demand = on_demand
        self.method = method
        self.quadrature = quadrature or (table.quadrature if table is not None else QuadratureSpec())

    def __repr__(self):
        src = f"table[{self.table.sha256[:8]}]" if self.table is not None else self.method
        return f"TruncatedKernel(order={self.order}, radius={self.radius}, source={src})"

    def _profile_unit(self, rho):
        """``F_N`` at radii ``rho`` of shape ``(..., N)``."""
        if self.table is not None:
            inside = np.all(rho <= self.table.r_max, axis=-1)
            if np.all(inside):
                return self.table(rho)
            if not self.on_demand:
                raise TableRangeExceeded(
                    f"radius {rho.max():.4g} beyond table range {self.table.r_max:.4g}"
                )
            out = np.empty(rho.shape[:-1], dtype=complex)
            out[inside] = self.table(rho[inside])
            out[~inside] = self._direct(rho[~inside])
            return out
        return self._direct(rho)

    def _direct(self, rho):
        if self.method == "closed":
            return np.asarray(F_N_closed(rho), dtype=complex)
        flat = rho.reshape(-1, self.order)
        vals = np.array([F_N_eval(row, self.quadrature) for row in flat])
        return vals.reshape(rho.shape[:-1])

    def profile(self, rho):
        """``R^{2N-2} F_N(R rho)`` for moduli ``rho`` of shape ``(..., N)``."""
        rho = np.asarray(rho, dtype=float)
        if rho.shape[-1] != self.order:
            raise ValueError(f"expected {self.order} moduli in the last axis")
        R = self.radius
        val = R ** (2 * self.order - 2) * self._profile_unit(R * rho)
        return val if val.ndim else complex(val)


def fourier_E(kernel, xi):
    """Fourier transform of ``E_{N,R}`` at frequency tuples ``xi`` of shape ``(..., N, 3)``."""
    xi = np.asarray(xi, dtype=float)
    if xi.ndim < 2 or xi.shape[-2] != kernel.order:
        raise ValueError(f"xi must have shape (..., {kernel.order}, dim)")
    return kernel.profile(np.linalg.norm(xi, axis=-1))


# -- sigma-regularized product relations -----------------------------------


def _require_separated(r, pairs, what):
    q = r**2
    tol = SEPARATION * (1 + q.max())
    for j, k in pairs:
        if abs(q[j] - q[k]) <= tol:
            raise DegenerateRadii(f"{what}: r_{j + 1}^2 and r_{k + 1}^2 coincide")


def pv_product(N, r, sigma_seq):
    """``(-1)^{N-1} prod_{j<N}(r_N^2 - r_j^2) F(r; sigma)`` for each sigma.

    ``E_N`` is a fundamental solution of ``prod (Delta_j - Delta_N)``, so the
    sequence tends to 1 as sigma decreases.
    """
    N = check_order(N)
    r = check_radii(r, min_length=N)
    if r.size != N:
        raise ValueError(f"expected {N} radii, got {r.size}")
    _require_separated(r, [(j, N - 1) for j in range(N - 1)], "pv_product")
    symbol = np.prod(r[-1] ** 2 - r[:-1] ** 2)
    return np.array([(-1) ** (N - 1) * symbol * laplace_F_closed(r, s) for s in sigma_seq])


def recursion_check(N, r, sigma):
    """Both sides of ``(Delta_{N-1} - Delta_N) E_N = E_{N-1} delta(x_{N-1})`` on the
    Fourier side, regularized by ``sigma``."""
    N = check_order(N, minimum=3)
    r = check_radii(r, min_length=N)
    if r.size != N:
        raise ValueError(f"expected {N} radii, got {r.size}")
    _require_separated(r, [(j, k) for j in range(N) for k in range(j + 1, N)], "recursion_check")
    lhs = (r[-1] ** 2 - r[-2] ** 2) * (-1) ** (N - 1) * laplace_F_closed(r, sigma)
    reduced = np.concatenate([r[: N - 2], r[-1:]])
    rhs = (-1) ** (N - 2) * laplace_F_closed(reduced, sigma)
    return complex(lhs), complex(rhs)


def convergence_slope(sigmas, errors):
    """Least-squares slope of ``log|error|`` against ``log sigma``."""
    x = np.log(np.asarray(sigmas, dtype=float))
    y = np.log(np.maximum(np.abs(errors), 1e-300))
    return float(np.polyfit(x, y, 1)[0])


def write_convergence_csv(path, rows):
    """Write a tidy table of ``(check, N, radii, sigma, value_re, value_im, error)`` rows."""
    fields = ["check", "N", "radii", "sigma", "value_re", "value_im", "error"]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for row in rows:
            w.writerow({k: row.get(k) for k in fields})


# -- physical pairing of E_2 in three dimensions ----------------------------


@dataclass
class PairTestFunction:
    """A test function ``g(x, y)`` on ``R^3 x R^3`` reduced to its double spherical mean.

    ``mean(s, t)`` returns the average of ``g(s theta, t omega)`` over two unit
    spheres; ``reach`` bounds the radii where ``g`` is non-negligible.
    """

    mean: object
    reach: float

    @classmethod
    def from_callable(cls, g, reach, n_theta=16):
        """Build the mean from a pointwise evaluator ``g(x, y)`` (arrays ``(..., 3)``)
        using a product rule with ``n_theta`` polar nodes on each sphere."""
        pts, wts = sphere_rule(n_theta)

        def mean(s, t):
            vals = g((s * pts)[:, None, :], (t * pts)[None, :, :])
            return float(np.real_if_close(wts @ vals @ wts))

        return cls(mean, float(reach))


def _w_derivative(G, w, h):
    """Central difference of ``G`` at ``w`` with one Richardson step."""
    d1 = (G(w + h) - G(w - h)) / (2 * h)
    d2 = (G(w + h / 2) - G(w - h / 2)) / h
    return (4 * d2 - d1) / 3


def e2_pair(g, q=None, step=1e-3):
    """``<E_2, g>`` for ``E_2 = -(4 pi^2)^{-1} delta'(|x|^2 - |y|^2)``.

    Passing to polar coordinates and ``w = |x|^2`` gives
    ``4 int_0^inf t^2 d/dw [sqrt(w) gbar(sqrt(w), t) / 2]_{w = t^2} dt``
    with ``gbar`` the double spherical mean. The ``w``-derivative is a central
    difference of step ``step * (1 + t^2)`` (shrunk by ``t^2`` below ``t = 1``
    where ``sqrt(w)`` is not smooth) refined
    by Richardson extrapolation, so ``g`` is only sampled next to the cone
    ``|x| = |y|``.
    """
    if not isinstance(g, PairTestFunction):
        raise TypeError("g must be a PairTestFunction")
    q = q or QuadratureSpec(rule="adaptive", rel_tol=1e-8, abs_tol=1e-12)

    def integrand_scalar(t):
        if t <= 0:
            return 0.0
        w = t * t
        h = step * (1 + w) * min(1.0, w)

        def G(ww):
            s = math.sqrt(ww)
            return s * g.mean(s, t) / 2

        return 4 * w * _w_derivative(G, w, h)

    def integrand(ts):
        return np.array([integrand_scalar(float(t)) for t in np.ravel(ts)]).reshape(np.shape(ts))

    return integrate(integrand, 0.0, g.reach, q, max_width=g.reach / 4)
