"""Quadrature rules: Gauss-Legendre panels, adaptive refinement, sphere rules."""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .exceptions import QuadratureBudgetExceeded


@dataclass(frozen=True)
class QuadratureSpec:
    """Settings for one-dimensional oscillatory quadrature.

    ``oscillation_guard`` is the largest admissible panel width expressed as a
    fraction of ``pi / max(radii)``.
    """

    rule: str = "gauss"
    max_subdivisions: int = 1 << 14
    abs_tol: float = 1e-13
    rel_tol: float = 1e-11
    oscillation_guard: float = 0.25
    order: int = 16

    def __post_init__(self):
        if self.rule not in ("gauss", "adaptive", "trapezoid"):
            raise ValueError(f"unknown quadrature rule {self.rule!r}")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 1 or self.order < 2:
            raise ValueError("max_subdivisions >= 1 and order >= 2 required")

    def as_dict(self):
        return {
            "rule": self.rule,
            "max_subdivisions": self.max_subdivisions,
            "abs_tol": self.abs_tol,
            "rel_tol": self.rel_tol,
            "oscillation_guard": self.oscillation_guard,
            "order": self.order,
        }


@lru_cache(maxsize=64)
def _legendre(order):
    x, w = np.polynomial.legendre.leggauss(order)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def panel_nodes(a, b, n_panels, order=16):
    """Nodes and weights of composite Gauss-Legendre on ``n_panels`` equal panels."""
    x, w = _legendre(order)
    edges = np.linspace(a, b, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def trapezoid_nodes(a, b, n_panels):
    nodes = np.linspace(a, b, n_panels + 1)
    weights = np.full(n_panels + 1, (b - a) / n_panels)
    weights[[0, -1]] *= 0.5
    return nodes, weights


def integrate(f, a, b, spec=None, max_width=np.inf):
    """Integrate ``f`` over ``[a, b]`` with panels no wider than ``max_width``.

    ``f`` must accept a 1-D array of nodes and return values along the last
    axis. For the ``adaptive`` and ``gauss`` rules the panel count is doubled
    until two successive estimates agree to ``rel_tol`` (or ``abs_tol``);
    ``gauss`` performs a single refinement check only. Raises
    ``QuadratureBudgetExceeded`` when more than ``max_subdivisions`` panels
    would be needed.
    """
    spec = spec or QuadratureSpec()
    if b <= a:
        return 0.0
    n = max(1, int(np.ceil((b - a) / max_width)))
    if n > spec.max_subdivisions:
        raise QuadratureBudgetExceeded(
            f"{n} panels needed for the oscillation guard, budget {spec.max_subdivisions}"
        )

    def estimate(n_panels):
        if spec.rule == "trapezoid":
            nodes, weights = trapezoid_nodes(a, b, n_panels * spec.order)
        else:
            nodes, weights = panel_nodes(a, b, n_panels, spec.order)
        return np.asarray(f(nodes)) @ weights

    prev = estimate(n)
    max_rounds = 1 if spec.rule == "gauss" else 64
    for _ in range(max_rounds):
        n *= 2
        if n > spec.max_subdivisions:
            raise QuadratureBudgetExceeded(
                f"no convergence within {spec.max_subdivisions} panels"
            )
        cur = estimate(n)
        err = np.max(np.abs(cur - prev))
        if err <= max(spec.abs_tol, spec.rel_tol * np.max(np.abs(cur))):
            return cur
        prev = cur
    if spec.rule == "gauss":
        # one refinement did not settle; fall through to adaptive doubling
        return integrate(f, a, b, QuadratureSpec(**{**spec.as_dict(), "rule": "adaptive"}),
                         max_width=(b - a) / n)
    raise QuadratureBudgetExceeded("adaptive refinement did not converge")


@lru_cache(maxsize=32)
def sphere_rule(n_theta, n_phi=None):
    """Product rule on the unit sphere S^2, weights normalised to sum to one.

    Gauss-Legendre in ``cos(theta)`` times the trapezoid rule in ``phi``;
    integrates spherical harmonics of degree < min(2 n_theta, n_phi) exactly.
    """
    n_phi = n_phi or 2 * n_theta
    u, wu = _legendre(n_theta)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    s = np.sqrt(1.0 - u**2)
    pts = np.stack(
        [
            (s[:, None] * np.cos(phi)[None, :]).ravel(),
            (s[:, None] * np.sin(phi)[None, :]).ravel(),
            np.repeat(u, n_phi),
        ],
        axis=-1,
    )
    w = np.repeat(wu, n_phi) / (2.0 * n_phi)
    pts.flags.writeable = False
    w.flags.writeable = False
    return pts, w
