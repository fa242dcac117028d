"""Potentials: grid-sampled ones for the lattice transforms, radial ones given by
their Fourier profile for the continuum paths, and a small JSON spec format."""
from dataclasses import dataclass, field
import math

import numpy as np
from scipy import ndimage
from scipy.special import gammaln, jv

from ._validation import check_positive
from .grid import GridField

# relative size below which a potential counts as vanished
NEGLIGIBLE = 1e-12


@dataclass
class GaussianTerm:
    """``amplitude * exp(-alpha |x - center|^2)``."""

    amplitude: complex
    alpha: float
    center: tuple = (0.0, 0.0, 0.0)

    def __call__(self, x):
        d = np.asarray(x, dtype=float) - np.asarray(self.center, dtype=float)
        return self.amplitude * np.exp(-self.alpha * np.sum(d * d, axis=-1))

    def fourier(self, xi):
        xi = np.asarray(xi, dtype=float)
        a = self.alpha
        phase = np.exp(-1j * xi @ np.asarray(self.center, dtype=float))
        return self.amplitude * (math.pi / a) ** 1.5 * np.exp(-np.sum(xi * xi, axis=-1) / (4 * a)) * phase

    def reach(self, rel=NEGLIGIBLE):
        return math.sqrt(-math.log(rel) / self.alpha) + float(np.linalg.norm(self.center))


class GridPotential:
    """A potential sampled on a :class:`GridField`.

    ``terms`` (a list of :class:`GaussianTerm`) is kept when the potential has
    a closed form; it enables exact pointwise evaluation and exact double
    spherical means in the physical-space pairing. ``radial`` marks
    rotation-invariant potentials, which the lattice transform exploits.
    """

    def __init__(self, field, support_radius, sobolev_s=None, terms=None, radial=False):
        self.field = field
        self.support_radius = float(check_positive(support_radius, "support_radius"))
        self.sobolev_s = sobolev_s
        self.terms = list(terms) if terms else None
        self.radial = bool(radial)
        self._interp = None

    def __repr__(self):
        return (f"GridPotential(M={self.field.M}, L={self.field.L}, "
                f"support_radius={self.support_radius}, radial={self.radial})")

    @property
    def L(self):
        return self.field.L

    @property
    def M(self):
        return self.field.M

    def scaled(self, c):
        terms = None
        if self.terms is not None:
            terms = [GaussianTerm(c * g.amplitude, g.alpha, g.center) for g in self.terms]
        return GridPotential(c * self.field, self.support_radius, self.sobolev_s, terms, self.radial)

    def shifted(self, cells):
        """Translate by an integer number of grid cells per axis (periodic roll)."""
        cells = tuple(int(c) for c in cells)
        samples = np.roll(self.field.samples, cells, axis=(0, 1, 2))
        h = np.asarray(cells) * self.field.spacing
        terms = None
        if self.terms is not None:
            terms = [GaussianTerm(g.amplitude, g.alpha, tuple(np.asarray(g.center) + h)) for g in self.terms]
        R = self.support_radius + float(np.linalg.norm(h))
        return GridPotential(GridField(samples, self.L), R, self.sobolev_s, terms, False)

    def outside_fraction(self):
        """``max |v|`` outside ``B(0, R)`` relative to ``max |v|``."""
        a = np.abs(self.field.samples)
        out = self.field.radius() > self.support_radius
        return float(a[out].max() / a.max()) if out.any() else 0.0

    def __call__(self, x):
        """Pointwise values at points ``x`` of shape ``(..., 3)``."""
        x = np.asarray(x, dtype=float)
        if self.terms is not None:
            return sum(g(x) for g in self.terms)
        if self._interp is None:
            self._interp = [ndimage.spline_filter(part, order=3, mode="grid-wrap")
                            for part in (self.field.samples.real, self.field.samples.imag)]
        idx = (x + self.L) / self.field.spacing
        coords = np.moveaxis(idx, -1, 0).reshape(3, -1)
        vals = [ndimage.map_coordinates(c, coords, order=3, mode="grid-wrap", prefilter=False)
                for c in self._interp]
        out = (vals[0] + 1j * vals[1]).reshape(x.shape[:-1])
        out[np.linalg.norm(x, axis=-1) > self.support_radius] = 0.0
        return out

    def pair_mean(self, x, s, t):
        """Exact mean of ``v(x - (y1 + y2)/2) v(x - (y2 - y1)/2)`` over ``|y1| = s``,
        ``|y2| = t`` when all terms share one width; ``None`` otherwise."""
        if self.terms is None or len({g.alpha for g in self.terms}) != 1:
            return None
        alpha = self.terms[0].alpha
        x = np.asarray(x, dtype=float)
        total = 0.0
        for gi in self.terms:
            ui = x - np.asarray(gi.center, dtype=float)
            for gj in self.terms:
                uj = x - np.asarray(gj.center, dtype=float)
                # the cross terms in y1 . y2 cancel for equal widths, leaving two
                # independent sphere means of exponentials
                c1 = alpha * s * np.linalg.norm(ui - uj)
                c2 = alpha * t * np.linalg.norm(ui + uj)
                expo = -alpha * (ui @ ui + uj @ uj + (s * s + t * t) / 2)
                total = total + gi.amplitude * gj.amplitude * np.exp(
                    expo + _log_sinhc(c1) + _log_sinhc(c2))
        return total


def _log_sinhc(z):
    # log(sinh(z) / z), stable for large z
    if z < 1e-4:
        return z * z / 6
    return z + math.log1p(-math.exp(-2 * z)) - math.log(2 * z)


def gaussian_sum(M, L, terms, support_radius=None, radial=None):
    """Sample a sum of Gaussian terms on an ``M``-point grid over ``[-L, L)^3``."""
    terms = [t if isinstance(t, GaussianTerm) else GaussianTerm(**t) for t in terms]
    if support_radius is None:
        support_radius = max(g.reach() for g in terms)
    if radial is None:
        radial = all(np.allclose(g.center, 0.0) for g in terms)
    probe = GridField(np.zeros((M, M, M)), L)
    X, Y, Z = probe.mesh()
    pts = np.stack([X, Y, Z], axis=-1)
    samples = sum(g(pts) for g in terms)
    return GridPotential(GridField(samples, L), support_radius, None, terms, radial)


def gaussian(M, L, alpha=4.0, amplitude=1.0, center=(0.0, 0.0, 0.0), support_radius=None):
    """A single Gaussian bump; the support radius defaults to where it falls below 1e-12."""
    return gaussian_sum(M, L, [GaussianTerm(amplitude, alpha, tuple(center))], support_radius)


def trig_random(M, L, n_modes=6, amplitude=1.0, alpha=4.0, seed=0):
    """A Gaussian envelope times a random real trigonometric polynomial (grid samples only)."""
    rng = np.random.default_rng(seed)
    probe = GridField(np.zeros((M, M, M)), L)
    X, Y, Z = probe.mesh()
    pts = np.stack([X, Y, Z], axis=-1)
    k = rng.normal(scale=2.0, size=(n_modes, 3))
    c = rng.normal(size=n_modes)
    ph = rng.uniform(0, 2 * np.pi, n_modes)
    poly = sum(ci * np.cos(pts @ ki + p) for ci, ki, p in zip(c, k, ph)) / math.sqrt(n_modes)
    env = np.exp(-alpha * np.sum(pts * pts, axis=-1))
    R = math.sqrt(-math.log(NEGLIGIBLE / (1 + np.abs(c).sum())) / alpha)
    return GridPotential(GridField(amplitude * env * poly, L), R)


# -- radial potentials given through their Fourier profile ------------------


def ball_power_fourier(rho, delta, R=1.0):
    """Fourier transform of ``(1 - |x|^2 / R^2)_+^delta`` in three dimensions."""
    rho = np.asarray(rho, dtype=float)
    nu = 1.5 + delta
    z = R * np.abs(rho)
    small = z < 1e-6
    zs = np.where(small, 1.0, z)
    # 2^delta Gamma(delta+1) (2 pi)^{3/2} z^{-nu} J_nu(z), continuous at z=0
    log_c = delta * math.log(2) + gammaln(delta + 1) + 1.5 * math.log(2 * math.pi)
    val = np.exp(log_c) * zs ** (-nu) * jv(nu, zs)
    limit = math.pi**1.5 * math.exp(gammaln(delta + 1) - gammaln(delta + 2.5))
    return R**3 * np.where(small, limit, val)


@dataclass
class RadialPotential:
    """A rotation-invariant potential described by ``vhat(|xi|)``.

    ``profile`` maps radii to Fourier values; ``physical`` (optional) maps
    ``|x|`` to values; ``tail_exponent`` records the decay ``|vhat| ~ rho^-tau``.
    """

    profile: object
    support_radius: float
    physical: object = None
    tail_exponent: float = None
    label: str = "radial"
    meta: dict = field(default_factory=dict)

    def __call__(self, rho):
        return self.profile(np.asarray(rho, dtype=float))

    def scaled(self, c):
        phys = None if self.physical is None else (lambda r, f=self.physical: c * f(r))
        return RadialPotential(lambda rho, p=self.profile: c * p(rho), self.support_radius,
                               phys, self.tail_exponent, self.label, dict(self.meta, scale=c))


def radial_tail(s, R=1.0, amplitude=1.0, excess=0.01):
    """Radial potential in ``H_(s')`` exactly for ``s' < s + excess``.

    Uses ``(1 - |x|^2/R^2)_+^delta`` whose transform decays like
    ``rho^-(delta + 2)``; ``delta = s + excess - 1/2`` puts the tail exponent at
    ``tau = s + 3/2 + excess``.
    """
    delta = s + excess - 0.5
    if delta <= -1:
        raise ValueError("s too small for an integrable profile")
    tau = delta + 2.0
    return RadialPotential(
        lambda rho: amplitude * ball_power_fourier(rho, delta, R),
        R,
        lambda r: amplitude * np.where(np.abs(r) < R, np.clip(1 - (np.asarray(r) / R) ** 2, 0, None) ** delta, 0.0),
        tau,
        "radial_tail",
        {"s": s, "delta": delta, "R": R, "amplitude": amplitude},
    )


def radial_bump(R=1.0, amplitude=1.0, delta=4.0):
    """Smooth-ish bump ``A (1 - |x|^2/R^2)_+^delta`` as a :class:`RadialPotential`."""
    return RadialPotential(
        lambda rho: amplitude * ball_power_fourier(rho, delta, R),
        R,
        lambda r: amplitude * np.clip(1 - (np.asarray(r, dtype=float) / R) ** 2, 0, None) ** delta,
        delta + 2.0,
        "radial_bump",
        {"delta": delta, "R": R, "amplitude": amplitude},
    )


def radial_gaussian(alpha=4.0, amplitude=1.0, support_radius=None):
    term = GaussianTerm(amplitude, alpha)
    R = support_radius or term.reach()
    return RadialPotential(
        lambda rho: amplitude * (math.pi / alpha) ** 1.5 * np.exp(-np.asarray(rho) ** 2 / (4 * alpha)),
        R,
        lambda r: amplitude * np.exp(-alpha * np.asarray(r, dtype=float) ** 2),
        None,
        "gaussian",
        {"alpha": alpha, "amplitude": amplitude},
    )


# -- JSON potential specs ---------------------------------------------------

POTENTIAL_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["gaussian", "radial_tail", "trig_random"]},
        "M": {"type": "integer", "minimum": 8},
        "L": {"type": "number", "exclusiveMinimum": 0},
        "alpha": {"type": "number", "exclusiveMinimum": 0},
        "amplitude": {"type": "number"},
        "center": {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3},
        "terms": {"type": "array"},
        "support_radius": {"type": "number", "exclusiveMinimum": 0},
        "s": {"type": "number"},
        "R": {"type": "number", "exclusiveMinimum": 0},
        "n_modes": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
    },
}


def from_spec(spec, seed=None):
    """Build a potential from a JSON-style dict (see ``POTENTIAL_SCHEMA``)."""
    import jsonschema

    jsonschema.validate(spec, POTENTIAL_SCHEMA)
    kind = spec["kind"]
    if kind == "gaussian":
        M, L = spec.get("M", 24), spec.get("L", 2.75)
        if "terms" in spec:
            return gaussian_sum(M, L, spec["terms"], spec.get("support_radius"))
        return gaussian(M, L, spec.get("alpha", 4.0), spec.get("amplitude", 1.0),
                        spec.get("center", (0.0, 0.0, 0.0)), spec.get("support_radius"))
    if kind == "radial_tail":
        return radial_tail(spec["s"], spec.get("R", 1.0), spec.get("amplitude", 1.0))
    seed = spec.get("seed", 0) if seed is None else seed
    return trig_random(spec.get("M", 24), spec.get("L", 3.0), spec.get("n_modes", 6),
                       spec.get("amplitude", 1.0), spec.get("alpha", 4.0), seed)
