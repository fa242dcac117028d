"""The terms ``B_N v`` of the backscattering series.

``B_N v(x) = (2 pi)^{-3N} 2^3 int e^{2i<x, xi_N>} beta(xi_N) d xi_N`` where
``beta`` integrates ``F E_{N,R}`` against the chain
``v^(xi_1 + xi_N) v^(xi_2 - xi_1) ... v^(xi_N - xi_{N-1})``. With the
kernel radius ``2(N-1)R`` and ``v`` supported in ``B(0, R)`` this is exact.

Three evaluation routes are provided for ``N = 2``: a dual-lattice sum for
grid potentials, the physical pairing with ``E_2``, and a continuum radial
quadrature for rotation-invariant potentials. ``bn_radial`` handles
``N = 2, 3, 4`` for radial potentials by Monte Carlo.
"""
from dataclasses import dataclass, field as dc_field
import itertools
import math
import time

import numpy as np

from ._lattice import ball_points, beta_lattice
from .exceptions import FitFailed, InsufficientSamples, LatticeTooCoarse
from .fundamental import PairTestFunction, TruncatedKernel, e2_pair
from .grid import GridField
from .sobolev import sobolev_norm
from .quadrature import QuadratureSpec, panel_nodes, sphere_rule


@dataclass
class BornTermResult:
    """One computed term ``B_N v``.

    Exactly one of ``field`` (grid output), ``values`` at ``points``, or a
    radial profile ``values`` at ``radii`` is populated.
    """

    order: int
    field: GridField = None
    points: np.ndarray = None
    radii: np.ndarray = None
    values: np.ndarray = None
    error_estimate: float = 0.0
    standard_error: np.ndarray = None
    quadrature: dict = dc_field(default_factory=dict)
    elapsed: float = 0.0

    def __post_init__(self):
        if self.error_estimate < 0:
            raise ValueError("error_estimate must be nonnegative")


# -- lattice route -----------------------------------------------------------


def _padded_spectrum(v, pad):
    """Continuous-normalized transform of ``v`` zero-padded to ``pad`` times the box."""
    M = v.M
    M1 = pad * M
    big = np.zeros((M1, M1, M1), dtype=complex)
    lo = (pad - 1) * M // 2
    big[lo:lo + M, lo:lo + M, lo:lo + M] = v.field.samples
    return GridField(big, pad * v.L).spectrum().coefficients


def _band_cube(coef, K):
    """Move FFT-ordered coefficients into a centred cube of half-width ``2K``,
    keeping only the open ball ``|k| < K``."""
    M1 = coef.shape[0]
    size = 4 * K + 1
    cube = np.zeros((size, size, size), dtype=complex)
    r = np.arange(-K + 1, K)
    src = r % M1
    dst = r + 2 * K
    block = coef[np.ix_(src, src, src)]
    kk = r[:, None, None] ** 2 + r[None, :, None] ** 2 + r[None, None, :] ** 2
    block = np.where(kk < K * K, block, 0.0)
    cube[np.ix_(dst, dst, dst)] = block
    return cube


# the one-per-shell shortcut needs the spectrum to have died out at the band edge
SHELL_EDGE_TOL = 1e-4


def _edge_fraction(cube, K):
    """Largest ``|v^|`` on the outermost shell ``K - 1 <= |k| < K`` relative to the peak."""
    c = cube.shape[0] // 2
    r = np.arange(cube.shape[0]) - c
    kk = r[:, None, None] ** 2 + r[None, :, None] ** 2 + r[None, None, :] ** 2
    a = np.abs(cube)
    edge = (kk >= (K - 1) ** 2) & (kk < K * K)
    return float(a[edge].max() / a.max()) if a.max() > 0 else 0.0


def minimal_pad(v, kernel):
    """Smallest zero-padding factor making the dual-lattice sums alias-free."""
    need = kernel.radius + v.support_radius
    return max(1, math.floor(need / v.L) + 1)


def _beta_table(kernel, delta, K, rows=256):
    """``F_{2,R}`` at all pairs of lattice shells ``(delta sqrt(n1), delta sqrt(n2))``."""
    rho = delta * np.sqrt(np.arange(K * K))
    tab = np.empty((rho.size, rho.size))
    imag = 0.0
    for i in range(0, rho.size, rows):
        a = rho[i:i + rows]
        pairs = np.stack(np.broadcast_arrays(a[:, None], rho[None, :]), axis=-1)
        block = kernel.profile(pairs)
        tab[i:i + rows] = np.real(block)
        imag = max(imag, float(np.max(np.abs(np.imag(block)))))
    return tab, imag


_SIGNED_PERMUTATIONS = [
    (perm, signs)
    for perm in itertools.permutations(range(3))
    for signs in itertools.product((1, -1), repeat=3)
]


def _act(k, perm, signs):
    return k[:, perm] * np.asarray(signs)


def lattice_symmetries(k, cubes, off, rtol=1e-12):
    """Signed axis permutations ``g`` with ``c(g k) = c(k)`` on the points ``k`` for every cube."""
    found = []
    for perm, signs in _SIGNED_PERMUTATIONS:
        gk = _act(k, perm, signs) + off
        ok = True
        for c in cubes:
            a = c[k[:, 0] + off, k[:, 1] + off, k[:, 2] + off]
            b = c[gk[:, 0], gk[:, 1], gk[:, 2]]
            if np.max(np.abs(a - b)) > rtol * np.max(np.abs(a)):
                ok = False
                break
        if ok:
            found.append((perm, signs))
    return found


def _orbit_representatives(k, group):
    """Index of one representative per orbit and the map from points to it."""
    span = 2 * int(np.max(np.abs(k))) + 1
    codes = None
    for perm, signs in group:
        gk = _act(k, perm, signs) + span // 2
        c = (gk[:, 0] * span + gk[:, 1]) * span + gk[:, 2]
        codes = c if codes is None else np.maximum(codes, c)
    _, first, inverse = np.unique(codes, return_index=True, return_inverse=True)
    return first, inverse


def _lattice_beta(va, vb, kernel, delta, K, radial):
    """``beta`` on the ball ``|k| < K`` and the order of the symmetry group used."""
    ftab, _ = _beta_table(kernel, delta, K)
    k1, n1 = ball_points(K)
    if radial:
        # one representative per shell |k2|^2 = n
        _, first, inverse = np.unique(n1, return_index=True, return_inverse=True)
        order = 0
    else:
        group = lattice_symmetries(k1, [va] if vb is va else [va, vb], 2 * K)
        first, inverse = _orbit_representatives(k1, group)
        order = len(group)
    b = beta_lattice(k1, n1, k1[first], n1[first], ftab, va, vb, 2 * K, K * K)
    return k1, b[inverse] * delta**3, order


def _synthesize(k, beta, delta, points=None, axis=None):
    """``(2 pi)^-6 2^3 sum e^{2i<x, xi>} beta(xi) delta^3`` at points, or on a tensor grid."""
    pref = 8 * delta**3 / (2 * np.pi) ** 6
    if points is not None:
        phase = np.exp(2j * delta * (points @ k.T))
        return pref * (phase @ beta)
    K = int(np.max(np.abs(k))) + 1
    cube = np.zeros((2 * K + 1,) * 3, dtype=complex)
    cube[k[:, 0] + K, k[:, 1] + K, k[:, 2] + K] = beta
    r = np.arange(-K, K + 1)
    E = np.exp(2j * delta * np.outer(axis, r))
    out = np.einsum("ai,ijk->ajk", E, cube)
    out = np.einsum("bj,ajk->abk", E, out)
    out = np.einsum("ck,abk->abc", E, out)
    return pref * out


def b2_fourier(v, kernel=None, w=None, pad=None, band=None, points=None, estimate_error=True):
    """``B_2 v`` (or the bilinear ``B_2(v, w)``) from the dual-lattice sum.

    Parameters
    ----------
    v, w : GridPotential
        ``w`` defaults to ``v``; both must share the grid.
    kernel : TruncatedKernel, optional
        Order 2; defaults to radius ``2 R`` with ``R = v.support_radius``.
    pad : int, optional
        Zero-padding factor of the box; the padded half-width must exceed
        ``kernel.radius + R`` so periodic images of the kernel never meet the
        potential. Defaults to the smallest such factor.
    band : float, optional
        Frequency radius kept in the sums (default: the grid Nyquist radius).
    points : array (P, 3), optional
        Output points. Without them the output is a field on ``v``'s grid.
    estimate_error : bool
        Rerun on half the frequency band and report the largest change.
    """
    start = time.perf_counter()
    w = v if w is None else w
    if (w.M, w.L) != (v.M, v.L):
        raise ValueError("v and w must share the grid")
    R = max(v.support_radius, w.support_radius)
    kernel = kernel or TruncatedKernel(2, 2 * R)
    if kernel.order != 2:
        raise ValueError("b2_fourier needs an order-2 kernel")
    pad = pad or minimal_pad(v, kernel)
    L1 = pad * v.L
    if L1 <= kernel.radius + R:
        raise LatticeTooCoarse(
            f"padded half-width {L1:.4g} must exceed kernel radius + support = {kernel.radius + R:.4g}"
        )
    delta = math.pi / L1
    nyquist = math.pi * v.M / (2 * v.L)
    band = nyquist if band is None else min(band, nyquist)
    K = int(math.floor(band / delta + 1e-9))
    va = _band_cube(_padded_spectrum(v, pad), K)
    vb = va if w is v else _band_cube(_padded_spectrum(w, pad), K)
    # lattice shells of one modulus are not all related by symmetries, so
    # beta is constant on them only once the spectrum is negligible at the edge
    radial = (v.radial and w.radial
              and max(_edge_fraction(va, K), _edge_fraction(vb, K)) < SHELL_EDGE_TOL)
    k, beta, order = _lattice_beta(va, vb, kernel, delta, K, radial)
    pts = None if points is None else np.asarray(points, dtype=float).reshape(-1, 3)
    out = _synthesize(k, beta, delta, pts, v.field.axis)

    err = 0.0
    if estimate_error:
        Kh = max(2, K // 2)
        kh, bh, _ = _lattice_beta(_band_cube(_padded_spectrum(v, pad), Kh),
                               _band_cube(_padded_spectrum(w, pad), Kh), kernel, delta, Kh, radial)
        outh = _synthesize(kh, bh, delta, pts, v.field.axis)
        err = float(np.max(np.abs(out - outh)))
    meta = {"route": "lattice", "pad": pad, "band": band, "K": K, "delta": delta,
            "kernel_radius": kernel.radius, "radial_shortcut": radial,
            "symmetry_order": order, "n_xi": int(k.shape[0])}
    elapsed = time.perf_counter() - start
    if pts is None:
        return BornTermResult(2, field=GridField(out, v.L), error_estimate=err,
                              quadrature=meta, elapsed=elapsed)
    return BornTermResult(2, points=pts, values=out, error_estimate=err,
                          quadrature=meta, elapsed=elapsed)


# -- physical route ----------------------------------------------------------


def _pair_function(v, x, n_theta):
    """The test function ``g_x(y1, y2) = v(x - (y1+y2)/2) v(x - (y2-y1)/2)`` as a
    double spherical mean."""
    R = v.support_radius
    # |y2| = |2x - a - b| with a, b in B(0, R)
    reach = 2 * float(np.linalg.norm(x)) + 2 * R
    exact = getattr(v, "pair_mean", None)
    if exact is not None and v.pair_mean(x, 0.1, 0.1) is not None:
        return PairTestFunction(lambda s, t: v.pair_mean(x, s, t), reach)
    evaluate = v if not hasattr(v, "profile") else (lambda p: v.physical(np.linalg.norm(p, axis=-1)))

    def g(y1, y2):
        return evaluate(x - (y1 + y2) / 2) * evaluate(x - (y2 - y1) / 2)

    return PairTestFunction.from_callable(g, reach, n_theta)


def b2_physical(v, points, q=None, n_theta=24):
    """``B_2 v(x) = <E_2, g_x>`` evaluated in physical space at each point.

    Gaussian-sum potentials of one width use exact spherical means; other
    potentials are averaged with a product sphere rule of ``n_theta`` polar
    nodes. Radial potentials need a ``physical`` profile.
    """
    start = time.perf_counter()
    q = q or QuadratureSpec(rule="adaptive", rel_tol=1e-9, abs_tol=1e-14)
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    vals = np.array([e2_pair(_pair_function(v, x, n_theta), q) for x in pts], dtype=complex)
    err = float(q.rel_tol * np.max(np.abs(vals))) if vals.size else 0.0
    meta = {"route": "physical", "n_theta": n_theta, "quadrature": q.as_dict()}
    return BornTermResult(2, points=pts, values=vals, error_estimate=err,
                          quadrature=meta, elapsed=time.perf_counter() - start)


# -- continuum radial route --------------------------------------------------


def _radial_reach(v):
    return float(getattr(v, "support_radius", 1.0))


def beta_radial(v, rho, kernel=None, w=None, r_max=None):
    """``beta(rho)`` for radial ``v, w`` by quadrature in ``(|xi_1|, cos angle)``.

    ``beta(rho) = int_0^inf r^2 F_{2,R}(r, rho) 2 pi int_{-1}^1 v^(p) w^(q) du dr``
    with ``p, q = (rho^2 + r^2 +- 2 rho r u)^{1/2}``. Panels span one
    oscillation period of the kernel or the potential, whichever is shorter.
    """
    w = v if w is None else w
    Rv = max(_radial_reach(v), _radial_reach(w))
    kernel = kernel or TruncatedKernel(2, 2 * Rv)
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    width = min(2 * np.pi / Rv, 2 * np.pi / (1.5 * kernel.radius))
    # both |xi_1 - xi| and |xi_1| exceed r - rho, so past rho + band one factor is negligible
    band = min(_default_band(v), _default_band(w))
    band = np.inf if band >= _BAND_CAP else band
    out = np.empty(rho.shape, dtype=complex)
    for i, p0 in enumerate(rho):
        top = r_max if r_max is not None else min(8 * max(p0, 8.0), p0 + band)
        r, wr = panel_nodes(0.0, top, max(1, math.ceil(top / width)))
        n_u = max(1, math.ceil(Rv * p0 / np.pi) + 1)
        u, wu = panel_nodes(-1.0, 1.0, n_u)
        cross = 2 * p0 * np.outer(r, u)
        base = (p0 * p0 + r * r)[:, None]
        P = np.sqrt(np.maximum(base + cross, 0.0))
        Q = np.sqrt(np.maximum(base - cross, 0.0))
        ang = 2 * np.pi * (v(P) * w(Q)) @ wu
        F = kernel.profile(np.stack([r, np.full_like(r, p0)], axis=-1))
        out[i] = (r * r * F * ang) @ wr
    return out


def _radial_synthesis(beta, rho, wr, radii, N):
    """``(2 pi)^{-3N} 2^3 4 pi int rho^2 beta(rho) sinc(2 |x| rho) d rho`` at each radius."""
    kern = np.sinc(2 * np.outer(radii, rho) / np.pi) * (rho * rho * wr)
    pref = 8 * 4 * np.pi / (2 * np.pi) ** (3 * N)
    return pref * kern, kern @ beta * pref


def b2_radial(v, radii, kernel=None, w=None, rho_max=None, n_panels=None):
    """``B_2 v`` at radii ``|x|`` for a radial potential, by the continuum route.

    ``error_estimate`` compares against a run on half as many ``rho`` panels.
    """
    start = time.perf_counter()
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    Rv = _radial_reach(v)
    rho_max = rho_max or _default_band(v)
    n_panels = n_panels or max(8, math.ceil(rho_max * (Rv + radii.max()) / np.pi))
    vals = []
    for n in (n_panels, max(1, n_panels // 2)):
        rho, wr = panel_nodes(0.0, rho_max, n)
        beta = beta_radial(v, rho, kernel, w)
        vals.append(_radial_synthesis(beta, rho, wr, radii, 2)[1])
    meta = {"route": "radial", "rho_max": rho_max, "n_panels": n_panels}
    return BornTermResult(2, radii=radii, values=vals[0], error_estimate=float(np.max(np.abs(vals[0] - vals[1]))),
                          quadrature=meta, elapsed=time.perf_counter() - start)


def fourier_b2_radial(v, eta, kernel=None, w=None):
    """Radial Fourier transform of ``B_2 v`` at ``|eta|``: ``(2 pi)^-3 beta(|eta| / 2)``."""
    return beta_radial(v, np.asarray(eta, dtype=float) / 2, kernel, w) / (2 * np.pi) ** 3


_BAND_CAP = 200.0


def _default_band(v, rel=1e-10, cap=_BAND_CAP):
    """Frequency radius beyond which ``|v^|`` stays below ``rel`` of its peak."""
    rho = np.linspace(0.0, cap, 4001)
    a = np.abs(v(rho))
    above = np.nonzero(a > rel * a.max())[0]
    return float(rho[min(above[-1] + 1, rho.size - 1)])


# -- Monte Carlo for higher orders -------------------------------------------


@dataclass
class ShellMixture:
    """Half uniform on ``B(0, r_max)``, half a folded Cauchy shell around ``|xi| = rho``."""

    rho: float
    gamma: float
    r_max: float

    def __post_init__(self):
        c, g, R = self.rho, self.gamma, self.r_max
        # mass of the folded Cauchy law on [0, r_max]
        self.z = (np.arctan((R - c) / g) + np.arctan((R + c) / g)) / np.pi

    def sample(self, rng, n):
        out = np.empty((n, 3))
        uni = rng.random(n) < 0.5
        nu = int(uni.sum())
        out[uni] = _uniform_ball(rng, nu, self.r_max)
        r = np.empty(n - nu)
        filled = 0
        while filled < r.size:
            x = np.abs(self.rho + self.gamma * np.tan(np.pi * (rng.random(r.size - filled) - 0.5)))
            x = x[x <= self.r_max]
            r[filled:filled + x.size] = x
            filled += x.size
        out[~uni] = r[:, None] * _directions(rng, r.size)
        return out

    def density(self, xi):
        r = np.linalg.norm(xi, axis=-1)
        g, c = self.gamma, self.rho
        fold = (g / (g * g + (r - c) ** 2) + g / (g * g + (r + c) ** 2)) / np.pi
        shell = fold / (self.z * 4 * np.pi * np.maximum(r, 1e-300) ** 2)
        ball = 3.0 / (4 * np.pi * self.r_max**3)
        return np.where(r <= self.r_max, 0.5 * ball + 0.5 * shell, 0.0)


def _directions(rng, n):
    d = rng.normal(size=(n, 3))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def _uniform_ball(rng, n, R):
    return R * rng.random(n)[:, None] ** (1 / 3) * _directions(rng, n)


def _chain(v, xi, xi_N):
    """``v^(xi_1 + xi_N) v^(xi_2 - xi_1) ... v^(xi_N - xi_{N-1})`` for radial ``v``."""
    pts = [xi[:, 0] + xi_N] + [xi[:, j] - xi[:, j - 1] for j in range(1, xi.shape[1])]
    pts.append(xi_N - xi[:, -1])
    out = np.ones(xi.shape[0], dtype=complex)
    for p in pts:
        out = out * v(np.linalg.norm(p, axis=-1))
    return out


def beta_mc(v, N, rho, kernel, samples, rng, r_max, gamma, block=4096):
    """Importance-sampled ``beta(rho)`` and its standard error."""
    mix = ShellMixture(rho, gamma, r_max)
    xi_N = np.array([0.0, 0.0, rho])
    total, total_sq, count = 0.0, 0.0, 0
    while count < samples:
        n = min(block, samples - count)
        xi = np.stack([mix.sample(rng, n) for _ in range(N - 1)], axis=1)
        dens = np.prod(mix.density(xi), axis=1)
        mods = np.concatenate([np.linalg.norm(xi, axis=-1), np.full((n, 1), rho)], axis=1)
        vals = kernel.profile(mods) * _chain(v, xi, xi_N) / dens
        total = total + vals.sum()
        total_sq = total_sq + np.sum(np.abs(vals) ** 2)
        count += n
    mean = total / count
    var = max(total_sq / count - abs(mean) ** 2, 0.0)
    return mean, math.sqrt(var / count)


def bn_radial(v, N, radii, samples=20000, seed=0, gamma=None, kernel=None,
              rho_max=None, n_rho=48, max_rel_error=0.25):
    """``B_N v`` at radii ``|x|`` for a radial potential by Monte Carlo in the chain variables.

    Each ``rho`` node gets its own generator spawned from ``seed``, so the
    result depends only on the seed. The ``rho`` integral uses Gauss-Legendre
    panels; standard errors are propagated through it.
    """
    if N < 2:
        raise ValueError("N must be at least 2")
    if samples < 10_000:
        raise ValueError("at least 10^4 samples are required")
    start = time.perf_counter()
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    R = _radial_reach(v)
    kernel = kernel or TruncatedKernel(N, 2 * (N - 1) * R)
    gamma = gamma or N / (4 * R)
    rho_max = rho_max or _default_band(v, rel=1e-8)
    rho, wr = panel_nodes(0.0, rho_max, max(1, n_rho // 16), 16)
    streams = np.random.SeedSequence(seed).spawn(rho.size)
    beta = np.empty(rho.size, dtype=complex)
    se = np.empty(rho.size)
    for i, (p0, ss) in enumerate(zip(rho, streams)):
        beta[i], se[i] = beta_mc(v, N, p0, kernel, samples, np.random.default_rng(ss), rho_max, gamma)
    weights, vals = _radial_synthesis(beta, rho, wr, radii, N)
    out_se = np.sqrt((np.abs(weights) ** 2) @ (se**2))
    scale = np.max(np.abs(vals))
    if not scale > 0 or np.max(out_se) > max_rel_error * scale:
        raise InsufficientSamples(
            f"standard error {np.max(out_se):.3g} exceeds {max_rel_error:.0%} of max |B_N v| = {scale:.3g}"
        )
    meta = {"route": "monte_carlo", "samples": samples, "seed": seed, "gamma": gamma,
            "rho_max": rho_max, "n_rho": int(rho.size)}
    return BornTermResult(N, radii=radii, values=vals, standard_error=out_se,
                          error_estimate=float(np.max(out_se)), quadrature=meta,
                          elapsed=time.perf_counter() - start)


# -- truncated transform -----------------------------------------------------


@dataclass
class TruncatedTransform:
    """``v + B_2 v + ... + B_M v`` on ``v``'s grid with the individual terms."""

    field: GridField
    terms: dict
    norms: dict


def _term_on_grid(v, N, method, radial_model, options):
    if method == "lattice":
        if N != 2:
            raise ValueError("the lattice route computes N = 2 only")
        return b2_fourier(v, **options).field
    if method == "physical":
        if N != 2:
            raise ValueError("the physical route computes N = 2 only")
        pts = v.field.mesh().reshape(-1, 3)
        res = b2_physical(v, pts, **options)
        return GridField(res.values.reshape(v.field.samples.shape), v.L)
    if method == "monte_carlo":
        if radial_model is None:
            raise ValueError("Monte Carlo terms need a radial model of v")
        r = v.field.radius()
        radii, inverse = np.unique(np.round(r, 12), return_inverse=True)
        res = bn_radial(radial_model, N, radii, **options)
        return GridField(res.values[inverse].reshape(r.shape), v.L)
    raise ValueError(f"unknown method {method!r}")


def truncated_transform(v, M, methods=None, radial_model=None, s=0.0, options=None):
    """Partial sum ``v + sum_{N=2}^M B_N v`` on the grid of ``v``.

    ``methods`` maps each order to ``"lattice"``, ``"physical"`` or
    ``"monte_carlo"`` (the last evaluates ``radial_model``, the rotation-
    invariant description of ``v``, and samples it at the grid radii).
    ``norms`` holds the ``H_(s)`` norm of every term, ``B_1 v = v`` included.
    """
    if M < 1:
        raise ValueError("M must be at least 1")
    methods = {2: "lattice", **(methods or {})}
    options = options or {}
    total = v.field.copy()
    terms = {1: v.field}
    norms = {1: sobolev_norm(v.field, s)}
    for N in range(2, M + 1):
        if N not in methods:
            raise ValueError(f"no method given for N={N}")
        term = _term_on_grid(v, N, methods[N], radial_model, options.get(N, {}))
        terms[N] = term
        norms[N] = sobolev_norm(term, s)
        total = total + term
    return TruncatedTransform(total, terms, norms)


# -- smoothing diagnostics ---------------------------------------------------

SAMPLES_PER_OCTAVE = 48


def _octave_rms(fn, centers):
    """RMS of ``|fn|`` over the octave ``[c / sqrt 2, c sqrt 2]`` around each centre.

    Averaging over a full octave washes out the zeros of oscillating
    transforms; the samples are log-spaced so every window sees the same count.
    """
    lo, hi = centers[0] / math.sqrt(2), centers[-1] * math.sqrt(2)
    n = max(2, math.ceil(SAMPLES_PER_OCTAVE * math.log2(hi / lo)) + 1)
    eta = np.geomspace(lo, hi, n)
    vals = np.abs(fn(eta)) ** 2
    out = np.empty(len(centers))
    for i, c in enumerate(centers):
        inside = (eta >= c / math.sqrt(2) * (1 - 1e-12)) & (eta <= c * math.sqrt(2) * (1 + 1e-12))
        # eta d(log eta) = d eta
        out[i] = math.sqrt(np.sum(vals[inside] * eta[inside]) / np.sum(eta[inside]))
    return out


def _slope(x, y):
    keep = y > 0
    if np.count_nonzero(keep) < 2:
        raise FitFailed("transform vanishes on the tail window")
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])


def smoothing_report(v, s, epsilon, window=(8.0, 128.0), per_octave=4, kernel=None):
    """Measured Fourier-tail gain of ``B_2 v`` over a radial potential ``v``.

    Fits log-log slopes of the octave-averaged ``|v^|`` and ``|F B_2 v|`` at
    ``per_octave`` centres per octave in ``window``. The gain is the slope
    difference; the check passes when it is at least ``min(s, 1 - epsilon) - 0.3``.
    """
    lo, hi = window
    n = int(math.floor(per_octave * math.log2(hi / lo) + 1e-9)) + 1
    if n < 8:
        raise FitFailed(f"tail window {window} has only {n} octave points (need 8)")
    centers = lo * 2.0 ** (np.arange(n) / per_octave)
    start = time.perf_counter()
    v_rms = _octave_rms(v, centers)
    b_rms = _octave_rms(lambda eta: fourier_b2_radial(v, eta, kernel), centers)
    slope_v, slope_b = _slope(centers, v_rms), _slope(centers, b_rms)
    gain = slope_v - slope_b
    target = min(s, 1 - epsilon) - 0.3
    return {
        "s": s, "epsilon": epsilon, "window": [lo, hi], "centers": centers.tolist(),
        "v_rms": v_rms.tolist(), "b2_rms": b_rms.tolist(),
        "slope_v": slope_v, "slope_b2": slope_b, "gain": gain,
        "required_gain": target, "passed": bool(gain >= target),
        "elapsed": time.perf_counter() - start,
    }
