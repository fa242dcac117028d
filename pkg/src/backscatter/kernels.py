"""Scalar kernels: the sine propagator profile, its convolution chains, the
Laplace transform of the chain, the smooth time cutoff, and the radial
Fourier profile ``F_N`` of the truncated fundamental solution.

Everything here is dimension free. Radii always enter through their
squares, so they are stored nonnegative.
"""
from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
from scipy.interpolate import BSpline, PPoly

from ._validation import check_order, check_positive, check_radii, check_shift
from .exceptions import DerivativeOrderTooHigh, NearDegenerateRadii
from .quadrature import QuadratureSpec, integrate

# squared radii closer than this (relative to 1 + max a^2) count as coincident
SEPARATION = 1e-4


@dataclass(frozen=True)
class CutoffSpec:
    """The cutoff ``chi_{N,R}(t) = chi_N(t / R)``."""

    order: int
    scale: float = 1.0

    def __post_init__(self):
        check_order(self.order, 2, "order")
        check_positive(self.scale, "scale")

    @property
    def mollifier_halfwidth(self):
        return 1.0 / (4 * (self.order + 1))

    @property
    def n_boxes(self):
        return 2 * self.order + 2


# -- phi and its convolution chains ---------------------------------------


def phi(a, t):
    """``Y_+(t) sin(t a) / a``, with the limit ``t`` at ``a = 0``."""
    a = np.asarray(a, dtype=float)
    t = np.asarray(t, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        val = np.where(a == 0, t, np.sin(t * a) / np.where(a == 0, 1.0, a))
    return np.where(t >= 0, val, 0.0)


def _phi_sq(q, t):
    """``phi`` as an entire function of the squared radius ``q`` (any sign)."""
    q = np.asarray(q)
    t = np.asarray(t, dtype=float)
    root = np.sqrt(q + 0j)
    small = np.abs(root) * np.abs(t) < 1e-4
    with np.errstate(invalid="ignore", divide="ignore"):
        big = np.sin(t * root) / np.where(root == 0, 1.0, root)
    x2 = q * t * t
    series = t * (1 - x2 / 6 + x2 * x2 / 120)
    val = np.where(small, series, big)
    if np.all(np.imag(val) == 0) or np.isrealobj(q):
        val = np.real(val)
    return np.where(t >= 0, val, 0.0)


def _pf_coeffs(q):
    """Partial-fraction weights ``prod_{k != j} 1 / (q_k - q_j)`` along the last axis."""
    q = np.asarray(q)
    diff = q[..., None, :] - q[..., :, None]  # [j, k] = q_k - q_j
    n = q.shape[-1]
    eye = np.eye(n, dtype=bool)
    diff = np.where(eye, 1.0, diff)
    return 1.0 / np.prod(diff, axis=-1)


def _separation_threshold(q):
    return SEPARATION * (1.0 + np.max(np.abs(q)))


def _clusters(q):
    """Group indices whose squared radii are chained closer than the threshold."""
    thr = _separation_threshold(q)
    order = np.argsort(q, kind="stable")
    groups, cur = [], [order[0]]
    for i, j in zip(order[:-1], order[1:]):
        if q[j] - q[i] < thr:
            cur.append(j)
        else:
            groups.append(cur)
            cur = [j]
    groups.append(cur)
    return groups


def phi_conv_closed(a, t):
    """Closed form of ``phi_{a_1} * ... * phi_{a_N}`` at times ``t``.

    Requires pairwise well-separated squares; raises ``NearDegenerateRadii``
    otherwise (use :func:`phi_conv_stable`).
    """
    a = check_radii(a)
    q = a * a
    if a.size > 1:
        gaps = np.abs(q[:, None] - q[None, :])[~np.eye(a.size, dtype=bool)]
        if np.min(gaps) <= _separation_threshold(q):
            raise NearDegenerateRadii(f"squared radii {q} are not separated")
    t = np.asarray(t, dtype=float)
    c = _pf_coeffs(q)
    vals = phi(a.reshape((-1,) + (1,) * t.ndim), t)
    out = np.tensordot(c, vals, axes=1)
    return out if t.ndim else float(out)


def _confluent(fn, q, t_scale):
    """Evaluate a symmetric function ``fn`` of squared radii across coincidences.

    Each cluster of near-equal squares is replaced by symmetric offsets
    ``mean + delta * c_i`` around its mean. Because ``fn`` is symmetric the
    result is even in ``delta``; three levels of Richardson extrapolation in
    ``delta^2`` remove the perturbation.
    """
    groups = [g for g in _clusters(q) if len(g) > 1]
    if not groups:
        return fn(q)
    # keep delta * (d/dq) small: the q-derivative of phi grows like t/(2 sqrt q) or t^2/6
    qmax = float(np.max(np.abs(q)))
    scale = 0.0
    for g in groups:
        qc = float(np.mean(q[g]))
        small_q = t_scale * t_scale / 6
        scale = max(scale, min(t_scale / (2 * math.sqrt(qc)), small_q) if qc > 0 else small_q)
    delta = min(0.05 / max(scale, 1e-12), 1e-2 * (1 + qmax))

    def perturbed(d):
        p = np.array(q, dtype=float)
        for g in groups:
            m = len(g)
            offsets = np.arange(m) - (m - 1) / 2
            p[g] = np.mean(q[g]) + d * offsets
        return fn(p)

    f1, f2, f4 = perturbed(delta), perturbed(delta / 2), perturbed(delta / 4)
    r1 = (4 * f2 - f1) / 3
    r2 = (4 * f4 - f2) / 3
    return (16 * r2 - r1) / 15


def phi_conv_stable(a, t):
    """Convolution chain valid for coincident or clustered radii."""
    a = check_radii(a)
    q = a * a
    t = np.asarray(t, dtype=float)
    t_scale = float(np.max(np.abs(t))) if t.size else 1.0

    def closed(p):
        c = _pf_coeffs(p)
        vals = _phi_sq(p.reshape(p.shape + (1,) * t.ndim), t)
        return np.real(np.tensordot(c, vals, axes=1))

    out = _confluent(closed, q, max(t_scale, 1e-3))
    return out if t.ndim else float(out)


# -- Laplace transform of the chain ----------------------------------------


def laplace_F_closed(a, sigma):
    """``int_0^inf (phi_{a_1} * ... * phi_{a_{N-1}})(t) cos(t a_N) e^{-sigma t} dt``."""
    a = check_radii(a, min_length=2)
    sigma = check_shift(sigma)
    q = a[:-1] ** 2
    minus = np.prod(1.0 / (q - (a[-1] - 1j * sigma) ** 2))
    plus = np.prod(1.0 / (q - (a[-1] + 1j * sigma) ** 2))
    return complex(0.5 * (minus + plus))


def laplace_F_direct(a, sigma, q=None):
    """Direct quadrature of the Laplace transform defining ``laplace_F_closed``.

    The upper limit is where ``exp(-Re(sigma) t)`` times the chain's polynomial
    growth drops below ``abs_tol``.
    """
    a = check_radii(a, min_length=2)
    sigma = check_shift(sigma)
    q = q or QuadratureSpec(rule="adaptive")
    N = a.size
    s = sigma.real
    # (1 + t)^(N-1) e^{-s t} < abs_tol
    T = 1.0
    while (N - 1) * math.log1p(T) - s * T > math.log(q.abs_tol * 1e-2):
        T *= 1.25
    freq = float(np.max(a)) + abs(sigma.imag)
    width = min(0.5, q.oscillation_guard * math.pi / freq) if freq > 0 else 0.5

    def integrand(t):
        chain = phi_conv_stable(a[:-1], t)
        return chain * np.cos(t * a[-1]) * np.exp(-sigma * t)

    return complex(integrate(integrand, 0.0, T, q, max_width=width))


# -- the cutoff chi_N ------------------------------------------------------


@lru_cache(maxsize=64)
def _box_spline(N):
    """Density of the sum of 2N+2 uniforms on [-h, h] as a B-spline, and its CDF."""
    K = 2 * N + 2
    h = 1.0 / (4 * (N + 1))
    knots = h * (2.0 * np.arange(K + 1) - K)
    basis = BSpline.basis_element(knots, extrapolate=False)
    anti = BSpline.basis_element(knots, extrapolate=False).antiderivative()
    lo, hi = anti(knots[0]), anti(knots[-1])
    return basis, anti, float(lo), float(hi), 2 * h


def _density_derivative(N, j, u):
    basis, _, _, _, width = _box_spline(N)
    spl = basis.derivative(j) if j else basis
    val = spl(u)
    return np.nan_to_num(val, nan=0.0) / width


def _cdf(N, u):
    _, anti, lo, hi, _ = _box_spline(N)
    half = 0.5
    uc = np.clip(u, -half, half)
    return (anti(uc) - lo) / (hi - lo)


def chi(spec, t):
    """Exact value of the cutoff ``chi_{N,R}`` at ``t``."""
    u = np.asarray(t, dtype=float) / spec.scale
    val = np.clip(_cdf(spec.order, u + 1.5) - _cdf(spec.order, u - 1.5), 0.0, 1.0)
    val = np.where(np.abs(u) <= 1.0, 1.0, np.where(np.abs(u) >= 2.0, 0.0, val))
    return val if val.ndim else float(val)


def chi_derivative(spec, k, t):
    """Exact ``k``-th derivative of ``chi_{N,R}`` for ``0 <= k <= 2N+2``."""
    if k < 0 or k > spec.n_boxes:
        raise DerivativeOrderTooHigh(f"k={k} outside [0, {spec.n_boxes}]")
    if k == 0:
        return chi(spec, t)
    u = np.asarray(t, dtype=float) / spec.scale
    N = spec.order
    val = _density_derivative(N, k - 1, u + 1.5) - _density_derivative(N, k - 1, u - 1.5)
    val = val / spec.scale**k
    return val if val.ndim else float(val)


def chi_sup(spec, k):
    """Exact ``sup_t |chi^{(k)}(t)|`` from the piecewise-polynomial representation."""
    if k < 0 or k > spec.n_boxes:
        raise DerivativeOrderTooHigh(f"k={k} outside [0, {spec.n_boxes}]")
    if k == 0:
        return 1.0
    basis, _, _, _, width = _box_spline(spec.order)
    spl = basis.derivative(k - 1) if k > 1 else basis
    pp = PPoly.from_spline(spl)
    best = 0.0
    x = pp.x
    edge = spec.n_boxes * width / 2 * (1 + 1e-12)
    for i in range(pp.c.shape[1]):
        dx = x[i + 1] - x[i]
        # padded knots carry spurious pieces outside the support
        if dx <= 0 or x[i] < -edge or x[i + 1] > edge:
            continue
        coef = pp.c[:, i]
        cand = [0.0, dx]
        if coef.size > 2:
            dcoef = np.polyder(coef)
            for r in np.roots(dcoef) if np.any(dcoef) else []:
                if abs(r.imag) < 1e-12 and 0 < r.real < dx:
                    cand.append(r.real)
        best = max(best, float(np.max(np.abs(np.polyval(coef, cand)))))
    # the two translates of the density derivative have disjoint supports
    return best / width / spec.scale**k


# -- weights ---------------------------------------------------------------


def h_gamma(gamma, r, s):
    """``(gamma + |r - s|)^{-1} (gamma + |r + s|)^{-1}``."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    val = 1.0 / ((gamma + np.abs(r - s)) * (gamma + np.abs(r + s)))
    return val if val.ndim else float(val)


# -- F_N, the radial Fourier profile of E_{N,1} ------------------------------

_LOGSINC = (-1 / 6, -1 / 180, -1 / 2835, -1 / 37800, -1 / 467775)


def _log_sinc(x):
    x = np.asarray(x)
    x2 = x * x
    series = x2 * (_LOGSINC[0] + x2 * (_LOGSINC[1] + x2 * (_LOGSINC[2] + x2 * (
        _LOGSINC[3] + x2 * _LOGSINC[4]))))
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = np.log(np.sin(x) / np.where(x == 0, 1, x) + 0j)
    return np.where(np.abs(x) < 0.1, series, direct)


def cutoff_sine_transform(w, N):
    """``S_N(w) = int_0^inf sin(t w) chi_N(t) dt`` in closed form (complex ``w`` allowed).

    Integrating by parts against the box-spline construction of ``chi_N`` gives
    ``S_N(w) = (1 - cos(3w/2) sinc(h w)^(2N+2)) / w``.
    """
    w = np.asarray(w)
    K = 2 * N + 2
    h = 1.0 / (4 * (N + 1))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        em1 = np.expm1(K * _log_sinc(h * w))
        g = 2 * np.sin(0.75 * w) ** 2 - np.cos(1.5 * w) * em1
        out = np.where(w == 0, 0.0, g / np.where(w == 0, 1, w))
    if np.isrealobj(w):
        out = np.real(out)
    return out


def _cos_moment(a, b, N):
    """``int_0^inf phi_a(t) cos(t b) chi_N(t) dt`` for (possibly complex) ``a``."""
    a = np.asarray(a)
    b = np.asarray(b, dtype=float)
    thr = 1e-6 * (1 + np.abs(b))
    small = np.abs(a) < thr
    with np.errstate(divide="ignore", invalid="ignore"):
        regular = (cutoff_sine_transform(a + b, N) + cutoff_sine_transform(a - b, N)) / (
            2 * np.where(small, 1, a))
    if np.any(small):
        eps = 1e-3 * (1 + np.abs(b))

        def central(e):
            return (cutoff_sine_transform(b + e, N) - cutoff_sine_transform(b - e, N)) / (2 * e)

        deriv = (4 * central(eps / 2) - central(eps)) / 3
        regular = np.where(small, deriv, regular)
    return regular


def _fourier_profile_rows(r):
    """Closed-form ``F_N`` on rows of well-separated radii (no degeneracy check)."""
    N = r.shape[-1]
    chain = r[..., :-1]
    c = _pf_coeffs(chain * chain)
    moments = _cos_moment(chain, r[..., -1:], N)
    return (-1) ** (N - 1) * np.sum(c * moments, axis=-1)


def F_N_closed(r):
    """Radial profile ``F_N(r_1, ..., r_N)`` of the Fourier transform of ``E_{N,1}``.

    ``r`` has shape ``(..., N)``; rows with clustered chain radii fall back to
    Richardson-extrapolated symmetric perturbation. Returns real values.
    """
    r = np.asarray(r, dtype=float)
    if r.shape[-1] < 2:
        raise ValueError("need N >= 2 radii")
    N = r.shape[-1]
    flat = r.reshape(-1, N)
    if N == 2:
        out = np.real(_fourier_profile_rows(flat))
        return out.reshape(r.shape[:-1]) if r.ndim > 1 else float(out[0])
    q = flat[:, :-1] ** 2
    gaps = np.abs(q[:, :, None] - q[:, None, :])
    gaps[:, np.arange(N - 1), np.arange(N - 1)] = np.inf
    thr = SEPARATION * (1 + np.max(q, axis=1))
    bad = np.min(gaps.reshape(len(flat), -1), axis=1) < thr
    out = np.empty(len(flat))
    if np.any(~bad):
        out[~bad] = np.real(_fourier_profile_rows(flat[~bad]))
    for i in np.flatnonzero(bad):
        b = flat[i, -1]

        def fn(p, b=b):
            roots = np.sqrt(p + 0j)
            c = _pf_coeffs(p)
            return np.real((-1) ** (N - 1) * np.sum(c * _cos_moment(roots, b, N)))

        out[i] = _confluent(fn, q[i], 2.0)
    return out.reshape(r.shape[:-1]) if r.ndim > 1 else float(out[0])


def F_N_eval(r, q=None):
    """``F_N`` by Gauss-Legendre quadrature of the chain against ``chi_N`` on ``[0, 2]``.

    Panel width is capped at ``min(0.25, guard * pi / max(r))``; panels are
    doubled until successive estimates agree to ``rel_tol``.
    """
    r = check_radii(r, min_length=2)
    q = q or QuadratureSpec(rule="adaptive", rel_tol=1e-12)
    N = r.size
    spec = CutoffSpec(N)
    rmax = float(np.max(r))
    width = 0.25 if rmax == 0 else min(0.25, q.oscillation_guard * math.pi / rmax)

    def integrand(t):
        if N == 2:
            chain = phi(r[0], t)
        else:
            chain = phi_conv_stable(r[:-1], t)
        return chain * np.cos(t * r[-1]) * chi(spec, t)

    val = integrate(integrand, 0.0, 2.0, q, max_width=width)
    return complex((-1) ** (N - 1) * val)
