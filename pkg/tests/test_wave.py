import math

import numpy as np
import pytest

from backscatter.exceptions import UnstableTimestep
from backscatter.grid import GridField
from backscatter.wave import (
    born_bound, born_series, born_term, energy, free_propagate, free_velocity, stability_limit,
    wave_solve,
)

M, L = 32, 4.0


def gauss(alpha=4.0, center=(0.0, 0.0, 0.0), amp=1.0):
    c = np.asarray(center)
    return GridField.from_function(
        lambda X, Y, Z: amp * np.exp(-alpha * ((X - c[0]) ** 2 + (Y - c[1]) ** 2 + (Z - c[2]) ** 2)), M, L)


def smooth_potential(seed, sup=1.0):
    rng = np.random.default_rng(seed)
    field = gauss(3.0, rng.uniform(-0.3, 0.3, 3)) + gauss(5.0, rng.uniform(-0.3, 0.3, 3), rng.uniform(-1, 1))
    s = np.real(field.samples)
    return GridField(sup * s / np.abs(s).max(), L)


def mode(k):
    g = GridField(np.zeros((M, M, M)), L)
    X, Y, Z = g.mesh()
    return GridField(np.exp(1j * (k[0] * X + k[1] * Y + k[2] * Z)), L)


def test_free_propagate_at_zero_time_is_zero():
    assert np.all(free_propagate(gauss(), 0.0).samples == 0)


def test_single_mode_multipliers():
    k = np.array([2, -1, 3]) * np.pi / L
    f = mode(k)
    kk = np.linalg.norm(k)
    t = 0.7
    np.testing.assert_allclose(free_propagate(f, t).samples, math.sin(t * kk) / kk * f.samples, atol=1e-12)
    np.testing.assert_allclose(free_velocity(f, t).samples, math.cos(t * kk) * f.samples, atol=1e-12)


def test_velocity_at_zero_time_is_identity():
    f = gauss()
    np.testing.assert_allclose(free_velocity(f, 0.0).samples, f.samples, atol=1e-13)


def test_velocity_is_time_derivative():
    f, t, h = gauss(), 0.8, 1e-4
    fd = (free_propagate(f, t + h).samples - free_propagate(f, t - h).samples) / (2 * h)
    np.testing.assert_allclose(fd, free_velocity(f, t).samples, atol=1e-6)


def test_huygens_leakage_shrinks_with_bump_width():
    t = 2.0
    leak = []
    for Rb in (0.5, 1.0):
        f = GridField.from_function(
            lambda X, Y, Z: np.clip(1 - (X**2 + Y**2 + Z**2) / Rb**2, 0, None) ** 4, 64, 4.0)
        u = free_propagate(f, t)
        out = np.abs(u.radius() - t) > Rb
        leak.append(np.linalg.norm(u.samples[out]) / np.linalg.norm(u.samples))
    assert leak[1] < leak[0] / 10


def test_free_energy_is_conserved():
    f = gauss()
    zero = GridField(np.zeros((M, M, M)), L)
    e = [energy(wave_solve(zero, f, t)) for t in (0.3, 1.0, 1.7)]
    np.testing.assert_allclose(e, e[0], rtol=1e-10)


def test_first_born_term_vanishes_without_potential():
    zero = GridField(np.zeros((M, M, M)), L)
    assert np.abs(born_term(zero, gauss(), 1, 1.0).samples).max() == 0


def test_born_term_zero_is_free_propagation():
    f = gauss()
    np.testing.assert_allclose(born_term(smooth_potential(0), f, 0, 1.0).samples,
                               free_propagate(f, 1.0).samples)


@pytest.mark.parametrize("t", [0.5, 1.0])
def test_factorial_bound(t):
    for seed in range(3):
        v = smooth_potential(seed)
        f = gauss(2.0, (0.2, 0.0, -0.1))
        terms = born_series(v, f, 3, t)
        vs = np.abs(v.samples).max()
        for N in (1, 2, 3):
            assert terms[N].l2_norm() <= 1.05 * born_bound(vs, t, N) * f.l2_norm()


def test_born_term_self_convergence():
    v, f = smooth_potential(1), gauss()
    a = born_term(v, f, 2, 1.0, steps=64)
    b = born_term(v, f, 2, 1.0, steps=128)
    assert (a - b).l2_norm() / b.l2_norm() < 1e-4


def test_richardson_improves_accuracy():
    v, f = smooth_potential(2), gauss()
    ref = born_term(v, f, 2, 1.0, steps=512)
    plain = born_term(v, f, 2, 1.0, steps=16)
    extra = born_term(v, f, 2, 1.0, steps=16, richardson=True)
    assert (extra - ref).l2_norm() < (plain - ref).l2_norm() / 10


def test_propagators_are_linear():
    v = smooth_potential(3)
    f, g = gauss(), gauss(6.0, (0.4, 0.0, 0.0))
    a, b = 0.3 - 1.2j, 2.0
    combo = born_term(v, f * a + g * b, 2, 0.8)
    parts = born_term(v, f, 2, 0.8) * a + born_term(v, g, 2, 0.8) * b
    assert (combo - parts).l2_norm() <= 1e-12 * (1 + parts.l2_norm())


def test_solver_without_potential_is_free_propagation():
    zero = GridField(np.zeros((M, M, M)), L)
    f = gauss()
    st = wave_solve(zero, f, 1.3)
    assert (st.u - free_propagate(f, 1.3)).l2_norm() < 1e-10
    assert (st.u_dot - free_velocity(f, 1.3)).l2_norm() < 1e-10


def test_energy_drift_is_second_order():
    v, f = smooth_potential(4), gauss()
    drifts = []
    for dt in (0.05, 0.025):
        st0 = wave_solve(v, f, dt, dt=dt / 8)
        st1 = wave_solve(v, f, 1.0, dt=dt)
        drifts.append(abs(energy(st1, v) - energy(st0, v)))
    assert drifts[1] < drifts[0] / 3


def test_born_series_residual_decreases():
    v = smooth_potential(5, sup=0.5)
    f, t = gauss(), 1.0
    ref = wave_solve(v, f, t).u
    terms = born_series(v, f, 3, t, richardson=True)
    partial, res = None, []
    for N, term in enumerate(terms):
        s = term * (-1) ** N
        partial = s if partial is None else partial + s
        res.append((partial - ref).l2_norm())
    assert all(b < a for a, b in zip(res, res[1:]))


def test_unstable_timestep_rejected():
    f = gauss()
    with pytest.raises(UnstableTimestep):
        wave_solve(f, f, 1.0, dt=2 * stability_limit(f))


def test_snapshot_roundtrip(tmp_path):
    f = gauss()
    f.time = 0.5
    f.save(tmp_path / "snap", note="x")
    back = GridField.load(tmp_path / "snap")
    assert back.time == 0.5 and back.L == L
    np.testing.assert_array_equal(back.samples, f.samples)


def test_spectrum_of_gaussian():
    f = GridField.from_function(lambda X, Y, Z: np.exp(-2 * (X**2 + Y**2 + Z**2)), 48, L)
    spec = f.spectrum()
    exact = (np.pi / 2.0) ** 1.5 * np.exp(-spec.modulus**2 / 8)
    np.testing.assert_allclose(spec.coefficients, exact, atol=1e-12)
    np.testing.assert_allclose(spec.to_grid().samples, f.samples, atol=1e-13)
