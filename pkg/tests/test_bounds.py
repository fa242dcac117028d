import json
import math

import numpy as np
import pytest

from backscatter import bounds as B
from backscatter.exceptions import BoundViolated
from backscatter.potentials import radial_gaussian


def jp(x):
    return math.sqrt(1 + x * x)


def test_sobolev_params_derived_fields():
    p = B.SobolevParams((0.4, 0.6), 0.1)
    assert p.m == 0 and p.a == (0.4, 0.6)
    assert p.sigma == pytest.approx(1.0)
    q = B.SobolevParams((0.4, 1.5), 0.1)
    assert q.a == (0.4, 0.9) and q.sigma == pytest.approx(1.3)
    with pytest.raises(ValueError):
        B.SobolevParams((0.4,), 1.0)
    with pytest.raises(ValueError):
        B.SobolevParams((-0.1, 0.4), 0.1)


def test_weight_m_product():
    w = B.WeightM((1.0, 2.0))
    xi = np.array([[1.0, 0, 0], [0, 2.0, 0]])
    expected = jp(math.sqrt(5)) ** -1 * jp(math.sqrt(5)) ** -2
    assert w(xi) == pytest.approx(expected)
    with pytest.raises(ValueError):
        B.WeightM((1.0,))


def test_hgamma_weight_inequality_sweep():
    rep = B.check_hgamma_lemma(samples=20000, seed=1)
    assert rep["min_ratio"] >= 1


def test_weight_splitting_and_chain_bound():
    assert B.check_weight_splitting((0.4, 0.6, 0.5), samples=5000)["max_ratio"] <= 1
    assert B.check_weight_splitting((0.3, 0.9, 0.2, 0.7), samples=5000)["max_ratio"] <= 1
    for N in (2, 3, 4):
        assert B.check_chain_lower_bound(N, samples=5000)["max_ratio"] <= 1


def test_fs_trivial_cases():
    s = 0.4
    r0 = B.check_fs_bound(0.0, 2.0, s, 0.1)
    assert r0["lhs"] == pytest.approx(4 * math.pi * jp(2.0) ** (-2 * s), rel=1e-12)
    r3 = B.check_fs_bound(3.0, 0.0, s, 0.1)
    assert r3["lhs"] == pytest.approx(4 * math.pi * jp(3.0) ** (-2 * s), rel=1e-12)


def test_fs_quadrature_matches_closed_form():
    rng = np.random.default_rng(5)
    for r, eta, s in zip(rng.uniform(0, 20, 30), rng.uniform(0, 20, 30), rng.uniform(0, 0.9, 30)):
        rep = B.check_fs_bound(r, eta, s, 0.1)
        assert rep["lhs"] == pytest.approx(rep["closed_form"], rel=1e-5)
        assert rep["lhs"] <= rep["rhs"]


def test_fs_exponent_range():
    with pytest.raises(ValueError):
        B.check_fs_bound(1.0, 1.0, 0.95, 0.1)


def test_hgamma_conv_finite_and_stable():
    base = B.check_hgamma_conv(1.0, 0.0, 0.0, 0.4, 0.1)
    assert math.isfinite(base["lhs"]) and base["lhs"] > 0
    vals = [B.check_hgamma_conv(1.0, rho, 0.5, 0.4, 0.1)["implied_C"] for rho in (0.0, 1.0, 4.0, 16.0, 64.0)]
    assert max(vals) < base["proof_C"]
    checks, stab = B.hgamma_conv_sweep(0.1, gammas=(0.5, 1.0), etas=(0.0, 3.0))
    assert stab["passed"] and len(stab["sups"]) == 4


def test_hgamma_conv_inverse_gamma_scaling():
    a = B.hgamma_conv(1.0, 64.0, 0.5, 0.4)
    b = B.hgamma_conv(2.0, 64.0, 0.5, 0.4)
    assert 0.35 < b / a < 0.65


def test_hgamma_conv_ceiling():
    with pytest.raises(BoundViolated):
        B.check_hgamma_conv(1.0, 4.0, 0.5, 0.4, 0.1, ceiling=0.1)


def test_T2_values_and_power_law():
    zero = B.check_T2(1.0, 0.0, 0.4, 0.4)
    assert math.isfinite(zero["lhs"]) and zero["lhs"] > 0
    a = B.check_T2(1.0, 8.0, 0.4, 0.4)
    b = B.check_T2(1.0, 16.0, 0.4, 0.4)
    predicted = (jp(16.0) / jp(8.0)) ** (-1.6)
    assert b["lhs"] / a["lhs"] == pytest.approx(predicted, rel=0.3)
    with pytest.raises(BoundViolated):
        B.check_T2(1.0, 8.0, 0.4, 0.4, C=0.5 * a["implied_C"])


def test_sweep_stability_flags_drift():
    rows = [{"check": "x", "g": g, "implied_C": c} for g, c in [(1, 1.0), (1, 2.0), (2, 2.1), (3, 1.9)]]
    ok = B.sweep_stability(rows, ("g",))
    assert ok["passed"] and ok["median"] == pytest.approx(2.0)
    rows.append({"check": "x", "g": 4, "implied_C": 5.0})
    assert not B.sweep_stability(rows, ("g",))["passed"]


def test_kernel_constant_fit_and_bound():
    fit = B.fit_kernel_constant(samples=500)
    C = fit["C"]
    assert 0 < C < 10
    rng = np.random.default_rng(2)
    for r in rng.uniform(0, 20, size=(20, 3)):
        B.check_kernel_bound(r, 1.0, C)
    with pytest.raises(BoundViolated):
        B.check_kernel_bound([1.0, 1.0], 1.0, 1e-3)


@pytest.fixture(scope="module")
def A2_values():
    p = B.SobolevParams((0.4, 0.4), 0.1)
    return p, B.A2(2.0, p)[0], B.A2(4.0, p)[0]


def test_A2_chain_on_pairs(A2_values):
    p, _, _ = A2_values
    g = radial_gaussian(4.0)
    pairs = [(g, g), (radial_gaussian(2.0, 0.5), radial_gaussian(6.0, -1.0)), (radial_gaussian(9.0), g)]
    rep = B.check_A2_chain(2.0, p, pairs)
    assert all(row["ratio"] <= 1 for row in rep["pairs"])
    assert rep["sup_attained_at"] > 0 and rep["envelope_implied_C"] > 0


def test_A2_scaling_with_radius(A2_values):
    _, a, b = A2_values
    # the envelope at gamma = 1/R grows linearly in R
    assert 0.5 <= b / a <= 8


def test_A2_needs_two_factors():
    with pytest.raises(ValueError):
        B.A2(1.0, B.SobolevParams((0.4, 0.4, 0.4), 0.1))


def test_scaling_sweep_quadratic():
    rep = B.main_scaling_sweep(N=2, R_values=(0.5, 1.0), amplitudes=(0.5, 1.0))
    for row in rep["rows"]:
        assert row["amplitude_exponent"] == pytest.approx(2.0, abs=1e-9)
    assert rep["passed"] and rep["R_exponent"] <= 0.8


def test_write_report(tmp_path):
    checks = [B.check_chain_lower_bound(2, samples=100), B.check_fs_bound(1.0, 2.0, 0.3, 0.1)]
    B.write_report(checks, tmp_path / "r.json", tmp_path / "r.csv", meta={"version": "x"})
    doc = json.loads((tmp_path / "r.json").read_text())
    assert doc["meta"]["version"] == "x" and len(doc["checks"]) == 2
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "# version=x" and len(lines) == 4 and "implied_C" in lines[1]
