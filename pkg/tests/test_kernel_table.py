import numpy as np
import pytest

from backscatter.exceptions import TableRangeExceeded
from backscatter.fundamental import TruncatedKernel
from backscatter.kernel_table import KernelTable, grid_radius_bound
from backscatter.kernels import F_N_closed


@pytest.fixture(scope="module")
def table2():
    return KernelTable.build(2, 4.0, step=0.05)


def test_build_is_deterministic(table2):
    again = KernelTable.build(2, 4.0, step=0.05)
    assert again.sha256 == table2.sha256


def test_roundtrip_preserves_hash(table2, tmp_path):
    path = tmp_path / "f2.csv"
    table2.save(path, purpose="test")
    back = KernelTable.load(path)
    assert back.sha256 == table2.sha256
    np.testing.assert_array_equal(back.values, table2.values)


def test_tampered_file_is_rejected(table2, tmp_path):
    path = tmp_path / "f2.csv"
    table2.save(path)
    lines = path.read_text().splitlines()
    lines[5] = lines[5].rsplit(",", 2)[0] + ",1.0,0"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ValueError, match="hash"):
        KernelTable.load(path)


def test_interpolation_accuracy_inside_range(table2):
    rng = np.random.default_rng(0)
    r = rng.uniform(0, 4.0, size=(200, 2))
    err = np.abs(table2(r) - F_N_closed(r))
    assert err.max() < 1e-5


def test_out_of_range_raises(table2):
    with pytest.raises(TableRangeExceeded):
        table2(np.array([[4.5, 1.0]]))


def test_kernel_falls_back_outside_table(table2):
    k = TruncatedKernel(2, 1.0, table=table2)
    r = np.array([[1.0, 6.0]])
    assert k.profile(r)[0].real == pytest.approx(F_N_closed(r)[0], abs=1e-12)
    strict = TruncatedKernel(2, 1.0, table=table2, on_demand=False)
    with pytest.raises(TableRangeExceeded):
        strict.profile(r)


def test_order_three_table_matches_closed_form():
    t3 = KernelTable.build(3, 2.0, step=0.1)
    r = np.array([[0.35, 1.25, 0.72], [1.9, 0.05, 1.33]])
    np.testing.assert_allclose(t3(r).real, F_N_closed(r), atol=1e-3)


def test_grid_radius_bound():
    assert grid_radius_bound(24, 2.75, 1.0) == pytest.approx(np.pi * 24 / 2.75)
