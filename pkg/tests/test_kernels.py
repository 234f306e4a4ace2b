import numpy as np
import numpy.testing as npt
import pytest

from gtnlab import core, kernels
from gtnlab.kernels import _greedy_np
from gtnlab.labeling import unit_rows

needs_cython = pytest.mark.skipif(
    kernels.greedy_assign_cython is None, reason="compiled kernel not built"
)


def _random_units(rng, n, d, with_zero=False):
    pts = rng.standard_normal((n, d))
    if with_zero and n > 2:
        pts[rng.integers(n)] = 0.0
    return unit_rows(pts)


class TestNumpyKernel:
    def test_permutation_output(self):
        rng = core.make_rng(0)
        x = _random_units(rng, 50, 3)
        y = _random_units(rng, 50, 3)
        assign = _greedy_np.greedy_assign(x, y)
        assert sorted(assign.tolist()) == list(range(50))

    def test_block_size_does_not_change_result(self, monkeypatch):
        rng = core.make_rng(1)
        x = _random_units(rng, 97, 2)
        y = _random_units(rng, 97, 2)
        full = _greedy_np.greedy_assign(x, y)
        monkeypatch.setattr(_greedy_np, "_BLOCK_ELEMS", 128)
        npt.assert_array_equal(_greedy_np.greedy_assign(x, y), full)

    def test_rejects_more_queries_than_candidates(self):
        with pytest.raises(ValueError, match="more queries"):
            _greedy_np.greedy_assign(np.eye(2), np.ones((3, 2)))

    def test_rejects_dim_mismatch(self):
        with pytest.raises(ValueError):
            _greedy_np.greedy_assign(np.eye(2), np.ones((2, 3)))


@needs_cython
class TestBackendAgreement:
    @pytest.mark.parametrize("resolution", [None, 2.0**-12])
    @pytest.mark.parametrize("d", [1, 2, 3, 4])
    def test_random_instances(self, d, resolution):
        rng = core.make_rng(100 + d)
        for n in (1, 2, 7, 64, 400):
            x = _random_units(rng, n, d, with_zero=True)
            y = _random_units(rng, n, d, with_zero=True)
            npt.assert_array_equal(
                kernels.greedy_assign_cython(x, y, resolution=resolution),
                _greedy_np.greedy_assign(x, y, resolution=resolution),
            )

    def test_duplicate_points_tie_identically(self):
        rng = core.make_rng(200)
        base = _random_units(rng, 20, 2)
        x = np.repeat(base, 3, axis=0)
        y = np.repeat(_random_units(rng, 20, 2), 3, axis=0)
        npt.assert_array_equal(
            kernels.greedy_assign_cython(x, y), _greedy_np.greedy_assign(x, y)
        )

    def test_cython_rejects_more_queries(self):
        with pytest.raises(ValueError, match="more queries"):
            kernels.greedy_assign_cython(np.eye(2), np.ones((3, 2)))


class TestBackendSelection:
    def test_default_backend_exposed(self):
        assert kernels.BACKEND in ("python", "cython")
        assert callable(kernels.greedy_assign)

    def test_env_override(self, monkeypatch):
        monkeypatch.setenv("GTN_LAB_KERNEL", "python")
        fn, name = kernels._select()
        assert name == "python" and fn is _greedy_np.greedy_assign

    def test_env_rejects_unknown(self, monkeypatch):
        monkeypatch.setenv("GTN_LAB_KERNEL", "fortran")
        with pytest.raises(RuntimeError, match="not understood"):
            kernels._select()
