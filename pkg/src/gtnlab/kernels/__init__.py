"""Greedy cosine-assignment kernels.

The compiled extension is used when it was built; otherwise a pure-numpy
fallback with identical semantics takes over. Set GTN_LAB_KERNEL=python or
GTN_LAB_KERNEL=cython to force a backend (cython errors out if the extension
is missing).
"""

import os

from ._greedy_np import greedy_assign as greedy_assign_numpy

try:
    from ._greedy_cy import greedy_assign as greedy_assign_cython
except ImportError:
    greedy_assign_cython = None


def _select():
    requested = os.environ.get("GTN_LAB_KERNEL", "auto").lower()
    if requested not in ("auto", "python", "cython"):
        raise RuntimeError(
            f"GTN_LAB_KERNEL={requested!r} not understood; use auto, python or cython"
        )
    if requested == "python":
        return greedy_assign_numpy, "python"
    if requested == "cython" and greedy_assign_cython is None:
        raise RuntimeError(
            "GTN_LAB_KERNEL=cython but the compiled kernel is not installed; "
            "rebuild the package with Cython and a C compiler"
        )
    if greedy_assign_cython is not None:
        return greedy_assign_cython, "cython"
    return greedy_assign_numpy, "python"


greedy_assign, BACKEND = _select()
