"""Pure-numpy greedy assignment over cosine scores.

Queries are processed in row order; each takes the remaining candidate with
the highest score, the lowest index winning ties. Scores are dot products of
the pre-normalized rows, clamped to [-1, 1]; zero rows (norm below the
caller's tolerance) must arrive as all-zero unit rows and then score 0
against everything.

With a ``resolution``, scores are compared on a grid of that spacing
(rint(score / resolution)), so candidates whose directions are closer than
the grid can resolve tie and fall back to the index (norm) order. Exact
float64 comparison (resolution=None) leaves ties measure-zero on continuous
data, which starves the norm tie-break the matching relies on.
"""

import numpy as np

# Budget for one block of the score matrix, in float64 elements (~64 MB).
_BLOCK_ELEMS = 1 << 23


def greedy_assign(cand_unit, query_unit, resolution=None) -> np.ndarray:
    """Return the candidate row index matched to each query row.

    Both arguments are (n, d) arrays of unit (or zero) rows; every candidate
    is used exactly once. Scores for a block of queries come from one matrix
    product; consumed candidates are masked below the admissible score range.
    """
    cand = np.ascontiguousarray(cand_unit, dtype=np.float64)
    quer = np.ascontiguousarray(query_unit, dtype=np.float64)
    if cand.ndim != 2 or quer.ndim != 2 or cand.shape[1] != quer.shape[1]:
        raise ValueError("greedy_assign: inputs must be 2-D with matching dimension")
    n, m = cand.shape[0], quer.shape[0]
    if m > n:
        raise ValueError(f"greedy_assign: more queries ({m}) than candidates ({n})")
    if resolution is not None and not 0.0 < resolution <= 1.0:
        raise ValueError(f"greedy_assign: resolution must lie in (0, 1], got {resolution}")

    inv = 1.0 / resolution if resolution is not None else None
    masked = -2.0 * (inv or 1.0)
    out = np.empty(m, dtype=np.int64)
    dead = np.zeros(n, dtype=bool)
    buf = np.empty(n, dtype=np.float64)
    block = max(1, min(m, _BLOCK_ELEMS // max(n, 1)))
    for start in range(0, m, block):
        stop = min(start + block, m)
        scores = quer[start:stop] @ cand.T
        np.clip(scores, -1.0, 1.0, out=scores)
        if inv is not None:
            np.rint(scores * inv, out=scores)
        for r in range(stop - start):
            np.copyto(buf, scores[r])
            buf[dead] = masked
            j = int(np.argmax(buf))
            out[start + r] = j
            dead[j] = True
    return out
