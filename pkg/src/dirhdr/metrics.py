"""Distances between finite point sets on the circle/sphere (chord metric)."""
from __future__ import annotations

import numpy as np

from .levelsets import BoundarySet


class EmptySet(ValueError):
    pass


class DegenerateRegion(ValueError):
    """A region without boundary (empty or full) entered an error computation."""


def _points(a) -> np.ndarray:
    if isinstance(a, BoundarySet):
        a = a.points
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.size == 0 or len(a) == 0:
        raise EmptySet("point set is empty")
    return a


def _nearest(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Chord distance from each row of `a` to its nearest row of `b`.

    The nearest neighbour is found by maximal inner product; the distance is
    then recomputed as ``||a - b||`` to keep precision for close points.
    """
    out = np.empty(len(a))
    step = max(1, (1 << 21) // len(b))
    for s in range(0, len(a), step):
        j = np.argmax(a[s:s + step] @ b.T, axis=1)
        out[s:s + step] = np.linalg.norm(a[s:s + step] - b[j], axis=1)
    return np.minimum(out, 2.0)


def _check_pair(a, b):
    a, b = _points(a), _points(b)
    if a.shape[1] != b.shape[1]:
        raise ValueError("point sets live on spheres of different dimension")
    return a, b


def directed_hausdorff(a, b) -> float:
    a, b = _check_pair(a, b)
    return float(_nearest(a, b).max())


def hausdorff(a, b) -> float:
    """Hausdorff distance between two finite point sets under the chord metric."""
    a, b = _check_pair(a, b)
    return float(max(_nearest(a, b).max(), _nearest(b, a).max()))


def min_set_distance(a, b) -> float:
    a, b = _check_pair(a, b)
    return float(_nearest(a, b).min())


def hdr_error(truth_boundary, est_boundary) -> float:
    """Hausdorff distance between the boundaries of the true and estimated HDRs."""
    for bset in (truth_boundary, est_boundary):
        if bset is None or len(_as_array(bset)) == 0:
            raise DegenerateRegion("region has no boundary")
    return hausdorff(truth_boundary, est_boundary)


def _as_array(b):
    return b.points if isinstance(b, BoundarySet) else np.asarray(b)
