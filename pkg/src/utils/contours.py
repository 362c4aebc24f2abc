"""
Marching squares over node classifications with precomputed edge crossings
"""
from typing import List, Tuple

import numpy as np

Point = Tuple[float, float]
Segment = Tuple[Point, Point]

# Corner bits: bottom-left 1, bottom-right 2, top-right 4, top-left 8.
# Edges: "b" bottom, "r" right, "t" top, "l" left.
CASES = {
    0: [], 15: [],
    1: [("l", "b")], 14: [("l", "b")],
    2: [("b", "r")], 13: [("b", "r")],
    3: [("l", "r")], 12: [("l", "r")],
    4: [("r", "t")], 11: [("r", "t")],
    6: [("b", "t")], 9: [("b", "t")],
    7: [("l", "t")], 8: [("l", "t")],
}
SADDLES = (5, 10)


def marching_squares(
    x: np.ndarray,
    y: np.ndarray,
    above: np.ndarray,
    cross_h: np.ndarray,
    cross_v: np.ndarray,
    center_above: np.ndarray,
) -> List[Segment]:
    """
    Contour segments separating `above` nodes from the rest.

    Args:
        x, y: node coordinates; arrays below are indexed [j, i]
        above: node classification, shape (ny, nx)
        cross_h: x of the crossing on the edge (j, i)-(j, i+1), shape (ny, nx-1)
        cross_v: y of the crossing on the edge (j, i)-(j+1, i), shape (ny-1, nx)
        center_above: classification of each cell centre, shape (ny-1, nx-1); decides saddles
    """
    a = above.astype(np.int8)
    case = a[:-1, :-1] + 2 * a[:-1, 1:] + 4 * a[1:, 1:] + 8 * a[1:, :-1]
    segments: List[Segment] = []
    for j, i in zip(*np.nonzero((case != 0) & (case != 15))):
        code = int(case[j, i])
        points = {
            "b": (float(cross_h[j, i]), float(y[j])),
            "t": (float(cross_h[j + 1, i]), float(y[j + 1])),
            "l": (float(x[i]), float(cross_v[j, i])),
            "r": (float(x[i + 1]), float(cross_v[j, i + 1])),
        }
        if code in SADDLES:
            if bool(center_above[j, i]) == bool(above[j, i]):
                pairs = [("b", "r"), ("t", "l")]
            else:
                pairs = [("b", "l"), ("r", "t")]
        else:
            pairs = CASES[code]
        for e0, e1 in pairs:
            segments.append((points[e0], points[e1]))
    return segments


def total_length(segments: List[Segment]) -> float:
    if not segments:
        return 0.0
    arr = np.asarray(segments, dtype=float)
    return float(np.sum(np.hypot(arr[:, 1, 0] - arr[:, 0, 0], arr[:, 1, 1] - arr[:, 0, 1])))
