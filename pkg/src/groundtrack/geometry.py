"""Box geometry helpers built on the kernel backend."""

from __future__ import annotations

import numpy as np

from . import kernels
from .model import Box


def iou(a: Box, b: Box) -> float:
    """Intersection over union of two boxes; 0 for disjoint or zero-area input."""
    mat = kernels.iou_matrix(
        np.array([a.as_tuple()], dtype=np.float64),
        np.array([b.as_tuple()], dtype=np.float64),
    )
    return float(mat[0, 0])


def iou_matrix(boxes_a: list[Box], boxes_b: list[Box]) -> np.ndarray:
    """Pairwise IoU matrix between two box lists."""
    if not boxes_a or not boxes_b:
        return np.zeros((len(boxes_a), len(boxes_b)), dtype=np.float64)
    a = np.array([b.as_tuple() for b in boxes_a], dtype=np.float64)
    b = np.array([b.as_tuple() for b in boxes_b], dtype=np.float64)
    return kernels.iou_matrix(a, b)
