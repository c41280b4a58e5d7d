"""
Point-cloud statistics used by the consensus lifting.
"""
import numpy as np
from alloframe.errors import UsageError

MAD_FLOOR = 1e-9


def _as_points(points) -> np.ndarray:
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(points) == 0:
        raise UsageError("At least one point is required")
    return points


def clean_outliers(points, mad_threshold: float = 2.5) -> np.ndarray:
    """
    Median-absolute-deviation filter on the distance to the componentwise median.

    Keeps points with |p - median| <= mad_threshold * max(MAD, 1e-9). Never returns an
    empty set: if nothing passes, the point nearest the median is kept.

    Parameters:
        points: (N, 3) points, N >= 1.
        mad_threshold (float): MAD multiple.

    Returns:
        np.ndarray: Kept points in input order.
    """
    points = _as_points(points)
    median = np.median(points, axis=0)
    distances = np.linalg.norm(points - median, axis=1)
    mad = np.median(distances)
    keep = distances <= mad_threshold * max(mad, MAD_FLOOR)
    if not keep.any():
        return points[[int(np.argmin(distances))]]
    return points[keep]


def fps_downsample(points, k: int, seed: int = 0) -> np.ndarray:
    """
    Deterministic farthest point sampling.

    Starts from the point nearest the componentwise median and greedily adds the point
    with the largest distance to the selected set; ties go to the lowest index.

    Parameters:
        points: (N, 3) points.
        k (int): Budget.
        seed (int): Unused by the deterministic start.

    Returns:
        np.ndarray: (min(N, k), 3) selected points.
    """
    points = _as_points(points)
    if len(points) <= k:
        return points.copy()
    median = np.median(points, axis=0)
    selected = [int(np.argmin(np.linalg.norm(points - median, axis=1)))]
    min_distances = np.linalg.norm(points - points[selected[0]], axis=1)
    while len(selected) < k:
        index = int(np.argmax(min_distances))
        selected.append(index)
        min_distances = np.minimum(min_distances, np.linalg.norm(points - points[index], axis=1))
    return points[selected]


def robust_centroid(points) -> np.ndarray:
    """
    Componentwise median, taking the lower median for even counts.
    """
    points = _as_points(points)
    return np.quantile(points, 0.5, axis=0, method='lower')


def robust_extent(points) -> np.ndarray:
    """
    Componentwise p95 - p5 with nearest-rank percentiles.
    """
    points = _as_points(points)
    upper = np.percentile(points, 95, axis=0, method='inverted_cdf')
    lower = np.percentile(points, 5, axis=0, method='inverted_cdf')
    return np.maximum(upper - lower, 0.0)
