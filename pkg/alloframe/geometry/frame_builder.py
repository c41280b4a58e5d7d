"""
Reference frame construction and world-to-frame transforms.
"""
import numpy as np
from alloframe.base.camera import CameraView
from alloframe.base.reference_frame import ReferenceFrame
from alloframe.errors import DegenerateFrameError, UsageError

DEGENERATE_EPSILON = 1e-6
PARALLEL_COS = np.cos(np.deg2rad(1.0))
FALLBACK_DOWN_HINT = np.array([0.0, 0.0, 1.0])


def forward_from_constraint(c_ref, c_aux) -> np.ndarray:
    """
    Forward axis pointing from the reference centroid toward the auxiliary centroid.

    Raises:
        DegenerateFrameError: If the centroids are closer than DEGENERATE_EPSILON.
    """
    delta = np.asarray(c_aux, dtype=float).reshape(3) - np.asarray(c_ref, dtype=float).reshape(3)
    norm = np.linalg.norm(delta)
    if not norm > DEGENERATE_EPSILON:
        raise DegenerateFrameError(f"Reference and auxiliary centroids coincide (|delta| = {norm:.3g} m)")
    return delta / norm


def _is_parallel(a: np.ndarray, b: np.ndarray) -> bool:
    return abs(float(a @ b)) / np.linalg.norm(b) > PARALLEL_COS


def build_frame(origin, v_front, v_down_hint, fallback_hint=FALLBACK_DOWN_HINT) -> ReferenceFrame:
    """
    Builds a right-handed frame [right, down, front] keeping the front axis exact.

    The down hint is orthogonalized against the front axis. When it is within 1 degree of
    the front axis the fallback hint (camera z-axis) is used instead.

    Parameters:
        origin: Frame origin in world coordinates.
        v_front: Forward direction, any non-zero length.
        v_down_hint: Approximate down direction.
        fallback_hint: Down hint used when v_down_hint is parallel to v_front.

    Returns:
        ReferenceFrame: The frame.

    Raises:
        UsageError: If v_front has zero length.
        DegenerateFrameError: If both hints are parallel to the front axis.
    """
    v_front = np.asarray(v_front, dtype=float).reshape(3)
    front_norm = np.linalg.norm(v_front)
    if not np.isfinite(front_norm) or not front_norm > 0:
        raise UsageError("Front direction must be a finite non-zero vector")
    front = v_front / front_norm

    hint = None
    for candidate in (v_down_hint, fallback_hint):
        if candidate is None:
            continue
        candidate = np.asarray(candidate, dtype=float).reshape(3)
        if np.linalg.norm(candidate) > 0 and np.all(np.isfinite(candidate)) and not _is_parallel(front, candidate):
            hint = candidate
            break
    if hint is None:
        raise DegenerateFrameError("Front axis is parallel to every available down hint")

    down = hint - (hint @ front) * front
    down = down / np.linalg.norm(down)
    right = np.cross(down, front)
    return ReferenceFrame(origin, np.column_stack([right, down, front]))


def transform_points(frame: ReferenceFrame, points) -> np.ndarray:
    """
    Expresses world points in the frame: R^T (p - O).

    Parameters:
        frame (ReferenceFrame): Target frame.
        points: (N, 3) or (3,) world points.

    Returns:
        np.ndarray: Frame-local points with the input's shape.
    """
    points = np.asarray(points, dtype=float)
    return (points - frame.origin) @ frame.rotation


def camera_frame(view: CameraView) -> ReferenceFrame:
    """
    The view's own camera frame expressed as a ReferenceFrame.
    """
    return ReferenceFrame(view.pose.camera_center(), view.pose.rotation.T)
