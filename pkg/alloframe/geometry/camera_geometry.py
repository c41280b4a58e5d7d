"""
Pinhole camera math.

Conventions: image u right, v down; camera x right, y down, z forward (OpenCV);
poses are WORLD-TO-CAMERA, p_cam = R p_world + t.
"""
from typing import Tuple
import numpy as np
from alloframe.base.camera import CameraView, Pose
from alloframe.errors import InvalidDepthError, NonProjectableError, UsageError


def backproject_pixel(view: CameraView, u: int, v: int) -> np.ndarray:
    """
    Lifts one pixel with its depth into world coordinates.

    Parameters:
        view (CameraView): Calibrated view holding the depth map.
        u (int): Column.
        v (int): Row.

    Returns:
        np.ndarray: World point in meters.

    Raises:
        UsageError: If the pixel lies outside the image.
        InvalidDepthError: If the depth is 0 or non-finite.
    """
    z = view.depth_at(u, v)
    if not np.isfinite(z) or z <= 0:
        raise InvalidDepthError(f"Pixel ({u}, {v}) of view {view.view_id} has no valid depth")
    intrinsics = view.intrinsics
    p_cam = np.array([z * (u - intrinsics.cx) / intrinsics.fx,
                      z * (v - intrinsics.cy) / intrinsics.fy,
                      z])
    return view.pose.apply_inverse(p_cam)


def backproject_camera(view: CameraView, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """
    Lifts pixel arrays into CAMERA coordinates, dropping pixels without valid depth.

    Parameters:
        view (CameraView): Calibrated view.
        u (np.ndarray): Integer columns.
        v (np.ndarray): Integer rows.

    Returns:
        np.ndarray: (N, 3) camera-frame points of the pixels with finite positive depth.
    """
    u = np.asarray(u, dtype=int)
    v = np.asarray(v, dtype=int)
    if len(u) and (u.min() < 0 or v.min() < 0 or u.max() >= view.width or v.max() >= view.height):
        raise UsageError(f"Pixels outside the {view.width}x{view.height} view {view.view_id}")
    z = view.depth[v, u].astype(float)
    valid = np.isfinite(z) & (z > 0)
    u, v, z = u[valid], v[valid], z[valid]
    intrinsics = view.intrinsics
    x = z * (u - intrinsics.cx) / intrinsics.fx
    y = z * (v - intrinsics.cy) / intrinsics.fy
    return np.column_stack([x, y, z])


def project_point(view: CameraView, p_world) -> Tuple[float, float, float]:
    """
    Projects a world point into the image.

    Returns:
        tuple: (u, v, z) with sub-pixel coordinates and camera depth.

    Raises:
        NonProjectableError: If the point is not in front of the camera.
    """
    p_cam = view.pose.apply(np.asarray(p_world, dtype=float).reshape(3))
    z = float(p_cam[2])
    if not z > 0:
        raise NonProjectableError(f"Point {list(p_world)} is behind camera {view.view_id}")
    intrinsics = view.intrinsics
    u = intrinsics.fx * p_cam[0] / z + intrinsics.cx
    v = intrinsics.fy * p_cam[1] / z + intrinsics.cy
    return float(u), float(v), z


def rotate_direction_to_world(pose: Pose, v_cam) -> np.ndarray:
    """
    Expresses a camera-frame direction in world coordinates (rotation only).

    Raises:
        UsageError: If the direction has zero length.
    """
    v_cam = np.asarray(v_cam, dtype=float).reshape(3)
    if not np.linalg.norm(v_cam) > 0:
        raise UsageError("Cannot lift a zero-length direction")
    direction = pose.rotation.T @ v_cam
    return direction / np.linalg.norm(direction)


def camera_axis_in_world(pose: Pose, axis: int) -> np.ndarray:
    """
    Returns the camera's x (0), y (1) or z (2) axis in world coordinates.
    """
    return pose.rotation[axis, :].copy()
