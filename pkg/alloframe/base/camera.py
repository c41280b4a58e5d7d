from typing import Optional
import numpy as np
from alloframe.errors import UsageError

ROTATION_TOLERANCE = 1e-9


def check_rotation(rotation: np.ndarray, tolerance: float = ROTATION_TOLERANCE) -> bool:
    """
    Checks that a 3x3 matrix has orthonormal columns and determinant +1.

    Parameters:
        rotation (np.ndarray): 3x3 matrix.
        tolerance (float): Maximum absolute deviation accepted.

    Returns:
        bool: True if the matrix is a proper rotation within tolerance.
    """
    if rotation.shape != (3, 3) or not np.all(np.isfinite(rotation)):
        return False
    orthogonality = np.max(np.abs(rotation.T @ rotation - np.eye(3)))
    determinant = np.linalg.det(rotation)
    return orthogonality < tolerance and abs(determinant - 1.0) <= tolerance


class CameraIntrinsics:
    """
    Pinhole intrinsics in pixels.

    Attributes:
        fx (float): Horizontal focal length.
        fy (float): Vertical focal length.
        cx (float): Principal point x.
        cy (float): Principal point y.
    """

    def __init__(self, fx: float, fy: float, cx: float, cy: float):
        if not fx > 0 or not fy > 0:
            raise UsageError(f"Focal lengths must be positive, got fx={fx}, fy={fy}")
        self.fx = float(fx)
        self.fy = float(fy)
        self.cx = float(cx)
        self.cy = float(cy)

    def __repr__(self):
        return f"CameraIntrinsics(fx={self.fx}, fy={self.fy}, cx={self.cx}, cy={self.cy})"

    def __eq__(self, other):
        return isinstance(other, CameraIntrinsics) and self.to_list() == other.to_list()

    def to_matrix(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx],
                         [0.0, self.fy, self.cy],
                         [0.0, 0.0, 1.0]])

    def to_list(self) -> list:
        return [self.fx, self.fy, self.cx, self.cy]

    @classmethod
    def from_list(cls, values: list):
        fx, fy, cx, cy = values
        return cls(fx, fy, cx, cy)


class Pose:
    """
    Rigid WORLD-TO-CAMERA transform: p_cam = rotation @ p_world + translation.

    Attributes:
        rotation (np.ndarray): 3x3 rotation matrix.
        translation (np.ndarray): Translation vector in meters.
    """

    def __init__(self, rotation, translation, tolerance: float = ROTATION_TOLERANCE):
        rotation = np.asarray(rotation, dtype=float).reshape(3, 3)
        translation = np.asarray(translation, dtype=float).reshape(3)
        if not check_rotation(rotation, tolerance):
            raise UsageError("Pose rotation is not a proper rotation matrix")
        if not np.all(np.isfinite(translation)):
            raise UsageError("Pose translation must be finite")
        self.rotation = rotation
        self.translation = translation

    def __repr__(self):
        return f"Pose(rotation={self.rotation.tolist()}, translation={self.translation.tolist()})"

    def __eq__(self, other):
        return (isinstance(other, Pose)
                and np.array_equal(self.rotation, other.rotation)
                and np.array_equal(self.translation, other.translation))

    @classmethod
    def identity(cls):
        return cls(np.eye(3), np.zeros(3))

    def apply(self, points: np.ndarray) -> np.ndarray:
        """
        Maps world points (N, 3) or a single point (3,) into the camera frame.
        """
        points = np.asarray(points, dtype=float)
        return points @ self.rotation.T + self.translation

    def apply_inverse(self, points: np.ndarray) -> np.ndarray:
        """
        Maps camera-frame points (N, 3) or (3,) back into the world frame: R^T (p - t).
        """
        points = np.asarray(points, dtype=float)
        return (points - self.translation) @ self.rotation

    def camera_center(self) -> np.ndarray:
        return -self.rotation.T @ self.translation

    def to_matrix(self) -> np.ndarray:
        matrix = np.eye(4)
        matrix[:3, :3] = self.rotation
        matrix[:3, 3] = self.translation
        return matrix

    def to_list(self) -> list:
        """
        Returns the 4x4 matrix as 16 floats, row-major.
        """
        return [float(value) for value in self.to_matrix().reshape(-1)]

    @classmethod
    def from_list(cls, values: list, tolerance: float = ROTATION_TOLERANCE):
        matrix = np.asarray(values, dtype=float).reshape(4, 4)
        return cls(matrix[:3, :3], matrix[:3, 3], tolerance=tolerance)


class CameraView:
    """
    One calibrated observation.

    Attributes:
        view_id (str): Identifier unique within a bundle.
        width (int): Image width in pixels.
        height (int): Image height in pixels.
        intrinsics (CameraIntrinsics): Pinhole intrinsics.
        pose (Pose): World-to-camera pose.
        depth (np.ndarray): (height, width) metric depth, 0 marks invalid pixels.
        image_path (str): Optional path of the RGB image for expert calls.
    """

    def __init__(self, view_id: str, width: int, height: int, intrinsics: CameraIntrinsics, pose: Pose,
                 depth: Optional[np.ndarray] = None, image_path: Optional[str] = None):
        self.view_id = view_id
        self.width = int(width)
        self.height = int(height)
        self.intrinsics = intrinsics
        self.pose = pose
        if depth is None:
            depth = np.zeros((self.height, self.width), dtype=np.float32)
        depth = np.asarray(depth)
        if depth.shape != (self.height, self.width):
            raise UsageError(f"Depth map of view {view_id} has shape {depth.shape}, "
                             f"expected {(self.height, self.width)}")
        self.depth = depth
        self.image_path = image_path

    def __repr__(self):
        return f"CameraView(view_id={self.view_id}, width={self.width}, height={self.height})"

    def depth_at(self, u: int, v: int) -> float:
        if not (0 <= u < self.width and 0 <= v < self.height):
            raise UsageError(f"Pixel ({u}, {v}) outside {self.width}x{self.height} view {self.view_id}")
        return float(self.depth[int(v), int(u)])

    def to_manifest_dict(self) -> dict:
        return {
            'id': self.view_id,
            'width': self.width,
            'height': self.height,
            'K': self.intrinsics.to_list(),
            'T_world_to_cam': self.pose.to_list(),
        }
