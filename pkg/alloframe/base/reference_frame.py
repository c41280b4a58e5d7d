import numpy as np
from alloframe.base.camera import check_rotation, ROTATION_TOLERANCE
from alloframe.errors import DegenerateFrameError


class ReferenceFrame:
    """
    A query-conditioned frame: origin plus rotation whose columns are [right, down, front].

    Attributes:
        origin (np.ndarray): Frame origin in world coordinates (meters).
        rotation (np.ndarray): 3x3 matrix, columns are the basis vectors in world coordinates.
    """

    def __init__(self, origin, rotation):
        self.origin = np.asarray(origin, dtype=float).reshape(3)
        self.rotation = np.asarray(rotation, dtype=float).reshape(3, 3)

    def __repr__(self):
        return f"ReferenceFrame(origin={self.origin.tolist()}, rotation={self.rotation.tolist()})"

    @property
    def right(self) -> np.ndarray:
        return self.rotation[:, 0]

    @property
    def down(self) -> np.ndarray:
        return self.rotation[:, 1]

    @property
    def front(self) -> np.ndarray:
        return self.rotation[:, 2]

    def is_valid(self, tolerance: float = ROTATION_TOLERANCE) -> bool:
        """
        Checks rotation validity and right-handedness (right = down x front).
        """
        if not np.all(np.isfinite(self.origin)) or not check_rotation(self.rotation, tolerance):
            return False
        return bool(np.max(np.abs(np.cross(self.down, self.front) - self.right)) < tolerance)

    def validate(self, tolerance: float = ROTATION_TOLERANCE):
        if not self.is_valid(tolerance):
            raise DegenerateFrameError("Reference frame is not a right-handed orthonormal basis")

    def to_dict(self) -> dict:
        return {
            'origin': self.origin.tolist(),
            'right': self.right.tolist(),
            'down': self.down.tolist(),
            'front': self.front.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict):
        rotation = np.column_stack([data['right'], data['down'], data['front']])
        return cls(data['origin'], rotation)
