from typing import Dict, List, Optional, Tuple
import numpy as np
from alloframe.base.camera import CameraIntrinsics, CameraView, Pose
from alloframe.base.mask import Mask
from alloframe.enums import ShapeType
from alloframe.errors import UsageError


class SyntheticObject:
    """
    A ground-truth primitive.

    Attributes:
        name (str): Object name, unique within a scene.
        shape (ShapeType): BOX (axis-aligned) or SPHERE.
        center (np.ndarray): World center in meters.
        half_sizes (np.ndarray): Box half sizes; for spheres all three equal the radius.
        front_dir (np.ndarray): Unit facing direction in world coordinates.
    """

    def __init__(self, name: str, shape: ShapeType, center, front_dir, half_sizes=None, radius: float = None):
        self.name = name
        self.shape = ShapeType(shape)
        self.center = np.asarray(center, dtype=float).reshape(3)
        if self.shape == ShapeType.SPHERE:
            if radius is None or not radius > 0:
                raise UsageError(f"Sphere '{name}' needs a positive radius")
            self.half_sizes = np.full(3, float(radius))
        else:
            half_sizes = np.asarray(half_sizes, dtype=float).reshape(3)
            if np.any(half_sizes <= 0):
                raise UsageError(f"Box '{name}' needs positive half sizes")
            self.half_sizes = half_sizes
        front_dir = np.asarray(front_dir, dtype=float).reshape(3)
        norm = np.linalg.norm(front_dir)
        if not norm > 0:
            raise UsageError(f"Front direction of '{name}' must be non-zero")
        self.front_dir = front_dir / norm

    def __repr__(self):
        return f"SyntheticObject(name={self.name}, shape={self.shape.value}, center={self.center.tolist()})"

    @property
    def radius(self) -> float:
        return float(self.half_sizes[0])

    @property
    def aabb_min(self) -> np.ndarray:
        return self.center - self.half_sizes

    @property
    def aabb_max(self) -> np.ndarray:
        return self.center + self.half_sizes

    def aabb_gap(self, other: 'SyntheticObject') -> float:
        """
        Returns the largest per-axis separation between the two bounding boxes (negative when they overlap).
        """
        gaps = np.maximum(other.aabb_min - self.aabb_max, self.aabb_min - other.aabb_max)
        return float(gaps.max())

    def to_dict(self) -> dict:
        data = {
            'name': self.name,
            'shape': self.shape.value,
            'center': self.center.tolist(),
            'front_dir': self.front_dir.tolist(),
        }
        if self.shape == ShapeType.SPHERE:
            data['radius'] = self.radius
        else:
            data['half_sizes'] = self.half_sizes.tolist()
        return data

    @classmethod
    def from_dict(cls, data: dict):
        return cls(
            name=data['name'],
            shape=data['shape'],
            center=data['center'],
            front_dir=data['front_dir'],
            half_sizes=data.get('half_sizes'),
            radius=data.get('radius'),
        )


class SyntheticScene:
    """
    Ground truth of a generated scene.

    Attributes:
        seed (int): Generation seed.
        objects (List[SyntheticObject]): Scene objects.
        cameras (List[CameraView]): Calibrated cameras; depth maps are filled by the renderer.
        bounds (Tuple[np.ndarray, np.ndarray]): (min, max) corners of the placement volume.
    """

    def __init__(self, seed: int, objects: List[SyntheticObject], cameras: List[CameraView],
                 bounds: Tuple[np.ndarray, np.ndarray]):
        self.seed = int(seed)
        self.objects = list(objects)
        self.cameras = list(cameras)
        self.bounds = (np.asarray(bounds[0], dtype=float), np.asarray(bounds[1], dtype=float))

    def __repr__(self):
        return f"SyntheticScene(seed={self.seed}, objects={self.object_names()}, cameras={len(self.cameras)})"

    def object_names(self) -> List[str]:
        return [obj.name for obj in self.objects]

    def get_object(self, name: str) -> SyntheticObject:
        for obj in self.objects:
            if obj.name == name:
                return obj
        raise UsageError(f"Unknown object '{name}'")

    def to_dict(self) -> dict:
        return {
            'seed': self.seed,
            'bounds': [self.bounds[0].tolist(), self.bounds[1].tolist()],
            'objects': [obj.to_dict() for obj in self.objects],
            'cameras': [camera.to_manifest_dict() for camera in self.cameras],
        }

    @classmethod
    def from_dict(cls, data: dict):
        cameras = [
            CameraView(
                view_id=camera['id'],
                width=camera['width'],
                height=camera['height'],
                intrinsics=CameraIntrinsics.from_list(camera['K']),
                pose=Pose.from_list(camera['T_world_to_cam'], tolerance=1e-6),
            )
            for camera in data['cameras']
        ]
        return cls(
            seed=data['seed'],
            objects=[SyntheticObject.from_dict(obj) for obj in data['objects']],
            cameras=cameras,
            bounds=(data['bounds'][0], data['bounds'][1]),
        )


class SceneBundle:
    """
    Calibrated views plus optional instance masks and ground truth, as stored on disk.

    Attributes:
        views (List[CameraView]): Views with depth maps, in manifest order.
        object_names (List[str]): Object vocabulary of the bundle.
        masks (Dict[Tuple[str, str], Mask]): Instance masks keyed by (view_id, object name).
        ground_truth (SyntheticScene): Ground truth, synthetic bundles only.
        root (str): Directory the bundle was read from, if any.
    """

    def __init__(self, views: List[CameraView], object_names: List[str],
                 masks: Optional[Dict[Tuple[str, str], Mask]] = None,
                 ground_truth: Optional[SyntheticScene] = None, root: Optional[str] = None):
        view_ids = [view.view_id for view in views]
        if len(set(view_ids)) != len(view_ids):
            raise UsageError(f"Duplicate view ids in bundle: {view_ids}")
        self.views = list(views)
        self.object_names = list(object_names)
        self.masks = dict(masks or {})
        self.ground_truth = ground_truth
        self.root = root

    def __repr__(self):
        return f"SceneBundle(views={len(self.views)}, objects={self.object_names}, masks={len(self.masks)})"

    def get_view(self, view_id: str) -> CameraView:
        for view in self.views:
            if view.view_id == view_id:
                return view
        raise UsageError(f"Unknown view '{view_id}'")

    def masks_for(self, name: str) -> Dict[str, Mask]:
        """
        Returns the non-empty masks of an object keyed by view id, in view order.
        """
        result = {}
        for view in self.views:
            mask = self.masks.get((view.view_id, name))
            if mask is not None and not mask.is_empty():
                result[view.view_id] = mask
        return result
