"""
Seeded generation of small object layouts watched by a ring of level cameras.
"""
import logging
from typing import List, Optional, Tuple
import numpy as np
from alloframe.base.camera import CameraIntrinsics, CameraView, Pose
from alloframe.base.scene import SyntheticObject, SyntheticScene
from alloframe.enums import ShapeType
from alloframe.errors import GenerationError, UsageError
from alloframe.synth.renderer import render_labels

logger = logging.getLogger(__name__)

VOCABULARY = ['chair', 'table', 'ball', 'lamp', 'crate', 'sofa', 'plant', 'bag', 'bottle', 'vase', 'stool', 'bin']
SPHERE_NAMES = {'ball'}

MIN_OBJECTS = 2
MAX_OBJECTS = len(VOCABULARY)
MAX_PLACEMENT_ATTEMPTS = 10000
MIN_SEPARATION = 0.1
MIN_VISIBLE_PIXELS = 16

DEFAULT_BOUNDS = (np.array([-2.5, -0.3, -2.5]), np.array([2.5, 0.3, 2.5]))
HALF_SIZE_RANGE = (0.08, 0.15)

DEFAULT_VIEWS = 8
IMAGE_WIDTH = 320
IMAGE_HEIGHT = 240
FOCAL_RANGE = (240.0, 360.0)
RING_RADIUS = 6.5
WORLD_DOWN = np.array([0.0, 1.0, 0.0])


def look_at_pose(camera_center, target, down=WORLD_DOWN) -> Pose:
    """
    World-to-camera pose of a camera at camera_center looking at target, with its y-axis
    along the world down direction.
    """
    camera_center = np.asarray(camera_center, dtype=float)
    z_axis = np.asarray(target, dtype=float) - camera_center
    z_axis = z_axis / np.linalg.norm(z_axis)
    y_axis = down - (down @ z_axis) * z_axis
    y_axis = y_axis / np.linalg.norm(y_axis)
    x_axis = np.cross(y_axis, z_axis)
    rotation = np.vstack([x_axis, y_axis, z_axis])
    return Pose(rotation, -rotation @ camera_center)


def ring_cameras(center, n_views: int, rng: np.random.Generator, radius: float = RING_RADIUS,
                 width: int = IMAGE_WIDTH, height: int = IMAGE_HEIGHT) -> List[CameraView]:
    """
    Places n_views level cameras evenly on a horizontal circle around center, all looking at it.
    """
    center = np.asarray(center, dtype=float)
    offset = rng.uniform(0.0, 2.0 * np.pi)
    cameras = []
    for index in range(n_views):
        angle = offset + 2.0 * np.pi * index / n_views
        position = center + radius * np.array([np.cos(angle), 0.0, np.sin(angle)])
        focal = rng.uniform(*FOCAL_RANGE)
        intrinsics = CameraIntrinsics(focal, focal, width / 2.0, height / 2.0)
        cameras.append(CameraView(f"view{index}", width, height, intrinsics, look_at_pose(position, center)))
    return cameras


def _sample_object(name: str, rng: np.random.Generator, bounds: Tuple[np.ndarray, np.ndarray]) -> SyntheticObject:
    angle = rng.uniform(0.0, 2.0 * np.pi)
    front_dir = np.array([np.cos(angle), 0.0, np.sin(angle)])
    if name in SPHERE_NAMES:
        radius = rng.uniform(*HALF_SIZE_RANGE)
        half_sizes = np.full(3, radius)
    else:
        radius = None
        half_sizes = rng.uniform(*HALF_SIZE_RANGE, size=3)
    low = bounds[0] + half_sizes
    high = bounds[1] - half_sizes
    center = rng.uniform(low, high)
    if name in SPHERE_NAMES:
        return SyntheticObject(name, ShapeType.SPHERE, center, front_dir, radius=radius)
    return SyntheticObject(name, ShapeType.BOX, center, front_dir, half_sizes=half_sizes)


def _separated(candidate: SyntheticObject, placed: List[SyntheticObject]) -> bool:
    return all(candidate.aabb_gap(other) >= MIN_SEPARATION for other in placed)


def generate_scene(seed: int, n_objects: int, bounds: Optional[Tuple[np.ndarray, np.ndarray]] = None,
                   n_views: int = DEFAULT_VIEWS) -> SyntheticScene:
    """
    Generates a deterministic scene for a seed.

    Objects are rejection-sampled until they are pairwise separated by at least
    MIN_SEPARATION and each shows at least MIN_VISIBLE_PIXELS unoccluded pixels in the
    first camera; a layout failing the visibility check is discarded and re-sampled.

    Parameters:
        seed (int): Random seed.
        n_objects (int): Number of objects, 2 to 12.
        bounds (tuple): (min, max) corners of the placement volume.
        n_views (int): Number of ring cameras.

    Returns:
        SyntheticScene: The scene; camera depth maps are left empty.

    Raises:
        UsageError: On an invalid object or view count.
        GenerationError: If no valid layout is found within MAX_PLACEMENT_ATTEMPTS samples.
    """
    if not MIN_OBJECTS <= n_objects <= MAX_OBJECTS:
        raise UsageError(f"n_objects must be between {MIN_OBJECTS} and {MAX_OBJECTS}, got {n_objects}")
    if n_views < 1:
        raise UsageError(f"n_views must be >= 1, got {n_views}")
    bounds = DEFAULT_BOUNDS if bounds is None else (np.asarray(bounds[0], dtype=float),
                                                    np.asarray(bounds[1], dtype=float))
    if np.any(bounds[1] - bounds[0] <= 2 * HALF_SIZE_RANGE[1]):
        raise UsageError(f"Bounds {bounds} are too small for the object sizes")

    rng = np.random.default_rng(seed)
    names = [str(name) for name in rng.choice(VOCABULARY, size=n_objects, replace=False)]
    attempts = 0
    while attempts < MAX_PLACEMENT_ATTEMPTS:
        placed: List[SyntheticObject] = []
        for name in names:
            while attempts < MAX_PLACEMENT_ATTEMPTS:
                attempts += 1
                candidate = _sample_object(name, rng, bounds)
                if _separated(candidate, placed):
                    placed.append(candidate)
                    break
        if len(placed) < n_objects:
            break

        centroid = np.mean([obj.center for obj in placed], axis=0)
        cameras = ring_cameras(centroid, n_views, rng)
        scene = SyntheticScene(seed, placed, cameras, bounds)
        labels, _ = render_labels(scene, cameras[0])
        counts = np.bincount(labels[labels >= 0].reshape(-1), minlength=n_objects)
        if np.all(counts >= MIN_VISIBLE_PIXELS):
            logger.info("Generated scene for seed %d with %s after %d placement sample(s)", seed, names, attempts)
            return scene
        logger.debug("Layout rejected: visible pixel counts %s in %s", counts.tolist(), cameras[0].view_id)

    raise GenerationError(f"No valid layout of {n_objects} objects after {MAX_PLACEMENT_ATTEMPTS} attempts")
