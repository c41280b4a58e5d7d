"""
Analytic ray casting of box and sphere scenes into depth maps, instance masks and previews.
"""
import logging
from typing import Optional, Tuple
import numpy as np
from PIL import Image
from plotly.colors import hex_to_rgb, qualitative
from alloframe.base.camera import CameraView
from alloframe.base.mask import Mask
from alloframe.base.scene import SceneBundle, SyntheticObject, SyntheticScene
from alloframe.enums import ShapeType

logger = logging.getLogger(__name__)

NO_OBJECT = -1
BACKGROUND_COLOR = (205, 205, 205)
OBJECT_COLORS = [hex_to_rgb(color) for color in qualitative.Dark24]
_DIRECTION_FLOOR = 1e-15


def _pixel_rect(camera: CameraView, obj: SyntheticObject) -> Optional[Tuple[int, int, int, int]]:
    """
    Pixel rectangle [u0, u1) x [v0, v1) covering the projection of the object's bounding box,
    or None if it falls outside the image.
    """
    corners = np.array([[x, y, z] for x in (obj.aabb_min[0], obj.aabb_max[0])
                        for y in (obj.aabb_min[1], obj.aabb_max[1])
                        for z in (obj.aabb_min[2], obj.aabb_max[2])])
    cam = camera.pose.apply(corners)
    if np.any(cam[:, 2] <= 0):
        return 0, 0, camera.width, camera.height
    intrinsics = camera.intrinsics
    u = intrinsics.fx * cam[:, 0] / cam[:, 2] + intrinsics.cx
    v = intrinsics.fy * cam[:, 1] / cam[:, 2] + intrinsics.cy
    u0 = max(int(np.floor(u.min())) - 1, 0)
    v0 = max(int(np.floor(v.min())) - 1, 0)
    u1 = min(int(np.ceil(u.max())) + 2, camera.width)
    v1 = min(int(np.ceil(v.max())) + 2, camera.height)
    if u0 >= u1 or v0 >= v1:
        return None
    return u0, v0, u1, v1


def _intersect_box(camera: CameraView, obj: SyntheticObject, directions: np.ndarray) -> np.ndarray:
    origin = camera.pose.camera_center()
    world_dirs = directions @ camera.pose.rotation
    world_dirs = np.where(np.abs(world_dirs) < _DIRECTION_FLOOR, _DIRECTION_FLOOR, world_dirs)
    t1 = (obj.aabb_min - origin) / world_dirs
    t2 = (obj.aabb_max - origin) / world_dirs
    t_near = np.minimum(t1, t2).max(axis=-1)
    t_far = np.maximum(t1, t2).min(axis=-1)
    hit = (t_near <= t_far) & (t_near > 0)
    return np.where(hit, t_near, np.inf)


def _intersect_sphere(camera: CameraView, obj: SyntheticObject, directions: np.ndarray) -> np.ndarray:
    center = camera.pose.apply(obj.center)
    a = np.einsum('...i,...i->...', directions, directions)
    b = -2.0 * directions @ center
    c = float(center @ center) - obj.radius ** 2
    discriminant = b * b - 4.0 * a * c
    with np.errstate(invalid='ignore'):
        t = (-b - np.sqrt(discriminant)) / (2.0 * a)
    hit = (discriminant >= 0) & (t > 0)
    return np.where(hit, t, np.inf)


def render_labels(scene: SyntheticScene, camera: CameraView) -> Tuple[np.ndarray, np.ndarray]:
    """
    Casts one ray per pixel and keeps the nearest hit.

    Rays pass through integer pixel coordinates, the convention back-projection uses, and
    are scaled to unit camera z so the ray parameter is the metric depth.

    Returns:
        tuple: (labels, depth): (height, width) object indices (NO_OBJECT where nothing is hit)
            and float64 depth (0 where nothing is hit).
    """
    labels = np.full((camera.height, camera.width), NO_OBJECT, dtype=int)
    depth = np.full((camera.height, camera.width), np.inf)
    intrinsics = camera.intrinsics
    for index, obj in enumerate(scene.objects):
        rect = _pixel_rect(camera, obj)
        if rect is None:
            continue
        u0, v0, u1, v1 = rect
        u, v = np.meshgrid(np.arange(u0, u1), np.arange(v0, v1))
        directions = np.stack([(u - intrinsics.cx) / intrinsics.fx,
                               (v - intrinsics.cy) / intrinsics.fy,
                               np.ones_like(u, dtype=float)], axis=-1)
        if obj.shape == ShapeType.SPHERE:
            t = _intersect_sphere(camera, obj, directions)
        else:
            t = _intersect_box(camera, obj, directions)
        window = depth[v0:v1, u0:u1]
        closer = t < window
        window[closer] = t[closer]
        labels[v0:v1, u0:u1][closer] = index
    depth[~np.isfinite(depth)] = 0.0
    return labels, depth


def render_preview(labels: np.ndarray) -> Image.Image:
    """
    Flat-coloured RGB image of a label map, one palette colour per object index.
    """
    pixels = np.empty(labels.shape + (3,), dtype=np.uint8)
    pixels[:] = BACKGROUND_COLOR
    for index in np.unique(labels[labels != NO_OBJECT]):
        pixels[labels == index] = OBJECT_COLORS[int(index) % len(OBJECT_COLORS)]
    return Image.fromarray(pixels)


def render_views(scene: SyntheticScene, noise_sigma: float = 0.0, noise_seed: Optional[int] = None,
                 previews: Optional[dict] = None) -> SceneBundle:
    """
    Renders every camera of a scene into a bundle of depth maps and instance masks.

    Parameters:
        scene (SyntheticScene): Scene to render.
        noise_sigma (float): Standard deviation of multiplicative Gaussian depth noise, as a
            fraction of each pixel's depth (0.01 = 1%).
        noise_seed (int): Seed of the noise generator, defaults to the scene seed.
        previews (dict): If given, filled with view_id -> preview image.

    Returns:
        SceneBundle: Views with float32 depth, non-empty masks keyed by (view_id, object name),
            and the scene as ground truth.
    """
    rng = np.random.default_rng(scene.seed if noise_seed is None else noise_seed)
    views = []
    masks = {}
    for camera in scene.cameras:
        labels, depth = render_labels(scene, camera)
        if noise_sigma > 0:
            valid = depth > 0
            depth[valid] *= 1.0 + noise_sigma * rng.standard_normal(int(valid.sum()))
            depth[depth < 0] = 0.0
        views.append(CameraView(camera.view_id, camera.width, camera.height, camera.intrinsics, camera.pose,
                                depth=depth.astype(np.float32)))
        for index, obj in enumerate(scene.objects):
            mask = Mask.from_array(labels == index)
            if not mask.is_empty():
                masks[(camera.view_id, obj.name)] = mask
        if previews is not None:
            previews[camera.view_id] = render_preview(labels)
        logger.debug("Rendered %s: %d object pixel(s)", camera.view_id, int((labels != NO_OBJECT).sum()))
    return SceneBundle(views, scene.object_names(), masks, ground_truth=scene)
