"""
SceneBundle directory format.

    manifest.json          {"views": [{"id", "width", "height", "K", "T_world_to_cam"}], "objects": [...]}
    depth/<view_id>.adpt   b"ADPT", u32 LE width, u32 LE height, width*height float32 LE, row-major
    masks.json             {"masks": [{"view", "object", "size": [h, w], "runs": [...]}]}
    ground_truth.json      synthetic scenes only
    images/<view_id>.png   optional previews
"""
import json
import logging
import os
import struct
from typing import Dict, Optional
import numpy as np
from PIL import Image
from alloframe.base.camera import CameraIntrinsics, CameraView, Pose
from alloframe.base.mask import Mask
from alloframe.base.scene import SceneBundle, SyntheticScene
from alloframe.errors import (BundleFormatError, DimensionMismatchError, MagicMismatchError, TruncatedFileError,
                              UsageError)

logger = logging.getLogger(__name__)

DEPTH_MAGIC = b'ADPT'
DEPTH_HEADER = struct.Struct('<4sII')
DEPTH_DTYPE = np.dtype('<f4')
POSE_TOLERANCE = 1e-6

MANIFEST_FILE = 'manifest.json'
MASKS_FILE = 'masks.json'
GROUND_TRUTH_FILE = 'ground_truth.json'
DEPTH_DIR = 'depth'
IMAGES_DIR = 'images'


def encode_depth(depth: np.ndarray) -> bytes:
    height, width = depth.shape
    return DEPTH_HEADER.pack(DEPTH_MAGIC, width, height) + np.ascontiguousarray(depth, dtype=DEPTH_DTYPE).tobytes()


def decode_depth(data: bytes, view_id: str, width: int, height: int) -> np.ndarray:
    """
    Parses an .adpt payload and checks it against the manifest dimensions.

    Raises:
        TruncatedFileError: If the header or the pixel block is short.
        MagicMismatchError: If the file does not start with ADPT.
        DimensionMismatchError: If the stored size disagrees with the manifest.
    """
    if len(data) < DEPTH_HEADER.size:
        raise TruncatedFileError(f"Depth file of view {view_id} is shorter than its header", view_id=view_id)
    magic, stored_width, stored_height = DEPTH_HEADER.unpack_from(data)
    if magic != DEPTH_MAGIC:
        raise MagicMismatchError(f"Depth file of view {view_id} starts with {magic!r}, expected {DEPTH_MAGIC!r}")
    if (stored_width, stored_height) != (width, height):
        raise DimensionMismatchError(f"Depth file of view {view_id} is {stored_width}x{stored_height}, "
                                     f"manifest says {width}x{height}")
    expected = DEPTH_HEADER.size + width * height * DEPTH_DTYPE.itemsize
    if len(data) < expected:
        raise TruncatedFileError(f"Depth file of view {view_id} has {len(data)} bytes, expected {expected}",
                                 view_id=view_id)
    if len(data) > expected:
        raise BundleFormatError(f"Depth file of view {view_id} has {len(data) - expected} trailing bytes")
    pixels = np.frombuffer(data, dtype=DEPTH_DTYPE, count=width * height, offset=DEPTH_HEADER.size)
    return pixels.reshape(height, width).astype(np.float32)


def _write_json(path: str, payload: dict):
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(payload, f, indent=2, sort_keys=False)
        f.write('\n')


def _read_json(path: str) -> dict:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except ValueError as e:
        raise BundleFormatError(f"{path} is not valid JSON: {e}")


def write_bundle(bundle: SceneBundle, directory: str, previews: Optional[Dict[str, Image.Image]] = None):
    """
    Writes a bundle; files are overwritten, other files in the directory are left alone.
    """
    os.makedirs(os.path.join(directory, DEPTH_DIR), exist_ok=True)
    manifest = {
        'views': [view.to_manifest_dict() for view in bundle.views],
        'objects': bundle.object_names,
    }
    _write_json(os.path.join(directory, MANIFEST_FILE), manifest)

    for view in bundle.views:
        with open(os.path.join(directory, DEPTH_DIR, f"{view.view_id}.adpt"), 'wb') as f:
            f.write(encode_depth(view.depth))

    masks = []
    for view in bundle.views:
        for name in bundle.object_names:
            mask = bundle.masks.get((view.view_id, name))
            if mask is None:
                continue
            masks.append({'view': view.view_id, 'object': name, **mask.to_rle_dict()})
    _write_json(os.path.join(directory, MASKS_FILE), {'masks': masks})

    if bundle.ground_truth is not None:
        _write_json(os.path.join(directory, GROUND_TRUTH_FILE), bundle.ground_truth.to_dict())

    if previews:
        os.makedirs(os.path.join(directory, IMAGES_DIR), exist_ok=True)
        for view_id, image in previews.items():
            image.save(os.path.join(directory, IMAGES_DIR, f"{view_id}.png"), format='PNG')
    logger.info("Wrote bundle with %d view(s) and %d mask(s) to %s", len(bundle.views), len(masks), directory)


def read_bundle(directory: str) -> SceneBundle:
    """
    Reads a bundle directory.

    Returns:
        SceneBundle: Views with depth and image paths, masks and optional ground truth.

    Raises:
        UsageError: If the directory or its manifest is missing.
        BundleFormatError: On any format violation (magic, dimensions, truncation, masks).
    """
    manifest_path = os.path.join(directory, MANIFEST_FILE)
    if not os.path.isfile(manifest_path):
        raise UsageError(f"No {MANIFEST_FILE} in {directory}")
    manifest = _read_json(manifest_path)

    views = []
    for entry in manifest.get('views', []):
        try:
            view_id, width, height = entry['id'], int(entry['width']), int(entry['height'])
            intrinsics = CameraIntrinsics.from_list(entry['K'])
            pose = Pose.from_list(entry['T_world_to_cam'], tolerance=POSE_TOLERANCE)
        except (KeyError, TypeError, ValueError) as e:
            raise BundleFormatError(f"Malformed view entry in {manifest_path}: {e}")
        depth_path = os.path.join(directory, DEPTH_DIR, f"{view_id}.adpt")
        if not os.path.isfile(depth_path):
            raise BundleFormatError(f"Missing depth file for view {view_id}")
        with open(depth_path, 'rb') as f:
            depth = decode_depth(f.read(), view_id, width, height)
        image_path = os.path.join(directory, IMAGES_DIR, f"{view_id}.png")
        views.append(CameraView(view_id, width, height, intrinsics, pose, depth=depth,
                                image_path=image_path if os.path.isfile(image_path) else None))

    size_of = {view.view_id: (view.height, view.width) for view in views}
    masks = {}
    masks_path = os.path.join(directory, MASKS_FILE)
    if os.path.isfile(masks_path):
        for entry in _read_json(masks_path).get('masks', []):
            view_id = entry.get('view')
            if view_id not in size_of:
                raise BundleFormatError(f"Mask refers to unknown view {view_id!r}")
            if tuple(entry.get('size', ())) != size_of[view_id]:
                raise DimensionMismatchError(f"Mask of '{entry.get('object')}' in view {view_id} has size "
                                             f"{entry.get('size')}, expected {list(size_of[view_id])}")
            try:
                masks[(view_id, entry['object'])] = Mask.from_rle_dict(entry)
            except (KeyError, UsageError) as e:
                raise BundleFormatError(f"Malformed mask in view {view_id}: {e}")

    ground_truth = None
    ground_truth_path = os.path.join(directory, GROUND_TRUTH_FILE)
    if os.path.isfile(ground_truth_path):
        ground_truth = SyntheticScene.from_dict(_read_json(ground_truth_path))

    logger.debug("Read bundle %s: %d view(s), %d mask(s)", directory, len(views), len(masks))
    return SceneBundle(views, manifest.get('objects', []), masks, ground_truth=ground_truth, root=directory)
