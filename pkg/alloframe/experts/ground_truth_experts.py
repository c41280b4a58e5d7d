"""
Experts answering from a synthetic bundle's stored masks and ground truth.
"""
import logging
from typing import List, Optional
import numpy as np
from alloframe.base.mask import Mask
from alloframe.base.scene import SceneBundle
from alloframe.errors import UsageError
from alloframe.experts.base import Detection, Detector, HeadPoseEstimator, ImageRef, ItmScorer
from alloframe.prompting.question_parser import find_objects_in_text, normalize_text

logger = logging.getLogger(__name__)

MATCH_IOU = 0.5


def _mask_iou(first: Mask, second: Mask) -> float:
    a = first.to_array()
    b = second.to_array()
    if a.shape != b.shape:
        return 0.0
    union = np.count_nonzero(a | b)
    return float(np.count_nonzero(a & b)) / union if union else 0.0


class GroundTruthExperts(Detector, ItmScorer, HeadPoseEstimator):
    """
    Detector, ITM scorer and head-pose estimator backed by a SceneBundle.

    Descriptions are resolved to bundle object names: an exact name first, then every name
    mentioned in the text. Detection returns the stored mask of each resolved object visible
    in the view; ITM is 1.0 for a crop whose mask overlaps the described object's stored mask
    by at least MATCH_IOU, else 0.0; gaze is the object's true facing in the view's camera frame.
    """
    covers_all_objects = True

    def __init__(self, bundle: SceneBundle):
        if not bundle.masks:
            raise UsageError("The ground-truth backend needs a bundle with masks.json")
        self.bundle = bundle

    def __repr__(self):
        return f"GroundTruthExperts({self.bundle})"

    def _resolve(self, text: str) -> List[str]:
        wanted = normalize_text(text)
        for name in self.bundle.object_names:
            if normalize_text(name) == wanted:
                return [name]
        return find_objects_in_text(text, self.bundle.object_names)

    def detect(self, image_ref: ImageRef, text: str) -> List[Detection]:
        if not text or not text.strip():
            raise UsageError("Detection text must not be empty")
        detections = []
        for name in self._resolve(text):
            mask = self.bundle.masks.get((image_ref.view_id, name))
            if mask is None or mask.is_empty():
                continue
            detections.append(Detection(mask, mask.bounding_box(), 1.0))
        logger.debug("Ground truth has %d mask(s) for '%s' in %s", len(detections), text, image_ref.view_id)
        return detections

    def itm_score(self, crop_ref: ImageRef, text: str) -> float:
        if crop_ref.mask is None:
            return 0.0
        for name in self._resolve(text):
            mask = self.bundle.masks.get((crop_ref.view_id, name))
            if mask is not None and _mask_iou(mask, crop_ref.mask) >= MATCH_IOU:
                return 1.0
        return 0.0

    def gaze(self, crop_ref: ImageRef, keyword: str) -> np.ndarray:
        if self.bundle.ground_truth is None:
            raise UsageError("The ground-truth backend needs ground_truth.json for facing directions")
        names = self._resolve(keyword)
        if not names:
            raise UsageError(f"'{keyword}' names no object of the bundle")
        front_world = self.bundle.ground_truth.get_object(names[0]).front_dir
        return self.bundle.get_view(crop_ref.view_id).pose.rotation @ front_world

    def mask_for(self, view_id: str, name: str) -> Optional[Mask]:
        return self.bundle.masks.get((view_id, name))
