"""
Type I orientation: eight-way camera-relative labels, ensemble voting, lifting to world.
"""
import logging
from typing import List, Tuple
import numpy as np
from alloframe.base.camera import CameraView
from alloframe.enums import Orientation8, OrientationStrategy
from alloframe.errors import UsageError
from alloframe.experts.base import ImageRef, OrientationJudge
from alloframe.geometry.camera_geometry import rotate_direction_to_world

logger = logging.getLogger(__name__)

_SQRT_HALF = np.sqrt(0.5)

# Camera frame: x right, y down, z away from the camera; "front" faces the camera.
ORIENTATION_VECTORS = {
    Orientation8.FRONT: np.array([0.0, 0.0, -1.0]),
    Orientation8.FRONT_RIGHT: np.array([_SQRT_HALF, 0.0, -_SQRT_HALF]),
    Orientation8.RIGHT: np.array([1.0, 0.0, 0.0]),
    Orientation8.BACK_RIGHT: np.array([_SQRT_HALF, 0.0, _SQRT_HALF]),
    Orientation8.BACK: np.array([0.0, 0.0, 1.0]),
    Orientation8.BACK_LEFT: np.array([-_SQRT_HALF, 0.0, _SQRT_HALF]),
    Orientation8.LEFT: np.array([-1.0, 0.0, 0.0]),
    Orientation8.FRONT_LEFT: np.array([-_SQRT_HALF, 0.0, -_SQRT_HALF]),
}

STRATEGY_PRIORITY = {
    OrientationStrategy.C: 3,
    OrientationStrategy.B: 2,
    OrientationStrategy.A: 1,
}

ZERO_MEAN_TOLERANCE = 1e-9

Response = Tuple[OrientationStrategy, Orientation8]


class OrientationVote:
    """
    Ensemble responses and the voted label.
    """

    def __init__(self, responses: List[Response], winner: Orientation8):
        self.responses = list(responses)
        self.winner = winner

    def __repr__(self):
        return f"OrientationVote(winner={self.winner.value}, responses={self.to_dict()['responses']})"

    def to_dict(self) -> dict:
        return {
            'responses': [{'strategy': strategy.value, 'label': label.value} for strategy, label in self.responses],
            'winner': self.winner.value,
        }


def orientation_to_camera_vector(label: Orientation8) -> np.ndarray:
    return ORIENTATION_VECTORS[Orientation8(label)].copy()


def snap_to_label(direction) -> Orientation8:
    """
    Returns the label whose vector has the largest dot product with the direction.
    """
    direction = np.asarray(direction, dtype=float)
    return max(Orientation8, key=lambda label: float(ORIENTATION_VECTORS[label] @ direction))


def vote_orientation(responses: List[Response]) -> Orientation8:
    """
    Strict majority wins; otherwise the circular mean of the response vectors is snapped to
    the nearest label. A zero mean falls back to the answer of the highest-priority strategy
    (C over B over A).
    """
    if not responses:
        raise UsageError("Cannot vote over zero orientation responses")
    labels = [Orientation8(label) for _, label in responses]
    for label in set(labels):
        if labels.count(label) * 2 > len(labels):
            return label

    mean = np.sum([ORIENTATION_VECTORS[label] for label in labels], axis=0)
    if np.linalg.norm(mean) < ZERO_MEAN_TOLERANCE:
        _, label = max(responses, key=lambda response: STRATEGY_PRIORITY[OrientationStrategy(response[0])])
        return Orientation8(label)
    return snap_to_label(mean)


def estimate_orientation(judge: OrientationJudge, crop_ref: ImageRef, keyword: str) -> OrientationVote:
    """
    Runs the A, B (three rounds) and C prompts, five expert queries in total, and votes.
    """
    responses = []
    for strategy in (OrientationStrategy.A, OrientationStrategy.B, OrientationStrategy.C):
        label = judge.orient(crop_ref, keyword, strategy)
        responses.append((strategy, label))
    winner = vote_orientation(responses)
    logger.debug("Orientation of '%s' in %s: %s -> %s", keyword, crop_ref.view_id,
                 [label.value for _, label in responses], winner.value)
    return OrientationVote(responses, winner)


def estimate_front_world(view: CameraView, label: Orientation8) -> np.ndarray:
    """
    Lifts a camera-relative facing label into a world direction.
    """
    return rotate_direction_to_world(view.pose, orientation_to_camera_vector(label))


def front_from_gaze(view: CameraView, gaze_cam) -> np.ndarray:
    """
    Lifts an unquantized camera-frame gaze vector into a world direction.
    """
    return rotate_direction_to_world(view.pose, gaze_cam)
