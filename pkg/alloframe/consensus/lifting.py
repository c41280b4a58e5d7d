import logging
from typing import Dict, List, Tuple
import numpy as np
from alloframe.base.camera import CameraView
from alloframe.base.mask import Mask
from alloframe.base.object_state import ConsensusParams, InstanceObservation, ObjectState
from alloframe.consensus.clustering import assign_instance_labels, dbscan, select_consensus_cluster
from alloframe.consensus.mask_processing import erode_mask
from alloframe.consensus.point_processing import clean_outliers, fps_downsample, robust_centroid, robust_extent
from alloframe.errors import EmptyLiftError, UsageError
from alloframe.geometry.camera_geometry import backproject_camera

logger = logging.getLogger(__name__)

Observation = Tuple[Mask, Tuple[float, float, float, float], float]


def lift_instance(view: CameraView, mask: Mask, params: ConsensusParams) -> np.ndarray:
    """
    Lifts one instance mask into world points.

    The mask is eroded, every remaining pixel with valid depth is back-projected into the
    camera frame, outliers are removed there, and the survivors are moved to world coordinates.

    Parameters:
        view (CameraView): View the mask belongs to.
        mask (Mask): Instance mask.
        params (ConsensusParams): Erosion and outlier settings.

    Returns:
        np.ndarray: (N, 3) world points, N >= 1.

    Raises:
        UsageError: If the mask size does not match the view.
        EmptyLiftError: If no pixel with valid depth remains.
    """
    if (mask.width, mask.height) != (view.width, view.height):
        raise UsageError(f"Mask {mask.width}x{mask.height} does not match view {view.view_id} "
                         f"({view.width}x{view.height})")
    eroded = erode_mask(mask, params.erosion_iterations)
    u, v = eroded.pixel_coordinates()
    camera_points = backproject_camera(view, u, v)
    if len(camera_points) == 0:
        raise EmptyLiftError(f"No valid depth under the mask in view {view.view_id}")
    camera_points = clean_outliers(camera_points, params.outlier_mad_threshold)
    return view.pose.apply_inverse(camera_points)


def balanced_points(instances: List[InstanceObservation], params: ConsensusParams, seed: int = 0) -> np.ndarray:
    """
    Farthest point samples of equal size from every instance, so each view weighs the same
    in the centroid regardless of how many pixels it saw.

    Parameters:
        instances (List[InstanceObservation]): Selected instances, at least one.
        params (ConsensusParams): Supplies the FPS budget that caps the per-view count.
        seed (int): Passed to the FPS step.

    Returns:
        np.ndarray: (len(instances) * k, 3) points, k the smallest instance size within budget.
    """
    count = min([params.fps_budget] + [len(instance.world_points) for instance in instances])
    return np.concatenate([fps_downsample(instance.world_points, count, seed) for instance in instances])


def lift_object(name: str, views: List[CameraView], observations: Dict[str, Observation],
                params: ConsensusParams, seed: int = 0) -> ObjectState:
    """
    Multi-view consensus lifting with ITM-ranked DBSCAN selection.

    Parameters:
        name (str): Object description carried into the state.
        views (List[CameraView]): Available views.
        observations (Dict[str, Observation]): view_id -> (mask, box, itm_score).
        params (ConsensusParams): Consensus settings.
        seed (int): Passed to the FPS step.

    Returns:
        ObjectState: Merged points of the selected cluster with robust centroid and extent.

    Raises:
        EmptyLiftError: If no observation could be lifted.
    """
    view_by_id = {view.view_id: view for view in views}
    instances: List[InstanceObservation] = []
    for view_id, (mask, box, itm_score) in observations.items():
        view = view_by_id.get(view_id)
        if view is None:
            logger.debug("Skipping '%s' in unknown view %s", name, view_id)
            continue
        try:
            world_points = lift_instance(view, mask, params)
        except EmptyLiftError as e:
            logger.debug("Skipping '%s' in view %s: %s", name, view_id, e)
            continue
        fps_points = fps_downsample(world_points, params.fps_budget, seed)
        instances.append(InstanceObservation(view_id, mask, box, itm_score, world_points, fps_points))

    if not instances:
        raise EmptyLiftError(f"No valid observation of '{name}' could be lifted")

    all_fps = np.concatenate([instance.fps_points for instance in instances])
    eps = params.resolve_eps(np.concatenate([instance.world_points for instance in instances]))
    point_labels = dbscan(all_fps, eps, params.min_samples)
    instance_labels = assign_instance_labels(instances, point_labels)
    selected = select_consensus_cluster(instances, instance_labels)
    logger.info("Lifted '%s' from %d views, eps=%.3f, selected %d instance(s)", name, len(instances), eps,
                len(selected))

    points = np.concatenate([instances[index].world_points for index in selected])
    provenance = {
        instance.view_id: {
            'itm_score': instance.itm_score,
            'box': [float(value) for value in instance.box],
            'n_points': int(len(instance.world_points)),
            'cluster': int(label),
            'selected': index in selected,
        }
        for index, (instance, label) in enumerate(zip(instances, instance_labels))
    }
    return ObjectState(
        name=name,
        points=points,
        centroid=robust_centroid(balanced_points([instances[index] for index in selected], params, seed)),
        extent=robust_extent(points),
        source_views=[instances[index].view_id for index in selected],
        provenance=provenance,
    )
