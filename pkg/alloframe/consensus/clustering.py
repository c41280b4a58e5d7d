"""
Deterministic DBSCAN and the instance-level consensus built on it.
"""
from collections import Counter
from typing import List, Sequence
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from sklearn.neighbors import NearestNeighbors
from alloframe.base.object_state import InstanceObservation
from alloframe.errors import UsageError

NOISE = -1


def dbscan(points, eps: float, min_samples: int) -> np.ndarray:
    """
    DBSCAN with a fixed labelling order.

    A point is core when at least min_samples points (itself included) lie within eps,
    inclusive. Clusters are connected components of the core-core eps graph, numbered in
    order of their first core point. A border point joins the cluster of its lowest-index
    core neighbour.

    Parameters:
        points: (N, 3) points.
        eps (float): Neighbourhood radius.
        min_samples (int): Core threshold.

    Returns:
        np.ndarray: Integer labels, -1 for noise.
    """
    if not eps > 0 or min_samples < 1:
        raise UsageError(f"Invalid DBSCAN parameters eps={eps}, min_samples={min_samples}")
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    n_points = len(points)
    labels = np.full(n_points, NOISE, dtype=int)
    if n_points == 0:
        return labels

    neighbors = NearestNeighbors(radius=eps).fit(points)
    # radius_neighbors uses <= eps and includes the query point itself
    neighborhoods = neighbors.radius_neighbors(points, radius=eps, return_distance=False)
    neighborhoods = [np.sort(neighborhood) for neighborhood in neighborhoods]
    is_core = np.array([len(neighborhood) >= min_samples for neighborhood in neighborhoods])
    core_indices = np.flatnonzero(is_core)
    if len(core_indices) == 0:
        return labels

    rows, cols = [], []
    for index in core_indices:
        core_neighbors = neighborhoods[index][is_core[neighborhoods[index]]]
        rows.extend([index] * len(core_neighbors))
        cols.extend(core_neighbors.tolist())
    graph = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n_points, n_points))
    _, components = connected_components(graph, directed=False)

    renumbered = {}
    for index in core_indices:
        component = components[index]
        if component not in renumbered:
            renumbered[component] = len(renumbered)
        labels[index] = renumbered[component]

    for index in np.flatnonzero(~is_core):
        core_neighbors = neighborhoods[index][is_core[neighborhoods[index]]]
        if len(core_neighbors):
            labels[index] = labels[core_neighbors[0]]
    return labels


def _mode_label(labels: Sequence[int]) -> int:
    counts = Counter(int(label) for label in labels)
    if not counts:
        return NOISE
    best = max(counts.values())
    tied = [label for label, count in counts.items() if count == best]
    non_noise = [label for label in tied if label != NOISE]
    return min(non_noise) if non_noise else NOISE


def assign_instance_labels(instances: List[InstanceObservation], point_labels) -> List[int]:
    """
    Gives each instance the modal label of its FPS points.

    Mode ties go to the smallest non-noise label; an all-noise instance gets -1.

    Parameters:
        instances (List[InstanceObservation]): Instances in clustering order.
        point_labels: Labels aligned with the concatenated fps_points of the instances.

    Returns:
        List[int]: One label per instance.
    """
    point_labels = np.asarray(point_labels, dtype=int)
    expected = sum(len(instance.fps_points) for instance in instances)
    if len(point_labels) != expected:
        raise UsageError(f"Got {len(point_labels)} point labels for {expected} FPS points")
    result = []
    offset = 0
    for instance in instances:
        count = len(instance.fps_points)
        result.append(_mode_label(point_labels[offset:offset + count]))
        offset += count
    return result


def select_consensus_cluster(instances: List[InstanceObservation], instance_labels: List[int]) -> List[int]:
    """
    Picks the instance cluster with the highest mean ITM score.

    Ties prefer more instances, then more world points, then the smallest label. When every
    instance is noise the single highest-scoring instance is returned (lowest index on ties).

    Returns:
        List[int]: Indices of the selected instances, ascending.
    """
    if not instances:
        raise UsageError("Cannot select a cluster from zero instances")
    if len(instance_labels) != len(instances):
        raise UsageError("Exactly one label per instance is required")

    groups = {}
    for index, label in enumerate(instance_labels):
        if label != NOISE:
            groups.setdefault(int(label), []).append(index)

    if not groups:
        scores = [instance.itm_score for instance in instances]
        return [int(np.argmax(scores))]

    def rank(label):
        members = groups[label]
        mean_score = float(np.mean([instances[index].itm_score for index in members]))
        total_points = sum(len(instances[index].world_points) for index in members)
        return mean_score, len(members), total_points, -label

    best_label = max(groups, key=rank)
    return groups[best_label]
