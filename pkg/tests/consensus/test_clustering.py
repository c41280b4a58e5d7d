import unittest
import numpy as np
from alloframe.base.mask import Mask
from alloframe.base.object_state import InstanceObservation
from alloframe.consensus.clustering import NOISE, assign_instance_labels, dbscan, select_consensus_cluster
from alloframe.errors import UsageError

EMPTY_MASK = Mask(4, 4, [(0, 1)])


def brute_force_partition(points: np.ndarray, eps: float, min_samples: int):
    """
    Core clusters as frozensets via transitive closure of the core eps graph, plus the noise set.
    """
    distances = np.linalg.norm(points[:, None] - points[None], axis=-1)
    adjacency = distances <= eps
    core = adjacency.sum(axis=1) >= min_samples
    unvisited = set(np.flatnonzero(core).tolist())
    clusters = set()
    while unvisited:
        stack = [unvisited.pop()]
        component = set(stack)
        while stack:
            index = stack.pop()
            for other in np.flatnonzero(adjacency[index] & core).tolist():
                if other in unvisited:
                    unvisited.remove(other)
                    component.add(other)
                    stack.append(other)
        clusters.add(frozenset(component))
    noise = {index for index in range(len(points)) if not core[index] and not np.any(adjacency[index] & core)}
    return clusters, noise, core, adjacency


def labelled_core_partition(labels: np.ndarray, core: np.ndarray):
    groups = {}
    for index in np.flatnonzero(core):
        groups.setdefault(int(labels[index]), set()).add(int(index))
    return {frozenset(group) for group in groups.values()}


def instance(itm_score: float, n_points: int = 10, fps=None) -> InstanceObservation:
    points = np.zeros((n_points, 3))
    return InstanceObservation('view', EMPTY_MASK, (0, 0, 1, 1), itm_score, points,
                               points[:4] if fps is None else fps)


class TestDbscan(unittest.TestCase):

    def test_two_blobs(self):
        rng = np.random.default_rng(0)
        first = rng.uniform(-0.05, 0.05, size=(20, 3))
        second = rng.uniform(-0.05, 0.05, size=(20, 3)) + [5.0, 0.0, 0.0]
        labels = dbscan(np.vstack([first, second]), 0.2, 4)
        self.assertEqual(labels[:20].tolist(), [0] * 20)
        self.assertEqual(labels[20:].tolist(), [1] * 20)

    def test_isolated_points_are_noise(self):
        labels = dbscan([[0, 0, 0], [10, 0, 0], [0, 10, 0]], 1.0, 4)
        self.assertEqual(labels.tolist(), [NOISE] * 3)

    def test_chain_is_one_cluster(self):
        eps = 0.5
        points = np.zeros((15, 3))
        points[:, 0] = np.arange(15) * 0.9 * eps
        labels = dbscan(points, eps, 2)
        self.assertEqual(set(labels.tolist()), {0})

    def test_border_point_joins_first_core_neighbour(self):
        # core points 0..3 (cluster 0) and 5..8 (cluster 1); point 4 borders both
        points = np.array([[0.0, 0, 0], [0.1, 0, 0], [0.2, 0, 0], [0.3, 0, 0],
                           [0.7, 0, 0],
                           [1.1, 0, 0], [1.2, 0, 0], [1.3, 0, 0], [1.4, 0, 0]])
        labels = dbscan(points, 0.45, 4)
        self.assertEqual(labels.tolist(), [0, 0, 0, 0, 0, 1, 1, 1, 1])

    def test_labels_follow_first_core_point(self):
        points = np.vstack([np.zeros((5, 3)) + [9.0, 0, 0], np.zeros((5, 3))])
        labels = dbscan(points, 0.1, 3)
        self.assertEqual(labels.tolist(), [0] * 5 + [1] * 5)

    def test_invalid_parameters(self):
        with self.assertRaises(UsageError):
            dbscan(np.zeros((3, 3)), 0.0, 2)
        with self.assertRaises(UsageError):
            dbscan(np.zeros((3, 3)), 0.1, 0)

    def test_empty_input(self):
        self.assertEqual(len(dbscan(np.zeros((0, 3)), 0.1, 2)), 0)

    def test_matches_brute_force_oracle_and_is_permutation_stable(self):
        rng = np.random.default_rng(42)
        for trial in range(25):
            n = int(rng.integers(20, 200))
            centers = rng.uniform(-2, 2, size=(3, 3))
            points = centers[rng.integers(0, 3, size=n)] + rng.normal(scale=0.15, size=(n, 3))
            eps, min_samples = float(rng.uniform(0.1, 0.4)), int(rng.integers(2, 8))
            clusters, noise, core, adjacency = brute_force_partition(points, eps, min_samples)

            labels = dbscan(points, eps, min_samples)
            self.assertEqual(labelled_core_partition(labels, core), clusters)
            self.assertEqual({int(i) for i in np.flatnonzero(labels == NOISE)}, noise)
            for index in np.flatnonzero(~core & (labels != NOISE)):
                neighbours = np.flatnonzero(adjacency[index] & core)
                self.assertEqual(labels[index], labels[neighbours[0]])
            self.assertEqual(sorted(set(labels.tolist()) - {NOISE}), list(range(len(clusters))))

            order = rng.permutation(n)
            permuted = dbscan(points[order], eps, min_samples)
            restored = np.empty_like(permuted)
            restored[order] = permuted
            self.assertEqual(labelled_core_partition(restored, core), clusters)


class TestInstanceLabels(unittest.TestCase):

    def test_mode_and_ties(self):
        instances = [instance(0.5, fps=np.zeros((3, 3))), instance(0.5, fps=np.zeros((2, 3))),
                     instance(0.5, fps=np.zeros((3, 3))), instance(0.5, fps=np.zeros((2, 3)))]
        labels = [0, 0, 1,
                  1, 0,
                  NOISE, NOISE, NOISE,
                  NOISE, 2]
        self.assertEqual(assign_instance_labels(instances, labels), [0, 0, NOISE, 2])

    def test_misaligned_labels(self):
        with self.assertRaises(UsageError):
            assign_instance_labels([instance(0.5)], [0, 0])


class TestSelectConsensusCluster(unittest.TestCase):

    def test_highest_mean_wins(self):
        instances = [instance(0.9), instance(0.8), instance(0.95)]
        self.assertEqual(select_consensus_cluster(instances, [0, 0, 1]), [2])

    def test_noise_excluded(self):
        instances = [instance(0.99), instance(0.6), instance(0.7)]
        self.assertEqual(select_consensus_cluster(instances, [NOISE, 0, 0]), [1, 2])

    def test_all_noise_fallback(self):
        self.assertEqual(select_consensus_cluster([instance(0.2), instance(0.7)], [NOISE, NOISE]), [1])
        self.assertEqual(select_consensus_cluster([instance(0.7), instance(0.7)], [NOISE, NOISE]), [0])

    def test_single_instance(self):
        self.assertEqual(select_consensus_cluster([instance(0.4)], [0]), [0])

    def test_tie_breaks(self):
        # equal means: more instances wins
        instances = [instance(0.5), instance(0.5), instance(0.5)]
        self.assertEqual(select_consensus_cluster(instances, [1, 0, 0]), [1, 2])
        # equal means and sizes: more points wins
        instances = [instance(0.5, n_points=10), instance(0.5, n_points=30)]
        self.assertEqual(select_consensus_cluster(instances, [0, 1]), [1])
        # everything equal: smallest label wins
        instances = [instance(0.5), instance(0.5)]
        self.assertEqual(select_consensus_cluster(instances, [3, 2]), [1])

    def test_matches_exhaustive_enumeration(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            n = int(rng.integers(2, 9))
            scores = np.round(rng.uniform(0, 1, size=n), 2)
            labels = rng.integers(-1, 3, size=n).tolist()
            instances = [instance(float(score)) for score in scores]
            selected = select_consensus_cluster(instances, labels)
            clustered = sorted(set(labels) - {NOISE})
            if not clustered:
                self.assertEqual(selected, [int(np.argmax(scores))])
                continue
            means = {label: np.mean([scores[i] for i in range(n) if labels[i] == label]) for label in clustered}
            best = max(means.values())
            candidates = [label for label in clustered if means[label] == best]
            chosen = labels[selected[0]]
            self.assertIn(chosen, candidates)
            self.assertEqual(selected, [i for i in range(n) if labels[i] == chosen])

    def test_empty_rejected(self):
        with self.assertRaises(UsageError):
            select_consensus_cluster([], [])


if __name__ == '__main__':
    unittest.main()
