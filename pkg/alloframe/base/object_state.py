from typing import List, Optional, Tuple
import numpy as np
from alloframe.base.mask import Mask
from alloframe.errors import UsageError


class ConsensusParams:
    """
    Parameters of the multi-view consensus lifting.

    Attributes:
        eps (float): DBSCAN radius in meters; None selects 0.05 x the object's point-cloud
            diagonal, floored at eps_floor.
        min_samples (int): DBSCAN core-point threshold, the point itself included.
        fps_budget (int): Farthest point sampling budget per instance.
        erosion_iterations (int): 3x3 erosion passes applied to each mask.
        outlier_mad_threshold (float): MAD multiple kept by the outlier filter.
        eps_scale (float): Fraction of the diagonal used when eps is None.
        eps_floor (float): Lower bound of the automatic eps in meters.
    """

    def __init__(self, eps: Optional[float] = None, min_samples: int = 8, fps_budget: int = 256,
                 erosion_iterations: int = 1, outlier_mad_threshold: float = 2.5,
                 eps_scale: float = 0.05, eps_floor: float = 0.10):
        if eps is not None and not eps > 0:
            raise UsageError(f"DBSCAN eps must be positive, got {eps}")
        if min_samples < 1:
            raise UsageError(f"min_samples must be >= 1, got {min_samples}")
        if fps_budget < 1:
            raise UsageError(f"fps_budget must be >= 1, got {fps_budget}")
        self.eps = eps
        self.min_samples = int(min_samples)
        self.fps_budget = int(fps_budget)
        self.erosion_iterations = int(erosion_iterations)
        self.outlier_mad_threshold = float(outlier_mad_threshold)
        self.eps_scale = float(eps_scale)
        self.eps_floor = float(eps_floor)

    def resolve_eps(self, points: np.ndarray) -> float:
        """
        Returns the configured eps, or the scale-relative default for the given cloud.
        """
        if self.eps is not None:
            return self.eps
        if len(points) == 0:
            return self.eps_floor
        diagonal = float(np.linalg.norm(points.max(axis=0) - points.min(axis=0)))
        return max(self.eps_scale * diagonal, self.eps_floor)

    def to_dict(self) -> dict:
        return {
            'eps': self.eps,
            'min_samples': self.min_samples,
            'fps_budget': self.fps_budget,
            'erosion_iterations': self.erosion_iterations,
            'outlier_mad_threshold': self.outlier_mad_threshold,
            'eps_scale': self.eps_scale,
            'eps_floor': self.eps_floor,
        }

    @classmethod
    def from_dict(cls, data: dict):
        return cls(**{key: value for key, value in (data or {}).items() if value is not None or key == 'eps'})


class InstanceObservation:
    """
    One view's lifted hypothesis of an object.

    Attributes:
        view_id (str): View the instance was observed in.
        mask (Mask): Instance mask.
        box (tuple): (x0, y0, x1, y1) pixel box.
        itm_score (float): Image-text matching score in [0, 1].
        world_points (np.ndarray): (N, 3) lifted points.
        fps_points (np.ndarray): (K, 3) farthest point subset used for clustering.
    """

    def __init__(self, view_id: str, mask: Mask, box: Tuple[float, float, float, float], itm_score: float,
                 world_points: np.ndarray, fps_points: np.ndarray):
        if not np.isfinite(itm_score):
            raise UsageError(f"ITM score of view {view_id} is not finite")
        self.view_id = view_id
        self.mask = mask
        self.box = tuple(box)
        self.itm_score = float(itm_score)
        self.world_points = np.asarray(world_points, dtype=float).reshape(-1, 3)
        self.fps_points = np.asarray(fps_points, dtype=float).reshape(-1, 3)

    def __repr__(self):
        return (f"InstanceObservation(view_id={self.view_id}, itm_score={self.itm_score}, "
                f"points={len(self.world_points)}, fps={len(self.fps_points)})")


class ObjectState:
    """
    A grounded object in world space.

    Attributes:
        name (str): The original description.
        points (np.ndarray): (N, 3) merged world points of the selected cluster.
        centroid (np.ndarray): Robust centroid.
        extent (np.ndarray): Robust per-axis extent in world axes.
        source_views (List[str]): Views whose instances were merged.
        provenance (dict): Per-view details (ITM score, box, point counts, cluster labels).
    """

    def __init__(self, name: str, points, centroid, extent, source_views: List[str], provenance: dict = None):
        self.name = name
        self.points = np.asarray(points, dtype=float).reshape(-1, 3)
        if len(self.points) == 0:
            raise UsageError(f"Object state '{name}' needs at least one point")
        self.centroid = np.asarray(centroid, dtype=float).reshape(3)
        self.extent = np.asarray(extent, dtype=float).reshape(3)
        self.source_views = list(source_views)
        self.provenance = provenance if provenance is not None else {}

    def __repr__(self):
        return (f"ObjectState(name={self.name}, centroid={self.centroid.tolist()}, "
                f"extent={self.extent.tolist()}, views={self.source_views})")

    def to_dict(self, include_points: bool = True) -> dict:
        data = {
            'name': self.name,
            'centroid': self.centroid.tolist(),
            'extent': self.extent.tolist(),
            'source_views': self.source_views,
            'provenance': self.provenance,
        }
        if include_points:
            data['points'] = self.points.tolist()
        return data

    @classmethod
    def from_dict(cls, data: dict):
        return cls(
            name=data['name'],
            points=data['points'],
            centroid=data['centroid'],
            extent=data['extent'],
            source_views=data.get('source_views', []),
            provenance=data.get('provenance', {}),
        )
