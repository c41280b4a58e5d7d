from typing import List
from alloframe.base.geometry_context import ContextEntry, FrameSpec, GeometryContext
from alloframe.base.object_state import ObjectState
from alloframe.base.reference_frame import ReferenceFrame
from alloframe.consensus.point_processing import robust_extent
from alloframe.enums import FrameKind
from alloframe.errors import EmptyContextError
from alloframe.geometry.frame_builder import transform_points

FRAME_TOLERANCE = 1e-6


def build_geometry_context(states: List[ObjectState], frame: ReferenceFrame, spec: FrameSpec) -> GeometryContext:
    """
    Expresses object states in a reference frame.

    Coordinates are the transformed centroids, distances their norms, and sizes the robust
    extents of the full clouds after the transform, so they follow the frame axes. Ego
    contexts leave out the reference object. Entries keep the order of the states.

    Parameters:
        states (List[ObjectState]): States in key-object order.
        frame (ReferenceFrame): Frame to express them in.
        spec (FrameSpec): Frame description carried into the context.

    Returns:
        GeometryContext: The context.

    Raises:
        EmptyContextError: If an ego context would have no entries.
    """
    frame.validate(tolerance=FRAME_TOLERANCE)
    entries = []
    for state in states:
        if spec.kind == FrameKind.EGO and state.name == spec.ref_object:
            continue
        coords = transform_points(frame, state.centroid)
        sizes = robust_extent(transform_points(frame, state.points))
        entries.append(ContextEntry(state.name, coords, sizes))
    if spec.kind == FrameKind.EGO and not entries:
        raise EmptyContextError(f"No objects besides the reference '{spec.ref_object}'")
    return GeometryContext(spec, entries)
