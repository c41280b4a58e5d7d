"""
Ground-truth relation oracle: the same sign rules as the rule-based reasoner, evaluated on
exact centers and facing directions instead of lifted estimates.
"""
from typing import Optional
import numpy as np
from alloframe.base.geometry_context import ContextEntry, FrameSpec, GeometryContext
from alloframe.base.question import MultipleChoiceQuestion
from alloframe.base.reference_frame import ReferenceFrame
from alloframe.base.scene import SyntheticScene
from alloframe.enums import FrameKind, FrontSourceKind, RelationKind
from alloframe.errors import UsageError
from alloframe.experts.rule_based_reasoner import DEFAULT_TIE_MARGIN, decide_relation
from alloframe.geometry.camera_geometry import camera_axis_in_world
from alloframe.geometry.frame_builder import build_frame, camera_frame, forward_from_constraint, transform_points

ORACLE_OPTIONS = {
    RelationKind.LEFT_RIGHT: ['left', 'right'],
    RelationKind.FRONT_BEHIND: ['front', 'behind'],
    RelationKind.ABOVE_BELOW: ['above', 'below'],
    RelationKind.DIRECTION4: ['front', 'behind', 'left', 'right'],
    RelationKind.FACING_TOWARD: ['yes', 'no'],
}


def oracle_frame(scene: SyntheticScene, frame_spec: FrameSpec) -> ReferenceFrame:
    """
    Builds the exact frame of a FrameSpec from ground truth.

    Ego frames take the down hint from the first camera's y-axis; intrinsic fronts use the
    reference object's stored facing, constraint fronts the true center difference.
    """
    if frame_spec.kind == FrameKind.CAMERA:
        camera = scene.cameras[0]
        if frame_spec.view_id is not None:
            matching = [view for view in scene.cameras if view.view_id == frame_spec.view_id]
            if not matching:
                raise UsageError(f"Unknown view '{frame_spec.view_id}'")
            camera = matching[0]
        return camera_frame(camera)

    ref = scene.get_object(frame_spec.ref_object)
    if frame_spec.front_source == FrontSourceKind.CONSTRAINT:
        front = forward_from_constraint(ref.center, scene.get_object(frame_spec.aux_object).center)
    else:
        front = ref.front_dir
    pose = scene.cameras[0].pose
    return build_frame(ref.center, front, camera_axis_in_world(pose, 1), camera_axis_in_world(pose, 2))


def oracle_relation(scene: SyntheticScene, ref_name: Optional[str], target_name: str, frame_spec: FrameSpec,
                    relation: RelationKind, tie_margin: float = DEFAULT_TIE_MARGIN) -> str:
    """
    Decides a relation from ground truth.

    Parameters:
        scene (SyntheticScene): Ground-truth scene.
        ref_name (str): Reference object (the frame origin for ego frames).
        target_name (str): Queried object.
        frame_spec (FrameSpec): Frame to decide the relation in.
        relation (RelationKind): Relation to decide.
        tie_margin (float): Margin in meters below which the answer is a tie.

    Returns:
        str: Canonical token ('left', 'front', 'yes', ...) or, for closer/farther, an object name.

    Raises:
        UsageError: If a name is unknown.
        AmbiguousTieError: If the deciding quantity is inside the tie margin.
    """
    relation = RelationKind(relation)
    frame = oracle_frame(scene, frame_spec)
    names = [target_name] + ([ref_name] if ref_name is not None and ref_name != target_name else [])
    entries = []
    for name in names:
        obj = scene.get_object(name)
        entries.append(ContextEntry(name, transform_points(frame, obj.center), 2.0 * obj.half_sizes))
    context = GeometryContext(frame_spec, entries)

    if relation in (RelationKind.CLOSER, RelationKind.FARTHER):
        options = list(names)
    else:
        options = ORACLE_OPTIONS[relation]
    question_ref = ref_name if frame_spec.kind == FrameKind.CAMERA or relation in (
        RelationKind.CLOSER, RelationKind.FARTHER) else None
    question = MultipleChoiceQuestion('', relation, target_name, options, ref=question_ref)
    return decide_relation(context, question, tie_margin)


def true_coordinates(scene: SyntheticScene, frame_spec: FrameSpec, name: str) -> np.ndarray:
    return transform_points(oracle_frame(scene, frame_spec), scene.get_object(name).center)
