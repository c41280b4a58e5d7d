"""
Deterministic reasoner deciding sign-based relations directly from a geometry context.
"""
import numpy as np
from alloframe.base.geometry_context import GeometryContext, RenderedPrompt
from alloframe.base.question import MultipleChoiceQuestion
from alloframe.enums import FrameKind, RelationKind
from alloframe.errors import AmbiguousTieError, ExtractionError, UsageError
from alloframe.experts.base import GeometricReasoner, LanguageModel, ReasonerAnswer
from alloframe.prompting.question_parser import match_option

DEFAULT_TIE_MARGIN = 0.02
FACING_HALF_ANGLE = np.deg2rad(45.0)


def relative_vector(context: GeometryContext, question: MultipleChoiceQuestion) -> np.ndarray:
    """
    Position of the target relative to the reference, in frame axes.

    Ego frames are centred on the reference, so the target's coordinates are used as they
    are; camera frames use target minus reference when a reference is named.
    """
    target = context.entry(question.target).coords
    if context.frame.kind == FrameKind.CAMERA and question.ref is not None:
        return target - context.entry(question.ref).coords
    return target


def _signed(value: float, positive: str, negative: str, margin: float, axis: str) -> str:
    if abs(value) < margin:
        raise AmbiguousTieError(f"|{axis}| = {abs(value):.4f} m is inside the tie margin {margin} m")
    return positive if value > 0 else negative


def decide_relation(context: GeometryContext, question: MultipleChoiceQuestion,
                    tie_margin: float = DEFAULT_TIE_MARGIN) -> str:
    """
    Computes the canonical answer token (or object name for closer/farther).

    Raises:
        AmbiguousTieError: If the deciding quantity is inside the tie margin.
    """
    relation = question.relation
    if relation in (RelationKind.CLOSER, RelationKind.FARTHER):
        names = [name for name in (question.target, question.ref) if name is not None]
        if len(names) < 2:
            raise UsageError("Closer/farther questions need two objects")
        distances = [context.entry(name).distance for name in names]
        if abs(distances[0] - distances[1]) < tie_margin:
            raise AmbiguousTieError(f"Distances {distances} differ by less than {tie_margin} m")
        pick = np.argmin(distances) if relation == RelationKind.CLOSER else np.argmax(distances)
        return names[int(pick)]

    x, y, z = relative_vector(context, question)
    if relation == RelationKind.LEFT_RIGHT:
        return _signed(x, 'right', 'left', tie_margin, 'x')
    if relation == RelationKind.FRONT_BEHIND:
        return _signed(z, 'front', 'behind', tie_margin, 'z')
    if relation == RelationKind.ABOVE_BELOW:
        return _signed(y, 'below', 'above', tie_margin, 'y')
    if relation == RelationKind.DIRECTION4:
        ax, az = abs(x), abs(z)
        if max(ax, az) < tie_margin or abs(ax - az) < tie_margin:
            raise AmbiguousTieError(f"Direction ({x:.4f}, {z:.4f}) is inside the tie margin {tie_margin} m")
        if az > ax:
            return 'front' if z > 0 else 'behind'
        return 'right' if x > 0 else 'left'
    if relation == RelationKind.FACING_TOWARD:
        distance = float(np.linalg.norm([x, y, z]))
        if distance < tie_margin:
            raise AmbiguousTieError("Target coincides with the reference")
        angle = float(np.arccos(np.clip(z / distance, -1.0, 1.0)))
        if abs(distance * np.sin(angle - FACING_HALF_ANGLE)) < tie_margin:
            raise AmbiguousTieError(f"Facing angle {np.rad2deg(angle):.2f} deg is inside the tie margin")
        return 'yes' if angle < FACING_HALF_ANGLE else 'no'
    raise UsageError(f"Unsupported relation {relation}")


def rule_based_reason(context: GeometryContext, question: MultipleChoiceQuestion,
                      tie_margin: float = DEFAULT_TIE_MARGIN) -> ReasonerAnswer:
    """
    Answers a parsed question from the context and maps the result to one of its options.

    Raises:
        AmbiguousTieError: Inside the tie margin.
        ExtractionError: If no option expresses the computed answer.
    """
    token = decide_relation(context, question, tie_margin)
    option = match_option(question.options, token)
    if option is None:
        raise ExtractionError(f"No option of {question.options} expresses '{token}'")
    vector = relative_vector(context, question) if question.target else None
    chain = f"{question.relation.value} of {question.target}"
    if vector is not None:
        chain += f" at ({vector[0]:.4f}, {vector[1]:.4f}, {vector[2]:.4f})"
    chain += f" -> {token}"
    raw_text = f"⟨think⟩{chain}⟨/think⟩ \\boxed{{{option}}}"
    return ReasonerAnswer(raw_text=raw_text, extracted=option, chain=chain)


class RuleBasedReasoner(GeometricReasoner, LanguageModel):
    """
    Reasoner backend that never reads prompt text.
    """

    def __init__(self, tie_margin: float = DEFAULT_TIE_MARGIN):
        self.tie_margin = tie_margin

    def reason_geometry(self, context: GeometryContext, question: MultipleChoiceQuestion) -> ReasonerAnswer:
        return rule_based_reason(context, question, self.tie_margin)

    def reason(self, prompt: RenderedPrompt) -> ReasonerAnswer:
        raise UsageError("The rule-based reasoner answers from geometry contexts, not prompt text")
