import logging
from typing import List, Optional, Sequence
import numpy as np
from alloframe.base.geometry_context import FrameSpec
from alloframe.base.question import GeneratedQuestion
from alloframe.base.scene import SyntheticScene
from alloframe.enums import QuestionFamily, RelationKind
from alloframe.errors import AmbiguousTieError, GenerationError, UsageError
from alloframe.experts.rule_based_reasoner import DEFAULT_TIE_MARGIN
from alloframe.synth.oracle import oracle_relation

logger = logging.getLogger(__name__)

MAX_CONSECUTIVE_FAILURES = 1000
TYPE_TWO_PROBABILITY = 0.5

FAMILY_RELATIONS = {
    QuestionFamily.PSN_REL_DIR: RelationKind.DIRECTION4,
    QuestionFamily.ORIENT_FRONT: RelationKind.FRONT_BEHIND,
    QuestionFamily.ORIENT_LEFT: RelationKind.LEFT_RIGHT,
    QuestionFamily.ORIENT_TWD: RelationKind.FACING_TOWARD,
    QuestionFamily.CAM_REL_DIR: RelationKind.LEFT_RIGHT,
    QuestionFamily.LOC_CLOSER: RelationKind.CLOSER,
}

FAMILY_OPTIONS = {
    QuestionFamily.PSN_REL_DIR: ['front', 'behind', 'left', 'right'],
    QuestionFamily.ORIENT_FRONT: ['front', 'behind'],
    QuestionFamily.ORIENT_LEFT: ['left', 'right'],
    QuestionFamily.ORIENT_TWD: ['yes', 'no'],
    QuestionFamily.CAM_REL_DIR: ['left', 'right'],
}

QUESTION_TEMPLATES = {
    QuestionFamily.PSN_REL_DIR: "From the perspective of the {ref}, where is the {target}?",
    QuestionFamily.ORIENT_FRONT: "From the {ref}'s perspective, is the {target} in front of it or behind it?",
    QuestionFamily.ORIENT_LEFT: "From the {ref}'s perspective, is the {target} on the left or right?",
    QuestionFamily.ORIENT_TWD: "From the perspective of the {ref}, is it facing toward the {target}?",
    QuestionFamily.CAM_REL_DIR: "From the camera perspective, is the {target} to the left or right of the {ref}?",
    QuestionFamily.LOC_CLOSER: "Which is closer to the camera, the {ref} or the {target}?",
}
TYPE_TWO_TEMPLATE = "If I stand at the {ref} facing the {aux}, where is the {target}?"


def _frame_spec(family: QuestionFamily, scene: SyntheticScene, ref: str, aux: Optional[str]) -> FrameSpec:
    if family in (QuestionFamily.CAM_REL_DIR, QuestionFamily.LOC_CLOSER):
        return FrameSpec.camera(scene.cameras[0].view_id)
    if aux is not None:
        return FrameSpec.constraint(ref, aux)
    return FrameSpec.intrinsic(ref)


def generate_questions(scene: SyntheticScene, seed: int, n: int,
                       families: Optional[Sequence[QuestionFamily]] = None, scene_id: Optional[str] = None,
                       tie_margin: float = DEFAULT_TIE_MARGIN) -> List[GeneratedQuestion]:
    """
    Samples tie-free multiple-choice questions with oracle gold answers.

    Each question draws a family, a (ref, target) pair and, for psn_rel_dir in scenes with
    three or more objects, optionally an auxiliary object that fixes the facing direction.
    Ties are discarded and re-sampled; options are shuffled with the gold index tracked.

    Parameters:
        scene (SyntheticScene): Ground-truth scene.
        seed (int): Sampling seed.
        n (int): Number of questions.
        families (Sequence[QuestionFamily]): Families to draw from, all by default.
        scene_id (str): Scene identifier stored in each question and used in its id.
        tie_margin (float): Tie margin of the oracle.

    Returns:
        List[GeneratedQuestion]: n questions.

    Raises:
        UsageError: If n is negative, no family is given, or the scene has fewer than two objects.
        GenerationError: After MAX_CONSECUTIVE_FAILURES consecutive ties.
    """
    families = [QuestionFamily(family) for family in (families or list(QuestionFamily))]
    if not families:
        raise UsageError("At least one question family is needed")
    if n < 0:
        raise UsageError(f"Question count must be >= 0, got {n}")
    names = scene.object_names()
    if len(names) < 2:
        raise UsageError("Questions need a scene with at least two objects")

    rng = np.random.default_rng(seed)
    prefix = scene_id if scene_id is not None else f"seed{scene.seed}"
    questions = []
    failures = 0
    while len(questions) < n:
        family = families[int(rng.integers(len(families)))]
        ref, target = (str(name) for name in rng.choice(names, size=2, replace=False))
        aux = None
        if family == QuestionFamily.PSN_REL_DIR and len(names) >= 3 and rng.random() < TYPE_TWO_PROBABILITY:
            others = [name for name in names if name not in (ref, target)]
            aux = str(others[int(rng.integers(len(others)))])
        frame_spec = _frame_spec(family, scene, ref, aux)
        try:
            answer = oracle_relation(scene, ref, target, frame_spec, FAMILY_RELATIONS[family], tie_margin)
        except AmbiguousTieError as e:
            failures += 1
            logger.debug("Discarding %s question on (%s, %s): %s", family.value, ref, target, e)
            if failures >= MAX_CONSECUTIVE_FAILURES:
                raise GenerationError(f"{MAX_CONSECUTIVE_FAILURES} consecutive ties while generating questions")
            continue
        failures = 0

        options = FAMILY_OPTIONS.get(family, [ref, target])
        options = [options[index] for index in rng.permutation(len(options))]
        if aux is not None:
            text = TYPE_TWO_TEMPLATE.format(ref=ref, aux=aux, target=target)
        else:
            text = QUESTION_TEMPLATES[family].format(ref=ref, target=target)
        questions.append(GeneratedQuestion(
            question_id=f"{prefix}-q{len(questions):04d}",
            text=text,
            family=family,
            options=options,
            gold=options.index(answer),
            frame_spec=frame_spec,
            ref=ref,
            target=target,
            scene_id=scene_id,
        ))
    logger.info("Generated %d question(s) for %s", len(questions), prefix)
    return questions
