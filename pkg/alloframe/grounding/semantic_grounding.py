import logging
from typing import List, Optional, Tuple
from alloframe.base.mask import Mask
from alloframe.enums import TerminalReason
from alloframe.errors import GroundingFailureError, UsageError
from alloframe.experts.base import CandidateVerifier, Detection, Detector, ImageRef, ItmScorer, Simplifier

logger = logging.getLogger(__name__)

MAX_RELAXATION_STEPS = 16


class RelaxationTrace:
    """
    Detection history of one grounding search.

    Attributes:
        steps (List[Tuple[str, int]]): (prompt, detection count) per detector call.
        terminal_reason (TerminalReason): Why the relaxation loop stopped.
        scores (List[float]): ITM scores of the terminal pool against the original text.
        selected_index (int): Index of the returned candidate in the terminal pool.
    """

    def __init__(self):
        self.steps: List[Tuple[str, int]] = []
        self.terminal_reason: Optional[TerminalReason] = None
        self.scores: List[float] = []
        self.selected_index: Optional[int] = None

    def __repr__(self):
        return f"RelaxationTrace(steps={self.steps}, terminal_reason={self.terminal_reason})"

    def to_dict(self) -> dict:
        return {
            'steps': [{'prompt': prompt, 'detections': count} for prompt, count in self.steps],
            'terminal_reason': self.terminal_reason.value if self.terminal_reason else None,
            'scores': self.scores,
            'selected_index': self.selected_index,
        }


class GroundingResult:
    """
    The selected candidate of a grounding search. Unpacks as (mask, box, itm_score).
    """

    def __init__(self, mask: Mask, box, itm_score: float, trace: RelaxationTrace, pool: List[Detection]):
        self.mask = mask
        self.box = tuple(box)
        self.itm_score = float(itm_score)
        self.trace = trace
        self.pool = pool

    def __iter__(self):
        return iter((self.mask, self.box, self.itm_score))

    def __repr__(self):
        return f"GroundingResult(box={self.box}, itm_score={self.itm_score}, trace={self.trace})"


def relax_description(image_ref: ImageRef, description: str, detector: Detector, simplifier: Simplifier,
                      trace: RelaxationTrace, max_steps: int = MAX_RELAXATION_STEPS) -> List[Detection]:
    """
    Coarse-to-fine relaxation loop: detect, backtrack if recall dropped, otherwise simplify
    until more than one candidate is found or the description stops changing.

    Returns:
        List[Detection]: The terminal candidate pool (possibly empty).
    """
    history: List[List[Detection]] = []
    current = description
    seen = {current}
    while True:
        candidates = detector.detect(image_ref, current)
        history.append(candidates)
        trace.steps.append((current, len(candidates)))
        logger.debug("Detected %d candidate(s) for '%s'", len(candidates), current)

        if len(history) > 1 and len(candidates) < len(history[-2]):
            trace.terminal_reason = TerminalReason.BACKTRACKED
            return history[-2]

        next_description = simplifier.simplify(current)
        if len(candidates) > 1:
            trace.terminal_reason = TerminalReason.FOUND_CANDIDATES
            return candidates
        if next_description == current or next_description in seen or len(history) >= max_steps:
            trace.terminal_reason = TerminalReason.CANNOT_SIMPLIFY
            return candidates

        seen.add(next_description)
        current = next_description


def ground_object(image_ref: ImageRef, description: str, detector: Detector, simplifier: Simplifier,
                  itm: ItmScorer, verifier: Optional[CandidateVerifier] = None) -> GroundingResult:
    """
    Grounds a free-text description in one image.

    Phase 1 relaxes the description until the detector returns a usable pool. Phase 2 scores
    every pool candidate against the ORIGINAL description and returns the best one (lowest
    index on ties). With a verifier, rejected candidates are skipped in score order.

    Parameters:
        image_ref (ImageRef): Full image to search.
        description (str): Detailed object description.
        detector (Detector): Open-vocabulary detector.
        simplifier (Simplifier): Removes one layer of modifiers per call.
        itm (ItmScorer): Image-text matcher.
        verifier (CandidateVerifier): Optional confirmation step.

    Returns:
        GroundingResult: Mask, box and ITM score of the selected candidate, plus the trace.

    Raises:
        UsageError: If the description is empty.
        GroundingFailureError: If no candidate was found or every candidate was rejected.
    """
    if not description or not description.strip():
        raise UsageError("Cannot ground an empty description")
    trace = RelaxationTrace()
    pool = relax_description(image_ref, description, detector, simplifier, trace)
    if not pool:
        raise GroundingFailureError(f"No candidate found for '{description}' in view {image_ref.view_id}",
                                    description=description, trace=trace)

    scores = [itm.itm_score(image_ref.crop(candidate.box, candidate.mask), description) for candidate in pool]
    trace.scores = scores

    best_index = None
    best_score = -1.0
    for index, score in enumerate(scores):
        if score > best_score:
            best_index, best_score = index, score

    if verifier is not None:
        order = sorted(range(len(pool)), key=lambda index: -scores[index])
        best_index = None
        for index in order:
            candidate = pool[index]
            if verifier.verify(image_ref.crop(candidate.box, candidate.mask), description):
                best_index = index
                break
            logger.debug("Verifier rejected candidate %d for '%s'", index, description)
        if best_index is None:
            raise GroundingFailureError(f"Every candidate for '{description}' was rejected by the verifier",
                                        description=description, trace=trace)

    trace.selected_index = best_index
    selected = pool[best_index]
    return GroundingResult(selected.mask, selected.box, scores[best_index], trace, pool)
