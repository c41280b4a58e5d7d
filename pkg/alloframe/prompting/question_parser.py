"""
Turns free-text multiple-choice questions into the relation, target and reference they ask about.
"""
import re
from typing import List, Optional
from alloframe.base.question import MultipleChoiceQuestion
from alloframe.enums import RelationKind, RouteLabel
from alloframe.errors import ExtractionError
from alloframe.prompting.router import RouteDecision

# Canonical answer tokens and the option spellings that express them.
ANSWER_SYNONYMS = {
    'left': {'left', 'on the left', 'to the left', 'left side'},
    'right': {'right', 'on the right', 'to the right', 'right side'},
    'front': {'front', 'in front', 'in front of', 'forward', 'ahead'},
    'behind': {'behind', 'back', 'in back', 'in back of', 'backward', 'behind it'},
    'above': {'above', 'up', 'over', 'higher'},
    'below': {'below', 'down', 'under', 'beneath', 'lower'},
    'yes': {'yes', 'true'},
    'no': {'no', 'false'},
}

_TOKEN_OF_SPELLING = {spelling: token for token, spellings in ANSWER_SYNONYMS.items() for spelling in spellings}
_REFERENCE_CUES = re.compile(r"\b(?:of|than|from|to|with respect to|relative to) (?:the |a |an )?(?P<name>[\w\s-]+?)"
                             r"(?=\s*(?:[,?.]|$| from| in the| or))", re.IGNORECASE)


def normalize_text(text: str) -> str:
    return re.sub(r"\s+", ' ', (text or '').strip().lower().strip('.?!'))


def canonical_token(option: str) -> Optional[str]:
    """
    Maps an option such as 'On the left' to its canonical token ('left'), or None.
    """
    return _TOKEN_OF_SPELLING.get(normalize_text(option))


def match_option(options: List[str], answer: str) -> Optional[str]:
    """
    Finds the option expressing an answer: exact text first, then canonical token.
    """
    wanted = normalize_text(answer)
    for option in options:
        if normalize_text(option) == wanted:
            return option
    wanted_token = canonical_token(answer) or wanted
    for option in options:
        if canonical_token(option) == wanted_token:
            return option
    return None


def find_objects_in_text(text: str, vocabulary: List[str]) -> List[str]:
    """
    Returns the vocabulary names mentioned in the text, in order of appearance.
    """
    positions = []
    for name in vocabulary:
        match = re.search(r"\b" + re.escape(name) + r"\b", text, re.IGNORECASE)
        if match:
            positions.append((match.start(), name))
    return [name for _, name in sorted(positions)]


def resolve_phrase(phrase: Optional[str], key_objects: List[str]) -> Optional[str]:
    """
    Matches a captured phrase against the key objects: exact, then containment either way.
    """
    if phrase is None:
        return None
    wanted = normalize_text(phrase)
    for name in key_objects:
        if normalize_text(name) == wanted:
            return name
    for name in key_objects:
        candidate = normalize_text(name)
        if candidate in wanted or wanted in candidate:
            return name
    return phrase


def parse_relation(text: str, options: List[str]) -> RelationKind:
    """
    Determines the relation a question asks about, from its wording and its options.

    Raises:
        ExtractionError: If no supported relation is recognised.
    """
    lowered = normalize_text(text)
    tokens = {canonical_token(option) for option in options}
    if re.search(r"\bfac(?:ing|es|e) (?:toward|towards)\b", lowered) or (
            tokens == {'yes', 'no'} and 'facing' in lowered):
        return RelationKind.FACING_TOWARD
    if re.search(r"\bcloser\b|\bnearer\b", lowered):
        return RelationKind.CLOSER
    if re.search(r"\bfarther\b|\bfurther\b", lowered):
        return RelationKind.FARTHER
    if tokens and None not in tokens:
        if tokens <= {'left', 'right'}:
            return RelationKind.LEFT_RIGHT
        if tokens <= {'front', 'behind'}:
            return RelationKind.FRONT_BEHIND
        if tokens <= {'above', 'below'}:
            return RelationKind.ABOVE_BELOW
        if tokens <= {'front', 'behind', 'left', 'right'}:
            return RelationKind.DIRECTION4
    if re.search(r"\bin front\b", lowered) and re.search(r"\bbehind\b", lowered):
        return RelationKind.FRONT_BEHIND
    if re.search(r"\babove\b", lowered) and re.search(r"\bbelow\b", lowered):
        return RelationKind.ABOVE_BELOW
    if re.search(r"\bleft\b", lowered) and re.search(r"\bright\b", lowered):
        return RelationKind.LEFT_RIGHT
    if re.search(r"\bwhere (?:is|are|would)\b|\blocated\b|\bpositioned\b", lowered):
        return RelationKind.DIRECTION4
    raise ExtractionError(f"Cannot tell which relation the question asks about: {text!r}")


def parse_question(text: str, options: List[str], key_objects: List[str],
                   decision: RouteDecision) -> MultipleChoiceQuestion:
    """
    Builds the structured question the rule-based reasoner consumes.

    Ego questions take the reference (and auxiliary) object from the router's captured
    phrases, falling back to the first key object; the target is the last remaining key
    object. Camera questions take the reference from an 'of/than/to the X' cue.
    """
    relation = parse_relation(text, options)
    if relation in (RelationKind.CLOSER, RelationKind.FARTHER):
        named = [option for option in options if option in key_objects] or key_objects
        target = named[0] if named else None
        ref = named[1] if len(named) > 1 else None
        return MultipleChoiceQuestion(text, relation, target, options, ref=ref)

    if decision.label == RouteLabel.EGO_3D:
        ref = resolve_phrase(decision.ref_phrase, key_objects) or (key_objects[0] if key_objects else None)
        aux = resolve_phrase(decision.aux_phrase, key_objects)
        remaining = [name for name in key_objects if name not in (ref, aux)]
        if not remaining:
            raise ExtractionError(f"No target object besides the reference in {text!r}")
        return MultipleChoiceQuestion(text, relation, remaining[-1], options, ref=ref)

    ref = None
    for match in _REFERENCE_CUES.finditer(text):
        candidate = resolve_phrase(match.group('name'), key_objects)
        if candidate in key_objects:
            ref = candidate
            break
    remaining = [name for name in key_objects if name != ref]
    if not remaining:
        raise ExtractionError(f"No target object in {text!r}")
    return MultipleChoiceQuestion(text, relation, remaining[0], options, ref=ref)


def default_options(relation: RelationKind, key_objects: List[str]) -> List[str]:
    """
    Options implied by a relation when a question comes without any.
    """
    relation = RelationKind(relation)
    if relation in (RelationKind.CLOSER, RelationKind.FARTHER):
        return list(key_objects)
    return {
        RelationKind.LEFT_RIGHT: ['left', 'right'],
        RelationKind.FRONT_BEHIND: ['front', 'behind'],
        RelationKind.ABOVE_BELOW: ['above', 'below'],
        RelationKind.DIRECTION4: ['front', 'behind', 'left', 'right'],
        RelationKind.FACING_TOWARD: ['yes', 'no'],
    }[relation]
