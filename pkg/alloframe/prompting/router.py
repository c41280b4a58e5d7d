"""
Rule-based spatial query router.

Cascade: perspective-adoption patterns route to EGO_3D, attribute patterns to ATTR, and
everything else to CAMERA_3D.
"""
import re
from typing import Optional
from alloframe.enums import RouteLabel
from alloframe.errors import UsageError

_PHRASE = r"(?P<ref>[^,?.]+?)"

EGO_PATTERNS = [
    re.compile(r"\bfrom the perspective of (?:the |a |an )?" + _PHRASE + r"\s*(?:,|\?|\.|$)", re.IGNORECASE),
    re.compile(r"\bfrom (?:the |a |an )?(?P<ref>[\w\s-]+?)'s (?:perspective|point of view|viewpoint)\b",
               re.IGNORECASE),
    re.compile(r"\b(?:stand|stood|standing) at (?:the |a |an )?" + _PHRASE
               + r"(?:'s position)?(?: facing (?P<aux>[^,?.]+?))?\s*(?:,|\?|\.|$)", re.IGNORECASE),
    re.compile(r"\brelative to (?:the |a |an )?(?P<ref>[\w\s-]+?)'s\b", re.IGNORECASE),
    re.compile(r"\bfacing where (?:it|he|she|they) (?:is|are) facing\b", re.IGNORECASE),
]

ATTR_PATTERNS = [
    re.compile(r"\b(?:what|which) direction (?:is|are) .+? facing\b", re.IGNORECASE),
    re.compile(r"\bwhich way (?:is|are) .+? facing\b", re.IGNORECASE),
    re.compile(r"\bwhat colou?r\b", re.IGNORECASE),
    re.compile(r"\bwhat material\b", re.IGNORECASE),
    re.compile(r"\bis there an?\b", re.IGNORECASE),
]

OBSERVER_WORDS = {'camera', 'viewer', 'observer', 'image', 'photo', 'picture', 'you', 'me', 'i'}
_ARTICLE = re.compile(r"^(?:the|a|an)\s+", re.IGNORECASE)


class RouteDecision:
    """
    Router output with the phrases captured by the perspective pattern.

    Attributes:
        label (RouteLabel): Selected pipeline.
        ref_phrase (str): Reference object phrase, if a pattern captured one.
        aux_phrase (str): Auxiliary object phrase of a "standing at X facing Y" question.
    """

    def __init__(self, label: RouteLabel, ref_phrase: Optional[str] = None, aux_phrase: Optional[str] = None):
        self.label = RouteLabel(label)
        self.ref_phrase = ref_phrase
        self.aux_phrase = aux_phrase

    def __repr__(self):
        return f"RouteDecision(label={self.label.value}, ref={self.ref_phrase}, aux={self.aux_phrase})"

    def to_dict(self) -> dict:
        return {'label': self.label.value, 'ref_phrase': self.ref_phrase, 'aux_phrase': self.aux_phrase}


def _clean_phrase(phrase: Optional[str]) -> Optional[str]:
    if phrase is None:
        return None
    phrase = _ARTICLE.sub('', phrase.strip())
    return phrase or None


def match_perspective(question: str) -> Optional[RouteDecision]:
    """
    Returns an EGO_3D decision if a perspective-adoption pattern matches a non-observer phrase.
    """
    for pattern in EGO_PATTERNS:
        for match in pattern.finditer(question):
            groups = match.groupdict()
            ref = _clean_phrase(groups.get('ref'))
            if ref is not None and ref.lower() in OBSERVER_WORDS:
                continue
            aux = _clean_phrase(groups.get('aux'))
            if aux is not None and aux.lower().startswith('where'):
                aux = None
            return RouteDecision(RouteLabel.EGO_3D, ref, aux)
    return None


def decide_route(question: str) -> RouteDecision:
    """
    Routes a question and keeps the captured reference/auxiliary phrases.
    """
    if not question or not question.strip():
        raise UsageError("Cannot route an empty question")
    decision = match_perspective(question)
    if decision is not None:
        return decision
    if any(pattern.search(question) for pattern in ATTR_PATTERNS):
        return RouteDecision(RouteLabel.ATTR)
    return RouteDecision(RouteLabel.CAMERA_3D)


def route_query_rules(question: str) -> RouteLabel:
    return decide_route(question).label
