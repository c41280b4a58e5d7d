"""
Scripted expert doubles answering from a JSON script.

Script layout (keys are canonicalized by trimming and collapsing whitespace; a crop part
of "*" matches any image):

    {"strict": false,
     "detect":   {"view0|picnic table": [{"box": [...], "mask_rle": {...}, "confidence": 0.9}]},
     "itm":      {"view0@10,20,40,60|picnic table": 0.8, "*|picnic table": 0.5},
     "simplify": {"wooden picnic table": "picnic table"},
     "orient":   {"*|chair|A": "front", "*|chair|B|1": "front", "*|chair|C": "left"},
     "gaze":     {"*|man": [0, 0, -1]},
     "verify":   {"*|chair": true},
     "reason":   {"<question text>": "<think>...</think> \\boxed{left}"},
     "extract":  {"<question text>": "chair, ball"},
     "route":    {"<question text>": "EGO_3D"}}
"""
import json
import logging
import re
import threading
from collections import deque
from typing import Deque, List, Optional, Tuple
import numpy as np
from alloframe.base.geometry_context import RenderedPrompt
from alloframe.enums import ExpertKind, OrientationStrategy, RouteLabel
from alloframe.errors import ExpertProtocolError, NotScriptedError, UsageError
from alloframe.experts import wire_protocol
from alloframe.experts.answer_parsing import extract_answer
from alloframe.experts.base import (CandidateVerifier, Detection, Detector, HeadPoseEstimator, ImageRef,
                                    ItmScorer, LanguageModel, OrientationJudge, ReasonerAnswer, Simplifier)
from alloframe.prompting.prompt_renderer import parse_key_objects

logger = logging.getLogger(__name__)

WILDCARD = '*'
SECTIONS = ('detect', 'itm', 'simplify', 'orient', 'gaze', 'verify', 'reason', 'extract', 'route')
MAX_RECORDED_CALLS = 10000

# Non-strict answers for requests the script does not mention.
_NEUTRAL_DEFAULTS = {
    'detect': [],
    'itm': 0.0,
    'verify': True,
}


def canonical_key(key: str) -> str:
    return re.sub(r"\s+", ' ', str(key).strip())


class MockScript:
    """
    Canned responses keyed by (section, canonical request key).

    Attributes:
        sections (dict): section name -> {canonical key: response}.
        strict (bool): When True every request must be scripted.
    """

    def __init__(self, sections: Optional[dict] = None, strict: bool = False):
        sections = sections or {}
        unknown = set(sections) - set(SECTIONS)
        if unknown:
            raise UsageError(f"Unknown mock script sections: {sorted(unknown)}")
        self.sections = {
            name: {canonical_key(key): value for key, value in (sections.get(name) or {}).items()}
            for name in SECTIONS
        }
        self.strict = bool(strict)

    def __repr__(self):
        counts = {name: len(entries) for name, entries in self.sections.items() if entries}
        return f"MockScript(strict={self.strict}, entries={counts})"

    @classmethod
    def from_dict(cls, data: dict):
        data = dict(data or {})
        strict = data.pop('strict', False)
        return cls(data, strict=strict)

    @classmethod
    def load(cls, path: str):
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except (OSError, ValueError) as e:
            raise UsageError(f"Cannot read mock script {path}: {e}")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        data = {'strict': self.strict}
        data.update({name: dict(entries) for name, entries in self.sections.items() if entries})
        return data

    def lookup(self, section: str, crop_key: Optional[str], rest: str):
        """
        Finds the response for '<crop_key>|<rest>' (or '<rest>' when crop_key is None),
        falling back to the '*' crop entry.

        Returns:
            tuple: (found, response).
        """
        entries = self.sections[section]
        rest = canonical_key(rest)
        if crop_key is None:
            key = rest
            return (key in entries), entries.get(key)
        for key in (f"{canonical_key(crop_key)}|{rest}", f"{WILDCARD}|{rest}"):
            if key in entries:
                return True, entries[key]
        return False, None


class MockExperts(Detector, ItmScorer, Simplifier, CandidateVerifier, OrientationJudge, HeadPoseEstimator,
                  LanguageModel):
    """
    One object implementing every expert interface from a MockScript.

    The latest `max_calls` calls are recorded in `calls` as (kind, key) pairs. The handle is
    safe to share between threads.
    """

    def __init__(self, script: MockScript, max_calls: int = MAX_RECORDED_CALLS):
        self.script = script
        self.calls: Deque[Tuple[str, str]] = deque(maxlen=max_calls)
        self._lock = threading.Lock()

    def __repr__(self):
        return f"MockExperts({self.script})"

    def _answer(self, section: str, kind: str, crop_key: Optional[str], rest: str):
        found, response = self.script.lookup(section, crop_key, rest)
        request_key = rest if crop_key is None else f"{crop_key}|{rest}"
        with self._lock:
            self.calls.append((kind, request_key))
        if found:
            return response
        if self.script.strict or section not in _NEUTRAL_DEFAULTS:
            raise NotScriptedError(f"No scripted {kind} response for '{request_key}'")
        logger.debug("Unscripted %s request '%s', using the neutral default", kind, request_key)
        return _NEUTRAL_DEFAULTS[section]

    def detect(self, image_ref: ImageRef, text: str) -> List[Detection]:
        if not text or not text.strip():
            raise UsageError("Detection text must not be empty")
        candidates = self._answer('detect', ExpertKind.DETECTOR.value, image_ref.key, text)
        return wire_protocol.decode_detect_response({'candidates': candidates})

    def itm_score(self, crop_ref: ImageRef, text: str) -> float:
        score = self._answer('itm', ExpertKind.ITM.value, crop_ref.key, text)
        return wire_protocol.decode_score_response({'score': score})

    def simplify(self, text: str) -> str:
        if not text or not text.strip():
            raise UsageError("Cannot simplify an empty description")
        found, response = self.script.lookup('simplify', None, text)
        with self._lock:
            self.calls.append((ExpertKind.SIMPLIFIER.value, canonical_key(text)))
        if found:
            return canonical_key(response)
        if self.script.strict:
            raise NotScriptedError(f"No scripted simplifier response for '{canonical_key(text)}'")
        return canonical_key(text)

    def verify(self, crop_ref: ImageRef, text: str) -> bool:
        return wire_protocol.decode_verify_response({'accepted': self._answer('verify', 'verifier',
                                                                              crop_ref.key, text)})

    def ask(self, crop_ref: ImageRef, keyword: str, strategy: OrientationStrategy,
            round_number: Optional[int] = None, options: Optional[List[str]] = None) -> str:
        rest = f"{keyword}|{OrientationStrategy(strategy).value}"
        if round_number is not None:
            rest += f"|{round_number}"
        return wire_protocol.decode_label_response({'label': self._answer('orient', ExpertKind.ORIENTATION.value,
                                                                          crop_ref.key, rest)})

    def gaze(self, crop_ref: ImageRef, keyword: str) -> np.ndarray:
        vector = self._answer('gaze', ExpertKind.HEAD_POSE.value, crop_ref.key, keyword)
        return np.asarray(wire_protocol.decode_vector_response({'vector': vector}))

    def reason(self, prompt: RenderedPrompt) -> ReasonerAnswer:
        # Keyed by the question line; an options line may follow it.
        question = prompt.question_text.split('\n')[0]
        raw_text = self._answer('reason', ExpertKind.REASONER.value, None, question)
        return extract_answer(wire_protocol.decode_text_response({'text': raw_text}))

    def extract_key_objects(self, question: str) -> List[str]:
        reply = self._answer('extract', ExpertKind.REASONER.value, None, question)
        return parse_key_objects(wire_protocol.decode_text_response({'text': reply}))

    def route(self, question: str) -> RouteLabel:
        label = self._answer('route', ExpertKind.ROUTER.value, None, question)
        try:
            return RouteLabel.parse(label)
        except ValueError as e:
            raise ExpertProtocolError(str(e))
