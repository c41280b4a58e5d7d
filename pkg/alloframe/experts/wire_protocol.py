"""
JSON bodies of the expert HTTP protocol. Every endpoint is a POST with a UTF-8 JSON body.

Requests serialize with to_dict(); responses are validated by from_dict(), which raises
ExpertProtocolError on malformed payloads.
"""
from abc import ABC, abstractmethod
from typing import List, Optional
from alloframe.base.mask import Mask
from alloframe.enums import OrientationStrategy, RouteLabel
from alloframe.errors import ExpertProtocolError, UsageError
from alloframe.experts.base import Detection


def _require(payload: dict, key: str, types):
    if not isinstance(payload, dict) or key not in payload:
        raise ExpertProtocolError(f"Response is missing '{key}'")
    value = payload[key]
    types = types if isinstance(types, tuple) else (types,)
    # bool is an int subclass; only accept it where asked for
    if not isinstance(value, types) or (isinstance(value, bool) and bool not in types):
        raise ExpertProtocolError(f"Field '{key}' has unexpected type {type(value).__name__}")
    return value


class ExpertRequest(ABC):
    endpoint = ''

    @abstractmethod
    def to_dict(self) -> dict:
        pass


class DetectRequest(ExpertRequest):
    endpoint = '/detect'

    def __init__(self, image: str, text: str):
        self.image = image
        self.text = text

    def to_dict(self):
        return {'image': self.image, 'text': self.text}

    @classmethod
    def from_dict(cls, data: dict):
        return cls(data['image'], data['text'])


class ItmRequest(ExpertRequest):
    endpoint = '/itm'

    def __init__(self, image: str, text: str):
        self.image = image
        self.text = text

    def to_dict(self):
        return {'image': self.image, 'text': self.text}

    @classmethod
    def from_dict(cls, data: dict):
        return cls(data['image'], data['text'])


class SimplifyRequest(ExpertRequest):
    endpoint = '/simplify'

    def __init__(self, text: str):
        self.text = text

    def to_dict(self):
        return {'text': self.text}

    @classmethod
    def from_dict(cls, data: dict):
        return cls(data['text'])


class OrientRequest(ExpertRequest):
    """
    Orientation query. 'system' and 'prompt' carry the rendered template text for servers
    that wrap a generic vision-language model.
    """
    endpoint = '/orient'

    def __init__(self, image: str, keyword: str, strategy: OrientationStrategy, round_number: Optional[int] = None,
                 options: Optional[List[str]] = None, system: Optional[str] = None, prompt: Optional[str] = None):
        self.image = image
        self.keyword = keyword
        self.strategy = OrientationStrategy(strategy)
        self.round_number = round_number
        self.options = options
        self.system = system
        self.prompt = prompt

    def to_dict(self):
        data = {'image': self.image, 'keyword': self.keyword, 'strategy': self.strategy.value}
        if self.round_number is not None:
            data['round'] = self.round_number
        if self.options is not None:
            data['options'] = list(self.options)
        if self.system is not None:
            data['system'] = self.system
        if self.prompt is not None:
            data['prompt'] = self.prompt
        return data

    @classmethod
    def from_dict(cls, data: dict):
        return cls(data['image'], data['keyword'], data['strategy'], data.get('round'), data.get('options'),
                   data.get('system'), data.get('prompt'))


class GazeRequest(ExpertRequest):
    endpoint = '/gaze'

    def __init__(self, image: str, keyword: str):
        self.image = image
        self.keyword = keyword

    def to_dict(self):
        return {'image': self.image, 'keyword': self.keyword}

    @classmethod
    def from_dict(cls, data: dict):
        return cls(data['image'], data['keyword'])


class VerifyRequest(ExpertRequest):
    endpoint = '/verify'

    def __init__(self, image: str, text: str):
        self.image = image
        self.text = text

    def to_dict(self):
        return {'image': self.image, 'text': self.text}

    @classmethod
    def from_dict(cls, data: dict):
        return cls(data['image'], data['text'])


class ReasonRequest(ExpertRequest):
    endpoint = '/reason'

    def __init__(self, system: str, prompt: str):
        self.system = system
        self.prompt = prompt

    def to_dict(self):
        return {'system': self.system, 'prompt': self.prompt}

    @classmethod
    def from_dict(cls, data: dict):
        return cls(data['system'], data['prompt'])


class RouteRequest(ExpertRequest):
    endpoint = '/route'

    def __init__(self, question: str):
        self.question = question

    def to_dict(self):
        return {'question': self.question}

    @classmethod
    def from_dict(cls, data: dict):
        return cls(data['question'])


def detection_to_dict(detection: Detection) -> dict:
    return {
        'box': list(detection.box),
        'mask_rle': detection.mask.to_rle_dict(),
        'confidence': detection.confidence,
    }


def encode_detect_response(detections: List[Detection]) -> dict:
    return {'candidates': [detection_to_dict(detection) for detection in detections]}


def decode_detect_response(payload: dict) -> List[Detection]:
    candidates = _require(payload, 'candidates', list)
    detections = []
    for candidate in candidates:
        box = _require(candidate, 'box', list)
        rle = _require(candidate, 'mask_rle', dict)
        confidence = _require(candidate, 'confidence', (int, float))
        if len(box) != 4:
            raise ExpertProtocolError(f"Box must have 4 values, got {box}")
        try:
            mask = Mask.from_rle_dict(rle)
        except (KeyError, TypeError, ValueError, UsageError) as e:
            raise ExpertProtocolError(f"Malformed mask_rle: {e}")
        detections.append(Detection(mask, box, confidence))
    return detections


def decode_score_response(payload: dict) -> float:
    score = float(_require(payload, 'score', (int, float)))
    if not 0.0 <= score <= 1.0:
        raise ExpertProtocolError(f"ITM score {score} outside [0, 1]")
    return score


def decode_text_response(payload: dict) -> str:
    return _require(payload, 'text', str)


def decode_label_response(payload: dict) -> str:
    return _require(payload, 'label', str)


def decode_vector_response(payload: dict) -> List[float]:
    vector = _require(payload, 'vector', list)
    if len(vector) != 3 or not all(isinstance(value, (int, float)) and not isinstance(value, bool)
                                   for value in vector):
        raise ExpertProtocolError(f"Gaze vector must be 3 numbers, got {vector}")
    return [float(value) for value in vector]


def decode_verify_response(payload: dict) -> bool:
    return _require(payload, 'accepted', bool)


def decode_route_response(payload: dict) -> RouteLabel:
    label = decode_label_response(payload)
    try:
        return RouteLabel.parse(label)
    except ValueError as e:
        raise ExpertProtocolError(str(e))
