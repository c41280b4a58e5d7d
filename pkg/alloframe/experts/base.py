from abc import ABC, abstractmethod
from typing import List, Optional, Tuple
import numpy as np
from alloframe.base.mask import Mask
from alloframe.base.question import MultipleChoiceQuestion
from alloframe.base.geometry_context import GeometryContext, RenderedPrompt
from alloframe.enums import Orientation8, OrientationStrategy, RouteLabel
from alloframe.errors import ExpertProtocolError, UsageError

Box = Tuple[float, float, float, float]

# Round 3 candidate sets of the coarse-to-fine orientation protocol, spelled as asked.
ROUND_THREE_CANDIDATES = {
    (Orientation8.FRONT, Orientation8.RIGHT): ['front', 'front-right', 'right'],
    (Orientation8.FRONT, Orientation8.LEFT): ['front', 'left-front', 'left'],
    (Orientation8.BACK, Orientation8.RIGHT): ['back', 'right-back', 'right'],
    (Orientation8.BACK, Orientation8.LEFT): ['back', 'left-back', 'left'],
}


class ImageRef:
    """
    Handle to an image region handed to an expert.

    Attributes:
        view_id (str): View the image belongs to.
        image_path (str): Path of the RGB image, if the bundle has one.
        box (tuple): Optional (x0, y0, x1, y1) crop.
        mask (Mask): Optional mask applied to the crop.
    """

    def __init__(self, view_id: str, image_path: Optional[str] = None, box: Optional[Box] = None,
                 mask: Optional[Mask] = None):
        self.view_id = view_id
        self.image_path = image_path
        self.box = tuple(box) if box is not None else None
        self.mask = mask

    def __repr__(self):
        return f"ImageRef({self.key})"

    def crop(self, box: Box, mask: Optional[Mask] = None) -> 'ImageRef':
        return ImageRef(self.view_id, self.image_path, box, mask)

    @property
    def key(self) -> str:
        """
        Canonical request key: 'view0' for full images, 'view0@x0,y0,x1,y1' for crops.
        """
        if self.box is None:
            return self.view_id
        return f"{self.view_id}@" + ",".join(f"{value:g}" for value in self.box)


class Detection:
    """
    One detector candidate.
    """

    def __init__(self, mask: Mask, box: Box, confidence: float):
        self.mask = mask
        self.box = tuple(float(value) for value in box)
        self.confidence = float(confidence)

    def __repr__(self):
        return f"Detection(box={self.box}, confidence={self.confidence}, area={self.mask.area})"

    def __eq__(self, other):
        return (isinstance(other, Detection) and self.mask == other.mask
                and self.box == other.box and self.confidence == other.confidence)


class ReasonerAnswer:
    """
    A reasoner reply with its boxed answer and optional thinking chain.
    """

    def __init__(self, raw_text: str, extracted: str, chain: Optional[str] = None):
        self.raw_text = raw_text
        self.extracted = extracted
        self.chain = chain

    def __repr__(self):
        return f"ReasonerAnswer(extracted={self.extracted!r})"

    def to_dict(self) -> dict:
        return {'raw_text': self.raw_text, 'extracted': self.extracted, 'chain': self.chain}


class Detector(ABC):
    @abstractmethod
    def detect(self, image_ref: ImageRef, text: str) -> List[Detection]:
        pass


class ItmScorer(ABC):
    @abstractmethod
    def itm_score(self, crop_ref: ImageRef, text: str) -> float:
        pass


class Simplifier(ABC):
    @abstractmethod
    def simplify(self, text: str) -> str:
        pass


class CandidateVerifier(ABC):
    @abstractmethod
    def verify(self, crop_ref: ImageRef, text: str) -> bool:
        pass


class HeadPoseEstimator(ABC):
    """
    Fine-grained facing estimator returning an unquantized camera-frame direction.

    Attributes:
        covers_all_objects (bool): True when the estimator answers for any keyword,
            not only people and animals.
    """
    covers_all_objects = False

    @abstractmethod
    def gaze(self, crop_ref: ImageRef, keyword: str) -> np.ndarray:
        pass


class OrientationJudge(ABC):
    """
    Answers single orientation prompts; orient() runs the full per-strategy protocol.
    """

    @abstractmethod
    def ask(self, crop_ref: ImageRef, keyword: str, strategy: OrientationStrategy,
            round_number: Optional[int] = None, options: Optional[List[str]] = None) -> str:
        """
        Issues one orientation query and returns the raw label text.
        """
        pass

    def _parse(self, text: str) -> Orientation8:
        try:
            return Orientation8.parse(text)
        except ValueError as e:
            raise ExpertProtocolError(str(e))

    def orient(self, crop_ref: ImageRef, keyword: str, strategy: OrientationStrategy) -> Orientation8:
        """
        Returns the label of one strategy. Strategy B asks front/back, then left/right,
        then picks from the three candidates the first two answers imply.

        Raises:
            ExpertProtocolError: On unparsable or out-of-round labels.
        """
        strategy = OrientationStrategy(strategy)
        if strategy != OrientationStrategy.B:
            return self._parse(self.ask(crop_ref, keyword, strategy))

        first = self._parse(self.ask(crop_ref, keyword, strategy, round_number=1, options=['front', 'back']))
        second = self._parse(self.ask(crop_ref, keyword, strategy, round_number=2, options=['left', 'right']))
        candidates = ROUND_THREE_CANDIDATES.get((first, second))
        if candidates is None:
            raise ExpertProtocolError(f"Rounds 1/2 answered {first.value}/{second.value}, "
                                      f"expected front|back then left|right")
        final = self._parse(self.ask(crop_ref, keyword, strategy, round_number=3, options=candidates))
        if final not in {Orientation8.parse(candidate) for candidate in candidates}:
            raise ExpertProtocolError(f"Round 3 answered {final.value}, not one of {candidates}")
        return final


class LanguageModel(ABC):
    """
    Text-only expert: reasoning over rendered prompts, key-object extraction and routing.
    """

    @abstractmethod
    def reason(self, prompt: RenderedPrompt) -> ReasonerAnswer:
        pass

    def extract_key_objects(self, question: str) -> List[str]:
        raise UsageError(f"{type(self).__name__} cannot extract key objects")

    def route(self, question: str) -> RouteLabel:
        raise UsageError(f"{type(self).__name__} cannot route questions")


class GeometricReasoner(ABC):
    """
    Reasoner that answers directly from a GeometryContext instead of prompt text.
    """

    @abstractmethod
    def reason_geometry(self, context: GeometryContext, question: MultipleChoiceQuestion) -> ReasonerAnswer:
        pass
