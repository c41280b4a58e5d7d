from typing import List, Optional
import numpy as np
from alloframe.enums import FrameKind, FrontSourceKind
from alloframe.errors import UsageError


class FrameSpec:
    """
    Describes which reference frame a question is answered in.

    Attributes:
        kind (FrameKind): EGO (allocentric, anchored at a reference object) or CAMERA.
        ref_object (str): Reference object name, EGO only.
        front_source (FrontSourceKind): INTRINSIC (object's own facing) or CONSTRAINT (toward aux object).
        view_id (str): View used for the intrinsic orientation (EGO) or the camera frame (CAMERA).
        aux_object (str): Auxiliary object for CONSTRAINT fronts.
    """

    def __init__(self, kind: FrameKind, ref_object: Optional[str] = None,
                 front_source: Optional[FrontSourceKind] = None, view_id: Optional[str] = None,
                 aux_object: Optional[str] = None):
        self.kind = FrameKind(kind)
        self.ref_object = ref_object
        self.front_source = FrontSourceKind(front_source) if front_source is not None else None
        self.view_id = view_id
        self.aux_object = aux_object
        self._validate()

    def _validate(self):
        if self.kind == FrameKind.EGO:
            if not self.ref_object or self.front_source is None:
                raise UsageError("An ego frame needs a reference object and a front source")
            if self.front_source == FrontSourceKind.CONSTRAINT and not self.aux_object:
                raise UsageError("A constraint front needs an auxiliary object")
        elif self.ref_object is not None or self.front_source is not None:
            raise UsageError("A camera frame takes neither a reference object nor a front source")

    @classmethod
    def camera(cls, view_id: Optional[str] = None):
        return cls(FrameKind.CAMERA, view_id=view_id)

    @classmethod
    def intrinsic(cls, ref_object: str, view_id: Optional[str] = None):
        return cls(FrameKind.EGO, ref_object=ref_object, front_source=FrontSourceKind.INTRINSIC, view_id=view_id)

    @classmethod
    def constraint(cls, ref_object: str, aux_object: str):
        return cls(FrameKind.EGO, ref_object=ref_object, front_source=FrontSourceKind.CONSTRAINT,
                   aux_object=aux_object)

    def __repr__(self):
        return (f"FrameSpec(kind={self.kind.value}, ref_object={self.ref_object}, "
                f"front_source={self.front_source.value if self.front_source else None}, "
                f"view_id={self.view_id}, aux_object={self.aux_object})")

    def __eq__(self, other):
        return isinstance(other, FrameSpec) and self.to_dict() == other.to_dict()

    def to_dict(self) -> dict:
        return {
            'kind': self.kind.value,
            'ref_object': self.ref_object,
            'front_source': self.front_source.value if self.front_source else None,
            'view_id': self.view_id,
            'aux_object': self.aux_object,
        }

    @classmethod
    def from_dict(cls, data: dict):
        return cls(
            kind=data['kind'],
            ref_object=data.get('ref_object'),
            front_source=data.get('front_source'),
            view_id=data.get('view_id'),
            aux_object=data.get('aux_object'),
        )


class ContextEntry:
    """
    One object's frame-local geometry.

    Attributes:
        name (str): Object description.
        coords (np.ndarray): Frame-local centroid.
        distance (float): Euclidean norm of coords.
        sizes (np.ndarray): Frame-axis extents (dX, dY, dZ).
    """

    def __init__(self, name: str, coords, sizes):
        self.name = name
        self.coords = np.asarray(coords, dtype=float).reshape(3)
        self.sizes = np.asarray(sizes, dtype=float).reshape(3)
        if np.any(self.sizes < 0):
            raise UsageError(f"Sizes of '{name}' must be non-negative")
        self.distance = float(np.linalg.norm(self.coords))

    def __repr__(self):
        return f"ContextEntry(name={self.name}, coords={self.coords.tolist()}, distance={self.distance})"

    def to_dict(self) -> dict:
        return {
            'name': self.name,
            'coords': self.coords.tolist(),
            'distance': self.distance,
            'sizes': self.sizes.tolist(),
        }


class GeometryContext:
    """
    Frame-local object geometry ready for text rendering.

    Attributes:
        frame (FrameSpec): Frame the coordinates are expressed in.
        entries (List[ContextEntry]): Entries in key-object order.
    """

    def __init__(self, frame: FrameSpec, entries: List[ContextEntry]):
        self.frame = frame
        self.entries = list(entries)

    def __repr__(self):
        return f"GeometryContext(frame={self.frame}, entries={[entry.name for entry in self.entries]})"

    def entry(self, name: str) -> ContextEntry:
        for entry in self.entries:
            if entry.name == name:
                return entry
        raise UsageError(f"Object '{name}' is not part of the geometry context")

    def to_dict(self) -> dict:
        return {
            'frame': self.frame.to_dict(),
            'entries': [entry.to_dict() for entry in self.entries],
        }


class RenderedPrompt:
    """
    The composite reasoner input: system instruction, geometry context, question and reasoning prompt.
    """

    def __init__(self, system_text: str, context_text: str, question_text: str, reasoning_text: str):
        self.system_text = system_text
        self.context_text = context_text
        self.question_text = question_text
        self.reasoning_text = reasoning_text

    def user_text(self) -> str:
        """
        Returns the user turn: context, "QUESTION:" block and the reasoning prompt.
        """
        return (f"{self.context_text}\n"
                f"QUESTION:\n"
                f"{self.question_text}\n"
                f"Reasoning Prompt: \n"
                f"{self.reasoning_text}")

    def full_text(self) -> str:
        return f"{self.system_text}\n{self.user_text()}"

    def to_dict(self) -> dict:
        return {
            'system': self.system_text,
            'context': self.context_text,
            'question': self.question_text,
            'reasoning': self.reasoning_text,
        }
