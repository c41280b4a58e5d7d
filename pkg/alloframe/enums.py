from enum import Enum


class RouteLabel(str, Enum):
    """
    Pipeline selected by the spatial query router.
    """
    ATTR = 'ATTR'
    CAMERA_3D = 'CAMERA_3D'
    EGO_3D = 'EGO_3D'

    @classmethod
    def parse(cls, text: str) -> 'RouteLabel':
        """
        Parses a router reply such as ' EGO_3D\\n'.

        Raises:
            ValueError: If the reply is not exactly one known label.
        """
        cleaned = (text or '').strip().strip('.').strip().upper()
        for label in cls:
            if cleaned == label.value:
                return label
        raise ValueError(f"Unparsable route label: {text!r}")


class FrameKind(str, Enum):
    EGO = 'ego'
    CAMERA = 'camera'


class FrontSourceKind(str, Enum):
    """
    Where the forward axis of an ego frame comes from.
    """
    INTRINSIC = 'intrinsic'
    CONSTRAINT = 'constraint'


class Orientation8(str, Enum):
    """
    The eight facing labels judged relative to the camera.
    """
    FRONT = 'front'
    FRONT_RIGHT = 'front-right'
    RIGHT = 'right'
    BACK_RIGHT = 'back-right'
    BACK = 'back'
    BACK_LEFT = 'back-left'
    LEFT = 'left'
    FRONT_LEFT = 'front-left'

    @classmethod
    def parse(cls, text: str) -> 'Orientation8':
        """
        Parses a label case-insensitively, accepting 'left-front' style spellings
        and the single-word answers of the binary rounds ('forward', 'backward').

        Raises:
            ValueError: If no label can be recognised.
        """
        cleaned = (text or '').strip().lower().strip('.').strip()
        cleaned = cleaned.replace('_', '-').replace(' ', '-')
        if cleaned in _ORIENTATION_SYNONYMS:
            return _ORIENTATION_SYNONYMS[cleaned]
        raise ValueError(f"Unparsable orientation label: {text!r}")


_ORIENTATION_SYNONYMS = {label.value: label for label in Orientation8}
_ORIENTATION_SYNONYMS.update({
    'left-front': Orientation8.FRONT_LEFT,
    'right-front': Orientation8.FRONT_RIGHT,
    'left-back': Orientation8.BACK_LEFT,
    'right-back': Orientation8.BACK_RIGHT,
    'forward': Orientation8.FRONT,
    'backward': Orientation8.BACK,
    'backwards': Orientation8.BACK,
})


class OrientationStrategy(str, Enum):
    """
    Prompt strategies of the orientation ensemble, in ascending tie-break priority.
    """
    A = 'A'
    B = 'B'
    C = 'C'


class TerminalReason(str, Enum):
    FOUND_CANDIDATES = 'found_candidates'
    CANNOT_SIMPLIFY = 'cannot_simplify'
    BACKTRACKED = 'backtracked'


class RelationKind(str, Enum):
    """
    Relations the rule-based reasoner and the synthetic oracle can decide.
    """
    LEFT_RIGHT = 'left_right'
    FRONT_BEHIND = 'front_behind'
    ABOVE_BELOW = 'above_below'
    CLOSER = 'closer'
    FARTHER = 'farther'
    FACING_TOWARD = 'facing_toward'
    DIRECTION4 = 'direction4'


class QuestionFamily(str, Enum):
    PSN_REL_DIR = 'psn_rel_dir'
    CAM_REL_DIR = 'cam_rel_dir'
    ORIENT_FRONT = 'orient_front'
    ORIENT_LEFT = 'orient_left'
    ORIENT_TWD = 'orient_twd'
    LOC_CLOSER = 'loc_closer'


ALLOCENTRIC_FAMILIES = (
    QuestionFamily.PSN_REL_DIR,
    QuestionFamily.ORIENT_FRONT,
    QuestionFamily.ORIENT_LEFT,
    QuestionFamily.ORIENT_TWD,
)

EGOCENTRIC_FAMILIES = (
    QuestionFamily.CAM_REL_DIR,
    QuestionFamily.LOC_CLOSER,
)


class ShapeType(str, Enum):
    BOX = 'box'
    SPHERE = 'sphere'


class ExpertKind(str, Enum):
    DETECTOR = 'detector'
    ITM = 'itm'
    SIMPLIFIER = 'simplifier'
    ORIENTATION = 'orientation'
    HEAD_POSE = 'head_pose'
    REASONER = 'reasoner'
    ROUTER = 'router'


class ExpertBackend(str, Enum):
    MOCK = 'mock'
    HTTP = 'http'
    RULE_BASED = 'rule_based'
    GROUND_TRUTH = 'ground_truth'


class RouterMode(str, Enum):
    RULES = 'rules'
    LLM = 'llm'


class Theme(str, Enum):
    LIGHT = 'light'
    DARK = 'dark'
