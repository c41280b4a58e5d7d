from typing import List, Optional
from alloframe.base.geometry_context import FrameSpec
from alloframe.enums import QuestionFamily, RelationKind
from alloframe.errors import UsageError


class MultipleChoiceQuestion:
    """
    A question reduced to the relation it asks about.

    Attributes:
        text (str): The original question text.
        relation (RelationKind): Relation to decide.
        target (str): Object whose position is queried.
        ref (str): Object the relation is measured against, if any.
        options (List[str]): Answer options as shown to the reasoner.
    """

    def __init__(self, text: str, relation: RelationKind, target: Optional[str], options: List[str],
                 ref: Optional[str] = None):
        if not options:
            raise UsageError("A multiple-choice question needs at least one option")
        self.text = text
        self.relation = RelationKind(relation)
        self.target = target
        self.ref = ref
        self.options = list(options)

    def __repr__(self):
        return (f"MultipleChoiceQuestion(relation={self.relation.value}, target={self.target}, "
                f"ref={self.ref}, options={self.options})")

    def to_dict(self) -> dict:
        return {
            'text': self.text,
            'relation': self.relation.value,
            'target': self.target,
            'ref': self.ref,
            'options': self.options,
        }


class GeneratedQuestion:
    """
    A synthetic question with its gold answer.

    Attributes:
        question_id (str): Identifier unique within a question set.
        scene_id (str): Bundle directory name the question refers to.
        text (str): Natural-language question.
        family (QuestionFamily): Task family.
        options (List[str]): Two to four answer options.
        gold (int): Index of the correct option.
        frame_spec (FrameSpec): Frame the gold answer was computed in.
        ref (str): Reference object.
        target (str): Target object.
    """

    def __init__(self, question_id: str, text: str, family: QuestionFamily, options: List[str], gold: int,
                 frame_spec: FrameSpec, ref: str, target: str, scene_id: Optional[str] = None):
        if not 2 <= len(options) <= 4:
            raise UsageError(f"Question {question_id} has {len(options)} options, expected 2 to 4")
        if not 0 <= gold < len(options):
            raise UsageError(f"Gold index {gold} outside the options of question {question_id}")
        self.question_id = question_id
        self.scene_id = scene_id
        self.text = text
        self.family = QuestionFamily(family)
        self.options = list(options)
        self.gold = int(gold)
        self.frame_spec = frame_spec
        self.ref = ref
        self.target = target

    def __repr__(self):
        return f"GeneratedQuestion(id={self.question_id}, family={self.family.value}, text={self.text!r})"

    @property
    def gold_answer(self) -> str:
        return self.options[self.gold]

    def to_dict(self) -> dict:
        return {
            'id': self.question_id,
            'scene': self.scene_id,
            'text': self.text,
            'family': self.family.value,
            'options': self.options,
            'gold': self.gold,
            'frame_spec': self.frame_spec.to_dict(),
            'ref': self.ref,
            'target': self.target,
        }

    @classmethod
    def from_dict(cls, data: dict):
        return cls(
            question_id=data['id'],
            text=data['text'],
            family=data['family'],
            options=data['options'],
            gold=data['gold'],
            frame_spec=FrameSpec.from_dict(data['frame_spec']),
            ref=data.get('ref'),
            target=data.get('target'),
            scene_id=data.get('scene'),
        )
