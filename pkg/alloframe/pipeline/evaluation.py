"""
Evaluation harness: answers question sets over scene bundles and aggregates per-family accuracy.
"""
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence
import pandas as pd
from alloframe.base.question import GeneratedQuestion
from alloframe.base.scene import SceneBundle
from alloframe.enums import ALLOCENTRIC_FAMILIES, EGOCENTRIC_FAMILIES, QuestionFamily
from alloframe.errors import AlloframeError, UsageError
from alloframe.pipeline.config import PipelineConfig
from alloframe.pipeline.expert_registry import ExpertRegistry
from alloframe.pipeline.pipeline import AllocentricPipeline, StateCache
from alloframe.prompting.question_parser import normalize_text
from alloframe.synth.bundle_io import read_bundle
from alloframe.synth.question_generator import generate_questions

logger = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION = 1


class QuestionRecord:
    """
    Outcome of one evaluated question.
    """

    def __init__(self, question: GeneratedQuestion, route: Optional[str], answer: Optional[str],
                 correct: bool, error: Optional[str] = None, stage: Optional[str] = None,
                 trace_sha256: Optional[str] = None):
        self.question = question
        self.route = route
        self.answer = answer
        self.correct = bool(correct)
        self.error = error
        self.stage = stage
        self.trace_sha256 = trace_sha256

    def __repr__(self):
        return f"QuestionRecord(id={self.question.question_id}, answer={self.answer!r}, correct={self.correct})"

    def to_dict(self) -> dict:
        return {
            'id': self.question.question_id,
            'scene': self.question.scene_id,
            'family': self.question.family.value,
            'route': self.route,
            'answer': self.answer,
            'gold': self.question.gold_answer,
            'correct': self.correct,
            'error': self.error,
            'stage': self.stage,
            'trace_sha256': self.trace_sha256,
        }


class EvalReport:
    """
    Per-family accuracy with unweighted allocentric and egocentric averages.

    Attributes:
        records (List[QuestionRecord]): Records ordered by question id.
        families (pd.DataFrame): One row per family with n, correct and accuracy.
    """

    def __init__(self, records: List[QuestionRecord]):
        self.records = sorted(records, key=lambda record: record.question.question_id)
        self.families = summarize_records(self.records)

    def __repr__(self):
        return (f"EvalReport(n={len(self.records)}, allocentric_avg={self.allocentric_avg}, "
                f"egocentric_avg={self.egocentric_avg})")

    def _average(self, families: Sequence[QuestionFamily]) -> Optional[float]:
        rows = self.families[self.families['family'].isin([family.value for family in families])]
        if rows.empty:
            return None
        return float(rows['accuracy'].mean())

    @property
    def allocentric_avg(self) -> Optional[float]:
        return self._average(ALLOCENTRIC_FAMILIES)

    @property
    def egocentric_avg(self) -> Optional[float]:
        return self._average(EGOCENTRIC_FAMILIES)

    @property
    def overall_accuracy(self) -> Optional[float]:
        if not self.records:
            return None
        return sum(record.correct for record in self.records) / len(self.records)

    def to_dict(self) -> dict:
        return {
            'schema_version': REPORT_SCHEMA_VERSION,
            'families': {
                row['family']: {'n': int(row['n']), 'correct': int(row['correct']), 'accuracy': float(row['accuracy'])}
                for row in self.families.to_dict('records')
            },
            'allocentric_avg': self.allocentric_avg,
            'egocentric_avg': self.egocentric_avg,
            'overall': {
                'n': len(self.records),
                'correct': int(sum(record.correct for record in self.records)),
                'accuracy': self.overall_accuracy,
            },
            'records': [record.to_dict() for record in self.records],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + '\n'

    def save(self, path: str):
        with open(path, 'w', encoding='utf-8') as f:
            f.write(self.to_json())


def summarize_records(records: List[QuestionRecord]) -> pd.DataFrame:
    """
    Groups records by family in the canonical family order.

    Returns:
        pd.DataFrame: Columns family, n, correct, accuracy.
    """
    columns = ['family', 'n', 'correct', 'accuracy']
    if not records:
        return pd.DataFrame(columns=columns)
    df = pd.DataFrame([{'family': record.question.family.value, 'correct': int(record.correct)}
                       for record in records])
    summary = df.groupby('family')['correct'].agg(['count', 'sum']).reset_index()
    summary = summary.rename(columns={'count': 'n', 'sum': 'correct'})
    summary['accuracy'] = summary['correct'] / summary['n']
    order = {family.value: index for index, family in enumerate(QuestionFamily)}
    summary = summary.sort_values('family', key=lambda column: column.map(order)).reset_index(drop=True)
    return summary[columns]


def is_correct(answer: Optional[str], question: GeneratedQuestion) -> bool:
    return answer is not None and normalize_text(answer) == normalize_text(question.gold_answer)


def load_questions(path: str) -> List[GeneratedQuestion]:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except (OSError, ValueError) as e:
        raise UsageError(f"Cannot read questions {path}: {e}")
    return [GeneratedQuestion.from_dict(item) for item in data.get('questions', [])]


def save_questions(path: str, questions: List[GeneratedQuestion]):
    with open(path, 'w', encoding='utf-8') as f:
        json.dump({'questions': [question.to_dict() for question in questions]}, f, indent=2)
        f.write('\n')


def load_scene_bundles(scenes_dir: str) -> Dict[str, SceneBundle]:
    """
    Reads every bundle under scenes_dir, keyed by directory name. scenes_dir may itself be a bundle.
    """
    if os.path.isfile(os.path.join(scenes_dir, 'manifest.json')):
        return {os.path.basename(os.path.normpath(scenes_dir)): read_bundle(scenes_dir)}
    if not os.path.isdir(scenes_dir):
        raise UsageError(f"Scenes directory {scenes_dir} does not exist")
    bundles = {}
    for name in sorted(os.listdir(scenes_dir)):
        path = os.path.join(scenes_dir, name)
        if os.path.isfile(os.path.join(path, 'manifest.json')):
            bundles[name] = read_bundle(path)
    if not bundles:
        raise UsageError(f"No scene bundles under {scenes_dir}")
    return bundles


def generate_eval_questions(bundles: Dict[str, SceneBundle], n: int, seed: int,
                            families: Optional[Sequence[QuestionFamily]] = None) -> List[GeneratedQuestion]:
    """
    Spreads n questions evenly over the synthetic bundles, seeding each scene with seed + its index.
    """
    scene_ids = sorted(bundles)
    questions = []
    for index, scene_id in enumerate(scene_ids):
        scene = bundles[scene_id].ground_truth
        if scene is None:
            raise UsageError(f"Scene {scene_id} has no ground truth to generate questions from")
        count = n // len(scene_ids) + (1 if index < n % len(scene_ids) else 0)
        questions.extend(generate_questions(scene, seed + index, count, families, scene_id=scene_id))
    return questions


def evaluate_question(pipeline: AllocentricPipeline, question: GeneratedQuestion) -> QuestionRecord:
    """
    Answers one question; pipeline errors become incorrect records carrying the error and stage.
    """
    try:
        result = pipeline.answer(question.text, options=question.options)
    except AlloframeError as e:
        logger.info("Question %s failed in stage %s: %s", question.question_id, e.stage, e)
        return QuestionRecord(question, None, None, False, error=f"{type(e).__name__}: {e}", stage=e.stage)
    return QuestionRecord(question, result.route.value, result.answer, is_correct(result.answer, question),
                          trace_sha256=result.trace.digest())


def evaluate(questions: List[GeneratedQuestion], bundles: Dict[str, SceneBundle], config: PipelineConfig,
             parallel: int = 1, registry: Optional[ExpertRegistry] = None) -> EvalReport:
    """
    Evaluates questions with up to `parallel` concurrent pipelines.

    Lifted objects are cached per scene for the whole run; records are reduced in question-id
    order, so the report does not depend on the degree of parallelism.

    Raises:
        UsageError: If parallel < 1 or a question refers to an unknown scene.
    """
    if parallel < 1:
        raise UsageError(f"parallel must be >= 1, got {parallel}")
    registry = registry or ExpertRegistry(config)
    cache = StateCache()
    pipelines = {}
    for question in questions:
        scene_id = question.scene_id
        if scene_id not in bundles:
            if len(bundles) == 1 and scene_id is None:
                scene_id = next(iter(bundles))
            else:
                raise UsageError(f"Question {question.question_id} refers to unknown scene {scene_id!r}")
        if scene_id not in pipelines:
            bundle = bundles[scene_id]
            pipelines[scene_id] = AllocentricPipeline(bundle, registry.build(bundle), config, cache)
        question.scene_id = scene_id

    logger.info("Evaluating %d question(s) over %d scene(s) with %d worker(s)", len(questions), len(pipelines),
                parallel)
    if parallel == 1:
        records = [evaluate_question(pipelines[question.scene_id], question) for question in questions]
    else:
        with ThreadPoolExecutor(max_workers=parallel) as executor:
            records = list(executor.map(lambda question: evaluate_question(pipelines[question.scene_id], question),
                                        questions))
    return EvalReport(records)
