import json
import os
import shutil
import tempfile
import unittest
from alloframe.base.geometry_context import FrameSpec
from alloframe.base.question import GeneratedQuestion
from alloframe.enums import QuestionFamily
from alloframe.errors import UsageError
from alloframe.pipeline.config import PipelineConfig
from alloframe.pipeline.evaluation import (REPORT_SCHEMA_VERSION, EvalReport, QuestionRecord, evaluate,
                                           generate_eval_questions, is_correct, load_questions, load_scene_bundles,
                                           save_questions, summarize_records)
from alloframe.synth.bundle_io import write_bundle
from alloframe.synth.renderer import render_views
from alloframe.synth.scene_generator import generate_scene

GT_CONFIG = {'experts': {'detector': 'ground_truth', 'itm': 'ground_truth', 'head_pose': 'ground_truth'},
             'use_gt_masks': True}
REPORT_KEYS = ['schema_version', 'families', 'allocentric_avg', 'egocentric_avg', 'overall', 'records']
RECORD_KEYS = ['id', 'scene', 'family', 'route', 'answer', 'gold', 'correct', 'error', 'stage', 'trace_sha256']


def question(question_id: str, family: QuestionFamily, gold: int = 0) -> GeneratedQuestion:
    return GeneratedQuestion(question_id, 'q', family, ['left', 'right'], gold, FrameSpec.camera(), 'a', 'b', 's')


class TestEvalReport(unittest.TestCase):

    def test_unweighted_family_averages(self):
        records = [
            QuestionRecord(question('q3', QuestionFamily.PSN_REL_DIR), 'EGO_3D', 'left', True),
            QuestionRecord(question('q1', QuestionFamily.PSN_REL_DIR), 'EGO_3D', 'left', True),
            QuestionRecord(question('q2', QuestionFamily.PSN_REL_DIR), 'EGO_3D', 'right', False),
            QuestionRecord(question('q0', QuestionFamily.ORIENT_TWD), 'EGO_3D', 'left', True),
            QuestionRecord(question('q4', QuestionFamily.CAM_REL_DIR), None, None, False, 'ExtractionError: x', 'reason'),
        ]
        report = EvalReport(records)
        self.assertEqual([record.question.question_id for record in report.records], ['q0', 'q1', 'q2', 'q3', 'q4'])
        self.assertEqual(list(report.families['family']), ['psn_rel_dir', 'cam_rel_dir', 'orient_twd'])
        self.assertAlmostEqual(report.allocentric_avg, (2 / 3 + 1.0) / 2)
        self.assertEqual(report.egocentric_avg, 0.0)
        self.assertEqual(report.overall_accuracy, 3 / 5)
        data = report.to_dict()
        self.assertEqual(list(data), REPORT_KEYS)
        self.assertEqual(data['schema_version'], REPORT_SCHEMA_VERSION)
        self.assertEqual(data['families']['psn_rel_dir'], {'n': 3, 'correct': 2, 'accuracy': 2 / 3})
        self.assertEqual(list(data['records'][0]), RECORD_KEYS)
        self.assertEqual(data['records'][4]['stage'], 'reason')
        self.assertEqual(json.loads(report.to_json()), data)

    def test_empty_report(self):
        report = EvalReport([])
        self.assertTrue(summarize_records([]).empty)
        self.assertIsNone(report.allocentric_avg)
        self.assertIsNone(report.overall_accuracy)
        self.assertEqual(report.to_dict()['families'], {})

    def test_is_correct(self):
        item = question('q0', QuestionFamily.CAM_REL_DIR, gold=1)
        self.assertTrue(is_correct(' Right. ', item))
        self.assertFalse(is_correct('left', item))
        self.assertFalse(is_correct(None, item))


class TestEvaluate(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.directory = tempfile.mkdtemp()
        for index in range(2):
            write_bundle(render_views(generate_scene(10 + index, 3)), os.path.join(cls.directory, f"scene{index:03d}"))
        cls.bundles = load_scene_bundles(cls.directory)
        cls.config = PipelineConfig.from_dict(GT_CONFIG)

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.directory)

    def test_load_scene_bundles(self):
        self.assertEqual(sorted(self.bundles), ['scene000', 'scene001'])
        single = load_scene_bundles(os.path.join(self.directory, 'scene001'))
        self.assertEqual(list(single), ['scene001'])
        with self.assertRaises(UsageError):
            load_scene_bundles(os.path.join(self.directory, 'missing'))

    def test_generate_spreads_questions(self):
        questions = generate_eval_questions(self.bundles, 7, 42)
        self.assertEqual([q.scene_id for q in questions], ['scene000'] * 4 + ['scene001'] * 3)
        self.assertEqual(questions[4].question_id, 'scene001-q0000')

    def test_questions_file_round_trip(self):
        questions = generate_eval_questions(self.bundles, 6, 1, [QuestionFamily.ORIENT_LEFT])
        path = os.path.join(self.directory, 'questions.json')
        save_questions(path, questions)
        loaded = load_questions(path)
        self.assertEqual([q.to_dict() for q in loaded], [q.to_dict() for q in questions])
        with self.assertRaises(UsageError):
            load_questions(os.path.join(self.directory, 'nothing.json'))

    def test_parallel_matches_serial(self):
        questions = generate_eval_questions(self.bundles, 24, 42)
        serial = evaluate(questions, self.bundles, self.config, parallel=1)
        parallel = evaluate(questions, self.bundles, self.config, parallel=8)
        self.assertEqual(serial.to_json(), parallel.to_json())
        self.assertEqual(serial.to_dict()['overall']['n'], 24)
        self.assertGreater(serial.overall_accuracy, 0.8)

    def test_failures_become_records(self):
        questions = [GeneratedQuestion('scene000-x', 'Is the piano to the left or right of the harp?',
                                       QuestionFamily.CAM_REL_DIR, ['left', 'right'], 0, FrameSpec.camera(),
                                       'harp', 'piano', 'scene000')]
        record = evaluate(questions, self.bundles, self.config).records[0]
        self.assertFalse(record.correct)
        self.assertEqual(record.stage, 'key_objects')
        self.assertTrue(record.error.startswith('ExtractionError'))

    def test_invalid_arguments(self):
        questions = generate_eval_questions(self.bundles, 2, 0)
        with self.assertRaises(UsageError):
            evaluate(questions, self.bundles, self.config, parallel=0)
        questions[0].scene_id = 'elsewhere'
        with self.assertRaises(UsageError):
            evaluate(questions, self.bundles, self.config)


if __name__ == '__main__':
    unittest.main()
