import os
import shutil
import tempfile
import unittest
import plotly.graph_objects as go
from alloframe.base.geometry_context import FrameSpec
from alloframe.base.question import GeneratedQuestion
from alloframe.enums import QuestionFamily, Theme
from alloframe.pipeline.evaluation import EvalReport, QuestionRecord
from alloframe.report_builders.html_report_builder import HTMLReportGenerator, build_eval_report, family_accuracy_figure
from alloframe.themes.dark_theme import DarkTheme
from alloframe.themes.light_theme import LightTheme


def record(question_id: str, family: QuestionFamily, correct: bool, error=None, stage=None) -> QuestionRecord:
    question = GeneratedQuestion(question_id, 'q', family, ['left', 'right'], 0, FrameSpec.camera(), 'a', 'b')
    return QuestionRecord(question, 'CAMERA_3D', 'left' if correct else None, correct, error, stage)


class TestHtmlReport(unittest.TestCase):

    def setUp(self):
        self.directory = tempfile.mkdtemp()
        self.report = EvalReport([
            record('q0', QuestionFamily.PSN_REL_DIR, True),
            record('q1', QuestionFamily.CAM_REL_DIR, False, 'GroundingFailureError: <lamp> not found', 'lift'),
        ])

    def tearDown(self):
        shutil.rmtree(self.directory)

    def test_report_contents(self):
        path = os.path.join(self.directory, 'report.html')
        build_eval_report(self.report, path, Theme.DARK)
        with open(path, 'r', encoding='utf-8') as f:
            page = f.read()
        self.assertIn('<title>Spatial Reasoning Evaluation</title>', page)
        self.assertIn(DarkTheme.color_palette['bg_color'], page)
        self.assertIn('Accuracy per family', page)
        self.assertIn('Failed questions', page)
        self.assertIn('&lt;lamp&gt;', page)
        self.assertIn('Allocentric average: 1.000, egocentric average: 0.000', page)

    def test_empty_report_has_no_tables(self):
        path = os.path.join(self.directory, 'empty.html')
        build_eval_report(EvalReport([]), path)
        with open(path, 'r', encoding='utf-8') as f:
            page = f.read()
        self.assertIn('overall accuracy: n/a', page)
        self.assertNotIn('<table', page)

    def test_figure_colors(self):
        fig = family_accuracy_figure(self.report.families, LightTheme)
        self.assertIsInstance(fig, go.Figure)
        self.assertEqual(list(fig.data[0].marker.color), [LightTheme.color_palette['allocentric_color'],
                                                          LightTheme.color_palette['egocentric_color']])

    def test_plotly_script_included_once(self):
        generator = HTMLReportGenerator()
        generator.add_figure(family_accuracy_figure(self.report.families))
        generator.add_figure(family_accuracy_figure(self.report.families))
        self.assertGreater(len(generator.sections[0]), len(generator.sections[1]))


if __name__ == '__main__':
    unittest.main()
