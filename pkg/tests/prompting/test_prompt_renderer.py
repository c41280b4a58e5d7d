import os
import unittest
from alloframe.base.geometry_context import ContextEntry, FrameSpec, GeometryContext
from alloframe.enums import FrameKind, OrientationStrategy
from alloframe.errors import EmptyContextError, ExtractionError, UsageError
from alloframe.prompting.prompt_renderer import (build_key_object_extraction_prompt, build_orientation_prompt,
                                                 build_router_prompt, format_real, load_template, parse_key_objects,
                                                 render_context, render_context_camera, render_context_ego,
                                                 render_final_query)

GOLDEN_DIR = os.path.join(os.path.dirname(os.path.dirname(__file__)), 'golden')


def read_golden(name: str) -> str:
    with open(os.path.join(GOLDEN_DIR, name), 'r', encoding='utf-8') as f:
        text = f.read()
    return text[:-1] if text.endswith('\n') else text


def ego_fixture() -> GeometryContext:
    return GeometryContext(FrameSpec.intrinsic('chair', 'view0'), [
        ContextEntry('bag', [1.0, 0.0, 0.0], [0.3, 0.456, 0.2]),
        ContextEntry('lamp', [-0.5, -1.2, 2.4], [0.125, 0.5, 0.335]),
    ])


def camera_fixture() -> GeometryContext:
    return GeometryContext(FrameSpec.camera('view0'), [
        ContextEntry('chair', [-0.001, 0.0, 3.0], [0.5, 0.9, 0.5]),
        ContextEntry('bag', [1.0, 0.25, 2.0], [0.3, 0.456, 0.2]),
    ])


class TestFormatReal(unittest.TestCase):

    def test_rounding(self):
        self.assertEqual(format_real(1.23456), '1.23')
        self.assertEqual(format_real(0.125), '0.13')
        self.assertEqual(format_real(-0.125), '-0.13')
        self.assertEqual(format_real(2.5, 0), '3')
        self.assertEqual(format_real(1.0), '1.00')
        self.assertEqual(format_real(1.23456, 3), '1.235')

    def test_negative_zero(self):
        self.assertEqual(format_real(-0.0), '0.00')
        self.assertEqual(format_real(-0.004), '0.00')
        self.assertEqual(format_real(-0.005), '-0.01')


class TestContextRendering(unittest.TestCase):

    def test_ego_golden(self):
        self.assertEqual(render_context_ego(ego_fixture()), read_golden('ego_context.txt'))

    def test_camera_golden(self):
        self.assertEqual(render_context_camera(camera_fixture()), read_golden('camera_context.txt'))

    def test_headers(self):
        self.assertTrue(render_context(ego_fixture()).startswith('EGO-CENTRIC 3D GEOMETRY CONTEXT\n'))
        self.assertTrue(render_context(camera_fixture()).startswith('Camera/Viewer-CENTRIC 3D GEOMETRY CONTEXT\n'))
        self.assertIn('(ego object = chair)', render_context(ego_fixture()))

    def test_precision(self):
        text = render_context_ego(ego_fixture(), precision=3)
        self.assertIn('coordinates = (x=-0.500, y=-1.200, z=2.400)', text)
        self.assertIn('dY=0.456', text)

    def test_rerender_is_identical(self):
        context = ego_fixture()
        self.assertEqual(render_context(context), render_context(context))

    def test_wrong_kind(self):
        with self.assertRaises(UsageError):
            render_context_ego(camera_fixture())
        with self.assertRaises(UsageError):
            render_context_camera(ego_fixture())

    def test_empty(self):
        with self.assertRaises(EmptyContextError):
            render_context_ego(GeometryContext(FrameSpec.intrinsic('chair'), []))
        with self.assertRaises(EmptyContextError):
            render_context_camera(GeometryContext(FrameSpec.camera(), []))


class TestFinalQuery(unittest.TestCase):

    def test_ego_golden(self):
        question = 'If I stand at the chair facing where it is facing, is the lamp to my left or right?'
        prompt = render_final_query(render_context(ego_fixture()), question, FrameKind.EGO)
        self.assertEqual(prompt.full_text(), read_golden('ego_final_prompt.txt'))
        self.assertEqual(prompt.question_text, question)

    def test_variants_differ_only_in_system_and_context(self):
        ego = render_final_query('CONTEXT', 'Where is the bag?', FrameKind.EGO)
        camera = render_final_query('CONTEXT', 'Where is the bag?', FrameKind.CAMERA)
        self.assertNotEqual(ego.system_text, camera.system_text)
        self.assertEqual(ego.user_text(), camera.user_text())
        self.assertEqual(ego.user_text(), 'CONTEXT\nQUESTION:\nWhere is the bag?\nReasoning Prompt: \n'
                         + load_template('reasoning'))


class TestKeyObjects(unittest.TestCase):

    def test_prompt_substitutes_question(self):
        prompt = build_key_object_extraction_prompt('Is the ball left of the chair?')
        self.assertIn('Question: Is the ball left of the chair?', prompt)
        self.assertNotIn('{question}', prompt)

    def test_parse(self):
        self.assertEqual(parse_key_objects('person with white trousers, person in blue'),
                         ['person with white trousers', 'person in blue'])
        self.assertEqual(parse_key_objects('a, , b'), ['a', 'b'])
        for reply in ('', ' , ', None):
            with self.assertRaises(ExtractionError):
                parse_key_objects(reply)


class TestExpertPrompts(unittest.TestCase):

    def test_orientation_prompts(self):
        system, prompt = build_orientation_prompt(OrientationStrategy.A, 'chair')
        self.assertEqual(system, '')
        self.assertIn('chair', prompt)
        system, prompt = build_orientation_prompt(OrientationStrategy.B, 'chair', 3, ['front', 'left-front', 'left'])
        self.assertIn('front, left-front, left', prompt)
        system, prompt = build_orientation_prompt(OrientationStrategy.C, 'chair')
        self.assertEqual(system, load_template('orient_c_system'))
        with self.assertRaises(UsageError):
            build_orientation_prompt(OrientationStrategy.B, 'chair')

    def test_router_prompt(self):
        system, prompt = build_router_prompt('Where is the dog?')
        self.assertEqual(system, load_template('router_system'))
        self.assertTrue(prompt.startswith('Example 1:'))
        self.assertIn('Where is the dog?', prompt)

    def test_unknown_template(self):
        with self.assertRaises(UsageError):
            load_template('missing')


if __name__ == '__main__':
    unittest.main()
