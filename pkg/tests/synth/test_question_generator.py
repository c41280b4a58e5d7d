import unittest
from alloframe.base.scene import SyntheticScene
from alloframe.enums import FrameKind, QuestionFamily
from alloframe.errors import GenerationError, UsageError
from alloframe.synth.oracle import oracle_relation
from alloframe.synth.question_generator import (FAMILY_OPTIONS, FAMILY_RELATIONS, TYPE_TWO_TEMPLATE,
                                                generate_questions)
from alloframe.synth.scene_generator import generate_scene


class TestGenerateQuestions(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.scene = generate_scene(3, 5, n_views=2)

    def test_deterministic_with_ids(self):
        first = generate_questions(self.scene, 11, 20)
        second = generate_questions(self.scene, 11, 20)
        self.assertEqual([q.to_dict() for q in first], [q.to_dict() for q in second])
        self.assertEqual(first[0].question_id, 'seed3-q0000')
        self.assertEqual(first[19].question_id, 'seed3-q0019')
        named = generate_questions(self.scene, 11, 2, scene_id='kitchen')
        self.assertEqual([q.question_id for q in named], ['kitchen-q0000', 'kitchen-q0001'])
        self.assertEqual(named[0].scene_id, 'kitchen')

    def test_gold_matches_oracle(self):
        for q in generate_questions(self.scene, 5, 40):
            relation = FAMILY_RELATIONS[q.family]
            self.assertEqual(q.gold_answer, oracle_relation(self.scene, q.ref, q.target, q.frame_spec, relation))
            self.assertIn(len(q.options), (2, 4))
            self.assertEqual(len(set(q.options)), len(q.options))
            if q.family == QuestionFamily.LOC_CLOSER:
                self.assertEqual(sorted(q.options), sorted([q.ref, q.target]))
            else:
                self.assertEqual(sorted(q.options), sorted(FAMILY_OPTIONS[q.family]))

    def test_family_filter(self):
        questions = generate_questions(self.scene, 2, 10, families=[QuestionFamily.ORIENT_TWD])
        self.assertEqual({q.family for q in questions}, {QuestionFamily.ORIENT_TWD})
        for q in questions:
            self.assertEqual(sorted(q.options), ['no', 'yes'])
            self.assertEqual(q.frame_spec.ref_object, q.ref)

    def test_camera_families_use_first_view(self):
        families = [QuestionFamily.CAM_REL_DIR, QuestionFamily.LOC_CLOSER]
        for q in generate_questions(self.scene, 8, 10, families=families):
            self.assertEqual(q.frame_spec.kind, FrameKind.CAMERA)
            self.assertEqual(q.frame_spec.view_id, self.scene.cameras[0].view_id)

    def test_auxiliary_object_questions(self):
        questions = generate_questions(self.scene, 4, 40, families=[QuestionFamily.PSN_REL_DIR])
        constrained = [q for q in questions if q.frame_spec.aux_object is not None]
        self.assertTrue(constrained)
        for q in constrained:
            self.assertEqual(q.text, TYPE_TWO_TEMPLATE.format(ref=q.ref, aux=q.frame_spec.aux_object, target=q.target))
            self.assertNotIn(q.frame_spec.aux_object, (q.ref, q.target))

    def test_invalid_arguments(self):
        self.assertEqual(generate_questions(self.scene, 0, 0), [])
        with self.assertRaises(UsageError):
            generate_questions(self.scene, 0, -1)
        lonely = SyntheticScene(0, self.scene.objects[:1], self.scene.cameras, self.scene.bounds)
        with self.assertRaises(UsageError):
            generate_questions(lonely, 0, 3)
        with self.assertRaises(GenerationError):
            generate_questions(self.scene, 0, 1, tie_margin=1000.0)


if __name__ == '__main__':
    unittest.main()
