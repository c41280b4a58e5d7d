import unittest
from unittest.mock import Mock
import numpy as np
from alloframe.base.camera import CameraIntrinsics, CameraView
from alloframe.base.geometry_context import FrameSpec
from alloframe.base.mask import Mask
from alloframe.base.object_state import ObjectState
from alloframe.base.scene import SceneBundle, SyntheticObject, SyntheticScene
from alloframe.enums import RelationKind, RouteLabel, ShapeType
from alloframe.errors import ExtractionError, GroundingFailureError, UsageError
from alloframe.experts.mock_experts import MockExperts, MockScript
from alloframe.grounding.orientation import snap_to_label
from alloframe.pipeline.config import PipelineConfig
from alloframe.pipeline.expert_registry import ExpertRegistry
from alloframe.pipeline.pipeline import AllocentricPipeline, LiftedObject, StageTrace, StateCache, is_human_like
from alloframe.prompting.router import RouteDecision
from alloframe.synth.oracle import oracle_relation
from alloframe.synth.renderer import render_views
from alloframe.synth.scene_generator import look_at_pose, ring_cameras

GT_EXPERTS = {'detector': 'ground_truth', 'itm': 'ground_truth', 'head_pose': 'ground_truth'}
EGO_STAGES = ['route', 'key_objects', 'lift', 'frame', 'context', 'reason']


def living_room() -> SyntheticScene:
    """
    A chair facing +x at the origin, a ball 1 m along +z and a lamp 1.2 m along -x.
    """
    objects = [
        SyntheticObject('chair', ShapeType.BOX, [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], half_sizes=[0.15, 0.15, 0.15]),
        SyntheticObject('ball', ShapeType.SPHERE, [0.0, 0.0, 1.0], [1.0, 0.0, 0.0], radius=0.12),
        SyntheticObject('lamp', ShapeType.BOX, [-1.2, 0.0, 0.0], [0.0, 0.0, 1.0], half_sizes=[0.12, 0.12, 0.12]),
    ]
    cameras = ring_cameras(np.zeros(3), 8, np.random.default_rng(0))
    return SyntheticScene(0, objects, cameras, ([-3.0, -1.0, -3.0], [3.0, 1.0, 3.0]))


class TestAllocentricPipeline(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.scene = living_room()
        cls.bundle = render_views(cls.scene)

    def setUp(self):
        self.config = PipelineConfig(experts=GT_EXPERTS, use_gt_masks=True)
        self.experts = ExpertRegistry(self.config).build(self.bundle)
        self.pipeline = AllocentricPipeline(self.bundle, self.experts, self.config)

    def test_intrinsic_ego_question_matches_oracle(self):
        result = self.pipeline.answer("From the perspective of the chair, is the ball on the left or right?")
        oracle = oracle_relation(self.scene, 'chair', 'ball', FrameSpec.intrinsic('chair'), RelationKind.LEFT_RIGHT)
        self.assertEqual(oracle, 'left')
        self.assertEqual(result.answer, oracle)
        self.assertEqual(result.route, RouteLabel.EGO_3D)
        self.assertEqual(result.trace.stage_names(), EGO_STAGES)
        frame_stage = result.trace.stages[3]
        self.assertEqual(frame_stage['output']['source'], 'head_pose')
        self.assertEqual(frame_stage['output']['frame_spec']['front_source'], 'intrinsic')

    def test_intrinsic_front_behind(self):
        result = self.pipeline.answer("From the chair's perspective, is the lamp in front of it or behind it?",
                                      options=['in front', 'behind'])
        self.assertEqual(result.answer, 'behind')

    def test_constraint_frame_question(self):
        question = "If I stand at the chair facing the lamp, where is the ball?"
        result = self.pipeline.answer(question, options=['front', 'behind', 'left', 'right'])
        oracle = oracle_relation(self.scene, 'chair', 'ball', FrameSpec.constraint('chair', 'lamp'),
                                 RelationKind.DIRECTION4)
        self.assertEqual(oracle, 'right')
        self.assertEqual(result.answer, oracle)
        key_objects = result.trace.stages[1]['output']
        self.assertEqual((key_objects['ref'], key_objects['aux']), ('chair', 'lamp'))

    def test_camera_question_defaults_to_camera_route(self):
        # the view where the chair-to-ball offset is most horizontal in the image
        delta = self.scene.get_object('ball').center - self.scene.get_object('chair').center
        view = max(self.bundle.views, key=lambda v: abs(v.pose.rotation[0] @ delta))
        question = "Is the ball to the left or right of the chair?"
        result = self.pipeline.answer(question, view_id=view.view_id)
        self.assertEqual(result.route, RouteLabel.CAMERA_3D)
        self.assertEqual(result.answer, oracle_relation(self.scene, 'chair', 'ball', FrameSpec.camera(view.view_id),
                                                        RelationKind.LEFT_RIGHT))
        self.assertEqual(result.options, ['left', 'right'])

    def test_attribute_question_skips_geometry(self):
        result = self.pipeline.answer("Which direction is the chair facing?")
        self.assertEqual(result.route, RouteLabel.ATTR)
        self.assertEqual(result.trace.stage_names(), ['route', 'key_objects', 'ground', 'orientation'])
        self.assertIsNone(result.reasoner_answer)
        view = self.bundle.get_view(result.trace.stages[2]['output']['view'])
        expected = snap_to_label(view.pose.rotation @ self.scene.get_object('chair').front_dir)
        self.assertEqual(result.answer, expected.value)

    def test_key_object_override(self):
        result = self.pipeline.answer("From the perspective of the chair, is the ball on the left or right?",
                                      objects=['chair', 'ball'])
        self.assertEqual(result.trace.stages[1]['output']['source'], 'override')
        self.assertEqual(result.answer, 'left')

    def test_stage_errors_are_tagged(self):
        with self.assertRaises(GroundingFailureError) as context:
            self.pipeline.answer("From the perspective of the chair, is the piano on the left or right?",
                                 objects=['chair', 'piano'])
        self.assertEqual(context.exception.stage, 'lift')
        with self.assertRaises(ExtractionError) as context:
            self.pipeline.answer("Is the piano to the left or right of the harp?")
        self.assertEqual(context.exception.stage, 'key_objects')

    def test_lifted_objects_are_cached(self):
        cache = StateCache()
        pipeline = AllocentricPipeline(self.bundle, self.experts, self.config, cache)
        first = pipeline.lift('ball')
        self.assertIs(pipeline.lift('ball'), first)
        self.assertEqual(len(cache), 1)
        np.testing.assert_allclose(first.state.centroid, self.scene.get_object('ball').center, atol=0.05)
        self.assertIn(first.best_view(self.bundle.views), first.observations)

    def test_trace_is_reproducible(self):
        question = "From the perspective of the chair, is the ball on the left or right?"
        first = self.pipeline.answer(question)
        second = AllocentricPipeline(self.bundle, self.experts, self.config).answer(question)
        self.assertEqual(first.trace.digest(), second.trace.digest())


class TestLanguageModelExperts(unittest.TestCase):

    def test_scripted_router_and_reasoner(self):
        bundle = render_views(living_room())
        question = "From the perspective of the chair, is the ball on the left or right?"
        script = MockScript.from_dict({
            'route': {question: 'EGO_3D'},
            'extract': {question: 'chair, ball'},
            'reason': {question: "⟨think⟩the ball has x < 0⟨/think⟩ \\boxed{left}"},
        })
        config = PipelineConfig(experts=dict(GT_EXPERTS, reasoner='mock'), use_gt_masks=True, router='llm')
        experts = ExpertRegistry(config).build(bundle)
        mock = MockExperts(script)
        experts.router = mock
        experts.reasoner = mock
        result = AllocentricPipeline(bundle, experts, config).answer(question)
        self.assertEqual(result.answer, 'left')
        self.assertEqual(result.reasoner_answer.chain, 'the ball has x < 0')
        self.assertEqual([kind for kind, _ in mock.calls], ['router', 'reasoner', 'reasoner'])
        self.assertEqual(result.trace.stages[1]['output']['source'], 'expert')
        self.assertIn('EGO-CENTRIC 3D GEOMETRY CONTEXT', result.trace.stages[4]['output']['context'])


class TestHelpers(unittest.TestCase):

    def test_stage_trace(self):
        trace = StageTrace()
        trace.record('route', {'question': 'q'}, {'label': 'ATTR'})
        with self.assertRaises(UsageError):
            trace.record('route', {}, {})
        other = StageTrace()
        other.record('route', {'question': 'q'}, {'label': 'ATTR'})
        self.assertEqual(trace.digest(), other.digest())
        self.assertEqual(len(trace.stages[0]['input_sha256']), 64)

    def test_state_cache_computes_once(self):
        cache = StateCache()
        compute = Mock(return_value='lifted')
        self.assertEqual(cache.get_or_compute(('scene', 'ball'), compute), 'lifted')
        self.assertEqual(cache.get_or_compute(('scene', 'ball'), compute), 'lifted')
        compute.assert_called_once()

    def test_human_like(self):
        self.assertTrue(is_human_like('the tall man'))
        self.assertTrue(is_human_like('Dog'))
        self.assertFalse(is_human_like('wooden chair'))


class TestDownHint(unittest.TestCase):
    """
    view0 is rolled so that its y-axis points along world +x, view1 is level and sees the chair best.
    """

    def setUp(self):
        intrinsics = CameraIntrinsics(50.0, 50.0, 20.0, 15.0)
        rolled = look_at_pose([0.0, 0.0, -3.0], np.zeros(3), np.array([1.0, 0.0, 0.0]))
        self.views = [CameraView('view0', 40, 30, intrinsics, rolled),
                      CameraView('view1', 40, 30, intrinsics, look_at_pose([3.0, 0.0, 0.0], np.zeros(3)))]
        bundle = SceneBundle(self.views, ['chair', 'lamp'])
        self.pipeline = AllocentricPipeline(bundle, Mock(), PipelineConfig())
        small, large = np.zeros((30, 40), dtype=bool), np.zeros((30, 40), dtype=bool)
        small[10:12, 10:12] = True
        large[5:25, 5:35] = True
        observations = {'view0': (Mask.from_array(small), (10, 10, 12, 12), 0.9),
                        'view1': (Mask.from_array(large), (5, 5, 35, 25), 0.9)}
        self.lifted = {name: LiftedObject(ObjectState(name, [centroid], centroid, [0.1, 0.1, 0.1], ['view0', 'view1']),
                                          observations, {})
                       for name, centroid in [('chair', [0.0, 0.0, 0.0]), ('lamp', [0.0, 0.0, 1.5])]}

    def test_constraint_frame_uses_first_view(self):
        self.assertEqual(self.lifted['chair'].best_view(self.views), 'view1')
        frame, spec, detail = self.pipeline.reference_frame(RouteDecision(RouteLabel.EGO_3D), 'chair', 'lamp',
                                                            self.lifted, None)
        np.testing.assert_allclose(frame.front, [0.0, 0.0, 1.0], atol=1e-12)
        np.testing.assert_allclose(frame.down, self.views[0].pose.rotation[1], atol=1e-12)
        self.assertEqual(detail['view'], 'view0')
        self.assertEqual(spec, FrameSpec.constraint('chair', 'lamp'))


if __name__ == '__main__':
    unittest.main()
