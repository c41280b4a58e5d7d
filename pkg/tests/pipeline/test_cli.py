import io
import itertools
import json
import os
import shutil
import tempfile
import unittest
from unittest.mock import patch
import numpy as np
from alloframe.base.geometry_context import FrameSpec
from alloframe.cli import main
from alloframe.enums import RelationKind
from alloframe.errors import EmptyLiftError
from alloframe.synth.bundle_io import read_bundle
from alloframe.synth.oracle import oracle_relation

GT_CONFIG = {'experts': {'detector': 'ground_truth', 'itm': 'ground_truth', 'head_pose': 'ground_truth'}}


def run(*argv):
    """
    Runs the command line with captured streams.

    Returns:
        tuple: (exit code, stdout text, stderr text).
    """
    with patch('sys.stdout', new_callable=io.StringIO) as out, patch('sys.stderr', new_callable=io.StringIO) as err:
        code = main(list(argv))
    return code, out.getvalue(), err.getvalue()


class TestCli(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.directory = tempfile.mkdtemp()
        cls.scene = os.path.join(cls.directory, 'scene')
        code, _, _ = run('synth', '--seed', '5', '--n-objects', '3', '--out', cls.scene)
        assert code == 0
        cls.bundle = read_bundle(cls.scene)
        cls.names = cls.bundle.object_names
        cls.config = cls.path('config.json')
        with open(cls.config, 'w', encoding='utf-8') as f:
            json.dump(GT_CONFIG, f)
        cls.states = cls.path('states.json')
        code, _, _ = run('lift', '--scene', cls.scene, '--objects', ','.join(cls.names), '--use-gt-masks',
                         '--out', cls.states)
        assert code == 0

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.directory)

    @classmethod
    def path(cls, name: str) -> str:
        return os.path.join(cls.directory, name)

    def read_json(self, name: str) -> dict:
        with open(self.path(name), 'r', encoding='utf-8') as f:
            return json.load(f)

    def test_usage_errors(self):
        self.assertEqual(run()[0], 2)
        self.assertEqual(run('synth')[0], 2)
        self.assertEqual(run('synth', '--out', self.path('bad'), '--noise', '-1')[0], 2)
        self.assertEqual(run('lift', '--scene', self.path('nowhere'), '--objects', 'ball')[0], 2)

    def test_synth_refuses_non_empty_directory(self):
        self.assertEqual(run('synth', '--out', self.scene)[0], 2)
        target = self.path('multi')
        self.assertEqual(run('synth', '--out', target, '--scenes', '2', '--views', '2')[0], 0)
        self.assertEqual(sorted(os.listdir(target)), ['scene000', 'scene001'])
        code, _, err = run('synth', '--out', target, '--views', '2')
        self.assertEqual(code, 2)
        self.assertIn('--force', err)
        self.assertEqual(run('synth', '--out', target, '--views', '2', '--force')[0], 0)

    def test_lift_centroids_near_ground_truth(self):
        data = self.read_json('states.json')
        self.assertEqual([item['name'] for item in data['objects']], self.names)
        for item in data['objects']:
            truth = self.bundle.ground_truth.get_object(item['name'])
            np.testing.assert_allclose(item['centroid'], truth.center, atol=0.05)
            self.assertIn('points', item)
            self.assertIn('relaxation', item)

    def test_lift_without_valid_depth(self):
        with patch('alloframe.cli.AllocentricPipeline.lift', side_effect=EmptyLiftError("No valid depth")):
            code, _, err = run('lift', '--scene', self.scene, '--objects', self.names[0], '--use-gt-masks')
        self.assertEqual(code, 3)
        self.assertIn('No valid depth', err)

    def test_frame_from_auxiliary_object(self):
        ref, aux = self.names[0], self.names[1]
        out = self.path('frame_aux.json')
        self.assertEqual(run('frame', '--states', self.states, '--ref', ref, '--aux', aux, '--out', out)[0], 0)
        frame = self.read_json('frame_aux.json')
        objects = {item['name']: np.array(item['centroid']) for item in self.read_json('states.json')['objects']}
        expected = (objects[aux] - objects[ref]) / np.linalg.norm(objects[aux] - objects[ref])
        np.testing.assert_allclose(frame['frame']['front'], expected, atol=1e-12)
        np.testing.assert_allclose(frame['frame']['origin'], objects[ref], atol=1e-12)
        self.assertEqual(frame['frame_spec']['front_source'], 'constraint')

    def test_frame_from_orientation_label(self):
        out = self.path('frame_label.json')
        code, _, _ = run('frame', '--states', self.states, '--ref', self.names[0], '--scene', self.scene,
                         '--orient-view', 'view2', '--orient-label', 'front', '--out', out)
        self.assertEqual(code, 0)
        rotation = self.bundle.get_view('view2').pose.rotation
        np.testing.assert_allclose(self.read_json('frame_label.json')['frame']['front'],
                                   rotation.T @ np.array([0.0, 0.0, -1.0]), atol=1e-9)

    def test_frame_errors(self):
        ref = self.names[0]
        self.assertEqual(run('frame', '--states', self.states, '--ref', ref, '--aux', ref)[0], 5)
        self.assertEqual(run('frame', '--states', self.states, '--ref', ref)[0], 2)
        self.assertEqual(run('frame', '--states', self.states, '--ref', 'piano', '--aux', ref)[0], 2)
        self.assertEqual(run('frame', '--states', self.states, '--ref', ref, '--scene', self.scene,
                             '--orient-label', 'sideways')[0], 2)

    def test_context_camera_and_ego(self):
        code, text, _ = run('context', '--states', self.states, '--frame', 'camera:view0', '--scene', self.scene,
                            '--precision', '3')
        self.assertEqual(code, 0)
        self.assertTrue(text.startswith('Camera/Viewer-CENTRIC 3D GEOMETRY CONTEXT'))
        self.assertRegex(text, r"coordinates = \(x=-?\d+\.\d{3}, y=-?\d+\.\d{3}, z=-?\d+\.\d{3}\)")
        frame = self.path('frame_ctx.json')
        run('frame', '--states', self.states, '--ref', self.names[0], '--aux', self.names[1], '--out', frame)
        code, text, _ = run('context', '--states', self.states, '--frame', frame)
        self.assertEqual(code, 0)
        self.assertTrue(text.startswith('EGO-CENTRIC 3D GEOMETRY CONTEXT'))
        self.assertEqual(run('context', '--states', self.states, '--frame', 'camera:view0')[0], 2)

    def test_answer_prints_answer_and_trace(self):
        scene = self.bundle.ground_truth
        center = scene.cameras[0].pose.camera_center()

        def distance_gap(pair):
            return abs(np.linalg.norm(scene.get_object(pair[0]).center - center)
                       - np.linalg.norm(scene.get_object(pair[1]).center - center))

        ref, target = max(itertools.combinations(self.names, 2), key=distance_gap)
        code, text, _ = run('answer', '--scene', self.scene, '--config', self.config, '--use-gt-masks',
                            '--question', f"Which is closer to the camera, the {ref} or the {target}?")
        self.assertEqual(code, 0)
        answer, payload = text.split('\n', 1)
        self.assertEqual(answer, oracle_relation(scene, ref, target, FrameSpec.camera('view0'), RelationKind.CLOSER))
        trace = json.loads(payload)
        self.assertEqual(trace['route'], 'CAMERA_3D')
        self.assertEqual([stage['stage'] for stage in trace['trace']['stages']],
                         ['route', 'key_objects', 'lift', 'frame', 'context', 'reason'])

    def test_answer_exit_codes(self):
        question = f"Is the {self.names[0]} to the left or right of the {self.names[1]}?"
        # mock detectors find nothing
        self.assertEqual(run('answer', '--scene', self.scene, '--question', question)[0], 3)
        self.assertEqual(run('answer', '--scene', self.scene, '--question', 'Is the harp left of the piano?')[0], 6)
        strict = self.path('strict.json')
        with open(strict, 'w', encoding='utf-8') as f:
            json.dump({'mock': {'strict': True}}, f)
        code, _, err = run('answer', '--scene', self.scene, '--config', strict, '--question', question)
        self.assertEqual(code, 4)
        self.assertIn('[lift]', err)

    def test_eval_writes_reports(self):
        report, html = self.path('report.json'), self.path('report.html')
        questions = self.path('questions.json')
        code, _, _ = run('eval', '--scenes', self.scene, '--config', self.config, '--use-gt-masks', '--generate', '12',
                         '--families', 'psn_rel_dir,orient_left', '--save-questions', questions, '--report', report,
                         '--html', html, '--theme', 'dark')
        self.assertEqual(code, 0)
        data = self.read_json('report.json')
        self.assertEqual(data['schema_version'], 1)
        self.assertEqual(data['overall']['n'], 12)
        self.assertLessEqual(set(data['families']), {'psn_rel_dir', 'orient_left'})
        self.assertTrue(os.path.isfile(html))
        again = self.path('again.json')
        code, _, _ = run('eval', '--scenes', self.scene, '--config', self.config, '--use-gt-masks', '--questions',
                         questions, '--parallel', '4', '--report', again)
        self.assertEqual(code, 0)
        self.assertEqual(self.read_json('again.json'), data)

    def test_eval_usage_errors(self):
        self.assertEqual(run('eval', '--scenes', self.scene)[0], 2)
        self.assertEqual(run('eval', '--scenes', self.scene, '--generate', '3', '--families', 'poetry')[0], 2)


if __name__ == '__main__':
    unittest.main()
