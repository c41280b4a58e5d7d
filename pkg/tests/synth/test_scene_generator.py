import itertools
import unittest
import numpy as np
from alloframe.errors import UsageError
from alloframe.synth.renderer import render_labels
from alloframe.synth.scene_generator import (MIN_SEPARATION, MIN_VISIBLE_PIXELS, VOCABULARY, generate_scene,
                                             look_at_pose, ring_cameras)


class TestLookAtPose(unittest.TestCase):

    def test_target_on_optical_axis(self):
        pose = look_at_pose([0.0, 0.0, -5.0], [0.0, 0.0, 0.0])
        np.testing.assert_allclose(pose.apply([0.0, 0.0, 0.0]), [0.0, 0.0, 5.0], atol=1e-12)
        np.testing.assert_allclose(pose.camera_center(), [0.0, 0.0, -5.0], atol=1e-12)
        # camera y follows world down
        np.testing.assert_allclose(pose.rotation[1], [0.0, 1.0, 0.0], atol=1e-12)

    def test_ring_cameras_look_at_center(self):
        center = np.array([0.5, 0.1, -0.3])
        cameras = ring_cameras(center, 6, np.random.default_rng(0))
        self.assertEqual([camera.view_id for camera in cameras], [f"view{i}" for i in range(6)])
        for camera in cameras:
            in_camera = camera.pose.apply(center)
            np.testing.assert_allclose(in_camera[:2], [0.0, 0.0], atol=1e-9)
            self.assertGreater(in_camera[2], 0.0)
            self.assertAlmostEqual(camera.pose.camera_center()[1], center[1])


class TestGenerateScene(unittest.TestCase):

    def test_deterministic(self):
        self.assertEqual(generate_scene(7, 4).to_dict(), generate_scene(7, 4).to_dict())
        self.assertNotEqual(generate_scene(7, 4).to_dict(), generate_scene(8, 4).to_dict())

    def test_layout_constraints(self):
        for seed in range(5):
            scene = generate_scene(seed, 5, n_views=2)
            names = scene.object_names()
            self.assertEqual(len(set(names)), 5)
            self.assertTrue(set(names) <= set(VOCABULARY))
            for first, second in itertools.combinations(scene.objects, 2):
                self.assertGreaterEqual(first.aabb_gap(second), MIN_SEPARATION)
            for obj in scene.objects:
                self.assertTrue(np.all(obj.aabb_min >= scene.bounds[0] - 1e-12))
                self.assertTrue(np.all(obj.aabb_max <= scene.bounds[1] + 1e-12))
                self.assertAlmostEqual(np.linalg.norm(obj.front_dir), 1.0)
                self.assertEqual(obj.front_dir[1], 0.0)
            labels, _ = render_labels(scene, scene.cameras[0])
            counts = np.bincount(labels[labels >= 0], minlength=len(names))
            self.assertTrue(np.all(counts >= MIN_VISIBLE_PIXELS))

    def test_view_count(self):
        self.assertEqual(len(generate_scene(3, 2, n_views=3).cameras), 3)

    def test_invalid_arguments(self):
        for kwargs in ({'n_objects': 1}, {'n_objects': len(VOCABULARY) + 1}, {'n_objects': 3, 'n_views': 0},
                       {'n_objects': 3, 'bounds': ([0, 0, 0], [0.2, 1, 1])}):
            with self.subTest(kwargs=kwargs):
                with self.assertRaises(UsageError):
                    generate_scene(0, **kwargs)


if __name__ == '__main__':
    unittest.main()
