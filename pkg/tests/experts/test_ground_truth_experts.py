import unittest
import numpy as np
from alloframe.base.scene import SceneBundle
from alloframe.errors import UsageError
from alloframe.experts.base import ImageRef
from alloframe.experts.ground_truth_experts import GroundTruthExperts
from alloframe.grounding.orientation import front_from_gaze
from alloframe.synth.renderer import render_views
from alloframe.synth.scene_generator import generate_scene


class TestGroundTruthExperts(unittest.TestCase):

    def setUp(self):
        self.scene = generate_scene(4, 3, n_views=2)
        self.bundle = render_views(self.scene)
        self.experts = GroundTruthExperts(self.bundle)
        self.first, self.second, self.third = self.bundle.object_names
        self.view_ref = ImageRef('view0', None)

    def crop(self, name: str) -> ImageRef:
        mask = self.bundle.masks[('view0', name)]
        return ImageRef('view0', None, mask.bounding_box(), mask)

    def test_detect_by_name(self):
        detections = self.experts.detect(self.view_ref, self.first)
        self.assertEqual(len(detections), 1)
        self.assertEqual(detections[0].mask, self.bundle.masks[('view0', self.first)])
        self.assertEqual(detections[0].confidence, 1.0)

    def test_detect_every_mentioned_object(self):
        text = f"the {self.second} next to the {self.first}"
        masks = [detection.mask for detection in self.experts.detect(self.view_ref, text)]
        self.assertEqual(masks, [self.bundle.masks[('view0', self.second)], self.bundle.masks[('view0', self.first)]])

    def test_detect_unknown_and_empty(self):
        self.assertEqual(self.experts.detect(self.view_ref, 'piano'), [])
        with self.assertRaises(UsageError):
            self.experts.detect(self.view_ref, '  ')

    def test_itm(self):
        self.assertEqual(self.experts.itm_score(self.crop(self.first), self.first), 1.0)
        self.assertEqual(self.experts.itm_score(self.crop(self.first), self.second), 0.0)
        self.assertEqual(self.experts.itm_score(ImageRef('view0', None, (0, 0, 4, 4)), self.first), 0.0)

    def test_gaze_matches_true_facing(self):
        for view in self.bundle.views:
            gaze = self.experts.gaze(ImageRef(view.view_id, None), self.third)
            np.testing.assert_allclose(front_from_gaze(view, gaze), self.scene.get_object(self.third).front_dir,
                                       atol=1e-12)
        with self.assertRaises(UsageError):
            self.experts.gaze(self.view_ref, 'piano')

    def test_bundle_requirements(self):
        with self.assertRaises(UsageError):
            GroundTruthExperts(SceneBundle(self.bundle.views, self.bundle.object_names))
        without_truth = GroundTruthExperts(SceneBundle(self.bundle.views, self.bundle.object_names, self.bundle.masks))
        with self.assertRaises(UsageError):
            without_truth.gaze(self.view_ref, self.first)


if __name__ == '__main__':
    unittest.main()
