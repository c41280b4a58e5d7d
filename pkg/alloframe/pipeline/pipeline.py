"""
End-to-end answering: route, extract key objects, ground and lift them, build the reference
frame, render the geometry context and reason over it.
"""
import logging
import threading
from contextlib import contextmanager
from typing import Callable, Dict, List, Optional, Tuple
import numpy as np
from alloframe.base.camera import CameraView
from alloframe.base.geometry_context import FrameSpec
from alloframe.base.object_state import ObjectState
from alloframe.base.reference_frame import ReferenceFrame
from alloframe.base.scene import SceneBundle
from alloframe.consensus.lifting import Observation, lift_object
from alloframe.enums import Orientation8, RouteLabel, RouterMode
from alloframe.errors import AlloframeError, ExtractionError, GroundingFailureError, UsageError
from alloframe.experts.base import GeometricReasoner, ImageRef, ReasonerAnswer
from alloframe.geometry.camera_geometry import camera_axis_in_world
from alloframe.geometry.frame_builder import build_frame, camera_frame, forward_from_constraint
from alloframe.grounding.orientation import (estimate_front_world, estimate_orientation, front_from_gaze,
                                             snap_to_label)
from alloframe.grounding.semantic_grounding import ground_object
from alloframe.pipeline.config import PipelineConfig
from alloframe.pipeline.expert_registry import ExpertSet
from alloframe.prompting.context_builder import build_geometry_context
from alloframe.prompting.prompt_renderer import render_context, render_final_query
from alloframe.prompting.question_parser import (default_options, find_objects_in_text, match_option,
                                                 normalize_text, parse_question, parse_relation, resolve_phrase)
from alloframe.prompting.router import RouteDecision, decide_route, match_perspective
from alloframe.utils.string_utils import sha256_hex

logger = logging.getLogger(__name__)

HUMAN_KEYWORDS = {'person', 'people', 'man', 'men', 'woman', 'women', 'boy', 'girl', 'child', 'children', 'kid',
                  'baby', 'player', 'driver', 'rider', 'dog', 'cat', 'horse', 'bird', 'cow', 'sheep'}


class StageTrace:
    """
    Ordered record of the stages one answer went through, each with the hash of its inputs.
    """

    def __init__(self):
        self.stages: List[dict] = []

    def record(self, stage: str, inputs, output: dict):
        if any(entry['stage'] == stage for entry in self.stages):
            raise UsageError(f"Stage '{stage}' recorded twice")
        self.stages.append({'stage': stage, 'input_sha256': sha256_hex(inputs), 'output': output})

    def stage_names(self) -> List[str]:
        return [entry['stage'] for entry in self.stages]

    def to_dict(self) -> dict:
        return {'stages': self.stages}

    def digest(self) -> str:
        return sha256_hex(self.to_dict())


@contextmanager
def pipeline_stage(name: str):
    """
    Tags AlloframeErrors escaping the block with the stage name.
    """
    try:
        yield
    except AlloframeError as e:
        if e.stage is None:
            e.stage = name
        raise


class LiftedObject:
    """
    An ObjectState with the per-view observations and relaxation traces it came from.
    """

    def __init__(self, state: ObjectState, observations: Dict[str, Observation], traces: Dict[str, dict]):
        self.state = state
        self.observations = observations
        self.traces = traces

    def best_view(self, views: List[CameraView]) -> str:
        """
        The view where the object's mask covers the most pixels (first view on ties).
        """
        best_id, best_area = None, -1
        for view in views:
            observation = self.observations.get(view.view_id)
            if observation is not None and observation[0].area > best_area:
                best_id, best_area = view.view_id, observation[0].area
        return best_id

    def to_dict(self) -> dict:
        data = self.state.to_dict(include_points=False)
        data['relaxation'] = self.traces
        return data


class StateCache:
    """
    Thread-safe cache of lifted objects shared by the questions of a run.
    """

    def __init__(self):
        self._items: Dict[tuple, LiftedObject] = {}
        self._lock = threading.Lock()

    def get_or_compute(self, key: tuple, compute: Callable[[], LiftedObject]) -> LiftedObject:
        with self._lock:
            if key in self._items:
                return self._items[key]
        value = compute()
        with self._lock:
            return self._items.setdefault(key, value)

    def __len__(self):
        return len(self._items)


class AnswerResult:
    """
    Final answer of one question with its route and stage trace.
    """

    def __init__(self, question: str, options: List[str], route: RouteLabel, answer: str,
                 reasoner_answer: Optional[ReasonerAnswer], trace: StageTrace):
        self.question = question
        self.options = options
        self.route = route
        self.answer = answer
        self.reasoner_answer = reasoner_answer
        self.trace = trace

    def __repr__(self):
        return f"AnswerResult(route={self.route.value}, answer={self.answer!r})"

    def to_dict(self) -> dict:
        return {
            'question': self.question,
            'options': self.options,
            'route': self.route.value,
            'answer': self.answer,
            'reasoner': self.reasoner_answer.to_dict() if self.reasoner_answer else None,
            'trace': self.trace.to_dict(),
        }


def is_human_like(keyword: str) -> bool:
    return any(word in HUMAN_KEYWORDS for word in normalize_text(keyword).split())


class AllocentricPipeline:
    """
    Answers spatial questions about one SceneBundle.

    Parameters:
        bundle (SceneBundle): Calibrated views (and masks for ground-truth runs).
        experts (ExpertSet): Expert handles.
        config (PipelineConfig): Pipeline settings.
        cache (StateCache): Optional cache shared between pipelines of the same run.
    """

    def __init__(self, bundle: SceneBundle, experts: ExpertSet, config: PipelineConfig,
                 cache: Optional[StateCache] = None):
        if not bundle.views:
            raise UsageError("The bundle has no views")
        self.bundle = bundle
        self.experts = experts
        self.config = config
        self.cache = cache if cache is not None else StateCache()

    def route(self, question: str) -> RouteDecision:
        if self.config.router == RouterMode.RULES or self.experts.router is None:
            return decide_route(question)
        label = self.experts.router.route(question)
        if label == RouteLabel.EGO_3D:
            return match_perspective(question) or RouteDecision(RouteLabel.EGO_3D)
        return RouteDecision(label)

    def key_objects(self, question: str, objects: Optional[List[str]] = None) -> Tuple[List[str], str]:
        """
        Returns (names, source): the override list, the reasoner's extraction, or the bundle
        object names mentioned in the question, in that order of preference.
        """
        if objects:
            return list(objects), 'override'
        try:
            return self.experts.reasoner.extract_key_objects(question), 'expert'
        except (AttributeError, UsageError) as e:
            logger.debug("Key-object extraction unavailable (%s), matching bundle names", e)
        names = find_objects_in_text(question, self.bundle.object_names)
        if not names:
            raise ExtractionError(f"No known object is mentioned in {question!r}")
        return names, 'bundle'

    def _bundle_name(self, description: str) -> Optional[str]:
        wanted = normalize_text(description)
        for name in self.bundle.object_names:
            if normalize_text(name) == wanted:
                return name
        mentioned = find_objects_in_text(description, self.bundle.object_names)
        return mentioned[0] if mentioned else None

    def _observe(self, view: CameraView, description: str, traces: Dict[str, dict]) -> Optional[Observation]:
        if self.config.use_gt_masks:
            name = self._bundle_name(description)
            mask = self.bundle.masks.get((view.view_id, name)) if name else None
            if mask is None or mask.is_empty():
                return None
            return mask, mask.bounding_box(), 1.0
        try:
            result = ground_object(ImageRef(view.view_id, view.image_path), description, self.experts.detector,
                                   self.experts.simplifier, self.experts.itm, self.experts.verifier)
        except GroundingFailureError as e:
            if e.trace is not None:
                traces[view.view_id] = e.trace.to_dict()
            logger.debug("'%s' not grounded in %s: %s", description, view.view_id, e)
            return None
        traces[view.view_id] = result.trace.to_dict()
        return result.mask, result.box, result.itm_score

    def _lift(self, description: str) -> LiftedObject:
        observations: Dict[str, Observation] = {}
        traces: Dict[str, dict] = {}
        for view in self.bundle.views:
            observation = self._observe(view, description, traces)
            if observation is not None:
                observations[view.view_id] = observation
        if not observations:
            raise GroundingFailureError(f"'{description}' could not be grounded in any view", description=description)
        logger.info("Lifting '%s' from %d view(s)", description, len(observations))
        state = lift_object(description, self.bundle.views, observations, self.config.consensus, self.config.seed)
        return LiftedObject(state, observations, traces)

    def lift(self, description: str) -> LiftedObject:
        key = (self.bundle.root or id(self.bundle), description, self.config.use_gt_masks)
        return self.cache.get_or_compute(key, lambda: self._lift(description))

    @staticmethod
    def _crop(view: CameraView, observation: Observation) -> ImageRef:
        mask, box, _ = observation
        return ImageRef(view.view_id, view.image_path, box, mask)

    def facing_direction(self, lifted: LiftedObject, view: CameraView) -> Tuple[np.ndarray, dict]:
        """
        World facing direction of an object seen in a view: the head-pose estimator for
        people and animals (or any keyword when it covers all objects), otherwise the
        orientation ensemble.
        """
        keyword = lifted.state.name
        crop = self._crop(view, lifted.observations[view.view_id])
        head_pose = self.experts.head_pose
        if head_pose is not None and (head_pose.covers_all_objects or is_human_like(keyword)):
            gaze = head_pose.gaze(crop, keyword)
            return front_from_gaze(view, gaze), {'source': 'head_pose', 'gaze': [float(v) for v in gaze]}
        vote = estimate_orientation(self.experts.orientation, crop, keyword)
        return estimate_front_world(view, vote.winner), {'source': 'orientation', 'vote': vote.to_dict()}

    def reference_frame(self, decision: RouteDecision, ref: Optional[str], aux: Optional[str],
                        lifted: Dict[str, LiftedObject], view_id: Optional[str]) -> Tuple[ReferenceFrame, FrameSpec, dict]:
        if decision.label == RouteLabel.CAMERA_3D:
            view = self.bundle.get_view(view_id) if view_id else self.bundle.views[0]
            return camera_frame(view), FrameSpec.camera(view.view_id), {'view': view.view_id}

        ref_lifted = lifted[ref]
        origin = ref_lifted.state.centroid
        if aux is not None:
            # constraint frames take their down hint from the first view of the bundle
            hint_view = self.bundle.views[0]
            front = forward_from_constraint(origin, lifted[aux].state.centroid)
            spec = FrameSpec.constraint(ref, aux)
            detail = {'source': 'constraint'}
        else:
            hint_view = self.bundle.get_view(ref_lifted.best_view(self.bundle.views))
            front, detail = self.facing_direction(ref_lifted, hint_view)
            spec = FrameSpec.intrinsic(ref, hint_view.view_id)
        down_hint = camera_axis_in_world(hint_view.pose, 1)
        fallback = camera_axis_in_world(hint_view.pose, 2)
        frame = build_frame(origin, front, down_hint, fallback)
        detail.update({'view': hint_view.view_id, 'frame': frame.to_dict()})
        return frame, spec, detail

    def _answer_attribute(self, question: str, options: Optional[List[str]], names: List[str],
                          view_id: Optional[str], trace: StageTrace) -> str:
        name = names[0]
        views = [self.bundle.get_view(view_id)] if view_id else self.bundle.views
        with pipeline_stage('ground'):
            traces: Dict[str, dict] = {}
            observation, view = None, None
            for view in views:
                observation = self._observe(view, name, traces)
                if observation is not None:
                    break
            if observation is None:
                raise GroundingFailureError(f"'{name}' could not be grounded for the attribute question",
                                            description=name)
            trace.record('ground', {'object': name, 'views': [v.view_id for v in views]},
                         {'view': view.view_id, 'box': [float(v) for v in observation[1]],
                          'itm_score': observation[2], 'relaxation': traces})
        with pipeline_stage('orientation'):
            crop = self._crop(view, observation)
            head_pose = self.experts.head_pose
            if head_pose is not None and (head_pose.covers_all_objects or is_human_like(name)):
                label = snap_to_label(head_pose.gaze(crop, name))
                detail = {'source': 'head_pose', 'label': label.value}
            else:
                vote = estimate_orientation(self.experts.orientation, crop, name)
                label = vote.winner
                detail = {'source': 'orientation', 'vote': vote.to_dict()}
            answer = label.value
            for option in options or []:
                try:
                    if Orientation8.parse(option) == label:
                        answer = option
                        break
                except ValueError:
                    continue
            trace.record('orientation', {'object': name, 'view': view.view_id}, detail)
        return answer

    def answer(self, question: str, options: Optional[List[str]] = None, objects: Optional[List[str]] = None,
               view_id: Optional[str] = None) -> AnswerResult:
        """
        Answers one question.

        Parameters:
            question (str): Question text.
            options (List[str]): Answer options; derived from the relation when omitted.
            objects (List[str]): Key-object override.
            view_id (str): Camera view of camera-centric questions (first view by default) and
                the view of attribute questions.

        Returns:
            AnswerResult: The answer, its route and the stage trace.

        Raises:
            AlloframeError: Any stage failure, tagged with the stage name.
        """
        trace = StageTrace()
        with pipeline_stage('route'):
            decision = self.route(question)
            trace.record('route', {'question': question, 'router': self.config.router.value}, decision.to_dict())
        logger.info("Routed %r to %s", question, decision.label.value)

        with pipeline_stage('key_objects'):
            names, source = self.key_objects(question, objects)
            ref = aux = None
            if decision.label == RouteLabel.EGO_3D:
                ref = resolve_phrase(decision.ref_phrase, names) or names[0]
                aux = resolve_phrase(decision.aux_phrase, names)
                for name in (aux, ref):
                    if name is not None and name not in names:
                        names.insert(0, name)
            trace.record('key_objects', {'question': question, 'objects': objects},
                         {'objects': names, 'source': source, 'ref': ref, 'aux': aux})

        if decision.label == RouteLabel.ATTR:
            answer = self._answer_attribute(question, options, names, view_id, trace)
            return AnswerResult(question, list(options or []), decision.label, answer, None, trace)

        with pipeline_stage('lift'):
            lifted = {name: self.lift(name) for name in names}
            trace.record('lift', {'objects': names, 'use_gt_masks': self.config.use_gt_masks,
                                  'consensus': self.config.consensus.to_dict()},
                         {name: item.to_dict() for name, item in lifted.items()})

        with pipeline_stage('frame'):
            frame, spec, detail = self.reference_frame(decision, ref, aux, lifted, view_id)
            trace.record('frame', {'route': decision.label.value, 'ref': ref, 'aux': aux, 'view': view_id},
                         dict(detail, frame_spec=spec.to_dict()))

        with pipeline_stage('context'):
            context = build_geometry_context([lifted[name].state for name in names], frame, spec)
            if options is None:
                options = default_options(parse_relation(question, []), names)
            context_text = render_context(context, self.config.precision)
            question_text = f"{question}\nOptions: {', '.join(options)}" if options else question
            prompt = render_final_query(context_text, question_text, spec.kind)
            trace.record('context', {'frame_spec': spec.to_dict(), 'precision': self.config.precision},
                         {'context': context_text, 'entries': context.to_dict()['entries']})

        with pipeline_stage('reason'):
            reasoner = self.experts.reasoner
            if isinstance(reasoner, GeometricReasoner):
                parsed = parse_question(question, options, names, decision)
                reasoner_answer = reasoner.reason_geometry(context, parsed)
            else:
                reasoner_answer = reasoner.reason(prompt)
            answer = match_option(options, reasoner_answer.extracted) or reasoner_answer.extracted
            trace.record('reason', {'prompt': prompt.full_text()},
                         {'answer': answer, 'reasoner': reasoner_answer.to_dict()})
        return AnswerResult(question, list(options), decision.label, answer, reasoner_answer, trace)
