"""
Command-line surface: synth, lift, frame, context, answer and eval.

Results go to stdout or the --out file; logs go to stderr. Exit codes: 0 ok, 2 usage,
3 grounding failure, 4 expert transport or protocol, 5 degenerate frame, 6 extraction.
"""
import argparse
import json
import logging
import os
import sys
from typing import List, Optional
import numpy as np
from alloframe.base.geometry_context import FrameSpec
from alloframe.base.object_state import ObjectState
from alloframe.base.reference_frame import ReferenceFrame
from alloframe.base.scene import SceneBundle
from alloframe.enums import Orientation8, QuestionFamily, Theme
from alloframe.errors import AlloframeError, DegenerateFrameError, UsageError
from alloframe.geometry.camera_geometry import camera_axis_in_world
from alloframe.geometry.frame_builder import build_frame, camera_frame, forward_from_constraint
from alloframe.grounding.orientation import estimate_front_world
from alloframe.pipeline.config import PipelineConfig
from alloframe.pipeline.evaluation import (evaluate, generate_eval_questions, load_questions, load_scene_bundles,
                                           save_questions)
from alloframe.pipeline.expert_registry import ExpertRegistry
from alloframe.pipeline.pipeline import AllocentricPipeline
from alloframe.prompting.context_builder import build_geometry_context
from alloframe.prompting.prompt_renderer import render_context
from alloframe.report_builders.html_report_builder import build_eval_report
from alloframe.synth.bundle_io import read_bundle, write_bundle
from alloframe.synth.renderer import render_views
from alloframe.synth.scene_generator import DEFAULT_VIEWS, generate_scene
from alloframe.utils.string_utils import split_items

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
CAMERA_FRAME_PREFIX = 'camera:'
WORLD_DOWN_HINT = np.array([0.0, 1.0, 0.0])
WORLD_FALLBACK_HINT = np.array([0.0, 0.0, 1.0])


def configure_logging(verbose: bool):
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING, format=LOG_FORMAT, stream=sys.stderr,
                        force=True)


def _write_output(text: str, path: Optional[str]):
    if path:
        with open(path, 'w', encoding='utf-8') as f:
            f.write(text)
        logger.info("Wrote %s", path)
    else:
        sys.stdout.write(text)


def _dump_json(payload) -> str:
    return json.dumps(payload, indent=2) + '\n'


def _read_json(path: str, what: str) -> dict:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except (OSError, ValueError) as e:
        raise UsageError(f"Cannot read {what} {path}: {e}")


def _load_config(args: argparse.Namespace) -> PipelineConfig:
    config = PipelineConfig.load(args.config)
    if getattr(args, 'use_gt_masks', False):
        config.use_gt_masks = True
    if getattr(args, 'precision', None) is not None:
        if args.precision < 0:
            raise UsageError(f"precision must be >= 0, got {args.precision}")
        config.precision = args.precision
    return config


def _load_states(path: str) -> List[ObjectState]:
    data = _read_json(path, 'states')
    try:
        return [ObjectState.from_dict(item) for item in data['objects']]
    except (KeyError, TypeError) as e:
        raise UsageError(f"Malformed states file {path}: {e}")


def _state_by_name(states: List[ObjectState], name: str) -> ObjectState:
    for state in states:
        if state.name == name:
            return state
    raise UsageError(f"Object '{name}' is not in the states file; known: {[s.name for s in states]}")


def _prepare_out_dir(path: str, force: bool):
    if os.path.isdir(path) and os.listdir(path) and not force:
        raise UsageError(f"Output directory {path} is not empty; pass --force to overwrite")
    os.makedirs(path, exist_ok=True)


def cmd_synth(args: argparse.Namespace) -> int:
    """
    Generates synthetic scenes and writes them as bundles. With --scenes N > 1 the bundles
    go to <out>/scene000 ... with seeds seed, seed + 1, ...
    """
    if args.scenes < 1:
        raise UsageError(f"--scenes must be >= 1, got {args.scenes}")
    if args.noise < 0:
        raise UsageError(f"--noise must be >= 0, got {args.noise}")
    _prepare_out_dir(args.out, args.force)
    for index in range(args.scenes):
        seed = args.seed + index
        directory = args.out if args.scenes == 1 else os.path.join(args.out, f"scene{index:03d}")
        scene = generate_scene(seed, args.n_objects, n_views=args.views)
        previews = {}
        bundle = render_views(scene, noise_sigma=args.noise, previews=previews)
        write_bundle(bundle, directory, previews)
        logger.info("Scene %d (seed %d): %s", index, seed, scene.object_names())
    return 0


def cmd_lift(args: argparse.Namespace) -> int:
    config = _load_config(args)
    bundle = read_bundle(args.scene)
    names = split_items(args.objects)
    if not names:
        raise UsageError("--objects needs at least one name")
    pipeline = AllocentricPipeline(bundle, ExpertRegistry(config).build(bundle), config)
    objects = []
    for name in names:
        lifted = pipeline.lift(name)
        data = lifted.state.to_dict(include_points=True)
        data['relaxation'] = lifted.traces
        objects.append(data)
    _write_output(_dump_json({'objects': objects}), args.out)
    return 0


def _frame_views(args: argparse.Namespace) -> Optional[SceneBundle]:
    return read_bundle(args.scene) if args.scene else None


def cmd_frame(args: argparse.Namespace) -> int:
    """
    Builds an ego frame for --ref, facing --aux (constraint) or the facing judged in --orient-view.
    """
    if (args.aux is None) == (args.orient_label is None):
        raise UsageError("Pass exactly one of --aux or --orient-label")
    states = _load_states(args.states)
    ref = _state_by_name(states, args.ref)
    bundle = _frame_views(args)
    view = None
    if bundle is not None:
        view = bundle.get_view(args.orient_view) if args.orient_view else bundle.views[0]
    elif args.orient_label is not None:
        raise UsageError("--orient-label needs --scene to read the pose of --orient-view")

    if args.aux is not None:
        if args.aux == args.ref:
            raise DegenerateFrameError(f"Reference and auxiliary object are both '{args.ref}'")
        front = forward_from_constraint(ref.centroid, _state_by_name(states, args.aux).centroid)
        spec = FrameSpec.constraint(args.ref, args.aux)
    else:
        try:
            label = Orientation8.parse(args.orient_label)
        except ValueError as e:
            raise UsageError(str(e))
        front = estimate_front_world(view, label)
        spec = FrameSpec.intrinsic(args.ref, view.view_id)

    if view is not None:
        down_hint, fallback = camera_axis_in_world(view.pose, 1), camera_axis_in_world(view.pose, 2)
    else:
        down_hint, fallback = WORLD_DOWN_HINT, WORLD_FALLBACK_HINT
    frame = build_frame(ref.centroid, front, down_hint, fallback)
    frame.validate()
    _write_output(_dump_json({'frame_spec': spec.to_dict(), 'frame': frame.to_dict()}), args.out)
    return 0


def cmd_context(args: argparse.Namespace) -> int:
    config = _load_config(args)
    states = _load_states(args.states)
    if args.frame.startswith(CAMERA_FRAME_PREFIX):
        if not args.scene:
            raise UsageError("A camera frame needs --scene to read the view pose")
        view = read_bundle(args.scene).get_view(args.frame[len(CAMERA_FRAME_PREFIX):])
        frame, spec = camera_frame(view), FrameSpec.camera(view.view_id)
    else:
        data = _read_json(args.frame, 'frame')
        try:
            frame, spec = ReferenceFrame.from_dict(data['frame']), FrameSpec.from_dict(data['frame_spec'])
        except (KeyError, TypeError) as e:
            raise UsageError(f"Malformed frame file {args.frame}: {e}")
    context = build_geometry_context(states, frame, spec)
    _write_output(render_context(context, config.precision) + '\n', args.out)
    return 0


def cmd_answer(args: argparse.Namespace) -> int:
    config = _load_config(args)
    bundle = read_bundle(args.scene)
    pipeline = AllocentricPipeline(bundle, ExpertRegistry(config).build(bundle), config)
    options = split_items(args.options) or None
    objects = split_items(args.objects) or None
    result = pipeline.answer(args.question, options=options, objects=objects, view_id=args.view)
    sys.stdout.write(f"{result.answer}\n")
    sys.stdout.write(_dump_json(result.to_dict()))
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    if (args.questions is None) == (args.generate is None):
        raise UsageError("Pass exactly one of --questions or --generate")
    config = _load_config(args)
    bundles = load_scene_bundles(args.scenes)
    if args.generate is not None:
        if args.generate < 1:
            raise UsageError(f"--generate must be >= 1, got {args.generate}")
        families = None
        if args.families:
            try:
                families = [QuestionFamily(item) for item in split_items(args.families)]
            except ValueError as e:
                raise UsageError(str(e))
        questions = generate_eval_questions(bundles, args.generate, config.seed, families)
        if args.save_questions:
            save_questions(args.save_questions, questions)
    else:
        questions = load_questions(args.questions)
    report = evaluate(questions, bundles, config, parallel=args.parallel)
    _write_output(report.to_json(), args.report)
    if args.html:
        build_eval_report(report, args.html, Theme(args.theme))
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', default=None, help="pipeline config JSON (default: $ALLOFRAME_CONFIG)")
    common.add_argument('--verbose', action='store_true', help="log at DEBUG level on stderr")

    parser = argparse.ArgumentParser(prog='alloframe', description="Allocentric spatial question answering")
    sub = parser.add_subparsers(dest='command', required=True)

    synth = sub.add_parser('synth', parents=[common], help="generate synthetic scene bundles")
    synth.add_argument('--seed', type=int, default=42)
    synth.add_argument('--n-objects', type=int, default=5)
    synth.add_argument('--views', type=int, default=DEFAULT_VIEWS)
    synth.add_argument('--scenes', type=int, default=1)
    synth.add_argument('--noise', type=float, default=0.0, help="relative depth noise sigma, e.g. 0.01")
    synth.add_argument('--out', required=True)
    synth.add_argument('--force', action='store_true')
    synth.set_defaults(func=cmd_synth)

    lift = sub.add_parser('lift', parents=[common], help="ground and lift objects to world states")
    lift.add_argument('--scene', required=True)
    lift.add_argument('--objects', required=True, help="comma-separated descriptions")
    lift.add_argument('--use-gt-masks', action='store_true')
    lift.add_argument('--out', default=None)
    lift.set_defaults(func=cmd_lift)

    frame = sub.add_parser('frame', parents=[common], help="build an ego reference frame")
    frame.add_argument('--states', required=True)
    frame.add_argument('--ref', required=True)
    frame.add_argument('--aux', default=None)
    frame.add_argument('--scene', default=None)
    frame.add_argument('--orient-view', default=None)
    frame.add_argument('--orient-label', default=None)
    frame.add_argument('--out', default=None)
    frame.set_defaults(func=cmd_frame)

    context = sub.add_parser('context', parents=[common], help="render a geometry context")
    context.add_argument('--states', required=True)
    context.add_argument('--frame', required=True, help="frame JSON file or camera:VIEWID")
    context.add_argument('--scene', default=None)
    context.add_argument('--precision', type=int, default=None)
    context.add_argument('--out', default=None)
    context.set_defaults(func=cmd_context)

    answer = sub.add_parser('answer', parents=[common], help="answer one question")
    answer.add_argument('--scene', required=True)
    answer.add_argument('--question', required=True)
    answer.add_argument('--options', default=None, help="comma-separated options")
    answer.add_argument('--objects', default=None, help="comma-separated key-object override")
    answer.add_argument('--view', default=None)
    answer.add_argument('--use-gt-masks', action='store_true')
    answer.set_defaults(func=cmd_answer)

    ev = sub.add_parser('eval', parents=[common], help="evaluate a question set")
    ev.add_argument('--scenes', required=True)
    ev.add_argument('--questions', default=None)
    ev.add_argument('--generate', type=int, default=None)
    ev.add_argument('--families', default=None, help="comma-separated families for --generate")
    ev.add_argument('--save-questions', default=None)
    ev.add_argument('--use-gt-masks', action='store_true')
    ev.add_argument('--parallel', type=int, default=1)
    ev.add_argument('--report', default=None)
    ev.add_argument('--html', default=None)
    ev.add_argument('--theme', choices=[theme.value for theme in Theme], default=Theme.LIGHT.value)
    ev.set_defaults(func=cmd_eval)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    configure_logging(args.verbose)
    try:
        return args.func(args)
    except AlloframeError as e:
        stage = f" [{e.stage}]" if e.stage else ""
        logger.debug("Command failed", exc_info=True)
        sys.stderr.write(f"alloframe {args.command}{stage}: {type(e).__name__}: {e}\n")
        return e.exit_code


if __name__ == '__main__':
    sys.exit(main())
