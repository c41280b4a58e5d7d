"""
Renders geometry contexts and expert prompts from the versioned templates directory.
"""
import os
from decimal import Decimal, ROUND_HALF_UP
from functools import lru_cache
from typing import List, Optional, Tuple
from alloframe.base.geometry_context import GeometryContext, RenderedPrompt
from alloframe.enums import FrameKind, OrientationStrategy
from alloframe.errors import EmptyContextError, ExtractionError, UsageError

TEMPLATE_DIR = os.path.join(os.path.dirname(__file__), 'templates')
TEMPLATE_VERSION = 'v1'
DEFAULT_PRECISION = 2


@lru_cache(maxsize=None)
def load_template(name: str, version: str = TEMPLATE_VERSION) -> str:
    """
    Reads templates/<version>/<name>.txt, without its final newline.
    """
    path = os.path.join(TEMPLATE_DIR, version, f"{name}.txt")
    if not os.path.exists(path):
        raise UsageError(f"Unknown prompt template '{version}/{name}'")
    with open(path, 'r', encoding='utf-8') as f:
        text = f.read()
    return text[:-1] if text.endswith('\n') else text


def fill_template(template: str, **values) -> str:
    """
    Replaces {key} placeholders; other braces in the template are left alone.
    """
    for key, value in values.items():
        template = template.replace('{' + key + '}', str(value))
    return template


def format_real(value: float, precision: int = DEFAULT_PRECISION) -> str:
    """
    Fixed-point formatting with round-half-away-from-zero; negative zero prints as zero.
    """
    quantum = Decimal(1).scaleb(-precision)
    rounded = Decimal(repr(float(value))).quantize(quantum, rounding=ROUND_HALF_UP)
    if rounded.is_zero():
        rounded = abs(rounded)
    return f"{rounded:f}"


def _render_entries(ctx: GeometryContext, precision: int) -> List[str]:
    template = load_template('context_entry')
    lines = []
    for index, entry in enumerate(ctx.entries, start=1):
        x, y, z = (format_real(value, precision) for value in entry.coords)
        dx, dy, dz = (format_real(value, precision) for value in entry.sizes)
        lines.append(fill_template(template, index=index, name=entry.name, x=x, y=y, z=z,
                                   distance=format_real(entry.distance, precision), dx=dx, dy=dy, dz=dz))
    return lines


def render_context_ego(ctx: GeometryContext, precision: int = DEFAULT_PRECISION) -> str:
    """
    Renders an ego (allocentric) geometry context.

    Raises:
        UsageError: If the context is not an ego context.
        EmptyContextError: If it has no entries.
    """
    if ctx.frame.kind != FrameKind.EGO:
        raise UsageError("render_context_ego needs an ego-frame context")
    if not ctx.entries:
        raise EmptyContextError("Ego context has no non-reference objects")
    header = fill_template(load_template('ego_context_header'), ref_object=ctx.frame.ref_object)
    return '\n'.join([header] + _render_entries(ctx, precision))


def render_context_camera(ctx: GeometryContext, precision: int = DEFAULT_PRECISION) -> str:
    """
    Renders a camera/viewer geometry context.
    """
    if ctx.frame.kind != FrameKind.CAMERA:
        raise UsageError("render_context_camera needs a camera-frame context")
    if not ctx.entries:
        raise EmptyContextError("Camera context has no objects")
    return '\n'.join([load_template('camera_context_header')] + _render_entries(ctx, precision))


def render_context(ctx: GeometryContext, precision: int = DEFAULT_PRECISION) -> str:
    if ctx.frame.kind == FrameKind.EGO:
        return render_context_ego(ctx, precision)
    return render_context_camera(ctx, precision)


def render_final_query(context_text: str, question: str, frame_kind: FrameKind) -> RenderedPrompt:
    """
    Assembles system instruction, context, question and reasoning prompt.
    """
    system_name = 'ego_system' if FrameKind(frame_kind) == FrameKind.EGO else 'camera_system'
    return RenderedPrompt(
        system_text=load_template(system_name),
        context_text=context_text,
        question_text=question,
        reasoning_text=load_template('reasoning'),
    )


def build_key_object_extraction_prompt(question: str) -> str:
    return fill_template(load_template('key_objects'), question=question)


def parse_key_objects(response: str) -> List[str]:
    """
    Splits a comma-separated reply, trimming and dropping empty segments, keeping order.

    Raises:
        ExtractionError: If nothing remains.
    """
    objects = [part.strip() for part in (response or '').split(',')]
    objects = [part for part in objects if part]
    if not objects:
        raise ExtractionError(f"No key objects in reply {response!r}")
    return objects


def build_orientation_prompt(strategy: OrientationStrategy, keyword: str, round_number: Optional[int] = None,
                             options: Optional[List[str]] = None) -> Tuple[str, str]:
    """
    Returns (system, prompt) for one orientation query.
    """
    strategy = OrientationStrategy(strategy)
    if strategy == OrientationStrategy.A:
        return '', fill_template(load_template('orient_a'), object_keyword=keyword)
    if strategy == OrientationStrategy.C:
        return (load_template('orient_c_system'),
                fill_template(load_template('orient_c_question'), object_keyword=keyword))
    if round_number not in (1, 2, 3):
        raise UsageError(f"Strategy B needs a round number 1-3, got {round_number}")
    template = load_template(f"orient_b_round{round_number}")
    return '', fill_template(template, object_keyword=keyword, options_str=', '.join(options or []))


def build_router_prompt(question: str) -> Tuple[str, str]:
    """
    Returns (system, prompt): the routing system prompt, and the few-shot block followed by the final query.
    """
    prompt = load_template('router_fewshot') + '\n\n' + fill_template(load_template('router_query'),
                                                                      question=question)
    return load_template('router_system'), prompt
