"""Turtle graphics domain.

Heading convention: 0 degrees points along +x and ``left`` turns
counter-clockwise. The turtle starts at the origin, heading 0, pen down.
Drawings are compared as multisets of strokes with endpoints quantized to
1e-4 canvas units, so drawing order and stroke direction do not matter.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

from ..lang import ExecError, Registry
from .base import STROKES, Domain, DomainError, DomainResult

HALF_INF = 180
EPS_ANGLE = 1.0
EPS_DIST = 0.05
QUANTUM = 1e-4

assert HALF_INF * EPS_ANGLE == 180, "a semicircle must turn exactly 180 degrees"


@dataclass
class TurtleState:
    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0
    pen_down: bool = True
    segments: list = field(default_factory=list)

    def pose(self):
        return (self.pen_down, self.x, self.y, self.heading)


def _number(name, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ExecError(f"{name}() expects a number, got {type(value).__name__}")
    if not math.isfinite(value):
        raise ExecError(f"{name}() expects a finite number")
    return value


def _forward(interp, dist):
    t: TurtleState = interp.state
    dist = _number("forward", dist)
    rad = math.radians(t.heading)
    nx = t.x + dist * math.cos(rad)
    ny = t.y + dist * math.sin(rad)
    if t.pen_down:
        t.segments.append((t.x, t.y, nx, ny))
    t.x, t.y = nx, ny


def _left(interp, theta):
    t = interp.state
    t.heading = (t.heading + _number("left", theta)) % 360.0


def _right(interp, theta):
    t = interp.state
    t.heading = (t.heading - _number("right", theta)) % 360.0


def _penup(interp):
    interp.state.pen_down = False


def _pendown(interp):
    interp.state.pen_down = True


def _teleport(interp, x, y, theta):
    t = interp.state
    t.x = _number("teleport", x)
    t.y = _number("teleport", y)
    t.heading = _number("teleport", theta) % 360.0


def _heading(interp):
    return interp.state.heading


def _isdown(interp):
    return interp.state.pen_down


def _embed(interp, program, local_vars=None):
    t = interp.state
    saved = t.pose()
    try:
        interp.eval_embedded(program, local_vars)
    finally:
        t.pen_down, t.x, t.y, t.heading = saved


PRIMITIVES = {
    "forward": _forward,
    "left": _left,
    "right": _right,
    "penup": _penup,
    "pendown": _pendown,
    "teleport": _teleport,
    "heading": _heading,
    "isdown": _isdown,
    "embed": _embed,
}

CONSTANTS = {"HALF_INF": HALF_INF, "EPS_DIST": EPS_DIST, "EPS_ANGLE": EPS_ANGLE}

_REGISTRY = Registry("logo", PRIMITIVES, CONSTANTS)


def logo_registry() -> Registry:
    return _REGISTRY


def _q(v: float) -> int:
    return round(v / QUANTUM)


def quantize_segments(segments) -> tuple:
    """Canonical multiset: quantized endpoints, endpoints sorted, segments sorted."""
    out = []
    for x1, y1, x2, y2 in segments:
        a, b = (_q(x1), _q(y1)), (_q(x2), _q(y2))
        out.append((a, b) if a <= b else (b, a))
    return tuple(sorted(out))


def strokes_result(state: TurtleState) -> DomainResult:
    return DomainResult(STROKES, quantize_segments(state.segments))


def compare_strokes(a: DomainResult, b: DomainResult) -> bool:
    if a.kind != STROKES or b.kind != STROKES:
        raise DomainError(f"compare_strokes needs stroke results, got {a.kind} and {b.kind}")
    return Counter(a.payload) == Counter(b.payload)


DESCRIPTION = """\
The custom turtle library provides:
- forward(x): move forward x pixels
- left(theta): rotate left by theta degrees
- right(theta): rotate right by theta degrees
- penup(): stop drawing
- pendown(): start drawing
- teleport(x, y, theta): move to position (x, y) with angle theta
- heading(): get the current angle of the turtle
- isdown(): check if the pen is down
- embed(program, local_vars): runs the code in program using the current context and teleports back to the original position. Allows you to nest programs. Implementationally, embed gets the turtle state (is_down, x, y, heading), executes program, then returns to the original state.
Constants: HALF_INF (number of steps in a semicircle), EPS_DIST (a small distance), EPS_ANGLE (a small angle)."""


class LogoDomain(Domain):
    name = "logo"
    result_kind = STROKES
    description = DESCRIPTION
    agent_instruction = (
        "Your task is to draw simple figures using python Turtle graphics.\n"
        "You will use a custom turtle library, similar to the built-in library, "
        "which is sufficient for all tasks.")
    add_comments_default = True

    def registry(self) -> Registry:
        return _REGISTRY

    def initial_state(self, example=None) -> TurtleState:
        return TurtleState()

    def result(self, outcome) -> DomainResult:
        return strokes_result(outcome.effects)

    def compare(self, a, b) -> bool:
        return compare_strokes(a, b)

    def feedback(self, outcome) -> str:
        # the drawing itself is never shown, only the error text
        return f"Error: {outcome.error}" if outcome.error else ""
