"""Calendar arithmetic domain.

Dates are :class:`datetime.date` values; offsets are dateutil
``relativedelta`` objects, so month and year arithmetic clamps to the last
valid day of the month.
"""
from __future__ import annotations

import datetime
import re

from dateutil.relativedelta import relativedelta as DateOffset

from ..lang import ExecError, Registry
from .base import ANSWER, Domain, DomainResult, render_value

DELTA_UNITS = ("days", "weeks", "months", "years")
FORMAT_DIRECTIVES = {"m", "d", "Y", "A", "%"}
_DIRECTIVE = re.compile(r"%(.?)")


def _int_arg(fn, name, v):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ExecError(f"{fn}() argument {name} must be an integer, got {type(v).__name__}")
    return v


def _date(interp, year, month, day):
    y = _int_arg("date", "year", year)
    m = _int_arg("date", "month", month)
    d = _int_arg("date", "day", day)
    try:
        return datetime.date(y, m, d)
    except ValueError as err:
        raise ExecError(f"invalid date {y}-{m}-{d}: {err}") from None


def _relativedelta(interp, **units):
    if not units:
        raise ExecError("relativedelta() needs at least one of " + ", ".join(DELTA_UNITS))
    for key, value in units.items():
        if key not in DELTA_UNITS:
            raise ExecError(f"relativedelta() got an unsupported unit {key!r}")
        _int_arg("relativedelta", key, value)
    return DateOffset(**units)


def _strftime(interp, date, fmt):
    if not isinstance(date, datetime.date):
        raise ExecError(f"strftime() expects a date, got {type(date).__name__}")
    if not isinstance(fmt, str):
        raise ExecError("strftime() format must be a string")
    for m in _DIRECTIVE.finditer(fmt):
        if m.group(1) not in FORMAT_DIRECTIVES:
            raise ExecError(f"unsupported format directive %{m.group(1)}")
    return date.strftime(fmt)


PRIMITIVES = {"date": _date, "relativedelta": _relativedelta, "strftime": _strftime}

_REGISTRY = Registry("date", PRIMITIVES, {})


def date_registry() -> Registry:
    return _REGISTRY


DESCRIPTION = """\
You can use the following primitives:
- date(year, month, day): returns a date object
- relativedelta(days=n | weeks=n | months=n | years=n): a time offset; add it to or subtract it from a date
- strftime(date, format): prints the date in the specified format (supports %m, %d, %Y, %A)
Store the final result in a variable named answer."""


class DateDomain(Domain):
    name = "date"
    result_kind = ANSWER
    description = DESCRIPTION
    agent_instruction = "Your task is to solve simple word problems by creating Python programs."

    def registry(self) -> Registry:
        return _REGISTRY

    def initial_state(self, example=None):
        return None

    def result(self, outcome) -> DomainResult:
        return DomainResult(ANSWER, render_value(outcome.answer))

    def compare(self, a, b) -> bool:
        return a.payload == b.payload
