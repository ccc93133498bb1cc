"""Executable program domains and their result comparators."""
from .base import ANSWER, CRAFTING, STROKES, Domain, DomainError, DomainResult, compare_results, render_value
from .dates import DateDomain, date_registry
from .logo import EPS_ANGLE, EPS_DIST, HALF_INF, LogoDomain, TurtleState, compare_strokes, logo_registry
from .textcraft import CraftEnv, Recipe, TextCraftDomain, parse_command, textcraft_registry

DOMAINS = {"logo": LogoDomain, "date": DateDomain, "textcraft": TextCraftDomain}


def get_domain(name: str) -> Domain:
    try:
        return DOMAINS[name]()
    except KeyError:
        raise DomainError(f"unknown domain {name!r}; choose from {', '.join(sorted(DOMAINS))}") from None


__all__ = [
    "ANSWER", "CRAFTING", "STROKES", "DOMAINS", "CraftEnv", "DateDomain", "Domain", "DomainError",
    "DomainResult", "EPS_ANGLE", "EPS_DIST", "HALF_INF", "LogoDomain", "Recipe", "TextCraftDomain",
    "TurtleState", "compare_results", "compare_strokes", "date_registry", "get_domain",
    "logo_registry", "parse_command", "render_value", "textcraft_registry",
]
