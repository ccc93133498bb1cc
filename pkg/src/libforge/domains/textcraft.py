"""Crafting-game domain.

A task is a goal item plus crafting commands of the form
``craft <n> <item> using <n> <item>[, <n> <item>][ and <n> <item>]``.
Items without a recipe are raw and can be fetched one unit per
``get_object`` call. Failed actions never abort the program: they are
written to the action trace and surface as feedback.
"""
from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from ..lang import ExecError, Registry
from .base import CRAFTING, Domain, DomainError, DomainResult

_COMMAND = re.compile(r"^\s*craft\s+(\d+)\s+(.+?)\s+using\s+(.+?)\s*\.?\s*$", re.IGNORECASE)
_PART = re.compile(r"^(\d+)\s+(.+)$")
_SPLIT = re.compile(r"\s*,\s*(?:and\s+)?|\s+and\s+")


@dataclass(frozen=True)
class Recipe:
    item: str
    count: int
    ingredients: tuple  # ((item, count), ...)


def parse_command(text: str) -> Recipe:
    m = _COMMAND.match(text)
    if not m:
        raise DomainError(f"malformed crafting command: {text!r}")
    count, item, rest = int(m.group(1)), m.group(2).strip(), m.group(3)
    ingredients = []
    for part in _SPLIT.split(rest):
        part = part.strip()
        if not part:
            continue
        pm = _PART.match(part)
        if not pm:
            raise DomainError(f"malformed ingredient {part!r} in {text!r}")
        ingredients.append((pm.group(2).strip(), int(pm.group(1))))
    if not ingredients:
        raise DomainError(f"recipe without ingredients: {text!r}")
    return Recipe(item, count, tuple(ingredients))


@dataclass
class CraftEnv:
    recipes: dict
    goal: str
    inventory: Counter = field(default_factory=Counter)
    trace: list = field(default_factory=list)

    @classmethod
    def from_task(cls, goal: str, commands) -> "CraftEnv":
        recipes = {}
        for cmd in commands:
            r = parse_command(cmd)
            recipes.setdefault(r.item, r)  # first recipe for an item wins
        return cls(recipes=recipes, goal=goal.strip())

    @classmethod
    def from_file(cls, path) -> "CraftEnv":
        data = json.loads(Path(path).read_text())
        return cls.from_task(data["goal"], data["commands"])

    def fresh(self) -> "CraftEnv":
        return CraftEnv(recipes=self.recipes, goal=self.goal)

    @property
    def raw_items(self) -> set:
        needed = {ing for r in self.recipes.values() for ing, _ in r.ingredients}
        return needed - set(self.recipes)

    @property
    def goal_achieved(self) -> bool:
        return self.inventory[self.goal] > 0

    def _fail(self, action, message):
        self.trace.append({"action": action, "ok": False, "message": message})
        return False

    def get(self, name: str) -> bool:
        if name in self.recipes:
            return self._fail(f"get {name}", f"Could not find {name}: it has to be crafted")
        if name not in self.raw_items:
            return self._fail(f"get {name}", f"Could not find {name}")
        self.inventory[name] += 1
        self.trace.append({"action": f"get {name}", "ok": True, "message": f"Got 1 {name}"})
        return True

    def craft(self, name: str, ingredients) -> bool:
        action = f"craft {name}"
        recipe = self.recipes.get(name)
        if recipe is None:
            return self._fail(action, f"Could not find a recipe for {name}")
        given = {}
        for entry in ingredients:
            m = _PART.match(entry.strip())
            item, count = (m.group(2).strip(), int(m.group(1))) if m else (entry.strip(), None)
            given[item] = count
        wanted = dict(recipe.ingredients)
        if set(given) != set(wanted) or any(c is not None and c != wanted[i] for i, c in given.items()):
            return self._fail(action, f"Wrong ingredients for {name}; the recipe needs "
                              + ", ".join(f"{c} {i}" for i, c in recipe.ingredients))
        missing = [f"{c - self.inventory[i]} {i}" for i, c in recipe.ingredients if self.inventory[i] < c]
        if missing:
            return self._fail(action, f"Could not craft {name}: missing " + ", ".join(missing))
        for item, count in recipe.ingredients:
            self.inventory[item] -= count
            if self.inventory[item] == 0:
                del self.inventory[item]
        self.inventory[name] += recipe.count
        self.trace.append({"action": action, "ok": True, "message": f"Crafted {recipe.count} {name}"})
        return True


def _str_arg(fn, v):
    if not isinstance(v, str):
        raise ExecError(f"{fn}() expects an item name string, got {type(v).__name__}")
    return v.strip()


def _get_object(interp, name):
    return interp.state.get(_str_arg("get_object", name))


def _craft_object(interp, name, ingredients):
    name = _str_arg("craft_object", name)
    if not isinstance(ingredients, list) or not all(isinstance(i, str) for i in ingredients):
        raise ExecError("craft_object() expects a list of ingredient strings")
    return interp.state.craft(name, ingredients)


def _check_inventory(interp):
    return {k: v for k, v in sorted(interp.state.inventory.items()) if v > 0}


PRIMITIVES = {
    "get_object": _get_object,
    "craft_object": _craft_object,
    "check_inventory": _check_inventory,
}

_REGISTRY = Registry("textcraft", PRIMITIVES, {})


def textcraft_registry(env: CraftEnv | None = None) -> Registry:
    """The registry is state-free; ``env`` supplies the per-run state instead
    (see :meth:`TextCraftDomain.initial_state`)."""
    return _REGISTRY


DESCRIPTION = """\
You can use the following primitives:
- get_object(obj_name): get one unit of a raw item obj_name from the environment
- craft_object(obj_name, [ingredients]): craft obj_name using the list of ingredients
- check_inventory(): return the contents of the inventory as a dict of item -> count"""


class TextCraftDomain(Domain):
    name = "textcraft"
    result_kind = CRAFTING
    description = DESCRIPTION
    agent_instruction = "Your task is to craft items in a text-based crafting game by writing Python programs."

    def registry(self) -> Registry:
        return _REGISTRY

    def initial_state(self, example=None) -> CraftEnv:
        if example is None:
            raise DomainError("textcraft needs a task (goal and crafting commands)")
        meta = getattr(example, "metadata", None) or {}
        if isinstance(example, CraftEnv):
            return example.fresh()
        if "goal" not in meta or "commands" not in meta:
            raise DomainError(f"example {getattr(example, 'id', '?')} has no goal/commands metadata")
        return CraftEnv.from_task(meta["goal"], meta["commands"])

    def result(self, outcome) -> DomainResult:
        env: CraftEnv = outcome.effects
        return DomainResult(CRAFTING, {
            "inventory": dict(sorted(env.inventory.items())),
            "goal_achieved": env.goal_achieved,
            "goal_count": env.inventory[env.goal],
            "trace": [t["action"] for t in env.trace if t["ok"]],
        })

    def gold_result(self, example):
        result = super().gold_result(example)
        if result is None and not getattr(example, "program", None):
            # no gold program: success means crafting the goal, any count
            return DomainResult(CRAFTING, {"goal_achieved": True, "goal_count": None})
        return result

    def compare(self, a, b) -> bool:
        pa, pb = a.payload, b.payload
        if pa["goal_achieved"] != pb["goal_achieved"]:
            return False
        if pa["goal_count"] is None or pb["goal_count"] is None:
            return True
        return pa["goal_count"] == pb["goal_count"]

    def feedback(self, outcome) -> str:
        lines = []
        env = outcome.effects
        if isinstance(env, CraftEnv):
            lines += [t["message"] for t in env.trace if not t["ok"]]
            if not env.goal_achieved:
                lines.append(f"The goal item {env.goal} was not crafted.")
        base = super().feedback(outcome)
        if base:
            lines.append(base)
        return "\n".join(lines)
