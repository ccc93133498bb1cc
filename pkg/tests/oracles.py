"""Independent reference implementations used to cross-check the package.

None of these import from libforge, so a shared bug cannot hide.
"""
from __future__ import annotations

import math
import sys

# -- Ward clustering: naive O(n^3) agglomeration ---------------------------------


def naive_ward(points) -> list[tuple[int, int, float]]:
    """(a, b, cost) per merge, cost = na*nb/(na+nb) * |mean_a - mean_b|^2.

    Cluster ids follow the SciPy convention (leaves 0..n-1, merge i gets
    n+i); the cheapest pair wins and ties go to the smallest (a, b).
    """
    n = len(points)
    clusters = {i: [list(map(float, p))] for i, p in enumerate(points)}
    merges = []
    for step in range(n - 1):
        best = None
        keys = sorted(clusters)
        means = {k: _mean(clusters[k]) for k in keys}
        for i, a in enumerate(keys):
            for b in keys[i + 1:]:
                na, nb = len(clusters[a]), len(clusters[b])
                cost = na * nb / (na + nb) * sum((x - y) ** 2 for x, y in zip(means[a], means[b]))
                if best is None or cost < best[2]:
                    best = (a, b, cost)
        a, b, cost = best
        clusters[n + step] = clusters.pop(a) + clusters.pop(b)
        merges.append(best)
    return merges


def _mean(members):
    d = len(members[0])
    return [sum(m[k] for m in members) / len(members) for k in range(d)]


# -- Calendar: day-by-day iteration, no datetime ---------------------------------


def is_leap(y: int) -> bool:
    return y % 4 == 0 and (y % 100 != 0 or y % 400 == 0)


def days_in_month(y: int, m: int) -> int:
    if m == 2:
        return 29 if is_leap(y) else 28
    return 30 if m in (4, 6, 9, 11) else 31


def step_days(ymd, days: int):
    y, m, d = ymd
    for _ in range(abs(days)):
        if days > 0:
            d += 1
            if d > days_in_month(y, m):
                d, m = 1, m + 1
                if m > 12:
                    m, y = 1, y + 1
        else:
            d -= 1
            if d < 1:
                m -= 1
                if m < 1:
                    m, y = 12, y - 1
                d = days_in_month(y, m)
    return (y, m, d)


def shift(ymd, years=0, months=0, days=0):
    """Calendar shift: years and months first (day clamped to month end), then days."""
    y, m, d = ymd
    total = (y + years) * 12 + (m - 1) + months
    y, m = divmod(total, 12)
    m += 1
    d = min(d, days_in_month(y, m))
    return step_days((y, m, d), days)


# -- Retrieval: plain-Python cosine scan -------------------------------------------


def cosine(u, v) -> float:
    dot = sum(a * b for a, b in zip(u, v))
    return dot / (math.sqrt(sum(a * a for a in u)) * math.sqrt(sum(b * b for b in v)))


def brute_topk(query, rows: dict, n: int) -> list:
    """Keys of the ``n`` rows most similar to ``query``; ties go to the smaller key."""
    sims = [(-cosine(query, v), k) for k, v in rows.items()]
    return [k for _, k in sorted(sims)[:n]]


# -- Helper score ---------------------------------------------------------------------


def brute_score(records) -> float:
    """records: (passed, n_p) pairs. Each pass counts 1; each fail costs 1/n_p."""
    passes = 0
    penalty = []
    for passed, n_p in records:
        if passed:
            passes += 1
        else:
            penalty.append(1.0 / n_p)
    return passes - math.fsum(penalty)


# -- Crafting: recipe-graph reachability ---------------------------------------------


def reachable(goal: str, recipes: dict) -> bool:
    """recipes: item -> [(ingredient, count), ...]. Items that are ingredients
    but never products are gathered from the world; everything else must be
    crafted from reachable ingredients."""
    products = set(recipes)
    raw = {i for ings in recipes.values() for i, _ in ings} - products
    known = set(raw)
    changed = True
    while changed:
        changed = False
        for item, ings in recipes.items():
            if item not in known and all(i in known for i, _ in ings):
                known.add(item)
                changed = True
    return goal in known


# -- Helper usage: run programs as host-language code and count calls ----------


class _Turtle:
    def __init__(self):
        self.x = self.y = self.heading = 0.0
        self.down = True

    def forward(self, d):
        r = math.radians(self.heading)
        self.x += d * math.cos(r)
        self.y += d * math.sin(r)

    def left(self, a):
        self.heading = (self.heading + a) % 360.0

    def right(self, a):
        self.heading = (self.heading - a) % 360.0


def logo_namespace() -> dict:
    t = _Turtle()
    ns = {
        "forward": t.forward, "left": t.left, "right": t.right,
        "penup": lambda: setattr(t, "down", False), "pendown": lambda: setattr(t, "down", True),
        "teleport": lambda x, y, h: (setattr(t, "x", x), setattr(t, "y", y), setattr(t, "heading", h)),
        "heading": lambda: t.heading, "isdown": lambda: t.down,
        "HALF_INF": 180, "EPS_DIST": 0.05, "EPS_ANGLE": 1.0,
    }

    def embed(program, local_vars=None):
        saved = (t.x, t.y, t.heading, t.down)
        exec(program, ns, dict(local_vars or {}))
        t.x, t.y, t.heading, t.down = saved

    ns["embed"] = embed
    return ns


def count_helper_calls(program: str, helper_sources: dict) -> dict:
    """Execute ``program`` with the helpers as real Python functions and count
    how often each helper's code object is entered (profiling hook)."""
    ns = logo_namespace()
    for src in helper_sources.values():
        exec(src, ns)
    codes = {ns[name].__code__: name for name in helper_sources}
    counts: dict = {}

    def profile(frame, event, arg):
        if event == "call" and frame.f_code in codes:
            name = codes[frame.f_code]
            counts[name] = counts.get(name, 0) + 1

    sys.setprofile(profile)
    try:
        exec(program, ns)
    finally:
        sys.setprofile(None)
    return counts
