"""Chunk playability via A* under a discrete platformer movement model.

The agent walks on supported cells, jumps up to max_jump_height tiles, and
drifts horizontally at most one tile per vertical step while airborne, with
at most max_jump_span horizontal moves per airborne phase. Hazard tiles are
treated as passable for movement. Horizontal games must cross from any
standable cell in the leftmost column to one in the rightmost column;
vertical games from the bottom row to the top row. Falling off the bottom of
the grid or rising above its top row ends the attempt.

A queue-based flood (bfs_crossable) over the same move set serves as an
independent reachability oracle for the A* search.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .corpus import chunk_to_lines
from .errors import UncoveredTile, UnsupportedGame

SOLID, PASSABLE, HAZARD = "solid", "passable", "hazard"


@dataclass
class PlayabilityRules:
    game: str
    solidity: dict  # tile char -> solid | passable | hazard
    axis: str  # horizontal: left->right, vertical: bottom->top
    max_jump_height: int = 4
    max_jump_span: int = 5

    def __post_init__(self):
        if self.axis not in ("horizontal", "vertical"):
            raise UnsupportedGame(
                f"{self.game or 'game'}: playability needs a horizontal or vertical axis, "
                f"got {self.axis!r} (mixed-axis games have no start/finish criteria)"
            )
        for char, kind in self.solidity.items():
            if kind not in (SOLID, PASSABLE, HAZARD):
                raise UncoveredTile(f"tile {char!r} has unknown solidity {kind!r}")


def rules_from_manifest(manifest):
    return PlayabilityRules(
        game=manifest.game,
        solidity=dict(manifest.solidity),
        axis=manifest.axis,
        max_jump_height=manifest.jump_max_height,
        max_jump_span=manifest.jump_max_span,
    )


class _Grid:
    """Solidity-resolved view of a character grid."""

    def __init__(self, rows, rules):
        self.rows = rows
        self.height = len(rows)
        self.width = len(rows[0])
        solid = set()
        for r, row in enumerate(rows):
            for c, char in enumerate(row):
                kind = rules.solidity.get(char)
                if kind is None:
                    raise UncoveredTile(f"tile {char!r} missing from the solidity map")
                if kind == SOLID:
                    solid.add((r, c))
        self.solid = solid

    def passable(self, r, c):
        return 0 <= r < self.height and 0 <= c < self.width and (r, c) not in self.solid

    def standable(self, r, c):
        return self.passable(r, c) and r + 1 < self.height and (r + 1, c) in self.solid


# states: (row, col, ascent_left, drift_left); grounded states carry
# ascent = -1 and full drift so landing always reaches one canonical state
def _grounded(r, c, rules):
    return (r, c, -1, rules.max_jump_span)


def _successors(state, grid, rules):
    r, c, ascent, drift = state
    out = []
    if ascent < 0:  # standing
        for dc in (-1, 1):
            nc = c + dc
            if grid.passable(r, nc):
                if grid.standable(r, nc):
                    out.append(_grounded(r, nc, rules))
                else:
                    out.append((r, nc, 0, rules.max_jump_span))  # walked off a ledge
        out.append((r, c, rules.max_jump_height, rules.max_jump_span))  # launch a jump
        return out
    if ascent > 0:  # rising
        nr = r - 1
        if grid.passable(nr, c):
            out.append((nr, c, ascent - 1, drift))
        if drift > 0:
            for dc in (-1, 1):
                if grid.passable(nr, c + dc):
                    out.append((nr, c + dc, ascent - 1, drift - 1))
        out.append((r, c, 0, drift))  # cut the jump short
        return out
    # falling
    if grid.standable(r, c):  # ground directly below: land in place
        out.append(_grounded(r, c, rules))
        return out
    nr = r + 1
    landings = []
    if grid.passable(nr, c):
        landings.append((nr, c, drift))
    if drift > 0:
        for dc in (-1, 1):
            if grid.passable(nr, c + dc):
                landings.append((nr, c + dc, drift - 1))
    for lr, lc, ld in landings:
        if grid.standable(lr, lc):
            out.append(_grounded(lr, lc, rules))
        else:
            out.append((lr, lc, 0, ld))
    return out


def _start_states(grid, rules):
    if rules.axis == "horizontal":
        cells = [(r, 0) for r in range(grid.height) if grid.standable(r, 0)]
    else:
        # enter from the bottom edge: stand on any bottom-row solid, or on
        # the window boundary itself where the bottom row is open
        bottom = grid.height - 1
        cells = [(bottom - 1, c) for c in range(grid.width) if grid.standable(bottom - 1, c)]
        cells += [(bottom, c) for c in range(grid.width) if grid.passable(bottom, c)]
    return [_grounded(r, c, rules) for r, c in cells]


def _is_goal(state, grid, rules):
    r, c, ascent, _ = state
    if rules.axis == "horizontal":
        # stand somewhere in the rightmost column
        return ascent < 0 and c == grid.width - 1
    # occupy the top row in any movement phase
    return r == 0


def _heuristic(state, grid, rules):
    r, c, _, _ = state
    if rules.axis == "horizontal":
        return grid.width - 1 - c
    return r


def crossable(rows, rules):
    """A* over the movement model; returns (reachable, path of (row, col))."""
    grid = _Grid(rows, rules)
    starts = _start_states(grid, rules)
    if not starts:
        return False, None
    counter = 0
    heap = []
    best_g = {}
    parent = {}
    for s in starts:
        heapq.heappush(heap, (_heuristic(s, grid, rules), counter, 0, s))
        counter += 1
        best_g[s] = 0
        parent[s] = None
    while heap:
        _, _, g, state = heapq.heappop(heap)
        if g > best_g.get(state, np.inf):
            continue
        if _is_goal(state, grid, rules):
            path = []
            cur = state
            while cur is not None:
                path.append((cur[0], cur[1]))
                cur = parent[cur]
            return True, path[::-1]
        for nxt in _successors(state, grid, rules):
            ng = g + 1
            if ng < best_g.get(nxt, np.inf):
                best_g[nxt] = ng
                parent[nxt] = state
                heapq.heappush(heap, (ng + _heuristic(nxt, grid, rules), counter, ng, nxt))
                counter += 1
    return False, None


def bfs_crossable(rows, rules):
    """Plain breadth-first flood over the same move set; reachability oracle."""
    grid = _Grid(rows, rules)
    starts = _start_states(grid, rules)
    seen = set(starts)
    queue = deque(starts)
    while queue:
        state = queue.popleft()
        if _is_goal(state, grid, rules):
            return True
        for nxt in _successors(state, grid, rules):
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return False


def playable(chunk, rules, vocab):
    """(playable, path) for one chunk."""
    return crossable(chunk_to_lines(chunk, vocab), rules)


@dataclass
class PlayabilityResult:
    total: int
    playable_count: int
    per_component: list = field(default_factory=list)  # (playable, total) per component

    @property
    def fraction(self):
        return self.playable_count / self.total if self.total else 0.0

    def to_dict(self):
        return {
            "total": self.total,
            "playable": self.playable_count,
            "fraction": self.fraction,
            "per_component": [
                {"component": i, "playable": p, "total": t}
                for i, (p, t) in enumerate(self.per_component)
            ],
        }


def playability_suite(generate_fn, k, rules, vocab, rng, total_budget=10000):
    """Sample floor(total_budget / k) chunks from each component, aggregate,
    and report the playable fraction."""
    per = total_budget // k
    per_component = []
    total = 0
    good = 0
    for component in range(k):
        chunks = generate_fn(component, per, rng)
        ok = sum(1 for ch in chunks if playable(ch, rules, vocab)[0])
        per_component.append((ok, len(chunks)))
        good += ok
        total += len(chunks)
    return PlayabilityResult(total=total, playable_count=good, per_component=per_component)
