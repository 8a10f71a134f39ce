"""Bundled example domains.

``simple`` is the two-fluent P/Q domain.  :func:`blocks_world` renders the
blocks-world description for any number of blocks; the marketing graphs for
the decision layer live in :mod:`pbcmdp.domains.marketing`.
"""

from __future__ import annotations

import itertools
from importlib import resources

from ..lang import ActionDescription
from ..parser import parse_description


def simple_text() -> str:
    return resources.files(__package__).joinpath("simple.pbcp").read_text(encoding="utf-8")


def simple() -> ActionDescription:
    return parse_description(simple_text())


def blocks_world_text(n_blocks: int, rooms: tuple[str, ...] = ("R1", "R2"), p_move: float = 0.8) -> str:
    """pBC+ text for ``n_blocks`` blocks that start unstacked in the first room.

    The goal is to get every block into the last room.  Pairwise
    no-concurrency laws are written out explicitly.
    """
    if n_blocks < 1:
        raise ValueError("need at least one block")
    blocks = [f"B{i}" for i in range(1, n_blocks + 1)]
    goal = rooms[-1]
    lines = [
        f"% Blocks world: {n_blocks} block(s), rooms {', '.join(rooms)}.",
        f"sort Block = {{{', '.join(blocks)}}}.",
        f"sort Room = {{{', '.join(rooms)}}}.",
        "var x, x1, x2 : Block.",
        "var r, r1, r2 : Room.",
        "",
        "fluent In(Block) : Room.",
        "fluent OnTopOf(Block, Block).",
        "fluent static TopClear(Block), Above(Block, Block), GoalNotAchieved.",
        "action MoveTo(Block, Room), StackOn(Block, Block).",
        "pf Pf_Move.",
        "",
        f"caused Pf_Move = {{true: {p_move!r}, false: {1 - p_move!r}}}.",
        "MoveTo(x, r) causes In(x) = r if Pf_Move & GoalNotAchieved.",
        "MoveTo(x1, r2) causes ~OnTopOf(x1, x2) if Pf_Move & In(x1) = r1 & OnTopOf(x1, x2)"
        " & GoalNotAchieved where r1 != r2.",
        "StackOn(x1, x2) causes OnTopOf(x1, x2) if TopClear(x2) & In(x1) = r & In(x2) = r"
        " & ~Above(x2, x1) & GoalNotAchieved where x1 != x2.",
        "StackOn(x1, x2) causes ~OnTopOf(x1, x) if TopClear(x2) & In(x1) = r & In(x2) = r"
        " & OnTopOf(x1, x) & ~Above(x2, x1) & GoalNotAchieved where x2 != x, x1 != x2.",
        "constraint ~(OnTopOf(x1, x) & OnTopOf(x2, x)) where x1 != x2.",
        "constraint ~(OnTopOf(x, x1) & OnTopOf(x, x2)) where x1 != x2.",
        "default TopClear(x).",
        "caused ~TopClear(x) if OnTopOf(x1, x).",
        "default ~Above(x1, x2).",
        "caused Above(x1, x2) if OnTopOf(x1, x2).",
        "caused Above(x1, x2) if Above(x1, x) & Above(x, x2).",
        "caused false if Above(x1, x2) & Above(x2, x1).",
        "caused In(x1) = r if Above(x1, x2) & In(x2) = r.",
        "reward -1 if true after MoveTo(x, r).",
        "reward 10 if ~GoalNotAchieved after GoalNotAchieved.",
        f"caused GoalNotAchieved if In(x) = r where r != {goal}.",
        "default ~GoalNotAchieved.",
        "inertial In(x), OnTopOf(x1, x2).",
        f"initially In(x) = {rooms[0]}.",
        "initially ~OnTopOf(x1, x2).",
        "",
        "% no concurrency",
    ]
    actions = [f"MoveTo({b}, {r})" for b in blocks for r in rooms]
    actions += [f"StackOn({b1}, {b2})" for b1 in blocks for b2 in blocks]
    for a1, a2 in itertools.combinations(actions, 2):
        lines.append(f"{a1} & {a2} causes false.")
    return "\n".join(lines) + "\n"


def blocks_world(n_blocks: int, **kwargs) -> ActionDescription:
    return parse_description(blocks_world_text(n_blocks, **kwargs))
