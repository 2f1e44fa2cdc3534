"""Behavior-tree engine.

Interior nodes route ticks by child status; Sequence and Selector are
memory-less (they restart from their first child every tick), so long
actions report Running from their own world-side progress state.
Repeat/Retry keep the one counter that tick-count semantics require.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable


class TickStatus(enum.Enum):
    Success = "Success"
    Failure = "Failure"
    Running = "Running"


class BtNode:
    def tick(self, world) -> TickStatus:
        raise NotImplementedError

    def reset(self) -> None:
        """Clear counters (Repeat/Retry) recursively."""
        for child in getattr(self, "children", ()):
            child.reset()


@dataclass
class Action(BtNode):
    name: str
    fn: Callable[[object], TickStatus]

    def tick(self, world) -> TickStatus:
        status = self.fn(world)
        if not isinstance(status, TickStatus):
            raise TypeError(f"action {self.name!r} returned {status!r}")
        return status

    def reset(self) -> None:
        pass


@dataclass
class Condition(BtNode):
    name: str
    fn: Callable[[object], bool]

    def tick(self, world) -> TickStatus:
        return TickStatus.Success if self.fn(world) else TickStatus.Failure

    def reset(self) -> None:
        pass


@dataclass
class Sequence(BtNode):
    children: list[BtNode] = field(default_factory=list)

    def tick(self, world) -> TickStatus:
        for child in self.children:
            status = child.tick(world)
            if status is not TickStatus.Success:
                return status
        return TickStatus.Success


@dataclass
class Selector(BtNode):
    children: list[BtNode] = field(default_factory=list)

    def tick(self, world) -> TickStatus:
        for child in self.children:
            status = child.tick(world)
            if status is not TickStatus.Failure:
                return status
        return TickStatus.Failure


@dataclass
class Repeat(BtNode):
    """Succeeds once the child has succeeded n times; Running in between."""
    n: int
    child: BtNode
    _count: int = field(default=0, repr=False)

    @property
    def children(self):
        return (self.child,)

    def tick(self, world) -> TickStatus:
        status = self.child.tick(world)
        if status is TickStatus.Failure:
            self._count = 0
            return TickStatus.Failure
        if status is TickStatus.Success:
            self._count += 1
            if self._count >= self.n:
                self._count = 0
                return TickStatus.Success
        return TickStatus.Running

    def reset(self) -> None:
        self._count = 0
        self.child.reset()


@dataclass
class Retry(BtNode):
    """Fails only after the child failed n times; Running in between."""
    n: int
    child: BtNode
    _count: int = field(default=0, repr=False)

    @property
    def children(self):
        return (self.child,)

    def tick(self, world) -> TickStatus:
        status = self.child.tick(world)
        if status is TickStatus.Success:
            self._count = 0
            return TickStatus.Success
        if status is TickStatus.Failure:
            self._count += 1
            if self._count >= self.n:
                self._count = 0
                return TickStatus.Failure
        return TickStatus.Running

    def reset(self) -> None:
        self._count = 0
        self.child.reset()


def bt_tick(root: BtNode, world) -> TickStatus:
    return root.tick(world)
