"""Site states and configurations shared by the forward process and its dual."""

from __future__ import annotations

from enum import IntEnum
from typing import Iterable

import numpy as np

from .graph import FiniteGraph


class SiteState(IntEnum):
    VACANT = 0
    JUVENILE = 1
    MATURE = 2


class Configuration:
    """Immutable vector of site states in {0, 1, 2}.

    Text form is the states written in site order, e.g. ``"00200"``.
    """

    __slots__ = ("states",)

    def __init__(self, states: Iterable[int] | np.ndarray | str):
        if isinstance(states, str):
            if not set(states.strip()) <= set("012"):
                raise ValueError(f"configuration text must be over '012', got {states!r}")
            states = [int(ch) for ch in states.strip()]
        arr = np.array(states, dtype=np.int8).ravel()
        if arr.size and (arr.min() < 0 or arr.max() > 2):
            raise ValueError("site states must lie in {0, 1, 2}")
        arr.flags.writeable = False
        object.__setattr__(self, "states", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Configuration is immutable")

    def __reduce__(self):
        return Configuration, (self.states.copy(),)

    @classmethod
    def parse(cls, text: str) -> "Configuration":
        return cls(str(text))

    def __str__(self) -> str:
        return "".join(str(int(s)) for s in self.states)

    def __repr__(self) -> str:
        return f"Configuration({str(self)!r})"

    def __len__(self) -> int:
        return self.states.size

    def __getitem__(self, x):
        return int(self.states[x])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Configuration):
            return NotImplemented
        return np.array_equal(self.states, other.states)

    def __hash__(self) -> int:
        return hash(self.states.tobytes())

    def __or__(self, other: "Configuration") -> "Configuration":
        return join(self, other)

    def __le__(self, other: "Configuration") -> bool:
        return leq(self, other)

    def active_sites(self) -> np.ndarray:
        return np.flatnonzero(self.states)

    def replace(self, site: int, state: int) -> "Configuration":
        arr = self.states.copy()
        arr[site] = state
        return Configuration(arr)


def _same_length(a: Configuration, b: Configuration) -> None:
    if len(a) != len(b):
        raise ValueError(f"configurations have different lengths ({len(a)} vs {len(b)})")


def join(a: Configuration, b: Configuration) -> Configuration:
    """Pointwise maximum."""
    _same_length(a, b)
    return Configuration(np.maximum(a.states, b.states))


def leq(a: Configuration, b: Configuration) -> bool:
    _same_length(a, b)
    return bool(np.all(a.states <= b.states))


def compatible(xi: Configuration, zeta: Configuration) -> bool:
    """True if some site carries a forward state strong enough for the dual state there.

    A dual 2 is matched by a forward 1 or 2; a dual 1 only by a forward 2.
    The relation is deliberately asymmetric.
    """
    _same_length(xi, zeta)
    f, d = xi.states, zeta.states
    return bool(np.any(((d == 2) & (f >= 1)) | ((d == 1) & (f == 2))))


def compatible_arrays(f: np.ndarray, d: np.ndarray) -> bool:
    return bool(np.any(((d == 2) & (f >= 1)) | ((d == 1) & (f == 2))))


def empty(graph: FiniteGraph) -> Configuration:
    return Configuration(np.zeros(graph.n, dtype=np.int8))


def single_site(graph: FiniteGraph, x: int, state: int = SiteState.MATURE) -> Configuration:
    if not 0 <= x < graph.n:
        raise IndexError(f"site {x} out of range for a graph of {graph.n} sites")
    arr = np.zeros(graph.n, dtype=np.int8)
    arr[x] = state
    return Configuration(arr)


def all_mature(graph: FiniteGraph) -> Configuration:
    return Configuration(np.full(graph.n, SiteState.MATURE, dtype=np.int8))


def from_sites(graph: FiniteGraph, sites: Iterable[int], state: int = SiteState.MATURE) -> Configuration:
    arr = np.zeros(graph.n, dtype=np.int8)
    arr[np.asarray(list(sites), dtype=np.int64)] = state
    return Configuration(arr)


def is_empty(c: Configuration) -> bool:
    return not c.states.any()
