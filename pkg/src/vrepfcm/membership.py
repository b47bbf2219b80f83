"""Point-membership results shared by the geometry engines and the cell method."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass
class Hits:
    """Membership of a batch of points.

    ``cell`` and ``param`` identify the V-cell and its parameter point for
    inside points when the engine provides them (``-1`` / ``nan`` otherwise).
    """

    inside: np.ndarray
    cell: np.ndarray | None = None
    param: np.ndarray | None = None

    def __len__(self):
        return len(self.inside)

    def subset(self, idx) -> "Hits":
        return Hits(
            self.inside[idx],
            None if self.cell is None else self.cell[idx],
            None if self.param is None else self.param[idx],
        )

    @staticmethod
    def concat(parts: list["Hits"]) -> "Hits":
        if not parts:
            return Hits(np.zeros(0, dtype=bool))
        inside = np.concatenate([p.inside for p in parts])
        cell = param = None
        if all(p.cell is not None for p in parts):
            cell = np.concatenate([p.cell for p in parts])
        if all(p.param is not None for p in parts):
            param = np.concatenate([p.param for p in parts])
        return Hits(inside, cell, param)


class Membership:
    """Callable ``(N, 3) -> Hits``; wraps boolean-valued functions."""

    def __init__(self, fn: Callable[[np.ndarray], object]):
        self.fn = fn

    def __call__(self, x) -> Hits:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if len(x) == 0:
            return Hits(np.zeros(0, dtype=bool))
        r = self.fn(x)
        if isinstance(r, Hits):
            return r
        return Hits(np.asarray(r, dtype=bool).reshape(len(x)))


def as_membership(obj) -> Membership:
    if isinstance(obj, Membership):
        return obj
    if hasattr(obj, "membership"):
        return obj.membership()
    if callable(obj):
        return Membership(obj)
    raise TypeError(f"cannot use {type(obj).__name__} as a membership test")


def box_membership(lo, hi) -> Membership:
    """Closed axis-aligned box."""
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    return Membership(lambda x: np.all((x >= lo) & (x <= hi), axis=1))


def everywhere() -> Membership:
    return Membership(lambda x: np.ones(len(x), dtype=bool))
