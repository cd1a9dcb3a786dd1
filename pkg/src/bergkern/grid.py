"""Uniform rectangular grids in R^d."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Closed box ``[lower, upper]`` sampled with (approximately) spacing ``h``.

    The node count per axis is ``round(length / h) + 1`` so both faces of the
    box are nodes; the realised spacing per axis is in ``spacing``.
    """

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    h: float

    def __post_init__(self):
        lower = tuple(float(v) for v in np.atleast_1d(self.lower))
        upper = tuple(float(v) for v in np.atleast_1d(self.upper))
        if len(lower) != len(upper):
            raise ValueError("lower and upper corners differ in dimension")
        if self.h <= 0:
            raise ValueError("spacing must be positive")
        if any(u < l for l, u in zip(lower, upper)):
            raise ValueError("upper corner below lower corner")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "h", float(self.h))

    @property
    def dim(self) -> int:
        return len(self.lower)

    @cached_property
    def shape(self) -> tuple[int, ...]:
        return tuple(max(1, int(round((u - l) / self.h)) + 1) for l, u in zip(self.lower, self.upper))

    @cached_property
    def axes(self) -> list[np.ndarray]:
        return [np.linspace(l, u, n) for l, u, n in zip(self.lower, self.upper, self.shape)]

    @cached_property
    def spacing(self) -> np.ndarray:
        return np.array(
            [(u - l) / (n - 1) if n > 1 else self.h for l, u, n in zip(self.lower, self.upper, self.shape)]
        )

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @cached_property
    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def nearest_index(self, point) -> int:
        point = np.atleast_1d(np.asarray(point, dtype=float))
        idx = []
        for p, l, s, n in zip(point, self.lower, self.spacing, self.shape):
            i = int(round((p - l) / s)) if n > 1 else 0
            idx.append(min(max(i, 0), n - 1))
        return int(np.ravel_multi_index(tuple(idx), self.shape))

    def same_as(self, other: "Grid") -> bool:
        return self.shape == other.shape and np.allclose(self.lower, other.lower) and np.allclose(
            self.upper, other.upper
        )


def shifted(values: np.ndarray, offset, fill=np.nan) -> np.ndarray:
    """out[i] = values[i + offset] where defined, ``fill`` elsewhere."""
    out = np.full(values.shape, fill, dtype=np.result_type(values.dtype, type(fill)))
    src, dst = [], []
    for o, n in zip(offset, values.shape):
        if abs(o) >= n:
            return out
        if o >= 0:
            src.append(slice(o, n))
            dst.append(slice(0, n - o))
        else:
            src.append(slice(0, n + o))
            dst.append(slice(-o, n))
    out[tuple(dst)] = values[tuple(src)]
    return out
