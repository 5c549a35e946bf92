"""Periodic structured grids and centered finite-difference calculus.

A :class:`PeriodicGrid` is a uniform n-dimensional chart with period
``lengths[d]`` and ``sizes[d]`` nodes along axis ``d`` (node coordinates
``k * h_d`` with ``h_d = lengths[d] / sizes[d]``; indices wrap modulo
``sizes[d]``).  All derivative operators are second-order centered
stencils with periodic wraparound; mixed and higher derivatives are built
by composing stencils in a canonical (sorted-axis) order so that any
permutation of the axis arguments returns a bit-identical field.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

MAX_DIM = 3
MIN_NODES = 8


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform periodic chart: ``sizes[d]`` nodes over period ``lengths[d]``."""

    sizes: tuple[int, ...]
    lengths: tuple[float, ...]

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        lengths = tuple(float(length) for length in self.lengths)
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "lengths", lengths)
        if not 1 <= len(sizes) <= MAX_DIM:
            raise ValueError(f"dimension must be in [1, {MAX_DIM}], got {len(sizes)}")
        if len(lengths) != len(sizes):
            raise ValueError("sizes and lengths must have equal length")
        if any(s < MIN_NODES for s in sizes):
            raise ValueError(f"need at least {MIN_NODES} nodes per axis, got {sizes}")
        if any(length <= 0 for length in lengths):
            raise ValueError(f"periods must be positive, got {lengths}")

    @property
    def ndim(self) -> int:
        return len(self.sizes)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.sizes

    @property
    def spacings(self) -> tuple[float, ...]:
        return tuple(length / n for length, n in zip(self.lengths, self.sizes))

    @property
    def num_nodes(self) -> int:
        return int(np.prod(self.sizes))

    def axis_coordinates(self, axis: int) -> np.ndarray:
        """1-D array of node coordinates along one axis."""
        self._check_axis(axis)
        return np.arange(self.sizes[axis]) * self.spacings[axis]

    def coordinate_arrays(self) -> tuple[np.ndarray, ...]:
        """Full node-coordinate arrays, one per axis, each of shape ``self.shape``."""
        axes = [self.axis_coordinates(d) for d in range(self.ndim)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def nearest_node(self, coords: Sequence[float]) -> tuple[int, ...]:
        """Index of the node closest to the given coordinates (periodic)."""
        if len(coords) != self.ndim:
            raise ValueError(f"expected {self.ndim} coordinates, got {len(coords)}")
        return tuple(
            int(round(c / h)) % n
            for c, h, n in zip(coords, self.spacings, self.sizes)
        )

    def refined(self, factor: int = 2) -> "PeriodicGrid":
        """Same chart with every axis node count multiplied by ``factor``."""
        return PeriodicGrid(tuple(s * factor for s in self.sizes), self.lengths)

    def _check_axis(self, axis: int) -> None:
        if not 0 <= axis < self.ndim:
            raise ValueError(f"axis {axis} out of range for dimension {self.ndim}")


class ScalarField:
    """One float64 value per grid node.  Immutable after construction."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: PeriodicGrid, values):
        arr = np.asarray(values, dtype=np.float64)
        if arr.shape != grid.shape:
            raise ValueError(f"field shape {arr.shape} does not match grid {grid.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("field contains non-finite values")
        arr = np.array(arr)  # private copy
        arr.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", arr)

    def __setattr__(self, name, value):
        raise AttributeError("ScalarField is immutable")

    @classmethod
    def zeros(cls, grid: PeriodicGrid) -> "ScalarField":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def constant(cls, grid: PeriodicGrid, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(value)))

    @classmethod
    def from_function(cls, grid: PeriodicGrid, fn: Callable[..., np.ndarray]) -> "ScalarField":
        """Evaluate ``fn(x_1, ..., x_n)`` on the node coordinates."""
        return cls(grid, fn(*grid.coordinate_arrays()))

    def value_at(self, index: Sequence[int]) -> float:
        return float(self.values[tuple(index)])

    # Linear-space operations; scalars only on the multiplicative side.
    def __add__(self, other: "ScalarField") -> "ScalarField":
        self._check_same_grid(other)
        return ScalarField(self.grid, self.values + other.values)

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        self._check_same_grid(other)
        return ScalarField(self.grid, self.values - other.values)

    def __mul__(self, scalar: float) -> "ScalarField":
        return ScalarField(self.grid, self.values * float(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar: float) -> "ScalarField":
        return ScalarField(self.grid, self.values / float(scalar))

    def __neg__(self) -> "ScalarField":
        return ScalarField(self.grid, -self.values)

    def _check_same_grid(self, other: "ScalarField") -> None:
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")


# --- stencil kernels (periodic, second order) -------------------------------

def _diff1(values: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Centered first difference (f(x+h) - f(x-h)) / (2h)."""
    return (np.roll(values, -1, axis) - np.roll(values, 1, axis)) / (2.0 * h)


def _diff2(values: np.ndarray, axis: int, h: float) -> np.ndarray:
    """3-point second difference (f(x+h) - 2 f(x) + f(x-h)) / h^2."""
    return (np.roll(values, -1, axis) - 2.0 * values + np.roll(values, 1, axis)) / (h * h)


def _composed_stencil(values: np.ndarray, axes: Sequence[int], spacings: Sequence[float]) -> np.ndarray:
    """Apply the canonical stencil composition for the axis multiset ``axes``.

    Distinct axes are processed in increasing order; a repeated axis
    contributes 3-point second-difference blocks, with one centered first
    difference left over when its multiplicity is odd.  The fixed order
    makes the result bit-identical under any permutation of ``axes``.
    """
    out = values
    for axis in sorted(set(axes)):
        count = list(axes).count(axis)
        h = spacings[axis]
        for _ in range(count // 2):
            out = _diff2(out, axis, h)
        if count % 2:
            out = _diff1(out, axis, h)
    return out


def _stencil_field(f: ScalarField, axes: Sequence[int]) -> ScalarField:
    for axis in axes:
        f.grid._check_axis(axis)
    return ScalarField(f.grid, _composed_stencil(f.values, axes, f.grid.spacings))


def partial(f: ScalarField, i: int) -> ScalarField:
    """Centered first derivative along axis ``i``."""
    return _stencil_field(f, (i,))


def partial2(f: ScalarField, i: int, j: int) -> ScalarField:
    """Second derivative: 3-point stencil for ``i == j``, composed centered
    first differences otherwise.  Symmetric in (i, j) bit-exactly."""
    return _stencil_field(f, (i, j))


def partial3(f: ScalarField, i: int, j: int, k: int) -> ScalarField:
    """Third derivative; invariant under permutation of the axis arguments."""
    return _stencil_field(f, (i, j, k))


def partial4(f: ScalarField, i: int, j: int, k: int, l: int) -> ScalarField:
    """Fourth derivative; invariant under permutation of the axis arguments."""
    return _stencil_field(f, (i, j, k, l))


def mean(f: ScalarField) -> float:
    """Arithmetic mean over nodes."""
    return float(np.mean(f.values))


def sup_norm(f: ScalarField) -> float:
    """Max of |value| over nodes."""
    return float(np.max(np.abs(f.values)))


def variance(f: ScalarField) -> float:
    """Population variance over nodes."""
    return float(np.var(f.values))
