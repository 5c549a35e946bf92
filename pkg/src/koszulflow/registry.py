"""Built-in example metrics: desk-scale instances with known closed forms.

Every example is deterministic; ``rough1d`` draws its spectral coefficients
from a fixed-seed generator (default seed 42) so that curvature-decay runs
are reproducible: for ascending mode number k it draws the cosine then the
sine coefficient, both standard normal, and weights the mode by k^-3.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .geometry import MetricField, PotentialMetric
from .grid import PeriodicGrid, ScalarField

TWO_PI = 2.0 * np.pi

ROUGH_DEFAULT_SEED = 42
ROUGH_AMPLITUDE = 0.4
ROUGH_BACKGROUND = 2.0


@dataclass(frozen=True)
class ExampleSpec:
    """Registry entry: name, constructor parameters, closed-form description."""

    name: str
    kind: str  # "potential" or "metric"
    default_sizes: tuple[int, ...]
    lengths: tuple[float, ...]
    doc: str
    builder: Callable[[PeriodicGrid, int], object]
    seeded: bool = False


def _flat(grid: PeriodicGrid, seed: int) -> PotentialMetric:
    return PotentialMetric(grid, np.eye(grid.ndim), ScalarField.zeros(grid))


def _sin1d(grid: PeriodicGrid, seed: int) -> PotentialMetric:
    psi = ScalarField.from_function(grid, lambda x: -np.sin(x))
    return PotentialMetric(grid, np.array([[2.0]]), psi)


def _bump2d(grid: PeriodicGrid, seed: int) -> PotentialMetric:
    psi = ScalarField.from_function(grid, lambda x, y: 0.1 * np.cos(x) * np.cos(y))
    return PotentialMetric(grid, np.eye(2), psi)


def rough_potential(grid: PeriodicGrid, seed: int = ROUGH_DEFAULT_SEED) -> ScalarField:
    """Random spectral potential with k^-3 coefficient decay (fixed recipe)."""
    rng = np.random.default_rng(seed)
    n_nodes = grid.sizes[0]
    x = grid.axis_coordinates(0)
    k_max = n_nodes // 2 - 1
    coeffs = rng.standard_normal((k_max, 2))
    psi = np.zeros(grid.shape)
    for k in range(1, k_max + 1):
        weight = ROUGH_AMPLITUDE * k**-3
        psi += weight * (coeffs[k - 1, 0] * np.cos(k * x) + coeffs[k - 1, 1] * np.sin(k * x))
    return ScalarField(grid, psi)


def _rough1d(grid: PeriodicGrid, seed: int) -> PotentialMetric:
    background = np.array([[ROUGH_BACKGROUND]])
    return PotentialMetric(grid, background, rough_potential(grid, seed))


def _twist2d(grid: PeriodicGrid, seed: int) -> MetricField:
    _, y = grid.coordinate_arrays()
    comps = np.stack(
        [1.0 + 0.3 * np.sin(y), np.zeros(grid.shape), np.ones(grid.shape)], axis=-1
    )
    return MetricField(grid, comps)


EXAMPLES: dict[str, ExampleSpec] = {
    spec.name: spec
    for spec in (
        ExampleSpec(
            name="flat",
            kind="potential",
            default_sizes=(32, 32),
            lengths=(TWO_PI, TWO_PI),
            doc="A = I, psi = 0: the flat metric, stationary under the flow",
            builder=_flat,
        ),
        ExampleSpec(
            name="sin1d",
            kind="potential",
            default_sizes=(512,),
            lengths=(TWO_PI,),
            doc="n=1, A = (2), psi = -sin x: g = 2 + sin x up to stencil symbol",
            builder=_sin1d,
        ),
        ExampleSpec(
            name="bump2d",
            kind="potential",
            default_sizes=(128, 128),
            lengths=(TWO_PI, TWO_PI),
            doc="n=2, A = I, psi = 0.1 cos x cos y (separable under rotation, hence flat)",
            builder=_bump2d,
        ),
        ExampleSpec(
            name="rough1d",
            kind="potential",
            default_sizes=(512,),
            lengths=(TWO_PI,),
            doc=(
                "n=1, A = (2), spectral psi: 0.4 * sum_k k^-3 (a_k cos kx + b_k sin kx), "
                "a_k, b_k standard normal, default seed 42"
            ),
            builder=_rough1d,
            seeded=True,
        ),
        ExampleSpec(
            name="twist2d",
            kind="metric",
            default_sizes=(128, 128),
            lengths=(TWO_PI, TWO_PI),
            doc="non-Hessian metric: g11 = 1 + 0.3 sin y, g22 = 1, g12 = 0",
            builder=_twist2d,
        ),
    )
}


def build_example(
    name: str,
    sizes: Sequence[int] | None = None,
    seed: int | None = None,
):
    """Instantiate a registry example, optionally overriding grid sizes/seed.

    Returns a :class:`PotentialMetric` or a bare :class:`MetricField`
    depending on the example kind.
    """
    if name not in EXAMPLES:
        raise KeyError(f"unknown example {name!r}; known: {sorted(EXAMPLES)}")
    spec = EXAMPLES[name]
    grid_sizes = tuple(int(s) for s in sizes) if sizes else spec.default_sizes
    if len(grid_sizes) != len(spec.default_sizes):
        raise ValueError(
            f"example {name!r} is {len(spec.default_sizes)}-dimensional, "
            f"got sizes {grid_sizes}"
        )
    grid = PeriodicGrid(grid_sizes, spec.lengths)
    return spec.builder(grid, ROUGH_DEFAULT_SEED if seed is None else seed)
