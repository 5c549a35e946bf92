"""Metrics, potentials and curvature on a periodic affine chart.

Quantities computed here, all in the affine coordinates of the chart:

* ``gamma``     difference tensor between the Levi-Civita and flat
  connections; its mixed components are the Christoffel symbols.
* ``Q``         Hessian curvature tensor,
  ``Q_ijkl = phi_ijkl / 2 - g^pq phi_ikp phi_jlq / 2`` for a metric
  ``g = A + dd(psi)`` with full potential ``phi = x'Ax/2 + psi``.
* ``alpha, kappa, beta``  Koszul forms and the flow tensor:
  ``alpha = d(log det g) / 2``, ``kappa = dd(log det g) / 2``,
  ``beta = -dd(log det g)``; hence ``kappa = -beta / 2`` identically.
* ``riemann``   curvature of g, via gamma products or by antisymmetrizing Q.
* pullback quantities of the Hermitian metric induced on the complexified
  chart (the tangent-bundle pullback): Chern torsion, whose vanishing
  characterizes Hessian metrics, and the Kaehler curvature, which equals
  ``-Q/2``.  Both are computed at base level; holomorphic derivatives of
  base functions carry the conventional factor 1/2 (see docs/conventions.md).

Degenerate metrics are rejected: any node whose minimum eigenvalue falls
below ``MIN_EIGENVALUE`` raises :class:`NotPositiveDefinite` rather than
being regularized, since silent regularization corrupts the curvature
identities checked by the test suite.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .grid import PeriodicGrid, ScalarField, partial, partial2, partial3, partial4

MIN_EIGENVALUE = 1e-10


class NotPositiveDefinite(Exception):
    """A symmetric matrix field failed nodewise positive definiteness."""

    def __init__(self, node: tuple[int, ...], min_eigenvalue: float):
        self.node = node
        self.min_eigenvalue = min_eigenvalue
        super().__init__(
            f"matrix field not positive definite at node {node} "
            f"(min eigenvalue {min_eigenvalue:.3e})"
        )


# --- symmetric-pair index bookkeeping ---------------------------------------

def sym_pairs(n: int) -> list[tuple[int, int]]:
    """Upper-triangle index pairs (i, j), i <= j, in row-major order."""
    return [(i, j) for i in range(n) for j in range(i, n)]


def pair_index(n: int, i: int, j: int) -> int:
    if i > j:
        i, j = j, i
    return i * n - (i * (i - 1)) // 2 + (j - i)


def _tri_index(m: int, a: int, b: int) -> int:
    if a > b:
        a, b = b, a
    return a * m - (a * (a - 1)) // 2 + (b - a)


# --- symmetric 2-tensor fields ----------------------------------------------

class Sym2Field:
    """Node-indexed symmetric n x n matrices, stored as upper triangles.

    Component storage has shape ``(*grid.shape, n(n+1)/2)`` with the pair
    order of :func:`sym_pairs`; symmetry is structural.
    """

    __slots__ = ("grid", "components")

    def __init__(self, grid: PeriodicGrid, components):
        comps = np.asarray(components, dtype=np.float64)
        npairs = len(sym_pairs(grid.ndim))
        if comps.shape != (*grid.shape, npairs):
            raise ValueError(
                f"component shape {comps.shape} does not match {(*grid.shape, npairs)}"
            )
        if not np.all(np.isfinite(comps)):
            raise ValueError("tensor field contains non-finite values")
        comps = np.array(comps)
        comps.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "components", comps)

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    @classmethod
    def from_matrices(cls, grid: PeriodicGrid, mats: np.ndarray):
        """Build from a full ``(*shape, n, n)`` array; the upper triangle is used."""
        n = grid.ndim
        comps = np.stack([mats[..., i, j] for i, j in sym_pairs(n)], axis=-1)
        return cls(grid, comps)

    @classmethod
    def constant(cls, grid: PeriodicGrid, matrix: np.ndarray):
        matrix = np.asarray(matrix, dtype=np.float64)
        n = grid.ndim
        comps = np.empty((*grid.shape, len(sym_pairs(n))))
        for p, (i, j) in enumerate(sym_pairs(n)):
            comps[..., p] = matrix[i, j]
        return cls(grid, comps)

    def component(self, i: int, j: int) -> np.ndarray:
        return self.components[..., pair_index(self.grid.ndim, i, j)]

    def component_field(self, i: int, j: int) -> ScalarField:
        return ScalarField(self.grid, self.component(i, j))

    def matrices(self) -> np.ndarray:
        """Full ``(*shape, n, n)`` array (materialized)."""
        n = self.grid.ndim
        mats = np.empty((*self.grid.shape, n, n))
        for i, j in sym_pairs(n):
            mats[..., i, j] = self.component(i, j)
            mats[..., j, i] = self.component(i, j)
        return mats

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.components)))

    def __add__(self, other: "Sym2Field") -> "Sym2Field":
        return Sym2Field(self.grid, self.components + other.components)

    def __sub__(self, other: "Sym2Field") -> "Sym2Field":
        return Sym2Field(self.grid, self.components - other.components)

    def __mul__(self, scalar: float) -> "Sym2Field":
        return Sym2Field(self.grid, self.components * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "Sym2Field":
        return Sym2Field(self.grid, -self.components)


def sym_det(comps: np.ndarray, n: int) -> np.ndarray:
    """Determinant of a pair-stored symmetric matrix field, explicit for n <= 3."""
    if n == 1:
        return comps[..., 0].copy()
    if n == 2:
        a, b, c = comps[..., 0], comps[..., 1], comps[..., 2]
        return a * c - b * b
    a, b, c, d, e, f = (comps[..., p] for p in range(6))
    # rows: [a b c; b d e; c e f]
    return a * (d * f - e * e) - b * (b * f - e * c) + c * (b * e - d * c)


def sym_inverse_matrices(comps: np.ndarray, n: int) -> np.ndarray:
    """Inverse as a full ``(..., n, n)`` array, via the adjugate for n <= 3."""
    det = sym_det(comps, n)
    inv = np.empty((*comps.shape[:-1], n, n))
    if n == 1:
        inv[..., 0, 0] = 1.0 / det
        return inv
    if n == 2:
        a, b, c = comps[..., 0], comps[..., 1], comps[..., 2]
        inv[..., 0, 0] = c / det
        inv[..., 1, 1] = a / det
        inv[..., 0, 1] = inv[..., 1, 0] = -b / det
        return inv
    a, b, c, d, e, f = (comps[..., p] for p in range(6))
    inv[..., 0, 0] = (d * f - e * e) / det
    inv[..., 0, 1] = inv[..., 1, 0] = (c * e - b * f) / det
    inv[..., 0, 2] = inv[..., 2, 0] = (b * e - c * d) / det
    inv[..., 1, 1] = (a * f - c * c) / det
    inv[..., 1, 2] = inv[..., 2, 1] = (b * c - a * e) / det
    inv[..., 2, 2] = (a * d - b * b) / det
    return inv


def sym_min_eigenvalues(comps: np.ndarray, n: int) -> np.ndarray:
    """Nodewise smallest eigenvalue of a pair-stored symmetric matrix field."""
    if n == 1:
        return comps[..., 0]
    if n == 2:
        a, b, c = comps[..., 0], comps[..., 1], comps[..., 2]
        half_trace = 0.5 * (a + c)
        radius = np.sqrt((0.5 * (a - c)) ** 2 + b * b)
        return half_trace - radius
    mats = np.empty((*comps.shape[:-1], n, n))
    for i, j in sym_pairs(n):
        p = pair_index(n, i, j)
        mats[..., i, j] = comps[..., p]
        mats[..., j, i] = comps[..., p]
    return np.linalg.eigvalsh(mats)[..., 0]


class MetricField(Sym2Field):
    """A :class:`Sym2Field` that is positive definite at every node."""

    __slots__ = ()

    def __init__(self, grid: PeriodicGrid, components):
        super().__init__(grid, components)
        eigs = sym_min_eigenvalues(self.components, grid.ndim)
        worst = np.argmin(eigs)
        if eigs.flat[worst] < MIN_EIGENVALUE:
            node = tuple(np.unravel_index(worst, grid.shape))
            raise NotPositiveDefinite(node, float(eigs.flat[worst]))

    @classmethod
    def from_sym2(cls, t: Sym2Field) -> "MetricField":
        return cls(t.grid, t.components)

    def det(self) -> np.ndarray:
        return sym_det(self.components, self.grid.ndim)

    def log_det(self) -> ScalarField:
        return ScalarField(self.grid, np.log(self.det()))

    def inverse_matrices(self) -> np.ndarray:
        return sym_inverse_matrices(self.components, self.grid.ndim)

    def min_eigenvalue(self) -> float:
        return float(np.min(sym_min_eigenvalues(self.components, self.grid.ndim)))


def pencil_eigenvalue_range(g: MetricField, g0: MetricField) -> tuple[float, float]:
    """Tight constants (lam, Lam) with lam*g0 <= g <= Lam*g0 over all nodes.

    Generalized eigenvalues of (g, g0) per node, computed as the ordinary
    eigenvalues of L^-1 g L^-T with L the Cholesky factor of g0.
    """
    if g.grid != g0.grid:
        raise ValueError("metrics live on different grids")
    n = g.grid.ndim
    if n == 1:
        ratio = g.components[..., 0] / g0.components[..., 0]
        return float(ratio.min()), float(ratio.max())
    chol = np.linalg.cholesky(g0.matrices())
    linv = np.linalg.inv(chol)
    mid = linv @ g.matrices() @ np.swapaxes(linv, -1, -2)
    eigs = np.linalg.eigvalsh(mid)
    return float(eigs[..., 0].min()), float(eigs[..., -1].max())


# --- potentials ---------------------------------------------------------------

@dataclass(frozen=True)
class PotentialMetric:
    """Hessian-metric data ``g = A + dd(psi)``.

    ``A`` is a constant symmetric positive-definite background and ``psi``
    a periodic potential; the full (non-periodic) potential of the metric
    is ``x'Ax/2 + psi(x)``.
    """

    grid: PeriodicGrid
    background: np.ndarray
    psi: ScalarField

    def __post_init__(self):
        a = np.asarray(self.background, dtype=np.float64)
        n = self.grid.ndim
        if a.shape != (n, n):
            raise ValueError(f"background must be {n}x{n}, got {a.shape}")
        if not np.allclose(a, a.T):
            raise ValueError("background matrix must be symmetric")
        if np.min(np.linalg.eigvalsh(a)) <= 0:
            raise ValueError("background matrix must be positive definite")
        a = 0.5 * (a + a.T)
        a.flags.writeable = False
        object.__setattr__(self, "background", a)
        if self.psi.grid != self.grid:
            raise ValueError("potential lives on a different grid")

    def scaled(self, c: float) -> "PotentialMetric":
        """The potential metric of ``c * (full potential)``, i.e. ``c*A, c*psi``."""
        return PotentialMetric(self.grid, self.background * c, self.psi * c)


def potential_hessian(psi: ScalarField) -> Sym2Field:
    """Second derivatives of the potential as composed first differences.

    Composed centered first differences are used for the diagonal as well
    (not the 3-point stencil): all components then commute with further
    first differences at rounding level, which is what makes the discrete
    Hessian-ness and torsion identities exact for constructed metrics.
    """
    grid = psi.grid
    n = grid.ndim
    pairs = sym_pairs(n)
    comps = np.empty((*grid.shape, len(pairs)))
    for p, (i, j) in enumerate(pairs):
        comps[..., p] = partial(partial(psi, i), j).values
    return Sym2Field(grid, comps)


def metric_from_potential(pm: PotentialMetric) -> MetricField:
    """Assemble ``g = A + dd(psi)``; raises NotPositiveDefinite if the
    potential is not uniformly convex at grid resolution."""
    hess = potential_hessian(pm.psi)
    comps = hess.components.copy()
    for p, (i, j) in enumerate(sym_pairs(pm.grid.ndim)):
        comps[..., p] += pm.background[i, j]
    return MetricField(pm.grid, comps)


# --- first derivatives of a metric, shared by several operations -------------

def metric_partials(g: Sym2Field) -> np.ndarray:
    """Array ``D[..., k, i, j] = partial_k g_ij``."""
    n = g.grid.ndim
    out = np.empty((*g.grid.shape, n, n, n))
    for i, j in sym_pairs(n):
        comp = ScalarField(g.grid, g.component(i, j))
        for k in range(n):
            d = partial(comp, k).values
            out[..., k, i, j] = d
            out[..., k, j, i] = d
    return out


def hessian_defect(g: Sym2Field) -> float:
    """Sup over nodes and index triples of |partial_k g_ij - partial_i g_kj|.

    Zero (to truncation) exactly when g is a Hessian metric.
    """
    d = metric_partials(g)
    return float(np.max(np.abs(d - np.swapaxes(d, -3, -2))))


# --- connection and Koszul forms ---------------------------------------------

def christoffel(g: MetricField) -> tuple[np.ndarray, np.ndarray]:
    """Difference tensor (Christoffel symbols) of g.

    Returns ``(gamma_mixed, gamma_lower)`` with
    ``gamma_lower[..., i, j, k] = (partial_j g_ik + partial_k g_ij - partial_i g_jk)/2``
    and ``gamma_mixed = g^{-1} gamma_lower`` in the first slot.  Both are
    symmetric in the last two slots by construction.
    """
    d = metric_partials(g)
    # gamma_lower[i, j, k] = 0.5 * (d[j, i, k] + d[k, i, j] - d[i, j, k])
    term1 = np.swapaxes(d, -3, -2)                       # [..., i, j, k] <- d[j, i, k]
    term2 = np.moveaxis(d, (-3, -2, -1), (-1, -3, -2))   # [..., i, j, k] <- d[k, i, j]
    gamma_lower = 0.5 * (term1 + term2 - d)
    ginv = g.inverse_matrices()
    gamma_mixed = np.einsum("...il,...ljk->...ijk", ginv, gamma_lower)
    return gamma_mixed, gamma_lower


def log_det_hessian(g: MetricField) -> np.ndarray:
    """Pair-stored second derivatives of log det g (shared stencil path)."""
    ldg = g.log_det()
    n = g.grid.ndim
    pairs = sym_pairs(n)
    comps = np.empty((*g.grid.shape, len(pairs)))
    for p, (i, j) in enumerate(pairs):
        comps[..., p] = partial2(ldg, i, j).values
    return comps


def koszul(g: MetricField) -> tuple[np.ndarray, Sym2Field, Sym2Field]:
    """First and second Koszul forms and the flow tensor of g.

    Returns ``(alpha, kappa, beta)`` with ``alpha[..., i] = partial_i log det g / 2``,
    ``kappa = dd(log det g)/2`` and ``beta = -dd(log det g)``; the three share
    one stencil evaluation, so ``kappa = -beta/2`` holds exactly.
    """
    ldg = g.log_det()
    n = g.grid.ndim
    alpha = np.empty((*g.grid.shape, n))
    for i in range(n):
        alpha[..., i] = 0.5 * partial(ldg, i).values
    dd = log_det_hessian(g)
    kappa = Sym2Field(g.grid, 0.5 * dd)
    beta = Sym2Field(g.grid, -dd)
    return alpha, kappa, beta


def beta_form(g: MetricField) -> Sym2Field:
    """Flow tensor ``beta_ij = -partial_i partial_j log det g``."""
    return Sym2Field(g.grid, -log_det_hessian(g))


# --- Hessian curvature tensor --------------------------------------------------

class HessianCurvature:
    """The 4-tensor Q, stored on its symmetry group.

    Q is invariant under swapping slots (1,3), swapping slots (2,4), and
    swapping the pairs; storage keeps one component per unordered pair of
    index pairs, ``m(m+1)/2`` components with ``m = n(n+1)/2``.
    """

    __slots__ = ("grid", "components")

    def __init__(self, grid: PeriodicGrid, components):
        m = len(sym_pairs(grid.ndim))
        ncomp = m * (m + 1) // 2
        comps = np.asarray(components, dtype=np.float64)
        if comps.shape != (*grid.shape, ncomp):
            raise ValueError(f"expected {(*grid.shape, ncomp)}, got {comps.shape}")
        comps = np.array(comps)
        comps.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "components", comps)

    def __setattr__(self, name, value):
        raise AttributeError("HessianCurvature is immutable")

    def component(self, i: int, j: int, k: int, l: int) -> np.ndarray:
        n = self.grid.ndim
        m = len(sym_pairs(n))
        a = pair_index(n, i, k)
        b = pair_index(n, j, l)
        return self.components[..., _tri_index(m, a, b)]

    def full(self) -> np.ndarray:
        """Materialize the full ``(*shape, n, n, n, n)`` array."""
        n = self.grid.ndim
        out = np.empty((*self.grid.shape, n, n, n, n))
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    for l in range(n):
                        out[..., i, j, k, l] = self.component(i, j, k, l)
        return out

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.components)))


def hessian_curvature(pm: PotentialMetric) -> HessianCurvature:
    """Q of a potential metric, from third and fourth potential derivatives.

    ``Q_ijkl = phi_ijkl/2 - g^pq phi_ikp phi_jlq / 2``; the quadratic
    background drops out of third and higher derivatives, so only psi is
    differentiated.
    """
    g = metric_from_potential(pm)
    ginv = g.inverse_matrices()
    grid, n = pm.grid, pm.grid.ndim

    third = np.empty((*grid.shape, n, n, n))
    for i in range(n):
        for j in range(i, n):
            for k in range(j, n):
                d = partial3(pm.psi, i, j, k).values
                for perm in set(itertools.permutations((i, j, k))):
                    third[(..., *perm)] = d

    m = len(sym_pairs(n))
    comps = np.empty((*grid.shape, m * (m + 1) // 2))
    pairs = sym_pairs(n)
    for a, (i, k) in enumerate(pairs):
        for b, (j, l) in enumerate(pairs):
            if a > b:
                continue
            fourth = partial4(pm.psi, i, j, k, l).values
            quad = np.einsum("...pq,...p,...q->...", ginv, third[..., i, k, :], third[..., j, l, :])
            comps[..., _tri_index(m, a, b)] = 0.5 * fourth - 0.5 * quad
    return HessianCurvature(grid, comps)


def hessian_curvature_from_metric(g: MetricField) -> np.ndarray:
    """Q computed from the metric alone (full array, no symmetric storage).

    ``Q_ijkl = partial_k partial_l g_ij / 2 - g^pq (partial_k g_ip)(partial_l g_jq) / 2``;
    agrees with :func:`hessian_curvature` at second order for Hessian
    metrics, and is the route used for diagnostics along a flow, where only
    the metric is carried.
    """
    n = g.grid.ndim
    ginv = g.inverse_matrices()
    d = metric_partials(g)
    d2 = np.empty((*g.grid.shape, n, n, n, n))
    for i, j in sym_pairs(n):
        comp = ScalarField(g.grid, g.component(i, j))
        for k, l in sym_pairs(n):
            v = partial2(comp, k, l).values
            d2[..., i, j, k, l] = v
            d2[..., i, j, l, k] = v
            d2[..., j, i, k, l] = v
            d2[..., j, i, l, k] = v
    quad = np.einsum("...pq,...kip,...ljq->...ijkl", ginv, d, d)
    return 0.5 * d2 - 0.5 * quad


def curvature_gnorm(q_full: np.ndarray, g: MetricField) -> np.ndarray:
    """Nodewise g-contraction norm |Q|_g (all four slots raised against Q)."""
    ginv = g.inverse_matrices()
    raised = np.einsum("...ijkl,...ip->...pjkl", q_full, ginv)
    raised = np.einsum("...pjkl,...jq->...pqkl", raised, ginv)
    raised = np.einsum("...pqkl,...kr->...pqrl", raised, ginv)
    raised = np.einsum("...pqrl,...ls->...pqrs", raised, ginv)
    sq = np.einsum("...pqrs,...pqrs->...", raised, q_full)
    return np.sqrt(np.maximum(sq, 0.0))


# --- Riemann tensor, two routes -----------------------------------------------

def riemann_from_gamma(g: MetricField) -> np.ndarray:
    """Lowered curvature tensor from quadratic products of the difference tensor."""
    gamma_mixed, _ = christoffel(g)
    r_up = np.einsum("...ilm,...mjk->...ijkl", gamma_mixed, gamma_mixed) - np.einsum(
        "...ikm,...mjl->...ijkl", gamma_mixed, gamma_mixed
    )
    return np.einsum("...ip,...pjkl->...ijkl", g.matrices(), r_up)


def riemann_from_q(q: HessianCurvature) -> np.ndarray:
    """Lowered curvature tensor by antisymmetrizing Q in its first two slots."""
    full = q.full()
    return 0.5 * (full - np.swapaxes(full, -4, -3))


def contraction_identity_defect(q: HessianCurvature, g: MetricField, beta: Sym2Field) -> float:
    """Sup-norm of ``beta_ij + 2 g^kl Q_ijkl`` (trace consistency of Q with beta)."""
    ginv = g.inverse_matrices()
    trace = np.einsum("...ijkl,...kl->...ij", q.full(), ginv)
    return float(np.max(np.abs(beta.matrices() + 2.0 * trace)))


# --- pullback Hermitian quantities ---------------------------------------------

def pullback_chern_torsion(g: MetricField) -> tuple[np.ndarray, float]:
    """Chern torsion of the pullback Hermitian metric, at base level.

    ``T^k_ij = g^kl (partial_i g_jl - partial_j g_il) / 2`` (the factor 1/2
    from holomorphic derivatives of base functions); returns the component
    array ``T[..., k, i, j]`` and the sup over nodes of the pointwise fully
    g-contracted norm.  The norm vanishes (to truncation) exactly when g is
    Hessian.
    """
    d = metric_partials(g)
    # anti[..., i, j, l] = partial_i g_jl - partial_j g_il
    anti = d - np.swapaxes(d, -3, -2)
    ginv = g.inverse_matrices()
    torsion = 0.5 * np.einsum("...kl,...ijl->...kij", ginv, anti)
    gmat = g.matrices()
    sq = np.einsum(
        "...kij,...pqr,...kp,...iq,...jr->...", torsion, torsion, gmat, ginv, ginv
    )
    norm = float(np.sqrt(np.max(np.maximum(sq, 0.0))))
    return torsion, norm


def kahler_curvature_pullback(pm: PotentialMetric) -> np.ndarray:
    """Curvature of the pullback Kaehler metric, by the standard formula.

    ``R[..., i, j, k, l] = -partial_k partial_l g_ij / 4
    + g^pq (partial_k g_ip)(partial_l g_jq) / 4`` -- computed from metric
    components only, independent of the potential route, so comparing it
    with ``-Q/2`` is a non-circular check.
    """
    g = metric_from_potential(pm)
    n = g.grid.ndim
    d2 = np.empty((*g.grid.shape, n, n, n, n))
    for i, j in sym_pairs(n):
        comp = ScalarField(g.grid, g.component(i, j))
        for k, l in sym_pairs(n):
            v = partial2(comp, k, l).values
            d2[..., i, j, k, l] = v
            d2[..., i, j, l, k] = v
            d2[..., j, i, k, l] = v
            d2[..., j, i, l, k] = v
    d = metric_partials(g)
    ginv = g.inverse_matrices()
    quad = np.einsum("...pq,...kip,...ljq->...ijkl", ginv, d, d)
    return -0.25 * d2 + 0.25 * quad


# --- sectional-form extremum search ---------------------------------------------

@dataclass(frozen=True)
class SectionalReport:
    """Sampled-and-refined extremes of H(v, w) = Q(v, v, w, w) over unit pairs.

    The values are bounds from sampling, never a certificate of sign.
    """

    max_value: float
    min_value: float
    argmax_node: tuple[int, ...]
    argmax_frame: tuple[np.ndarray, np.ndarray]
    argmin_node: tuple[int, ...]
    argmin_frame: tuple[np.ndarray, np.ndarray]
    samples_used: int


_REFINE_STEP = 0.05


def _g_normalize(v: np.ndarray, gmat: np.ndarray) -> np.ndarray:
    norm = np.sqrt(np.einsum("...i,...ij,...j->...", v, gmat, v))
    return v / norm[..., None]


def _frame_value(qn: np.ndarray, v: np.ndarray, w: np.ndarray) -> float:
    return float(np.einsum("ijkl,i,j,k,l->", qn, v, v, w, w))


def _refine_frame(qn, gmat, v, w, sign, steps):
    """Fixed-step projected gradient ascent (sign=+1) or descent (sign=-1)."""
    best_v, best_w = v, w
    best = _frame_value(qn, v, w)
    for _ in range(steps):
        grad_v = 2.0 * np.einsum("ijkl,j,k,l->i", qn, v, w, w)
        grad_w = 2.0 * np.einsum("ijkl,i,j,l->k", qn, v, v, w)
        v = _g_normalize(v + sign * _REFINE_STEP * grad_v, gmat)
        w = _g_normalize(w + sign * _REFINE_STEP * grad_w, gmat)
        value = _frame_value(qn, v, w)
        if sign * value > sign * best:
            best, best_v, best_w = value, v, w
    return best, best_v, best_w


def sectional_extremes(
    q: HessianCurvature,
    g: MetricField,
    n_samples: int = 1000,
    refine_steps: int = 50,
    seed: int = 0,
) -> SectionalReport:
    """Monte Carlo extremes of the normalized sectional form H(v, w).

    Pairs (v, w) are drawn Haar-uniformly on the product of g-unit spheres
    at uniformly random nodes (the product relaxes the orthogonal-frame
    constraint, which is empty in one dimension and only enlarges the
    search set otherwise); the best and worst samples are then refined by
    fixed-step projected gradient iterations at their nodes.  Deterministic
    for a fixed seed.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    grid, n = q.grid, q.grid.ndim
    nodes = rng.integers(0, grid.num_nodes, size=n_samples)
    v = rng.standard_normal((n_samples, n))
    w = rng.standard_normal((n_samples, n))

    gmats = g.matrices().reshape(-1, n, n)[nodes]
    q_nodes = q.full().reshape(-1, n, n, n, n)[nodes]
    v = _g_normalize(v, gmats)
    w = _g_normalize(w, gmats)
    values = np.einsum("sijkl,si,sj,sk,sl->s", q_nodes, v, v, w, w)

    imax = int(np.argmax(values))
    imin = int(np.argmin(values))
    max_value, max_v, max_w = _refine_frame(
        q_nodes[imax], gmats[imax], v[imax], w[imax], +1.0, refine_steps
    )
    min_value, min_v, min_w = _refine_frame(
        q_nodes[imin], gmats[imin], v[imin], w[imin], -1.0, refine_steps
    )
    return SectionalReport(
        max_value=max_value,
        min_value=min_value,
        argmax_node=tuple(np.unravel_index(nodes[imax], grid.shape)),
        argmax_frame=(max_v, max_w),
        argmin_node=tuple(np.unravel_index(nodes[imin], grid.shape)),
        argmin_frame=(min_v, min_w),
        samples_used=n_samples,
    )


# --- bundled curvature data ------------------------------------------------------

@dataclass(frozen=True)
class CurvatureBundle:
    """Every curvature/Koszul quantity of a potential metric, in one record."""

    metric: MetricField
    gamma_mixed: np.ndarray
    gamma_lower: np.ndarray
    q: HessianCurvature
    riemann: np.ndarray
    alpha: np.ndarray
    kappa: Sym2Field
    beta: Sym2Field


def curvature_bundle(pm: PotentialMetric) -> CurvatureBundle:
    g = metric_from_potential(pm)
    gamma_mixed, gamma_lower = christoffel(g)
    alpha, kappa, beta = koszul(g)
    q = hessian_curvature(pm)
    return CurvatureBundle(
        metric=g,
        gamma_mixed=gamma_mixed,
        gamma_lower=gamma_lower,
        q=q,
        riemann=riemann_from_gamma(g),
        alpha=alpha,
        kappa=kappa,
        beta=beta,
    )
