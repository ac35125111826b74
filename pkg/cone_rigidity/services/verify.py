"""
Finite-difference verification of tensor identities on the exact chart

Fields are stored by their components in the orthonormal frame
(e_r, e_θ, e_1, ..., e_{n−2}) on a regular grid of the annulus r₀ ≤ r ≤ r₁
(r₀ ≥ 0.05).  Covariant derivatives combine frame derivatives of the
components with the connection table of the geometry module:

    (∇T)_{i j₁…j_p} = e_i(T_{j₁…j_p}) − Σ_s Σ_k Γ[i, j_s, k] T_{j₁…k…j_p}

Charts: (r, θ, z) for n = 3 and (r, θ, x, y) for n = 4 with cross-section
dx² + e^{2x}dy².  Fields on the n = 4 chart are taken independent of y, so
the y axis carries a single node.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from cone_rigidity.config import settings
from cone_rigidity.models import ConeGeometry
from cone_rigidity.services.geometry import connection_coefficients, curvature_action
from cone_rigidity.utils.errors import GeometryDomainError, ValenceError

logger = logging.getLogger(__name__)

FUNCTION = "function"
ONE_FORM = "one_form"
TWO_FORM = "two_form"
THREE_FORM = "three_form"
SYMMETRIC = "symmetric"
TENSOR2 = "tensor2"
TENSOR3 = "tensor3"
TENSOR4 = "tensor4"

RANKS = {
    FUNCTION: 0,
    ONE_FORM: 1,
    TWO_FORM: 2,
    SYMMETRIC: 2,
    TENSOR2: 2,
    THREE_FORM: 3,
    TENSOR3: 3,
    TENSOR4: 4,
}
FORM_DEGREES = {FUNCTION: 0, ONE_FORM: 1, TWO_FORM: 2, THREE_FORM: 3}
_GENERAL = {0: FUNCTION, 1: ONE_FORM, 2: TENSOR2, 3: TENSOR3, 4: TENSOR4}

IDENTITIES = {
    "W1": ONE_FORM,
    "W2": TWO_FORM,
    "WS": SYMMETRIC,
    "BIANCHI_NORM": ONE_FORM,
    "EPRIME_TRIVIAL": ONE_FORM,
    "TRACE_ID": SYMMETRIC,
    "DNABLA_SQUARED": ONE_FORM,
}

BASE_SHAPES = {3: (32, 16, 16), 4: (32, 16, 16, 1)}
SUPPORT_MARGIN = 0.15
BUMP_POWER = 6


@dataclass(frozen=True)
class ChartGrid:
    geometry: ConeGeometry
    shape: Tuple[int, ...]
    r_bounds: Tuple[float, float] = (0.2, 1.0)
    x_bounds: Tuple[float, float] = (-0.5, 0.5)

    def __post_init__(self):
        n = self.geometry.n
        if n not in (3, 4):
            raise ValueError(f"Verification charts are available for n = 3 and n = 4, got n = {n}")
        if len(self.shape) != n:
            raise ValueError(f"Grid shape {self.shape} does not match n = {n}")
        r0, r1 = self.r_bounds
        if r0 < settings.VERIFY_MIN_RADIUS:
            raise GeometryDomainError(
                f"Verification annulus must stay at r >= {settings.VERIFY_MIN_RADIUS}, got r0 = {r0}"
            )
        if not r0 < r1 <= self.geometry.tube_radius:
            raise GeometryDomainError(f"Annulus [{r0}, {r1}] is not inside the tube")
        resolved = self.shape[:3]
        if min(resolved) < 8:
            raise ValueError(f"Grid {self.shape} is too coarse for the difference stencils")
        if n == 4 and self.shape[3] != 1:
            raise ValueError("The n = 4 chart carries y-independent fields: use a single y node")

    @classmethod
    def default(cls, geometry: ConeGeometry, level: int = 0, **kwargs) -> "ChartGrid":
        return cls(geometry, BASE_SHAPES[geometry.n], **kwargs).refine(2 ** level)

    @property
    def n(self) -> int:
        return self.geometry.n

    @property
    def ndim(self) -> int:
        return len(self.shape)

    def periodic(self, axis: int) -> bool:
        return axis == 1 or (axis == 2 and self.n == 3)

    def spacing(self, axis: int) -> float:
        size = self.shape[axis]
        if axis == 0:
            return (self.r_bounds[1] - self.r_bounds[0]) / size
        if axis == 1:
            return self.geometry.alpha / size
        if axis == 2 and self.n == 3:
            return self.geometry.circle_length / size
        if axis == 2:
            return (self.x_bounds[1] - self.x_bounds[0]) / size
        return 1.0

    def axis_coordinates(self, axis: int) -> np.ndarray:
        size = self.shape[axis]
        h = self.spacing(axis)
        if axis == 0:
            return self.r_bounds[0] + (np.arange(size) + 0.5) * h
        if axis == 2 and self.n == 4:
            return self.x_bounds[0] + (np.arange(size) + 0.5) * h
        if axis == 3:
            return np.zeros(1)
        return np.arange(size) * h

    def coordinate(self, axis: int, tail: int = 0) -> np.ndarray:
        """Coordinate values shaped to broadcast over the grid and `tail` component axes"""
        shape = [1] * self.ndim + [1] * tail
        shape[axis] = self.shape[axis]
        return self.axis_coordinates(axis).reshape(shape)

    @property
    def cell_volume(self) -> float:
        return float(np.prod([self.spacing(axis) for axis in range(self.ndim)]))

    @property
    def density(self) -> np.ndarray:
        """√det g in chart coordinates: sinh r cosh^{n−2} r (· e^x for n = 4)"""
        r = self.coordinate(0)
        rho = np.sinh(r) * np.cosh(r) ** (self.n - 2)
        if self.n == 4:
            rho = rho * np.exp(self.coordinate(2))
        return np.broadcast_to(rho, self.shape)

    def refine(self, factor: int = 2) -> "ChartGrid":
        shape = tuple(s * factor if s > 1 else 1 for s in self.shape)
        return ChartGrid(self.geometry, shape, self.r_bounds, self.x_bounds)


@dataclass(frozen=True, eq=False)
class TensorField:
    valence: str
    components: np.ndarray

    def __post_init__(self):
        if self.valence not in RANKS:
            raise ValenceError(f"Unknown valence: {self.valence}")
        components = np.asarray(self.components, dtype=float)
        object.__setattr__(self, "components", components)
        rank = RANKS[self.valence]
        tail = components.shape[components.ndim - rank:] if rank else ()
        if rank and len(set(tail)) != 1:
            raise ValenceError(f"Component axes {tail} of a {self.valence} field are not square")
        tol = 1e-10 * max(1.0, float(np.max(np.abs(components))) if components.size else 0.0)
        base = components.ndim - rank
        if self.valence == SYMMETRIC:
            if np.max(np.abs(components - np.swapaxes(components, base, base + 1))) > tol:
                raise ValenceError("Symmetric field is not symmetric")
        if self.valence in (TWO_FORM, THREE_FORM):
            for s in range(rank - 1):
                swapped = np.swapaxes(components, base + s, base + s + 1)
                if np.max(np.abs(components + swapped)) > tol:
                    raise ValenceError(f"{self.valence} field is not antisymmetric")

    @property
    def rank(self) -> int:
        return RANKS[self.valence]

    @property
    def grid_ndim(self) -> int:
        return self.components.ndim - self.rank


# -- differentiation --------------------------------------------------


def _partial(values: np.ndarray, grid: ChartGrid, axis: int) -> np.ndarray:
    if grid.shape[axis] == 1:
        return np.zeros_like(values)
    h = grid.spacing(axis)
    if grid.periodic(axis):
        return (np.roll(values, -1, axis=axis) - np.roll(values, 1, axis=axis)) / (2 * h)
    return np.gradient(values, h, axis=axis, edge_order=2)


def _frame_derivative(values: np.ndarray, grid: ChartGrid, i: int) -> np.ndarray:
    """e_i applied to every component; values have the grid axes first"""
    tail = values.ndim - grid.ndim
    r = grid.coordinate(0, tail)
    if i == 0:
        return _partial(values, grid, 0)
    if i == 1:
        return _partial(values, grid, 1) / np.sinh(r)
    if i == 2:
        return _partial(values, grid, 2) / np.cosh(r)
    return np.exp(-grid.coordinate(2, tail)) * _partial(values, grid, i) / np.cosh(r)


def _gamma(grid: ChartGrid) -> np.ndarray:
    gamma = connection_coefficients(grid.geometry, grid.axis_coordinates(0))
    n = grid.n
    return gamma.reshape((grid.shape[0],) + (1,) * (grid.ndim - 1) + (n, n, n))


def _nabla(values: np.ndarray, grid: ChartGrid) -> np.ndarray:
    rank = values.ndim - grid.ndim
    derivative = np.stack(
        [_frame_derivative(values, grid, i) for i in range(grid.n)], axis=grid.ndim
    )
    gamma = _gamma(grid)
    slots = "abcd"[:rank]
    for s in range(rank):
        source = slots[:s] + "k" + slots[s + 1:]
        derivative = derivative - np.einsum(
            f"...i{slots[s]}k,...{source}->...i{slots}", gamma, values
        )
    return derivative


def _divergence(values: np.ndarray, grid: ChartGrid) -> np.ndarray:
    """Σ_i (∇_{e_i} T)(e_i, …) without forming ∇T"""
    rank = values.ndim - grid.ndim
    base = grid.ndim
    total = sum(
        _frame_derivative(np.take(values, i, axis=base), grid, i) for i in range(grid.n)
    )
    gamma = _gamma(grid)
    rest = "abc"[: rank - 1]
    total = total - np.einsum(f"...iik,...k{rest}->...{rest}", gamma, values)
    for s in range(rank - 1):
        source = "i" + rest[:s] + "k" + rest[s + 1:]
        total = total - np.einsum(f"...i{rest[s]}k,...{source}->...{rest}", gamma, values)
    return total


def _trace(values: np.ndarray, grid: ChartGrid) -> np.ndarray:
    return np.trace(values, axis1=grid.ndim, axis2=grid.ndim + 1)


def _swap(values: np.ndarray, grid: ChartGrid) -> np.ndarray:
    return np.swapaxes(values, grid.ndim, grid.ndim + 1)


def _exterior(values: np.ndarray, grid: ChartGrid) -> np.ndarray:
    rank = values.ndim - grid.ndim
    N = _nabla(values, grid)
    if rank == 0:
        return N
    if rank == 1:
        return N - _swap(N, grid)
    return N - _swap(N, grid) + np.moveaxis(N, grid.ndim, grid.ndim + 2)


def _delta_star(values: np.ndarray, grid: ChartGrid) -> np.ndarray:
    N = _nabla(values, grid)
    return 0.5 * (N + _swap(N, grid))


def _rough(values: np.ndarray, grid: ChartGrid) -> np.ndarray:
    """∇*∇"""
    return -_divergence(_nabla(values, grid), grid)


def _identity_like(values: np.ndarray, grid: ChartGrid) -> np.ndarray:
    return np.broadcast_to(np.eye(grid.n), grid.shape + (grid.n, grid.n))


def _laplace_beltrami(values: np.ndarray, grid: ChartGrid) -> np.ndarray:
    """Δf = −ρ⁻¹ Σ_a ∂_a(ρ g^{aa} ∂_a f) in chart coordinates"""
    r = grid.coordinate(0)
    rho = grid.density
    inverse_metric = [np.ones_like(r), 1.0 / np.sinh(r) ** 2, 1.0 / np.cosh(r) ** 2]
    if grid.n == 4:
        inverse_metric.append(np.exp(-2 * grid.coordinate(2)) / np.cosh(r) ** 2)
    total = np.zeros(grid.shape)
    for axis, g_aa in enumerate(inverse_metric):
        total = total + _partial(rho * g_aa * _partial(values, grid, axis), grid, axis)
    return -total / rho


def _bianchi(values: np.ndarray, grid: ChartGrid) -> np.ndarray:
    return -_divergence(values, grid) + 0.5 * _nabla(_trace(values, grid), grid)


def _lin_einstein(values: np.ndarray, grid: ChartGrid) -> np.ndarray:
    """E′(h) = ∇*∇h − 2R̊h − δ*(2δh + d tr h)"""
    curvature = curvature_action(values, np.eye(grid.n))
    gauge = -2 * _divergence(values, grid) + _nabla(_trace(values, grid), grid)
    return _rough(values, grid) - 2 * curvature - _delta_star(gauge, grid)


def _nabla_star(values, grid):
    return -_divergence(values, grid)


def _shifted(values, grid):
    return _rough(values, grid) + (grid.n - 1) * values


_STAR_VALENCE = {ONE_FORM: FUNCTION, THREE_FORM: TWO_FORM}


def _out_nabla_star(valence: str) -> str:
    if valence in _STAR_VALENCE:
        return _STAR_VALENCE[valence]
    return _GENERAL[RANKS[valence] - 1]


_OPERATORS: Dict[str, Tuple[Tuple[str, ...], Callable, Callable[[str], str]]] = {
    "nabla": (
        (FUNCTION, ONE_FORM, TWO_FORM, SYMMETRIC, TENSOR2, THREE_FORM, TENSOR3),
        _nabla,
        lambda v: _GENERAL[RANKS[v] + 1],
    ),
    "nabla_star": (
        (ONE_FORM, TWO_FORM, SYMMETRIC, TENSOR2, THREE_FORM, TENSOR3, TENSOR4),
        _nabla_star,
        _out_nabla_star,
    ),
    "d": (
        (FUNCTION, ONE_FORM, TWO_FORM),
        _exterior,
        lambda v: {FUNCTION: ONE_FORM, ONE_FORM: TWO_FORM, TWO_FORM: THREE_FORM}[v],
    ),
    "delta": (
        (ONE_FORM, TWO_FORM, THREE_FORM, SYMMETRIC),
        _nabla_star,
        lambda v: {ONE_FORM: FUNCTION, TWO_FORM: ONE_FORM, THREE_FORM: TWO_FORM, SYMMETRIC: ONE_FORM}[v],
    ),
    "delta_star": ((ONE_FORM,), _delta_star, lambda v: SYMMETRIC),
    "d_nabla": (
        (ONE_FORM, SYMMETRIC, TENSOR2),
        lambda x, g: _nabla(x, g) if x.ndim - g.ndim == 1 else _nabla(x, g) - _swap(_nabla(x, g), g),
        lambda v: TENSOR2 if v == ONE_FORM else TENSOR3,
    ),
    "delta_nabla": (
        (SYMMETRIC, TENSOR2, TENSOR3),
        _nabla_star,
        lambda v: ONE_FORM if RANKS[v] == 2 else TENSOR2,
    ),
    "trace": ((SYMMETRIC, TENSOR2), _trace, lambda v: FUNCTION),
    "laplace_beltrami": ((FUNCTION,), _laplace_beltrami, lambda v: FUNCTION),
    "bianchi": ((SYMMETRIC,), _bianchi, lambda v: ONE_FORM),
    "lin_einstein": ((SYMMETRIC,), _lin_einstein, lambda v: SYMMETRIC),
    "rough_shifted": ((ONE_FORM,), _shifted, lambda v: ONE_FORM),
}

OPERATORS = tuple(_OPERATORS)


def covariant_apply(kind: str, tensor: TensorField, grid: ChartGrid) -> TensorField:
    if kind not in _OPERATORS:
        raise ValueError(f"Unknown operator: {kind}")
    allowed, operator, output = _OPERATORS[kind]
    if tensor.valence not in allowed:
        raise ValenceError(f"{kind} does not act on {tensor.valence} fields")
    if tensor.components.shape[: grid.ndim] != grid.shape:
        raise ValenceError(f"Field shape {tensor.components.shape} does not live on grid {grid.shape}")
    return TensorField(output(tensor.valence), operator(tensor.components, grid))


# -- sample fields ----------------------------------------------------


def _bump(x: np.ndarray, lo: float, hi: float) -> np.ndarray:
    a = lo + SUPPORT_MARGIN * (hi - lo)
    b = hi - SUPPORT_MARGIN * (hi - lo)
    scale = ((b - a) / 2) ** 2
    inside = (x > a) & (x < b)
    return np.where(inside, ((x - a) * (b - x) / scale) ** BUMP_POWER, 0.0)


def _profile(grid: ChartGrid, rng: np.random.Generator) -> np.ndarray:
    """bump(r) × low harmonics in θ (and z) × bump(x) on the n = 4 chart"""
    theta = grid.coordinate(1)
    k_theta = 2 * math.pi / grid.geometry.alpha
    c = rng.normal(size=5)
    angular = (
        c[0]
        + c[1] * np.cos(k_theta * theta)
        + c[2] * np.sin(k_theta * theta)
        + c[3] * np.cos(2 * k_theta * theta)
        + c[4] * np.sin(2 * k_theta * theta)
    )
    profile = _bump(grid.coordinate(0), *grid.r_bounds) * angular
    d = rng.normal(size=3)
    if grid.n == 3:
        z = grid.coordinate(2)
        k_z = 2 * math.pi / grid.geometry.circle_length
        profile = profile * (d[0] + d[1] * np.cos(k_z * z) + d[2] * np.sin(k_z * z))
    else:
        x = grid.coordinate(2)
        profile = profile * _bump(x, *grid.x_bounds) * (d[0] + d[1] * x)
    return np.broadcast_to(profile, grid.shape)


def sample_field(valence: str, grid: ChartGrid, rng: Optional[np.random.Generator] = None) -> TensorField:
    """Seeded smooth field supported strictly inside the annulus"""
    if valence not in RANKS:
        raise ValenceError(f"Unknown valence: {valence}")
    rng = rng or np.random.default_rng(settings.VERIFY_SEED)
    n = grid.n
    rank = RANKS[valence]
    count = n ** rank
    components = np.stack([_profile(grid, rng) for _ in range(count)], axis=-1)
    components = components.reshape(grid.shape + (n,) * rank)
    base = grid.ndim
    if valence == SYMMETRIC:
        components = 0.5 * (components + np.swapaxes(components, base, base + 1))
    elif valence == TWO_FORM:
        components = 0.5 * (components - np.swapaxes(components, base, base + 1))
    elif valence == THREE_FORM:
        antisymmetric = np.zeros_like(components)
        for perm, sign in (((0, 1, 2), 1), ((1, 2, 0), 1), ((2, 0, 1), 1), ((1, 0, 2), -1), ((0, 2, 1), -1), ((2, 1, 0), -1)):
            axes = list(range(base)) + [base + p for p in perm]
            antisymmetric += sign * np.transpose(components, axes)
        components = antisymmetric / 6
    return TensorField(valence, components)


def metric_field(grid: ChartGrid) -> TensorField:
    return TensorField(SYMMETRIC, np.array(_identity_like(None, grid)))


# -- norms ------------------------------------------------------------


def _inner(a: np.ndarray, b: np.ndarray, grid: ChartGrid) -> float:
    axes = tuple(range(grid.ndim, a.ndim))
    pointwise = np.sum(a * b, axis=axes) if axes else a * b
    return float(np.sum(grid.density * pointwise) * grid.cell_volume)


def weighted_norm(tensor: np.ndarray, grid: ChartGrid) -> float:
    """Full-component L² norm with the Riemannian volume"""
    return math.sqrt(max(_inner(tensor, tensor, grid), 0.0))


# -- identities -------------------------------------------------------


@dataclass(frozen=True)
class IdentityResult:
    identity: str
    residual: float
    reference: float

    @property
    def relative(self) -> float:
        return self.residual / self.reference if self.reference > 0 else 0.0


@dataclass(frozen=True)
class ConvergenceResult:
    identity: str
    shapes: List[Tuple[int, ...]]
    residuals: List[float]
    order: Optional[float] = None


@dataclass(frozen=True)
class PoincareCheck:
    lhs: float
    rhs: float
    constant: float
    satisfied: bool


def _identity_sides(identity: str, x: np.ndarray, grid: ChartGrid) -> Tuple[np.ndarray, np.ndarray]:
    n = grid.n
    if identity == "W1":
        hodge = _exterior(_nabla_star(x, grid), grid) + _nabla_star(_exterior(x, grid), grid)
        return hodge, _rough(x, grid) - (n - 1) * x
    if identity == "W2":
        hodge = _exterior(_nabla_star(x, grid), grid) + _nabla_star(_exterior(x, grid), grid)
        return _rough(x, grid), hodge + 2 * (n - 2) * x
    if identity == "WS":
        N = _nabla(x, grid)
        twisted = _nabla_star(N - _swap(N, grid), grid) + _nabla(_nabla_star(x, grid), grid)
        trace = _trace(x, grid)[..., None, None] * _identity_like(x, grid)
        return _rough(x, grid), twisted + n * x - trace
    if identity == "BIANCHI_NORM":
        return 2 * _bianchi(_delta_star(x, grid), grid), _rough(x, grid) + (n - 1) * x
    if identity == "EPRIME_TRIVIAL":
        lhs = _lin_einstein(_delta_star(x, grid), grid)
        return lhs, np.zeros_like(lhs)
    if identity == "TRACE_ID":
        h = x
        lhs = _trace(_rough(h, grid) - 2 * curvature_action(h, np.eye(n)), grid)
        trace = _trace(h, grid)
        return lhs, _laplace_beltrami(trace, grid) + 2 * (n - 1) * trace
    if identity == "DNABLA_SQUARED":
        N = _nabla(_nabla(x, grid), grid)
        identity_matrix = np.eye(n)
        curvature = np.einsum("...i,jk->...ijk", x, identity_matrix) - np.einsum(
            "...j,ik->...ijk", x, identity_matrix
        )
        return N - _swap(N, grid), curvature
    raise ValueError(f"Unknown identity: {identity}")


def identity_residual(identity: str, sample: TensorField, grid: ChartGrid) -> IdentityResult:
    if identity not in IDENTITIES:
        raise ValueError(f"Unknown identity: {identity}")
    if sample.valence != IDENTITIES[identity]:
        raise ValenceError(f"{identity} needs a {IDENTITIES[identity]} sample, got {sample.valence}")
    lhs, rhs = _identity_sides(identity, sample.components, grid)
    return IdentityResult(
        identity=identity,
        residual=weighted_norm(lhs - rhs, grid),
        reference=max(weighted_norm(lhs, grid), weighted_norm(rhs, grid)),
    )


def identity_convergence(
    identity: str, grid: ChartGrid, seed: Optional[int] = None, levels: int = 2
) -> ConvergenceResult:
    """Residuals of one seeded sample on successively halved grids and the observed order"""
    seed = settings.VERIFY_SEED if seed is None else seed
    if levels < 2:
        raise ValueError("Convergence needs at least two grid levels")
    shapes, residuals = [], []
    for level in range(levels):
        refined = grid.refine(2 ** level)
        sample = sample_field(IDENTITIES[identity], refined, np.random.default_rng(seed))
        shapes.append(refined.shape)
        residuals.append(identity_residual(identity, sample, refined).residual)
    order = None
    if residuals[-2] > 0 and residuals[-1] > 0:
        order = math.log2(residuals[-2] / residuals[-1])
    logger.debug(f"{identity} seed={seed}: residuals {residuals} order {order}")
    return ConvergenceResult(identity, shapes, residuals, order)


def _touches_boundary(values: np.ndarray, grid: ChartGrid) -> bool:
    scale = float(np.max(np.abs(values))) if values.size else 0.0
    if scale == 0:
        return False
    axes = [0] + ([2] if grid.n == 4 else [])
    for axis in axes:
        edges = np.concatenate(
            [np.take(values, [0, 1], axis=axis), np.take(values, [-2, -1], axis=axis)], axis=axis
        )
        if np.max(np.abs(edges)) > 1e-14 * scale:
            return True
    return False


def poincare_2form_check(omega: TensorField, grid: ChartGrid, tolerance: float = 1e-2) -> PoincareCheck:
    """‖ω‖ ≤ c‖∇ω‖ with c = (2(n−2))^{−1/2} for compactly supported 2-forms"""
    if omega.valence != TWO_FORM:
        raise ValenceError(f"Poincaré check needs a two_form, got {omega.valence}")
    if _touches_boundary(omega.components, grid):
        raise ValueError("Two-form support touches the annulus boundary")
    constant = 1.0 / math.sqrt(2 * (grid.n - 2))
    lhs = weighted_norm(omega.components, grid)
    rhs = constant * weighted_norm(_nabla(omega.components, grid), grid)
    return PoincareCheck(lhs=lhs, rhs=rhs, constant=constant, satisfied=lhs <= rhs * (1 + tolerance))


def adjointness_defect(kind: str, u: TensorField, v: TensorField, grid: ChartGrid) -> float:
    """|⟨Au, v⟩ − ⟨u, A*v⟩| / (‖Au‖‖v‖) for A = ∇ or d"""
    if kind == "nabla":
        Au = covariant_apply("nabla", u, grid).components
        A_star_v = covariant_apply("nabla_star", v, grid).components
        weight = 1.0
    elif kind == "d":
        Au = covariant_apply("d", u, grid).components
        A_star_v = covariant_apply("delta", v, grid).components
        weight = 1.0 / (u.rank + 1)
    else:
        raise ValueError(f"Unknown adjoint pair: {kind}")
    if Au.shape != v.components.shape:
        raise ValenceError("Test field does not match the range of the operator")
    lhs = weight * _inner(Au, v.components, grid)
    rhs = _inner(u.components, A_star_v, grid)
    scale = weighted_norm(Au, grid) * weighted_norm(v.components, grid)
    return abs(lhs - rhs) / scale if scale > 0 else 0.0
