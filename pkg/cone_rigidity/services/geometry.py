"""
Exact hyperbolic model metric on the cone tube

g = dr² + sinh²(r) dθ² + cosh²(r) g_Σ, written in the orthonormal frame
(e_r, e_θ, e_1, ..., e_{n-2}).  The cross-section chart is the flat circle
for n = 3 and the horospherical chart dx₁² + e^{2x₁}(dx₂² + ...) for n ≥ 4
(the half-plane dx² + e^{2x}dy² when n = 4).
"""

import logging
from dataclasses import dataclass
from typing import Union

import numpy as np

from cone_rigidity.models import ConeGeometry, FramePoint
from cone_rigidity.utils.errors import GeometryDomainError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# Frame indices
E_R = 0
E_THETA = 1


@dataclass(frozen=True)
class MetricData:
    """Warp factors and radial density of the model metric"""
    warp_theta: ArrayLike
    warp_sigma: ArrayLike
    volume_weight: ArrayLike


def _radii(r: ArrayLike) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if np.any(~np.isfinite(r)) or np.any(r <= 0):
        raise GeometryDomainError(f"Radial coordinate must be positive, got {r}")
    return r


def _unwrap(value: np.ndarray) -> ArrayLike:
    return float(value) if np.ndim(value) == 0 else value


def volume_weight(r: ArrayLike, n: int) -> ArrayLike:
    r = np.asarray(r, dtype=float)
    return np.sinh(r) * np.cosh(r) ** (n - 2)


def radial_volume(r: ArrayLike, n: int) -> ArrayLike:
    """Antiderivative cosh^{n-1}(r)/(n-1) of the volume weight"""
    return np.cosh(np.asarray(r, dtype=float)) ** (n - 1) / (n - 1)


def metric_data(geom: ConeGeometry, r: ArrayLike) -> MetricData:
    r = _radii(r)
    return MetricData(
        warp_theta=_unwrap(np.sinh(r)),
        warp_sigma=_unwrap(np.cosh(r)),
        volume_weight=_unwrap(volume_weight(r, geom.n)),
    )


def connection_coefficients(geom: ConeGeometry, r: ArrayLike) -> np.ndarray:
    """Table Γ[..., i, j, k] = g(∇_{e_i} e_j, e_k) at radius r (broadcast over arrays).

    Γ is antisymmetric in (j, k); everything depends on r only.
    """
    r = _radii(r)
    n = geom.n
    gamma = np.zeros(r.shape + (n, n, n))
    coth = 1.0 / np.tanh(r)
    tanh = np.tanh(r)
    sech = 1.0 / np.cosh(r)

    gamma[..., E_THETA, E_THETA, E_R] = -coth
    gamma[..., E_THETA, E_R, E_THETA] = coth
    for k in range(2, n):
        gamma[..., k, k, E_R] = -tanh
        gamma[..., k, E_R, k] = tanh
    # horospherical cross-section: ∇_{E_a}E_a = -E_1, ∇_{E_a}E_1 = E_a, scaled by 1/cosh r
    for a in range(3, n):
        gamma[..., a, a, 2] = -sech
        gamma[..., a, 2, a] = sech
    return gamma


def frame_vectors(geom: ConeGeometry, point: FramePoint) -> np.ndarray:
    """Coordinate components of the orthonormal frame; row i is e_i"""
    n = geom.n
    r = float(_radii(point.r))
    coords = point.coords or (0.0,) * (n - 2)
    frame = np.zeros((n, n))
    frame[E_R, 0] = 1.0
    frame[E_THETA, 1] = 1.0 / np.sinh(r)
    frame[2, 2] = 1.0 / np.cosh(r)
    for a in range(3, n):
        frame[a, a] = np.exp(-coords[0]) / np.cosh(r)
    return frame


def coordinate_metric(geom: ConeGeometry, point: FramePoint) -> np.ndarray:
    n = geom.n
    r = float(_radii(point.r))
    coords = point.coords or (0.0,) * (n - 2)
    diagonal = [1.0, np.sinh(r) ** 2, np.cosh(r) ** 2]
    diagonal += [np.cosh(r) ** 2 * np.exp(2 * coords[0])] * (n - 3)
    return np.diag(diagonal)


def curvature_action(h: np.ndarray, g_value: np.ndarray) -> np.ndarray:
    """R̊h = h − (tr_g h)·g for the hyperbolic metric (broadcast over leading axes)"""
    h = np.asarray(h)
    g_value = np.asarray(g_value, dtype=float)
    trace = np.einsum("...ij,...ji->...", np.linalg.inv(g_value), h)
    return h - trace[..., None, None] * g_value
