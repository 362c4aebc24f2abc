"""
Integral functionals of grid solutions and level-set constructions
"""
import logging
from typing import List, Optional

import numpy as np
from scipy.integrate import simpson

from .constants import LP_EXPONENTS
from .errors import MaskError
from .geometry import GridMask, shift
from .pde2d import ScalarField, central_gradient
from .pydantic_models import FunctionalReport
from .utils.contours import Segment, marching_squares, total_length

logger = logging.getLogger(__name__)

_DIRECTIONS = {"e": (1, 0), "w": (-1, 0), "n": (0, 1), "s": (0, -1)}
_OPPOSITE = {"e": "w", "w": "e", "n": "s", "s": "n"}


def lp_power(u: ScalarField, p: int) -> float:
    """int u^p over the domain with cut-cell weights"""
    weights = u.mask.weights
    return float(np.sum(weights * np.where(u.mask.interior, u.values, 0.0) ** p))


def grad_l1(u: ScalarField) -> float:
    gx, gy = central_gradient(u)
    return float(np.sum(u.mask.weights * np.hypot(gx, gy)))


def boundary_flux(u: ScalarField) -> float:
    """
    Sum over boundary cuts of h times the inward derivative at the crossing, from the
    quadratic through the boundary zero, the node and the node behind it.
    """
    mask = u.mask
    v = u.values
    h = mask.h
    total = 0.0
    for d in _DIRECTIONS:
        back = _OPPOSITE[d]
        sel = mask.interior & ~mask.neighbor_interior(d)
        if not sel.any():
            continue
        s1 = mask.cut(d)[sel] * h
        up = v[sel]
        di, dj = _DIRECTIONS[back]
        behind = shift(v, di, dj, fill=0.0)[sel]
        has_behind = mask.neighbor_interior(back)[sel]
        s2 = s1 + h
        quadratic = (up * s2 ** 2 - behind * s1 ** 2) / (s1 * s2 * (s2 - s1))
        derivative = np.where(has_behind, quadratic, up / s1)
        total += h * float(np.sum(derivative))
    return total


def hopf_ratio(u: ScalarField) -> Optional[float]:
    """min over interior nodes of u / dist(x, boundary); None without an analytic domain"""
    mask = u.mask
    if mask.domain is None:
        return None
    X, Y = mask.coords
    sel = mask.interior
    dist = mask.domain.distance_to_boundary(X[sel], Y[sel])
    return float(np.min(u.values[sel] / dist))


def evaluate(u: ScalarField, cap: float) -> FunctionalReport:
    """
    Functionals of a converged solution. `flux` is volume + cap * grad_l1 (integrated
    PDE); `flux_boundary` sums the normal derivatives on the boundary.
    """
    mask = u.mask
    volume = mask.area
    gl1 = grad_l1(u)
    powers = {f"u_l{p}": lp_power(u, p) for p in LP_EXPONENTS}
    report = FunctionalReport(
        volume=volume,
        cap=cap,
        h=mask.h,
        u_max=u.max,
        grad_l1=gl1,
        flux=volume + cap * gl1,
        flux_boundary=boundary_flux(u),
        hopf_ratio=hopf_ratio(u),
        **powers,
    )
    logger.debug("functionals cap=%g: %s", cap, report.model_dump())
    return report


def _crossing_fraction(u: ScalarField, t: float, direction: str) -> np.ndarray:
    """
    Distance in units of h from each node to the level t along `direction`, assuming the
    node is above t and its neighbour is not: linear in u between interior nodes, and
    linear between the node and the boundary zero across a cut.
    """
    mask = u.mask
    v = u.values
    di, dj = _DIRECTIONS[direction]
    neighbor = shift(v, di, dj, fill=0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        inner = (v - t) / (v - neighbor)
        outer = mask.cut(direction) * (v - t) / v
    frac = np.where(mask.neighbor_interior(direction), inner, outer)
    return np.clip(np.nan_to_num(frac, nan=1.0, posinf=1.0, neginf=1.0), 0.0, 1.0)


def superlevel_restrict(u: ScalarField, eps: float):
    """
    Mask of the nodes with u > eps and the shifted field u - eps on it.

    Returns:
        (GridMask, ScalarField)

    Raises:
        MaskError: eps outside (0, u_max) or no node above eps
    """
    if not 0 < eps < u.max:
        raise MaskError(f"level {eps} must lie in (0, u_max = {u.max:.6g})")
    mask = u.mask
    inside = mask.interior & (u.values > eps)
    if not inside.any():
        raise MaskError(f"no node above level {eps}")
    cuts = {}
    for d, (di, dj) in _DIRECTIONS.items():
        edge = inside & ~shift(inside, di, dj, fill=False)
        cuts[d] = np.where(edge, _crossing_fraction(u, eps, d), 1.0)
    sub = GridMask(h=mask.h, x=mask.x, y=mask.y, interior=inside,
                   cut_e=cuts["e"], cut_w=cuts["w"], cut_n=cuts["n"], cut_s=cuts["s"])
    return sub, ScalarField(sub, np.where(inside, u.values - eps, 0.0))


def level_set_segments(u: ScalarField, t: float) -> List[Segment]:
    """Marching-squares segments of {u = t}; t = 0 traces the boundary through the cuts"""
    if t < 0:
        raise ValueError(f"level must be nonnegative, got {t}")
    if t >= u.max:
        return []
    mask = u.mask
    v = np.where(mask.interior, u.values, 0.0)
    h = mask.h
    above = mask.interior & (v > t)

    east = _crossing_fraction(u, t, "e")
    west = _crossing_fraction(u, t, "w")
    north = _crossing_fraction(u, t, "n")
    south = _crossing_fraction(u, t, "s")
    x, y = mask.x, mask.y
    cross_h = np.where(above[:, :-1], x[None, :-1] + east[:, :-1] * h, x[None, 1:] - west[:, 1:] * h)
    cross_v = np.where(above[:-1, :], y[:-1, None] + north[:-1, :] * h, y[1:, None] - south[1:, :] * h)
    center = 0.25 * (v[:-1, :-1] + v[:-1, 1:] + v[1:, 1:] + v[1:, :-1])
    return marching_squares(x, y, above, cross_h, cross_v, center > t)


def level_set_perimeter(u: ScalarField, t: float) -> float:
    """Length of the level set {u = t}"""
    return total_length(level_set_segments(u, t))


def coarea_integral(u: ScalarField, t0: float = 0.0, t1: Optional[float] = None, levels: int = 200) -> float:
    """int_t0^t1 perimeter(t) dt by Simpson's rule; t1 defaults to u_max"""
    t1 = u.max if t1 is None else min(t1, u.max)
    ts = np.linspace(t0, t1, levels + 1)
    lengths = np.array([level_set_perimeter(u, t) for t in ts])
    return float(simpson(lengths, x=ts))
