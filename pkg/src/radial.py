"""
Radial solutions of -Laplace(u) - b |grad u| = 1 on balls in any dimension d >= 1.

For u(x) = g(|x|) the flux w(r) = -r^(d-1) g'(r) solves the linear ODE
w' = b w + r^(d-1) with w(0) = 0, so

    w(r) = int_0^r exp(b (r - s)) s^(d-1) ds,    g(r) = int_r^R w(s) / s^(d-1) ds.

The surface coefficient of the sphere of radius r is sigma_d r^(d-1) where
sigma_d = d * vol(B_1) is the area of the unit sphere.
"""
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence, Tuple

import numpy as np
from scipy.integrate import quad, simpson
from scipy.special import gamma

from .constants import SERIES_BR, SERIES_RADIUS, SERIES_TERMS
from .pydantic_models import BallProfile
from .utils.validation import validate_increasing, validate_nonnegative, validate_positive

logger = logging.getLogger(__name__)

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def _check_dimension(d: int) -> None:
    if int(d) != d or d < 1:
        raise ValueError(f"dimension must be an integer >= 1, got {d!r}")


def ball_volume(d: int, R: float = 1.0) -> float:
    """vol(B_R) = pi^(d/2) R^d / Gamma(d/2 + 1)"""
    _check_dimension(d)
    return float(np.pi ** (0.5 * d) / gamma(0.5 * d + 1.0) * R ** d)


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere in R^d (2 for d = 1: two endpoints)"""
    return d * ball_volume(d)


def isoperimetric_constant(d: int) -> float:
    """c_d with |dB| = c_d |B|^((d-1)/d) for every ball"""
    return d * ball_volume(d) ** (1.0 / d)


def radius_for_volume(d: int, c: float) -> float:
    validate_positive("volume", c)
    return float((c / ball_volume(d)) ** (1.0 / d))


def ball_perimeter(d: int, c: float) -> float:
    """|dB_c|, the boundary measure of the ball of volume c"""
    return sphere_area(d) * radius_for_volume(d, c) ** (d - 1)


def _flux_series(d: int, b: float, r: np.ndarray) -> np.ndarray:
    # w(r) = r^d sum_k (b r)^k / (d (d+1) ... (d+k))
    coeff = 1.0 / d
    br = b * r
    term = np.full_like(r, coeff)
    total = term.copy()
    for k in range(1, SERIES_TERMS):
        term = term * br / (d + k)
        total += term
    return r ** d * total


def _flux_quad(d: int, b: float, r: float) -> float:
    value, _ = quad(lambda s: np.exp(b * (r - s)) * s ** (d - 1), 0.0, r, epsabs=0.0, epsrel=1e-13, limit=200)
    return value


def flux_w(d: int, b: float, r):
    """
    Flux w(r) = -r^(d-1) g'(r) of the radial solution.

    Closed forms for d <= 3, power series near the origin or for small b r, and
    adaptive quadrature otherwise. b = 0 gives r^d / d.
    """
    _check_dimension(d)
    validate_nonnegative("b", b)
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise ValueError(f"radius must be nonnegative, got {r!r}")
    flat = np.atleast_1d(r_arr).ravel()
    out = np.empty_like(flat)

    br = b * flat
    series = (br < SERIES_BR) | ((flat < SERIES_RADIUS) & (br < 1.0))
    out[series] = _flux_series(d, b, flat[series])
    rest = ~series
    if np.any(rest):
        x = br[rest]
        if d == 1:
            out[rest] = np.expm1(x) / b
        elif d == 2:
            out[rest] = (np.expm1(x) - x) / b ** 2
        elif d == 3:
            out[rest] = 2.0 * (np.expm1(x) - x - 0.5 * x * x) / b ** 3
        else:
            out[rest] = [_flux_quad(d, b, ri) for ri in flat[rest]]

    if r_arr.ndim == 0:
        return float(out[0])
    return out.reshape(r_arr.shape)


def _flux_on_intervals(d: int, b: float, r: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Flux at the nodes r and at the Gauss-Legendre points of every interval.

    Dimensions without a closed form march w(r_{i+1}) = exp(b dr) w(r_i) + local integral.
    """
    dr = np.diff(r)
    mid = 0.5 * (r[:-1] + r[1:])
    points = mid[:, None] + 0.5 * dr[:, None] * _GL_NODES[None, :]
    if d <= 3:
        return flux_w(d, b, r), flux_w(d, b, points)

    def local(start, end):
        # int_start^end exp(b (end - t)) t^(d-1) dt, one Gauss-Legendre panel
        half = 0.5 * (end - start)
        t = 0.5 * (start + end)[..., None] + half[..., None] * _GL_NODES
        return half * np.sum(_GL_WEIGHTS * np.exp(b * (end[..., None] - t)) * t ** (d - 1), axis=-1)

    increments = local(r[:-1], r[1:])
    w_nodes = np.zeros_like(r)
    growth = np.exp(b * dr)
    for i in range(dr.size):
        w_nodes[i + 1] = growth[i] * w_nodes[i] + increments[i]
    start = np.broadcast_to(r[:-1, None], points.shape)
    w_points = np.exp(b * (points - start)) * w_nodes[:-1, None] + local(start, points)
    return w_nodes, w_points


@dataclass(frozen=True, eq=False)
class RadialSolution:
    """Radial profile g and flux w on nodes 0 = r_0 < ... < r_n = R"""
    d: int
    b: float
    R: float
    r: np.ndarray
    g: np.ndarray
    w: np.ndarray

    @property
    def u0(self) -> float:
        """u at the centre, the maximum of the solution"""
        return float(self.g[0])

    @cached_property
    def volume(self) -> float:
        return ball_volume(self.d, self.R)

    @property
    def flux(self) -> float:
        """Total boundary flux sigma_d w(R) of the inward normal derivative"""
        return sphere_area(self.d) * float(self.w[-1])

    def u_at(self, radius):
        return np.interp(np.abs(radius), self.r, self.g, right=0.0)

    def radius_at_level(self, t: float) -> float:
        """Radius of the level set {u = t}, 0 <= t <= u0"""
        if not 0.0 <= t <= self.u0:
            raise ValueError(f"level {t} outside [0, {self.u0}]")
        return float(np.interp(t, self.g[::-1], self.r[::-1]))

    def lp_power(self, p: int) -> float:
        """int_B u^p dx; p = 0 gives the volume"""
        if p == 0:
            return self.volume
        return sphere_area(self.d) * float(simpson(self.g ** p * self.r ** (self.d - 1), x=self.r))

    def grad_l1(self) -> float:
        """int_B |grad u| dx = sigma_d int_0^R w(r) dr"""
        return sphere_area(self.d) * float(simpson(self.w, x=self.r))

    def ode_residual(self) -> float:
        """
        Max defect of w' = b w + r^(d-1) and of w = -r^(d-1) g', with second-order finite
        differences, relative to max(1, max |w'|).
        """
        r, w, g = self.r, self.w, self.g
        dw = np.gradient(w, r, edge_order=2)
        dg = np.gradient(g, r, edge_order=2)
        scale = max(1.0, float(np.max(np.abs(dw))))
        rd = r ** (self.d - 1)
        ode = np.max(np.abs(dw - self.b * w - rd)[1:-1])
        flux = np.max(np.abs(dg * rd + w)[1:-1])
        return float(max(ode, flux) / scale)


def solve_radial(d: int, b: float, R: float, n: int = 4096) -> RadialSolution:
    """
    Solve the radial problem on the ball of radius R with n + 1 uniform nodes.

    g is assembled from 8-point Gauss-Legendre integrals of w(s) / s^(d-1) over each
    interval, summed from the boundary inwards.
    """
    _check_dimension(d)
    validate_nonnegative("b", b)
    validate_positive("R", R)
    if n < 16:
        raise ValueError(f"node count must be at least 16, got {n}")

    r = np.linspace(0.0, R, n + 1)
    w_nodes, w_points = _flux_on_intervals(d, b, r)
    dr = np.diff(r)
    points = 0.5 * (r[:-1] + r[1:])[:, None] + 0.5 * dr[:, None] * _GL_NODES[None, :]
    q = w_points / points ** (d - 1)
    panels = 0.5 * dr * np.sum(_GL_WEIGHTS * q, axis=1)
    g = np.zeros_like(r)
    g[:-1] = np.cumsum(panels[::-1])[::-1]

    solution = RadialSolution(d=d, b=float(b), R=float(R), r=r, g=g, w=w_nodes)
    logger.debug("radial d=%d b=%g R=%g n=%d: u(0)=%.10g", d, b, R, n, solution.u0)
    return solution


def ball_flux_profile(d: int, b: float, c: float) -> Tuple[float, float]:
    """
    (h(c), flux) for the ball of volume c, where flux = sigma_d w(R) is the total
    inward normal derivative on the boundary and h(c) = flux - c.
    """
    R = radius_for_volume(d, c)
    flux = sphere_area(d) * flux_w(d, b, R)
    return flux - c, flux


def verify_lemma4(d: int, b: float, c_grid: Sequence[float]) -> float:
    """
    Max relative defect of the ball identity h'(c) = b (h(c) + c) / |dB_c| over c_grid.

    h' uses a central difference with step 1e-4 c. The defect is |h' - rhs| / rhs, and
    the absolute |h'| when b = 0 makes the right side vanish.
    """
    validate_increasing("c_grid", c_grid, min_length=5)
    worst = 0.0
    for c in np.asarray(c_grid, dtype=float):
        validate_positive("volume", c)
        step = 1e-4 * c
        hp, _ = ball_flux_profile(d, b, c + step)
        hm, _ = ball_flux_profile(d, b, c - step)
        derivative = (hp - hm) / (2.0 * step)
        _, flux = ball_flux_profile(d, b, c)
        rhs = b * flux / ball_perimeter(d, c)
        defect = abs(derivative - rhs) / rhs if rhs > 0 else abs(derivative)
        worst = max(worst, defect)
    logger.info("ball flux identity d=%d b=%g: max relative defect %.3e", d, b, worst)
    return worst


def ball_profile(d: int, b: float, c: float, p_max: int = 3, n: int = 4096) -> BallProfile:
    """
    Ball values at volume c: f = flux - c, g = u(0), h_p = int u^p for p = 0..p_max.
    """
    R = radius_for_volume(d, c)
    solution = solve_radial(d, b, R, n=n)
    f, _ = ball_flux_profile(d, b, c)
    h = [c] + [solution.lp_power(p) for p in range(1, p_max + 1)]
    return BallProfile(d=d, b=b, c=c, radius=R, f=f, g=solution.u0, h=h)
