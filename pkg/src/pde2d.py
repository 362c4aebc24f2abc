"""
Grid solvers for -Laplace(u) + b . grad(u) = 1 and -Laplace(u) - B |grad u| = 1.

Drift convention: `b` is the field as it appears in the PDE. A diffusion
dX = beta dt + sqrt(2) dW has expected exit time solving the PDE with b = -beta,
so the physical drift is `VectorField.physical()`.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .constants import (CAP_SLACK, GRADIENT_DEAD_ZONE, MAX_CELL_PECLET, MONOTONE_SLACK,
                        GradientScheme)
from .errors import ConvergenceError, PolicyMonotonicityError, StabilityError
from .geometry import GridMask
from .pydantic_models import SolveReport
from .utils.sor import DEFAULT_MAX_ITER, optimal_omega, red_black_sor
from .utils.stencil import assemble, edge_lengths
from .utils.validation import validate_choice, validate_nonnegative, validate_positive

logger = logging.getLogger(__name__)

DEFAULT_MAX_SWEEPS = 50


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Grid function on a mask; values outside the interior are the Dirichlet data 0"""
    mask: GridMask
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != self.mask.shape:
            raise ValueError(f"field shape {self.values.shape} does not match mask {self.mask.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field has non-finite values")

    @property
    def interior_values(self) -> np.ndarray:
        return self.values[self.mask.interior]

    @property
    def max(self) -> float:
        return float(self.interior_values.max())

    def node_index(self, x: float, y: float) -> Tuple[int, int]:
        """(j, i) of the grid node nearest to (x, y)"""
        i = int(np.argmin(np.abs(self.mask.x - x)))
        j = int(np.argmin(np.abs(self.mask.y - y)))
        return j, i

    def node_value(self, x: float, y: float) -> float:
        return float(self.values[self.node_index(x, y)])

    def value_at(self, x, y):
        """Bilinear interpolation, zero outside the grid"""
        interp = RegularGridInterpolator((self.mask.y, self.mask.x), self.values,
                                         bounds_error=False, fill_value=0.0)
        pts = np.stack(np.broadcast_arrays(np.asarray(y, float), np.asarray(x, float)), axis=-1)
        return interp(pts)

    def to_rows(self) -> List[Tuple[float, float, float]]:
        X, Y = self.mask.coords
        sel = self.mask.interior
        return list(zip(X[sel].tolist(), Y[sel].tolist(), self.values[sel].tolist()))

    def shifted(self, offset: float) -> "ScalarField":
        return ScalarField(self.mask, np.where(self.mask.interior, self.values - offset, 0.0))


@dataclass(frozen=True, eq=False)
class VectorField:
    """Drift (bx, by) on a mask with magnitude bounded by `cap`"""
    mask: GridMask
    bx: np.ndarray
    by: np.ndarray
    cap: float

    def __post_init__(self):
        validate_nonnegative("cap", self.cap)
        peak = float(np.max(self.magnitude(), initial=0.0))
        if peak > self.cap * (1.0 + CAP_SLACK):
            raise ValueError(f"drift magnitude {peak:.6g} exceeds cap {self.cap:.6g}")

    @classmethod
    def zeros(cls, mask: GridMask, cap: float = 0.0) -> "VectorField":
        return cls(mask, np.zeros(mask.shape), np.zeros(mask.shape), cap)

    @classmethod
    def constant(cls, mask: GridMask, bx: float, by: float, cap: Optional[float] = None) -> "VectorField":
        cap = float(np.hypot(bx, by)) if cap is None else cap
        interior = mask.interior
        return cls(mask, np.where(interior, bx, 0.0), np.where(interior, by, 0.0), cap)

    def magnitude(self) -> np.ndarray:
        return np.where(self.mask.interior, np.hypot(self.bx, self.by), 0.0)

    def physical(self) -> "VectorField":
        """The SDE drift beta = -b"""
        return VectorField(self.mask, -self.bx, -self.by, self.cap)


def solve_linear_drift(
    mask: GridMask,
    drift: VectorField,
    tol: float = 1e-8,
    max_iter: int = DEFAULT_MAX_ITER,
) -> Tuple[ScalarField, SolveReport]:
    """
    Solve -Laplace(u) + b . grad(u) = 1 with u = 0 on the boundary.

    Shortley-Weller diffusion and component-wise upwind advection; the system is
    relaxed by red-black SOR until the max-norm defect is at most tol.

    Raises:
        ConvergenceError: iteration budget exhausted
    """
    validate_positive("tol", tol)
    if drift.mask.shape != mask.shape:
        raise ValueError("drift field lives on a different mask")
    stencil = assemble(mask, drift.bx, drift.by)
    omega = optimal_omega(mask.h, *mask.bounding_extent())
    result = red_black_sor(stencil, rhs=1.0, tol=tol, omega=omega, max_iter=max_iter)
    report = SolveReport(iterations=result.iterations, residual=result.residual, omega=result.omega)
    logger.debug("linear solve: %d iterations, residual %.3e", result.iterations, result.residual)
    return ScalarField(mask, result.u), report


def central_gradient(u: ScalarField) -> Tuple[np.ndarray, np.ndarray]:
    """
    Three-point gradient on the nonuniform stencil, using the boundary value 0 at
    the cut distance where a neighbour is exterior. Zero outside the interior.
    """
    mask = u.mask
    h_e, h_w, h_n, h_s = edge_lengths(mask)
    v = u.values
    pad = np.pad(v, 1)
    u_e, u_w = pad[1:-1, 2:], pad[1:-1, :-2]
    u_n, u_s = pad[2:, 1:-1], pad[:-2, 1:-1]
    u_e = np.where(mask.neighbor_interior("e"), u_e, 0.0)
    u_w = np.where(mask.neighbor_interior("w"), u_w, 0.0)
    u_n = np.where(mask.neighbor_interior("n"), u_n, 0.0)
    u_s = np.where(mask.neighbor_interior("s"), u_s, 0.0)
    gx = (h_w ** 2 * (u_e - v) + h_e ** 2 * (v - u_w)) / (h_e * h_w * (h_e + h_w))
    gy = (h_s ** 2 * (u_n - v) + h_n ** 2 * (v - u_s)) / (h_n * h_s * (h_n + h_s))
    return np.where(mask.interior, gx, 0.0), np.where(mask.interior, gy, 0.0)


def _one_sided(u: ScalarField):
    """Forward and backward differences (d+x, d-x, d+y, d-y) with Dirichlet zero across cuts"""
    mask = u.mask
    h_e, h_w, h_n, h_s = edge_lengths(mask)
    v = u.values
    pad = np.pad(v, 1)
    u_e = np.where(mask.neighbor_interior("e"), pad[1:-1, 2:], 0.0)
    u_w = np.where(mask.neighbor_interior("w"), pad[1:-1, :-2], 0.0)
    u_n = np.where(mask.neighbor_interior("n"), pad[2:, 1:-1], 0.0)
    u_s = np.where(mask.neighbor_interior("s"), pad[:-2, 1:-1], 0.0)
    return (u_e - v) / h_e, (v - u_w) / h_w, (u_n - v) / h_n, (v - u_s) / h_s


def upwind_trapping_gradient(u: ScalarField):
    """
    Per-axis magnitudes (gx, gy) of the largest descent available to the upwind
    operator, and the drift signs (sx, sy) that realise it.

    Along x the trapping term of a drift with |b_x| = s is -s * max(-D-u, D+u, 0);
    the backward difference (b_x > 0) is used only when -D-u strictly beats D+u.
    """
    dpx, dmx, dpy, dmy = _one_sided(u)
    gx = np.maximum(np.maximum(-dmx, dpx), 0.0)
    gy = np.maximum(np.maximum(-dmy, dpy), 0.0)
    sx = np.where(-dmx > dpx, 1.0, -1.0)
    sy = np.where(-dmy > dpy, 1.0, -1.0)
    interior = u.mask.interior
    return np.where(interior, gx, 0.0), np.where(interior, gy, 0.0), sx, sy


def optimal_drift_of(u: ScalarField, cap: float, gradient: str = GradientScheme.CENTRAL) -> VectorField:
    """
    Drift maximising the trapping term: b = -cap * grad(u) / |grad(u)|.

    Nodes with |grad u| below GRADIENT_DEAD_ZONE get zero drift. The "upwind" scheme
    returns the exact maximiser for the upwind operator instead of the central one.
    """
    validate_nonnegative("cap", cap)
    validate_choice("gradient", gradient, GradientScheme.all())
    mask = u.mask
    if gradient == GradientScheme.CENTRAL:
        gx, gy = central_gradient(u)
        norm = np.hypot(gx, gy)
        live = mask.interior & (norm > GRADIENT_DEAD_ZONE)
        scale = np.zeros(mask.shape)
        np.divide(cap, norm, out=scale, where=live)
        bx, by = -scale * gx, -scale * gy
    else:
        gx, gy, sx, sy = upwind_trapping_gradient(u)
        norm = np.hypot(gx, gy)
        live = mask.interior & (norm > GRADIENT_DEAD_ZONE)
        scale = np.zeros(mask.shape)
        np.divide(cap, norm, out=scale, where=live)
        bx, by = scale * sx * gx, scale * sy * gy
    return VectorField(mask, bx, by, cap)


def discrete_nonlinear_residual(u: ScalarField, cap: float) -> float:
    """Max-norm defect of the upwind discretization of -Laplace(u) - cap |grad u| = 1"""
    mask = u.mask
    laplace = assemble(mask).apply(u.values)
    gx, gy, _, _ = upwind_trapping_gradient(u)
    defect = 1.0 - (laplace - cap * np.hypot(gx, gy))
    return float(np.max(np.abs(defect[mask.interior])))


def solve_nonlinear(
    mask: GridMask,
    cap: float,
    tol: float = 1e-8,
    initial: str = "torsion",
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
    max_iter: int = DEFAULT_MAX_ITER,
) -> Tuple[ScalarField, SolveReport]:
    """
    Solve -Laplace(u) - cap |grad u| = 1 by policy iteration.

    Each sweep freezes the optimal upwind drift of the current iterate and solves the
    linear problem for the increment delta = u_new - u, starting SOR from optimal_omega
    every time. Increments are nonnegative up to the linear-solve error; anything below
    that aborts the iteration.

    Args:
        initial: "torsion" starts from the cap = 0 solution, "zero" from u = 0

    Raises:
        StabilityError: cap * h exceeds MAX_CELL_PECLET
        PolicyMonotonicityError: a sweep decreased u
        ConvergenceError: sweep or SOR budget exhausted
    """
    validate_nonnegative("cap", cap)
    validate_positive("tol", tol)
    validate_choice("initial", initial, ["torsion", "zero"])
    if cap * mask.h > MAX_CELL_PECLET:
        raise StabilityError(
            f"cap * h = {cap * mask.h:.3g} exceeds {MAX_CELL_PECLET}; refine the grid to h <= {MAX_CELL_PECLET / cap:.3g}")

    omega = optimal_omega(mask.h, *mask.bounding_extent())
    iterations = 0
    if initial == "torsion":
        u, first = solve_linear_drift(mask, VectorField.zeros(mask, cap), tol=tol, max_iter=max_iter)
        iterations += first.iterations
    else:
        u = ScalarField(mask, np.zeros(mask.shape))

    increments: List[float] = []
    min_increments: List[float] = []
    for sweep in range(1, max_sweeps + 1):
        drift = optimal_drift_of(u, cap, gradient=GradientScheme.UPWIND)
        stencil = assemble(mask, drift.bx, drift.by)
        rhs = stencil.residual(u.values, 1.0)
        result = red_black_sor(stencil, rhs=rhs, tol=tol, omega=omega, max_iter=max_iter)
        iterations += result.iterations
        delta = result.u

        step = float(np.max(np.abs(delta[mask.interior])))
        lowest = float(np.min(delta[mask.interior]))
        increments.append(step)
        min_increments.append(lowest)
        u = ScalarField(mask, u.values + delta)

        neg_rhs = max(0.0, -float(rhs[mask.interior].min()))
        allowed = MONOTONE_SLACK + u.max * (result.residual + neg_rhs)
        if lowest < -allowed:
            raise PolicyMonotonicityError(
                f"policy sweep {sweep} decreased u by {-lowest:.3e} (allowed {allowed:.3e})",
                decrease=-lowest, sweep=sweep, allowed=allowed)

        residual = discrete_nonlinear_residual(u, cap)
        logger.debug("policy sweep %d: max|delta| %.3e, min delta %.3e, residual %.3e",
                     sweep, step, lowest, residual)
        if step <= tol and residual <= 10.0 * tol:
            report = SolveReport(iterations=iterations, residual=residual, policy_sweeps=sweep,
                                 omega=result.omega, initial=initial, increments=increments,
                                 min_increments=min_increments)
            logger.info("nonlinear solve cap=%g h=%g converged in %d sweeps (%d SOR iterations)",
                        cap, mask.h, sweep, iterations)
            return u, report

    raise ConvergenceError(
        f"policy iteration did not converge in {max_sweeps} sweeps (last increment {increments[-1]:.3e})",
        residual=discrete_nonlinear_residual(u, cap), iterations=iterations)
