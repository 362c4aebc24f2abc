"""
Matrix-free red-black successive over-relaxation for Stencil operators
"""
import logging
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from ..errors import ConvergenceError
from .stencil import INNER, Stencil

logger = logging.getLogger(__name__)

DEFAULT_MAX_ITER = 100_000
CHECK_EVERY = 10
# Relaxation is reduced when the residual stays above this multiple of the best one seen
DIVERGENCE_FACTOR = 10.0
# Consecutive residual checks above DIVERGENCE_FACTOR * best before omega is reduced
DIVERGENCE_CHECKS = 3


@dataclass
class SorResult:
    u: np.ndarray
    iterations: int
    residual: float
    omega: float


def optimal_omega(h: float, lx: float, ly: float) -> float:
    """
    Relaxation factor 2 / (1 + sqrt(1 - rho^2)) from the Jacobi spectral radius of the
    5-point Laplacian on an lx-by-ly box, rho = (cos(pi h / lx) + cos(pi h / ly)) / 2.
    """
    rho = 0.5 * (np.cos(np.pi * h / lx) + np.cos(np.pi * h / ly))
    return float(2.0 / (1.0 + np.sqrt(max(1.0 - rho * rho, 0.0))))


def _colors(shape):
    jj, ii = np.indices(shape)
    parity = (ii + jj) % 2
    return parity[INNER] == 0, parity[INNER] == 1


def red_black_sor(
    stencil: Stencil,
    rhs: Union[float, np.ndarray] = 1.0,
    tol: float = 1e-8,
    omega: float = 1.0,
    u0: Optional[np.ndarray] = None,
    max_iter: int = DEFAULT_MAX_ITER,
) -> SorResult:
    """
    Solve A u = rhs on the interior nodes of `stencil`.

    Each iteration relaxes the red nodes (i + j even) and then the black ones, so the
    result does not depend on the order of updates within a colour. The max-norm
    residual is checked every CHECK_EVERY iterations. Over-relaxation makes the residual
    rise before it falls, so growth is ignored during a warm-up of twice the longest grid
    dimension. After that, if the residual stays above DIVERGENCE_FACTOR times the best
    one for DIVERGENCE_CHECKS checks in a row, omega is pulled halfway back towards 1.

    Raises:
        ConvergenceError: residual still above tol after max_iter iterations, or not finite
    """
    interior = stencil.interior
    u = np.zeros(interior.shape) if u0 is None else np.where(interior, u0, 0.0)
    rhs_inner = np.broadcast_to(np.asarray(rhs, dtype=float), interior.shape)[INNER]
    inv_diag = np.zeros(interior.shape)
    np.divide(1.0, stencil.diag, out=inv_diag, where=interior)
    inv_diag = inv_diag[INNER]
    red, black = _colors(interior.shape)
    red = red & interior[INNER]
    black = black & interior[INNER]

    def residual_norm() -> float:
        if not interior.any():
            return 0.0
        return float(np.max(np.abs(stencil.residual(u, rhs))))

    residual = residual_norm()
    warmup = 2 * max(interior.shape)
    best = np.inf
    strikes = 0
    iterations = 0
    while residual > tol:
        if iterations >= max_iter:
            raise ConvergenceError(
                f"SOR did not reach residual {tol:g} in {max_iter} iterations (last residual {residual:.3e})",
                residual=residual, iterations=iterations)
        for color in (red, black):
            target = (rhs_inner + stencil.neighbor_sum(u)) * inv_diag
            inner = u[INNER]
            inner[color] += omega * (target[color] - inner[color])
        iterations += 1
        if iterations % CHECK_EVERY == 0:
            residual = residual_norm()
            logger.debug("sor iteration %d residual %.3e omega %.4f", iterations, residual, omega)
            if not np.isfinite(residual):
                raise ConvergenceError(f"SOR diverged at iteration {iterations} (omega {omega:.4f})",
                                       residual=residual, iterations=iterations)
            if iterations < warmup:
                continue
            strikes = strikes + 1 if residual > DIVERGENCE_FACTOR * best else 0
            if strikes >= DIVERGENCE_CHECKS and omega > 1.0:
                omega = 1.0 + 0.5 * (omega - 1.0)
                logger.warning("SOR residual grew to %.3e; relaxation reduced to %.4f", residual, omega)
                best = residual
                strikes = 0
            best = min(best, residual)

    return SorResult(u=u, iterations=iterations, residual=residual, omega=omega)
