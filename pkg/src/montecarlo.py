"""
Euler-Maruyama simulation of exit times of dX = beta(X) dt + sqrt(2) dW.

Paths are split into blocks of BLOCK_SIZE. Block k draws its normals from a Philox
stream keyed by (seed, k), so the estimate does not depend on how blocks are
scheduled across worker processes. The streams are per block, not per path: the
same seed gives a different estimate if BLOCK_SIZE changes.
"""
import logging
from dataclasses import dataclass
from functools import cached_property
from multiprocessing import Pool
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .constants import CAP_SLACK, PolicyKind
from .errors import SimulationError
from .geometry import Domain2D
from .pde2d import VectorField
from .pydantic_models import ExitTimeEstimate
from .utils.validation import validate_nonnegative, validate_positive

logger = logging.getLogger(__name__)

BLOCK_SIZE = 16384
MIN_PATHS = 100
# Time budget per unit squared inradius, before the drift factor
DEFAULT_MAX_TIME = 20.0
# Largest cap * inradius fed to the exponential growth of the budget
MAX_TRAPPING_EXPONENT = 20.0


@dataclass(frozen=True, eq=False)
class DriftPolicy:
    """Physical drift beta(x) of the simulated diffusion"""
    kind: str
    cap: float = 0.0
    field: Optional[VectorField] = None
    sign_flip: bool = True

    @classmethod
    def zero(cls) -> "DriftPolicy":
        return cls(PolicyKind.ZERO)

    @classmethod
    def radial_inward(cls, cap: float) -> "DriftPolicy":
        validate_nonnegative("cap", cap)
        return cls(PolicyKind.RADIAL_INWARD, cap=cap)

    @classmethod
    def interpolated(cls, field: VectorField, sign_flip: bool = True) -> "DriftPolicy":
        """
        Bilinear interpolation of a grid drift. With sign_flip the field is taken in the
        PDE convention and negated, so an optimal coupling from pde2d traps the paths.
        """
        return cls(PolicyKind.INTERPOLATED, cap=field.cap, field=field, sign_flip=sign_flip)

    @cached_property
    def _interpolators(self):
        mask = self.field.mask
        grid = (mask.y, mask.x)
        sign = -1.0 if self.sign_flip else 1.0
        bx = np.where(mask.interior, sign * self.field.bx, 0.0)
        by = np.where(mask.interior, sign * self.field.by, 0.0)
        return (RegularGridInterpolator(grid, bx, bounds_error=False, fill_value=0.0),
                RegularGridInterpolator(grid, by, bounds_error=False, fill_value=0.0))

    def beta(self, x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        if self.kind == PolicyKind.ZERO:
            return np.zeros_like(x), np.zeros_like(y)
        if self.kind == PolicyKind.RADIAL_INWARD:
            rho = np.hypot(x, y)
            scale = np.zeros_like(rho)
            np.divide(-self.cap, rho, out=scale, where=rho > 0)
            return scale * x, scale * y
        ix, iy = self._interpolators
        pts = np.column_stack([y, x])
        bx, by = ix(pts), iy(pts)
        norm = np.hypot(bx, by)
        clamp = np.ones_like(norm)
        np.divide(self.cap, norm, out=clamp, where=norm > self.cap)
        return bx * clamp, by * clamp

    def check_cap(self, domain: Domain2D, samples: int = 4096, seed: int = 0) -> float:
        """
        Largest drift magnitude over random points of the domain's bounding box.

        Raises:
            SimulationError: the magnitude exceeds cap
        """
        xmin, xmax, ymin, ymax = domain.bbox()
        rng = np.random.default_rng(seed)
        x = rng.uniform(xmin, xmax, samples)
        y = rng.uniform(ymin, ymax, samples)
        bx, by = self.beta(x, y)
        peak = float(np.max(np.hypot(bx, by)))
        if peak > self.cap * (1.0 + CAP_SLACK):
            raise SimulationError(f"{self.kind} drift reaches {peak:.6g} above its cap {self.cap:.6g}")
        return peak


def block_generator(seed: int, block: int) -> np.random.Generator:
    """Independent counter-based stream for block `block` of master seed `seed`"""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def default_max_time(domain: Domain2D, policy: DriftPolicy) -> float:
    """
    Simulated-time budget for `domain` under `policy`.

    Exit times scale with the squared inradius, and an inward drift of magnitude cap
    stretches them by up to exp(cap * inradius).
    """
    r = domain.inradius()
    return DEFAULT_MAX_TIME * r * r * float(np.exp(min(policy.cap * r, MAX_TRAPPING_EXPONENT)))


def _run_block(args) -> np.ndarray:
    domain, policy, x0, dt, size, seed, block, max_steps = args
    rng = block_generator(seed, block)
    px = np.full(size, x0[0], dtype=float)
    py = np.full(size, x0[1], dtype=float)
    ids = np.arange(size)
    tau = np.empty(size)
    noise = np.sqrt(2.0 * dt)
    step = 0
    while ids.size:
        if step >= max_steps:
            raise SimulationError(
                f"{ids.size} paths of block {block} still inside after {max_steps} steps; raise max_time")
        step += 1
        bx, by = policy.beta(px, py)
        xi = rng.standard_normal((ids.size, 2))
        px = px + bx * dt + noise * xi[:, 0]
        py = py + by * dt + noise * xi[:, 1]
        out = domain.level(px, py) >= 0
        if out.any():
            tau[ids[out]] = step * dt
            keep = ~out
            ids, px, py = ids[keep], px[keep], py[keep]
    return tau


def simulate_exit(
    domain: Domain2D,
    policy: DriftPolicy,
    x0: Sequence[float],
    dt: float,
    n_paths: int,
    seed: int,
    workers: int = 1,
    max_time: Optional[float] = None,
) -> ExitTimeEstimate:
    """
    Monte Carlo estimate of E[tau | X_0 = x0].

    Exit is detected when the shape's level function is >= 0 at the end of a step.
    The result is bitwise reproducible for fixed (seed, dt, n_paths, policy) and BLOCK_SIZE,
    whatever the number of workers.

    Args:
        max_time: simulated-time budget per path; defaults to default_max_time(domain, policy)

    Raises:
        SimulationError: x0 not strictly inside, n_paths < 100, or time budget exceeded
    """
    validate_positive("dt", dt, SimulationError)
    if n_paths < MIN_PATHS:
        raise SimulationError(f"n_paths must be at least {MIN_PATHS}, got {n_paths}")
    x0 = (float(x0[0]), float(x0[1]))
    if not domain.level(x0[0], x0[1]) < 0:
        raise SimulationError(f"start point {x0} is not strictly inside the {domain.name}")
    policy.check_cap(domain, seed=seed)
    if max_time is None:
        max_time = default_max_time(domain, policy)
    validate_positive("max_time", max_time, SimulationError)

    max_steps = int(np.ceil(max_time / dt))
    sizes = [BLOCK_SIZE] * (n_paths // BLOCK_SIZE)
    if n_paths % BLOCK_SIZE:
        sizes.append(n_paths % BLOCK_SIZE)
    tasks = [(domain, policy, x0, dt, size, seed, block, max_steps) for block, size in enumerate(sizes)]

    if workers > 1 and len(tasks) > 1:
        with Pool(processes=min(workers, len(tasks))) as pool:
            blocks = pool.map(_run_block, tasks)
    else:
        blocks = [_run_block(task) for task in tasks]

    tau = np.concatenate(blocks)
    mean = float(np.sum(tau) / tau.size)
    stderr = float(np.std(tau, ddof=1) / np.sqrt(tau.size))
    logger.info("exit time %s from %s: %.6f +- %.6f (%d paths, dt=%g)",
                policy.kind, x0, mean, stderr, n_paths, dt)
    return ExitTimeEstimate(mean=mean, stderr=stderr, n_paths=n_paths, dt=dt, seed=seed,
                            policy=policy.kind, x0=list(x0))
