"""
Shortley-Weller diffusion plus first-order upwind advection on a GridMask.

The discrete equation at an interior node P reads

    diag * u_P - a_e u_E - a_w u_W - a_n u_N - a_s u_S = rhs_P

with neighbour values across a boundary cut equal to zero (they are dropped).
All off-diagonal coefficients are nonnegative and diag dominates their sum, so
the operator is an M-matrix for any drift field.
"""
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

# Inner window: the outer ring of a mask is always exterior
INNER = (slice(1, -1), slice(1, -1))


@dataclass(frozen=True, eq=False)
class Stencil:
    interior: np.ndarray
    diag: np.ndarray
    a_e: np.ndarray
    a_w: np.ndarray
    a_n: np.ndarray
    a_s: np.ndarray

    def neighbor_sum(self, u: np.ndarray) -> np.ndarray:
        """sum of a_k u_k over the four neighbours, on the inner window"""
        return (self.a_e[INNER] * u[1:-1, 2:]
                + self.a_w[INNER] * u[1:-1, :-2]
                + self.a_n[INNER] * u[2:, 1:-1]
                + self.a_s[INNER] * u[:-2, 1:-1])

    def apply(self, u: np.ndarray) -> np.ndarray:
        out = np.zeros_like(u)
        out[INNER] = self.diag[INNER] * u[INNER] - self.neighbor_sum(u)
        return np.where(self.interior, out, 0.0)

    def residual(self, u: np.ndarray, rhs: Union[float, np.ndarray] = 1.0) -> np.ndarray:
        """rhs - A u at interior nodes, zero elsewhere"""
        return np.where(self.interior, rhs - self.apply(u), 0.0)


def edge_lengths(mask):
    """Physical distances (h_e, h_w, h_n, h_s) from each node to its neighbour or the boundary"""
    h = mask.h
    return mask.cut_e * h, mask.cut_w * h, mask.cut_n * h, mask.cut_s * h


def assemble(mask, bx: Optional[np.ndarray] = None, by: Optional[np.ndarray] = None) -> Stencil:
    """
    Build the operator -Laplace(u) + b . grad(u) for drift components (bx, by).

    A positive component takes the backward difference, zero or negative the
    forward one. Across a boundary cut the difference uses the cut distance.
    """
    interior = mask.interior
    h_e, h_w, h_n, h_s = edge_lengths(mask)

    a_e = 2.0 / ((h_e + h_w) * h_e)
    a_w = 2.0 / ((h_e + h_w) * h_w)
    a_n = 2.0 / ((h_n + h_s) * h_n)
    a_s = 2.0 / ((h_n + h_s) * h_s)
    diag = 2.0 / (h_e * h_w) + 2.0 / (h_n * h_s)

    if bx is not None:
        bx = np.where(interior, bx, 0.0)
        forward = bx <= 0
        a_e = a_e + np.maximum(-bx, 0.0) / h_e
        a_w = a_w + np.maximum(bx, 0.0) / h_w
        diag = diag + np.abs(bx) / np.where(forward, h_e, h_w)
    if by is not None:
        by = np.where(interior, by, 0.0)
        forward = by <= 0
        a_n = a_n + np.maximum(-by, 0.0) / h_n
        a_s = a_s + np.maximum(by, 0.0) / h_s
        diag = diag + np.abs(by) / np.where(forward, h_n, h_s)

    # Dirichlet zero: couplings across a cut vanish
    a_e = np.where(interior & mask.neighbor_interior("e"), a_e, 0.0)
    a_w = np.where(interior & mask.neighbor_interior("w"), a_w, 0.0)
    a_n = np.where(interior & mask.neighbor_interior("n"), a_n, 0.0)
    a_s = np.where(interior & mask.neighbor_interior("s"), a_s, 0.0)
    diag = np.where(interior, diag, 0.0)
    return Stencil(interior=interior, diag=diag, a_e=a_e, a_w=a_w, a_n=a_n, a_s=a_s)
