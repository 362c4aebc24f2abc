"""Application-wide constants"""


class ShapeKind:
    """Shape kind constants

    Centralizes all shape identifiers to avoid magic strings throughout the codebase.
    """
    DISK = "disk"
    ELLIPSE = "ellipse"
    RECTANGLE = "rectangle"
    SQUARE = "square"
    ANNULUS = "annulus"
    STADIUM = "stadium"

    @classmethod
    def all(cls):
        """Return list of all valid shape kinds"""
        return [cls.DISK, cls.ELLIPSE, cls.RECTANGLE, cls.SQUARE, cls.ANNULUS, cls.STADIUM]

    @classmethod
    def is_valid(cls, kind):
        """Check if a shape kind is valid"""
        return kind in cls.all()

    @classmethod
    def smooth(cls):
        """Shapes with C^2 (or C^{1,1}) boundary, where the boundary point lemma applies"""
        return [cls.DISK, cls.ELLIPSE, cls.ANNULUS, cls.STADIUM]


class PolicyKind:
    """Drift policy constants for the Monte Carlo simulator"""
    ZERO = "zero"
    RADIAL_INWARD = "radial-inward"
    INTERPOLATED = "interpolated"

    @classmethod
    def all(cls):
        """Return list of all valid policy kinds"""
        return [cls.ZERO, cls.RADIAL_INWARD, cls.INTERPOLATED]

    @classmethod
    def is_valid(cls, kind):
        """Check if a policy kind is valid"""
        return kind in cls.all()


class GradientScheme:
    """Gradient discretizations used to build the optimal coupling"""
    CENTRAL = "central"
    UPWIND = "upwind"

    @classmethod
    def all(cls):
        return [cls.CENTRAL, cls.UPWIND]

    @classmethod
    def is_valid(cls, scheme):
        return scheme in cls.all()


# |grad u| below this maps to zero drift (convention grad u/|grad u| = 0 at critical points)
GRADIENT_DEAD_ZONE = 1e-12

# Cap on the admissible drift magnitude: |b| <= cap * (1 + CAP_SLACK)
CAP_SLACK = 1e-12

# Policy sweeps may not decrease u by more than this (plus the linear-solve error bound)
MONOTONE_SLACK = 1e-12

# Nonlinear solver requires cap * h <= this
MAX_CELL_PECLET = 2.0

# Radial flux: use the power series below this radius or below this value of b*r
SERIES_RADIUS = 1e-3
SERIES_BR = 0.1
SERIES_TERMS = 40

# Lp exponents reported by the functional evaluator
LP_EXPONENTS = (1, 2, 3)

# Functionals compared across the equal-area family
COMPARISON_COLUMNS = ("u_max", "u_l1", "u_l2", "u_l3", "grad_l1", "flux")
