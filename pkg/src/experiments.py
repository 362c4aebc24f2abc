"""
Experiments: equal-area shape comparison, comparison with arbitrary drifts,
derivative bounds along volume families, level-set self-consistency, large-cap
asymptotics and grid convergence.
"""
import logging
from multiprocessing import Pool
from typing import Dict, List, Optional, Tuple

import numpy as np

from .constants import COMPARISON_COLUMNS, ShapeKind
from .errors import ExperimentError
from .functionals import evaluate, superlevel_restrict
from .geometry import Disk, GridMask, Rectangle, build_mask, family_member
from .pde2d import ScalarField, VectorField, optimal_drift_of, solve_linear_drift, solve_nonlinear
from .pydantic_models import (BallProfile, ComparisonRow, ComparisonTable, ConvergenceRow,
                              ExperimentConfig, FunctionalReport, InductionRow, InequalityRow,
                              Lemma1Result, TrendResult, TrendRow)
from .radial import (ball_flux_profile, ball_perimeter, ball_profile, isoperimetric_constant,
                     solve_radial)

logger = logging.getLogger(__name__)

# Relative step of the central differences in c
BALL_STEP = 1e-4
FAMILY_STEP = 0.02
# Peak of a random drift before clamping, in units of the cap
DRIFT_OVERSHOOT = 1.5
# Bound derivatives compared along volume families
P_MAX = 3


def cap_key(cap: float) -> str:
    return f"{cap:g}"


def square_torsion_center(side: float = 1.0, tol: float = 1e-16) -> float:
    """
    Torsion function at the centre of a square, from the Fourier series
    side^2 * (1/8 - sum_{m odd} 4 (-1)^((m-1)/2) / (pi^3 m^3 cosh(m pi / 2))).
    """
    total = 0.0
    m = 1
    while True:
        term = 4.0 * (-1) ** ((m - 1) // 2) / (np.pi ** 3 * m ** 3 * np.cosh(0.5 * m * np.pi))
        total += term
        if abs(term) < tol:
            break
        m += 2
    return side ** 2 * (0.125 - total)


def random_drift_field(mask: GridMask, cap: float, rng: np.random.Generator, modes: int = 8) -> VectorField:
    """
    Smooth drift from `modes` random Fourier modes per component, scaled to a peak of
    DRIFT_OVERSHOOT * cap on the interior and then clamped to magnitude cap.
    """
    X, Y = mask.coords
    xmin, xmax = mask.x[0], mask.x[-1]
    ymin, ymax = mask.y[0], mask.y[-1]
    lx, ly = xmax - xmin, ymax - ymin
    components = []
    for _ in range(2):
        field = np.zeros(mask.shape)
        kx = rng.integers(-3, 4, size=modes)
        ky = rng.integers(-3, 4, size=modes)
        amp = rng.standard_normal(modes)
        phase = rng.uniform(0.0, 2.0 * np.pi, size=modes)
        for a, p, q, phi in zip(amp, kx, ky, phase):
            field += a * np.cos(2.0 * np.pi * (p * (X - xmin) / lx + q * (Y - ymin) / ly) + phi)
        components.append(np.where(mask.interior, field, 0.0))
    bx, by = components
    norm = np.hypot(bx, by)
    peak = float(norm.max())
    if peak == 0.0 or cap == 0.0:
        return VectorField.zeros(mask, cap)
    scale = DRIFT_OVERSHOOT * cap / peak
    bx, by, norm = bx * scale, by * scale, norm * scale
    clamp = np.ones_like(norm)
    np.divide(cap, norm, out=clamp, where=norm > cap)
    return VectorField(mask, bx * clamp, by * clamp, cap)


def _comparison_cell(args) -> Tuple[str, float, List[Tuple[float, FunctionalReport, int]]]:
    kind, area, cap, spacings, tol = args
    shape = family_member(kind, area)
    results = []
    for h in spacings:
        mask = build_mask(shape, h)
        u, report = solve_nonlinear(mask, cap, tol=tol)
        results.append((h, evaluate(u, cap), report.policy_sweeps))
    return kind, cap, results


def run_shape_comparison(cfg: ExperimentConfig) -> ComparisonTable:
    """
    Solve the nonlinear problem on every (shape, cap) of the equal-area family and
    check, column by column, that the disk is the strict maximiser.

    Each row reports the finest spacing; the error estimate of a column is the change
    from the next coarser spacing.

    Raises:
        ExperimentError: a member's volume deviates from the target
    """
    if ShapeKind.DISK not in cfg.shapes:
        raise ExperimentError("shape comparison needs the disk in the family")
    for kind in cfg.shapes:
        shape = family_member(kind, cfg.area)
        if abs(shape.area() - cfg.area) > 1e-6 * cfg.area:
            raise ExperimentError(f"{kind} has area {shape.area()}, target {cfg.area}")

    tasks = [(kind, cfg.area, cap, cfg.spacings, cfg.tol) for cap in cfg.caps for kind in cfg.shapes]
    if cfg.workers > 1:
        with Pool(processes=cfg.workers) as pool:
            cells = pool.map(_comparison_cell, tasks)
    else:
        cells = [_comparison_cell(task) for task in tasks]

    rows = []
    for kind, cap, results in cells:
        h, report, sweeps = results[-1]
        error = {}
        if len(results) > 1:
            coarse = results[-2][1]
            error = {col: abs(report.column(col) - coarse.column(col)) for col in COMPARISON_COLUMNS}
        shape = family_member(kind, cfg.area)
        rows.append(ComparisonRow(shape=kind, cap=cap, h=h, volume=report.volume,
                                  perimeter=shape.perimeter(), isoperimetric_ratio=shape.isoperimetric_ratio(),
                                  report=report, error=error, policy_sweeps=sweeps))
        logger.info("%s cap=%g: u_max=%.6f grad_l1=%.6f flux=%.6f", kind, cap, report.u_max,
                    report.grad_l1, report.flux)

    table = ComparisonTable(target_area=cfg.area, caps=cfg.caps, rows=rows)
    for cap in cfg.caps:
        key = cap_key(cap)
        disk = table.row(ShapeKind.DISK, cap)
        others = [row for row in rows if row.cap == cap and row.shape != ShapeKind.DISK]
        table.disk_is_max[key] = {}
        table.margins[key] = {}
        table.resolved[key] = {}
        for col in COMPARISON_COLUMNS:
            if not others:
                continue
            best = max(others, key=lambda row: row.report.column(col))
            margin = disk.report.column(col) - best.report.column(col)
            table.margins[key][col] = margin
            if col == "flux" and cap == 0:
                # flux = volume for every shape when the cap vanishes
                table.disk_is_max[key][col] = None
                table.resolved[key][col] = None
                continue
            table.disk_is_max[key][col] = margin > 0
            if disk.error and best.error:
                table.resolved[key][col] = margin > 3.0 * max(disk.error[col], best.error[col])
            else:
                table.resolved[key][col] = None
    return table


def verify_lemma1(cfg: ExperimentConfig) -> List[Lemma1Result]:
    """
    Compare the coupled solution with solutions for seeded random drifts |b| <= cap.

    For each shape reports the worst excess max(u_b - u_coupled), the excess of the
    coupled drift itself and of the zero drift, and how far an outward-pushing drift
    falls below the coupled solution at the centre.
    """
    cap = cfg.lemma1_cap
    h = cfg.lemma1_spacing
    results = []
    for kind in cfg.lemma1_shapes:
        mask = build_mask(family_member(kind, cfg.area), h)
        u_star, _ = solve_nonlinear(mask, cap, tol=cfg.tol)
        rng = np.random.default_rng(cfg.seed)
        worst = -np.inf
        for index in range(cfg.n_drift_fields):
            drift = random_drift_field(mask, cap, rng, modes=cfg.drift_modes)
            u_b, _ = solve_linear_drift(mask, drift, tol=cfg.tol)
            excess = _max_excess(u_b, u_star)
            logger.debug("%s drift field %d: excess %.3e", kind, index, excess)
            worst = max(worst, excess)

        coupled = optimal_drift_of(u_star, cap, gradient="upwind")
        u_self, _ = solve_linear_drift(mask, coupled, tol=cfg.tol)
        u_zero, _ = solve_linear_drift(mask, VectorField.zeros(mask, cap), tol=cfg.tol)

        # physical drift cap * x / |x| pushes out; the PDE field is its negative
        X, Y = mask.coords
        rho = np.hypot(X, Y)
        scale = np.zeros(mask.shape)
        np.divide(-cap, rho, out=scale, where=mask.interior & (rho > 0))
        outward = VectorField(mask, scale * X, scale * Y, cap)
        u_out, _ = solve_linear_drift(mask, outward, tol=cfg.tol)

        result = Lemma1Result(
            shape=kind, cap=cap, h=h, n_fields=cfg.n_drift_fields,
            worst_violation=float(worst),
            self_violation=_max_excess(u_self, u_star),
            zero_drift_violation=_max_excess(u_zero, u_star),
            outward_margin=u_star.node_value(0.0, 0.0) - u_out.node_value(0.0, 0.0),
        )
        logger.info("comparison on %s: worst excess %.3e over %d drifts", kind, result.worst_violation,
                    cfg.n_drift_fields)
        results.append(result)
    return results


def _max_excess(u: ScalarField, reference: ScalarField) -> float:
    sel = u.mask.interior
    return float(np.max(u.values[sel] - reference.values[sel]))


def _bound_row(family: str, d: int, b: float, c: float, quantity: str, lhs: float, rhs: float,
               own: Optional[float] = None, floor: float = 1e-6, slack: float = 0.0) -> InequalityRow:
    scale = max(abs(rhs), floor)
    margin = (rhs - lhs) / scale
    return InequalityRow(family=family, d=d, b=b, c=c, quantity=quantity, lhs=lhs, rhs=rhs,
                         defect=abs(rhs - lhs) / scale, margin=margin, holds=margin >= -slack,
                         own_perimeter_rhs=own)


def _bounds(d: int, b: float, c: float, ball: BallProfile) -> Dict[str, float]:
    """Right-hand sides at volume c, built from the ball profile and c_d c^((d-1)/d)"""
    perimeter = isoperimetric_constant(d) * c ** ((d - 1) / d)
    flux = ball.f + c
    bounds = {"flux": b * flux / perimeter, "sup": flux / perimeter ** 2}
    for p in range(1, P_MAX + 1):
        bounds[f"lp{p}"] = p * ball.h[p - 1] * flux / perimeter ** 2
    return bounds


def _profile_values(f: float, g: float, h: List[float]) -> Dict[str, float]:
    values = {"flux": f, "sup": g}
    for p in range(1, P_MAX + 1):
        values[f"lp{p}"] = h[p]
    return values


def family_profile(kind: str, cap: float, c: float, h: float, tol: float,
                   cache: Optional[Dict[float, Tuple[float, float, List[float]]]] = None) -> BallProfile:
    """
    f, g, h_p of the member of volume c of a shape family, by exact scaling from the
    area-1 reference shape: u(x) = s^2 v(x / s) with s = sqrt(c), where v solves the
    problem with cap * s on the reference shape.
    """
    s = np.sqrt(c)
    reference_cap = cap * s
    cache = {} if cache is None else cache
    if reference_cap not in cache:
        mask = build_mask(family_member(kind, 1.0), h)
        v, _ = solve_nonlinear(mask, reference_cap, tol=tol)
        report = evaluate(v, reference_cap)
        cache[reference_cap] = (report.u_max, report.grad_l1, [report.lp_power(p) for p in range(P_MAX + 1)])
    v_max, v_grad, v_powers = cache[reference_cap]
    powers = [c] + [s ** (2 * p + 2) * v_powers[p] for p in range(1, P_MAX + 1)]
    return BallProfile(d=2, b=cap, c=c, radius=s, f=cap * s ** 3 * v_grad, g=s * s * v_max, h=powers)


def verify_differential_inequalities(cfg: ExperimentConfig) -> List[InequalityRow]:
    """
    Derivatives in c of f, g and h_p against their bounds.

    The ball family (radial solutions, every configured dimension) attains equality;
    non-ball families (2D grid solutions scaled from an area-1 reference) must stay
    strictly below. Bounds use the ball's f and h_{p-1}, which are the suprema
    over all domains of volume c.
    """
    rows: List[InequalityRow] = []
    for d in cfg.ball_dims:
        for b in cfg.ball_caps:
            for c in cfg.ball_volumes:
                step = BALL_STEP * c
                plus = ball_profile(d, b, c + step, P_MAX, n=cfg.radial_nodes)
                minus = ball_profile(d, b, c - step, P_MAX, n=cfg.radial_nodes)
                ball = ball_profile(d, b, c, P_MAX, n=cfg.radial_nodes)
                # f has a closed form; the quadrature profiles carry g and h_p
                fp, _ = ball_flux_profile(d, b, c + step)
                fm, _ = ball_flux_profile(d, b, c - step)
                upper = _profile_values(fp, plus.g, plus.h)
                lower = _profile_values(fm, minus.g, minus.h)
                for quantity, rhs in _bounds(d, b, c, ball).items():
                    lhs = (upper[quantity] - lower[quantity]) / (2.0 * step)
                    rows.append(_bound_row(f"ball-d{d}", d, b, c, quantity, lhs, rhs, slack=1e-3))

    for kind in cfg.family_shapes:
        for b in cfg.family_caps:
            cache: Dict[float, Tuple[float, float, List[float]]] = {}
            for c in cfg.family_volumes:
                step = FAMILY_STEP * c
                upper = family_profile(kind, b, c + step, cfg.family_spacing, cfg.tol, cache)
                lower = family_profile(kind, b, c - step, cfg.family_spacing, cfg.tol, cache)
                own = family_profile(kind, b, c, cfg.family_spacing, cfg.tol, cache)
                ball = ball_profile(2, b, c, P_MAX, n=cfg.radial_nodes)
                own_perimeter = family_member(kind, c).perimeter()
                up = _profile_values(upper.f, upper.g, upper.h)
                lo = _profile_values(lower.f, lower.g, lower.h)
                own_rhs = _own_perimeter_bounds(b, c, own, own_perimeter)
                for quantity, rhs in _bounds(2, b, c, ball).items():
                    lhs = (up[quantity] - lo[quantity]) / (2.0 * step)
                    rows.append(_bound_row(kind, 2, b, c, quantity, lhs, rhs, own=own_rhs[quantity]))
            logger.info("derivative bounds for %s family, b=%g: %d volumes", kind, b, len(cfg.family_volumes))
    return rows


def _own_perimeter_bounds(b: float, c: float, own: BallProfile, perimeter: float) -> Dict[str, float]:
    flux = own.f + c
    bounds = {"flux": b * flux / perimeter, "sup": flux / perimeter ** 2}
    for p in range(1, P_MAX + 1):
        bounds[f"lp{p}"] = p * own.h[p - 1] * flux / perimeter ** 2
    return bounds


def verify_level_set_induction(cfg: ExperimentConfig) -> List[InductionRow]:
    """
    Re-solve on superlevel sets {u > eps} and compare with u - eps.

    On the disk the extracted set is also compared with the radius predicted by the
    radial solution.
    """
    cap = cfg.induction_cap
    h = cfg.induction_spacing
    rows = []
    for kind in cfg.induction_shapes:
        shape = family_member(kind, cfg.area)
        mask = build_mask(shape, h)
        u, _ = solve_nonlinear(mask, cap, tol=cfg.tol)
        radial = solve_radial(2, cap, shape.radius, n=cfg.radial_nodes) if isinstance(shape, Disk) else None
        for fraction in cfg.induction_fractions:
            eps = fraction * u.max
            sub, shifted = superlevel_restrict(u, eps)
            v, _ = solve_nonlinear(sub, cap, tol=cfg.tol)
            defect = float(np.max(np.abs(v.values - shifted.values)[sub.interior]))
            predicted = measured = None
            if radial is not None:
                predicted = radial.radius_at_level(eps)
                measured = float(np.sqrt(sub.area / np.pi))
            rows.append(InductionRow(shape=kind, fraction=fraction, eps=eps, h=h, defect=defect,
                                     predicted_radius=predicted, measured_radius=measured))
            logger.info("superlevel %s eps=%.4f: defect %.3e", kind, eps, defect)
    return rows


def large_b_trend(cfg: ExperimentConfig) -> TrendResult:
    """
    ln u(0) / (b R / 2) on the unit ball for increasing caps.

    Raises:
        ExperimentError: a sequence is not increasing or its increments do not shrink
    """
    rows = []
    monotone = shrinking = True
    for d in cfg.trend_dims:
        ratios = []
        for b in cfg.trend_caps:
            u0 = solve_radial(d, b, 1.0, n=cfg.radial_nodes).u0
            ratio = float(np.log(u0) / (0.5 * b))
            ratios.append(ratio)
            rows.append(TrendRow(d=d, b=b, u0=u0, ratio=ratio))
        steps = np.diff(ratios)
        monotone = monotone and bool(np.all(steps > 0))
        shrinking = shrinking and bool(np.all(np.diff(steps) < 0))
    result = TrendResult(rows=rows, monotone=monotone, increments_shrink=shrinking)
    if not (monotone and shrinking):
        raise ExperimentError(f"large-cap ratios are not monotone with shrinking increments: "
                              f"{[(r.d, r.b, round(r.ratio, 4)) for r in rows]}")
    return result


def _orders(spacings: List[float], errors: List[float], floor: float) -> List[Optional[float]]:
    orders: List[Optional[float]] = [None]
    for k in range(1, len(errors)):
        if errors[k] > floor and errors[k - 1] > floor:
            orders.append(float(np.log(errors[k - 1] / errors[k]) / np.log(spacings[k - 1] / spacings[k])))
        else:
            orders.append(None)
    return orders


def convergence_study(cfg: ExperimentConfig) -> List[ConvergenceRow]:
    """
    Errors against closed forms over cfg.convergence_spacings: centre torsion of the
    unit square (series), of the unit disk (reproduced to solver accuracy), the
    area enclosed by the boundary cuts of the unit disk and the nonlinear disk solution at cap 1 (sup norm
    against the radial profile).
    """
    spacings = cfg.convergence_spacings
    floor = 100.0 * cfg.tol
    rows: List[ConvergenceRow] = []

    def add(case: str, values: List[float], errors: List[float], error_floor: float = floor):
        for h, value, error, order in zip(spacings, values, errors, _orders(spacings, errors, error_floor)):
            rows.append(ConvergenceRow(case=case, h=h, value=value, error=error, order=order))

    square, disk = Rectangle(width=1.0, height=1.0, label=ShapeKind.SQUARE), Disk(radius=1.0)
    exact_square = square_torsion_center(1.0)
    radial = solve_radial(2, 1.0, 1.0, n=cfg.radial_nodes)

    sq_values, disk_values, areas, nonlinear = [], [], [], []
    for h in spacings:
        mask = build_mask(square, h)
        u, _ = solve_linear_drift(mask, VectorField.zeros(mask), tol=cfg.tol)
        sq_values.append(u.node_value(0.0, 0.0))
        mask = build_mask(disk, h)
        u, _ = solve_linear_drift(mask, VectorField.zeros(mask), tol=cfg.tol)
        disk_values.append(u.node_value(0.0, 0.0))
        areas.append(mask.enclosed_area())
        v, _ = solve_nonlinear(mask, 1.0, tol=cfg.tol)
        X, Y = mask.coords
        sel = mask.interior
        nonlinear.append(float(np.max(np.abs(v.values[sel] - radial.u_at(np.hypot(X[sel], Y[sel]))))))

    add("square-torsion-center", sq_values, [abs(v - exact_square) for v in sq_values])
    add("disk-torsion-center", disk_values, [abs(v - 0.25) for v in disk_values])
    add("disk-area", areas, [abs(a - np.pi) for a in areas], error_floor=0.0)
    add("disk-nonlinear-cap1", nonlinear, nonlinear)
    for row in rows:
        logger.info("convergence %s h=%g: error %.3e order %s", row.case, row.h, row.error, row.order)
    return rows
