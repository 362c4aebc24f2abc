"""
Command-line entry point: python -m src.cli <command> [options]
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np
from pydantic import ValidationError

from .config_loader import PresetLoader, load_config
from .constants import COMPARISON_COLUMNS, PolicyKind, ShapeKind
from .errors import ExperimentError, NltorsionError
from .experiments import (cap_key, convergence_study, large_b_trend, run_shape_comparison,
                          verify_differential_inequalities, verify_lemma1, verify_level_set_induction)
from .functionals import evaluate, level_set_perimeter, level_set_segments, superlevel_restrict
from .geometry import Annulus, Disk, Domain2D, Ellipse, Rectangle, Stadium, build_mask, family_member
from .montecarlo import DriftPolicy, simulate_exit
from .pde2d import optimal_drift_of, solve_nonlinear
from .pydantic_models import ExperimentConfig
from .radial import solve_radial, verify_lemma4
from .utils.outputs import write_contours, write_csv, write_dat, write_json
from .utils.summary_template import write_summary
from .utils.validation import validate_choice

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def setup_logging(level=logging.INFO):
    """Attach one stream handler to the package logger"""
    package = logging.getLogger('src')
    if not package.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        package.addHandler(handler)
    package.setLevel(level)


def banner(title: str, lines: List[str]):
    print("=" * 60)
    print(title)
    print("=" * 60)
    for line in lines:
        print(line)
    print("=" * 60)


def _add_shape_arguments(parser: argparse.ArgumentParser):
    parser.add_argument('--shape', default=ShapeKind.DISK, help=f"One of: {', '.join(ShapeKind.all())}")
    parser.add_argument('--area', type=float, default=None,
                        help='Build the equal-area family member of this area instead of explicit sizes')
    parser.add_argument('--radius', type=float, default=1.0, help='Disk radius')
    parser.add_argument('--a', type=float, default=None, help='Ellipse semi-axis along x')
    parser.add_argument('--b', type=float, default=None, help='Ellipse semi-axis along y')
    parser.add_argument('--width', type=float, default=None, help='Rectangle width')
    parser.add_argument('--height', type=float, default=None, help='Rectangle height')
    parser.add_argument('--side', type=float, default=None, help='Square side')
    parser.add_argument('--r0', type=float, default=None, help='Annulus inner radius')
    parser.add_argument('--r1', type=float, default=None, help='Annulus outer radius')
    parser.add_argument('--r', type=float, default=None, help='Stadium cap radius')
    parser.add_argument('--length', type=float, default=None, help='Stadium straight length')


def shape_from_args(args) -> Domain2D:
    """
    Build the domain named by --shape from explicit sizes or from --area.

    Raises:
        ValueError: unknown shape or missing size arguments
    """
    validate_choice("shape", args.shape, ShapeKind.all())
    if args.area is not None:
        return family_member(args.shape, args.area)

    def need(*names):
        missing = [f"--{n}" for n in names if getattr(args, n) is None]
        if missing:
            raise ValueError(f"--shape {args.shape} requires {' '.join(missing)}")

    if args.shape == ShapeKind.DISK:
        return Disk(radius=args.radius)
    if args.shape == ShapeKind.ELLIPSE:
        need('a', 'b')
        return Ellipse(a=args.a, b=args.b)
    if args.shape == ShapeKind.RECTANGLE:
        need('width', 'height')
        return Rectangle(width=args.width, height=args.height)
    if args.shape == ShapeKind.SQUARE:
        need('side')
        return Rectangle(width=args.side, height=args.side, label=ShapeKind.SQUARE)
    if args.shape == ShapeKind.ANNULUS:
        need('r0', 'r1')
        return Annulus(r0=args.r0, r1=args.r1)
    need('r', 'length')
    return Stadium(r=args.r, length=args.length)


def resolve_config(args) -> ExperimentConfig:
    """--config file, else --preset from configs/, else defaults; --output-dir overrides"""
    if args.config:
        cfg = load_config(args.config)
    elif args.preset:
        loader = PresetLoader()
        cfg = loader.get_preset(args.preset)
        if cfg is None:
            raise ValueError(f"Unknown preset {args.preset!r}. Available: {', '.join(loader.get_preset_ids())}")
    else:
        cfg = ExperimentConfig()
    if getattr(args, 'output_dir', None):
        cfg = cfg.model_copy(update={'output_dir': args.output_dir})
    return cfg


def cmd_solve_radial(args) -> int:
    solution = solve_radial(args.dim, args.b, args.radius, n=args.nodes)
    rows = zip(solution.r.tolist(), solution.g.tolist(), solution.w.tolist())
    path = write_csv(args.out, ['r', 'g', 'w'], rows)
    print(f"u(0) = {solution.u0:.10g}   flux = {solution.flux:.10g}   ODE residual = {solution.ode_residual():.2e}")
    print(f"Profile written to {path}")
    return 0


def cmd_solve2d(args) -> int:
    domain = shape_from_args(args)
    mask = build_mask(domain, args.h)
    u, report = solve_nonlinear(mask, args.cap, tol=args.tol, initial=args.initial)
    functionals = evaluate(u, args.cap)
    path = write_csv(args.out, ['x', 'y', 'u'], u.to_rows())
    payload = {**report.model_dump(), **functionals.model_dump()}

    if args.eps is not None:
        eps = args.eps * u.max if args.eps_relative else args.eps
        sub, shifted = superlevel_restrict(u, eps)
        eps_path = Path(args.out).with_name(Path(args.out).stem + '_eps.csv')
        write_csv(eps_path, ['x', 'y', 'u'], shifted.to_rows())
        payload['superlevel'] = {'eps': eps, 'nodes': sub.count, 'area': sub.area,
                                 **evaluate(shifted, args.cap).model_dump()}
        print(f"Superlevel field written to {eps_path}")

    if args.report:
        write_json(args.report, payload)
        print(f"Report written to {args.report}")
    print(f"{domain.name}: u_max = {functionals.u_max:.8g}, grad_l1 = {functionals.grad_l1:.8g}, "
          f"flux = {functionals.flux:.8g} ({report.policy_sweeps} sweeps, residual {report.residual:.2e})")
    print(f"Field written to {path}")
    return 0


def cmd_simulate(args) -> int:
    domain = shape_from_args(args)
    validate_choice("policy", args.policy, PolicyKind.all())
    if args.policy == PolicyKind.ZERO:
        policy = DriftPolicy.zero()
    elif args.policy == PolicyKind.RADIAL_INWARD:
        policy = DriftPolicy.radial_inward(args.cap)
    else:
        mask = build_mask(domain, args.h)
        u, _ = solve_nonlinear(mask, args.cap, tol=args.tol)
        policy = DriftPolicy.interpolated(optimal_drift_of(u, args.cap))
    x0 = [float(v) for v in args.x0.split(',')]
    estimate = simulate_exit(domain, policy, x0, args.dt, args.paths, args.seed, workers=args.workers,
                             max_time=args.max_time)
    write_json(args.out, estimate.model_dump(include={'mean', 'stderr', 'n_paths', 'dt', 'seed'}))
    print(f"E[tau] = {estimate.mean:.6f} +- {estimate.stderr:.6f} ({estimate.n_paths} paths)")
    print(f"Estimate written to {args.out}")
    return 0


def cmd_compare_shapes(args) -> int:
    cfg = resolve_config(args)
    out = Path(cfg.output_dir)
    banner("Equal-area shape comparison", [f"Config: {cfg.name}", f"Output: {out}"])
    table = run_shape_comparison(cfg)
    header = ['shape', 'cap', 'h', 'volume', 'perimeter', 'isoperimetric_ratio', *COMPARISON_COLUMNS,
              'flux_boundary', 'hopf_ratio']
    rows = [[r.shape, r.cap, r.h, r.volume, r.perimeter, r.isoperimetric_ratio,
             *[r.report.column(c) for c in COMPARISON_COLUMNS], r.report.flux_boundary, r.report.hopf_ratio]
            for r in table.rows]
    write_csv(out / 'comparison.csv', header, rows)
    write_json(out / 'comparison.json', table)
    write_summary(out / 'comparison.md', 'comparison.md.j2', config=cfg, table=table,
                  columns=list(COMPARISON_COLUMNS), cap_key=cap_key)
    failed = [(key, col) for key, cols in table.disk_is_max.items() for col, ok in cols.items() if ok is False]
    print(f"Results written to {out}")
    if failed:
        raise ExperimentError(f"disk is not the maximiser for {failed}")
    return 0


def cmd_verify_lemmas(args) -> int:
    cfg = resolve_config(args)
    out = Path(cfg.output_dir)
    banner("Verification of the comparison and derivative bounds", [f"Config: {cfg.name}", f"Output: {out}"])

    lemma1 = verify_lemma1(cfg)
    lemma4 = [{'d': d, 'b': b, 'defect': verify_lemma4(d, b, cfg.ball_volumes)}
              for d in cfg.ball_dims for b in cfg.ball_caps]
    inequalities = verify_differential_inequalities(cfg)
    trend = large_b_trend(cfg)

    groups = {}
    for row in inequalities:
        key = (row.family, row.b, row.quantity)
        groups.setdefault(key, []).append(row)
    summary = [{'family': f, 'b': b, 'quantity': q, 'margin': min(r.margin for r in rs),
                'defect': max(r.defect for r in rs), 'holds': all(r.holds for r in rs)}
               for (f, b, q), rs in groups.items()]

    write_json(out / 'lemma1.json', lemma1)
    write_json(out / 'lemma4.json', lemma4)
    write_csv(out / 'inequalities.csv',
              ['family', 'd', 'b', 'c', 'quantity', 'lhs', 'rhs', 'defect', 'margin', 'holds', 'own_perimeter_rhs'],
              [[r.family, r.d, r.b, r.c, r.quantity, r.lhs, r.rhs, r.defect, r.margin, r.holds,
                r.own_perimeter_rhs] for r in inequalities])
    write_json(out / 'trend.json', trend)
    for d in cfg.trend_dims:
        write_dat(out / f'trend_d{d}.dat', ('b', 'ratio'),
                  [(row.b, row.ratio) for row in trend.rows if row.d == d])
    write_summary(out / 'lemmas.md', 'lemmas.md.j2', config=cfg, lemma1=lemma1, lemma4=lemma4,
                  inequalities=summary, trend=trend)
    print(f"Results written to {out}")
    return 0


def cmd_levelsets(args) -> int:
    cfg = resolve_config(args)
    out = Path(cfg.output_dir)
    banner("Superlevel sets and contours", [f"Config: {cfg.name}", f"Output: {out}"])
    rows = verify_level_set_induction(cfg)

    contour_files = []
    for kind in cfg.induction_shapes:
        mask = build_mask(family_member(kind, cfg.area), cfg.induction_spacing)
        u, _ = solve_nonlinear(mask, cfg.induction_cap, tol=cfg.tol)
        for fraction in [0.0, *cfg.induction_fractions]:
            level = fraction * u.max
            path = write_contours(out / f'contour_{kind}_{fraction:g}.dat', level_set_segments(u, level), level)
            contour_files.append(path.name)
        levels = np.linspace(0.0, u.max, 101)
        write_dat(out / f'perimeter_{kind}.dat', ('t', 'perimeter'),
                  [(t, level_set_perimeter(u, t)) for t in levels],
                  comment=f"{kind} cap {cfg.induction_cap:g} h {cfg.induction_spacing:g}")

    write_json(out / 'levelsets.json', rows)
    write_summary(out / 'levelsets.md', 'levelsets.md.j2', config=cfg, rows=rows, contour_files=contour_files)
    print(f"Results written to {out}")
    return 0


def cmd_convergence(args) -> int:
    cfg = resolve_config(args)
    out = Path(cfg.output_dir)
    banner("Grid convergence", [f"Config: {cfg.name}", f"Output: {out}"])
    rows = convergence_study(cfg)
    write_csv(out / 'convergence.csv', ['case', 'h', 'value', 'error', 'order'],
              [[r.case, r.h, r.value, r.error, r.order] for r in rows])
    for case in dict.fromkeys(r.case for r in rows):
        write_dat(out / f'convergence_{case}.dat', ('h', 'error'), [(r.h, r.error) for r in rows if r.case == case])
    write_summary(out / 'convergence.md', 'convergence.md.j2', config=cfg, rows=rows)
    print(f"Results written to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='nltorsion',
                                     description='Exit times of trapped drift-diffusions and their isoperimetric bounds')
    parser.add_argument('--verbose', action='store_true', help='Log solver progress (DEBUG)')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('solve-radial', help='Radial solution on a ball')
    p.add_argument('--dim', type=int, default=2, help='Dimension d (default: 2)')
    p.add_argument('--b', type=float, default=1.0, help='Drift cap (default: 1.0)')
    p.add_argument('--radius', type=float, default=1.0, help='Ball radius (default: 1.0)')
    p.add_argument('--nodes', type=int, default=4096, help='Radial intervals (default: 4096)')
    p.add_argument('--out', default='radial.csv', help='CSV with columns r,g,w')
    p.set_defaults(handler=cmd_solve_radial)

    p = sub.add_parser('solve2d', help='Nonlinear grid solve on one shape')
    _add_shape_arguments(p)
    p.add_argument('--h', type=float, default=1 / 64, help='Grid spacing')
    p.add_argument('--cap', type=float, default=1.0, help='Drift cap B')
    p.add_argument('--tol', type=float, default=1e-8, help='Residual tolerance')
    p.add_argument('--initial', default='torsion', choices=['torsion', 'zero'], help='Policy iteration start')
    p.add_argument('--eps', type=float, default=None, help='Also extract the superlevel set {u > eps}')
    p.add_argument('--eps-relative', action='store_true', help='Read --eps as a fraction of u_max')
    p.add_argument('--out', default='u.csv', help='CSV with columns x,y,u')
    p.add_argument('--report', default=None, help='JSON report path')
    p.set_defaults(handler=cmd_solve2d)

    p = sub.add_parser('simulate', help='Monte Carlo exit time')
    _add_shape_arguments(p)
    p.add_argument('--policy', default=PolicyKind.ZERO, help=f"One of: {', '.join(PolicyKind.all())}")
    p.add_argument('--cap', type=float, default=0.0, help='Drift cap B')
    p.add_argument('--x0', default='0,0', help='Start point "x,y"')
    p.add_argument('--dt', type=float, default=1e-4, help='Time step')
    p.add_argument('--paths', type=int, default=10000, help='Number of paths')
    p.add_argument('--seed', type=int, default=42, help='Master seed')
    p.add_argument('--workers', type=int, default=1, help='Worker processes')
    p.add_argument('--max-time', type=float, default=None,
                   help='Simulated-time budget per path (default: 20 inradius^2, stretched by the drift)')
    p.add_argument('--h', type=float, default=1 / 64, help='Grid spacing of the interpolated policy')
    p.add_argument('--tol', type=float, default=1e-8, help='Residual tolerance of the interpolated policy')
    p.add_argument('--out', default='mc.json', help='JSON output')
    p.set_defaults(handler=cmd_simulate)

    for name, handler, text in [
        ('compare-shapes', cmd_compare_shapes, 'Equal-area family comparison'),
        ('verify-lemmas', cmd_verify_lemmas, 'Comparison, flux identity, derivative bounds, large-cap trend'),
        ('levelsets', cmd_levelsets, 'Superlevel re-solves and contour output'),
        ('convergence', cmd_convergence, 'Grid convergence study'),
    ]:
        p = sub.add_parser(name, help=text)
        p.add_argument('--config', default=None, help='YAML file with ExperimentConfig keys')
        p.add_argument('--preset', default=None, help='Preset name from configs/ (default, quick)')
        p.add_argument('--output-dir', default=None, help='Override the configured output directory')
        p.set_defaults(handler=handler)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(logging.DEBUG if args.verbose else logging.INFO)
    try:
        return args.handler(args)
    except NltorsionError as e:
        print(f"Error: {e.detail}", file=sys.stderr)
        return 1
    except (ValidationError, ValueError, FileNotFoundError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return 1


if __name__ == '__main__':
    sys.exit(main())
