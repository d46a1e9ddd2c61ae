from __future__ import annotations # Enable type annotation to be stored as string
from pathlib import Path
from typing import Any, Callable, Sequence
import argparse
import json
import logging
import sys

import numpy as np

from shg_spectral.errors import SpectralError
from shg_spectral.run_config import RunConfig, load_run_config
from shg_spectral.utils.json_utils import (
    branch_points_to_dict, divisor_from_dict, divisor_to_dict, dumps_exact, format_float, monodromy_record,
    potential_from_dict, read_json, save_config_file)
from shg_spectral.utils.utils import create_date_savedir


logger = logging.getLogger(__name__)

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2


################
# Output helpers
################

def _write_json(path: Path, data: Any) -> Path:
    path.write_text(dumps_exact(data))
    logger.info(f"Wrote {path}")
    return path

def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> Path:
    def _cell(value: Any) -> str:
        if value is None:
            return ''
        if isinstance(value, (float, np.floating)):
            return format_float(float(value))
        return str(value)

    lines = [','.join(header)] + [','.join(_cell(v) for v in row) for row in rows]
    path.write_text('\n'.join(lines) + '\n')
    logger.info(f"Wrote {path}")
    return path

def _load_potential(args: argparse.Namespace):
    # Import here to keep the CLI start-up light
    from shg_spectral.potential import vacuum

    if args.potential is None:
        logger.info("No potential given, using the vacuum")
        return vacuum()
    return potential_from_dict(read_json(Path(args.potential)))

def _K(args: argparse.Namespace, config: RunConfig) -> int:
    return config.K if args.K is None else args.K


################
# Commands
################

def cmd_vacuum_table(K: int) -> list[tuple[int, float, int, float | None]]:
    """Rows (k, λ_{k,0}, μ_{k,0}, asymptote) for |k| <= K; k = 0 has no asymptote."""
    from shg_spectral.monodromy import lambda_k0, lambda_k0_asymptote, mu_k0

    if K < 0:
        raise ValueError(f"K must be >= 0, got {K}")
    return [(k, lambda_k0(k), mu_k0(k), None if k == 0 else lambda_k0_asymptote(k)) for k in range(-K, K + 1)]

def _run_vacuum_table(args: argparse.Namespace, config: RunConfig, out: Path) -> list[Path]:
    rows = cmd_vacuum_table(_K(args, config))
    return [_write_csv(out.joinpath('vacuum_table.csv'), ('k', 'lambda_k0', 'mu_k0', 'asymptote'), rows)]

def _run_monodromy(args: argparse.Namespace, config: RunConfig, out: Path) -> list[Path]:
    from shg_spectral.monodromy import monodromy_batch

    p = _load_potential(args)
    if not args.lam:
        raise ValueError("monodromy needs at least one --lambda RE IM")
    lams = [complex(re, im) for re, im in args.lam]
    records = [monodromy_record(lam, M) for lam, M in zip(lams, monodromy_batch(p, lams, config))]
    return [_write_json(out.joinpath('monodromy.json'), records)]

def _run_divisor(args: argparse.Namespace, config: RunConfig, out: Path) -> list[Path]:
    from shg_spectral.spectral.divisor import find_divisor

    D = find_divisor(_load_potential(args), _K(args, config), config)
    return [_write_json(out.joinpath('divisor.json'), divisor_to_dict(D))]

def _run_branch_points(args: argparse.Namespace, config: RunConfig, out: Path) -> list[Path]:
    from shg_spectral.spectral.divisor import find_branch_points

    B = find_branch_points(_load_potential(args), _K(args, config), config)
    return [_write_json(out.joinpath('branch_points.json'), branch_points_to_dict(B))]

def _run_asymptotics(args: argparse.Namespace, config: RunConfig, out: Path) -> list[Path]:
    from shg_spectral.asymptotics import thm_M_report, thm_spectral_report, write_tables
    from shg_spectral.spectral.divisor import annulus_counts, find_branch_points, find_divisor

    p = _load_potential(args)
    K = _K(args, config)
    counts = annulus_counts(p, K, config)
    D = find_divisor(p, K, config, counts)
    B = find_branch_points(p, K, config, counts)
    written = write_tables(thm_M_report(p, K, args.s, config), out, 'monodromy_')
    written += write_tables(thm_spectral_report(D, B), out, 'spectral_')
    return written

def _run_reconstruct(args: argparse.Namespace, config: RunConfig, out: Path) -> list[Path]:
    from shg_spectral.reconstruct import default_test_grid, reconstruct_monodromy

    if args.divisor is None:
        raise ValueError("reconstruct needs --divisor <divisor.json>")
    D = divisor_from_dict(read_json(Path(args.divisor)))
    R = reconstruct_monodromy(D, config)
    lams = default_test_grid(args.points, config.seed, max(D.K, 1))
    M = R.evaluate(lams)
    rows = [(lam.real, lam.imag, *(x for z in (m[0, 0], m[0, 1], m[1, 0], m[1, 1]) for x in (z.real, z.imag))) for lam, m in zip(lams, M)]
    header = ('lambda_re', 'lambda_im', 'a_re', 'a_im', 'b_re', 'b_im', 'c_re', 'c_im', 'd_re', 'd_im')
    return [_write_csv(out.joinpath('reconstruct.csv'), header, rows),
            _write_json(out.joinpath('reconstruct.json'), {'K': D.K, 'tau': [R.tau.real, R.tau.imag], 'tail_terms': R.tail_terms})]

def _run_roundtrip(args: argparse.Namespace, config: RunConfig, out: Path) -> list[Path]:
    from shg_spectral.reconstruct import default_test_grid, roundtrip_report

    K = _K(args, config)
    report = roundtrip_report(_load_potential(args), K, default_test_grid(args.points, config.seed), config)
    summary = {'K': report.K, 'n_points': report.n_points, 'tau': [report.tau.real, report.tau.imag], 'tau_error': report.tau_error,
               'errors': report.errors, 'max_error': report.max_error, 'trace_error': report.trace_error,
               'determinant_error': report.determinant_error}
    return [_write_json(out.joinpath('roundtrip.json'), summary)]

def _run_finite_type(args: argparse.Namespace, config: RunConfig, out: Path) -> list[Path]:
    from shg_spectral.finitetype import finite_type_project, finite_type_project_auto

    if args.divisor is None:
        raise ValueError("finite-type needs --divisor <divisor.json>")
    D = divisor_from_dict(read_json(Path(args.divisor)))
    if args.N is None:
        result = finite_type_project_auto(D, args.tol, args.max_iter, config)
    else:
        result = finite_type_project(D, args.N, args.tol, args.max_iter, config)
    rows = [(int(entry['iteration']), entry['defect'], entry['contraction']) for entry in result.log]
    summary = {'N': result.N, 'K': result.K, 'iterations': result.iterations, 'contraction': result.contraction,
               'defect': result.defect, 'distance': result.distance,
               'eta_star': None if result.eta_star is None else [result.eta_star.real, result.eta_star.imag],
               'divisor': divisor_to_dict(result.D_star)}
    return [_write_json(out.joinpath('finite_type.json'), summary),
            _write_csv(out.joinpath('finite_type_log.csv'), ('iteration', 'defect', 'contraction'), rows)]

def _run_abel_flow(args: argparse.Namespace, config: RunConfig, out: Path) -> list[Path]:
    from shg_spectral.jacobi.flows import flow_x_check, flow_y_check

    p = _load_potential(args)
    K = _K(args, config)
    if args.direction == 'x':
        report = flow_x_check(p, args.gaps, args.samples, K, config=config)
    else:
        report = flow_y_check(p, args.gaps, args.samples, K, args.y_max, config=config)
    return [_write_csv(out.joinpath(f'abel_flow_{args.direction}.csv'), (args.direction, 'n', 'phi_re', 'phi_im'), report.to_rows()),
            _write_json(out.joinpath(f'abel_flow_{args.direction}.json'), report.summary())]

def _run_decay(args: argparse.Namespace, config: RunConfig, out: Path) -> list[Path]:
    from shg_spectral.asymptotics import exp_decay_report, write_tables
    from shg_spectral.spectral.divisor import annulus_counts, find_branch_points, find_divisor

    p = _load_potential(args)
    K = _K(args, config)
    counts = annulus_counts(p, K, config)
    report = exp_decay_report(find_divisor(p, K, config, counts), find_branch_points(p, K, config, counts), args.y0_hint, args.n_min)
    return write_tables(report, out)


COMMANDS: dict[str, tuple[Callable[[argparse.Namespace, RunConfig, Path], list[Path]], str]] = {
    'vacuum-table': (_run_vacuum_table, "Vacuum nodes λ_{k,0}, μ_{k,0} and their asymptote."),
    'monodromy': (_run_monodromy, "Monodromy records at the given λ."),
    'divisor': (_run_divisor, "Spectral divisor of a potential."),
    'branch-points': (_run_branch_points, "Branch points of the spectral curve."),
    'asymptotics': (_run_asymptotics, "Weighted deviation norms of M and of the spectral data from the vacuum."),
    'reconstruct': (_run_reconstruct, "Monodromy reconstructed from a divisor, sampled on a test grid."),
    'roundtrip': (_run_roundtrip, "Reconstruction residuals against direct integration."),
    'finite-type': (_run_finite_type, "Finite-type projection of a divisor."),
    'abel-flow': (_run_abel_flow, "Abel coordinates along the x- or y-flow."),
    'decay': (_run_decay, "Exponential decay fits of the spectral data."),
}


################
# Parser and entry point
################

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='shg-spectral', description="Direct and inverse spectral transform of periodic sinh-Gordon Cauchy data.")
    parser.add_argument('--config', type=Path, default=None, help="JSON file with RunConfig fields.")
    parser.add_argument('--out', type=Path, default=None, help="Output directory.")
    parser.add_argument('--threads', type=int, default=None, help="Worker threads.")
    parser.add_argument('--deterministic', action='store_true', default=None, help="Byte-stable output, undated output folder.")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument('--verbose', '-v', action='store_true', help="Debug logging.")
    verbosity.add_argument('--quiet', '-q', action='store_true', help="Warnings and errors only.")

    sub = parser.add_subparsers(dest='command', required=True)
    for name, (_, help_text) in COMMANDS.items():
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument('--K', type=int, default=None, help="Truncation radius, config K by default.")
        if name in ('monodromy', 'divisor', 'branch-points', 'asymptotics', 'roundtrip', 'abel-flow', 'decay'):
            cmd.add_argument('--potential', type=str, default=None, help="Potential JSON {J, u, uy}; the vacuum if omitted.")
        if name in ('reconstruct', 'finite-type'):
            cmd.add_argument('--divisor', type=str, default=None, help="Divisor JSON {K, entries}.")
        if name == 'monodromy':
            cmd.add_argument('--lambda', dest='lam', type=float, nargs=2, action='append', metavar=('RE', 'IM'), help="Spectral parameter, repeatable.")
        if name == 'asymptotics':
            cmd.add_argument('--s', type=float, default=1.0, help="Exponent of the bounding weights.")
        if name in ('reconstruct', 'roundtrip'):
            cmd.add_argument('--points', type=int, default=20, help="Size of the test grid.")
        if name == 'finite-type':
            cmd.add_argument('--N', type=int, default=None, help="Kept radius; doubled from max(4, K/4) if omitted.")
            cmd.add_argument('--tol', type=float, default=1e-10)
            cmd.add_argument('--max-iter', type=int, default=30)
        if name == 'abel-flow':
            cmd.add_argument('--direction', choices=('x', 'y'), default='x')
            cmd.add_argument('--gaps', type=int, default=1, help="Number of open gaps of the model.")
            cmd.add_argument('--samples', type=int, default=33)
            cmd.add_argument('--y-max', type=float, default=0.05)
        if name == 'decay':
            cmd.add_argument('--y0-hint', type=float, default=None)
            cmd.add_argument('--n-min', type=int, default=4)
    return parser

def _configure_logging(args: argparse.Namespace, config: RunConfig) -> None:
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else getattr(logging, str(config.log_level).upper(), logging.INFO)
    # Third-party loggers stay at WARNING
    logging.basicConfig(level=logging.WARNING, format='%(asctime)s %(levelname)s %(name)s: %(message)s', force=True)
    logging.getLogger('shg_spectral').setLevel(level)

def main(argv: Sequence[str] | None = None) -> int:
    """
    Command-line entry point.

    Returns:
        int: 0 on success, 1 on input errors, 2 on numerical failures (a failure.json report is written).
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_run_config(args.config, threads=args.threads, deterministic=args.deterministic)
    except (ValueError, TypeError, KeyError, json.JSONDecodeError, FileNotFoundError) as err:
        logging.basicConfig(level=logging.ERROR)
        logger.error(f"Invalid configuration: {err}")
        return EXIT_INPUT
    _configure_logging(args, config)

    parent = args.out or Path(config.out_dir or 'shg_spectral_out')
    out = create_date_savedir(parent, args.command, dated=not config.deterministic)
    save_config_file(out.joinpath('run_config.json'), config.to_dict())
    run, _ = COMMANDS[args.command]
    try:
        written = run(args, config, out)
    except SpectralError as err:
        logger.error(f"{args.command} failed: {err}")
        _write_json(out.joinpath('failure.json'), {'command': args.command, 'error': type(err).__name__, 'message': str(err), 'report': err.report})
        return EXIT_NUMERICAL
    except (ValueError, TypeError, KeyError, json.JSONDecodeError, FileNotFoundError) as err:
        logger.error(f"{args.command}: invalid input: {err}")
        return EXIT_INPUT
    logger.info(f"{args.command} done, {len(written)} file(s) in {out}")
    return EXIT_OK

if __name__ == '__main__':
    sys.exit(main())
