"""
Hecke pair toolkit - command line
Results go to stdout, logs to stderr. Exit codes: 0 success, 2 budget
exhausted (partial results flagged), 3 invalid input.
"""

import csv
import io
import json
import logging
import sys
from functools import wraps
from pathlib import Path

import click
import numpy as np

from ball_cache import get_ball_cache
from config import config
from coset_space import (
    double_cosets_up_to,
    enumerate_orbits,
    expand_ball,
    growth,
    growth_of_table,
    is_hecke_at,
    to_dot,
)
from errors import (
    BudgetExceededError,
    CosetOutOfRangeError,
    FamilyMismatchError,
    InvalidInputError,
    NotConditionallyNegativeError,
)
from group_core import format_word, parse_word
from hecke_algebra import get_hecke_algebra
from kernels import (
    BiinvariantFunction,
    Violation,
    biinvariant_to_kernel,
    is_cnd,
    is_positive_type,
    kernel_from_csv,
    kernel_to_biinvariant,
    kernel_to_csv,
    schoenberg_embed,
)
from pair_config import load_pair_config
from schlichting import core_probe, known_completion, level_action, level_report, restriction_check

logger = logging.getLogger(__name__)

EXIT_BUDGET = 2
EXIT_INVALID = 3
PARTIAL_MARKER = '# PARTIAL'


def _emit_json(data) -> None:
    click.echo(json.dumps(data, indent=2, ensure_ascii=False))


def _handle_errors(command):
    """Map library errors to exit codes"""
    @wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except BudgetExceededError as e:
            logger.warning(f"⚠️ {e}")
            click.echo(f"{PARTIAL_MARKER}: {e} (completed radius {e.completed_radius})")
            sys.exit(EXIT_BUDGET)
        except NotConditionallyNegativeError as e:
            logger.error(f"❌ {e}")
            _emit_json({'error': str(e), 'witness': e.witness})
            sys.exit(EXIT_INVALID)
        except (InvalidInputError, FamilyMismatchError, CosetOutOfRangeError) as e:
            logger.error(f"❌ {e}")
            click.echo(f"error: {e}", err=True)
            sys.exit(EXIT_INVALID)
    return wrapper


def _load(config_path: str):
    pair = load_pair_config(config_path)
    return pair, pair.presentation()


def _table(pair, pres, radius: int):
    return get_ball_cache().metric_ball(pair, pres, radius)


@click.group()
@click.option('--verbose', is_flag=True, help='Log progress to stderr')
def cli(verbose):
    """Hecke pairs: coset spaces, completions, Hecke algebras and kernels"""
    level = logging.INFO if verbose else getattr(logging, config.LOG_LEVEL, logging.WARNING)
    logging.basicConfig(stream=sys.stderr, level=level, format='%(levelname)s %(name)s: %(message)s', force=True)


# ============ PAIR ============

@cli.group()
def pair():
    """Pair configuration commands"""


@pair.command('describe')
@click.argument('config_path')
@_handle_errors
def pair_describe(config_path):
    """Family, generators and known completion"""
    pair_cfg, pres = _load(config_path)
    _emit_json({
        'family': pair_cfg.family,
        'pair': pres.family.describe(),
        'generators': pres.generator_names(),
        'subgroup_generators': [
            {'name': g.label, 'word': format_word(pres, g.word)} for g in pres.lambda_generators
        ],
        'known_completion': known_completion(pres),
        'config_hash': pair_cfg.config_hash(),
    })


# ============ COSET SPACE ============

@cli.command()
@click.argument('config_path')
@click.option('--radius', '-r', type=int, required=True)
@click.option('--dot', 'dot_path', default=None, help='Write the Schreier graph in DOT')
@_handle_errors
def ball(config_path, radius, dot_path):
    """Growth profile of metric balls up to the radius"""
    pair_cfg, pres = _load(config_path)
    try:
        table = _table(pair_cfg, pres, radius)
    except BudgetExceededError:
        try:
            growth(pres, radius)
        except BudgetExceededError as e:
            if e.partial is not None:
                click.echo(e.partial.to_csv(), nl=False)
            raise
        raise
    click.echo(growth_of_table(table).to_csv(), nl=False)
    if dot_path:
        Path(dot_path).write_text(to_dot(table), encoding='utf-8')


@cli.command()
@click.argument('config_path')
@click.option('--radius', '-r', type=int, required=True)
@_handle_errors
def orbits(config_path, radius):
    """Double cosets in the ball: representative word, degree, depth"""
    pair_cfg, pres = _load(config_path)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator='\n')
    try:
        table = _table(pair_cfg, pres, radius)
    except BudgetExceededError:
        # report the orbits that did finish, seeded from the layer ball
        layer_table = expand_ball(pres, radius)
        scan = enumerate_orbits(layer_table, radius)
        writer.writerow(['seed', 'size'])
        for seed, size in scan.orbits:
            writer.writerow([format_word(pres, layer_table.words[seed]), size])
        for seed in scan.escaped:
            writer.writerow([format_word(pres, layer_table.words[seed]), f">{scan.budget}"])
        click.echo(out.getvalue(), nl=False)
        raise
    writer.writerow(['index', 'rep', 'degree', 'depth'])
    for dc in double_cosets_up_to(table, radius):
        writer.writerow([dc.index, format_word(pres, dc.word), dc.degree, dc.depth])
    click.echo(out.getvalue(), nl=False)


@cli.command()
@click.argument('config_path')
@click.option('--radius', '-r', type=int, required=True)
@click.option('--budget', type=int, default=None, help='Orbit budget (defaults to max_orbit)')
@_handle_errors
def verdict(config_path, radius, budget):
    """Bounded-geometry verdict up to the radius"""
    _, pres = _load(config_path)
    result = is_hecke_at(pres, radius, budget)
    if not result.confirmed:
        click.echo(f"{PARTIAL_MARKER}: an orbit exceeded the budget of {result.budget} cosets")
    _emit_json({'verdict': str(result), 'kind': result.kind, 'radius': result.radius, 'budget': result.budget})
    if not result.confirmed:
        sys.exit(EXIT_BUDGET)


# ============ HECKE ALGEBRA ============

@cli.command()
@click.argument('config_path')
@click.option('--radius', '-r', type=int, required=True)
@click.option('--mul', nargs=2, default=None, help='Two words whose double cosets are multiplied')
@click.option('--table', 'full_table', is_flag=True, help='Structure constants as CSV')
@_handle_errors
def hecke(config_path, radius, mul, full_table):
    """Structure constants of the Hecke algebra"""
    pair_cfg, pres = _load(config_path)
    algebra = get_hecke_algebra(_table(pair_cfg, pres, radius))
    word = lambda i: format_word(pres, algebra.double_cosets[i].word)
    if mul:
        a = algebra.by_element(parse_word(pres, mul[0]))
        b = algebra.by_element(parse_word(pres, mul[1]))
        product = algebra.convolve(a, b)
        _emit_json({
            'a': word(a.index),
            'b': word(b.index),
            'terms': [{'d': word(d), 'coeff': c} for d, c in product.terms],
        })
    elif full_table:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator='\n')
        writer.writerow(['a', 'b', 'd', 'coeff'])
        for a, b, d, c in algebra.structure_table():
            writer.writerow([word(a), word(b), word(d), c])
        click.echo(out.getvalue(), nl=False)
    else:
        raise InvalidInputError("hecke needs --mul A B or --table")


# ============ SCHLICHTING ============

@cli.command()
@click.argument('config_path')
@click.option('--level', '-l', type=int, required=True)
@click.option('--probe', multiple=True, help='Word of a subgroup element to probe (repeatable)')
@_handle_errors
def schlichting(config_path, level, probe):
    """Finite-level completion report, or core probing with --probe"""
    pair_cfg, pres = _load(config_path)
    table = _table(pair_cfg, pres, level)
    if probe:
        elements = [parse_word(pres, w) for w in probe]
        click.echo(core_probe(table, elements, level, labels=list(probe)).to_json())
        return
    levels = [level_action(table, r) for r in range(level + 1)]
    _emit_json({
        'known_completion': known_completion(pres),
        'levels': [level_report(flc) for flc in levels],
        'restriction_ok': all(restriction_check(hi, lo) for lo, hi in zip(levels, levels[1:])),
    })


# ============ KERNELS ============

@cli.group()
def kernel():
    """Kernel certificates and transfer"""


@kernel.command('check')
@click.argument('matrix_path')
@click.option('--cnd', 'mode', flag_value='cnd', default=True, help='Conditionally negative type')
@click.option('--pos', 'mode', flag_value='positive', help='Positive type')
@click.option('--tol', type=float, default=None)
@_handle_errors
def kernel_check(matrix_path, mode, tol):
    """Verdict JSON with a witness vector on failure"""
    k = kernel_from_csv(matrix_path, tol)
    result = is_cnd(k) if mode == 'cnd' else is_positive_type(k)
    _emit_json(result.to_dict())


@kernel.command('embed')
@click.argument('matrix_path')
@click.option('--base', type=int, default=0)
@click.option('--tol', type=float, default=None)
@_handle_errors
def kernel_embed(matrix_path, base, tol):
    """Schoenberg coordinates as CSV, one row per point"""
    k = kernel_from_csv(matrix_path, tol)
    coords = schoenberg_embed(k, base)
    out = io.StringIO()
    np.savetxt(out, coords, delimiter=',', fmt='%.17g')
    click.echo(out.getvalue(), nl=False)


@kernel.command('transfer')
@click.argument('config_path')
@click.option('--radius', '-r', type=int, required=True, help='Radius of the table the points refer to')
@click.option('--to-psi', 'matrix_path', default=None, help='Kernel CSV to turn into a bi-invariant function')
@click.option('--to-kernel', 'psi_path', default=None, help='Bi-invariant function JSON to turn into a kernel')
@click.option('--out', 'out_path', default=None, help='Write the kernel CSV (and sidecar) here')
@_handle_errors
def kernel_transfer(config_path, radius, matrix_path, psi_path, out_path):
    """Kernel <-> bi-invariant function"""
    if (matrix_path is None) == (psi_path is None):
        raise InvalidInputError("give exactly one of --to-psi and --to-kernel")
    pair_cfg, pres = _load(config_path)
    table = _table(pair_cfg, pres, radius)
    if matrix_path:
        result = kernel_to_biinvariant(kernel_from_csv(matrix_path), table)
        if isinstance(result, Violation):
            _emit_json({'violation': {
                'double_coset': format_word(pres, double_coset_word(table, result.orbit)),
                'first': list(result.first),
                'second': list(result.second),
                'values': list(result.values),
            }})
        else:
            click.echo(result.to_json(table))
        return
    try:
        text = Path(psi_path).read_text(encoding='utf-8')
    except OSError as e:
        raise InvalidInputError(f"cannot read {psi_path}: {e}") from e
    psi = BiinvariantFunction.from_json(text, table)
    k = biinvariant_to_kernel(psi, table, tol=pair_cfg.tol)
    if out_path:
        kernel_to_csv(k, out_path)
    else:
        out = io.StringIO()
        np.savetxt(out, k.values, delimiter=',', fmt='%.17g')
        click.echo(out.getvalue(), nl=False)


def double_coset_word(table, orbit: int):
    """Generator word of the min representative of an orbit"""
    members = table.orbits[orbit]
    return table.words[min(members, key=table.sort_key)]


if __name__ == '__main__':
    cli()
