"""
Command dispatch for the slopeforge CLI.

Every command turns an instance (or a profile, for `gen` and `verify`) into
a CommandReport.  Reports open with the effective precision profile and the
truncation flags, and render either as text lines or as one JSON document.
"""

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional

import colorlog

from ..config import load_config
from ..errors import InvalidInput, ResidueUnsolvable, SlopeforgeError
from ..linalg.laurent_factor import LaurentPolyMatrix, factor_elementary, laurent_det_unit
from ..linalg.series_matrix import SeriesMatrix
from ..linalg.sigma_linear import (
    DiagonalData,
    SigmaEquationSolver,
    genspec_diagonalize,
    newton_polygon_generic,
)
from ..rings.coeff_ring import embed_coeff, embed_extension, make_spec
from ..rings.series_ring import INF, PrecisionProfile, format_series, format_valuation
from ..services.descent_service import DescentService
from ..services.fnabla_service import FNablaModule, FNablaService
from .generator import KINDS, generate
from .instance_format import InstanceFile, parse_instance, serialize_instance, serialize_matrix_rows
from .verify_suite import run_verify_suite

logger = logging.getLogger(__name__)

COMMANDS = ('np', 'diag', 'descend', 'factor', 'solve', 'check-nabla', 'verify', 'gen')

# flag name -> ring header key
_HEADER_OVERRIDES = {'pi_prec': 'N', 'unram': 'd', 'ram': 'e', 'exp_denom': 'h'}


@dataclass
class CommandReport:
    command: str
    profile: Optional[PrecisionProfile] = None
    lines: List[str] = field(default_factory=list)
    data: Dict[str, Any] = field(default_factory=dict)
    flags: Dict[str, bool] = field(default_factory=lambda: {'truncated': False, 'precision_loss': False})
    exit_code: int = 0
    raw_text: Optional[str] = None

    def absorb_flags(self, *sources) -> None:
        for source in sources:
            for key, value in source.flags().items():
                self.flags[key] = self.flags.get(key, False) or value

    def to_dict(self) -> Dict[str, Any]:
        return {
            'command': self.command,
            'profile': self.profile.describe() if self.profile else None,
            'flags': self.flags,
            'exit_code': self.exit_code,
            'result': self.data
        }

    def render(self, as_json: bool = False) -> str:
        if as_json:
            return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"
        if self.raw_text is not None:
            return self.raw_text
        out = []
        if self.profile is not None:
            out.append(f"profile {self.profile.describe()}")
        out.append("flags " + " ".join(f"{k}={str(v).lower()}" for k, v in sorted(self.flags.items())))
        out.extend(self.lines)
        return "\n".join(out) + "\n"


def setup_logging(level: str, fmt: str) -> None:
    """One colorlog handler on standard error; reports stay on standard output."""
    handler = colorlog.StreamHandler(sys.stderr)
    handler.setFormatter(colorlog.ColoredFormatter(fmt))
    logging.basicConfig(level=getattr(logging, level.upper(), logging.WARNING), handlers=[handler], force=True)


def apply_overrides(text: str, options: argparse.Namespace) -> str:
    """Rewrite the ring header with the precision flags given on the command line."""
    overrides: Dict[str, str] = {}
    for flag, key in _HEADER_OVERRIDES.items():
        value = getattr(options, flag, None)
        if value is not None:
            overrides[key] = str(value)
    if getattr(options, 'window', None):
        overrides['window'] = f"{options.window[0]},{options.window[1]}"
    if not overrides:
        return text
    lines = text.splitlines()
    for index, line in enumerate(lines):
        stripped = line.strip()
        if not stripped.startswith('ring'):
            continue
        tokens = stripped.split()[1:]
        fields = dict(token.split('=', 1) for token in tokens if '=' in token)
        if 'd' in overrides and overrides['d'] != fields.get('d', '1'):
            fields.pop('phi', None)
        fields.update(overrides)
        lines[index] = "ring " + " ".join(f"{k}={v}" for k, v in fields.items())
        break
    return "\n".join(lines) + "\n"


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text}")


def _matrix_lines(name: str, m: SeriesMatrix) -> List[str]:
    return [f"matrix {name} {m.rows}x{m.cols}"] + serialize_matrix_rows(m)


def _matrix_data(m: SeriesMatrix) -> List[List[str]]:
    return [[format_series(entry) for entry in row] for row in m.entries]


class CommandRunner:
    """Runs one command against one instance with config and flag overrides applied."""

    def __init__(self, options: argparse.Namespace, config: Optional[Dict[str, Any]] = None):
        self.options = options
        self.config = config or load_config(getattr(options, 'config', None))
        self.logger = logging.getLogger(__name__)
        self.handlers: Dict[str, Callable[[Optional[InstanceFile], CommandReport], None]] = {
            'np': self.newton_polygon,
            'diag': self.diagonalize,
            'descend': self.descend,
            'factor': self.factor,
            'solve': self.solve,
            'check-nabla': self.check_nabla,
            'verify': self.verify,
            'gen': self.gen
        }

    # -- option helpers -----------------------------------------------

    def _option(self, name: str, section: str, key: str):
        value = getattr(self.options, name, None)
        return value if value is not None else self.config[section][key]

    def _flag(self, name: str, default: Any) -> Any:
        value = getattr(self.options, name, None)
        return value if value is not None else default

    @property
    def workers(self) -> int:
        return int(self._option('workers', 'execution', 'workers'))

    def flag_profile(self) -> PrecisionProfile:
        """Profile for commands without an instance: flags over config defaults."""
        precision = self.config['precision']
        p = self._flag('p', 2)
        d = self._option('unram', 'precision', 'd')
        e = self._option('ram', 'precision', 'e')
        n = self._option('pi_prec', 'precision', 'N')
        h = self._option('exp_denom', 'precision', 'h')
        window = self._flag('window', [Fraction(x) for x in precision['window']])
        return PrecisionProfile(make_spec(p, d, e, n), h, window[0], window[1])

    # -- entry points -------------------------------------------------

    def load(self, text: str) -> InstanceFile:
        return parse_instance(apply_overrides(text, self.options))

    def run(self, command: str, instance: Optional[InstanceFile] = None) -> CommandReport:
        if command not in self.handlers:
            report = CommandReport(command, exit_code=2)
            report.lines.append(f"error InvalidInput unknown command {command}")
            return report
        report = CommandReport(command, instance.profile if instance else None)
        try:
            self.handlers[command](instance, report)
        except SlopeforgeError as e:
            self.logger.error(f"Error running {command}: {e}")
            report.exit_code = e.exit_code
            report.data['error'] = e.to_dict()
            report.lines.append(f"error {type(e).__name__} {e}")
            report.lines.extend(f"detail {k}={v}" for k, v in sorted(e.to_dict()['details'].items()))
            report.raw_text = None
        return report

    def run_text(self, command: str, text: Optional[str]) -> CommandReport:
        """Parse then run; parse failures become exit-code-2 reports."""
        try:
            instance = self.load(text) if text is not None else None
        except SlopeforgeError as e:
            self.logger.error(f"Error parsing instance: {e}")
            report = CommandReport(command, exit_code=e.exit_code)
            report.data['error'] = e.to_dict()
            report.lines.append(f"error {type(e).__name__} {e}")
            return report
        return self.run(command, instance)

    # -- commands -----------------------------------------------------

    def _require(self, instance: Optional[InstanceFile], *roles: str) -> SeriesMatrix:
        if instance is None:
            raise InvalidInput("this command needs an instance file")
        for role in roles:
            found = instance.first(role)
            if found is not None:
                return found
        raise InvalidInput(f"instance has no matrix with role {' or '.join(roles)}")

    def newton_polygon(self, instance: Optional[InstanceFile], report: CommandReport) -> None:
        a = self._require(instance, 'frobenius', 'generic')
        n_max = self._option('n_max', 'algorithms', 'n_max')
        if n_max is None and instance.param('n_max') is not None:
            n_max = int(instance.param('n_max'))
        polygon = newton_polygon_generic(a, n_max)
        report.absorb_flags(a)
        report.lines.extend(polygon.lines())
        report.data['newton_polygon'] = polygon.to_dict()

    def _diagonal(self, instance: InstanceFile, rank: int) -> DiagonalData:
        d = instance.first('diagonal')
        if d is None:
            return DiagonalData.from_matrix(SeriesMatrix.identity(instance.profile, rank))
        return DiagonalData.from_matrix(d)

    def diagonalize(self, instance: Optional[InstanceFile], report: CommandReport) -> None:
        b = self._require(instance, 'frobenius')
        d = self._diagonal(instance, b.rows)
        max_iter = int(self._option('max_iter', 'algorithms', 'diag_max_iter'))
        try:
            u, result = genspec_diagonalize(b, d, max_iter, self.workers)
        except ResidueUnsolvable as e:
            if not self.config['algorithms'].get('retry_unramified', True):
                raise
            self.logger.warning(f"Residue equation unsolvable over d={b.profile.ring.d} ({e}); "
                                f"retrying over d={2 * b.profile.ring.d}")
            big, image = embed_extension(b.profile.ring, 2)
            profile = b.profile.with_ring(big)
            b = b.embed(profile, image)
            d = DiagonalData([embed_coeff(c, big, image) for c in d.entries])
            u, result = genspec_diagonalize(b, d, max_iter, self.workers)
            report.profile = profile
            report.lines.append(f"extension d={big.d}")
            report.data['extension'] = big.describe()
        report.absorb_flags(u, result.residual)
        value = result.residual_valuation
        residual = f">={report.profile.cap}" if value == INF else format_valuation(value)
        report.lines.append(f"iterations {result.iterations}")
        report.lines.append(f"converged {'yes' if result.converged else 'no'}")
        if result.reason:
            report.lines.append(f"reason {result.reason}")
        report.lines.extend(_matrix_lines('U', u))
        report.lines.append(f"residual {residual}")
        report.data['U'] = _matrix_data(u)
        report.data['diagonalization'] = result.to_dict()
        report.data['residual'] = residual

    def descend(self, instance: Optional[InstanceFile], report: CommandReport) -> None:
        a = self._require(instance, 'frobenius')
        d = self._diagonal(instance, a.rows)
        r = getattr(self.options, 'r', None)
        if r is None:
            r = instance.param('r')
        if r is None:
            raise InvalidInput("descend needs r (param r=... or --r)")
        max_iter = getattr(self.options, 'max_iter', None)
        if max_iter is None:
            max_iter = instance.param('max_iter', self.config['algorithms']['max_iter'])
        algorithms = self.config['algorithms']
        service = DescentService(max_iter=int(max_iter), retry_h=algorithms['retry_h'],
                                 retry_unramified=algorithms.get('retry_unramified', True))
        s_mat, result = service.descend(a, d, Fraction(r), u=instance.get('U'))
        report.profile = result.profile
        report.absorb_flags(s_mat, result.residual)
        final = result.residual.minus_identity().gauss_val(Fraction(r))
        report.lines.append(f"s={result.s} eps={result.eps}")
        report.lines.extend(f"retry {retry}" for retry in result.retries)
        report.lines.extend(result.lines())
        report.lines.append(f"steps {len(result.log)}")
        report.lines.append(f"final val_r {format_valuation(final)}")
        report.lines.extend(_matrix_lines('S', s_mat))
        report.lines.extend(_matrix_lines('R', result.residual))
        violations = len(result.envelope.violations) if result.envelope else 0
        report.lines.append(f"envelope violations {violations}")
        report.data['descent'] = result.to_dict()
        report.data['S'] = _matrix_data(s_mat)
        report.data['R'] = _matrix_data(result.residual)
        report.data['final_val_r'] = format_valuation(final)

    def factor(self, instance: Optional[InstanceFile], report: CommandReport) -> None:
        m = self._require(instance, 'generic', 'frobenius')
        lmat = LaurentPolyMatrix.from_series_matrix(m)
        unit = laurent_det_unit(lmat)
        if not unit:
            raise InvalidInput(f"determinant {unit.determinant} is not a unit of F_q[u, u^-1]")
        c, power = unit
        field_ = lmat.field
        moves = factor_elementary(lmat)
        report.absorb_flags(m)
        report.lines.append(f"det {field_.format(c)}*u^({power})")
        report.lines.append(f"moves {len(moves)}")
        report.lines.extend(move.serialize(field_) for move in moves)
        report.data['determinant'] = {'c': field_.format(c), 'power': power}
        report.data['moves'] = [move.serialize(field_) for move in moves]

    def solve(self, instance: Optional[InstanceFile], report: CommandReport) -> None:
        if instance is None:
            raise InvalidInput("solve needs an instance file")
        lam_m, v_m = instance.get('lambda'), instance.get('v')
        if lam_m is None or v_m is None or (lam_m.rows, lam_m.cols, v_m.rows, v_m.cols) != (1, 1, 1, 1):
            raise InvalidInput("solve needs 1x1 matrices named lambda and v")
        lam, v = lam_m[0, 0], v_m[0, 0]
        try:
            result = SigmaEquationSolver(instance.profile).solve(lam, v)
        except ResidueUnsolvable as e:
            if not self.config['algorithms'].get('retry_unramified', True):
                raise
            self.logger.warning(f"Residue equation unsolvable ({e}); retrying over a degree-2 extension")
            big, image = embed_extension(instance.profile.ring, 2)
            profile = instance.profile.with_ring(big)
            lam = lam_m.embed(profile, image)[0, 0]
            v = v_m.embed(profile, image)[0, 0]
            result = SigmaEquationSolver(profile).solve(lam, v)
            report.profile = profile
            report.lines.append(f"extension d={big.d}")
        report.absorb_flags(result.solution)
        report.lines.append(f"regime {result.regime}")
        report.lines.append(f"w {format_series(result.solution)}")
        report.lines.append(f"tail {format_series(result.tail)}")
        report.data.update({
            'regime': result.regime,
            'w': format_series(result.solution),
            'tail': format_series(result.tail),
            'exact': result.exact
        })

    def check_nabla(self, instance: Optional[InstanceFile], report: CommandReport) -> None:
        a = self._require(instance, 'frobenius')
        g = self._require(instance, 'connection')
        service = FNablaService()
        residual = service.check_compatibility(FNablaModule(a, g))
        verdict, certificate = service.verify_unipotent(a, g)
        report.absorb_flags(residual)
        value = residual.gauss_val(0)
        report.lines.append(f"residual_valuation {format_valuation(value)}")
        report.lines.append(f"compatible {'yes' if residual.is_zero else 'no'}")
        report.lines.append(f"unipotent {'yes' if verdict else 'no'}")
        report.lines.append("blocks " + " ".join(f"{lo}..{hi}" for lo, hi in certificate.blocks))
        report.lines.extend(f"reason {reason}" for reason in certificate.reasons)
        report.data.update({
            'residual_valuation': format_valuation(value),
            'compatible': residual.is_zero,
            'unipotent': verdict,
            'certificate': certificate.to_dict()
        })

    def verify(self, instance: Optional[InstanceFile], report: CommandReport) -> None:
        profile = instance.profile if instance else self.flag_profile()
        report.profile = profile
        seed = self._flag('seed', 0)
        trials = self._flag('trials', 10)
        table = run_verify_suite(profile, seed, trials)
        report.lines.extend(table.to_string(index=False).splitlines())
        report.data['checks'] = table.to_dict(orient='records')
        if (table['status'] == 'FAIL').any():
            report.exit_code = 1

    def gen(self, instance: Optional[InstanceFile], report: CommandReport) -> None:
        profile = self.flag_profile()
        kind = self._flag('kind', 'prop4')
        generated = generate(kind, seed=self._flag('seed', 0),
                             rank=self._flag('rank', 2),
                             delta=self._flag('delta', 1),
                             p=profile.ring.p, d=profile.ring.d, e=profile.ring.e, N=profile.ring.N,
                             h=profile.h, window=[profile.e_min, profile.e_max])
        text = serialize_instance(generated)
        report.profile = generated.profile
        report.raw_text = text
        report.data['instance'] = text


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--pi-prec', dest='pi_prec', type=int, help='coefficient precision N')
    common.add_argument('--unram', type=int, help='unramified degree d')
    common.add_argument('--ram', type=int, help='ramification index e')
    common.add_argument('--exp-denom', dest='exp_denom', type=int, help='exponent denominators up to p^h')
    common.add_argument('--window', nargs=2, type=_fraction, metavar=('A', 'B'), help='exponent window')
    common.add_argument('--r', type=_fraction, help='radius parameter r for descend')
    common.add_argument('--max-iter', dest='max_iter', type=int)
    common.add_argument('--n-max', dest='n_max', type=int, help='longest twisted product for np')
    common.add_argument('--seed', type=int)
    common.add_argument('--json', action='store_true', help='emit a JSON report')
    common.add_argument('--workers', type=int, help='threads for per-cell work and concurrent instances')
    common.add_argument('--log-level', dest='log_level')
    common.add_argument('--config', help='YAML config file')

    parser = argparse.ArgumentParser(prog='slopeforge',
                                     description='Frobenius-semilinear algebra over truncated p-adic series rings')
    sub = parser.add_subparsers(dest='command', required=True)
    for name in ('np', 'diag', 'descend', 'factor', 'solve', 'check-nabla'):
        cmd = sub.add_parser(name, parents=[common])
        cmd.add_argument('instances', nargs='+', help="instance files ('-' for standard input)")
    verify = sub.add_parser('verify', parents=[common])
    verify.add_argument('instances', nargs='*')
    verify.add_argument('--p', type=int, default=2)
    verify.add_argument('--trials', type=int, default=10)
    gen = sub.add_parser('gen', parents=[common])
    gen.add_argument('--kind', choices=KINDS, default='prop4')
    gen.add_argument('--rank', type=int, default=2)
    gen.add_argument('--delta', type=int, default=1)
    gen.add_argument('--p', type=int, default=2)
    gen.set_defaults(instances=[])
    return parser
