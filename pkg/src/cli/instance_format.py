"""
Line-oriented instance files.

    ring p=<p> d=<d> phi=<c0,...> e=<e> N=<N> h=<h> window=<a>,<b>
    param r=<q> s=<q> max_iter=<k> seed=<s>
    matrix <name> <role> <rows>x<cols>
    [ <series> ; <series> ; ... ]

Series literals are terms joined by ' + '; a term is a '*'-product of
pi^k, an integer, a parenthesised polynomial in w, and t^(a/b).
"""

import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from ..errors import ParseError, ProfileViolation, SlopeforgeError
from ..linalg.series_matrix import SeriesMatrix
from ..rings.coeff_ring import Coeff, make_spec
from ..rings.series_ring import PrecisionProfile, Series, format_series

logger = logging.getLogger(__name__)

ROLES = ('frobenius', 'diagonal', 'connection', 'generic')
PARAM_KEYS = ('r', 's', 'max_iter', 'seed', 'n_max')

_MATRIX_RE = re.compile(r'^matrix\s+(\S+)\s+(\S+)\s+(\d+)x(\d+)$')


@dataclass
class NamedMatrix:
    name: str
    role: str
    matrix: SeriesMatrix


@dataclass
class InstanceFile:
    profile: PrecisionProfile
    matrices: Dict[str, NamedMatrix] = field(default_factory=dict)
    params: Dict[str, Fraction] = field(default_factory=dict)

    def add(self, name: str, role: str, matrix: SeriesMatrix) -> None:
        if name in self.matrices:
            raise ProfileViolation(f"duplicate matrix name {name}")
        self.matrices[name] = NamedMatrix(name, role, matrix)

    def get(self, name: str) -> Optional[SeriesMatrix]:
        entry = self.matrices.get(name)
        return entry.matrix if entry else None

    def by_role(self, role: str) -> List[NamedMatrix]:
        return [m for m in self.matrices.values() if m.role == role]

    def first(self, role: str) -> Optional[SeriesMatrix]:
        found = self.by_role(role)
        return found[0].matrix if found else None

    def param(self, key: str, default=None):
        return self.params.get(key, default)


# -- series literals --------------------------------------------------

def _split_top(text: str, sep: str) -> List[Tuple[str, int]]:
    """Split on sep outside parentheses; returns (piece, offset) pairs."""
    pieces, depth, start = [], 0, 0
    for index, char in enumerate(text):
        if char == '(':
            depth += 1
        elif char == ')':
            depth -= 1
        elif char == sep and depth == 0:
            pieces.append((text[start:index], start))
            start = index + 1
    pieces.append((text[start:], start))
    return pieces


def _parse_w_poly(text: str, d: int, line: int, column: int) -> List[int]:
    digits = [0] * d
    body = text.replace(' ', '').replace('-', '+-')
    for part in body.split('+'):
        if not part:
            continue
        match = re.fullmatch(r'(-?\d*)\*?(w(?:\^(\d+))?)?', part)
        if not match or (not match.group(1) and not match.group(2)) or match.group(1) == '-' and not match.group(2):
            raise ParseError(f"bad coefficient monomial '{part}'", line, column)
        raw = match.group(1)
        c = 1 if raw in ('', '+') else (-1 if raw == '-' else int(raw))
        power = 0 if not match.group(2) else int(match.group(3) or 1)
        if power >= d:
            raise ParseError(f"w^{power} exceeds degree {d - 1}", line, column)
        digits[power] += c
    return digits


def parse_series(text: str, profile: PrecisionProfile, line: int = 0, column: int = 0) -> Series:
    ring = profile.ring
    text = text.strip()
    if text == '0':
        return Series.zero(profile)
    result = Series.zero(profile)
    for term, offset in _split_top(text, '+'):
        term_col = column + offset
        term = term.strip()
        if not term:
            raise ParseError("empty term", line, term_col)
        coeff = Coeff.one(ring)
        exponent = Fraction(0)
        for factor, _ in _split_top(term, '*'):
            factor = factor.strip()
            if factor.startswith('pi'):
                match = re.fullmatch(r'pi(?:\^(-?\d+))?', factor)
                if not match:
                    raise ParseError(f"bad π factor '{factor}'", line, term_col)
                coeff = coeff * Coeff.pi(ring, int(match.group(1) or 1))
            elif factor.startswith('t'):
                match = re.fullmatch(r't(?:\^\((-?\d+(?:/\d+)?)\)|\^(-?\d+))?', factor)
                if not match:
                    raise ParseError(f"bad t factor '{factor}'", line, term_col)
                exponent += Fraction(match.group(1) or match.group(2) or 1)
            elif factor.startswith('(') and factor.endswith(')'):
                coeff = coeff * Coeff.from_digits(ring, _parse_w_poly(factor[1:-1], ring.d, line, term_col))
            elif re.fullmatch(r'-?\d+', factor):
                coeff = coeff * Coeff.from_int(ring, int(factor))
            elif re.fullmatch(r'w(\^\d+)?', factor):
                coeff = coeff * Coeff.from_digits(ring, _parse_w_poly(factor, ring.d, line, term_col))
            else:
                raise ParseError(f"unrecognised factor '{factor}'", line, term_col)
        if not profile.admits(exponent):
            raise ProfileViolation(f"exponent {exponent} needs a denominator beyond p^{profile.h} "
                                   f"(line {line}, column {term_col})")
        if not profile.in_window(exponent):
            raise ProfileViolation(f"exponent {exponent} outside window [{profile.e_min}, {profile.e_max}] "
                                   f"(line {line}, column {term_col})")
        result = result + Series.monomial(profile, coeff, exponent)
    return result


def _parse_fraction(text: str, line: int, column: int) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"bad number '{text}'", line, column)


def _parse_header(text: str, line: int) -> PrecisionProfile:
    fields: Dict[str, str] = {}
    for token in text.split()[1:]:
        if '=' not in token:
            raise ParseError(f"expected key=value, got '{token}'", line, text.find(token) + 1)
        key, value = token.split('=', 1)
        fields[key] = value
    try:
        p = int(fields['p'])
        d = int(fields.get('d', 1))
        e = int(fields.get('e', 1))
        n = int(fields.get('N', 8))
        h = int(fields.get('h', 0))
        phi = [int(c) for c in fields['phi'].split(',')] if 'phi' in fields else None
        window = fields.get('window', '-8,8').split(',')
        if len(window) != 2:
            raise ParseError("window needs two bounds", line, text.find('window') + 1)
        e_min = _parse_fraction(window[0], line, text.find('window') + 1)
        e_max = _parse_fraction(window[1], line, text.find('window') + 1)
        cap = _parse_fraction(fields['cap'], line, text.find('cap') + 1) if 'cap' in fields else None
    except KeyError as e:
        raise ParseError(f"ring header is missing {e}", line, 1)
    except ValueError as e:
        raise ParseError(f"bad ring header value: {e}", line, 1)
    ring = make_spec(p, d, e, n, phi)
    return PrecisionProfile(ring, h, e_min, e_max, cap)


def parse_instance(text: str) -> InstanceFile:
    lines = text.splitlines()
    instance: Optional[InstanceFile] = None
    index = 0
    while index < len(lines):
        lineno = index + 1
        raw = lines[index]
        stripped = raw.strip()
        index += 1
        if not stripped or stripped.startswith('#'):
            continue
        keyword = stripped.split()[0]
        if keyword == 'ring':
            if instance is not None:
                raise ParseError("second ring header", lineno, 1)
            try:
                instance = InstanceFile(_parse_header(stripped, lineno))
            except ParseError:
                raise
            except SlopeforgeError as e:
                raise ParseError(str(e), lineno, 1)
            continue
        if instance is None:
            raise ParseError("instance must start with a ring header", lineno, 1)
        if keyword == 'param':
            for token in stripped.split()[1:]:
                key, _, value = token.partition('=')
                if key not in PARAM_KEYS or not value:
                    raise ParseError(f"unknown parameter '{token}'", lineno, raw.find(token) + 1)
                instance.params[key] = _parse_fraction(value, lineno, raw.find(token) + 1)
            continue
        if keyword == 'matrix':
            match = _MATRIX_RE.match(stripped)
            if not match:
                raise ParseError("expected 'matrix <name> <role> <rows>x<cols>'", lineno, 1)
            name, role, rows, cols = match.group(1), match.group(2), int(match.group(3)), int(match.group(4))
            if role not in ROLES:
                raise ParseError(f"unknown role '{role}'", lineno, raw.find(role) + 1)
            entries = []
            for _ in range(rows):
                if index >= len(lines):
                    raise ParseError(f"matrix {name} ends early", index + 1, 1)
                row_line = lines[index]
                row_no = index + 1
                index += 1
                body = row_line.strip()
                if not (body.startswith('[') and body.endswith(']')):
                    raise ParseError("row must be enclosed in [ ]", row_no, 1)
                start = row_line.find('[') + 1
                cells = _split_top(row_line[start:row_line.rfind(']')], ';')
                if len(cells) != cols:
                    raise ParseError(f"expected {cols} entries, found {len(cells)}", row_no, 1)
                entries.append([parse_series(cell, instance.profile, row_no, start + offset + 1)
                                 for cell, offset in cells])
            instance.add(name, role, SeriesMatrix(instance.profile, entries))
            continue
        raise ParseError(f"unknown directive '{keyword}'", lineno, 1)
    if instance is None:
        raise ParseError("empty instance", 1, 1)
    logger.debug(f"parsed instance with matrices {list(instance.matrices)}")
    return instance


# -- serialization ----------------------------------------------------

def _format_fraction(value: Fraction) -> str:
    return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"


def serialize_header(profile: PrecisionProfile) -> str:
    ring = profile.ring
    phi = ",".join(str(c) for c in ring.phi)
    text = (f"ring p={ring.p} d={ring.d} phi={phi} e={ring.e} N={ring.N} h={profile.h} "
            f"window={_format_fraction(profile.e_min)},{_format_fraction(profile.e_max)}")
    if profile.cap != ring.N:
        text += f" cap={_format_fraction(profile.cap)}"
    return text


def serialize_matrix_rows(m: SeriesMatrix) -> List[str]:
    return ["[ " + " ; ".join(format_series(entry) for entry in row) + " ]" for row in m.entries]


def serialize_instance(instance: InstanceFile) -> str:
    out = [serialize_header(instance.profile)]
    if instance.params:
        out.append("param " + " ".join(f"{k}={_format_fraction(v)}" for k, v in instance.params.items()))
    for named in instance.matrices.values():
        m = named.matrix
        out.append(f"matrix {named.name} {named.role} {m.rows}x{m.cols}")
        out.extend(serialize_matrix_rows(m))
    return "\n".join(out) + "\n"
