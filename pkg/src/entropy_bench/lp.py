"""Reader and writer for a subset of the CPLEX LP format covering quadratic programs.

Supported grammar (keywords are case-insensitive, whitespace is free-form,
``\\`` starts a comment that runs to the end of the line)::

    file        := sense objective [constraints] [bounds] "End"
    sense       := Minimize | Minimum | Min | Maximize | Maximum | Max
    objective   := [label ":"] expr
    constraints := ("Subject To" | "Such That" | "st" | "s.t.") {[label ":"] linexpr cmp number}
    bounds      := "Bounds" {bound}
    bound       := value cmp name [cmp value] | name cmp value | name "free"
    expr        := term {("+" | "-") term}
    term        := [number] name | number | "[" qterm {("+" | "-") qterm} "]" "/" "2"
    qterm       := [number] name "^" "2" | [number] name "*" name
    cmp         := "<=" | "=<" | "<" | ">=" | "=>" | ">" | "="
    value       := [sign] number | [sign] ("inf" | "infinity")

The bracketed quadratic block is halved, so ``[ x^2 + 2 x * y ]/2`` means
``0.5 x^2 + x y``. Variables default to bounds ``[0, +inf)``. Integer
sections (General, Binary, Semi-continuous, SOS) and quadratic constraints
raise :class:`UnsupportedConstruct`.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .continuous import Box, PolynomialObjective


class LpSyntaxError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {message}")
        self.line = line
        self.col = col


class UnsupportedConstruct(ValueError):
    def __init__(self, construct: str, line: int | None = None, col: int | None = None):
        where = f" at line {line}, column {col}" if line is not None else ""
        super().__init__(f"unsupported LP construct: {construct}{where}")
        self.construct = construct
        self.line = line
        self.col = col


@dataclass
class LinearConstraint:
    name: str
    coefs: dict[str, float]
    sense: str  # "<=", ">=" or "="
    rhs: float


@dataclass
class QpInstance:
    """Quadratic program. ``quadratic`` maps an ordered variable pair to its real coefficient."""

    sense: str = "min"
    objective_name: str = "obj"
    variables: list[str] = field(default_factory=list)
    linear: dict[str, float] = field(default_factory=dict)
    quadratic: dict[tuple[str, str], float] = field(default_factory=dict)
    constant: float = 0.0
    constraints: list[LinearConstraint] = field(default_factory=list)
    bounds: dict[str, tuple[float, float]] = field(default_factory=dict)

    def declare(self, name: str) -> None:
        if name not in self.bounds:
            self.variables.append(name)
            self.bounds[name] = (0.0, math.inf)

    def pair(self, a: str, b: str) -> tuple[str, str]:
        ia, ib = self.variables.index(a), self.variables.index(b)
        return (a, b) if ia <= ib else (b, a)

    def validate(self) -> None:
        known = set(self.variables)
        used = set(self.linear) | {v for p in self.quadratic for v in p}
        for c in self.constraints:
            used |= set(c.coefs)
        missing = used - known
        if missing:
            raise ValueError(f"undeclared variables: {sorted(missing)}")
        for v, (lo, hi) in self.bounds.items():
            if lo > hi:
                raise ValueError(f"bounds for {v} have lower {lo} > upper {hi}")


_KEYWORDS_SENSE = {"minimize": "min", "minimum": "min", "min": "min",
                   "maximize": "max", "maximum": "max", "max": "max"}
_UNSUPPORTED = {"general": "General section", "generals": "General section", "gen": "General section",
                "binary": "Binary section", "binaries": "Binary section", "bin": "Binary section",
                "semi-continuous": "Semi-continuous section", "semis": "Semi-continuous section",
                "semi": "Semi-continuous section", "sos": "SOS section"}
_CMP = {"<=": "<=", "=<": "<=", "<": "<=", ">=": ">=", "=>": ">=", ">": ">=", "=": "="}

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
    |(?P<nl>\n)
    |(?P<comment>\\[^\n]*)
    |(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
    |(?P<cmp><=|=<|>=|=>|<|>|=)
    |(?P<op>[-+*^/:\[\]])
    |(?P<name>[A-Za-z_!"\#$%&(),.;?@'{}~|][A-Za-z0-9_!"\#$%&(),.;?@'{}~|]*)
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int

    @property
    def low(self) -> str:
        return self.text.lower()


def _tokenize(text: str) -> list[_Tok]:
    toks, pos, line, col0 = [], 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise LpSyntaxError(f"unexpected character {text[pos]!r}", line, pos - col0 + 1)
        kind = m.lastgroup
        if kind == "nl":
            line, col0 = line + 1, m.end()
        elif kind not in ("ws", "comment"):
            toks.append(_Tok(kind, m.group(), line, m.start() - col0 + 1))
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - col0 + 1))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0
        self.inst = QpInstance()

    # -- helpers
    def peek(self, off: int = 0) -> _Tok:
        return self.toks[min(self.i + off, len(self.toks) - 1)]

    def next(self) -> _Tok:
        t = self.peek()
        self.i += 1
        return t

    def fail(self, msg: str, tok: _Tok | None = None):
        tok = tok or self.peek()
        raise LpSyntaxError(msg, tok.line, tok.col)

    def expect(self, kind: str, text: str | None = None) -> _Tok:
        t = self.peek()
        if t.kind != kind or (text is not None and t.text != text):
            self.fail(f"expected {text or kind}, found {t.text or 'end of input'!r}")
        return self.next()

    def section_at(self, off: int = 0) -> str | None:
        """Name of the section keyword starting at the lookahead, if any."""
        t = self.peek(off)
        if t.kind != "name" or self.peek(off + 1).text == ":":
            return None
        low = t.low
        if low in ("subject", "such") and self.peek(off + 1).low in ("to", "that"):
            return "constraints"
        if low in ("st", "s.t.", "st."):
            return "constraints"
        if low in ("bounds", "bound"):
            return "bounds"
        if low == "end":
            return "end"
        if low in _UNSUPPORTED:
            return "unsupported"
        return None

    def skip_section_keyword(self, section: str) -> None:
        t = self.next()
        if section == "constraints" and t.low in ("subject", "such"):
            self.next()

    def number(self) -> float:
        sign = 1.0
        while self.peek().text in ("+", "-"):
            if self.next().text == "-":
                sign = -sign
        t = self.peek()
        if t.kind == "num":
            self.next()
            return sign * float(t.text)
        if t.kind == "name" and t.low in ("inf", "infinity"):
            self.next()
            return sign * math.inf
        self.fail(f"expected a number, found {t.text or 'end of input'!r}")

    def variable(self) -> str:
        t = self.peek()
        if t.kind != "name" or self.section_at() or t.low in ("inf", "infinity"):
            self.fail(f"expected a variable name, found {t.text or 'end of input'!r}")
        self.next()
        self.inst.declare(t.text)
        return t.text

    # -- grammar
    def parse(self) -> QpInstance:
        t = self.peek()
        if t.kind != "name" or t.low not in _KEYWORDS_SENSE:
            self.fail(f"expected Minimize or Maximize, found {t.text or 'end of input'!r}")
        self.next()
        self.inst.sense = _KEYWORDS_SENSE[t.low]
        self.objective()
        while True:
            sec = self.section_at()
            if sec == "constraints":
                self.skip_section_keyword(sec)
                self.constraints()
            elif sec == "bounds":
                self.skip_section_keyword(sec)
                self.bounds()
            elif sec == "end":
                self.next()
                if self.peek().kind != "eof":
                    self.fail("unexpected content after End")
                break
            elif sec == "unsupported":
                t = self.peek()
                raise UnsupportedConstruct(_UNSUPPORTED[t.low], t.line, t.col)
            elif self.peek().kind == "eof":
                self.fail("missing End")
            else:
                self.fail(f"unexpected {self.peek().text!r}")
        self.inst.validate()
        return self.inst

    def label(self, default: str) -> str:
        t = self.peek()
        if t.kind == "name" and self.peek(1).text == ":":
            self.i += 2
            return t.text
        return default

    def objective(self) -> None:
        self.inst.objective_name = self.label("obj")
        first = True
        while not self.section_at() and self.peek().kind != "eof":
            self.objective_term(first)
            first = False

    def sign(self, first: bool) -> float:
        t = self.peek()
        if t.text in ("+", "-"):
            self.next()
            return -1.0 if t.text == "-" else 1.0
        if not first:
            self.fail(f"expected '+' or '-', found {t.text!r}")
        return 1.0

    def objective_term(self, first: bool) -> None:
        s = self.sign(first)
        if self.peek().text == "[":
            self.quadratic_block(s)
            return
        coef = s
        if self.peek().kind == "num":
            coef *= float(self.next().text)
            if self.peek().kind != "name" or self.section_at():
                self.inst.constant += coef
                return
        v = self.variable()
        self.inst.linear[v] = self.inst.linear.get(v, 0.0) + coef

    def quadratic_block(self, s: float) -> None:
        self.expect("op", "[")
        acc: dict[tuple[str, str], float] = {}
        first = True
        while self.peek().text != "]":
            if self.peek().kind == "eof":
                self.fail("unterminated quadratic block")
            qs = self.sign(first)
            first = False
            coef = qs * (float(self.next().text) if self.peek().kind == "num" else 1.0)
            a = self.variable()
            if self.peek().text == "^":
                self.next()
                t = self.expect("num")
                if float(t.text) != 2:
                    raise UnsupportedConstruct(f"power {t.text}", t.line, t.col)
                key = (a, a)
            elif self.peek().text == "*":
                self.next()
                key = (a, self.variable())
            else:
                self.fail("expected '^ 2' or '* name' inside a quadratic block")
            acc[key] = acc.get(key, 0.0) + coef
        self.next()
        self.expect("op", "/")
        t = self.expect("num")
        if float(t.text) != 2:
            self.fail("quadratic block must be divided by 2", t)
        for (a, b), c in acc.items():
            key = self.inst.pair(a, b)
            self.inst.quadratic[key] = self.inst.quadratic.get(key, 0.0) + s * c / 2

    def constraints(self) -> None:
        while not self.section_at() and self.peek().kind != "eof":
            name = self.label(f"c{len(self.inst.constraints) + 1}")
            coefs: dict[str, float] = {}
            first = True
            while self.peek().kind != "cmp":
                if self.peek().kind == "eof" or self.section_at():
                    self.fail("constraint is missing a comparison operator")
                s = self.sign(first)
                first = False
                if self.peek().text == "[":
                    t = self.peek()
                    raise UnsupportedConstruct("quadratic constraint", t.line, t.col)
                coef = s * (float(self.next().text) if self.peek().kind == "num" else 1.0)
                v = self.variable()
                coefs[v] = coefs.get(v, 0.0) + coef
            if not coefs:
                self.fail("constraint has no variables")
            cmp = _CMP[self.next().text]
            self.inst.constraints.append(LinearConstraint(name, coefs, cmp, self.number()))

    def bounds(self) -> None:
        while not self.section_at() and self.peek().kind != "eof":
            t = self.peek()
            if t.kind == "name" and t.low not in ("inf", "infinity"):
                v = self.variable()
                lo, hi = self.inst.bounds[v]
                if self.peek().kind == "name" and self.peek().low == "free":
                    self.next()
                    self.inst.bounds[v] = (-math.inf, math.inf)
                    continue
                cmp = _CMP[self.expect("cmp").text]
                val = self.number()
                if cmp == "<=":
                    hi = val
                elif cmp == ">=":
                    lo = val
                else:
                    lo = hi = val
                self.inst.bounds[v] = (lo, hi)
            else:
                left = self.number()
                c1 = _CMP[self.expect("cmp").text]
                v = self.variable()
                lo, hi = self.inst.bounds[v]
                lo, hi = _apply(c1, left, lo, hi, value_on_left=True)
                if self.peek().kind == "cmp":
                    c2 = _CMP[self.next().text]
                    lo, hi = _apply(c2, self.number(), lo, hi, value_on_left=False)
                self.inst.bounds[v] = (lo, hi)
            if self.inst.bounds[v][0] > self.inst.bounds[v][1]:
                self.fail(f"empty bound interval for {v}", t)


def _apply(cmp: str, val: float, lo: float, hi: float, value_on_left: bool) -> tuple[float, float]:
    if cmp == "=":
        return val, val
    # "val <= x" raises the lower bound; "x <= val" lowers the upper bound
    if (cmp == "<=") == value_on_left:
        return val, hi
    return lo, val


def parse_lp(text: str) -> QpInstance:
    return _Parser(text).parse()


def load_lp(path: str | Path) -> QpInstance:
    return parse_lp(Path(path).read_text())


def _num(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(x))


def _linear_expr(terms: list[tuple[float, str]]) -> str:
    parts = []
    for c, name in terms:
        sign = "- " if c < 0 else ("+ " if parts else "")
        parts.append(f"{sign}{_num(abs(c))} {name}")
    return " ".join(parts)


def write_lp(inst: QpInstance) -> str:
    """Normalized LP text; :func:`parse_lp` of the output reproduces ``inst``."""
    order = {v: i for i, v in enumerate(inst.variables)}
    lines = ["Minimize" if inst.sense == "min" else "Maximize"]
    obj = _linear_expr([(inst.linear[v], v) for v in sorted(inst.linear, key=order.get)])
    if inst.quadratic:
        q = []
        for (a, b) in sorted(inst.quadratic, key=lambda p: (order[p[0]], order[p[1]])):
            c = 2 * inst.quadratic[(a, b)]
            body = f"{_num(abs(c))} {a} ^ 2" if a == b else f"{_num(abs(c))} {a} * {b}"
            q.append(("- " if c < 0 else ("+ " if q else "")) + body)
        obj = (obj + " + " if obj else "") + "[ " + " ".join(q) + " ] / 2"
    if inst.constant:
        obj = (obj + " " if obj else "") + ("- " if inst.constant < 0 else "+ ") + _num(abs(inst.constant))
    lines.append(f" {inst.objective_name}: {obj}".rstrip())
    if inst.constraints:
        lines.append("Subject To")
        for c in inst.constraints:
            expr = _linear_expr([(c.coefs[v], v) for v in sorted(c.coefs, key=order.get)])
            lines.append(f" {c.name}: {expr} {c.sense} {_num(c.rhs)}")
    lines.append("Bounds")
    for v in inst.variables:
        lo, hi = inst.bounds[v]
        if lo == -math.inf and hi == math.inf:
            lines.append(f" {v} free")
        elif lo == hi:
            lines.append(f" {v} = {_num(lo)}")
        else:
            lines.append(f" {_num(lo)} <= {v} <= {_num(hi)}")
    lines.append("End")
    return "\n".join(lines) + "\n"


def _box_range(coefs: dict[str, float], bounds: dict[str, tuple[float, float]]) -> tuple[float, float]:
    lo = hi = 0.0
    for v, c in coefs.items():
        a, b = bounds[v]
        lo += min(c * a, c * b) if c else 0.0
        hi += max(c * a, c * b) if c else 0.0
    return lo, hi


def slack_variables(inst: QpInstance) -> list[tuple[str, float, float]]:
    """One ``(name, lower, upper)`` slack per inequality, the upper end implied by the variable box."""
    out = []
    for c in inst.constraints:
        if c.sense == "=":
            continue
        lo, hi = _box_range(c.coefs, inst.bounds)
        top = c.rhs - lo if c.sense == "<=" else hi - c.rhs
        out.append((f"slack_{c.name}", 0.0, max(0.0, top)))
    return out


def qp_to_polynomial(inst: QpInstance, penalty_weight: float) -> PolynomialObjective:
    """Minimization objective plus ``penalty_weight * sum(violation^2)`` as a degree-2 polynomial.

    Variables keep their declaration order. Each inequality ``a.x <= b``
    (or ``>= b``) gets a non-negative slack ``s`` appended after the
    variables and is penalized as the equality ``a.x + s = b`` (or
    ``a.x - s = b``), which keeps the penalty polynomial. Box bounds for all
    coordinates come from :func:`qp_bounds`.
    """
    if penalty_weight <= 0:
        raise ValueError("penalty_weight must be > 0")
    idx = {v: i for i, v in enumerate(inst.variables)}
    slacks = iter(range(len(inst.variables), len(inst.variables) + len(slack_variables(inst))))
    sgn = 1.0 if inst.sense == "min" else -1.0
    terms: dict[tuple[int, ...], float] = {}

    def add(t: tuple[int, ...], c: float) -> None:
        t = tuple(sorted(t))
        terms[t] = terms.get(t, 0.0) + c

    for v, c in inst.linear.items():
        add((idx[v],), sgn * c)
    for (a, b), c in inst.quadratic.items():
        add((idx[a], idx[b]), sgn * c)
    constant = sgn * inst.constant
    for con in inst.constraints:
        row = {idx[v]: c for v, c in con.coefs.items() if c}
        if con.sense != "=":
            row[next(slacks)] = 1.0 if con.sense == "<=" else -1.0
        items = sorted(row.items())
        # w (sum a_i x_i - b)^2 expanded
        for p, (i, ai) in enumerate(items):
            add((i, i), penalty_weight * ai * ai)
            for j, aj in items[p + 1:]:
                add((i, j), 2 * penalty_weight * ai * aj)
            add((i,), -2 * penalty_weight * ai * con.rhs)
        constant += penalty_weight * con.rhs**2
    terms = {t: c for t, c in terms.items() if c != 0.0}
    dim = len(inst.variables) + len(slack_variables(inst))
    return PolynomialObjective(dim, terms, None, constant)


def qp_bounds(inst: QpInstance, infinite_bound: float | None = None) -> Box:
    """Variable then slack bounds; ``infinite_bound`` replaces infinite ends when given."""
    lo = [inst.bounds[v][0] for v in inst.variables] + [s[1] for s in slack_variables(inst)]
    hi = [inst.bounds[v][1] for v in inst.variables] + [s[2] for s in slack_variables(inst)]
    if infinite_bound is not None:
        lo = [max(x, -infinite_bound) for x in lo]
        hi = [min(x, infinite_bound) for x in hi]
    return Box(tuple(lo), tuple(hi))


def is_feasible(inst: QpInstance, x, tol: float = 1e-6) -> bool:
    vals = dict(zip(inst.variables, x))
    for v, (lo, hi) in inst.bounds.items():
        if not lo - tol <= vals[v] <= hi + tol:
            return False
    for c in inst.constraints:
        lhs = sum(a * vals[v] for v, a in c.coefs.items())
        if (c.sense == "<=" and lhs > c.rhs + tol) or (c.sense == ">=" and lhs < c.rhs - tol) \
                or (c.sense == "=" and abs(lhs - c.rhs) > tol):
            return False
    return True


def qp_objective_value(inst: QpInstance, x) -> float:
    """Objective in the instance's own sense, without penalties."""
    vals = dict(zip(inst.variables, x))
    return (inst.constant + sum(c * vals[v] for v, c in inst.linear.items())
            + sum(c * vals[a] * vals[b] for (a, b), c in inst.quadratic.items()))
