"""Parser and formatter for ``.pp`` pulse programs.

Grammar (one statement per line, ``#`` starts a comment)::

    program  := line*
    line     := stmt? comment? NEWLINE
    stmt     := pulse | delay | simblock | use
    pulse    := "pulse" CHANNEL AXIS ANGLE
    delay    := "delay" TIMESPEC
    simblock := "sim" "{" pulse ("," pulse)* "}"
    use      := "use" SEQID
    CHANNEL  := "H" | "C"
    AXIS     := "x" | "y" | "-x" | "-y" | "@" DEGREES
    ANGLE    := decimal degrees
    TIMESPEC := decimal with unit "s" | "ms" | "us", or "J/2"

A ``sim`` block may span several lines.  ``@DEGREES`` is an explicit RF phase
for pulses whose phase is not a multiple of 90 degrees.  Parsing is
all-or-nothing: any diagnostic means no sequence is returned.
"""

import math
import re
from dataclasses import dataclass

from .pulses import (
    NAMED_SEQUENCE_IDS,
    DelayEvent,
    PulseEvent,
    PulseSequence,
    SimultaneousGroup,
    named_sequence,
)

CHANNELS = ("H", "C")
AXES = {"x": 0.0, "y": math.pi / 2, "-x": math.pi, "-y": 3 * math.pi / 2}
TIME_UNITS = {"s": 1.0, "ms": 1e-3, "us": 1e-6}
KEYWORDS = ("pulse", "delay", "sim", "use")

_TOKEN = re.compile(r"[{},]|[^\s{},#]+")
_NUMBER = re.compile(r"[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?")
_TIME = re.compile(r"(?P<num>[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?)(?P<unit>[a-z]*)")


@dataclass(frozen=True)
class SourceProgram:
    text: str
    name: str = "<program>"


@dataclass(frozen=True)
class ParseDiagnostic:
    line: int
    column: int
    message: str
    severity: str = "error"

    def __str__(self):
        return f"{self.line}:{self.column}: {self.severity}: {self.message}"


class ParseError(ValueError):
    def __init__(self, diagnostics, name="<program>"):
        self.diagnostics = list(diagnostics)
        self.name = name
        super().__init__("\n".join(f"{name}:{d}" for d in self.diagnostics))


@dataclass(frozen=True)
class _Tok:
    text: str
    line: int
    col: int


class _Bail(Exception):
    pass


def _tokenize(text):
    """Token stream with a ``"\\n"`` token closing every line."""
    toks = []
    lines = text.split("\n")
    for lineno, raw in enumerate(lines, start=1):
        body = raw.split("#", 1)[0]
        for m in _TOKEN.finditer(body):
            toks.append(_Tok(m.group(), lineno, m.start() + 1))
        toks.append(_Tok("\n", lineno, len(body.rstrip()) + 1))
    return toks


class _Parser:
    def __init__(self, program):
        self.name = program.name
        self.toks = _tokenize(program.text)
        self.pos = 0
        self.diagnostics = []
        self.events = []

    def peek(self):
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def next(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def error(self, tok, message):
        self.diagnostics.append(ParseDiagnostic(tok.line, tok.col, message))
        raise _Bail

    def skip_line(self):
        while self.peek() is not None and self.peek().text != "\n":
            self.pos += 1
        self.pos += 1

    def expect_word(self, what):
        tok = self.next()
        if tok is None or tok.text == "\n":
            where = tok or self.toks[-1]
            self.pos -= 1
            self.error(where, f"expected {what}, found end of line")
        return tok

    def run(self):
        while self.peek() is not None:
            tok = self.peek()
            if tok.text == "\n":
                self.pos += 1
                continue
            try:
                self.statement()
                end = self.peek()
                if end is not None and end.text != "\n":
                    self.error(end, f"unexpected {end.text!r} after statement")
                self.pos += 1
            except _Bail:
                self.skip_line()
        return self.events

    def statement(self):
        tok = self.next()
        if tok.text == "pulse":
            self.events.append(self.pulse_body())
        elif tok.text == "delay":
            self.events.append(self.delay_body())
        elif tok.text == "sim":
            self.events.append(self.sim_body(tok))
        elif tok.text == "use":
            ident = self.expect_word("sequence id")
            if ident.text not in NAMED_SEQUENCE_IDS:
                self.error(ident, f"unknown sequence id {ident.text!r}")
            self.events.extend(named_sequence(ident.text).events)
        else:
            self.error(tok, f"unknown keyword {tok.text!r}; expected one of {', '.join(KEYWORDS)}")

    def pulse_body(self):
        ch = self.expect_word("channel")
        if ch.text not in CHANNELS:
            self.error(ch, f"unknown channel {ch.text!r}; expected H or C")
        axis = self.expect_word("axis")
        if axis.text.startswith("@"):
            phase = math.radians(self.number(axis, axis.text[1:], "phase"))
        elif axis.text in AXES:
            phase = AXES[axis.text]
        else:
            self.error(axis, f"unknown axis {axis.text!r}; expected x, y, -x, -y or @degrees")
        angle_tok = self.expect_word("flip angle")
        angle = self.number(angle_tok, angle_tok.text, "flip angle")
        if not angle > 0:
            self.error(angle_tok, "flip angle must be positive")
        return PulseEvent(ch.text, math.radians(angle), phase)

    def delay_body(self):
        tok = self.expect_word("delay time")
        if tok.text == "J/2":
            return DelayEvent(half_j=True)
        m = _TIME.fullmatch(tok.text)
        if m is None:
            self.error(tok, f"malformed delay {tok.text!r}")
        unit = m.group("unit")
        if not unit:
            nxt = self.peek()
            if nxt is not None and nxt.text in TIME_UNITS:
                unit = self.next().text
            else:
                self.error(tok, "delay needs a unit suffix: s, ms or us")
        if unit not in TIME_UNITS:
            self.error(tok, f"unknown time unit {unit!r}")
        value = float(m.group("num")) * TIME_UNITS[unit]
        if value < 0:
            self.error(tok, "delay must be non-negative")
        return DelayEvent(value)

    def sim_body(self, sim_tok):
        self.skip_newlines()
        brace = self.next()
        if brace is None or brace.text != "{":
            self.error(brace or sim_tok, "expected '{' after sim")
        pulses, seen = [], {}
        while True:
            self.skip_newlines()
            kw = self.peek()
            if kw is None:
                self.error(sim_tok, "unterminated sim block")
            if kw.text != "pulse":
                self.error(kw, f"expected 'pulse' inside sim block, found {kw.text!r}")
            self.pos += 1
            ch_tok = self.peek()
            pulse = self.pulse_body()
            if pulse.channel in seen:
                self.error(ch_tok, f"channel {pulse.channel} appears twice in sim block")
            seen[pulse.channel] = ch_tok
            pulses.append(pulse)
            self.skip_newlines()
            sep = self.next()
            if sep is None:
                self.error(sim_tok, "unterminated sim block")
            if sep.text == "}":
                return SimultaneousGroup(tuple(pulses))
            if sep.text != ",":
                self.error(sep, f"expected ',' or '}}' in sim block, found {sep.text!r}")

    def skip_newlines(self):
        while self.peek() is not None and self.peek().text == "\n":
            self.pos += 1

    def number(self, tok, text, what):
        if not _NUMBER.fullmatch(text):
            self.error(tok, f"malformed {what} {text!r}")
        return float(text)


def parse(program):
    """Parse a pulse program into a :class:`PulseSequence`.

    Accepts a :class:`SourceProgram` or plain text.  Raises :class:`ParseError`
    carrying every diagnostic when the program is invalid.
    """
    if isinstance(program, str):
        program = SourceProgram(program)
    parser = _Parser(program)
    events = parser.run()
    if parser.diagnostics:
        raise ParseError(parser.diagnostics, program.name)
    return PulseSequence(tuple(events), name=program.name)


def parse_file(path):
    with open(path, encoding="utf-8") as fh:
        return parse(SourceProgram(fh.read(), name=str(path)))


def _fmt_number(x):
    if float(x).is_integer():
        return str(int(x))
    return repr(float(x))


def _fmt_pulse(p):
    axis = next((name for name, phi in AXES.items() if abs(p.phase - phi) < 1e-12), None)
    if axis is None:
        axis = "@" + _fmt_number(math.degrees(p.phase))
    return f"pulse {p.channel} {axis} {_fmt_number(math.degrees(p.flip_angle))}"


def _fmt_event(event):
    if isinstance(event, PulseEvent):
        return _fmt_pulse(event)
    if isinstance(event, DelayEvent):
        return "delay J/2" if event.half_j else f"delay {repr(event.duration)}s"
    return "sim { " + ", ".join(_fmt_pulse(p) for p in event.pulses) + " }"


def format(seq, name=None):
    """Render a sequence as program text; ``parse(format(s))`` reproduces ``s``."""
    text = "\n".join(_fmt_event(e) for e in seq.events)
    return SourceProgram(text, name or seq.name or "<program>")
