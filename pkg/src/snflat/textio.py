"""Plain-text formats.

Matrix: a header line ``rows cols`` then one line per row, entries separated
by single spaces; integers in decimal, rationals as ``p/q``. Vector: one line
of entries. SNF file: ``n N`` then the ``n-1`` entries ``b_2..b_n``. SIS
instance: ``N delta n homogeneous_flag`` then the ``g`` entries. Solution:
one line of ``h`` (``h_0`` first when non-homogeneous). Every file ends with
a newline and has no trailing whitespace.

A serialized :class:`~snflat.snf.SnfReduction` is the SNF file followed by
labelled blocks (``M``, ``perm``, ``T``, ``params``, ``R``, ``basis``,
``transform``), each label on its own line.

Parse errors raise :class:`FormatError` with the 1-based offending line.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Sequence

from .errors import FormatError
from .linalg import Matrix, Number
from .snf import SnfBasis, SnfReduction
from .sis import SisInstance, SisSolution

_NUMBER = re.compile(r"^-?\d+(/\d+)?$")


def format_number(x) -> str:
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    return str(int(x))


def parse_number(tok: str, line: int | None = None) -> Number:
    if not _NUMBER.match(tok):
        raise FormatError(f"bad number {tok!r}", line)
    if "/" in tok:
        num, den = tok.split("/")
        if int(den) == 0:
            raise FormatError("zero denominator", line)
        value = Fraction(int(num), int(den))
        return value.numerator if value.denominator == 1 else value
    return int(tok)


def _parse_int(tok: str, line: int, what: str) -> int:
    value = parse_number(tok, line)
    if not isinstance(value, int):
        raise FormatError(f"{what} must be an integer", line)
    return value


def format_vector(v: Sequence) -> str:
    return " ".join(format_number(x) for x in v) + "\n"


def format_matrix(A: Matrix) -> str:
    lines = [f"{A.rows} {A.cols}"] + [" ".join(format_number(x) for x in A.row(i)) for i in range(A.rows)]
    return "\n".join(lines) + "\n"


class _Lines:
    """Line cursor that remembers 1-based positions for error messages."""

    def __init__(self, text: str, offset: int = 0):
        self.lines = text.split("\n")
        if self.lines and self.lines[-1] == "":
            self.lines.pop()
        self.pos = 0
        self.offset = offset

    @property
    def lineno(self) -> int:
        return self.pos + 1 + self.offset

    def next(self, what: str) -> str:
        if self.pos >= len(self.lines):
            raise FormatError(f"unexpected end of input, expected {what}", self.lineno)
        text = self.lines[self.pos]
        self.pos += 1
        return text

    def tokens(self, what: str) -> tuple[list[str], int]:
        line = self.lineno
        text = self.next(what)
        return text.split(), line

    def done(self) -> bool:
        return self.pos >= len(self.lines)


def _read_matrix(cur: _Lines) -> Matrix:
    toks, line = cur.tokens("matrix header")
    if len(toks) != 2:
        raise FormatError("matrix header must be 'rows cols'", line)
    rows, cols = (_parse_int(t, line, "dimension") for t in toks)
    if rows < 1 or cols < 1:
        raise FormatError("matrix dimensions must be positive", line)
    data = []
    for _ in range(rows):
        toks, line = cur.tokens("matrix row")
        if len(toks) != cols:
            raise FormatError(f"expected {cols} entries, found {len(toks)}", line)
        data.append([parse_number(t, line) for t in toks])
    return Matrix(data)


def parse_matrix(text: str) -> Matrix:
    cur = _Lines(text)
    A = _read_matrix(cur)
    if not cur.done():
        raise FormatError("unexpected trailing content", cur.lineno)
    return A


def parse_vector(text: str) -> list[Number]:
    """One line of entries; a one-row or one-column matrix is accepted too."""
    cur = _Lines(text)
    if len(cur.lines) == 1:
        toks, line = cur.tokens("vector")
        if not toks:
            raise FormatError("empty vector", line)
        return [parse_number(t, line) for t in toks]
    A = parse_matrix(text)
    if A.rows == 1:
        return A.row(0)
    if A.cols == 1:
        return A.col(0)
    raise FormatError("expected a vector, found a matrix", 1)


def format_snf(S: SnfBasis) -> str:
    return f"{S.n} {S.N}\n" + " ".join(str(b) for b in S.b) + "\n"


def _read_snf(cur: _Lines) -> SnfBasis:
    toks, line = cur.tokens("SNF header")
    if len(toks) != 2:
        raise FormatError("SNF header must be 'n N'", line)
    n, N = (_parse_int(t, line, "SNF header") for t in toks)
    if n < 1 or N < 2:
        raise FormatError("SNF header needs n >= 1 and N >= 2", line)
    toks, line = cur.tokens("SNF first row")
    if len(toks) != n - 1:
        raise FormatError(f"expected {n - 1} first-row entries, found {len(toks)}", line)
    b = [_parse_int(t, line, "first-row entry") for t in toks]
    if any(not 0 <= x < N for x in b):
        raise FormatError(f"first-row entries must lie in [0, {N})", line)
    return SnfBasis(N, tuple(b))


def parse_snf(text: str) -> SnfBasis:
    cur = _Lines(text)
    S = _read_snf(cur)
    if not cur.done():
        raise FormatError("unexpected trailing content", cur.lineno)
    return S


def format_reduction(red: SnfReduction) -> str:
    n = red.n
    perm = Matrix([[int(red.perm[j] == i) for j in range(n)] for i in range(n)])
    parts = [
        format_snf(red.snf),
        "M\n" + format_matrix(red.M),
        "perm\n" + format_matrix(perm),
        f"T\n{red.T}\n",
        f"params\n{red.params[0]} {red.params[1]}\n",
        "R\n" + format_matrix(red.R),
        "basis\n" + format_matrix(red.basis),
        "transform\n" + format_matrix(red.transform),
    ]
    return "".join(parts)


def parse_reduction(text: str) -> SnfReduction:
    cur = _Lines(text)
    S = _read_snf(cur)
    blocks: dict[str, object] = {}
    while not cur.done():
        line = cur.lineno
        label = cur.next("block label").strip()
        if label in blocks:
            raise FormatError(f"duplicate block {label!r}", line)
        if label in ("M", "perm", "R", "basis", "transform"):
            blocks[label] = _read_matrix(cur)
        elif label == "T":
            toks, tline = cur.tokens("T")
            if len(toks) != 1:
                raise FormatError("T must be a single integer", tline)
            blocks[label] = _parse_int(toks[0], tline, "T")
        elif label == "params":
            toks, tline = cur.tokens("params")
            if len(toks) != 2:
                raise FormatError("params must be 'a b'", tline)
            blocks[label] = tuple(_parse_int(t, tline, "param") for t in toks)
        else:
            raise FormatError(f"unknown block {label!r}", line)
    missing = {"M", "perm", "T", "params", "R", "basis", "transform"} - set(blocks)
    if missing:
        raise FormatError(f"missing blocks: {', '.join(sorted(missing))}", cur.lineno)
    P = blocks["perm"]
    perm = tuple(next(i for i in range(P.rows) if P[i, j] == 1) for j in range(P.cols))
    red = SnfReduction(
        snf=S, M=blocks["M"], T=blocks["T"], perm=perm, R=blocks["R"], params=blocks["params"],
        basis=blocks["basis"], transform=blocks["transform"],
    )
    if red.basis @ red.transform != S.matrix():
        raise FormatError("basis @ transform does not reproduce the SNF matrix", 1)
    return red


def format_instance(inst: SisInstance) -> str:
    head = f"{inst.N} {format_number(inst.delta)} {inst.n} {int(inst.homogeneous)}\n"
    return head + " ".join(str(x) for x in inst.g) + "\n"


def parse_instance(text: str) -> SisInstance:
    cur = _Lines(text)
    toks, line = cur.tokens("instance header")
    if len(toks) != 4:
        raise FormatError("instance header must be 'N delta n homogeneous_flag'", line)
    N = _parse_int(toks[0], line, "N")
    delta = parse_number(toks[1], line)
    n = _parse_int(toks[2], line, "n")
    flag = toks[3]
    if flag not in ("0", "1"):
        raise FormatError("homogeneous flag must be 0 or 1", line)
    if N < 2 or n < 1 or delta <= 0:
        raise FormatError("instance needs N >= 2, n >= 1, delta > 0", line)
    toks, gline = cur.tokens("g entries")
    if len(toks) != n:
        raise FormatError(f"expected {n} entries, found {len(toks)}", gline)
    g = [_parse_int(t, gline, "g entry") for t in toks]
    if not cur.done():
        raise FormatError("unexpected trailing content", cur.lineno)
    return SisInstance(N, Fraction(delta), n, tuple(g), flag == "1")


def format_solution(sol: SisSolution) -> str:
    return format_vector(sol.h)


def parse_solution(text: str) -> list[int]:
    cur = _Lines(text)
    toks, line = cur.tokens("solution")
    if not cur.done():
        raise FormatError("solution must be a single line", cur.lineno)
    return [_parse_int(t, line, "solution entry") for t in toks]
