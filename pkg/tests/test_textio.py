from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from snflat.errors import FormatError
from snflat.linalg import Matrix
from snflat.sis import SisInstance, make_solution
from snflat.snf import SnfBasis, reduce_to_snf
from snflat.textio import (
    format_instance,
    format_matrix,
    format_reduction,
    format_snf,
    format_solution,
    format_vector,
    parse_instance,
    parse_matrix,
    parse_number,
    parse_reduction,
    parse_snf,
    parse_solution,
    parse_vector,
)

entries = st.one_of(st.integers(-10 ** 30, 10 ** 30), st.fractions(max_denominator=1000))


@given(st.integers(1, 4), st.integers(1, 4), st.data())
def test_matrix_round_trip(rows, cols, data):
    A = Matrix([[data.draw(entries) for _ in range(cols)] for _ in range(rows)])
    text = format_matrix(A)
    assert text.endswith("\n") and not any(line != line.rstrip() for line in text.split("\n"))
    assert parse_matrix(text) == A


def test_matrix_format():
    assert format_matrix(Matrix([[1, Fraction(-1, 2)], [0, 3]])) == "2 2\n1 -1/2\n0 3\n"


@pytest.mark.parametrize("text,line", [
    ("2 2\n1 2\n3\n", 3),
    ("2 2\n1 x\n0 1\n", 2),
    ("2\n1 2\n", 1),
    ("2 2\n1 2\n", 3),
    ("1 1\n1/0\n", 2),
    ("1 1\n1\nextra\n", 3),
])
def test_matrix_errors_carry_line(text, line):
    with pytest.raises(FormatError) as info:
        parse_matrix(text)
    assert info.value.line == line


def test_numbers():
    assert parse_number("4/2") == 2 and isinstance(parse_number("4/2"), int)
    assert parse_number("-3/6") == Fraction(-1, 2)
    with pytest.raises(FormatError):
        parse_number("1.5")


def test_vectors():
    assert parse_vector("2 1\n") == [2, 1]
    assert parse_vector("1 2\n5 6\n") == [5, 6]
    assert parse_vector("2 1\n5\n6\n") == [5, 6]
    assert format_vector([1, Fraction(1, 3)]) == "1 1/3\n"
    with pytest.raises(FormatError):
        parse_vector("2 2\n1 2\n3 4\n")


def test_snf_round_trip():
    S = SnfBasis(31, (4, 0, 30))
    assert format_snf(S) == "4 31\n4 0 30\n"
    assert parse_snf(format_snf(S)) == S
    assert parse_snf(format_snf(SnfBasis(11, ()))) == SnfBasis(11, ())


@pytest.mark.parametrize("text", ["2 7\n3 4\n", "2 7\n9\n", "2 1\n0\n", "2 7\n"])
def test_snf_errors(text):
    with pytest.raises(FormatError):
        parse_snf(text)


def test_reduction_round_trip():
    red = reduce_to_snf(Matrix([[2, 1], [0, 3]]))
    back = parse_reduction(format_reduction(red))
    assert back.snf == red.snf and back.M == red.M and back.T == red.T and back.perm == red.perm
    assert back.basis == red.basis and back.transform == red.transform and back.R == red.R


def test_reduction_tamper_detected():
    text = format_reduction(reduce_to_snf(Matrix([[2, 1], [0, 3]])))
    lines = text.split("\n")
    i = lines.index("transform")
    lines[i + 2] = " ".join(str(int(x) + 1) for x in lines[i + 2].split())
    with pytest.raises(FormatError):
        parse_reduction("\n".join(lines))


def test_instance_and_solution():
    inst = SisInstance(31, Fraction(1, 2), 3, (1, 2, 3), homogeneous=False)
    text = format_instance(inst)
    assert text == "31 1/2 3 0\n1 2 3\n"
    assert parse_instance(text) == inst
    sol = make_solution(inst, [1, 1, 0, 0])
    assert parse_solution(format_solution(sol)) == [1, 1, 0, 0]


@pytest.mark.parametrize("text", ["31 1/2 3 2\n1 2 3\n", "31 1/2 3 1\n1 2\n", "31 0 3 1\n1 2 3\n"])
def test_instance_errors(text):
    with pytest.raises(FormatError):
        parse_instance(text)
