"""DSL parsing: grammar, domains, parameters, diagnostics, round trip."""

import math

import pytest

from signflow import parse_system
from signflow.dsl import ParseError, emit_system
from signflow.system import DomainClass, eval_field


def test_two_line_system_defaults_to_c1():
    s = parse_system("x1' = -x1 + tanh(x2)\nx2' = x1 - x2")
    assert s.n == 2
    assert s.domain.klass is DomainClass.C1
    assert eval_field(s, (0.0, 0.0)) == [0.0, 0.0]


def test_param_substituted_as_literal():
    s = parse_system("param k = 2\nx1' = k*x1")
    assert s.n == 1
    assert eval_field(s, (3.0,)) == [6.0]
    text = emit_system(s)
    assert "k" not in text
    assert "2" in text


def test_param_negative_value_and_use_before_decl():
    s = parse_system("x1' = a*x1\nparam a = -1.5")
    assert eval_field(s, (2.0,)) == [-3.0]


def test_comments_and_blank_lines():
    s = parse_system("""
# leading comment
x1' = -x1   # trailing comment

x2' = x1 - x2
""")
    assert s.n == 2


def test_syntax_error_position():
    with pytest.raises(ParseError) as exc:
        parse_system("x1' = +")
    assert exc.value.line == 1
    assert "line 1" in str(exc.value)


def test_error_on_second_line():
    with pytest.raises(ParseError) as exc:
        parse_system("x1' = -x1\nx2' = exp(")
    assert exc.value.line == 2


def test_unknown_function():
    with pytest.raises(ParseError, match="unknown function"):
        parse_system("x1' = sinh(x1)")


def test_unbound_variable():
    with pytest.raises(ParseError, match="unbound variable x2"):
        parse_system("x1' = x2")


def test_unbound_parameter():
    with pytest.raises(ParseError):
        parse_system("x1' = k*x1")


def test_duplicate_equation():
    with pytest.raises(ParseError, match="duplicate"):
        parse_system("x1' = -x1\nx1' = x1")


def test_missing_coordinate():
    with pytest.raises(ParseError, match="missing equation"):
        parse_system("var x2 in [0, 1]\nx2' = -x2")


def test_non_integer_exponent():
    with pytest.raises(ParseError):
        parse_system("x1' = x1^1.5")
    with pytest.raises(ParseError):
        parse_system("x1' = x1^x1")


def test_var_interval_forms():
    s = parse_system("""
var x1 in [0, 1]
var x2 in (-inf, 0]
var x3 in (0, inf)
x1' = -x1
x2' = -x2
x3' = -x3
""")
    i1, i2, i3 = s.domain.intervals
    assert (i1.lo, i1.hi, i1.lo_closed, i1.hi_closed) == (0.0, 1.0, True, True)
    assert (i2.lo, i2.hi, i2.lo_closed, i2.hi_closed) == (-math.inf, 0.0, False, True)
    assert (i3.lo, i3.hi, i3.lo_closed, i3.hi_closed) == (0.0, math.inf, False, False)


def test_domain_classes():
    c3 = parse_system("var x1 in [0, inf)\nvar x2 in [0, inf)\nx1' = -x1\nx2' = -x2")
    assert c3.domain.klass is DomainClass.C3
    c4 = parse_system("var x1 in [0, 1]\nvar x2 in [-1, 1]\nx1' = -x1\nx2' = -x2")
    assert c4.domain.klass is DomainClass.C4
    c2 = parse_system("var x1 in [0, inf)\nx1' = -x1\nx2' = -x2")
    assert c2.domain.klass is DomainClass.C2
    other = parse_system("var x1 in [0, 1]\nx1' = -x1\nx2' = -x2")
    assert other.domain.klass is DomainClass.OTHER


def test_empty_interval_rejected():
    with pytest.raises(ParseError):
        parse_system("var x1 in [2, 1]\nx1' = -x1")


def test_bad_var_name():
    with pytest.raises(ParseError):
        parse_system("var y in [0, 1]\ny' = 1")


def test_no_equations():
    with pytest.raises(ParseError):
        parse_system("# nothing here\n")


def test_emit_parse_round_trip():
    text = """\
var x1 in [0, 2]
var x3 in (-inf, 5)
x1' = -0.5*x1 + tanh(x2)
x2' = x1*x3 - x2^3
x3' = sigmoid(x1) - x3 / 2
"""
    s = parse_system(text)
    again = parse_system(emit_system(s))
    assert again.exprs == s.exprs
    assert again.domain == s.domain
    assert again.n == s.n
