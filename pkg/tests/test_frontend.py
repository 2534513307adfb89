import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edlc import errors
from edlc.expand import Expander
from edlc.frontend import ast, format_program, load, parse_source, tokenize


def kinds(src):
    return [(t.kind, t.text) for t in tokenize(src)]


# -- lexer ------------------------------------------------------------------------


def test_tokenize_group_header():
    assert kinds("begin group Evolved") == [("kw", "begin"), ("kw", "group"), ("ident", "Evolved")]


def test_tokenize_empty():
    assert tokenize("") == []
    assert tokenize("   # only a comment\n\n") == []


def test_tokenize_power():
    assert kinds("rho**2") == [("ident", "rho"), ("op", "**"), ("num", "2")]


def test_tokenize_rational_literal_and_spans():
    toks = tokenize("x = 1/2\n  y", "f.edl")
    assert toks[2].value == Fraction(1, 2)
    assert (toks[3].span.line_start, toks[3].span.col_start) == (2, 3)


def test_tokenize_division_chain_is_not_a_rational():
    assert kinds("x/1/2") == [("ident", "x"), ("op", "/"), ("num", "1"), ("op", "/"), ("num", "2")]
    assert kinds("x**2/3") == [("ident", "x"), ("op", "**"), ("num", "2"), ("op", "/"), ("num", "3")]


def test_tokenize_errors_carry_spans():
    with pytest.raises(errors.UnrecognizedCharacter) as e:
        tokenize("a = 1\nb = $", "f.edl")
    assert (e.value.span.line_start, e.value.span.col_start) == (2, 5)
    with pytest.raises(errors.UnterminatedString) as e:
        tokenize('u: "scalar', "f.edl")
    assert e.value.span.line_start == 1


# -- parser ---------------------------------------------------------------------------


def test_parse_wave_structure(wave_program):
    p = wave_program
    assert [g.name for g in p.groups] == ["Evolved", "Extra"]
    assert [e.name for e in p.groups[0].entries] == ["u", "rho", "v"]
    assert p.groups[0].entries[2].rank == 1
    assert [e.name for e in p.groups[1].entries] == ["eps"]
    assert [q.name for q in p.parameters] == ["A", "W"]
    assert all(q.kind == "real" for q in p.parameters)
    assert [c.name for c in p.calculations] == ["Init", "RHS", "Energy"]
    assert len(p.derivatives) == 1
    d = p.derivatives[0].definition
    assert isinstance(d, ast.BuiltinFD) and (d.deriv_order, d.half_width) == (1, 1)


def test_init_density_precedence(wave_program):
    # rho = A exp(-1/2 (r/W)**2) reads as A * exp(-(1/2 * (r/W)**2))
    rho = wave_program.calculation("Init").equations[1].rhs
    assert isinstance(rho, ast.BinOp) and rho.op == "*"
    assert rho.left.name == "A"
    call = rho.right
    assert isinstance(call, ast.Call) and call.func == "exp"
    neg = call.arg
    assert isinstance(neg, ast.Neg)
    prod = neg.operand
    assert isinstance(prod, ast.BinOp) and prod.op == "*"
    assert prod.left == ast.Number(Fraction(1, 2))
    assert isinstance(prod.right, ast.Pow) and prod.right.exponent == 2


def test_juxtaposition_binds_tighter_than_division():
    p = parse_source("begin calculation C\n u = a / b c\nend calculation")
    rhs = p.calculations[0].equations[0].rhs
    assert rhs.op == "/" and rhs.right.op == "*"


def test_unclosed_block_points_at_opening_line():
    with pytest.raises(errors.UnclosedBlock) as e:
        parse_source('begin group G\n  u: "x"', "f.edl")
    assert e.value.span.line_start == 1


def test_mismatched_end_name():
    with pytest.raises(errors.MismatchedEndName) as e:
        parse_source("begin calculation Init\n u = 0\nend calculation RHS", "f.edl")
    assert e.value.span.line_start == 3


def test_bare_end_matches_any_name():
    p = parse_source('begin group G\n u: "x"\nend group\nbegin calculation C\n u = 0\nend calculation')
    assert p.calculations[0].name == "C"


def test_duplicate_declaration():
    src = 'begin group G\n u: "a"\n u: "b"\nend group'
    with pytest.raises(errors.DuplicateDeclaration) as e:
        parse_source(src)
    assert e.value.span.line_start == 3


def test_parse_error_names_expected_construct():
    with pytest.raises(errors.ParseError) as e:
        parse_source("begin calculation C\n u = (1 + \nend calculation")
    assert "expected" in e.value.message


def test_parameter_defaults_and_int_kind():
    p = parse_source('begin parameters\n N: int "count" = 3\n c: real = 1/2\nend parameters')
    assert p.parameters[0].kind == "int" and p.parameters[0].default == 3
    assert p.parameters[1].default == Fraction(1, 2)


# -- resolve --------------------------------------------------------------------------


def test_wave_classification(wave_program):
    kinds_ = {c.name: c.kind for c in wave_program.calculations}
    assert kinds_ == {"Init": "initial", "RHS": "rhs", "Energy": "analysis"}


def test_unknown_identifier_span():
    src = 'begin group G\n u: "x"\nend group\nbegin calculation C\n u = 2 Q\nend calculation'
    with pytest.raises(errors.UnknownIdentifier) as e:
        load(src, "f.edl")
    assert (e.value.span.line_start, e.value.span.col_start) == (5, 8)
    assert "Q" in e.value.message


def test_mixed_calculation_kind():
    src = (
        'begin group Evolved\n u: ""\n rho: ""\nend group\n'
        'begin group Extra\n eps: ""\nend group\n'
        "begin calculation C\n D_t u = rho\n eps = rho\nend calculation"
    )
    with pytest.raises(errors.MixedCalculationKind):
        load(src)


def test_rank_mismatch():
    src = 'begin group G\n v_i: ""\n u: ""\nend group\nbegin calculation C\n u = v\nend calculation'
    with pytest.raises(errors.RankMismatch) as e:
        load(src, "f.edl")
    assert e.value.span.line_start == 6


def test_missing_derivative_declaration():
    src = (
        'begin group Evolved\n u: ""\n v_i: ""\nend group\n'
        "begin calculation RHS\n D_t u = delta^ij D_i v_j\n D_t v_i = 0\nend calculation"
    )
    with pytest.raises(errors.MissingDerivativeDefinition) as e:
        load(src, "f.edl")
    assert e.value.span.line_start == 6


# -- properties -------------------------------------------------------------------------


def test_round_trip_wave(wave_source):
    first = parse_source(wave_source)
    again = parse_source(format_program(first))
    assert again == first
    assert format_program(again) == format_program(first)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(min_value=0, max_value=60), max_size=6), st.text(alphabet="abc xyz+-*/()", max_size=20))
def test_comment_insensitivity(wave_source, positions, text):
    lines = wave_source.splitlines()
    for p in sorted(positions, reverse=True):
        lines.insert(min(p, len(lines)), f"   # {text}")
    assert parse_source("\n".join(lines)) == parse_source(wave_source)


def test_token_deletion_fuzz(wave_source):
    """Dropping any single token either still compiles or yields a spanned diagnostic."""
    toks = tokenize(wave_source)
    lines = wave_source.splitlines(keepends=True)
    n_lines = len(lines)
    offsets = [0]
    for line in lines:
        offsets.append(offsets[-1] + len(line))

    def pos(line, col):
        return offsets[line - 1] + col - 1

    outcomes = {"ok": 0, "error": 0}
    for tok in toks:
        a = pos(tok.span.line_start, tok.span.col_start)
        b = pos(tok.span.line_end, tok.span.col_end) + 1
        mutated = wave_source[:a] + " " * (b - a) + wave_source[b:]
        try:
            program = load(mutated, "fuzz.edl")
            ex = Expander(program, 3)
            for c in program.calculations:
                ex.expand_calculation(c)
            outcomes["ok"] += 1
        except errors.EDLError as exc:
            assert exc.span is not None, f"unspanned {type(exc).__name__} after deleting {tok.text!r}"
            assert 1 <= exc.span.line_start <= max(n_lines, tok.span.line_start)
            outcomes["error"] += 1
    assert outcomes["error"] > len(toks) // 2


def test_random_junk_never_crashes():
    rng = random.Random(7)
    alphabet = list("begin end group calculation D_t u rho = + - * / ( ) [ ] ^ _ : , 1 2 \" \n # x")
    for _ in range(300):
        src = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 40)))
        try:
            load(src, "junk.edl")
        except errors.EDLError as exc:
            assert exc.span is not None
