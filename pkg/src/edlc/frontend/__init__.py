"""EDL lexer, parser, resolver and pretty-printer."""

from edlc.frontend.ast import ProgramAST
from edlc.frontend.lexer import Token, tokenize
from edlc.frontend.parser import parse, parse_source
from edlc.frontend.printer import format_expr, format_program
from edlc.frontend.resolve import resolve


def load(source: str, file: str = "<input>") -> ProgramAST:
    """Tokenize, parse and resolve in one call."""
    return resolve(parse_source(source, file))


__all__ = ["ProgramAST", "Token", "tokenize", "parse", "parse_source", "resolve", "format_expr", "format_program", "load"]
