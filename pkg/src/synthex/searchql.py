"""Boolean field-query language over stored extraction records.

Grammar (precedence NOT > AND > OR, parentheses allowed):

    query  := or
    or     := and ("OR" and)*
    and    := not ("AND" not)*
    not    := "NOT" not | primary
    primary:= "(" or ")" | FIELD ":" value | value
    value  := WORD | '"' phrase '"'

Field terms match case-insensitively as substrings on the named field; bare
terms search the paragraph text. Short aliases (metal, linker, solvent,
modulator, duration, temperature) map onto the canonical slot names.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Union

from .records import SLOTS

EXTRA_FIELDS = ("title", "paragraph", "doi")
QUERY_FIELDS = SLOTS + EXTRA_FIELDS

FIELD_ALIASES = {
    "metal": "metal_precursor_name",
    "linker": "organic_linker_name",
    "solvent": "solvent_name",
    "modulator": "modulator_name",
    "duration": "reaction_duration",
    "temperature": "reaction_temperature",
}


class QuerySyntaxError(Exception):
    def __init__(self, message: str, position: int, expected: str = "") -> None:
        detail = f"syntax error at offset {position}: {message}"
        if expected:
            detail += f" (expected {expected})"
        super().__init__(detail)
        self.position = position
        self.expected = expected


@dataclass(frozen=True)
class FieldTerm:
    field: str
    matcher: str

    def __post_init__(self) -> None:
        if self.field not in QUERY_FIELDS:
            raise ValueError(f"unknown query field {self.field!r}")
        if not self.matcher:
            raise ValueError("matcher must be non-empty")


@dataclass(frozen=True)
class TextTerm:
    matcher: str

    def __post_init__(self) -> None:
        if not self.matcher:
            raise ValueError("matcher must be non-empty")


@dataclass(frozen=True)
class Not:
    child: "QueryAst"


@dataclass(frozen=True)
class And:
    left: "QueryAst"
    right: "QueryAst"


@dataclass(frozen=True)
class Or:
    left: "QueryAst"
    right: "QueryAst"


QueryAst = Union[FieldTerm, TextTerm, Not, And, Or]


# --- lexer ------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<lparen>\()
  | (?P<rparen>\))
  | (?P<quoted>"[^"]*")
  | (?P<word>[^\s():"]+)
  | (?P<colon>:)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # AND OR NOT LPAREN RPAREN WORD QUOTED COLON EOF
    value: str
    position: int


def _lex(query: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(query):
        match = _TOKEN_RE.match(query, pos)
        if not match:
            raise QuerySyntaxError(f"unexpected character {query[pos]!r}", pos)
        kind = match.lastgroup
        text = match.group(0)
        if kind == "ws":
            pos = match.end()
            continue
        if kind == "word" and text in ("AND", "OR", "NOT"):
            tokens.append(_Token(text, text, pos))
        elif kind == "word":
            tokens.append(_Token("WORD", text, pos))
        elif kind == "quoted":
            tokens.append(_Token("QUOTED", text[1:-1], pos))
        elif kind == "lparen":
            tokens.append(_Token("LPAREN", text, pos))
        elif kind == "rparen":
            tokens.append(_Token("RPAREN", text, pos))
        elif kind == "colon":
            tokens.append(_Token("COLON", text, pos))
        pos = match.end()
    tokens.append(_Token("EOF", "", len(query)))
    return tokens


class _Parser:
    def __init__(self, query: str) -> None:
        self.tokens = _lex(query)
        self.index = 0

    def peek(self) -> _Token:
        return self.tokens[self.index]

    def advance(self) -> _Token:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def parse(self) -> QueryAst:
        ast = self.parse_or()
        token = self.peek()
        if token.kind != "EOF":
            raise QuerySyntaxError(f"unexpected {token.value!r}", token.position, "end of query")
        return ast

    def parse_or(self) -> QueryAst:
        node = self.parse_and()
        while self.peek().kind == "OR":
            self.advance()
            node = Or(node, self.parse_and())
        return node

    def parse_and(self) -> QueryAst:
        node = self.parse_not()
        while self.peek().kind == "AND":
            self.advance()
            node = And(node, self.parse_not())
        return node

    def parse_not(self) -> QueryAst:
        if self.peek().kind == "NOT":
            self.advance()
            return Not(self.parse_not())
        return self.parse_primary()

    def parse_primary(self) -> QueryAst:
        token = self.peek()
        if token.kind == "LPAREN":
            self.advance()
            node = self.parse_or()
            closing = self.peek()
            if closing.kind != "RPAREN":
                raise QuerySyntaxError(
                    f"unclosed parenthesis (saw {closing.value!r})", closing.position, "')'"
                )
            self.advance()
            return node
        if token.kind == "WORD":
            # A word followed by a colon is a field term.
            if self.tokens[self.index + 1].kind == "COLON":
                field_name = FIELD_ALIASES.get(token.value, token.value)
                if field_name not in QUERY_FIELDS:
                    raise QuerySyntaxError(
                        f"unknown field {token.value!r}",
                        token.position,
                        "one of " + ", ".join(sorted(FIELD_ALIASES) + ["<slot name>", "title", "paragraph", "doi"]),
                    )
                self.advance()  # word
                self.advance()  # colon
                value = self.peek()
                if value.kind not in ("WORD", "QUOTED"):
                    raise QuerySyntaxError(
                        f"missing field value (saw {value.value!r})",
                        value.position,
                        "word or quoted phrase",
                    )
                self.advance()
                return FieldTerm(field_name, value.value)
            self.advance()
            return TextTerm(token.value)
        if token.kind == "QUOTED":
            self.advance()
            return TextTerm(token.value)
        raise QuerySyntaxError(
            f"unexpected {token.value or 'end of query'!r}", token.position, "a term"
        )


def parse(query: str) -> QueryAst:
    """Parse a query string; raises QuerySyntaxError with the failing offset."""
    if not query.strip():
        raise QuerySyntaxError("empty query", 0, "a term")
    return _Parser(query).parse()


# --- printing ------------------------------------------------------------------


def _print_value(value: str) -> str:
    if re.fullmatch(r"[^\s():\"]+", value) and value not in ("AND", "OR", "NOT"):
        return value
    return f'"{value}"'


def format_query(ast: QueryAst) -> str:
    """Canonical text form; parse(format_query(ast)) reproduces the AST.

    The parser is left-associative, so a right child of the same operator
    keeps explicit parentheses.
    """
    if isinstance(ast, FieldTerm):
        return f"{ast.field}:{_print_value(ast.matcher)}"
    if isinstance(ast, TextTerm):
        return _print_value(ast.matcher)
    if isinstance(ast, Not):
        child = format_query(ast.child)
        if isinstance(ast.child, (And, Or)):
            child = f"({child})"
        return f"NOT {child}"
    if isinstance(ast, And):
        left = format_query(ast.left)
        if isinstance(ast.left, Or):
            left = f"({left})"
        right = format_query(ast.right)
        if isinstance(ast.right, (And, Or)):
            right = f"({right})"
        return f"{left} AND {right}"
    if isinstance(ast, Or):
        left = format_query(ast.left)
        right = format_query(ast.right)
        if isinstance(ast.right, Or):
            right = f"({right})"
        return f"{left} OR {right}"
    raise TypeError(f"not a query node: {ast!r}")


# --- evaluation -------------------------------------------------------------------


def evaluate(ast: QueryAst, record: Mapping[str, str | None]) -> bool:
    """Case-insensitive substring semantics over a field mapping.

    The mapping holds the ten slots plus title/paragraph/doi; absent fields
    never match.
    """
    if isinstance(ast, FieldTerm):
        value = record.get(ast.field)
        return value is not None and ast.matcher.casefold() in value.casefold()
    if isinstance(ast, TextTerm):
        value = record.get("paragraph")
        return value is not None and ast.matcher.casefold() in value.casefold()
    if isinstance(ast, Not):
        return not evaluate(ast.child, record)
    if isinstance(ast, And):
        return evaluate(ast.left, record) and evaluate(ast.right, record)
    if isinstance(ast, Or):
        return evaluate(ast.left, record) or evaluate(ast.right, record)
    raise TypeError(f"not a query node: {ast!r}")


# --- search over a record store ------------------------------------------------------


@dataclass(frozen=True)
class SearchHit:
    record_id: str
    matched_fields: tuple[str, ...]
    snippets: dict[str, tuple[int, int]]  # field -> first matching span


def _positive_leaves(ast: QueryAst, negated: bool = False) -> Iterable[FieldTerm | TextTerm]:
    """Leaves that can positively support a match (skip negated subtrees)."""
    if isinstance(ast, (FieldTerm, TextTerm)):
        if not negated:
            yield ast
    elif isinstance(ast, Not):
        yield from _positive_leaves(ast.child, not negated)
    elif isinstance(ast, (And, Or)):
        yield from _positive_leaves(ast.left, negated)
        yield from _positive_leaves(ast.right, negated)


def _matched_fields(
    ast: QueryAst, record: Mapping[str, str | None]
) -> tuple[tuple[str, ...], dict[str, tuple[int, int]]]:
    fields: list[str] = []
    snippets: dict[str, tuple[int, int]] = {}
    for leaf in _positive_leaves(ast):
        field = leaf.field if isinstance(leaf, FieldTerm) else "paragraph"
        value = record.get(field)
        if value is None:
            continue
        start = value.casefold().find(leaf.matcher.casefold())
        if start == -1:
            continue
        if field not in fields:
            fields.append(field)
            snippets[field] = (start, start + len(leaf.matcher))
    return tuple(fields), snippets


def search(
    rows: Iterable[tuple[str, Mapping[str, str | None]]],
    ast: QueryAst,
    limit: int | None = None,
    offset: int = 0,
) -> tuple[list[SearchHit], int]:
    """Evaluate over all rows; hits ordered by record id ascending, stable pages."""
    if offset < 0 or (limit is not None and limit < 0):
        raise ValueError("limit and offset must be >= 0")
    matches = []
    for record_id, record in sorted(rows, key=lambda pair: pair[0]):
        if evaluate(ast, record):
            fields, snippets = _matched_fields(ast, record)
            matches.append(SearchHit(record_id, fields, snippets))
    total = len(matches)
    end = None if limit is None else offset + limit
    return matches[offset:end], total
