"""
Recursive-descent parser for factor expressions.

Grammar (lowest to highest precedence, all binary levels left associative):

    comparison ::= additive (('>' | '<' | '>=' | '<=' | '==') additive)*
    additive   ::= term (('+' | '-') term)*
    term       ::= unary (('*' | '/') unary)*
    unary      ::= '-' unary | primary
    primary    ::= NUMBER | '$' IDENT | IDENT '(' args ')' | '(' comparison ')'

Function names are case-insensitive. Rolling windows and shifts must be
integer literals.
"""

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import List
from typing import Tuple

from factorstore.core.exceptions import ArityError
from factorstore.core.exceptions import ExpressionSyntaxError
from factorstore.core.exceptions import NonIntegerWindow
from factorstore.core.exceptions import UnknownFunction
from factorstore.expr.nodes import COMPARISON_OPS
from factorstore.expr.nodes import ROLLING_FUNCTIONS
from factorstore.expr.nodes import UNARY_FUNCTIONS
from factorstore.expr.nodes import Binary
from factorstore.expr.nodes import Constant
from factorstore.expr.nodes import Node
from factorstore.expr.nodes import RawAttribute
from factorstore.expr.nodes import Ref
from factorstore.expr.nodes import Rolling
from factorstore.expr.nodes import Unary


class TokenType:
    NUMBER = "NUMBER"
    ATTRIBUTE = "ATTRIBUTE"
    IDENTIFIER = "IDENTIFIER"
    OPERATOR = "OPERATOR"
    LEFT_PAREN = "LEFT_PAREN"
    RIGHT_PAREN = "RIGHT_PAREN"
    COMMA = "COMMA"
    WHITESPACE = "WHITESPACE"
    MISMATCH = "MISMATCH"
    END = "END"


@dataclass
class Token:
    type: str
    value: str
    position: int


TOKEN_PATTERNS = [
    (TokenType.NUMBER, r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"),
    (TokenType.ATTRIBUTE, r"\$[A-Za-z_][A-Za-z0-9_]*"),
    (TokenType.IDENTIFIER, r"[A-Za-z_][A-Za-z0-9_]*"),
    (TokenType.OPERATOR, r">=|<=|==|[-+*/<>]"),
    (TokenType.LEFT_PAREN, r"\("),
    (TokenType.RIGHT_PAREN, r"\)"),
    (TokenType.COMMA, r","),
    (TokenType.WHITESPACE, r"\s+"),
    (TokenType.MISMATCH, r"."),
]
TOKEN_REGEX = re.compile(
    "|".join(f"(?P<{name}>{pattern})" for name, pattern in TOKEN_PATTERNS)
)

WINDOWED_FUNCTIONS = ROLLING_FUNCTIONS + ("REF",)


def tokenize(text: str) -> List[Token]:
    """
    Split expression text into tokens with byte offsets.

    Raises:
        ExpressionSyntaxError: On a character that starts no token
    """
    tokens = []
    for match in TOKEN_REGEX.finditer(text):
        kind = match.lastgroup
        offset = len(text[: match.start()].encode("utf-8"))
        if kind == TokenType.WHITESPACE:
            continue
        if kind == TokenType.MISMATCH:
            raise ExpressionSyntaxError(
                f"unexpected character {match.group()!r}", offset, text
            )
        tokens.append(Token(kind, match.group(), offset))
    tokens.append(Token(TokenType.END, "", len(text.encode("utf-8"))))
    return tokens


class ExpressionParser:
    """Parser over the token stream of one expression."""

    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.pos = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def error(self, message: str, token: Token) -> ExpressionSyntaxError:
        return ExpressionSyntaxError(message, token.position, self.text)

    def expect(self, kind: str, what: str) -> Token:
        if self.current.type != kind:
            found = self.current.value or "end of input"
            raise self.error(f"expected {what}, found {found!r}", self.current)
        return self.advance()

    def parse(self) -> Node:
        if self.current.type == TokenType.END:
            raise self.error("empty expression", self.current)
        node = self.comparison()
        if self.current.type != TokenType.END:
            raise self.error(f"unexpected {self.current.value!r}", self.current)
        return node

    def binary_level(self, operators: Tuple[str, ...], operand) -> Node:
        node = operand()
        while (
            self.current.type == TokenType.OPERATOR
            and self.current.value in operators
        ):
            op = self.advance().value
            node = Binary(op, node, operand())
        return node

    def comparison(self) -> Node:
        return self.binary_level(COMPARISON_OPS, self.additive)

    def additive(self) -> Node:
        return self.binary_level(("+", "-"), self.term)

    def term(self) -> Node:
        return self.binary_level(("*", "/"), self.unary)

    def unary(self) -> Node:
        if self.current.type == TokenType.OPERATOR and self.current.value == "-":
            self.advance()
            return Unary("neg", self.unary())
        return self.primary()

    def primary(self) -> Node:
        token = self.current
        if token.type == TokenType.NUMBER:
            self.advance()
            return Constant(float(token.value))
        if token.type == TokenType.ATTRIBUTE:
            self.advance()
            return RawAttribute(token.value[1:])
        if token.type == TokenType.LEFT_PAREN:
            self.advance()
            node = self.comparison()
            self.expect(TokenType.RIGHT_PAREN, "')'")
            return node
        if token.type == TokenType.IDENTIFIER:
            return self.call()
        found = token.value or "end of input"
        raise self.error(f"expected a value, found {found!r}", token)

    def call(self) -> Node:
        name_token = self.advance()
        name = name_token.value.upper()
        if self.current.type != TokenType.LEFT_PAREN:
            raise self.error(
                f"bare name {name_token.value!r}; raw attributes are written "
                f"${name_token.value}",
                name_token,
            )
        if name not in UNARY_FUNCTIONS and name not in WINDOWED_FUNCTIONS:
            raise UnknownFunction(
                f"unknown function {name_token.value!r}",
                name_token.position,
                self.text,
            )
        self.advance()

        args: List[Tuple[Node, Token, int]] = []
        if self.current.type != TokenType.RIGHT_PAREN:
            while True:
                start = self.pos
                args.append((self.comparison(), self.tokens[start], self.pos - start))
                if self.current.type != TokenType.COMMA:
                    break
                self.advance()
        self.expect(TokenType.RIGHT_PAREN, "')' or ','")

        expected = 1 if name in UNARY_FUNCTIONS else 2
        if len(args) != expected:
            raise ArityError(
                f"{name} takes {expected} argument(s), got {len(args)}",
                name_token.position,
                self.text,
            )
        child = args[0][0]
        if name in UNARY_FUNCTIONS:
            return Unary(name.lower(), child)

        _, first, count = args[1]
        minimum = 0 if name == "REF" else 1
        if count != 1 or first.type != TokenType.NUMBER or not first.value.isdigit():
            raise NonIntegerWindow(
                f"{name} window must be an integer literal", first.position, self.text
            )
        window = int(first.value)
        if window < minimum:
            raise NonIntegerWindow(
                f"{name} window must be >= {minimum}, got {window}",
                first.position,
                self.text,
            )
        if name == "REF":
            return Ref(child, window)
        return Rolling(name, child, window)


@lru_cache(maxsize=1024)
def parse(text: str) -> Node:
    """
    Parse expression text into a syntax tree.

    Raises:
        ExpressionSyntaxError: Malformed text (carries the byte offset)
        UnknownFunction: Function name outside the vocabulary
        ArityError: Wrong number of function arguments
        NonIntegerWindow: Window or shift is not a valid integer literal
    """
    return ExpressionParser(text).parse()
