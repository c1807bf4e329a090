"""Recursive-descent parser for ``.bn`` model files.

Grammar (informal)::

    model   := 'model' [NAME] '(' [param {',' param}] ')' '{' block '}'
    param   := NAME ':' ('int' | 'real') ['[' ']']
    block   := {stmt (NEWLINE | ';')}
    stmt    := 'for' NAME 'in' '0' '..' expr '{' block '}'
             | 'observe' '(' NAME {',' NAME} ')'
             | target '=' (FAMILY '(' args ')' '.' 'sample' '(' [expr] ')' | expr)
    target  := NAME {'[' NAME ']'}
    expr    := term {('+' | '-') term}
    term    := unary {('*' | '/') unary}
    unary   := '-' unary | atom
    atom    := NUMBER | NAME {'[' expr {',' expr} ']'} | call | '(' expr ')'
    call    := 'sum' '(' NAME 'in' '0' '..' expr ',' expr ')' | NAME '(' args ')'
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from ..distributions import FAMILIES
from ..errors import ParseError
from .ast import (BUILTINS, BinOp, Call, Decl, DistRef, Index, Loop, ModelAST,
                  Name, Neg, Num, Param, SumExpr)

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>(\#|//)[^\n]*)
  | (?P<nl>\n)
  | (?P<num>\d+\.(?!\.)\d*(?:[eE][-+]?\d+)?|\d+[eE][-+]?\d+|\.\d+(?:[eE][-+]?\d+)?|\d+)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>\.\.|[(){}\[\],:;.=+\-*/])
""", re.VERBOSE)

KEYWORDS = {"model", "for", "in", "observe", "sum"}


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    tokens = []
    line, line_start, pos = 1, 0, 0
    depth = 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if not m:
            raise ParseError(f"unexpected character {source[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        text = m.group()
        col = pos - line_start + 1
        if kind == "nl":
            if depth == 0:
                tokens.append(Token("nl", text, line, col))
            line += 1
            line_start = m.end()
        elif kind in ("num", "name", "op"):
            if text in "([":
                depth += 1
            elif text in ")]":
                depth = max(0, depth - 1)
            tokens.append(Token(kind, text, line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class Parser:
    def __init__(self, source: str):
        self.toks = tokenize(source)
        self.i = 0

    # -- token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, message, tok=None):
        tok = tok or self.tok
        return ParseError(message, tok.line, tok.col)

    def at(self, text) -> bool:
        return self.tok.kind in ("op", "name") and self.tok.text == text

    def accept(self, text) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"syntax error: expected {text!r}, found {found!r}")
        t = self.tok
        self.i += 1
        return t

    def name(self) -> str:
        if self.tok.kind != "name" or self.tok.text in KEYWORDS:
            found = self.tok.text or "end of input"
            raise self.error(f"syntax error: expected a name, found {found!r}")
        t = self.tok
        self.i += 1
        return t.text

    def skip_newlines(self):
        while self.tok.kind == "nl" or self.at(";"):
            self.i += 1

    # -- grammar
    def parse_model(self) -> ModelAST:
        self.skip_newlines()
        self.expect("model")
        name = None
        if self.tok.kind == "name" and not self.at("("):
            name = self.name()
        self.expect("(")
        params = []
        if not self.at(")"):
            params.append(self.param())
            while self.accept(","):
                params.append(self.param())
        self.expect(")")
        self.skip_newlines()
        self.expect("{")
        decls, observed = [], []
        self.block((), decls, observed)
        self.expect("}")
        self.skip_newlines()
        if self.tok.kind != "eof":
            raise self.error(f"syntax error: unexpected {self.tok.text!r} after model")
        return ModelAST(name, tuple(params), tuple(decls), tuple(observed))

    def param(self) -> Param:
        name = self.name()
        self.expect(":")
        t = self.tok
        base = self.name()
        if base not in ("int", "real"):
            raise self.error(f"unknown parameter type {base!r}", t)
        if self.accept("["):
            self.expect("]")
            base += "[]"
        return Param(name, base)

    def block(self, loops, decls, observed):
        self.skip_newlines()
        while not self.at("}") and self.tok.kind != "eof":
            self.statement(loops, decls, observed)
            if not (self.at("}") or self.tok.kind in ("nl", "eof") or self.at(";")):
                raise self.error(f"syntax error: expected end of statement, found {self.tok.text!r}")
            self.skip_newlines()

    def statement(self, loops, decls, observed):
        if self.at("for"):
            self.i += 1
            idx = self.name()
            self.expect("in")
            lo = self.tok
            if lo.kind != "num" or lo.text != "0":
                raise self.error("plate ranges start at 0 (write 0..n)")
            self.i += 1
            self.expect("..")
            upper = self.expr()
            self.skip_newlines()
            self.expect("{")
            self.block(loops + (Loop(idx, upper),), decls, observed)
            self.expect("}")
            return
        if self.at("observe"):
            self.i += 1
            self.expect("(")
            observed.append(self.name())
            while self.accept(","):
                observed.append(self.name())
            self.expect(")")
            return
        start = self.tok
        name = self.name()
        lhs = []
        while self.accept("["):
            lhs.append(self.name())
            while self.accept(","):
                lhs.append(self.name())
            self.expect("]")
        want = [lp.index for lp in loops]
        if lhs and lhs != want:
            raise self.error(
                f"indices of {name} must be the enclosing loop indices {want}", start)
        self.expect("=")
        decls.append(self.rhs(name, loops, start))

    def rhs(self, name, loops, start) -> Decl:
        # distribution draw: FAMILY(args).sample(n?)
        if (self.tok.kind == "name" and self.toks[self.i + 1].text == "("
                and self.tok.text not in BUILTINS and self.tok.text != "sum"
                and self._is_sample_call()):
            ftok = self.tok
            family = self.tok.text
            if family not in FAMILIES:
                raise self.error(f"unknown distribution family {family}", ftok)
            self.i += 1
            self.expect("(")
            args = self.args(")")
            self.expect(")")
            arity = FAMILIES[family].arity
            if len(args) != arity:
                raise self.error(
                    f"arity mismatch: {family} takes {arity} argument(s), got {len(args)}", ftok)
            self.expect(".")
            self.expect("sample")
            self.expect("(")
            count = None if self.at(")") else self.expr()
            self.expect(")")
            return Decl(name, "random", tuple(loops), DistRef(family, tuple(args)),
                        count, None, line=start.line)
        return Decl(name, "deterministic", tuple(loops), None, None, self.expr(), line=start.line)

    def _is_sample_call(self) -> bool:
        depth, j = 0, self.i + 1
        while j < len(self.toks):
            t = self.toks[j]
            if t.text == "(":
                depth += 1
            elif t.text == ")":
                depth -= 1
                if depth == 0:
                    return (self.toks[j + 1].text == "." and
                            self.toks[j + 2].text == "sample")
            elif t.kind == "eof":
                return False
            j += 1
        return False

    def args(self, close) -> list:
        out = []
        if self.at(close):
            return out
        out.append(self.expr())
        while self.accept(","):
            out.append(self.expr())
        return out

    def expr(self):
        e = self.term()
        while self.at("+") or self.at("-"):
            op = self.tok.text
            self.i += 1
            e = BinOp(op, e, self.term())
        return e

    def term(self):
        e = self.unary()
        while self.at("*") or self.at("/"):
            op = self.tok.text
            self.i += 1
            e = BinOp(op, e, self.unary())
        return e

    def unary(self):
        if self.accept("-"):
            operand = self.unary()
            if isinstance(operand, Num):
                return Num(-operand.value)
            return Neg(operand)
        return self.atom()

    def atom(self):
        t = self.tok
        if t.kind == "num":
            self.i += 1
            if re.fullmatch(r"\d+", t.text):
                return Num(int(t.text))
            return Num(float(t.text))
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "name" and t.text == "sum":
            self.i += 1
            self.expect("(")
            idx = self.name()
            self.expect("in")
            lo = self.tok
            if lo.kind != "num" or lo.text != "0":
                raise self.error("sum ranges start at 0 (write 0..n)")
            self.i += 1
            self.expect("..")
            upper = self.expr()
            self.expect(",")
            body = self.expr()
            self.expect(")")
            return SumExpr(idx, upper, body)
        name = self.name()
        if self.at("("):
            if name in FAMILIES:
                raise self.error(f"distribution {name} used as a value; call .sample()", t)
            if name not in BUILTINS:
                raise self.error(f"unknown function {name}", t)
            self.i += 1
            args = self.args(")")
            self.expect(")")
            if len(args) != BUILTINS[name]:
                raise self.error(f"arity mismatch: {name} takes {BUILTINS[name]} argument(s)", t)
            return Call(name, tuple(args))
        indices = []
        while self.accept("["):
            indices.append(self.expr())
            while self.accept(","):
                indices.append(self.expr())
            self.expect("]")
        if indices:
            return Index(name, tuple(indices))
        return Name(name)


def parse_model(source: str) -> ModelAST:
    """Parse model source text into a ``ModelAST``.

    Raises ``ParseError`` carrying the line and column of the offending
    token.
    """
    return Parser(source).parse_model()
