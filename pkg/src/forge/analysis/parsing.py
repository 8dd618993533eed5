"""Error-recovering recursive-descent parser for the generated Python subset.

Covers modules, imports, def/class, assignments, control flow, with/try,
calls, attribute access, literals, comprehensions, and operator expressions.
Never raises on malformed input: an error node subsumes the offending span
and parsing continues.  Every significant token of the source appears as
exactly one leaf of the tree, in source order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .tokens import Token, TokenStream, tokenize

_MAX_EXPR_DEPTH = 150

_COMPARE_OPS = {"<", ">", "<=", ">=", "==", "!="}
_AUG_OPS = {"+=", "-=", "*=", "/=", "//=", "%=", "**=", ">>=", "<<=", "&=", "|=", "^=", "@="}
_STRUCTURAL = ("newline", "indent", "dedent")


@dataclass
class Node:
    kind: str
    children: list["Node"] = field(default_factory=list)
    token: Token | None = None

    @property
    def is_leaf(self) -> bool:
        return self.token is not None

    def leaves(self) -> list[Token]:
        if self.token is not None:
            return [self.token]
        out: list[Token] = []
        stack = list(reversed(self.children))
        while stack:
            node = stack.pop()
            if node.token is not None:
                out.append(node.token)
            else:
                stack.extend(reversed(node.children))
        return out

    def token_span(self) -> tuple[int, int] | None:
        """(start_offset, end_offset) over the node's leaves, None if empty."""
        toks = self.leaves()
        if not toks:
            return None
        return toks[0].offset, toks[-1].offset + len(toks[-1].text)

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass
class SyntaxTree:
    root: Node
    has_errors: bool
    stream: TokenStream


def _leaf(tok: Token) -> Node:
    return Node(tok.kind, [], tok)


class _ParseError(Exception):
    pass


class _Parser:
    def __init__(self, stream: TokenStream):
        self.stream = stream
        # comments are trivia; newline/indent/dedent steer statement structure
        self.toks = [t for t in stream.tokens if t.kind != "comment"]
        self.pos = 0
        self.depth = 0
        self.had_error = False

    # -- cursor helpers ------------------------------------------------

    def peek(self, ahead: int = 0) -> Token | None:
        i = self.pos + ahead
        return self.toks[i] if i < len(self.toks) else None

    def at(self, kind: str | None = None, text: str | None = None) -> bool:
        t = self.peek()
        if t is None:
            return False
        if kind is not None and t.kind != kind:
            return False
        if text is not None and t.text != text:
            return False
        return True

    def at_any(self, *texts: str) -> bool:
        t = self.peek()
        return t is not None and t.text in texts and t.kind in ("keyword", "operator", "punctuation")

    def advance(self) -> Token:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, kind: str | None = None, text: str | None = None) -> Token:
        if not self.at(kind, text):
            raise _ParseError(f"expected {text or kind} at token {self.peek()}")
        return self.advance()

    def eat_structural(self) -> None:
        while self.at("newline") or self.at("indent") or self.at("dedent"):
            self.advance()

    # -- module / statements --------------------------------------------

    def parse_module(self) -> Node:
        stmts: list[Node] = []
        while self.peek() is not None:
            if self.peek().kind in _STRUCTURAL:
                self.advance()
                continue
            stmts.append(self.statement())
        return Node("module", stmts)

    def statement(self) -> Node:
        start = self.pos
        try:
            return self._statement_inner()
        except _ParseError:
            self.had_error = True
            return self._recover(start)

    def _recover(self, start: int) -> Node:
        # rewind to the statement start, swallow the line into an error node
        self.pos = start
        leaves: list[Node] = []
        while self.peek() is not None and not self.at("newline"):
            t = self.advance()
            if t.kind not in _STRUCTURAL:
                leaves.append(_leaf(t))
        if self.at("newline"):
            self.advance()
        return Node("error", leaves)

    def _statement_inner(self) -> Node:
        t = self.peek()
        if t is None:
            raise _ParseError("unexpected end of input")
        if t.kind == "operator" and t.text == "@":
            return self.decorated()
        if t.kind == "keyword":
            method = {
                "if": self.if_stmt,
                "while": self.while_stmt,
                "for": self.for_stmt,
                "try": self.try_stmt,
                "with": self.with_stmt,
                "def": self.function_def,
                "class": self.class_def,
            }.get(t.text)
            if method is not None:
                return method()
        node = self.simple_statement()
        if self.at("punctuation", ";"):
            parts = [node]
            while self.at("punctuation", ";"):
                parts.append(_leaf(self.advance()))
                if self.at("newline") or self.peek() is None:
                    break
                parts.append(self.simple_statement())
            self.end_of_line()
            return Node("multi_stmt", parts)
        self.end_of_line()
        return node

    def end_of_line(self) -> None:
        if self.at("newline"):
            self.advance()
            return
        if self.peek() is None:
            return
        raise _ParseError(f"expected end of line, found {self.peek()}")

    def simple_statement(self) -> Node:
        t = self.peek()
        if t.kind == "keyword":
            if t.text == "return":
                kw = _leaf(self.advance())
                if self.at("newline") or self.peek() is None or self.at("punctuation", ";"):
                    return Node("return_stmt", [kw])
                return Node("return_stmt", [kw, self.expr_list()])
            if t.text in ("pass", "break", "continue"):
                return Node(f"{t.text}_stmt", [_leaf(self.advance())])
            if t.text == "raise":
                kw = _leaf(self.advance())
                kids = [kw]
                if not (self.at("newline") or self.peek() is None or self.at("punctuation", ";")):
                    kids.append(self.expression())
                    if self.at("keyword", "from"):
                        kids.append(_leaf(self.advance()))
                        kids.append(self.expression())
                return Node("raise_stmt", kids)
            if t.text == "assert":
                kids = [_leaf(self.advance()), self.expression()]
                if self.at("punctuation", ","):
                    kids.append(_leaf(self.advance()))
                    kids.append(self.expression())
                return Node("assert_stmt", kids)
            if t.text == "del":
                return Node("del_stmt", [_leaf(self.advance()), self.expr_list()])
            if t.text in ("global", "nonlocal"):
                kids = [_leaf(self.advance()), _leaf(self.expect("identifier"))]
                while self.at("punctuation", ","):
                    kids.append(_leaf(self.advance()))
                    kids.append(_leaf(self.expect("identifier")))
                return Node(f"{t.text}_stmt", kids)
            if t.text == "import":
                return self.import_stmt()
            if t.text == "from":
                return self.from_import_stmt()
        return self.expr_statement()

    def import_stmt(self) -> Node:
        kids = [_leaf(self.expect("keyword", "import")), self.dotted_name()]
        if self.at("keyword", "as"):
            kids.append(_leaf(self.advance()))
            kids.append(_leaf(self.expect("identifier")))
        while self.at("punctuation", ","):
            kids.append(_leaf(self.advance()))
            kids.append(self.dotted_name())
            if self.at("keyword", "as"):
                kids.append(_leaf(self.advance()))
                kids.append(_leaf(self.expect("identifier")))
        return Node("import_stmt", kids)

    def from_import_stmt(self) -> Node:
        kids = [_leaf(self.expect("keyword", "from"))]
        dots: list[Node] = []
        while self.at("punctuation", ".") or self.at("operator", "..."):
            dots.append(_leaf(self.advance()))
        kids.extend(dots)
        if not self.at("keyword", "import"):
            kids.append(self.dotted_name())
        elif not dots:
            raise _ParseError("from requires a module or leading dots")
        kids.append(_leaf(self.expect("keyword", "import")))
        if self.at("operator", "*"):
            kids.append(_leaf(self.advance()))
            return Node("from_import_stmt", kids)
        parenthesized = self.at("punctuation", "(")
        if parenthesized:
            kids.append(_leaf(self.advance()))
        kids.append(self.import_name())
        while self.at("punctuation", ","):
            kids.append(_leaf(self.advance()))
            if parenthesized and self.at("punctuation", ")"):
                break
            kids.append(self.import_name())
        if parenthesized:
            kids.append(_leaf(self.expect("punctuation", ")")))
        return Node("from_import_stmt", kids)

    def import_name(self) -> Node:
        kids = [_leaf(self.expect("identifier"))]
        if self.at("keyword", "as"):
            kids.append(_leaf(self.advance()))
            kids.append(_leaf(self.expect("identifier")))
        return Node("import_name", kids)

    def dotted_name(self) -> Node:
        kids = [_leaf(self.expect("identifier"))]
        while self.at("punctuation", ".") and self.peek(1) is not None and self.peek(1).kind == "identifier":
            kids.append(_leaf(self.advance()))
            kids.append(_leaf(self.advance()))
        return Node("dotted_name", kids)

    def expr_statement(self) -> Node:
        first = self.expr_list()
        t = self.peek()
        if t is not None and t.kind == "punctuation" and t.text == ":":
            colon = _leaf(self.advance())
            annotation = self.expression()
            kids = [first, colon, annotation]
            if self.at("operator", "="):
                kids.append(_leaf(self.advance()))
                kids.append(self.expr_list())
            return Node("ann_assign_stmt", kids)
        if t is not None and t.kind == "operator" and t.text in _AUG_OPS:
            op = _leaf(self.advance())
            return Node("aug_assign_stmt", [first, op, self.expr_list()])
        if t is not None and t.kind == "operator" and t.text == "=":
            kids = [first]
            while self.at("operator", "="):
                kids.append(_leaf(self.advance()))
                kids.append(self.expr_list())
            return Node("assign_stmt", kids)
        return Node("expr_stmt", [first])

    # -- compound statements ---------------------------------------------

    def block(self) -> Node:
        if self.at("newline"):
            self.advance()
            self.expect("indent")
            stmts: list[Node] = []
            while self.peek() is not None and not self.at("dedent"):
                if self.peek().kind in ("newline", "indent"):
                    self.advance()
                    continue
                stmts.append(self.statement())
            if self.at("dedent"):
                self.advance()
            if not stmts:
                raise _ParseError("empty block")
            return Node("block", stmts)
        stmt = self.simple_statement()
        parts = [stmt]
        while self.at("punctuation", ";"):
            parts.append(_leaf(self.advance()))
            if self.at("newline") or self.peek() is None:
                break
            parts.append(self.simple_statement())
        self.end_of_line()
        return Node("block", parts)

    def if_stmt(self) -> Node:
        kids = [_leaf(self.expect("keyword", "if")), self.expression(),
                _leaf(self.expect("punctuation", ":")), self.block()]
        while self.at("keyword", "elif"):
            kids.append(Node("elif_clause", [
                _leaf(self.advance()), self.expression(),
                _leaf(self.expect("punctuation", ":")), self.block()]))
        if self.at("keyword", "else"):
            kids.append(self.else_clause())
        return Node("if_stmt", kids)

    def else_clause(self) -> Node:
        return Node("else_clause", [
            _leaf(self.expect("keyword", "else")),
            _leaf(self.expect("punctuation", ":")), self.block()])

    def while_stmt(self) -> Node:
        kids = [_leaf(self.expect("keyword", "while")), self.expression(),
                _leaf(self.expect("punctuation", ":")), self.block()]
        if self.at("keyword", "else"):
            kids.append(self.else_clause())
        return Node("while_stmt", kids)

    def for_stmt(self) -> Node:
        kids = [_leaf(self.expect("keyword", "for")), self.target_list(),
                _leaf(self.expect("keyword", "in")), self.expr_list(),
                _leaf(self.expect("punctuation", ":")), self.block()]
        if self.at("keyword", "else"):
            kids.append(self.else_clause())
        return Node("for_stmt", kids)

    def with_stmt(self) -> Node:
        kids = [_leaf(self.expect("keyword", "with")), self.with_item()]
        while self.at("punctuation", ","):
            kids.append(_leaf(self.advance()))
            kids.append(self.with_item())
        kids.append(_leaf(self.expect("punctuation", ":")))
        kids.append(self.block())
        return Node("with_stmt", kids)

    def with_item(self) -> Node:
        kids = [self.expression()]
        if self.at("keyword", "as"):
            kids.append(_leaf(self.advance()))
            kids.append(self.primary_target())
        return Node("with_item", kids)

    def try_stmt(self) -> Node:
        kids = [_leaf(self.expect("keyword", "try")),
                _leaf(self.expect("punctuation", ":")), self.block()]
        saw_handler = False
        while self.at("keyword", "except"):
            saw_handler = True
            ekids = [_leaf(self.advance())]
            if not self.at("punctuation", ":"):
                ekids.append(self.expression())
                if self.at("keyword", "as"):
                    ekids.append(_leaf(self.advance()))
                    ekids.append(_leaf(self.expect("identifier")))
            ekids.append(_leaf(self.expect("punctuation", ":")))
            ekids.append(self.block())
            kids.append(Node("except_clause", ekids))
        if self.at("keyword", "else") and saw_handler:
            kids.append(self.else_clause())
        if self.at("keyword", "finally"):
            kids.append(Node("finally_clause", [
                _leaf(self.advance()),
                _leaf(self.expect("punctuation", ":")), self.block()]))
            saw_handler = True
        if not saw_handler:
            raise _ParseError("try without except or finally")
        return Node("try_stmt", kids)

    def decorated(self) -> Node:
        decorators: list[Node] = []
        while self.at("operator", "@"):
            dkids = [_leaf(self.advance()), self.postfix_expr()]
            self.end_of_line()
            self.eat_structural_blank()
            decorators.append(Node("decorator", dkids))
        if self.at("keyword", "def"):
            target = self.function_def()
        elif self.at("keyword", "class"):
            target = self.class_def()
        else:
            raise _ParseError("decorator must be followed by def or class")
        return Node("decorated", decorators + [target])

    def eat_structural_blank(self) -> None:
        while self.at("newline"):
            self.advance()

    def function_def(self) -> Node:
        kids = [_leaf(self.expect("keyword", "def")), _leaf(self.expect("identifier")),
                _leaf(self.expect("punctuation", "("))]
        kids.append(self.parameters())
        kids.append(_leaf(self.expect("punctuation", ")")))
        if self.at("operator", "->"):
            kids.append(_leaf(self.advance()))
            kids.append(self.expression())
        kids.append(_leaf(self.expect("punctuation", ":")))
        kids.append(self.block())
        return Node("function_def", kids)

    def parameters(self) -> Node:
        kids: list[Node] = []
        while not self.at("punctuation", ")") and self.peek() is not None:
            kids.append(self.param())
            if self.at("punctuation", ","):
                kids.append(_leaf(self.advance()))
            elif not self.at("punctuation", ")"):
                raise _ParseError("expected , or ) in parameter list")
        return Node("parameters", kids)

    def param(self) -> Node:
        kids: list[Node] = []
        if self.at("operator", "*") or self.at("operator", "**"):
            kids.append(_leaf(self.advance()))
            if self.at("identifier"):
                kids.append(_leaf(self.advance()))
        elif self.at("operator", "/"):
            kids.append(_leaf(self.advance()))
        else:
            kids.append(_leaf(self.expect("identifier")))
            if self.at("punctuation", ":"):
                kids.append(_leaf(self.advance()))
                kids.append(self.expression())
            if self.at("operator", "="):
                kids.append(_leaf(self.advance()))
                kids.append(self.expression())
        return Node("param", kids)

    def class_def(self) -> Node:
        kids = [_leaf(self.expect("keyword", "class")), _leaf(self.expect("identifier"))]
        if self.at("punctuation", "("):
            kids.append(_leaf(self.advance()))
            kids.append(self.call_arguments())
            kids.append(_leaf(self.expect("punctuation", ")")))
        kids.append(_leaf(self.expect("punctuation", ":")))
        kids.append(self.block())
        return Node("class_def", kids)

    # -- expressions ------------------------------------------------------

    def expr_list(self) -> Node:
        """Comma-separated expressions; a bare single expression passes through."""
        first = self.expression()
        if not self.at("punctuation", ","):
            return first
        kids = [first]
        while self.at("punctuation", ","):
            kids.append(_leaf(self.advance()))
            if self._at_expression_start():
                kids.append(self.expression())
            else:
                break
        return Node("tuple_expr", kids)

    def target_list(self) -> Node:
        return self.expr_list()

    def primary_target(self) -> Node:
        return self.postfix_expr()

    def _at_expression_start(self) -> bool:
        t = self.peek()
        if t is None:
            return False
        if t.kind in ("identifier", "number", "string"):
            return True
        if t.kind == "keyword":
            return t.text in ("True", "False", "None", "not", "lambda")
        if t.kind == "operator":
            return t.text in ("+", "-", "~", "*", "**", "...")
        if t.kind == "punctuation":
            return t.text in ("(", "[", "{")
        return False

    def expression(self) -> Node:
        self.depth += 1
        try:
            if self.depth > _MAX_EXPR_DEPTH:
                raise _ParseError("expression nesting too deep")
            return self.ternary()
        finally:
            self.depth -= 1

    def ternary(self) -> Node:
        if self.at("keyword", "lambda"):
            return self.lambda_def()
        value = self.or_expr()
        if self.at("keyword", "if"):
            kids = [value, _leaf(self.advance()), self.or_expr(),
                    _leaf(self.expect("keyword", "else")), self.expression()]
            return Node("conditional_expr", kids)
        return value

    def lambda_def(self) -> Node:
        kids = [_leaf(self.expect("keyword", "lambda"))]
        params: list[Node] = []
        while not self.at("punctuation", ":") and self.peek() is not None:
            pk: list[Node] = []
            if self.at("operator", "*") or self.at("operator", "**"):
                pk.append(_leaf(self.advance()))
            pk.append(_leaf(self.expect("identifier")))
            if self.at("operator", "="):
                pk.append(_leaf(self.advance()))
                pk.append(self.expression())
            params.append(Node("param", pk))
            if self.at("punctuation", ","):
                params.append(_leaf(self.advance()))
            else:
                break
        kids.append(Node("parameters", params))
        kids.append(_leaf(self.expect("punctuation", ":")))
        kids.append(self.expression())
        return Node("lambda_def", kids)

    def or_expr(self) -> Node:
        node = self.and_expr()
        while self.at("keyword", "or"):
            node = Node("boolop_expr", [node, _leaf(self.advance()), self.and_expr()])
        return node

    def and_expr(self) -> Node:
        node = self.not_expr()
        while self.at("keyword", "and"):
            node = Node("boolop_expr", [node, _leaf(self.advance()), self.not_expr()])
        return node

    def not_expr(self) -> Node:
        if self.at("keyword", "not"):
            return Node("unaryop_expr", [_leaf(self.advance()), self.not_expr()])
        return self.comparison()

    def comparison(self) -> Node:
        node = self.bit_or()
        ops: list[Node] = []
        while True:
            t = self.peek()
            if t is None:
                break
            if t.kind == "operator" and t.text in _COMPARE_OPS:
                ops.append(_leaf(self.advance()))
            elif t.kind == "keyword" and t.text == "in":
                ops.append(_leaf(self.advance()))
            elif t.kind == "keyword" and t.text == "is":
                ops.append(_leaf(self.advance()))
                if self.at("keyword", "not"):
                    ops.append(_leaf(self.advance()))
            elif t.kind == "keyword" and t.text == "not" and self.peek(1) is not None \
                    and self.peek(1).kind == "keyword" and self.peek(1).text == "in":
                ops.append(_leaf(self.advance()))
                ops.append(_leaf(self.advance()))
            else:
                break
            ops.append(self.bit_or())
        if not ops:
            return node
        return Node("comparison_expr", [node] + ops)

    def _binop_chain(self, sub, texts: tuple[str, ...]) -> Node:
        node = sub()
        while self.at("operator") and self.peek().text in texts:
            node = Node("binop_expr", [node, _leaf(self.advance()), sub()])
        return node

    def bit_or(self) -> Node:
        return self._binop_chain(self.bit_xor, ("|",))

    def bit_xor(self) -> Node:
        return self._binop_chain(self.bit_and, ("^",))

    def bit_and(self) -> Node:
        return self._binop_chain(self.shift_expr, ("&",))

    def shift_expr(self) -> Node:
        return self._binop_chain(self.arith_expr, ("<<", ">>"))

    def arith_expr(self) -> Node:
        return self._binop_chain(self.term, ("+", "-"))

    def term(self) -> Node:
        return self._binop_chain(self.factor, ("*", "/", "//", "%", "@"))

    def factor(self) -> Node:
        if self.at("operator") and self.peek().text in ("+", "-", "~"):
            return Node("unaryop_expr", [_leaf(self.advance()), self.factor()])
        return self.power()

    def power(self) -> Node:
        node = self.postfix_expr()
        if self.at("operator", "**"):
            return Node("binop_expr", [node, _leaf(self.advance()), self.factor()])
        return node

    def postfix_expr(self) -> Node:
        node = self.atom()
        while True:
            if self.at("punctuation", "("):
                kids = [node, _leaf(self.advance()), self.call_arguments(),
                        _leaf(self.expect("punctuation", ")"))]
                node = Node("call", kids)
            elif self.at("punctuation", "."):
                dot = _leaf(self.advance())
                name = _leaf(self.expect("identifier"))
                node = Node("attribute", [node, dot, name])
            elif self.at("punctuation", "["):
                kids = [node, _leaf(self.advance()), self.subscript_body(),
                        _leaf(self.expect("punctuation", "]"))]
                node = Node("subscript", kids)
            else:
                return node

    def call_arguments(self) -> Node:
        kids: list[Node] = []
        while not self.at("punctuation", ")") and self.peek() is not None:
            kids.append(self.call_argument())
            if self.at("keyword", "for"):
                kids[-1] = self.comprehension(kids[-1])
            if self.at("punctuation", ","):
                kids.append(_leaf(self.advance()))
            elif not self.at("punctuation", ")"):
                raise _ParseError("expected , or ) in call")
        return Node("arguments", kids)

    def call_argument(self) -> Node:
        if self.at("operator", "*") or self.at("operator", "**"):
            return Node("star_arg", [_leaf(self.advance()), self.expression()])
        if self.at("identifier") and self.peek(1) is not None \
                and self.peek(1).kind == "operator" and self.peek(1).text == "=":
            return Node("keyword_arg", [_leaf(self.advance()), _leaf(self.advance()),
                                        self.expression()])
        return self.expression()

    def subscript_body(self) -> Node:
        parts: list[Node] = []
        saw_colon = False
        while not self.at("punctuation", "]") and self.peek() is not None:
            if self.at("punctuation", ":"):
                saw_colon = True
                parts.append(_leaf(self.advance()))
                continue
            if self.at("punctuation", ","):
                parts.append(_leaf(self.advance()))
                continue
            parts.append(self.expression())
        if saw_colon:
            return Node("slice_expr", parts)
        if len(parts) == 1:
            return parts[0]
        return Node("index_tuple", parts)

    def comprehension(self, elt: Node) -> Node:
        kids = [elt]
        while self.at("keyword", "for") or self.at("keyword", "if"):
            if self.at("keyword", "for"):
                kids.append(_leaf(self.advance()))
                kids.append(self.target_list_in_comp())
                kids.append(_leaf(self.expect("keyword", "in")))
                kids.append(self.or_expr())
            else:
                kids.append(_leaf(self.advance()))
                kids.append(self.or_expr())
        return Node("comprehension", kids)

    def target_list_in_comp(self) -> Node:
        first = self.primary_target()
        if not self.at("punctuation", ","):
            return first
        kids = [first]
        while self.at("punctuation", ","):
            kids.append(_leaf(self.advance()))
            if self.at("keyword", "in"):
                break
            kids.append(self.primary_target())
        return Node("tuple_expr", kids)

    def atom(self) -> Node:
        t = self.peek()
        if t is None:
            raise _ParseError("unexpected end of input in expression")
        if t.kind == "identifier":
            return _leaf(self.advance())
        if t.kind == "number":
            return _leaf(self.advance())
        if t.kind == "string":
            first = _leaf(self.advance())
            if self.at("string"):
                kids = [first]
                while self.at("string"):
                    kids.append(_leaf(self.advance()))
                return Node("string_concat", kids)
            return first
        if t.kind == "keyword" and t.text in ("True", "False", "None"):
            return _leaf(self.advance())
        if t.kind == "operator" and t.text == "...":
            return _leaf(self.advance())
        if t.kind == "operator" and t.text == "*":
            return Node("star_expr", [_leaf(self.advance()), self.postfix_expr()])
        if t.kind == "punctuation" and t.text == "(":
            return self.paren_atom()
        if t.kind == "punctuation" and t.text == "[":
            return self.list_atom()
        if t.kind == "punctuation" and t.text == "{":
            return self.brace_atom()
        raise _ParseError(f"unexpected token {t}")

    def paren_atom(self) -> Node:
        open_tok = _leaf(self.expect("punctuation", "("))
        if self.at("punctuation", ")"):
            return Node("tuple_expr", [open_tok, _leaf(self.advance())])
        inner = self.expression()
        if self.at("keyword", "for"):
            comp = self.comprehension(inner)
            return Node("generator_expr", [open_tok, comp, _leaf(self.expect("punctuation", ")"))])
        if self.at("punctuation", ","):
            kids = [open_tok, inner]
            while self.at("punctuation", ","):
                kids.append(_leaf(self.advance()))
                if self.at("punctuation", ")"):
                    break
                kids.append(self.expression())
            kids.append(_leaf(self.expect("punctuation", ")")))
            return Node("tuple_expr", kids)
        return Node("paren_expr", [open_tok, inner, _leaf(self.expect("punctuation", ")"))])

    def list_atom(self) -> Node:
        open_tok = _leaf(self.expect("punctuation", "["))
        if self.at("punctuation", "]"):
            return Node("list_expr", [open_tok, _leaf(self.advance())])
        first = self.expression()
        if self.at("keyword", "for"):
            comp = self.comprehension(first)
            return Node("list_comp", [open_tok, comp, _leaf(self.expect("punctuation", "]"))])
        kids = [open_tok, first]
        while self.at("punctuation", ","):
            kids.append(_leaf(self.advance()))
            if self.at("punctuation", "]"):
                break
            kids.append(self.expression())
        kids.append(_leaf(self.expect("punctuation", "]")))
        return Node("list_expr", kids)

    def brace_atom(self) -> Node:
        open_tok = _leaf(self.expect("punctuation", "{"))
        if self.at("punctuation", "}"):
            return Node("dict_expr", [open_tok, _leaf(self.advance())])
        if self.at("operator", "**"):
            first = Node("star_arg", [_leaf(self.advance()), self.expression()])
            return self._dict_tail(open_tok, first)
        first = self.expression()
        if self.at("punctuation", ":"):
            colon = _leaf(self.advance())
            value = self.expression()
            item = Node("dict_item", [first, colon, value])
            if self.at("keyword", "for"):
                comp = self.comprehension(item)
                return Node("dict_comp", [open_tok, comp, _leaf(self.expect("punctuation", "}"))])
            return self._dict_tail(open_tok, item)
        if self.at("keyword", "for"):
            comp = self.comprehension(first)
            return Node("set_comp", [open_tok, comp, _leaf(self.expect("punctuation", "}"))])
        kids = [open_tok, first]
        while self.at("punctuation", ","):
            kids.append(_leaf(self.advance()))
            if self.at("punctuation", "}"):
                break
            kids.append(self.expression())
        kids.append(_leaf(self.expect("punctuation", "}")))
        return Node("set_expr", kids)

    def _dict_tail(self, open_tok: Node, first: Node) -> Node:
        kids = [open_tok, first]
        while self.at("punctuation", ","):
            kids.append(_leaf(self.advance()))
            if self.at("punctuation", "}"):
                break
            if self.at("operator", "**"):
                kids.append(Node("star_arg", [_leaf(self.advance()), self.expression()]))
                continue
            key = self.expression()
            colon = _leaf(self.expect("punctuation", ":"))
            value = self.expression()
            kids.append(Node("dict_item", [key, colon, value]))
        kids.append(_leaf(self.expect("punctuation", "}")))
        return Node("dict_expr", kids)


def parse_tokens(stream: TokenStream) -> SyntaxTree:
    parser = _Parser(stream)
    root = parser.parse_module()
    has_errors = parser.had_error or any(n.kind == "error" for n in root.walk())
    return SyntaxTree(root=root, has_errors=has_errors, stream=stream)


def parse(source: str) -> SyntaxTree:
    return parse_tokens(tokenize(source))


def dump(node: Node, indent: int = 0) -> str:
    """Indented one-node-per-line rendering, for the debug CLI."""
    pad = "  " * indent
    if node.token is not None:
        return f"{pad}{node.kind} {node.token.text!r}"
    lines = [f"{pad}{node.kind}"]
    for child in node.children:
        lines.append(dump(child, indent + 1))
    return "\n".join(lines)
