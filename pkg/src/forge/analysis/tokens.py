"""Total lexer for the Python subset the pipeline emits.

Never raises: unlexable characters become single-char operator tokens with a
diagnostic, unterminated strings are captured to the end of line (or file for
triple quotes), and indentation is tracked with synthetic indent/dedent
tokens.  Non-synthetic token texts plus the whitespace between them reproduce
the source exactly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

# Frozen Python keyword list (independent of the running interpreter version).
KEYWORDS = frozenset(
    """False None True and as assert async await break class continue def del
    elif else except finally for from global if import in is lambda nonlocal
    not or pass raise return try while with yield""".split()
)

SIGNIFICANT_KINDS = frozenset(
    {"keyword", "identifier", "number", "string", "operator", "punctuation"}
)

_OPERATORS_3 = ("**=", "//=", ">>=", "<<=", "...")
_OPERATORS_2 = (
    "**", "//", ">>", "<<", "<=", ">=", "==", "!=", "->", ":=",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "@=",
)
_OPERATORS_1 = frozenset("+-*/%@&|^~<>=")
_PUNCTUATION = frozenset("()[]{},:;.")
_OPEN_BRACKETS = frozenset("([{")
_CLOSE_BRACKETS = frozenset(")]}")

_IDENT_RE = re.compile(r"[^\W\d]\w*", re.UNICODE)
_NUMBER_RE = re.compile(
    r"""
    0[xX][0-9a-fA-F_]+
    | 0[oO][0-7_]+
    | 0[bB][01_]+
    | (?:\d[\d_]*\.[\d_]*|\.\d[\d_]*|\d[\d_]*)(?:[eE][+-]?\d[\d_]*)?[jJ]?
    """,
    re.VERBOSE,
)
@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int
    offset: int

    @property
    def synthetic(self) -> bool:
        return self.kind in ("indent", "dedent") or self.text == ""


@dataclass
class TokenStream:
    tokens: list[Token] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)


def significant_tokens(stream: TokenStream) -> list[Token]:
    """Tokens that carry program content (everything but trivia/synthetics)."""
    return [t for t in stream.tokens if t.kind in SIGNIFICANT_KINDS]


def _is_string_prefix(text: str) -> bool:
    return len(text) <= 2 and text.lower() in ("r", "b", "u", "f", "rb", "br", "fr", "rf")


def tokenize(source: str) -> TokenStream:
    tokens: list[Token] = []
    diagnostics: list[str] = []
    n = len(source)
    i = 0
    line = 1
    line_start = 0
    indents = [0]
    depth = 0
    logical_has_code = False
    pending_indent = True

    def emit(kind: str, text: str, tline: int, toffset: int, tline_start: int):
        tokens.append(Token(kind, text, tline, toffset - tline_start, toffset))

    def newline_at(offset: int):
        nonlocal line, line_start
        line += 1
        line_start = offset + 1

    def scan_string(start: int, quote_pos: int) -> int:
        """Return end offset (exclusive) of the string starting at ``start``
        whose first quote character sits at ``quote_pos``."""
        nonlocal line, line_start
        q = source[quote_pos]
        triple = source.startswith(q * 3, quote_pos)
        j = quote_pos + (3 if triple else 1)
        closer = q * 3 if triple else q
        while j < n:
            ch = source[j]
            if ch == "\\" and j + 1 < n:
                if source[j + 1] == "\n":
                    newline_at(j + 1)
                j += 2
                continue
            if source.startswith(closer, j):
                return j + len(closer)
            if ch == "\n":
                if not triple:
                    diagnostics.append(f"line {line}: unterminated string")
                    return j
                newline_at(j)
            j += 1
        diagnostics.append(f"line {line}: unterminated string at end of file")
        return n

    while True:
        if pending_indent and depth == 0:
            j = i
            width = 0
            while j < n and (
                source[j] in " \t\f\v"
                or (source[j] == "\r" and not source.startswith("\r\n", j))
            ):
                width = width + (8 - width % 8) if source[j] == "\t" else width + 1
                j += 1
            if j >= n:
                i = j
                break
            nxt = source[j]
            if nxt in "\r\n":
                while j < n and source[j] != "\n":
                    j += 1
                if j < n:
                    newline_at(j)
                    j += 1
                i = j
                continue
            if nxt == "#":
                end = j
                while end < n and source[end] not in "\r\n":
                    end += 1
                emit("comment", source[j:end], line, j, line_start)
                i = end
                pending_indent = True
                # consume a real line ending (\n or \r\n); a lone \r is whitespace
                if i < n and (
                    source[i] == "\n" or source.startswith("\r\n", i)
                ):
                    while i < n and source[i] != "\n":
                        i += 1
                    newline_at(i)
                    i += 1
                continue
            if width > indents[-1]:
                indents.append(width)
                emit("indent", "", line, line_start, line_start)
            else:
                while width < indents[-1]:
                    indents.pop()
                    emit("dedent", "", line, line_start, line_start)
                if width != indents[-1]:
                    diagnostics.append(f"line {line}: inconsistent dedent")
                    indents.append(width)
            pending_indent = False
            i = j
            continue

        if i >= n:
            break
        ch = source[i]

        if ch == "\n":
            if depth == 0:
                if logical_has_code:
                    emit("newline", "\n", line, i, line_start)
                    logical_has_code = False
                pending_indent = True
            newline_at(i)
            i += 1
            continue

        if ch in " \t\r\f\v":
            i += 1
            continue

        if ch == "\\":
            # line continuation; anything else after a backslash is unlexable
            j = i + 1
            if j < n and source[j] == "\r":
                j += 1
            if j < n and source[j] == "\n":
                newline_at(j)
                i = j + 1
                continue
            if j >= n:
                i = j
                continue
            diagnostics.append(f"line {line}: unexpected character {ch!r}")
            emit("operator", ch, line, i, line_start)
            i += 1
            continue

        if ch == "#":
            end = i
            while end < n and source[end] not in "\r\n":
                end += 1
            emit("comment", source[i:end], line, i, line_start)
            i = end
            continue

        m = _IDENT_RE.match(source, i)
        if m:
            text = m.group()
            end = m.end()
            if _is_string_prefix(text) and end < n and source[end] in "\"'":
                start_line, start_ls = line, line_start
                send = scan_string(i, end)
                emit("string", source[i:send], start_line, i, start_ls)
                logical_has_code = True
                i = send
                continue
            kind = "keyword" if text in KEYWORDS else "identifier"
            emit(kind, text, line, i, line_start)
            logical_has_code = True
            i = end
            continue

        if ch.isdigit() or (ch == "." and i + 1 < n and source[i + 1].isdigit()):
            m = _NUMBER_RE.match(source, i)
            if m:
                emit("number", m.group(), line, i, line_start)
                logical_has_code = True
                i = m.end()
                continue

        if ch in "\"'":
            start_line, start_ls = line, line_start
            send = scan_string(i, i)
            emit("string", source[i:send], start_line, i, start_ls)
            logical_has_code = True
            i = send
            continue

        op = None
        for cand in _OPERATORS_3:
            if source.startswith(cand, i):
                op = cand
                break
        if op is None:
            for cand in _OPERATORS_2:
                if source.startswith(cand, i):
                    op = cand
                    break
        if op is not None:
            emit("operator", op, line, i, line_start)
            logical_has_code = True
            i += len(op)
            continue

        if ch in _PUNCTUATION:
            if ch in _OPEN_BRACKETS:
                depth += 1
            elif ch in _CLOSE_BRACKETS:
                depth = max(0, depth - 1)
            emit("punctuation", ch, line, i, line_start)
            logical_has_code = True
            i += 1
            continue

        if ch in _OPERATORS_1:
            emit("operator", ch, line, i, line_start)
            logical_has_code = True
            i += 1
            continue

        diagnostics.append(f"line {line}: unexpected character {ch!r}")
        emit("operator", ch, line, i, line_start)
        logical_has_code = True
        i += 1

    if logical_has_code:
        emit("newline", "", line, n, line_start)
    while len(indents) > 1:
        indents.pop()
        emit("dedent", "", line, n, line_start)

    return TokenStream(tokens=tokens, diagnostics=diagnostics)
