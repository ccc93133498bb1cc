"""Tokenizer for the indentation-delimited scripting language."""
from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ParseError

KEYWORDS = frozenset({
    "def", "for", "in", "while", "if", "elif", "else", "return",
    "and", "or", "not", "True", "False", "None",
})

# Python keywords outside the grammar; rejected early with a clear message.
UNSUPPORTED_KEYWORDS = frozenset({
    "class", "import", "from", "lambda", "try", "except", "finally", "raise",
    "with", "as", "yield", "global", "nonlocal", "del", "assert", "pass",
    "break", "continue", "is", "async", "await",
})

OPERATORS = (
    "**=", "//=", "**", "//", "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=", "%=",
    "+", "-", "*", "/", "%", "<", ">", "=", "(", ")", "[", "]", "{", "}", ",", ":", ".",
)

_NUMBER = re.compile(r"(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?")
_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "\\": "\\", "'": "'", '"': '"', "0": "\0", "\n": ""}


@dataclass(frozen=True)
class Token:
    type: str  # NAME KEYWORD NUMBER STRING OP NEWLINE INDENT DEDENT COMMENT EOF
    value: object
    line: int
    col: int

    def __repr__(self):
        return f"Token({self.type}, {self.value!r}, {self.line}:{self.col})"


def _decode_escapes(raw: str, line: int, col: int) -> str:
    out = []
    i = 0
    while i < len(raw):
        ch = raw[i]
        if ch == "\\" and i + 1 < len(raw):
            nxt = raw[i + 1]
            if nxt in _ESCAPES:
                out.append(_ESCAPES[nxt])
            else:
                out.append("\\" + nxt)
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


class Lexer:
    def __init__(self, source: str):
        self.src = source
        self.pos = 0
        self.line = 1
        self.col = 1
        self.tokens: list[Token] = []
        self.indents = [0]
        self.pending_comments: list[tuple[int, str, int, int]] = []
        self.depth = 0  # bracket nesting

    def error(self, msg, line=None, col=None):
        raise ParseError(msg, line if line is not None else self.line, col if col is not None else self.col)

    def _advance(self, n=1):
        for _ in range(n):
            if self.src[self.pos] == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
            self.pos += 1

    def _emit(self, type_, value, line, col):
        self.tokens.append(Token(type_, value, line, col))

    def tokenize(self) -> list[Token]:
        if "\t" in self.src:
            idx = self.src.index("\t")
            line = self.src.count("\n", 0, idx) + 1
            col = idx - (self.src.rfind("\n", 0, idx) + 1) + 1
            self.error("tab characters are not allowed; indent with spaces", line, col)
        while self.pos < len(self.src):
            self._line_start()
        self._close_indentation(0, self.line)
        self._emit("EOF", None, self.line, 1)
        return self.tokens

    # -- line level ---------------------------------------------------------

    def _line_start(self):
        start = self.pos
        while self.pos < len(self.src) and self.src[self.pos] == " ":
            self._advance()
        indent = self.pos - start
        if self.pos >= len(self.src):
            return
        ch = self.src[self.pos]
        if ch == "\n" or (ch == "\\" and self.src.startswith("\\\n", self.pos)):
            self._advance(1 if ch == "\n" else 2)
            return
        if ch == "\r":
            self._advance()
            return
        if ch == "#":
            line, col = self.line, self.col
            text = self._read_comment()
            self.pending_comments.append((indent, text, line, col))
            if self.pos < len(self.src):
                self._advance()  # newline
            return
        self._indentation(indent)
        self._scan_logical_line()

    def _read_comment(self) -> str:
        end = self.src.find("\n", self.pos)
        if end == -1:
            end = len(self.src)
        text = self.src[self.pos + 1:end].rstrip()
        self._advance(end - self.pos)
        return text

    def _flush_comments(self, comments):
        for _, text, line, col in comments:
            self._emit("COMMENT", text, line, col)
            self._emit("NEWLINE", None, line, col + len(text) + 1)

    def _indentation(self, level: int):
        line, col = self.line, self.col
        if level > self.indents[-1]:
            self.indents.append(level)
            self._emit("INDENT", level, line, 1)
            self._flush_comments(self.pending_comments)
            self.pending_comments = []
        elif level < self.indents[-1]:
            self._close_indentation(level, line)
        else:
            self._flush_comments(self.pending_comments)
            self.pending_comments = []

    def _close_indentation(self, level: int, line: int):
        # a comment stays in the innermost closing block its indent reaches
        pending = self.pending_comments
        self.pending_comments = []
        while self.indents[-1] > level:
            top = self.indents[-1]
            self._flush_comments([c for c in pending if c[0] >= top])
            pending = [c for c in pending if c[0] < top]
            self.indents.pop()
            self._emit("DEDENT", None, line, 1)
        if self.indents[-1] != level:
            self.error("unindent does not match any outer indentation level", line, level + 1)
        self._flush_comments(pending)

    # -- token level --------------------------------------------------------

    def _scan_logical_line(self):
        src = self.src
        while self.pos < len(src):
            ch = src[self.pos]
            line, col = self.line, self.col
            if ch == "\n":
                self._advance()
                if self.depth == 0:
                    self._emit("NEWLINE", None, line, col)
                    return
                continue
            if ch in " \r":
                self._advance()
                continue
            if ch == "\\" and src.startswith("\\\n", self.pos):
                self._advance(2)
                continue
            if ch == "#":
                self._read_comment()  # trailing comments are not kept
                continue
            if ch in "'\"":
                self._string(line, col)
                continue
            m = _NUMBER.match(src, self.pos)
            if ch.isdigit() or (ch == "." and m):
                text = m.group(0)
                value = float(text) if ("." in text or "e" in text or "E" in text) else int(text)
                self._advance(len(text))
                if self.pos < len(src) and (src[self.pos].isalnum() or src[self.pos] == "_"):
                    self.error(f"invalid number literal {text + src[self.pos]!r}", line, col)
                self._emit("NUMBER", value, line, col)
                continue
            m = _NAME.match(src, self.pos)
            if m:
                word = m.group(0)
                if self.pos + len(word) < len(src) and src[self.pos + len(word)] in "'\"":
                    self.error(f"string prefix {word!r} is not supported", line, col)
                if word in UNSUPPORTED_KEYWORDS:
                    self.error(f"unsupported keyword {word!r}", line, col)
                self._advance(len(word))
                self._emit("KEYWORD" if word in KEYWORDS else "NAME", word, line, col)
                continue
            for op in OPERATORS:
                if src.startswith(op, self.pos):
                    if op in "([{":
                        self.depth += 1
                    elif op in ")]}":
                        if self.depth == 0:
                            self.error(f"unmatched {op!r}", line, col)
                        self.depth -= 1
                    self._advance(len(op))
                    self._emit("OP", op, line, col)
                    break
            else:
                self.error(f"unknown token {ch!r}", line, col)
        # end of input without trailing newline
        if self.depth:
            self.error("unexpected end of input inside brackets")
        self._emit("NEWLINE", None, self.line, self.col)

    def _string(self, line, col):
        src = self.src
        quote = src[self.pos]
        triple = src.startswith(quote * 3, self.pos)
        delim = quote * 3 if triple else quote
        self._advance(len(delim))
        start = self.pos
        while True:
            if self.pos >= len(src):
                self.error("unterminated string literal", line, col)
            ch = src[self.pos]
            if ch == "\\" and self.pos + 1 < len(src):
                self._advance(2)
                continue
            if not triple and ch == "\n":
                self.error("unterminated string literal", line, col)
            if src.startswith(delim, self.pos):
                raw = src[start:self.pos]
                self._advance(len(delim))
                break
            self._advance()
        self._emit("STRING", _decode_escapes(raw, line, col), line, col)


def tokenize(source: str) -> list[Token]:
    return Lexer(source).tokenize()
