"""Lexical scanning for C, C++, and CUDA sources.

Everything here works at the token level: string and character literals are
respected, backslash-newline continuations are honored, and the only structure
recovered is brace matching. No preprocessing or parsing is attempted.
"""

from __future__ import annotations

import re
from dataclasses import dataclass


class LexError(Exception):
    """Raised for input the scanner cannot get past (unterminated comment)."""

    def __init__(self, message: str, byte_offset: int):
        super().__init__(f"{message} at byte offset {byte_offset}")
        self.byte_offset = byte_offset


class MainNotFound(Exception):
    """No top-level main function definition in the given text."""

    def __init__(self, which: str):
        super().__init__(f"no top-level main function found in {which}")
        self.which = which


# Region kinds produced by the scanner.
CODE = "code"
LINE_COMMENT = "line_comment"
BLOCK_COMMENT = "block_comment"
STRING = "string"
CHAR = "char"

_IDENT_CHARS = frozenset("ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789_$")
_HEX_DIGITS = frozenset("0123456789abcdefABCDEF")


def _byte_offset(text: str, index: int) -> int:
    return len(text[:index].encode("utf-8", errors="replace"))


def scan_regions(text: str) -> list[tuple[str, int, int]]:
    """Split *text* into (kind, start, end) regions.

    Comments and literals are single regions; everything else is code. An
    unterminated block comment raises LexError; unterminated literals simply
    run to end of input (lexing stays permissive for model output).
    """
    regions: list[tuple[str, int, int]] = []
    n = len(text)
    i = 0
    code_start = 0

    def close_code(end: int) -> None:
        if end > code_start:
            regions.append((CODE, code_start, end))

    while i < n:
        c = text[i]
        if c == "/" and i + 1 < n and text[i + 1] == "/":
            close_code(i)
            start = i
            i += 2
            while i < n:
                if text[i] == "\n":
                    j = i - 1
                    if j >= 0 and text[j] == "\r":
                        j -= 1
                    if j >= 0 and text[j] == "\\":
                        i += 1  # spliced line: comment continues
                        continue
                    break
                i += 1
            regions.append((LINE_COMMENT, start, i))  # newline not included
            code_start = i
        elif c == "/" and i + 1 < n and text[i + 1] == "*":
            close_code(i)
            start = i
            end = text.find("*/", i + 2)
            if end < 0:
                raise LexError("unterminated block comment", _byte_offset(text, start))
            i = end + 2
            regions.append((BLOCK_COMMENT, start, i))
            code_start = i
        elif c == '"':
            close_code(i)
            start = i
            i += 1
            while i < n:
                if text[i] == "\\":
                    i += 2
                    continue
                if text[i] == '"':
                    i += 1
                    break
                i += 1
            regions.append((STRING, start, min(i, n)))
            code_start = min(i, n)
        elif c == "'":
            # Digit separator (1'000'000) is not a character literal.
            if (
                i > 0
                and text[i - 1] in _HEX_DIGITS
                and i + 1 < n
                and text[i + 1] in _HEX_DIGITS
            ):
                i += 1
                continue
            close_code(i)
            start = i
            i += 1
            while i < n:
                if text[i] == "\\":
                    i += 2
                    continue
                if text[i] == "'":
                    i += 1
                    break
                i += 1
            regions.append((CHAR, start, min(i, n)))
            code_start = min(i, n)
        else:
            i += 1
    close_code(n)
    return regions


def strip_comments(text: str) -> str:
    """Remove // and /* */ comments, leaving literals untouched.

    A line whose non-comment residue is blank is dropped entirely; a line that
    keeps code around an inline comment stays in place with trailing
    whitespace trimmed. A block comment squeezed between identifier characters
    is replaced by one space so tokens never merge.
    """
    regions = scan_regions(text)
    if not any(kind in (LINE_COMMENT, BLOCK_COMMENT) for kind, _, _ in regions):
        return text

    # Per-character keep mask plus space substitutions for interior comments.
    keep = bytearray(1 for _ in range(len(text)))
    space_at: set[int] = set()
    commented_offsets: list[tuple[int, int]] = []
    for kind, start, end in regions:
        if kind not in (LINE_COMMENT, BLOCK_COMMENT):
            continue
        for j in range(start, end):
            keep[j] = 0
        commented_offsets.append((start, end))
        if (
            kind == BLOCK_COMMENT
            and start > 0
            and end < len(text)
            and text[start - 1] in _IDENT_CHARS
            and text[end] in _IDENT_CHARS
        ):
            space_at.add(start)

    out: list[str] = []
    pos = 0
    for line in text.splitlines(keepends=True):
        line_start, line_end = pos, pos + len(line)
        pos = line_end
        had_comment = any(s < line_end and e > line_start for s, e in commented_offsets)
        if not had_comment:
            out.append(line)
            continue
        if line.endswith("\r\n"):
            terminator = "\r\n"
        elif line.endswith("\n"):
            terminator = "\n"
        else:
            terminator = ""
        kept = []
        for j in range(line_start, line_end):
            if j in space_at:
                kept.append(" ")
            if keep[j]:
                kept.append(text[j])
        body = "".join(kept).rstrip("\r\n")
        if body.strip() == "":
            continue  # comment occupied the whole line: drop it
        # the terminator always survives, even when a multi-line comment
        # swallowed the newline byte itself
        out.append(body.rstrip() + terminator)
    return "".join(out)


# ---------------------------------------------------------------------------
# tokens

_TOKEN_RE = re.compile(
    r"""
    [A-Za-z_$][A-Za-z0-9_$]*                      # identifier / keyword
  | \.?\d(?:[0-9a-zA-Z_.']|[eEpP][+-])*           # numeric literal
  | ->\*? | \+\+ | -- | <<=? | >>=? | <=>? | >= | == | != | &&
  | \|\| | \#\# | ::
  | [-+*/%&|^!=<>]=
  | \.\.\.
  | .                                             # any other punctuation
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    text: str
    start: int
    end: int


def tokenize(text: str) -> list[Token]:
    """Token stream with comments skipped and literals kept verbatim."""
    tokens: list[Token] = []
    for kind, start, end in scan_regions(text):
        if kind in (LINE_COMMENT, BLOCK_COMMENT):
            continue
        if kind in (STRING, CHAR):
            tokens.append(Token(text[start:end], start, end))
            continue
        for m in _TOKEN_RE.finditer(text, start, end):
            tok = m.group()
            if not tok.isspace():
                tokens.append(Token(tok, m.start(), m.end()))
    return tokens


def token_texts(text: str) -> list[str]:
    return [t.text for t in tokenize(text)]


# ---------------------------------------------------------------------------
# function definitions

@dataclass(frozen=True)
class FunctionSpan:
    """A top-level function definition located by brace matching.

    start is the first character of the declaration (return type, storage and
    launch qualifiers included); end is one past the closing brace.
    """

    name: str
    start: int
    end: int


_BODY_QUALIFIERS = frozenset(
    {"const", "noexcept", "override", "final", "restrict", "__restrict__", "volatile"}
)
_NOT_FUNCTION_NAMES = frozenset({"if", "for", "while", "switch", "catch", "return", "sizeof"})


def function_definitions(text: str) -> list[FunctionSpan]:
    tokens = tokenize(text)
    spans: list[FunctionSpan] = []
    depth = 0
    stmt_start_idx = 0  # token index where the current top-level statement began
    i = 0
    while i < len(tokens):
        tok = tokens[i].text
        if tok == "#" and _starts_line(text, tokens[i].start):
            # preprocessor directive: its own logical line, never part of a
            # declaration and never a brace-depth contributor
            end = _directive_end(text, tokens[i].start)
            while i < len(tokens) and tokens[i].start < end:
                i += 1
            if depth == 0:
                stmt_start_idx = i
            continue
        if tok == "{":
            if depth == 0:
                name = _function_name(tokens, stmt_start_idx, i)
                close = _matching_brace(tokens, i)
                if close is None:
                    break  # unbalanced: stop scanning, nothing after is top level
                if name is not None:
                    spans.append(
                        FunctionSpan(name, tokens[stmt_start_idx].start, tokens[close].end)
                    )
                    i = close + 1
                    stmt_start_idx = i
                    continue
                depth += 1
            else:
                depth += 1
        elif tok == "}":
            depth = max(0, depth - 1)
            if depth == 0:
                stmt_start_idx = i + 1
        elif tok == ";" and depth == 0:
            stmt_start_idx = i + 1
        i += 1
    return spans


def _starts_line(text: str, index: int) -> bool:
    line_start = text.rfind("\n", 0, index) + 1
    return text[line_start:index].strip() == ""


def _directive_end(text: str, start: int) -> int:
    """One past the directive's last character, honoring \\-spliced lines."""
    j = text.find("\n", start)
    while j > 0:
        k = j - 1
        if k >= 0 and text[k] == "\r":
            k -= 1
        if k >= 0 and text[k] == "\\":
            j = text.find("\n", j + 1)
            continue
        break
    return len(text) if j == -1 else j


def _matching_brace(tokens: list[Token], open_idx: int) -> int | None:
    depth = 0
    for j in range(open_idx, len(tokens)):
        if tokens[j].text == "{":
            depth += 1
        elif tokens[j].text == "}":
            depth -= 1
            if depth == 0:
                return j
    return None


def _function_name(tokens: list[Token], stmt_start: int, brace_idx: int) -> str | None:
    """Name of the function whose body opens at brace_idx, or None."""
    stmt = tokens[stmt_start:brace_idx]
    if not stmt:
        return None
    # An assignment at the statement's top paren level means an initializer.
    pdepth = 0
    for t in stmt:
        if t.text in ("(", "["):
            pdepth += 1
        elif t.text in (")", "]"):
            pdepth -= 1
        elif t.text == "=" and pdepth == 0:
            return None
    j = len(stmt) - 1
    while j >= 0 and stmt[j].text in _BODY_QUALIFIERS:
        j -= 1
    if j < 0 or stmt[j].text != ")":
        return None
    depth = 0
    while j >= 0:
        if stmt[j].text == ")":
            depth += 1
        elif stmt[j].text == "(":
            depth -= 1
            if depth == 0:
                break
        j -= 1
    if j <= 0:
        return None
    before = stmt[j - 1].text
    if before in _NOT_FUNCTION_NAMES:
        return None
    if re.fullmatch(r"[A-Za-z_$][A-Za-z0-9_$]*", before):
        if j - 2 >= 0 and stmt[j - 2].text == "operator":
            return "operator" + before
        return before
    if j - 2 >= 0 and stmt[j - 2].text == "operator":
        return "operator" + before
    return None


def find_main_span(text: str, which: str = "source") -> tuple[int, int]:
    """Character span of the top-level main definition, or MainNotFound."""
    for span in function_definitions(text):
        if span.name == "main":
            return span.start, span.end
    raise MainNotFound(which)


def non_main_function_tokens(text: str) -> list[tuple[str, tuple[str, ...]]]:
    """(name, token stream) for every top-level function except main, sorted.

    The sort makes the comparison insensitive to reordering while staying
    sensitive to any token-level edit.
    """
    items = []
    for span in function_definitions(text):
        if span.name == "main":
            continue
        toks = tuple(token_texts(text[span.start:span.end]))
        items.append((span.name, toks))
    items.sort()
    return items
