"""Compilation-free size, structure and quality metrics of one C file."""

import re
from dataclasses import dataclass, fields
from typing import TYPE_CHECKING, List, NamedTuple, Optional, Sequence

from .lexer import (
    DIRNAME, IDENT, KEYWORD, PUNCT, Lexed, Token, strip_comments, tokenize,
)

if TYPE_CHECKING:
    from .style import StyleCounts

QUESTIONABLE_WORDS = (
    "bugbug", "buggy", "bullshit", "crap", "crash", "damn", "damned", "doom",
    "doomed", "fixme", "fuck", "fucker", "fucking", "hack", "hacked",
    "hackery", "hacks", "hell", "kludge", "kludges", "lame", "lameness",
    "poop", "screwed", "screws", "shit", "shits", "suck", "sucks", "todo",
    "xxx",
)

_QUESTIONABLE_RE = re.compile(
    rb"(?<![A-Za-z0-9_])(?:"
    + b"|".join(w.encode() for w in sorted(QUESTIONABLE_WORDS, key=len, reverse=True))
    + rb")(?![A-Za-z0-9_])",
    re.IGNORECASE,
)

# keywords that start a statement on their own
FLOW_KEYWORDS = frozenset(
    (b"if", b"else", b"while", b"for", b"do", b"switch", b"case", b"default")
)
_TAG_KEYWORDS = frozenset((b"struct", b"union", b"enum"))


@dataclass(frozen=True)
class SourceMetrics:
    """Raw counts and derived quality metrics of one file revision.

    Derived ratios whose denominator is zero are reported as 0.
    """

    n_statements: int = 0
    n_chars: int = 0
    n_comment_chars: int = 0
    n_comments: int = 0
    n_functions: int = 0
    n_lines: int = 0
    n_gotos: int = 0
    n_questionable_words: int = 0
    n_identifiers_unique: int = 0
    sum_unique_identifier_len: int = 0
    sum_nesting: int = 0
    n_nested_lines: int = 0
    cd: float = 0.0
    cs: float = 0.0
    fs: float = 0.0
    gd: float = 0.0
    il: float = 0.0
    ll: float = 0.0
    qd: float = 0.0
    sn: float = 0.0
    si: float = 0.0

    @classmethod
    def field_names(cls) -> List[str]:
        return [f.name for f in fields(cls)]

    def values(self) -> list:
        return [getattr(self, name) for name in self.field_names()]


METRIC_FIELDS = SourceMetrics.field_names()
COUNT_FIELDS = METRIC_FIELDS[:12]


class FunctionSpan(NamedTuple):
    start: int      # byte offset of the name (or of '#' for macros)
    end: int        # byte offset one past the closing brace / directive
    baseline: int   # brace depth of the body interior
    macro: bool


class Structure(NamedTuple):
    spans: List[FunctionSpan]
    unbalanced: int
    n_statements: int
    n_gotos: int
    sum_nesting: int
    n_nested_lines: int


class Analysis(NamedTuple):
    metrics: SourceMetrics
    style: "StyleCounts"
    unbalanced: int


def _ratio(num, den, scale=1.0):
    return scale * num / den if den else 0.0


def count_questionable_words(source) -> int:
    """Count case-insensitive whole-word matches of :data:`QUESTIONABLE_WORDS`."""
    if isinstance(source, str):
        source = source.encode("utf-8", "surrogateescape")
    return sum(1 for _ in _QUESTIONABLE_RE.finditer(source))


class _ParenState:
    """Parenthesis and for-header tracking for one lexical context."""

    __slots__ = ("depth", "for_levels", "pending_for")

    def __init__(self):
        self.depth = 0
        self.for_levels = []
        self.pending_for = False

    def feed(self, tok: Token) -> bool:
        """Advance over ``tok``; return True if it is a counted ';'."""
        text = tok.text
        pending = self.pending_for
        self.pending_for = False
        if tok.kind == PUNCT:
            if text == b"(":
                self.depth += 1
                if pending:
                    self.for_levels.append(self.depth)
            elif text == b")":
                if self.for_levels and self.for_levels[-1] == self.depth:
                    self.for_levels.pop()
                if self.depth:
                    self.depth -= 1
            elif text == b";":
                return not self.for_levels
        elif tok.kind == KEYWORD and text == b"for":
            self.pending_for = True
        return False


def scan_structure(tokens: Sequence[Token], text_len: Optional[int] = None) -> Structure:
    """Single pass over the token stream recovering functions and nesting.

    Statements are ``;`` tokens outside ``for (...)`` headers plus the flow
    keywords.  Brace nesting is tracked on code outside preprocessor
    directives only.  A line inside a function body contributes its brace
    depth relative to the body (body interior = 0) when its first token is
    code; a line whose first token is ``}`` is measured after the brace.
    """
    if text_len is None:
        text_len = tokens[-1].end if tokens else 0

    spans: List[FunctionSpan] = []
    unbalanced = 0
    statements = 0
    gotos = 0
    sum_nesting = 0
    nested_lines = 0

    code = _ParenState()
    direc = _ParenState()
    depth = 0
    func_start = None     # name offset of the open function body
    candidate = None      # name offset of a top-level "name(...)" seen
    open_parens = []      # previous-token index per top-level '('
    last_line = -1

    macro_start = None
    macro_end = 0
    macro_state = 0       # 0 idle, 1 saw #define, 2 saw macro name

    n = len(tokens)
    for i in range(n):
        tok = tokens[i]
        kind = tok.kind
        text = tok.text

        if tok.directive:
            if i == 0 or tokens[i - 1].directive != tok.directive:
                if macro_start is not None:
                    spans.append(FunctionSpan(macro_start, macro_end, 0, True))
                    macro_start = None
                direc = _ParenState()
                macro_state = 0
                macro_hash = tok.start
                continue
            if kind == DIRNAME:
                macro_state = 1 if text == b"define" else 0
                continue
            if macro_state == 1:
                macro_state = 2 if kind in (IDENT, KEYWORD) else 0
            elif macro_state == 2:
                macro_state = 0
                if text == b"(" and tok.gap == 2:
                    macro_start = macro_hash
            if macro_start is not None:
                macro_end = tok.end
            if direc.feed(tok):
                statements += 1
            elif kind == KEYWORD:
                if text in FLOW_KEYWORDS:
                    statements += 1
                elif text == b"goto":
                    gotos += 1
            continue

        if macro_start is not None:
            spans.append(FunctionSpan(macro_start, macro_end, 0, True))
            macro_start = None

        if tok.line != last_line:
            last_line = tok.line
            if func_start is not None:
                if kind == PUNCT and text == b"}":
                    if depth > 1:
                        sum_nesting += depth - 2
                        nested_lines += 1
                else:
                    sum_nesting += depth - 1
                    nested_lines += 1

        if code.feed(tok):
            statements += 1
        elif kind == KEYWORD:
            if text in FLOW_KEYWORDS:
                statements += 1
            elif text == b"goto":
                gotos += 1
            elif depth == 0 and text in _TAG_KEYWORDS:
                candidate = None
        elif kind == PUNCT:
            if text == b"{":
                if depth == 0 and candidate is not None:
                    func_start = candidate
                    candidate = None
                depth += 1
            elif text == b"}":
                if depth == 0:
                    unbalanced += 1
                else:
                    depth -= 1
                    if depth == 0 and func_start is not None:
                        spans.append(FunctionSpan(func_start, tok.end, 1, False))
                        func_start = None
            elif depth == 0:
                if text == b"(":
                    open_parens.append(i - 1)
                elif text == b")":
                    if open_parens:
                        prev = open_parens.pop()
                        if not open_parens:
                            if prev >= 0 and tokens[prev].kind == IDENT:
                                candidate = tokens[prev].start
                            else:
                                candidate = None
                elif text == b"=":
                    candidate = None

    if macro_start is not None:
        spans.append(FunctionSpan(macro_start, macro_end, 0, True))
    if depth > 0:
        unbalanced += 1
        if func_start is not None:
            spans.append(FunctionSpan(func_start, text_len, 1, False))

    spans.sort()
    return Structure(spans, unbalanced, statements, gotos, sum_nesting, nested_lines)


def extract_functions(tokens: Sequence[Token]) -> List[FunctionSpan]:
    """Function definitions and function-like macros, in source order."""
    return scan_structure(tokens).spans


def count_lines(text: bytes) -> int:
    n = text.count(b"\n")
    if text and not text.endswith(b"\n"):
        n += 1
    return n


def _metrics_from(text: bytes, lexed: Lexed, structure: Structure, si: float) -> SourceMetrics:
    identifiers = {t.text for t in lexed.tokens if t.kind == IDENT}
    n_ident = len(identifiers)
    ident_len = sum(len(t) for t in identifiers)
    n_chars = len(text)
    n_lines = count_lines(text)
    n_stmt = structure.n_statements
    n_func = len(structure.spans)
    n_questionable = count_questionable_words(text)
    return SourceMetrics(
        n_statements=n_stmt,
        n_chars=n_chars,
        n_comment_chars=lexed.n_comment_chars,
        n_comments=lexed.n_comments,
        n_functions=n_func,
        n_lines=n_lines,
        n_gotos=structure.n_gotos,
        n_questionable_words=n_questionable,
        n_identifiers_unique=n_ident,
        sum_unique_identifier_len=ident_len,
        sum_nesting=structure.sum_nesting,
        n_nested_lines=structure.n_nested_lines,
        cd=_ratio(lexed.n_comments, n_stmt, 100.0),
        cs=_ratio(lexed.n_comment_chars, lexed.n_comments),
        fs=_ratio(n_stmt, n_func),
        gd=_ratio(structure.n_gotos, n_stmt, 100.0),
        il=_ratio(ident_len, n_ident),
        ll=_ratio(n_chars, n_lines),
        qd=_ratio(n_questionable, n_lines, 100.0),
        sn=_ratio(structure.sum_nesting, structure.n_nested_lines),
        si=si,
    )


def _as_bytes(source) -> bytes:
    if isinstance(source, str):
        return source.encode("utf-8", "surrogateescape")
    return bytes(source)


def analyze(source) -> Analysis:
    """Metrics, style counters and the unbalanced-brace diagnostic in one pass."""
    from .style import count_style, style_inconsistency

    text = _as_bytes(source)
    lexed = tokenize(text)
    structure = scan_structure(lexed.tokens, len(text))
    style = count_style(lexed.tokens, text)
    metrics = _metrics_from(text, lexed, structure, style_inconsistency(style))
    return Analysis(metrics, style, structure.unbalanced)


def compute_metrics(source) -> SourceMetrics:
    """Measure one C source text (bytes, or str encoded as UTF-8)."""
    return analyze(source).metrics


__all__ = [
    "QUESTIONABLE_WORDS", "METRIC_FIELDS", "SourceMetrics", "FunctionSpan",
    "Structure", "Analysis", "analyze", "compute_metrics", "extract_functions",
    "count_questionable_words", "scan_structure", "strip_comments", "count_lines",
]
