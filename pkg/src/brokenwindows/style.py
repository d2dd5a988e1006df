"""Formatting-consistency counters and the style inconsistency percentage.

Each rule records how often a construct is written one way (``a``: with a
space or tab on the checked side) and the other way (``b``: abutting).  A
side is only checked when the neighbouring token sits on the same line
with no comment in between.
"""

import re
from dataclasses import dataclass
from typing import List, NamedTuple, Sequence, Tuple

from .lexer import (
    CHAR, GAP_NA, GAP_SPACE, IDENT, KEYWORD, NUMBER, PUNCT, STRING, Token,
)

# canonical rule order; also the column order of the 40 style counters
RULES: Tuple[str, ...] = (
    "binary_op_before",
    "binary_op_after",
    "close_brace_before",
    "close_brace_after",
    "comma_before",
    "comma_after",
    "keyword_before",
    "keyword_after",
    "open_brace_before",
    "open_brace_after",
    "open_bracket_before",
    "open_bracket_after",
    "semicolon_before",
    "semicolon_after",
    "struct_access_before",
    "struct_access_after",
    "close_paren_before",
    "unary_op_after",
    "close_bracket_before",
    "eol_space",
)
N_RULES = len(RULES)
STYLE_COLUMNS = [f"{rule}_{side}" for rule in RULES for side in ("a", "b")]

SPACING_KEYWORDS = frozenset(
    (b"if", b"while", b"for", b"switch", b"return", b"do", b"sizeof")
)
BINARY_OPS = frozenset(
    b"= += -= *= /= %= &= |= ^= <<= >>= == != < > <= >= && || / % | ^ << >>".split()
)
AMBIGUOUS_OPS = frozenset((b"*", b"&", b"+", b"-"))
INCDEC_OPS = frozenset((b"++", b"--"))
UNARY_ONLY_OPS = frozenset((b"!", b"~"))
STRUCT_ACCESS = frozenset((b".", b"->"))

_NO_BEFORE = frozenset((b"(", b"["))
_NO_AFTER = frozenset((b")", b"]", b";", b","))
_OPERAND_END = frozenset((b")", b"]"))

_EOL_SPACE_RE = re.compile(rb"[ \t]\r?(?:\n|\Z)")

(BIN_BEFORE, BIN_AFTER, CBRACE_BEFORE, CBRACE_AFTER, COMMA_BEFORE,
 COMMA_AFTER, KW_BEFORE, KW_AFTER, OBRACE_BEFORE, OBRACE_AFTER,
 OBRACKET_BEFORE, OBRACKET_AFTER, SEMI_BEFORE, SEMI_AFTER, ACCESS_BEFORE,
 ACCESS_AFTER, CPAREN_BEFORE, UNARY_AFTER, CBRACKET_BEFORE,
 EOL_SPACE) = range(N_RULES)

# punctuator -> (before rule, after rule); -1 means unchecked
_PUNCT_RULES = {
    b"}": (CBRACE_BEFORE, CBRACE_AFTER),
    b",": (COMMA_BEFORE, COMMA_AFTER),
    b"{": (OBRACE_BEFORE, OBRACE_AFTER),
    b"[": (OBRACKET_BEFORE, OBRACKET_AFTER),
    b";": (SEMI_BEFORE, SEMI_AFTER),
    b".": (ACCESS_BEFORE, ACCESS_AFTER),
    b"->": (ACCESS_BEFORE, ACCESS_AFTER),
    b")": (CPAREN_BEFORE, -1),
    b"]": (CBRACKET_BEFORE, -1),
}
_BINARY_RULES = (BIN_BEFORE, BIN_AFTER)
_UNARY_RULES = (-1, UNARY_AFTER)
_KEYWORD_RULES = (KW_BEFORE, KW_AFTER)


class RuleCount(NamedTuple):
    rule_id: str
    a: int
    b: int


@dataclass(frozen=True)
class StyleCounts:
    """The 20 (a, b) pairs in :data:`RULES` order."""

    rules: Tuple[RuleCount, ...]

    def __post_init__(self):
        if len(self.rules) != N_RULES:
            raise ValueError(f"expected {N_RULES} rules, got {len(self.rules)}")
        for r in self.rules:
            if r.a < 0 or r.b < 0:
                raise ValueError(f"negative count for {r.rule_id}")

    @classmethod
    def from_pairs(cls, pairs: Sequence[Tuple[int, int]]) -> "StyleCounts":
        return cls(tuple(RuleCount(name, int(a), int(b)) for name, (a, b) in zip(RULES, pairs)))

    @classmethod
    def empty(cls) -> "StyleCounts":
        return cls.from_pairs([(0, 0)] * N_RULES)

    def columns(self) -> List[int]:
        out = []
        for r in self.rules:
            out.append(r.a)
            out.append(r.b)
        return out

    def __getitem__(self, rule_id: str) -> RuleCount:
        return self.rules[RULES.index(rule_id)]


def _is_operand_end(tok: Token) -> bool:
    kind = tok.kind
    if kind in (IDENT, NUMBER, STRING, CHAR):
        return True
    return kind == PUNCT and tok.text in _OPERAND_END


def _rules_for(tokens: Sequence[Token], i: int):
    tok = tokens[i]
    kind = tok.kind
    text = tok.text
    if kind == KEYWORD:
        return _KEYWORD_RULES if text in SPACING_KEYWORDS else None
    if kind != PUNCT or tok.text == b"#":
        return None
    rules = _PUNCT_RULES.get(text)
    if rules is not None:
        return rules
    if text in BINARY_OPS:
        return _BINARY_RULES
    if text in UNARY_ONLY_OPS:
        return _UNARY_RULES
    if text in AMBIGUOUS_OPS:
        if i > 0 and _is_operand_end(tokens[i - 1]):
            return _BINARY_RULES
        return _UNARY_RULES
    if text in INCDEC_OPS:
        # prefix only; postfix spacing is the unchecked side
        if i > 0 and _is_operand_end(tokens[i - 1]):
            return None
        return _UNARY_RULES
    return None


def count_style(tokens: Sequence[Token], text: bytes) -> StyleCounts:
    """Tally the 20 spacing rules over a token stream and its source text."""
    a = [0] * N_RULES
    b = [0] * N_RULES
    n = len(tokens)
    for i in range(n):
        rules = _rules_for(tokens, i)
        if rules is None:
            continue
        before, after = rules
        tok = tokens[i]
        if before >= 0 and i > 0 and tok.gap != GAP_NA:
            if tokens[i - 1].text not in _NO_BEFORE:
                if tok.gap == GAP_SPACE:
                    a[before] += 1
                else:
                    b[before] += 1
        if after >= 0 and i + 1 < n:
            nxt = tokens[i + 1]
            if nxt.gap != GAP_NA and nxt.text not in _NO_AFTER:
                if nxt.gap == GAP_SPACE:
                    a[after] += 1
                else:
                    b[after] += 1
    a[EOL_SPACE] = len(_EOL_SPACE_RE.findall(text))
    return StyleCounts(tuple(RuleCount(name, a[k], b[k]) for k, name in enumerate(RULES)))


def style_inconsistency(counts) -> float:
    """Percentage of formatting decisions taken against each rule's majority.

    ``100 * sum(min(a, b)) / sum(a + b)``; 0 when nothing was counted.
    Accepts a :class:`StyleCounts` or any iterable of ``(a, b)`` pairs.
    """
    rules = counts.rules if isinstance(counts, StyleCounts) else counts
    minority = 0
    total = 0
    for entry in rules:
        if isinstance(entry, RuleCount):
            ai, bi = entry.a, entry.b
        else:
            ai, bi = entry
        minority += min(ai, bi)
        total += ai + bi
    if total == 0:
        return 0.0
    return 100.0 * minority / total
