"""Byte-level lexical analyzer for a permissive superset of C.

The lexer never fails: any byte it cannot place in a token becomes a
one-byte ``OTHER`` token and scanning resumes at the next byte.  Comments,
whitespace and newlines are trivia; they are not returned as tokens but
are summarized in the :class:`Lexed` result and in each token's ``gap``
(the kind of separation between the token and its predecessor).
"""

import re
from typing import List, NamedTuple, Tuple

# token kinds
IDENT = 1
KEYWORD = 2
NUMBER = 3
STRING = 4
CHAR = 5
PUNCT = 6
DIRNAME = 7   # the name after '#' in a preprocessor directive
HEADER = 8    # <...> after #include
OTHER = 9

# gap kinds: what separates a token from the previous token
GAP_NA = 0      # line break, comment, or start of file
GAP_SPACE = 1   # blanks or tabs only
GAP_NONE = 2    # tokens abut

C_KEYWORDS = frozenset(
    b"""auto break case char const continue default do double else enum
    extern float for goto if inline int long register restrict return short
    signed sizeof static struct switch typedef union unsigned void volatile
    while _Alignas _Alignof _Atomic _Bool _Complex _Generic _Imaginary
    _Noreturn _Static_assert _Thread_local""".split()
)

_TOKEN_RE = re.compile(
    rb"""
    (?P<nl>\n)
    |(?P<ws>[\ \t\r\f\v]+)
    |(?P<cont>\\\r?\n)
    |(?P<bc>/\*.*?(?:\*/|\Z))
    |(?P<lc>//[^\n]*)
    |(?P<str>(?:u8|[uUL])?"(?:\\.|[^"\\\n])*"?)
    |(?P<chr>(?:u8|[uUL])?'(?:\\.|[^'\\\n])*'?)
    |(?P<id>[A-Za-z_][A-Za-z0-9_]*)
    |(?P<num>\.?[0-9](?:[eEpP][+-]|[0-9A-Za-z_.])*)
    |(?P<punct>\.\.\.|<<=|>>=|->|\+\+|--|<<|>>|<=|>=|==|!=|&&|\|\||\*=|/=|%=
        |\+=|-=|&=|\^=|\|=|\#\#|[\[\](){}.&*+\-~!/%<>^|?:;=,\#])
    |(?P<other>.)
    """,
    re.X | re.S,
)

_HEADER_RE = re.compile(rb"[ \t]*(<[^>\n]*>?)")
_INCLUDE_NAMES = frozenset((b"include", b"include_next", b"import"))


class Token(NamedTuple):
    kind: int
    text: bytes
    start: int
    end: int
    line: int        # 0-based line of the first byte
    gap: int         # GAP_* separation from the previous token
    directive: int   # 0 for code, else serial number of the directive


class Lexed(NamedTuple):
    tokens: List[Token]
    n_comments: int
    n_comment_chars: int
    comment_spans: List[Tuple[int, int]]


def tokenize(text: bytes) -> Lexed:
    """Split ``text`` into tokens, tallying comments on the way."""
    tokens: List[Token] = []
    append = tokens.append
    comment_spans = []
    n_comment_chars = 0

    line = 0
    gap = GAP_NA
    line_has_token = False
    in_directive = 0
    n_directives = 0
    after_hash = False      # next identifier is the directive name
    want_header = False     # next token may be an <header-name>

    pos = 0
    end = len(text)
    match = _TOKEN_RE.match
    while pos < end:
        if want_header:
            want_header = False
            m = _HEADER_RE.match(text, pos)
            if m and m.group(1):
                hstart = m.start(1)
                append(Token(HEADER, m.group(1), hstart, m.end(1), line,
                             GAP_SPACE if hstart > pos else gap, in_directive))
                gap = GAP_NONE
                pos = m.end()
                continue

        m = match(text, pos)
        kind = m.lastgroup
        start = pos
        pos = m.end()

        if kind == "ws":
            if gap == GAP_NONE:
                gap = GAP_SPACE
            continue
        if kind == "nl":
            line += 1
            gap = GAP_NA
            line_has_token = False
            in_directive = 0
            after_hash = False
            continue
        if kind == "cont":
            line += 1
            gap = GAP_NA
            continue
        if kind == "bc":
            body = pos - start - 2
            if text.endswith(b"*/", start + 2, pos):
                body -= 2
            n_comment_chars += body
            comment_spans.append((start, pos))
            line += text.count(b"\n", start, pos)
            gap = GAP_NA
            continue
        if kind == "lc":
            n_comment_chars += pos - start - 2
            comment_spans.append((start, pos))
            gap = GAP_NA
            continue

        value = text[start:pos]
        if kind == "id":
            if after_hash:
                tkind = DIRNAME
                after_hash = False
                want_header = value in _INCLUDE_NAMES
            elif value in C_KEYWORDS:
                tkind = KEYWORD
            else:
                tkind = IDENT
        elif kind == "punct":
            tkind = PUNCT
            if value == b"#" and not line_has_token:
                n_directives += 1
                in_directive = n_directives
                after_hash = True
            else:
                after_hash = False
        elif kind == "num":
            tkind = NUMBER
            after_hash = False
        elif kind == "str":
            tkind = STRING
            after_hash = False
        elif kind == "chr":
            tkind = CHAR
            after_hash = False
        else:
            tkind = OTHER
            after_hash = False

        append(Token(tkind, value, start, pos, line, gap, in_directive))
        if tkind in (STRING, CHAR):
            # escaped newlines inside literals
            line += value.count(b"\n")
        line_has_token = True
        gap = GAP_NONE

    return Lexed(tokens, len(comment_spans), n_comment_chars, comment_spans)


def strip_comments(text: bytes) -> bytes:
    """Blank out every comment, delimiters included, keeping newlines."""
    spans = tokenize(text).comment_spans
    if not spans:
        return text
    out = bytearray(text)
    for start, stop in spans:
        for i in range(start, stop):
            if out[i] != 0x0A:
                out[i] = 0x20
    return bytes(out)
