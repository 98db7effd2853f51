"""Small parser for the DOT files the experiment CLI writes.

Covers the subset the artifacts use (and the common DOT variants of it):
a single ``digraph`` with node statements, edge statements (including
``a -> b -> c`` chains), and graph-level ``key=value`` settings.  Attribute
lists may separate entries with commas, semicolons, or whitespace.  No
subgraphs.
"""

import re


class DotError(ValueError):
    """Raised when the input is not parseable DOT."""


_TOKEN = re.compile(
    r"""\s+
      | //[^\n]*                      # line comment
      | \#[^\n]*
      | /\*.*?\*/                     # block comment
      | (?P<arrow>->)
      | (?P<sym>[{}\[\];,=])
      | (?P<str>"(?:\\.|[^"\\])*")
      | (?P<id>[A-Za-z_][A-Za-z0-9_]*|[+-]?(?:\.\d+|\d+\.?\d*)(?:[eE][+-]?\d+)?)
    """,
    re.VERBOSE | re.DOTALL,
)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            snippet = text[pos:pos + 20]
            raise DotError(f"unexpected character at offset {pos}: {snippet!r}")
        pos = m.end()
        for kind in ("arrow", "sym", "str", "id"):
            tok = m.group(kind)
            if tok is not None:
                tokens.append((kind, tok))
                break
    return tokens


def _decode(kind, tok):
    if kind == "str":
        return re.sub(r"\\(.)", r"\1", tok[1:-1])
    if re.fullmatch(r"[+-]?\d+", tok):
        return int(tok)
    try:
        return float(tok)
    except ValueError:
        return tok


class DotGraph:
    def __init__(self):
        self.attrs = {}
        self.nodes = {}   # name -> attr dict, in declaration order
        self.edges = []   # (src, dst, attr dict)


def parse(text):
    tokens = _tokenize(text)
    pos = 0

    def peek(kind=None):
        if pos >= len(tokens):
            return False
        return kind is None or tokens[pos][0] == kind

    def take(expected=None):
        nonlocal pos
        if pos >= len(tokens):
            raise DotError("unexpected end of input")
        kind, tok = tokens[pos]
        if expected is not None and tok != expected and kind != expected:
            raise DotError(f"expected {expected!r}, got {tok!r}")
        pos += 1
        return kind, tok

    def take_attrs():
        nonlocal pos
        attrs = {}
        if not (peek() and tokens[pos][1] == "["):
            return attrs
        take("[")
        while pos < len(tokens) and tokens[pos][1] != "]":
            _, key = take("id")
            take("=")
            kind, value = take()
            if kind not in ("id", "str"):
                raise DotError(f"expected an attribute value, got {value!r}")
            attrs[key] = _decode(kind, value)
            while peek() and tokens[pos][1] in (",", ";"):
                take()
        take("]")
        return attrs

    graph = DotGraph()
    _, keyword = take("id")
    if keyword not in ("digraph", "graph"):
        raise DotError(f"expected 'digraph', got {keyword!r}")
    if peek("id") or peek("str"):
        take()  # optional graph name
    take("{")
    while True:
        if not peek():
            raise DotError("unexpected end of input (missing '}')")
        if tokens[pos][1] == "}":
            take("}")
            break
        kind, name = take()
        if kind not in ("id", "str"):
            raise DotError(f"expected a statement, got {name!r}")
        if kind == "str":
            name = _decode("str", name)
        if peek() and tokens[pos][1] == "=":  # graph-level key=value
            take("=")
            vkind, value = take()
            graph.attrs[name] = _decode(vkind, value)
        elif peek("arrow"):
            chain = [name]
            while peek("arrow"):
                take()
                ekind, nxt = take()
                if ekind not in ("id", "str"):
                    raise DotError(f"expected a node name after '->', got {nxt!r}")
                chain.append(_decode("str", nxt) if ekind == "str" else nxt)
            attrs = take_attrs()
            for src, dst in zip(chain, chain[1:]):
                graph.edges.append((src, dst, dict(attrs)))
        else:
            attrs = take_attrs()
            graph.nodes.setdefault(name, {}).update(attrs)
        while peek() and tokens[pos][1] == ";":
            take()
    if peek():
        raise DotError(f"trailing content after '}}': {tokens[pos][1]!r}")
    return graph
