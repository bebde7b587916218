"""Boolean channel queries: AND/OR/NOT, quoted phrases, #hashtags, $cashtags.

Grammar (lowest precedence first):
    expr    := and_expr (OR and_expr)*
    and_expr:= not_expr ((AND)? not_expr)*      adjacency is AND
    not_expr:= NOT not_expr | '(' expr ')' | atom
    atom    := "phrase" | #tag | $sym | word
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from newswire.model import EventCluster, tokenize


class QueryParseError(ValueError):
    def __init__(self, position: int, message: str):
        self.position = position
        self.message = message
        super().__init__(f"parse error at {position}: {message}")


@dataclass(frozen=True)
class Term:
    word: str


@dataclass(frozen=True)
class Phrase:
    text: str


@dataclass(frozen=True)
class Hashtag:
    tag: str


@dataclass(frozen=True)
class Cashtag:
    symbol: str


@dataclass(frozen=True)
class Not:
    child: "Node"


@dataclass(frozen=True)
class And:
    children: tuple["Node", ...]


@dataclass(frozen=True)
class Or:
    children: tuple["Node", ...]


Node = Union[Term, Phrase, Hashtag, Cashtag, Not, And, Or]

_TOKEN_RE = re.compile(
    r'\s*(?:(?P<phrase>"[^"]*")|(?P<lparen>\()|(?P<rparen>\))'
    r'|(?P<hash>#[\w]+)|(?P<cash>\$[A-Za-z][A-Za-z.]*)'
    r"|(?P<word>[^\s()\"#$]+))")


def _lex(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == m.start():
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            at = len(text) - len(stripped)
            raise QueryParseError(at, f"unexpected character {text[at]!r}")
        if m.lastgroup is None:
            break
        kind = m.lastgroup
        value = m.group(kind)
        at = m.end() - len(value)
        if kind == "phrase" and not value.endswith('"'):
            raise QueryParseError(at, "unterminated phrase")
        tokens.append((kind, value, at))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _lex(text)
        self.i = 0

    def _peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def _word_is(self, *keywords: str) -> bool:
        tok = self._peek()
        return tok is not None and tok[0] == "word" and tok[1].upper() in keywords

    def parse(self) -> Node:
        if not self.tokens:
            raise QueryParseError(0, "empty query")
        node = self._or()
        if self.i < len(self.tokens):
            kind, value, at = self.tokens[self.i]
            raise QueryParseError(at, f"unexpected {value!r}")
        return node

    def _or(self) -> Node:
        parts = [self._and()]
        while self._word_is("OR"):
            self.i += 1
            parts.append(self._and())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def _and(self) -> Node:
        parts = [self._not()]
        while True:
            if self._word_is("AND"):
                self.i += 1
                parts.append(self._not())
                continue
            tok = self._peek()
            if tok is None or tok[0] == "rparen" or self._word_is("OR"):
                break
            parts.append(self._not())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def _not(self) -> Node:
        if self._word_is("NOT"):
            _, _, at = self.tokens[self.i]
            self.i += 1
            if self._peek() is None:
                raise QueryParseError(at, "NOT needs an operand")
            return Not(self._not())
        return self._primary()

    def _primary(self) -> Node:
        tok = self._peek()
        if tok is None:
            at = len(self.text)
            raise QueryParseError(at, "expected a term")
        kind, value, at = tok
        self.i += 1
        if kind == "lparen":
            node = self._or()
            closing = self._peek()
            if closing is None or closing[0] != "rparen":
                raise QueryParseError(at, "unclosed parenthesis")
            self.i += 1
            return node
        if kind == "rparen":
            raise QueryParseError(at, "unexpected ')'")
        if kind == "phrase":
            body = value[1:-1].strip()
            if not body:
                raise QueryParseError(at, "empty phrase")
            return Phrase(body.lower())
        if kind == "hash":
            return Hashtag(value[1:].lower())
        if kind == "cash":
            return Cashtag(value[1:].upper())
        if value.upper() in ("AND", "OR"):
            raise QueryParseError(at, f"{value.upper()} needs a left operand")
        return Term(value.lower())


def parse_query(text: str) -> Node:
    return _Parser(text).parse()


# ---------------------------------------------------------------- matching


class ClusterDoc:
    """Cached text views of one cluster for repeated predicate checks."""

    def __init__(self, cluster: EventCluster):
        texts = []
        seen = set()
        for t in cluster.tweets:
            norm = " ".join(t.text.lower().split())
            if norm not in seen:
                seen.add(norm)
                texts.append(norm)
        self.texts = texts
        self.tokens = {tok for text in texts for tok in tokenize(text)}
        self.hashtags = {h.lower() for t in cluster.tweets for h in t.hashtags}
        for text in texts:
            self.hashtags.update(m.group(1).lower()
                                 for m in re.finditer(r"#(\w+)", text))


def match_node(node: Node, doc: ClusterDoc) -> bool:
    if isinstance(node, Term):
        return node.word in doc.tokens
    if isinstance(node, Phrase):
        return any(node.text in text for text in doc.texts)
    if isinstance(node, Hashtag):
        return node.tag in doc.hashtags
    if isinstance(node, Cashtag):
        needle = "$" + node.symbol.lower()
        return any(needle in text for text in doc.texts)
    if isinstance(node, Not):
        return not match_node(node.child, doc)
    if isinstance(node, And):
        return all(match_node(c, doc) for c in node.children)
    if isinstance(node, Or):
        return any(match_node(c, doc) for c in node.children)
    raise TypeError(f"unknown node {node!r}")


def match_cluster(node: Node, cluster: EventCluster) -> bool:
    return match_node(node, ClusterDoc(cluster))


def node_to_json(node: Node) -> dict:
    if isinstance(node, Term):
        return {"term": node.word}
    if isinstance(node, Phrase):
        return {"phrase": node.text}
    if isinstance(node, Hashtag):
        return {"hashtag": node.tag}
    if isinstance(node, Cashtag):
        return {"cashtag": node.symbol}
    if isinstance(node, Not):
        return {"not": node_to_json(node.child)}
    if isinstance(node, And):
        return {"and": [node_to_json(c) for c in node.children]}
    if isinstance(node, Or):
        return {"or": [node_to_json(c) for c in node.children]}
    raise TypeError(f"unknown node {node!r}")


def node_from_json(obj: dict) -> Node:
    key, value = next(iter(obj.items()))
    if key == "term":
        return Term(value)
    if key == "phrase":
        return Phrase(value)
    if key == "hashtag":
        return Hashtag(value)
    if key == "cashtag":
        return Cashtag(value)
    if key == "not":
        return Not(node_from_json(value))
    if key == "and":
        return And(tuple(node_from_json(c) for c in value))
    if key == "or":
        return Or(tuple(node_from_json(c) for c in value))
    raise ValueError(f"unknown node key {key!r}")
