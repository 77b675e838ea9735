"""A small JSONPath subset for Thing Description discovery.

Grammar::

    path     := '$' segment*
    segment  := '.' NAME | '.*' | '[*]' | '[' INT ']' | '[' QUOTED ']'
              | '[?(' '@' relpath ('==' | '!=') literal ')]'
    relpath  := ('.' NAME | '[' INT ']' | '[' QUOTED ']')*
    literal  := QUOTED | NUMBER | 'true' | 'false' | 'null'

``NAME`` is ``[A-Za-z0-9_@:-]+``.  A filter applied to an array keeps the
matching elements; applied to an object it keeps the object itself when the
object matches, which is what lets ``$[?(@.thing_class=='service')]`` select
whole documents.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Any

from swarmloop.errors import MalformedExpression

_NAME = re.compile(r"[A-Za-z0-9_@:\-]+")
_INT = re.compile(r"-?\d+")
_NUMBER = re.compile(r"-?\d+(\.\d+)?([eE][+-]?\d+)?")
_MISSING = object()


@dataclass(frozen=True)
class Step:
    kind: str  # field | wildcard | index | filter
    key: Any = None
    rel: tuple[Step, ...] = ()
    op: str = "=="
    value: Any = None


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def fail(self, why: str):
        raise MalformedExpression(f"{why} at offset {self.pos} in {self.text!r}")

    def peek(self, s: str) -> bool:
        return self.text.startswith(s, self.pos)

    def eat(self, s: str) -> None:
        if not self.peek(s):
            self.fail(f"expected {s!r}")
        self.pos += len(s)

    def match(self, pattern: re.Pattern) -> str:
        m = pattern.match(self.text, self.pos)
        if not m:
            self.fail("unexpected token")
        self.pos = m.end()
        return m.group(0)

    def quoted(self) -> str:
        quote = self.text[self.pos]
        end = self.text.find(quote, self.pos + 1)
        if end < 0:
            self.fail("unterminated string")
        value = self.text[self.pos + 1 : end]
        self.pos = end + 1
        return value

    def parse(self) -> tuple[Step, ...]:
        self.eat("$")
        steps = self.segments(allow_wild=True, allow_filter=True)
        if self.pos != len(self.text):
            self.fail("trailing characters")
        return steps

    def segments(self, allow_wild: bool, allow_filter: bool) -> tuple[Step, ...]:
        steps = []
        while self.pos < len(self.text):
            if self.peek(".*") and allow_wild:
                self.pos += 2
                steps.append(Step("wildcard"))
            elif self.peek("."):
                self.pos += 1
                steps.append(Step("field", self.match(_NAME)))
            elif self.peek("[?(") and allow_filter:
                self.pos += 3
                steps.append(self.filter())
                self.eat(")]")
            elif self.peek("[*]") and allow_wild:
                self.pos += 3
                steps.append(Step("wildcard"))
            elif self.peek("['") or self.peek('["'):
                self.pos += 1
                steps.append(Step("field", self.quoted()))
                self.eat("]")
            elif self.peek("["):
                self.pos += 1
                steps.append(Step("index", int(self.match(_INT))))
                self.eat("]")
            else:
                break
        return tuple(steps)

    def filter(self) -> Step:
        self.eat("@")
        rel = self.segments(allow_wild=False, allow_filter=False)
        if self.peek("=="):
            op = "=="
        elif self.peek("!="):
            op = "!="
        else:
            self.fail("expected == or !=")
        self.pos += 2
        return Step("filter", rel=rel, op=op, value=self.literal())

    def literal(self) -> Any:
        if self.peek("'") or self.peek('"'):
            return self.quoted()
        for word, value in (("true", True), ("false", False), ("null", None)):
            if self.peek(word):
                self.pos += len(word)
                return value
        text = self.match(_NUMBER)
        return json.loads(text)


def compile_path(expression: str) -> tuple[Step, ...]:
    if not isinstance(expression, str):
        raise MalformedExpression(f"expression must be a string, got {type(expression).__name__}")
    return _Parser(expression.strip()).parse()


def _same(a: Any, b: Any) -> bool:
    if isinstance(a, bool) or isinstance(b, bool):
        return isinstance(a, bool) and isinstance(b, bool) and a == b
    return a == b


def _resolve(node: Any, rel: tuple[Step, ...]) -> Any:
    for step in rel:
        if step.kind == "field" and isinstance(node, dict) and step.key in node:
            node = node[step.key]
        elif step.kind == "index" and isinstance(node, list) and -len(node) <= step.key < len(node):
            node = node[step.key]
        else:
            return _MISSING
    return node


def _matches(node: Any, step: Step) -> bool:
    value = _resolve(node, step.rel)
    if value is _MISSING or isinstance(value, (dict, list)):
        return False
    equal = _same(value, step.value)
    return equal if step.op == "==" else not equal


def evaluate(steps: tuple[Step, ...], document: Any) -> list[Any]:
    nodes = [document]
    for step in steps:
        out = []
        for node in nodes:
            if step.kind == "field":
                if isinstance(node, dict) and step.key in node:
                    out.append(node[step.key])
            elif step.kind == "wildcard":
                if isinstance(node, dict):
                    out.extend(node.values())
                elif isinstance(node, list):
                    out.extend(node)
            elif step.kind == "index":
                if isinstance(node, list) and -len(node) <= step.key < len(node):
                    out.append(node[step.key])
            elif step.kind == "filter":
                if isinstance(node, list):
                    out.extend(item for item in node if _matches(item, step))
                elif _matches(node, step):
                    out.append(node)
        nodes = out
    return nodes


def query(expression: str, document: Any) -> list[Any]:
    return evaluate(compile_path(expression), document)
