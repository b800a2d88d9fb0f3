"""Source-to-subtree ingestion: parser adapters, identifier post-processing,
and per-line context extraction.

The engine never links a specific parser. A grammar adapter is any callable
mapping source text to a SyntaxNode tree (total: syntax errors become
"ERROR"-kind nodes, never exceptions). A stdlib-ast backed adapter for
Python is registered by default; external parsers can feed trees in through
the SyntaxNode interchange JSON instead.
"""
from __future__ import annotations

import ast
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .encoding import EncodedTree, UP, validate

ERROR_KIND = "ERROR"
LINE_KIND = "LINE"
IDENTIFIER_PREFIX = "id:"

Span = tuple[int, int, int, int]  # start_line, start_col, end_line, end_col (0-based lines)


class UnknownGrammar(KeyError):
    pass


@dataclass(frozen=True)
class SyntaxNode:
    kind: str
    span: Span
    children: tuple["SyntaxNode", ...] = ()

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "span": list(self.span),
            "children": [c.to_json_dict() for c in self.children],
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "SyntaxNode":
        span = tuple(doc["span"])
        if len(span) != 4:
            raise ValueError(f"span must have 4 entries, got {doc['span']!r}")
        return cls(
            kind=doc["kind"],
            span=span,  # type: ignore[arg-type]
            children=tuple(cls.from_json_dict(c) for c in doc.get("children", ())),
        )


@dataclass(frozen=True)
class Submission:
    id: str
    path: str
    source: str
    tree: SyntaxNode


@dataclass(frozen=True)
class GrammarAdapter:
    grammar: str
    parse: Callable[[str], SyntaxNode]
    identifier_kinds: frozenset[str] = frozenset()


_REGISTRY: dict[str, GrammarAdapter] = {}


def register_grammar(grammar: str, parse: Callable[[str], SyntaxNode],
                     identifier_kinds: Iterable[str] = ()) -> None:
    _REGISTRY[grammar] = GrammarAdapter(grammar, parse, frozenset(identifier_kinds))


def adapter_for(grammar: str) -> GrammarAdapter:
    try:
        return _REGISTRY[grammar]
    except KeyError:
        raise UnknownGrammar(grammar) from None


def parse_source(source: str, grammar: str) -> SyntaxNode:
    return adapter_for(grammar).parse(source)


def prepare_source(source: str, grammar: str) -> SyntaxNode:
    """Parse and post-process in one step; what training pipelines use."""
    adapter = adapter_for(grammar)
    return postprocess_identifiers(adapter.parse(source), source, adapter.identifier_kinds)


def load_submission(sub_id: str, path: str, grammar: str) -> Submission:
    with open(path, "r", encoding="utf-8") as handle:
        source = handle.read()
    return Submission(id=sub_id, path=path, source=source, tree=prepare_source(source, grammar))


def _slice_span(lines: list[str], span: Span) -> str:
    sl, sc, el, ec = span
    if sl >= len(lines):
        return ""
    if sl == el:
        return lines[sl][sc:ec]
    parts = [lines[sl][sc:]]
    parts.extend(lines[sl + 1:el])
    parts.append(lines[el][:ec] if el < len(lines) else "")
    return "\n".join(parts)


def postprocess_identifiers(root: SyntaxNode, source: str,
                            identifier_kinds: Iterable[str]) -> SyntaxNode:
    """Give every identifier-kind leaf a child labeled with its token text.

    The child's kind is "id:" + text, so identifier names can never collide
    with grammar kind names. Non-identifier nodes are returned unchanged.
    """
    kinds = frozenset(identifier_kinds)
    if not kinds:
        return root
    lines = source.split("\n")

    def rewrite(node: SyntaxNode) -> SyntaxNode:
        if not node.children:
            if node.kind in kinds:
                text = _slice_span(lines, node.span)
                if text:
                    child = SyntaxNode(kind=IDENTIFIER_PREFIX + text, span=node.span)
                    return SyntaxNode(node.kind, node.span, (child,))
            return node
        return SyntaxNode(node.kind, node.span, tuple(rewrite(c) for c in node.children))

    return rewrite(root)


def extract_line_context(root: SyntaxNode, line: int) -> EncodedTree | None:
    """Encode the context subtree for a 0-based line, or None if empty.

    The context is the set of maximal nodes whose span starts on the line
    (maximal: the parent starts on a different line), with all their
    descendants. A single maximal node is encoded directly; several go
    under a synthetic "LINE" root.
    """
    maximal: list[SyntaxNode] = []

    def collect(node: SyntaxNode, parent_line: int) -> None:
        if node.span[0] == line and parent_line != line:
            maximal.append(node)
            return
        for child in node.children:
            collect(child, node.span[0])

    collect(root, -1)
    if not maximal:
        return None
    items: list = []

    def encode(node: SyntaxNode) -> None:
        items.append(node.kind)
        for child in node.children:
            encode(child)
            items.append(UP)

    if len(maximal) == 1:
        encode(maximal[0])
    else:
        items.append(LINE_KIND)
        for node in maximal:
            encode(node)
            items.append(UP)
    return validate(items)


# --- stdlib-ast adapter for Python -----------------------------------------

_STMT_KINDS = {
    "Module": "module",
    "FunctionDef": "function_definition",
    "AsyncFunctionDef": "function_definition",
    "ClassDef": "class_definition",
    "Assign": "assignment",
    "AnnAssign": "assignment",
    "AugAssign": "augmented_assignment",
    "Expr": "expression_statement",
    "Return": "return_statement",
    "If": "if_statement",
    "While": "while_statement",
    "For": "for_statement",
    "AsyncFor": "for_statement",
    "With": "with_statement",
    "AsyncWith": "with_statement",
    "Try": "try_statement",
    "Raise": "raise_statement",
    "Import": "import_statement",
    "ImportFrom": "import_from_statement",
    "Pass": "pass_statement",
    "Break": "break_statement",
    "Continue": "continue_statement",
    "Assert": "assert_statement",
    "Delete": "delete_statement",
    "Global": "global_statement",
    "Nonlocal": "nonlocal_statement",
    "Name": "identifier",
    "arg": "identifier",
    "arguments": "parameters",
    "Attribute": "attribute",
    "Call": "call",
    "BinOp": "binary_operator",
    "UnaryOp": "unary_operator",
    "BoolOp": "boolean_operator",
    "Compare": "comparison_operator",
    "IfExp": "conditional_expression",
    "Lambda": "lambda",
    "List": "list",
    "Tuple": "tuple",
    "Set": "set",
    "Dict": "dictionary",
    "Subscript": "subscript",
    "Slice": "slice",
    "Starred": "list_splat",
    "keyword": "keyword_argument",
    "ListComp": "list_comprehension",
    "SetComp": "set_comprehension",
    "DictComp": "dictionary_comprehension",
    "GeneratorExp": "generator_expression",
    "comprehension": "for_in_clause",
    "NamedExpr": "named_expression",
    "Await": "await",
    "Yield": "yield",
    "YieldFrom": "yield",
    "FormattedValue": "interpolation",
}

_OP_TOKENS = {
    "Add": "+", "Sub": "-", "Mult": "*", "MatMult": "@", "Div": "/", "Mod": "%",
    "Pow": "**", "LShift": "<<", "RShift": ">>", "BitOr": "|", "BitXor": "^",
    "BitAnd": "&", "FloorDiv": "//", "UAdd": "+", "USub": "-", "Not": "not",
    "Invert": "~", "And": "and", "Or": "or", "Eq": "==", "NotEq": "!=",
    "Lt": "<", "LtE": "<=", "Gt": ">", "GtE": ">=", "Is": "is", "IsNot": "is not",
    "In": "in", "NotIn": "not in",
}


def _snake(name: str) -> str:
    out = []
    for i, ch in enumerate(name):
        if ch.isupper() and i > 0:
            out.append("_")
        out.append(ch.lower())
    return "".join(out)


def _kind_of(node: ast.AST) -> str:
    name = type(node).__name__
    return _STMT_KINDS.get(name, _snake(name))


def _own_span(node: ast.AST) -> Span | None:
    lineno = getattr(node, "lineno", None)
    end_lineno = getattr(node, "end_lineno", None)
    if lineno is None or end_lineno is None:
        return None
    return (lineno - 1, node.col_offset, end_lineno - 1, node.end_col_offset)


def _union_span(spans: list[Span]) -> Span:
    start = min((s[0], s[1]) for s in spans)
    end = max((s[2], s[3]) for s in spans)
    return (start[0], start[1], end[0], end[1])


def _constant_kind(value) -> str:
    if value is True:
        return "true"
    if value is False:
        return "false"
    if value is None:
        return "none"
    if isinstance(value, str):
        return "string"
    if isinstance(value, bytes):
        return "string"
    if isinstance(value, int):
        return "integer"
    if isinstance(value, float):
        return "float"
    if isinstance(value, complex):
        return "float"
    return "ellipsis"


class _AstBuilder:
    def __init__(self, source: str):
        self.lines = source.split("\n")

    def build(self, node: ast.AST) -> SyntaxNode | None:
        name = type(node).__name__
        if name in ("Load", "Store", "Del", "TypeIgnore", "expr_context"):
            return None
        if name == "Constant":
            span = _own_span(node)
            return SyntaxNode(_constant_kind(node.value), span) if span else None
        if name == "JoinedStr":
            span = _own_span(node)
            return SyntaxNode("string", span) if span else None
        children = self._children_of(node)
        span = _own_span(node)
        if span is None:
            if not children:
                return None
            span = _union_span([c.span for c in children])
        elif children:
            span = _union_span([span] + [c.span for c in children])
        return SyntaxNode(_kind_of(node), span, tuple(children))

    def _children_of(self, node: ast.AST) -> list[SyntaxNode]:
        name = type(node).__name__
        built: list[SyntaxNode] = []
        if name == "BinOp":
            built = self._with_op_tokens([node.left, node.right], [node.op])
        elif name == "BoolOp":
            built = self._with_op_tokens(list(node.values), [node.op] * (len(node.values) - 1))
        elif name == "Compare":
            built = self._with_op_tokens([node.left] + list(node.comparators), list(node.ops))
        elif name == "UnaryOp":
            operand = self.build(node.operand)
            if operand is not None:
                span = _own_span(node)
                if span is not None:
                    op_span = (span[0], span[1], operand.span[0], operand.span[1])
                    built.append(SyntaxNode(_OP_TOKENS.get(type(node.op).__name__, "op"), op_span))
                built.append(operand)
        elif name == "AugAssign":
            target = self.build(node.target)
            value = self.build(node.value)
            if target is not None and value is not None:
                op_span = (target.span[2], target.span[3], value.span[0], value.span[1])
                token = _OP_TOKENS.get(type(node.op).__name__, "op") + "="
                built = [target, SyntaxNode(token, op_span), value]
        elif name == "Call":
            func = self.build(node.func)
            args = [self.build(a) for a in list(node.args) + list(node.keywords)]
            args = [a for a in args if a is not None]
            if func is not None:
                built.append(func)
                span = _own_span(node)
                if span is not None:
                    arg_span = (func.span[2], func.span[3], span[2], span[3])
                    built.append(SyntaxNode("argument_list", arg_span, tuple(args)))
                else:
                    built.extend(args)
        elif name == "Attribute":
            value = self.build(node.value)
            if value is not None:
                built.append(value)
            span = _own_span(node)
            if span is not None and span[2] < len(self.lines):
                attr = node.attr
                attr_col = span[3] - len(attr)
                if self.lines[span[2]][attr_col:span[3]] == attr:
                    attr_span = (span[2], attr_col, span[2], span[3])
                    built.append(SyntaxNode("identifier", attr_span,
                                            (SyntaxNode(IDENTIFIER_PREFIX + attr, attr_span),)))
        elif name in ("FunctionDef", "AsyncFunctionDef", "ClassDef"):
            span = _own_span(node)
            if span is not None and span[0] < len(self.lines):
                line = self.lines[span[0]]
                col = line.find(node.name, span[1])
                if col != -1:
                    name_span = (span[0], col, span[0], col + len(node.name))
                    built.append(SyntaxNode("identifier", name_span))
            for child in ast.iter_child_nodes(node):
                out = self.build(child)
                if out is not None:
                    built.append(out)
        else:
            for child in ast.iter_child_nodes(node):
                out = self.build(child)
                if out is not None:
                    built.append(out)
        built.sort(key=lambda n: (n.span[0], n.span[1]))
        return built

    def _with_op_tokens(self, operands: list, ops: list) -> list[SyntaxNode]:
        built = [self.build(o) for o in operands]
        built = [b for b in built if b is not None]
        out: list[SyntaxNode] = []
        for i, operand in enumerate(built):
            if i > 0 and i - 1 < len(ops) and len(built) == len(ops) + 1:
                prev = built[i - 1]
                op_span = (prev.span[2], prev.span[3], operand.span[0], operand.span[1])
                token = _OP_TOKENS.get(type(ops[i - 1]).__name__, "op")
                out.append(SyntaxNode(token, op_span))
            out.append(operand)
        return out


def _full_span(lines: list[str]) -> Span:
    last = len(lines) - 1
    return (0, 0, last, len(lines[last]))


def _line_span(lines: list[str], line: int) -> Span:
    return (line, 0, line, len(lines[line]))


def _insert_error(node: SyntaxNode, span: Span) -> SyntaxNode:
    for child in node.children:
        if (child.span[0], child.span[1]) <= (span[0], span[1]) and \
                (span[2], span[3]) <= (child.span[2], child.span[3]):
            replaced = _insert_error(child, span)
            children = tuple(replaced if c is child else c for c in node.children)
            return SyntaxNode(node.kind, node.span, children)
    children = list(node.children) + [SyntaxNode(ERROR_KIND, span)]
    children.sort(key=lambda n: (n.span[0], n.span[1]))
    return SyntaxNode(node.kind, node.span, tuple(children))


def parse_python(source: str) -> SyntaxNode:
    """Total Python parser on stdlib ast.

    On a syntax error the offending line is blanked and recorded as an
    ERROR node, repeatedly, so student code with typos still yields a
    useful partial tree.
    """
    lines = source.split("\n")
    work = list(lines)
    blanked: list[int] = []
    tree = None
    while True:
        try:
            tree = ast.parse("\n".join(work))
            break
        except (SyntaxError, ValueError) as err:
            lineno = getattr(err, "lineno", None)
            bad = lineno - 1 if lineno is not None else None
            if bad is None or not 0 <= bad < len(work) or bad in blanked:
                tree = None
                break
            blanked.append(bad)
            work[bad] = ""
    span = _full_span(lines)
    if tree is None:
        return SyntaxNode("module", span, (SyntaxNode(ERROR_KIND, span),))
    root = _AstBuilder("\n".join(work)).build(tree)
    if root is None:
        root = SyntaxNode("module", span)
    root = SyntaxNode(root.kind, span, root.children)
    for bad in sorted(blanked):
        root = _insert_error(root, _line_span(lines, bad))
    return root


register_grammar("python", parse_python, identifier_kinds={"identifier"})
