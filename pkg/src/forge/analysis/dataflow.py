"""Intraprocedural def-use chains over the syntax tree.

A def is an assignment target, loop/with/except binding, parameter, import
binding, or def/class name; a use is a name read, bound to the nearest
lexically preceding def in the scope chain.  Class scopes are skipped when
resolving from nested functions, matching Python's lookup rules.  Names
inside error nodes are ignored; unresolved uses are counted, not edged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .parsing import Node, SyntaxTree

Site = tuple[int, int]


@dataclass(frozen=True)
class DefUseEdge:
    variable: str
    def_site: Site
    use_site: Site
    scope: int = 0
    def_index: int = 0


@dataclass
class DefUseGraph:
    edges: list[DefUseEdge] = field(default_factory=list)
    unresolved: int = 0


class _Scope:
    __slots__ = ("kind", "parent", "defs", "ordinal", "counter")

    def __init__(self, kind: str, parent: "_Scope | None", ordinal: int):
        self.kind = kind
        self.parent = parent
        self.defs: dict[str, tuple[Site, int]] = {}
        self.ordinal = ordinal
        self.counter = 0


class _Analyzer:
    def __init__(self):
        self.edges: list[DefUseEdge] = []
        self.unresolved = 0
        self.scope_count = 0

    def new_scope(self, kind: str, parent: _Scope | None) -> _Scope:
        scope = _Scope(kind, parent, self.scope_count)
        self.scope_count += 1
        return scope

    def define(self, scope: _Scope, node: Node) -> None:
        tok = node.token
        scope.defs[tok.text] = ((tok.line, tok.col), scope.counter)
        scope.counter += 1

    def use(self, scope: _Scope, node: Node) -> None:
        tok = node.token
        use_site = (tok.line, tok.col)
        s = scope
        while s is not None:
            if s is scope or s.kind != "class":
                found = s.defs.get(tok.text)
                # only a lexically preceding def counts (comprehension elts
                # precede their own loop target, for example)
                if found is not None and found[0] < use_site:
                    site, index = found
                    self.edges.append(
                        DefUseEdge(tok.text, site, use_site, s.ordinal, index)
                    )
                    return
            s = s.parent
        self.unresolved += 1

    # -- walkers ---------------------------------------------------------

    def walk_module(self, root: Node) -> None:
        scope = self.new_scope("module", None)
        for child in root.children:
            self.stmt(child, scope)

    def stmt(self, node: Node, scope: _Scope) -> None:
        kind = node.kind
        if kind == "error":
            return
        if kind == "assign_stmt":
            # children alternate target, '=', ... value last
            value = node.children[-1]
            targets = [c for c in node.children[:-1] if not c.is_leaf or c.token.text != "="]
            self.expr(value, scope)
            for target in targets:
                self.bind_target(target, scope)
            return
        if kind == "ann_assign_stmt":
            # [target, ':', annotation, ('=', value)?]
            for child in node.children[2:]:
                if not (child.is_leaf and child.token.text in (":", "=")):
                    self.expr(child, scope)
            self.bind_target(node.children[0], scope)
            return
        if kind == "aug_assign_stmt":
            target, _op, value = node.children[0], node.children[1], node.children[2]
            self.expr(value, scope)
            self.expr(target, scope)     # read of the prior binding
            self.bind_target(target, scope)
            return
        if kind == "expr_stmt":
            self.expr(node.children[0], scope)
            return
        if kind in ("return_stmt", "raise_stmt", "assert_stmt", "del_stmt"):
            for child in node.children:
                if not child.is_leaf:
                    self.expr(child, scope)
                elif child.token.kind == "identifier":
                    self.expr(child, scope)
            return
        if kind in ("global_stmt", "nonlocal_stmt", "pass_stmt", "break_stmt", "continue_stmt"):
            return
        if kind == "import_stmt":
            self.import_bindings(node, scope)
            return
        if kind == "from_import_stmt":
            self.from_import_bindings(node, scope)
            return
        if kind == "if_stmt":
            for child in node.children:
                if child.kind in ("block", "elif_clause", "else_clause"):
                    self.suite(child, scope)
                elif not child.is_leaf:
                    self.expr(child, scope)
            return
        if kind == "while_stmt":
            for child in node.children:
                if child.kind in ("block", "else_clause"):
                    self.suite(child, scope)
                elif not child.is_leaf:
                    self.expr(child, scope)
            return
        if kind == "for_stmt":
            # [for, target, in, iter, ':', block, else?]
            target, iterable = node.children[1], node.children[3]
            self.expr(iterable, scope)
            self.bind_target(target, scope)
            for child in node.children[4:]:
                if child.kind in ("block", "else_clause"):
                    self.suite(child, scope)
            return
        if kind == "with_stmt":
            for child in node.children:
                if child.kind == "with_item":
                    self.expr(child.children[0], scope)
                    if len(child.children) == 3:
                        self.bind_target(child.children[2], scope)
                elif child.kind == "block":
                    self.suite(child, scope)
            return
        if kind == "try_stmt":
            for child in node.children:
                if child.kind == "block":
                    self.suite(child, scope)
                elif child.kind == "except_clause":
                    names = [c for c in child.children if not c.is_leaf]
                    leaf_ids = [c for c in child.children
                                if c.is_leaf and c.token.kind == "identifier"]
                    for sub in names:
                        if sub.kind != "block":
                            self.expr(sub, scope)
                    saw_as = any(c.is_leaf and c.token.text == "as" for c in child.children)
                    if saw_as and leaf_ids:
                        self.define(scope, leaf_ids[-1])
                    for sub in child.children:
                        if sub.kind == "block":
                            self.suite(sub, scope)
                elif child.kind in ("else_clause", "finally_clause"):
                    self.suite(child, scope)
            return
        if kind == "function_def":
            self.function(node, scope)
            return
        if kind == "class_def":
            self.klass(node, scope)
            return
        if kind == "decorated":
            for child in node.children:
                if child.kind == "decorator":
                    self.expr(child.children[1], scope)
                else:
                    self.stmt(child, scope)
            return
        if kind == "multi_stmt":
            for child in node.children:
                if not child.is_leaf:
                    self.stmt(child, scope)
            return
        if kind == "block":
            self.suite(node, scope)
            return
        # anything else at statement position: treat as expression context
        self.expr(node, scope)

    def suite(self, node: Node, scope: _Scope) -> None:
        for child in node.children:
            if child.is_leaf:
                continue
            if child.kind == "block":
                self.suite(child, scope)
            else:
                self.stmt(child, scope)

    def bind_target(self, node: Node, scope: _Scope) -> None:
        if node.is_leaf:
            if node.token.kind == "identifier":
                self.define(scope, node)
            return
        if node.kind in ("tuple_expr", "list_expr", "paren_expr"):
            for child in node.children:
                if not child.is_leaf:
                    self.bind_target(child, scope)
                elif child.token.kind == "identifier":
                    self.define(scope, child)
            return
        if node.kind == "star_expr":
            self.bind_target(node.children[-1], scope)
            return
        if node.kind in ("attribute", "subscript"):
            # a.b = x / a[i] = x: the base and index are reads, nothing is bound
            self.expr(node.children[0], scope)
            for child in node.children[1:]:
                if not child.is_leaf:
                    self.expr(child, scope)
            return
        self.expr(node, scope)

    def function(self, node: Node, scope: _Scope) -> None:
        name = node.children[1]
        self.define(scope, name)
        params = next(c for c in node.children if c.kind == "parameters")
        # defaults and annotations evaluate in the enclosing scope
        for param in params.children:
            if param.kind != "param":
                continue
            for sub in param.children:
                if not sub.is_leaf:
                    self.expr(sub, scope)
        ret = [c for c in node.children if not c.is_leaf and c.kind not in ("parameters", "block")]
        for sub in ret:
            self.expr(sub, scope)
        inner = self.new_scope("function", scope)
        for param in params.children:
            if param.kind != "param":
                continue
            ids = [c for c in param.children if c.is_leaf and c.token.kind == "identifier"]
            if ids:
                self.define(inner, ids[0])
        body = next(c for c in node.children if c.kind == "block")
        self.suite(body, inner)

    def klass(self, node: Node, scope: _Scope) -> None:
        name = node.children[1]
        self.define(scope, name)
        for child in node.children:
            if child.kind == "arguments":
                self.expr(child, scope)
        inner = self.new_scope("class", scope)
        body = next(c for c in node.children if c.kind == "block")
        self.suite(body, inner)

    def import_bindings(self, node: Node, scope: _Scope) -> None:
        # 'import a.b as x, c' — binds x (alias) or the top-level name
        i = 1
        children = node.children
        while i < len(children):
            child = children[i]
            if child.kind == "dotted_name":
                alias = None
                if i + 2 < len(children) and children[i + 1].is_leaf \
                        and children[i + 1].token.text == "as":
                    alias = children[i + 2]
                    i += 3
                else:
                    i += 1
                self.define(scope, alias if alias is not None else child.children[0])
            else:
                i += 1

    def from_import_bindings(self, node: Node, scope: _Scope) -> None:
        for child in node.children:
            if child.kind == "import_name":
                ids = [c for c in child.children if c.is_leaf and c.token.kind == "identifier"]
                self.define(scope, ids[-1])

    def expr(self, node: Node, scope: _Scope) -> None:
        if node.is_leaf:
            if node.token.kind == "identifier":
                self.use(scope, node)
            return
        kind = node.kind
        if kind == "error":
            return
        if kind == "attribute":
            self.expr(node.children[0], scope)
            return
        if kind == "keyword_arg":
            self.expr(node.children[2], scope)
            return
        if kind == "lambda_def":
            params = node.children[1]
            for param in params.children:
                if param.kind != "param":
                    continue
                for sub in param.children:
                    if not sub.is_leaf:
                        self.expr(sub, scope)
            inner = self.new_scope("function", scope)
            for param in params.children:
                if param.kind != "param":
                    continue
                ids = [c for c in param.children if c.is_leaf and c.token.kind == "identifier"]
                if ids:
                    self.define(inner, ids[0])
            self.expr(node.children[-1], inner)
            return
        if kind == "comprehension":
            self.comprehension(node, scope)
            return
        if kind in ("function_def", "class_def"):
            self.stmt(node, scope)
            return
        for child in node.children:
            self.expr(child, scope)

    def comprehension(self, node: Node, scope: _Scope) -> None:
        # [elt, 'for', target, 'in', iter, ('if' cond | 'for' ...)*]
        inner = self.new_scope("comprehension", scope)
        elt = node.children[0]
        i = 1
        first_iter = True
        while i < len(node.children):
            child = node.children[i]
            if child.is_leaf and child.token.text == "for":
                target, iterable = node.children[i + 1], node.children[i + 3]
                # the first iterable evaluates in the enclosing scope
                self.expr(iterable, scope if first_iter else inner)
                first_iter = False
                self.bind_target(target, inner)
                i += 4
            elif child.is_leaf and child.token.text == "if":
                self.expr(node.children[i + 1], inner)
                i += 2
            else:
                i += 1
        self.expr(elt, inner)


def def_use(tree: SyntaxTree) -> DefUseGraph:
    analyzer = _Analyzer()
    analyzer.walk_module(tree.root)
    edges = sorted(analyzer.edges, key=lambda e: e.use_site)
    return DefUseGraph(edges=edges, unresolved=analyzer.unresolved)
