"""Recursive-descent parser producing a Program with statement table and CFGs."""

from __future__ import annotations

from ..errors import DuplicateFunction, MiniImpSyntaxError, UndefinedNameAtParseScope
from . import ast as A
from .cfg import build_cfg
from .lexer import Token, tokenize


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self, ahead=0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message, tok=None):
        tok = tok or self.peek()
        raise MiniImpSyntaxError(message, tok.line, tok.col)

    def expect(self, text) -> Token:
        tok = self.peek()
        if tok.text != text:
            self.fail(f"expected {text!r}, found {tok.text!r}")
        return self.next()

    def expect_name(self) -> Token:
        tok = self.peek()
        if tok.type != "name":
            self.fail(f"expected identifier, found {tok.text!r}")
        return self.next()

    # --- top level ---

    def parse_program(self):
        functions = []
        while self.peek().type != "eof":
            functions.append(self.parse_function())
        return functions

    def parse_function(self):
        self.expect("fn")
        name = self.expect_name().text
        self.expect("(")
        params = []
        if self.peek().text != ")":
            params.append(self.expect_name().text)
            while self.peek().text == ",":
                self.next()
                params.append(self.expect_name().text)
        if len(set(params)) != len(params):
            self.fail(f"duplicate parameter in function {name!r}")
        self.expect(")")
        body = self.parse_block()
        return A.FunctionDef(name=name, params=params, body=body)

    def parse_block(self):
        self.expect("{")
        stmts = []
        while self.peek().text != "}":
            stmts.append(self.parse_statement())
        self.expect("}")
        return stmts

    # --- statements ---

    def parse_statement(self):
        tok = self.peek()
        if tok.text == "let":
            self.next()
            name = self.expect_name().text
            self.expect("=")
            expr = self.parse_expr()
            self.expect(";")
            return A.Let(name=name, expr=expr, line=tok.line)
        if tok.text == "if":
            self.next()
            self.expect("(")
            cond = self.parse_expr()
            self.expect(")")
            then = self.parse_block()
            orelse = []
            if self.peek().text == "else":
                self.next()
                orelse = self.parse_block()
            return A.If(cond=cond, then=then, orelse=orelse, line=tok.line)
        if tok.text == "while":
            self.next()
            self.expect("(")
            cond = self.parse_expr()
            self.expect(")")
            body = self.parse_block()
            return A.While(cond=cond, body=body, line=tok.line)
        if tok.text == "return":
            self.next()
            expr = None
            if self.peek().text != ";":
                expr = self.parse_expr()
            self.expect(";")
            return A.Return(expr=expr, line=tok.line)
        if tok.text == "assert":
            self.next()
            self.expect("(")
            expr = self.parse_expr()
            self.expect(")")
            self.expect(";")
            return A.Assert(expr=expr, line=tok.line)
        if tok.text == "throw":
            self.next()
            expr = self.parse_expr()
            self.expect(";")
            return A.Throw(expr=expr, line=tok.line)
        if tok.text == "try":
            self.next()
            body = self.parse_block()
            self.expect("catch")
            self.expect("(")
            name = self.expect_name().text
            self.expect(")")
            handler = self.parse_block()
            return A.Try(body=body, catch_name=name, handler=handler, line=tok.line)
        if tok.type == "name":
            if self.peek(1).text == "=":
                self.next()
                self.expect("=")
                expr = self.parse_expr()
                self.expect(";")
                return A.Assign(name=tok.text, expr=expr, line=tok.line)
            if self.peek(1).text == "[":
                # Could be `a[i] = e;` or an expression statement; scan for
                # the matching bracket and check the token after it.
                depth, j = 0, self.pos + 1
                while j < len(self.tokens):
                    t = self.tokens[j].text
                    if t == "[":
                        depth += 1
                    elif t == "]":
                        depth -= 1
                        if depth == 0:
                            break
                    j += 1
                if j + 1 < len(self.tokens) and self.tokens[j + 1].text == "=":
                    self.next()
                    self.expect("[")
                    index = self.parse_expr()
                    self.expect("]")
                    self.expect("=")
                    expr = self.parse_expr()
                    self.expect(";")
                    return A.IndexAssign(name=tok.text, index=index, expr=expr, line=tok.line)
        expr = self.parse_expr()
        self.expect(";")
        return A.ExprStmt(expr=expr, line=tok.line)

    # --- expressions (precedence climbing) ---

    def parse_expr(self):
        return self.parse_or()

    def _binary_level(self, ops, sub):
        left = sub()
        while self.peek().text in ops and self.peek().type == "op":
            op = self.next().text
            left = A.Binary(op=op, left=left, right=sub())
        return left

    def parse_or(self):
        return self._binary_level(("||",), self.parse_and)

    def parse_and(self):
        return self._binary_level(("&&",), self.parse_eq)

    def parse_eq(self):
        return self._binary_level(("==", "!="), self.parse_rel)

    def parse_rel(self):
        return self._binary_level(("<", "<=", ">", ">="), self.parse_add)

    def parse_add(self):
        return self._binary_level(("+", "-"), self.parse_mul)

    def parse_mul(self):
        return self._binary_level(("*", "/", "%"), self.parse_unary)

    def parse_unary(self):
        tok = self.peek()
        if tok.type == "op" and tok.text in ("-", "!"):
            self.next()
            return A.Unary(op=tok.text, operand=self.parse_unary())
        return self.parse_postfix()

    def parse_postfix(self):
        expr = self.parse_primary()
        while self.peek().text == "[":
            self.next()
            index = self.parse_expr()
            self.expect("]")
            expr = A.Index(base=expr, index=index)
        return expr

    def parse_primary(self):
        tok = self.peek()
        if tok.type == "int":
            self.next()
            return A.IntLit(value=int(tok.text))
        if tok.text == "true":
            self.next()
            return A.BoolLit(value=True)
        if tok.text == "false":
            self.next()
            return A.BoolLit(value=False)
        if tok.text == "(":
            self.next()
            expr = self.parse_expr()
            self.expect(")")
            return expr
        if tok.text == "[":
            self.next()
            items = []
            if self.peek().text != "]":
                items.append(self.parse_expr())
                while self.peek().text == ",":
                    self.next()
                    items.append(self.parse_expr())
            self.expect("]")
            return A.ArrayLit(items=tuple(items))
        if tok.type == "name":
            self.next()
            if self.peek().text == "(":
                self.next()
                args = []
                if self.peek().text != ")":
                    args.append(self.parse_expr())
                    while self.peek().text == ",":
                        self.next()
                        args.append(self.parse_expr())
                self.expect(")")
                return A.Call(name=tok.text, args=tuple(args))
            return A.Var(name=tok.text)
        self.fail(f"expected expression, found {tok.text!r}")


def _assign_ids(functions):
    table = {}
    stmt_map = {}
    next_id = 0
    for fn in functions:
        for stmt in A.walk_statements(fn.body):
            stmt.sid = next_id
            table[next_id] = A.StatementInfo(
                function=fn.name,
                line=stmt.line,
                kind=stmt.kind,
                root_op=A.root_op(A.statement_expr(stmt)) if A.statement_expr(stmt) is not None else "lit",
            )
            stmt_map[next_id] = stmt
            next_id += 1
    return table, stmt_map


def _expr_names(expr, reads, calls):
    if isinstance(expr, A.Var):
        reads.append(expr.name)
    elif isinstance(expr, A.Index):
        _expr_names(expr.base, reads, calls)
        _expr_names(expr.index, reads, calls)
    elif isinstance(expr, A.Unary):
        _expr_names(expr.operand, reads, calls)
    elif isinstance(expr, A.Binary):
        _expr_names(expr.left, reads, calls)
        _expr_names(expr.right, reads, calls)
    elif isinstance(expr, A.Call):
        calls.append((expr.name, len(expr.args)))
        for a in expr.args:
            _expr_names(a, reads, calls)
    elif isinstance(expr, A.ArrayLit):
        for a in expr.items:
            _expr_names(a, reads, calls)


def _check_scopes(functions):
    """Lexical-order definedness check for variable reads and call targets."""
    arities = {fn.name: len(fn.params) for fn in functions}

    def check_expr(expr, defined, fn_name):
        if expr is None:
            return
        reads, calls = [], []
        _expr_names(expr, reads, calls)
        for name in reads:
            if name not in defined:
                raise UndefinedNameAtParseScope(
                    f"undefined variable {name!r} in function {fn_name!r}")
        for name, nargs in calls:
            if name not in arities:
                raise UndefinedNameAtParseScope(
                    f"call to undefined function {name!r} in {fn_name!r}")
            if arities[name] != nargs:
                raise UndefinedNameAtParseScope(
                    f"function {name!r} takes {arities[name]} arguments, got {nargs}")

    def check_block(stmts, defined, fn_name):
        for s in stmts:
            if isinstance(s, A.Let):
                check_expr(s.expr, defined, fn_name)
                defined.add(s.name)
            elif isinstance(s, A.Assign):
                if s.name not in defined:
                    raise UndefinedNameAtParseScope(
                        f"assignment to undeclared variable {s.name!r} in {fn_name!r}")
                check_expr(s.expr, defined, fn_name)
            elif isinstance(s, A.IndexAssign):
                if s.name not in defined:
                    raise UndefinedNameAtParseScope(
                        f"assignment to undeclared variable {s.name!r} in {fn_name!r}")
                check_expr(s.index, defined, fn_name)
                check_expr(s.expr, defined, fn_name)
            elif isinstance(s, A.If):
                check_expr(s.cond, defined, fn_name)
                check_block(s.then, defined, fn_name)
                check_block(s.orelse, defined, fn_name)
            elif isinstance(s, A.While):
                check_expr(s.cond, defined, fn_name)
                check_block(s.body, defined, fn_name)
            elif isinstance(s, A.Try):
                check_block(s.body, defined, fn_name)
                defined.add(s.catch_name)
                check_block(s.handler, defined, fn_name)
            else:
                check_expr(A.statement_expr(s), defined, fn_name)

    for fn in functions:
        check_block(fn.body, set(fn.params), fn.name)


def parse(source: str, source_path: str = "<string>") -> A.Program:
    tokens = tokenize(source)
    functions = _Parser(tokens).parse_program()
    seen = set()
    for fn in functions:
        if fn.name in seen:
            raise DuplicateFunction(f"function {fn.name!r} defined twice")
        seen.add(fn.name)
    table, stmt_map = _assign_ids(functions)
    _check_scopes(functions)
    for fn in functions:
        fn.cfg = build_cfg(fn)
    return A.Program(
        functions={fn.name: fn for fn in functions},
        source_path=source_path,
        statement_table=table,
        statements=stmt_map,
        source_text=source,
    )
