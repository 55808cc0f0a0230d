"""AST node definitions and the parsed-program container."""

from __future__ import annotations

from dataclasses import dataclass, field


# --- expressions ---

@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class ArrayLit:
    items: tuple


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Index:
    base: object
    index: object


@dataclass(frozen=True)
class Unary:
    op: str
    operand: object


@dataclass(frozen=True)
class Binary:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


def root_op(expr) -> str:
    """Top-level operator label of an expression, used for p0 classification."""
    if isinstance(expr, Binary):
        return expr.op
    if isinstance(expr, Unary):
        return expr.op
    if isinstance(expr, Call):
        return "call"
    if isinstance(expr, Var):
        return "var"
    if isinstance(expr, Index):
        return "index"
    if isinstance(expr, IntLit):
        return "lit"
    if isinstance(expr, BoolLit):
        return "boollit"
    if isinstance(expr, ArrayLit):
        return "array"
    raise TypeError(f"not an expression: {expr!r}")


# --- statements ---
# Statements that evaluate an expression carry a statement id (sid) and a
# source line.  `Try` is purely structural and has no sid of its own.

@dataclass
class Let:
    name: str
    expr: object
    line: int = 0
    sid: int = -1
    kind = "let"


@dataclass
class Assign:
    name: str
    expr: object
    line: int = 0
    sid: int = -1
    kind = "assign"


@dataclass
class IndexAssign:
    name: str
    index: object
    expr: object
    line: int = 0
    sid: int = -1
    kind = "index_assign"


@dataclass
class If:
    cond: object
    then: list
    orelse: list
    line: int = 0
    sid: int = -1
    kind = "if_cond"


@dataclass
class While:
    cond: object
    body: list
    line: int = 0
    sid: int = -1
    kind = "while_cond"


@dataclass
class Return:
    expr: object = None
    line: int = 0
    sid: int = -1
    kind = "return"


@dataclass
class Assert:
    expr: object = None
    line: int = 0
    sid: int = -1
    kind = "assert"


@dataclass
class Throw:
    expr: object = None
    line: int = 0
    sid: int = -1
    kind = "throw"


@dataclass
class ExprStmt:
    expr: object = None
    line: int = 0
    sid: int = -1
    kind = "expr"


@dataclass
class Try:
    body: list = field(default_factory=list)
    catch_name: str = ""
    handler: list = field(default_factory=list)
    line: int = 0
    kind = "try"


BRANCH_KINDS = ("if_cond", "while_cond")


def statement_expr(stmt):
    """The expression whose evaluation produces the statement's value."""
    if isinstance(stmt, (Let, Assign, IndexAssign, Assert, Throw, ExprStmt, Return)):
        return stmt.expr
    if isinstance(stmt, If):
        return stmt.cond
    if isinstance(stmt, While):
        return stmt.cond
    return None


def walk_statements(stmts):
    """Yield every sid-bearing statement in pre-order (Try is transparent)."""
    for s in stmts:
        if isinstance(s, Try):
            yield from walk_statements(s.body)
            yield from walk_statements(s.handler)
            continue
        yield s
        if isinstance(s, If):
            yield from walk_statements(s.then)
            yield from walk_statements(s.orelse)
        elif isinstance(s, While):
            yield from walk_statements(s.body)


@dataclass
class StatementInfo:
    function: str
    line: int
    kind: str
    root_op: str


@dataclass
class FunctionDef:
    name: str
    params: list
    body: list
    cfg: object = None  # ControlFlowGraph, attached after parsing

    def statement_ids(self):
        return [s.sid for s in walk_statements(self.body)]

    def loop_bodies(self):
        """Map while-cond sid -> set of sids syntactically inside the loop."""
        out = {}
        for s in walk_statements(self.body):
            if isinstance(s, While):
                out[s.sid] = {b.sid for b in walk_statements(s.body)}
        return out


@dataclass
class Program:
    functions: dict  # name -> FunctionDef, in source order
    source_path: str
    statement_table: dict  # sid -> StatementInfo
    statements: dict  # sid -> statement node
    source_text: str = ""

    @property
    def test_names(self):
        return [n for n in self.functions if n.startswith("test_")]

    @property
    def app_functions(self):
        return [n for n in self.functions if not n.startswith("test_")]

    def app_statement_ids(self):
        """Fault-candidate statements: everything outside test functions."""
        return sorted(
            sid for sid, info in self.statement_table.items()
            if not info.function.startswith("test_")
        )
