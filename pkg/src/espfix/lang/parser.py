"""Recursive descent parser for the Java subset.

The parser never raises on malformed input. Each problem is recorded as a
:class:`ParseError` and parsing resumes, mostly by pretending a missing
symbol was present or by skipping a single stray token; when that cannot make
progress it falls back to skipping ahead to the next ``;`` or ``}``.
"""

from __future__ import annotations

from espfix.lang.lexer import MODIFIERS, PRIMITIVES, SourceText, Token, tokenize
from espfix.lang.syntax import ErrorCategory, Node, ParseError, SyntaxTree

ASSIGN_OPS = frozenset("= += -= *= /= %= &= |= ^= <<=".split())

BINARY_PRECEDENCE = {
    "||": 1,
    "&&": 2,
    "|": 3,
    "^": 4,
    "&": 5,
    "==": 6,
    "!=": 6,
    "<": 7,
    ">": 7,
    "<=": 7,
    ">=": 7,
    "instanceof": 7,
    "<<": 8,
    "+": 9,
    "-": 9,
    "*": 10,
    "/": 10,
    "%": 10,
}

LITERAL_KINDS = {"int": "int", "float": "float", "string": "string", "char": "char"}

_STATEMENT_KEYWORDS = frozenset(
    "if while do for try return throw break continue final".split()
)


class _Panic(Exception):
    pass


class ParseResult:
    """Outcome of :func:`parse`: a tree (always built) plus the error list."""

    def __init__(self, tree: SyntaxTree, errors: list[ParseError]):
        self.tree = tree
        self.errors = errors

    @property
    def ok(self) -> bool:
        return not self.errors

    def __repr__(self) -> str:
        return f"ParseResult(ok={self.ok}, errors={len(self.errors)})"


class Parser:
    def __init__(self, tokens: list[Token], source: SourceText, annotations: bool = False):
        self.toks = tokens
        self.src = source
        self.pos = 0
        self.errors: list[ParseError] = []
        self.annotations = annotations
        self._decl_type: str | None = None

    # -- token helpers -------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def peek(self, k: int = 1) -> Token:
        i = min(self.pos + k, len(self.toks) - 1)
        return self.toks[i]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.text == text and t.kind in ("op", "keyword")

    def at_ident(self) -> bool:
        return self.tok.kind == "ident"

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.pos += 1
        return t

    def prev_end(self) -> int:
        return self.toks[self.pos - 1].end if self.pos > 0 else 0

    def node(self, kind: str, start: int, children=None, **attrs) -> Node:
        return Node(kind, start, self.pos, list(children or []), attrs)

    # -- error recording -----------------------------------------------
    def _err(self, category, token: Token | None, expected=None, context="statement", at_prev=False):
        if at_prev and self.pos > 0:
            prev = self.toks[self.pos - 1]
            line, col, off = prev.line, prev.col + len(prev.text), prev.end
        else:
            t = token or self.tok
            line, col, off = t.line, t.col, t.start
        t = token or self.tok
        self.errors.append(
            ParseError(
                category=category,
                token=t.text,
                line=line,
                col=col,
                expected=expected,
                context=context,
                offset=off,
                end=t.end if category != ErrorCategory.MISSING else off,
                hint=self._decl_type,
            )
        )

    def missing_symbol(self, sym: str) -> None:
        self._err(ErrorCategory.MISSING, self.tok, expected=f"symbol:{sym}", at_prev=True)

    def missing_rule(self, rule: str, context="statement") -> None:
        at_prev = rule != "expression"
        self._err(ErrorCategory.MISSING, self.tok, expected=f"rule:{rule}", context=context, at_prev=at_prev)

    def extra(self) -> None:
        t = self.advance()
        self._err(ErrorCategory.EXTRA, t)

    def expect(self, sym: str) -> bool:
        if self.at(sym):
            self.advance()
            return True
        nxt = self.peek()
        if self.tok.kind != "eof" and nxt.text == sym and nxt.kind == "op" and self.tok.text not in ("}",):
            if self.tok.kind == "invalid":
                self._err(ErrorCategory.INVALID, self.tok, context="statement")
                self.advance()
            else:
                self.extra()
            self.advance()
            return True
        self.missing_symbol(sym)
        return False

    def sync(self) -> None:
        """Panic-mode skip to just past the next ``;`` or up to the next ``}``."""
        while self.tok.kind != "eof":
            if self.at(";"):
                self.advance()
                return
            if self.at("}"):
                return
            self.advance()

    # -- speculative type parsing ---------------------------------------
    def try_type(self) -> str | None:
        """Parse a type without recording errors; restore position on failure."""
        save = self.pos
        t = self.tok
        if not (t.kind == "ident" or (t.kind == "keyword" and t.text in PRIMITIVES)):
            return None
        parts = [self.advance().text]
        while self.at(".") and self.peek().kind == "ident":
            self.advance()
            parts.append("." + self.advance().text)
        if self.at("<"):
            depth = 0
            while True:
                tk = self.tok
                if tk.text == "<":
                    depth += 1
                elif tk.text == ">":
                    depth -= 1
                elif not (tk.kind == "ident" or tk.text in (",", "?", ".", "[", "]", "&") or tk.text in ("extends", "super") or tk.text in PRIMITIVES):
                    self.pos = save
                    return None
                parts.append(tk.text if tk.text not in (",",) else ", ")
                self.advance()
                if depth == 0:
                    break
        while self.at("[") and self.peek().text == "]":
            self.advance()
            self.advance()
            parts.append("[]")
        return "".join(parts)

    def looks_like_decl(self) -> bool:
        save = self.pos
        try:
            while self.tok.text in MODIFIERS and self.tok.kind == "keyword":
                self.advance()
            ty = self.try_type()
            if ty is None or ty == "void":
                return False
            return self.at_ident()
        finally:
            self.pos = save

    def looks_like_method(self) -> bool:
        save = self.pos
        try:
            while (self.tok.text in MODIFIERS and self.tok.kind == "keyword") or self.at("@"):
                if self.at("@"):
                    self.advance()
                    self.try_type()
                    if self.at("("):
                        self._skip_parens()
                    continue
                self.advance()
            if self.at("<"):
                self._skip_angles()
            ty = self.try_type()
            if ty is None:
                return False
            if not self.at_ident():
                return False
            self.advance()
            if not self.at("("):
                return False
            self._skip_parens()
            if self.at("throws"):
                while self.tok.kind != "eof" and not self.at("{") and not self.at(";"):
                    self.advance()
            return self.at("{") or (self.at(";") and ty is not None)
        finally:
            self.pos = save

    def _skip_parens(self) -> None:
        depth = 0
        while self.tok.kind != "eof":
            if self.at("("):
                depth += 1
            elif self.at(")"):
                depth -= 1
                if depth == 0:
                    self.advance()
                    return
            self.advance()

    def _skip_angles(self) -> None:
        depth = 0
        while self.tok.kind != "eof":
            if self.at("<"):
                depth += 1
            elif self.at(">"):
                depth -= 1
                if depth == 0:
                    self.advance()
                    return
            self.advance()

    # -- declarations -----------------------------------------------------
    def parse_unit(self) -> Node:
        start = self.pos
        items: list[Node] = []
        while self.tok.kind != "eof":
            before = self.pos
            if self.at("}"):
                self.extra()
                continue
            if self.at("package") or self.at("import"):
                items.append(self.parse_import())
                continue
            item = self.parse_item(top=True)
            if item is not None:
                items.append(item)
            if self.pos == before:
                self.extra()
        return self.node("unit", start, items)

    def parse_import(self) -> Node:
        start = self.pos
        kw = self.advance().text
        parts = []
        while self.tok.kind != "eof" and not self.at(";") and self.tok.line == self.toks[start].line:
            parts.append(self.advance().text)
        self.expect(";")
        return self.node(kw, start, name="".join(parts))

    def parse_annotations(self) -> list[Node]:
        out = []
        while self.at("@") and self.peek().kind == "ident":
            start = self.pos
            self.advance()
            name = self.advance().text
            args: dict[str, str] = {}
            if self.at("("):
                self.advance()
                while self.tok.kind != "eof" and not self.at(")"):
                    if self.at_ident() and self.peek().text == "=":
                        key = self.advance().text
                        self.advance()
                        val = self.advance()
                        args[key] = _unquote(val.text) if val.kind == "string" else val.text
                    elif self.tok.kind == "string":
                        args["value"] = _unquote(self.advance().text)
                    else:
                        self.advance()
                    if self.at(","):
                        self.advance()
                self.expect(")")
            out.append(self.node("annotation", start, name=name, args=args))
        return out

    def parse_item(self, top: bool = False, class_name: str | None = None) -> Node | None:
        annotations = self.parse_annotations() if self.at("@") else []
        save = self.pos
        mods = []
        while self.tok.kind == "keyword" and self.tok.text in MODIFIERS:
            mods.append(self.advance().text)
        if self.at("class") or self.at("interface"):
            return self.parse_class(save, mods)
        if class_name is not None and self.at_ident() and self.tok.text == class_name and self.peek().text == "(":
            return self.parse_method(save, mods, annotations, constructor=True)
        if mods and self.at("{"):
            return self.parse_block()
        self.pos = save
        if self.looks_like_method():
            while self.tok.kind == "keyword" and self.tok.text in MODIFIERS:
                self.advance()
            return self.parse_method(save, mods, annotations)
        if class_name is not None:
            if self.looks_like_decl():
                return self.parse_statement()
            if self.at("{"):
                return self.parse_block()
        return self.parse_statement()

    def parse_class(self, start: int, mods: list[str]) -> Node:
        self.advance()
        name = self.advance().text if self.at_ident() else "?"
        if self.at("<"):
            self._skip_angles()
        while self.at("extends") or self.at("implements"):
            self.advance()
            self.try_type()
            while self.at(","):
                self.advance()
                self.try_type()
        members: list[Node] = []
        if self.expect("{"):
            while self.tok.kind != "eof" and not self.at("}"):
                before = self.pos
                try:
                    m = self.parse_item(class_name=name)
                    if m is not None:
                        members.append(m)
                except _Panic:
                    self.sync()
                if self.pos == before:
                    self.extra()
            self.expect("}")
        return self.node("class", start, members, name=name, modifiers=mods)

    def parse_method(self, start: int, mods: list[str], annotations: list[Node], constructor=False) -> Node:
        if self.at("<"):
            self._skip_angles()
        ret = None if constructor else self.try_type()
        name_tok = self.advance()
        params: list[tuple[str, str]] = []
        self.expect("(")
        while self.tok.kind != "eof" and not self.at(")"):
            self.parse_annotations()
            while self.at("final"):
                self.advance()
            ptype = self.try_type()
            if ptype is None:
                self.extra()
                continue
            if self.at_ident():
                params.append((ptype, self.advance().text))
            else:
                self.missing_rule("identifier")
            if self.at(","):
                self.advance()
            elif not self.at(")"):
                break
        self.expect(")")
        if self.at("throws"):
            self.advance()
            self.try_type()
            while self.at(","):
                self.advance()
                self.try_type()
        body = None
        if self.at("{"):
            body = self.parse_block()
        else:
            self.expect(";")
        children = [body] if body is not None else []
        return self.node(
            "method",
            start,
            children,
            name=name_tok.text,
            returns=ret,
            params=params,
            modifiers=mods,
            annotations=annotations,
            name_line=name_tok.line,
        )

    # -- statements -------------------------------------------------------
    def parse_block(self) -> Node:
        start = self.pos
        self.expect("{")
        stmts: list[Node] = []
        while self.tok.kind != "eof" and not self.at("}"):
            before = self.pos
            st = self.parse_statement()
            if st is not None:
                stmts.append(st)
            if self.pos == before:
                self.extra()
        if self.at("}"):
            self.advance()
        else:
            self.missing_symbol("}")
        return self.node("block", start, stmts)

    def parse_statement(self) -> Node | None:
        try:
            return self._statement()
        except _Panic:
            self.sync()
            return None

    def _statement(self) -> Node | None:
        t = self.tok
        start = self.pos
        if t.kind == "invalid":
            self._err(ErrorCategory.INVALID, t, context="statement")
            self.advance()
            return None
        if self.at("{"):
            return self.parse_block()
        if self.at(";"):
            self.advance()
            return self.node("empty", start)
        if self.at("if"):
            self.advance()
            cond = self.paren_expr()
            then = self.body_statement()
            children = [cond, then]
            if self.at("else"):
                self.advance()
                children.append(self.body_statement())
            return self.node("if", start, children)
        if self.at("while"):
            self.advance()
            cond = self.paren_expr()
            body = self.body_statement()
            return self.node("while", start, [cond, body])
        if self.at("do"):
            self.advance()
            body = self.body_statement()
            if self.at("while"):
                self.advance()
            else:
                self.missing_symbol("while")
            cond = self.paren_expr()
            self.expect(";")
            return self.node("doWhile", start, [body, cond])
        if self.at("for"):
            return self.parse_for()
        if self.at("try"):
            return self.parse_try()
        if self.at("return"):
            self.advance()
            children = []
            if not self.at(";") and not self.at("}") and self.tok.kind != "eof":
                children.append(self.expression())
            self.expect(";")
            return self.node("return", start, children)
        if self.at("throw"):
            self.advance()
            value = self.expression()
            self.expect(";")
            return self.node("throw", start, [value])
        if self.at("break") or self.at("continue"):
            kw = self.advance().text
            if self.at_ident():
                self.advance()
            self.expect(";")
            return self.node(kw, start)
        if self.at("else") or self.at("catch") or self.at("finally") or self.at(")") or self.at("]"):
            self.extra()
            return None
        if self.looks_like_decl():
            decl = self.local_decl()
            self.expect(";")
            decl.end = self.pos
            return decl
        expr = self.expression()
        self.expect(";")
        return self.node("exprStmt", start, [expr])

    def body_statement(self) -> Node:
        start = self.pos
        if self.at("}") or self.tok.kind == "eof":
            self.missing_rule("statement")
            return self.node("block", start)
        st = self.parse_statement()
        if st is None:
            return self.node("block", start)
        return st

    def local_decl(self) -> Node:
        start = self.pos
        mods = []
        while self.tok.kind == "keyword" and self.tok.text in MODIFIERS:
            mods.append(self.advance().text)
        ty = self.try_type() or "?"
        decls: list[Node] = []
        while True:
            dstart = self.pos
            if not self.at_ident():
                self.missing_rule("identifier")
                break
            name = self.advance().text
            dims = ""
            while self.at("[") and self.peek().text == "]":
                self.advance()
                self.advance()
                dims += "[]"
            children = []
            if self.at("="):
                self.advance()
                self._decl_type = ty + dims
                try:
                    if self.at("{"):
                        children.append(self.array_init())
                    else:
                        children.append(self.expression())
                finally:
                    self._decl_type = None
            decls.append(self.node("declarator", dstart, children, name=name, dims=dims))
            if self.at(","):
                self.advance()
                continue
            break
        return self.node("localDecl", start, decls, type=ty, modifiers=mods)

    def parse_for(self) -> Node:
        start = self.pos
        self.advance()
        self.expect("(")
        save = self.pos
        while self.at("final"):
            self.advance()
        ty = self.try_type()
        if ty is not None and self.at_ident() and self.peek().text == ":":
            name = self.advance().text
            self.advance()
            iterable = self.expression()
            self.expect(")")
            body = self.body_statement()
            return self.node("forEach", start, [iterable, body], type=ty, name=name)
        self.pos = save
        istart = self.pos
        init: list[Node] = []
        if not self.at(";"):
            if self.looks_like_decl():
                init.append(self.local_decl())
            else:
                init.append(self.expression())
                while self.at(","):
                    self.advance()
                    init.append(self.expression())
        init_node = self.node("forInit", istart, init)
        self.expect(";")
        cstart = self.pos
        cond = [] if self.at(";") else [self.expression()]
        cond_node = self.node("forCond", cstart, cond)
        self.expect(";")
        ustart = self.pos
        upd: list[Node] = []
        if not self.at(")"):
            upd.append(self.expression())
            while self.at(","):
                self.advance()
                upd.append(self.expression())
        upd_node = self.node("forUpdate", ustart, upd)
        self.expect(")")
        body = self.body_statement()
        return self.node("for", start, [init_node, cond_node, upd_node, body])

    def parse_try(self) -> Node:
        start = self.pos
        self.advance()
        if self.at("{"):
            block = self.parse_block()
        else:
            self.missing_rule("block")
            block = self.node("block", self.pos)
        children = [block]
        while self.at("catch"):
            cstart = self.pos
            self.advance()
            self.expect("(")
            types = [self.try_type() or "Exception"]
            while self.at("|"):
                self.advance()
                types.append(self.try_type() or "Exception")
            name = self.advance().text if self.at_ident() else "e"
            self.expect(")")
            if self.at("{"):
                cblock = self.parse_block()
            else:
                self.missing_rule("block")
                cblock = self.node("block", self.pos)
            children.append(self.node("catch", cstart, [cblock], types=types, name=name))
        if self.at("finally"):
            fstart = self.pos
            self.advance()
            if self.at("{"):
                fblock = self.parse_block()
            else:
                self.missing_rule("block")
                fblock = self.node("block", self.pos)
            children.append(self.node("finally", fstart, [fblock]))
        if len(children) == 1:
            self.missing_rule("catch-or-finally")
        return self.node("try", start, children)

    # -- expressions ------------------------------------------------------
    def paren_expr(self) -> Node:
        self.expect("(")
        e = self.expression()
        self.expect(")")
        return e

    def expression(self) -> Node:
        start = self.pos
        lhs = self.conditional()
        if self.tok.kind == "op" and self.tok.text in ASSIGN_OPS:
            op = self.advance().text
            rhs = self.expression()
            return self.node("assign", start, [lhs, rhs], op=op)
        return lhs

    def conditional(self) -> Node:
        start = self.pos
        cond = self.binary(1)
        if self.at("?"):
            self.advance()
            a = self.expression()
            self.expect(":")
            b = self.conditional()
            return self.node("conditional", start, [cond, a, b])
        return cond

    def binary(self, min_prec: int) -> Node:
        start = self.pos
        lhs = self.unary()
        while True:
            op = self.tok.text
            prec = BINARY_PRECEDENCE.get(op)
            if prec is None or prec < min_prec or self.tok.kind not in ("op", "keyword"):
                return lhs
            self.advance()
            if op == "instanceof":
                ty = self.try_type()
                if ty is None:
                    self.missing_rule("type", context="expression")
                    ty = "Object"
                lhs = self.node("instanceof", start, [lhs], type=ty)
                continue
            rhs = self.binary(prec + 1)
            lhs = self.node("binary", start, [lhs, rhs], op=op)

    def unary(self) -> Node:
        start = self.pos
        if self.tok.kind == "op" and self.tok.text in ("!", "~", "-", "+", "++", "--"):
            op = self.advance().text
            operand = self.unary()
            return self.node("unary", start, [operand], op=op, postfix=False)
        if self.at("("):
            cast_type = self._try_cast()
            if cast_type is not None:
                operand = self.unary()
                return self.node("cast", start, [operand], type=cast_type)
        return self.postfix(self.primary())

    def _try_cast(self) -> str | None:
        save = self.pos
        self.advance()
        ty = self.try_type()
        if ty is not None and self.at(")"):
            nxt = self.peek()
            primitive = ty.rstrip("[]") in PRIMITIVES
            starts_operand = nxt.kind in ("ident", "int", "float", "string", "char") or nxt.text in (
                "(",
                "this",
                "new",
                "!",
                "~",
                "super",
                "true",
                "false",
                "null",
            )
            if primitive and nxt.text in ("-", "+"):
                starts_operand = True
            if starts_operand:
                self.advance()
                return ty
        self.pos = save
        return None

    def arguments(self) -> list[Node]:
        self.expect("(")
        args: list[Node] = []
        while self.tok.kind != "eof" and not self.at(")"):
            if self.at(";") or self.at("}") or self.at("{"):
                break
            args.append(self.expression())
            if self.at(","):
                self.advance()
                if self.at(")"):
                    self.missing_rule("expression", context="expression")
            elif not self.at(")"):
                if self.peek().text == ")" and self.tok.kind not in ("eof",) and not self.at(";"):
                    if self.tok.kind == "invalid":
                        self._err(ErrorCategory.INVALID, self.tok, context="statement")
                        self.advance()
                    else:
                        self.extra()
                break
        self.expect(")")
        return args

    def primary(self) -> Node:
        start = self.pos
        t = self.tok
        if t.kind in LITERAL_KINDS:
            self.advance()
            return self.node("literal", start, lit=LITERAL_KINDS[t.kind], text=t.text)
        if t.kind == "keyword" and t.text in ("true", "false"):
            self.advance()
            return self.node("literal", start, lit="boolean", text=t.text)
        if t.kind == "keyword" and t.text == "null":
            self.advance()
            return self.node("literal", start, lit="null", text="null")
        if t.kind == "keyword" and t.text in ("this", "super"):
            self.advance()
            if self.at("("):
                args = self.arguments()
                return self.node("call", start, args, name=t.text, has_receiver=False)
            return self.node(t.text, start)
        if t.kind == "ident":
            self.advance()
            if self.at("("):
                args = self.arguments()
                return self.node("call", start, args, name=t.text, has_receiver=False)
            return self.node("name", start, text=t.text)
        if t.kind == "keyword" and t.text in PRIMITIVES and self.peek().text in (".", "["):
            ty = self.try_type()
            return self.node("name", start, text=ty)
        if self.at("("):
            self.advance()
            inner = self.expression()
            self.expect(")")
            return self.node("paren", start, [inner])
        if self.at("new"):
            return self.creator()
        if t.kind == "invalid":
            self._err(ErrorCategory.INVALID, t, context="expression")
            self.advance()
            return self.node("invalid", start, text=t.text)
        self.missing_rule("expression", context="expression")
        if t.kind == "eof" or t.text in (";", ")", "]", "}", ",", "{"):
            return self.node("invalid", start, text="")
        raise _Panic()

    def creator(self) -> Node:
        start = self.pos
        self.advance()
        base = self.try_type_base()
        if base is None:
            self.missing_rule("type", context="expression")
            raise _Panic()
        if self.at("["):
            dims: list[Node] = []
            ndims = 0
            while self.at("["):
                self.advance()
                if self.at("]"):
                    self.advance()
                    ndims += 1
                    continue
                dims.append(self.expression())
                self.expect("]")
                ndims += 1
            children = dims
            has_init = False
            if self.at("{"):
                children = dims + [self.array_init()]
                has_init = True
            return self.node("newArray", start, children, type=base, ndims=ndims, has_init=has_init)
        if self.at("("):
            args = self.arguments()
            if self.at("{"):
                # anonymous class bodies are outside the subset
                self._err(ErrorCategory.EXTRA, self.tok)
                raise _Panic()
            return self.node("new", start, args, type=base)
        self.missing_symbol("(")
        return self.node("new", start, [], type=base)

    def try_type_base(self) -> str | None:
        """Type for ``new``: like :meth:`try_type` but leaves ``[`` dims alone."""
        save = self.pos
        ty = self.try_type()
        if ty is None:
            return None
        if ty.endswith("[]"):
            # re-parse without array suffix: creator handles dims itself
            self.pos = save
            t = self.tok
            if not (t.kind == "ident" or t.text in PRIMITIVES):
                return None
            parts = [self.advance().text]
            while self.at(".") and self.peek().kind == "ident":
                self.advance()
                parts.append("." + self.advance().text)
            if self.at("<"):
                depth = 0
                while self.tok.kind != "eof":
                    parts.append(self.tok.text if self.tok.text != "," else ", ")
                    if self.at("<"):
                        depth += 1
                    elif self.at(">"):
                        depth -= 1
                        if depth == 0:
                            self.advance()
                            break
                    self.advance()
            return "".join(parts)
        return ty

    def array_init(self) -> Node:
        start = self.pos
        self.expect("{")
        elems: list[Node] = []
        while self.tok.kind != "eof" and not self.at("}"):
            if self.at("{"):
                elems.append(self.array_init())
            else:
                elems.append(self.expression())
            if self.at(","):
                self.advance()
            elif not self.at("}"):
                break
        self.expect("}")
        return self.node("arrayInit", start, elems)

    def postfix(self, expr: Node) -> Node:
        start = expr.start
        while True:
            if self.at("."):
                self.advance()
                if self.at_ident() or self.at("class") or self.at("this"):
                    name = self.advance().text
                    if self.at("("):
                        args = self.arguments()
                        expr = self.node("call", start, [expr] + args, name=name, has_receiver=True)
                    else:
                        expr = self.node("field", start, [expr], name=name)
                    continue
                if self.at("<"):
                    self._skip_angles()
                    continue
                self.missing_rule("identifier", context="expression")
                return expr
            if self.at("["):
                self.advance()
                idx = self.expression()
                self.expect("]")
                expr = self.node("index", start, [expr, idx])
                continue
            if self.at("++") or self.at("--"):
                op = self.advance().text
                expr = self.node("unary", start, [expr], op=op, postfix=True)
                continue
            return expr


def _unquote(text: str) -> str:
    if len(text) >= 2 and text[0] == text[-1] == '"':
        return text[1:-1]
    return text


def parse(src: SourceText | str, annotations: bool = False) -> ParseResult:
    """Parse source text; always returns a tree plus the ordered error list."""
    if isinstance(src, str):
        src = SourceText(src)
    tokens = tokenize(src)
    p = Parser(tokens, src, annotations=annotations)
    try:
        root = p.parse_unit()
    except RecursionError:
        p.errors.append(ParseError(ErrorCategory.EXTRA, tokens[p.pos].text, tokens[p.pos].line, tokens[p.pos].col, offset=tokens[p.pos].start, end=tokens[p.pos].end))
        root = Node("unit", 0, len(tokens) - 1)
    errors = sorted(p.errors, key=lambda e: (e.line, e.col, e.offset))
    # the same position can be reported twice by nested recovery; keep one
    uniq: list[ParseError] = []
    seen = set()
    for e in errors:
        key = (e.category, e.offset, e.expected, e.token)
        if key not in seen:
            seen.add(key)
            uniq.append(e)
    return ParseResult(SyntaxTree(root, tokens, src), uniq)


def is_parsable(src: SourceText | str) -> bool:
    return parse(src).ok
