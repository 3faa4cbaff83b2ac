"""Tree-walking evaluator for the profiled mini-Scheme subset.

The language: integer and boolean literals, quote, if, let, named let,
lambda, begin, define (plain and shorthand procedure form), set!, and
procedure application over the primitive table.  Tail positions (the
chosen if branch, the last body form, application of a closure) rebind
the trampoline state instead of recursing, so loops run in constant
control-stack space regardless of iteration count.

Profiling contract: every allocating primitive routes through the
Runtime, which advances the logical clock and may collect at the
allocation site; a use event is recorded for every heap reference a
primitive receives, left to right, after the primitive's own validation
(so a type error never records a use).  Quoted list structure allocates
each time the quote is evaluated, keeping creation ticks meaningful.

Closures and environment frames live outside the profiled heap; they
cannot be stored in heap slots, but any references they capture are part
of the root set.  Evaluator temporaries (argument lists, let inits,
partially built quoted structure) are pinned while further evaluation
could trigger a collection.
"""

import re
import sys
from dataclasses import dataclass

from .errors import OutOfMemory, SchemeRuntimeError, SchemeSyntaxError
from .heap import NIL, PAIR, VECTOR, Nil, Ref, is_storable
from .profiler import TraceLog
from .runtime import DEFAULT_GC_INTERVAL, DEFAULT_HEAP_SLOTS, Runtime

# ---------------------------------------------------------------------------
# Reader: source text -> s-expressions

_INT_RE = re.compile(r"[+-]?[0-9]+")

_QUOTE = sys.intern("quote")
_IF = sys.intern("if")
_LET = sys.intern("let")
_LAMBDA = sys.intern("lambda")
_BEGIN = sys.intern("begin")
_DEFINE = sys.intern("define")
_SET = sys.intern("set!")


class SrcList:
    """A parenthesized form; tail is the datum after a dot, if any."""

    __slots__ = ("items", "tail", "line", "col")

    def __init__(self, items, tail, line, col):
        self.items = items
        self.tail = tail
        self.line = line
        self.col = col


def tokenize(source: str):
    tokens = []
    line, col = 1, 1
    i, n = 0, len(source)
    while i < n:
        c = source[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
        elif c in " \t\r":
            col += 1
            i += 1
        elif c == ";":
            while i < n and source[i] != "\n":
                i += 1
        elif c in "()'":
            tokens.append((c, c, line, col))
            col += 1
            i += 1
        else:
            start, start_col = i, col
            while i < n and source[i] not in " \t\r\n;()'":
                i += 1
                col += 1
            tokens.append(("atom", source[start:i], line, start_col))
    return tokens, (line, col)


def _classify_atom(text, line, col):
    if _INT_RE.fullmatch(text):
        return int(text)
    if text == "#t":
        return True
    if text == "#f":
        return False
    if text.startswith("#"):
        raise SchemeSyntaxError(f"unknown literal {text}", line, col)
    return sys.intern(text)


class _Reader:
    def __init__(self, source):
        self.tokens, self.end_pos = tokenize(source)
        self.i = 0

    def _next(self, context):
        if self.i >= len(self.tokens):
            raise SchemeSyntaxError(f"unexpected end of input ({context})",
                                    *self.end_pos)
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def read_form(self):
        kind, text, line, col = self._next("expected a form")
        if kind == "(":
            items, tail = [], None
            while True:
                if self.i >= len(self.tokens):
                    raise SchemeSyntaxError(
                        "unexpected end of input (unclosed parenthesis)",
                        *self.end_pos)
                nkind, ntext, nline, ncol = self.tokens[self.i]
                if nkind == ")":
                    self.i += 1
                    return SrcList(items, tail, line, col)
                if nkind == "atom" and ntext == ".":
                    self.i += 1
                    if not items or tail is not None:
                        raise SchemeSyntaxError("misplaced dot", nline, ncol)
                    tail = self.read_form()
                    continue
                if tail is not None:
                    raise SchemeSyntaxError("form after dotted tail",
                                            nline, ncol)
                items.append(self.read_form())
        if kind == ")":
            raise SchemeSyntaxError("unexpected closing parenthesis",
                                    line, col)
        if kind == "'":
            return SrcList([_QUOTE, self.read_form()], None, line, col)
        if text == ".":
            raise SchemeSyntaxError("misplaced dot", line, col)
        return _classify_atom(text, line, col)

    def read_program(self):
        forms = []
        while self.i < len(self.tokens):
            forms.append(self.read_form())
        return forms


# ---------------------------------------------------------------------------
# Expressions

@dataclass(slots=True)
class Literal:
    value: object
    pos: tuple


@dataclass(slots=True)
class Var:
    name: str
    pos: tuple


@dataclass(slots=True)
class Quote:
    datum: object
    pos: tuple


@dataclass(slots=True)
class If:
    test: object
    then: object
    alt: object
    pos: tuple


@dataclass(slots=True)
class Let:
    bindings: tuple
    body: tuple
    pos: tuple


@dataclass(slots=True)
class NamedLet:
    name: str
    bindings: tuple
    body: tuple
    pos: tuple


@dataclass(slots=True)
class Lambda:
    params: tuple
    body: tuple
    pos: tuple


@dataclass(slots=True)
class Begin:
    exprs: tuple
    pos: tuple


@dataclass(slots=True)
class Define:
    name: str
    expr: object
    pos: tuple


@dataclass(slots=True)
class SetVar:
    name: str
    expr: object
    pos: tuple


@dataclass(slots=True)
class Apply:
    fn: object
    args: tuple
    pos: tuple


def _syntax_error(msg, sx, pos):
    if type(sx) is SrcList:
        pos = (sx.line, sx.col)
    raise SchemeSyntaxError(msg, *pos)


def _require_symbol(sx, what, pos):
    if not isinstance(sx, str):
        _syntax_error(f"expected {what}", sx, pos)
    return sx


def _compile_body(forms, sx, pos):
    if not forms:
        _syntax_error("empty body", sx, pos)
    return tuple(_compile(f, pos) for f in forms)


def _compile_bindings(sx, pos):
    if type(sx) is not SrcList or sx.tail is not None:
        _syntax_error("expected a binding list", sx, pos)
    bindings = []
    for b in sx.items:
        if (type(b) is not SrcList or b.tail is not None
                or len(b.items) != 2):
            _syntax_error("expected (name init) binding", b, pos)
        name = _require_symbol(b.items[0], "a binding name",
                               (b.line, b.col))
        bindings.append((name, _compile(b.items[1], (b.line, b.col))))
    return tuple(bindings)


def _compile(sx, pos):
    if isinstance(sx, (int, Nil)):  # covers bool
        return Literal(sx, pos)
    if isinstance(sx, str):
        return Var(sx, pos)
    assert type(sx) is SrcList
    pos = (sx.line, sx.col)
    if sx.tail is not None:
        _syntax_error("dotted list in code", sx, pos)
    items = sx.items
    if not items:
        _syntax_error("empty application", sx, pos)
    head = items[0]
    if isinstance(head, str):
        if head is _QUOTE:
            if len(items) != 2:
                _syntax_error("quote takes one datum", sx, pos)
            return Quote(items[1], pos)
        if head is _IF:
            if len(items) not in (3, 4):
                _syntax_error("if takes a test and one or two branches",
                              sx, pos)
            alt = (_compile(items[3], pos) if len(items) == 4
                   else Quote(SrcList([], None, sx.line, sx.col), pos))
            return If(_compile(items[1], pos), _compile(items[2], pos),
                      alt, pos)
        if head is _LET:
            if len(items) >= 2 and isinstance(items[1], str):
                if len(items) < 4:
                    _syntax_error("named let needs bindings and a body",
                                  sx, pos)
                return NamedLet(items[1], _compile_bindings(items[2], pos),
                                _compile_body(items[3:], sx, pos), pos)
            if len(items) < 3:
                _syntax_error("let needs bindings and a body", sx, pos)
            return Let(_compile_bindings(items[1], pos),
                       _compile_body(items[2:], sx, pos), pos)
        if head is _LAMBDA:
            if len(items) < 3:
                _syntax_error("lambda needs parameters and a body", sx, pos)
            plist = items[1]
            if type(plist) is not SrcList or plist.tail is not None:
                _syntax_error("expected a parameter list", plist, pos)
            params = tuple(_require_symbol(p, "a parameter name", pos)
                           for p in plist.items)
            return Lambda(params, _compile_body(items[2:], sx, pos), pos)
        if head is _BEGIN:
            if len(items) < 2:
                _syntax_error("empty begin", sx, pos)
            return Begin(tuple(_compile(e, pos) for e in items[1:]), pos)
        if head is _DEFINE:
            if len(items) < 3:
                _syntax_error("define needs a name and a value", sx, pos)
            target = items[1]
            if type(target) is SrcList:  # (define (name params...) body...)
                if target.tail is not None or not target.items:
                    _syntax_error("bad define form", target, pos)
                name = _require_symbol(target.items[0], "a procedure name",
                                       pos)
                params = tuple(_require_symbol(p, "a parameter name", pos)
                               for p in target.items[1:])
                return Define(name,
                              Lambda(params,
                                     _compile_body(items[2:], sx, pos), pos),
                              pos)
            if len(items) != 3:
                _syntax_error("define takes one value", sx, pos)
            name = _require_symbol(target, "a name", pos)
            return Define(name, _compile(items[2], pos), pos)
        if head is _SET:
            if len(items) != 3:
                _syntax_error("set! takes a name and a value", sx, pos)
            return SetVar(_require_symbol(items[1], "a name", pos),
                          _compile(items[2], pos), pos)
    return Apply(_compile(head, pos),
                 tuple(_compile(a, pos) for a in items[1:]), pos)


def parse(source: str):
    """Parse source text into a program: a list of expressions."""
    return [_compile(form, (1, 1)) for form in _Reader(source).read_program()]


# ---------------------------------------------------------------------------
# Runtime values

class Env:
    """Lexical frame: a dict of bindings plus a parent link."""

    __slots__ = ("vars", "parent")

    def __init__(self, parent):
        self.vars = {}
        self.parent = parent

    def lookup(self, name, pos):
        env = self
        while env is not None:
            if name in env.vars:
                return env.vars[name]
            env = env.parent
        raise _rt_error(f"unbound variable: {name}", pos)

    def assign(self, name, value, pos):
        env = self
        while env is not None:
            if name in env.vars:
                env.vars[name] = value
                return
            env = env.parent
        raise _rt_error(f"set! of unbound variable: {name}", pos)


class Closure:
    __slots__ = ("params", "body", "env", "name")

    def __init__(self, params, body, env, name):
        self.params = params
        self.body = body
        self.env = env
        self.name = name

    def __repr__(self):
        return f"#<procedure {self.name}>" if self.name else "#<procedure>"


class Primitive:
    __slots__ = ("name", "min_args", "max_args", "fn")

    def __init__(self, name, min_args, max_args, fn):
        self.name = name
        self.min_args = min_args
        self.max_args = max_args
        self.fn = fn

    def __repr__(self):
        return f"#<primitive {self.name}>"


def _rt_error(msg, pos):
    if pos is not None:
        return SchemeRuntimeError(f"{pos[0]}:{pos[1]}: {msg}")
    return SchemeRuntimeError(msg)


def _is_number(v):
    return isinstance(v, int) and not isinstance(v, bool)


def write_value(heap, value) -> str:
    """Scheme-style rendering; cycles are cut with a #<cycle> marker."""
    out = []
    on_path = set()

    def emit(v):
        if type(v) is Ref:
            meta = heap.objects.get(v.obj_id)
            if meta is None:
                out.append(f"#<collected {v.obj_id}>")
                return
            if v.obj_id in on_path:
                out.append("#<cycle>")
                return
            if meta.kind == VECTOR:
                on_path.add(v.obj_id)
                out.append("#(")
                for i in range(meta.size_slots):
                    if i:
                        out.append(" ")
                    emit(heap.slot_value(v.obj_id, i))
                out.append(")")
                on_path.discard(v.obj_id)
                return
            # pair: iterate over the cdr chain
            on_path.add(v.obj_id)
            chain = [v.obj_id]
            out.append("(")
            emit(heap.slot_value(v.obj_id, 0))
            cur = heap.slot_value(v.obj_id, 1)
            while True:
                if (type(cur) is Ref and cur.obj_id in heap.objects
                        and heap.objects[cur.obj_id].kind == PAIR):
                    if cur.obj_id in on_path:
                        out.append(" . #<cycle>")
                        break
                    on_path.add(cur.obj_id)
                    chain.append(cur.obj_id)
                    out.append(" ")
                    emit(heap.slot_value(cur.obj_id, 0))
                    cur = heap.slot_value(cur.obj_id, 1)
                    continue
                if isinstance(cur, Nil):
                    break
                out.append(" . ")
                emit(cur)
                break
            out.append(")")
            for oid in chain:
                on_path.discard(oid)
        elif v is True:
            out.append("#t")
        elif v is False:
            out.append("#f")
        elif isinstance(v, int):
            out.append(str(v))
        elif isinstance(v, Nil):
            out.append("()")
        elif isinstance(v, str):
            out.append(v)
        else:
            out.append(repr(v))

    emit(value)
    return "".join(out)


# ---------------------------------------------------------------------------
# Primitives

def _type_name(rt, v):
    if type(v) is Ref:
        return "a pair" if rt.is_pair(v) else "a vector"
    if isinstance(v, bool):
        return "a boolean"
    if isinstance(v, int):
        return "a number"
    if isinstance(v, Nil):
        return "the empty list"
    if isinstance(v, str):
        return "a symbol"
    return "a procedure"


def _use_refs(interp, args):
    rt = interp.rt
    for v in args:
        if type(v) is Ref:
            rt.record_use(v)


def _check_storable(interp, v, name, pos):
    if not is_storable(v):
        raise _rt_error(f"{name}: {_type_name(interp.rt, v)} cannot be "
                        f"stored in a heap object", pos)


def _require_pair(interp, v, name, pos):
    if not interp.rt.is_pair(v):
        raise _rt_error(f"{name}: expected a pair, got "
                        f"{_type_name(interp.rt, v)}", pos)


def _require_vector(interp, v, name, pos):
    if not interp.rt.is_vector(v):
        raise _rt_error(f"{name}: expected a vector, got "
                        f"{_type_name(interp.rt, v)}", pos)


def _require_number(interp, v, name, pos):
    if not _is_number(v):
        raise _rt_error(f"{name}: expected a number, got "
                        f"{_type_name(interp.rt, v)}", pos)


def _prim_cons(interp, args, pos):
    _check_storable(interp, args[0], "cons", pos)
    _check_storable(interp, args[1], "cons", pos)
    _use_refs(interp, args)
    return interp.rt.alloc_pair(args[0], args[1])


def _prim_list(interp, args, pos):
    for v in args:
        _check_storable(interp, v, "list", pos)
    _use_refs(interp, args)
    result = NIL
    for v in reversed(args):
        result = interp.rt.alloc_pair(v, result)
    return result


def _prim_car(interp, args, pos):
    _require_pair(interp, args[0], "car", pos)
    interp.rt.record_use(args[0])
    return interp.rt.read_slot(args[0], 0)


def _prim_cdr(interp, args, pos):
    _require_pair(interp, args[0], "cdr", pos)
    interp.rt.record_use(args[0])
    return interp.rt.read_slot(args[0], 1)


def _prim_set_car(interp, args, pos):
    _require_pair(interp, args[0], "set-car!", pos)
    _check_storable(interp, args[1], "set-car!", pos)
    _use_refs(interp, args)
    interp.rt.write_slot(args[0], 0, args[1])
    return NIL


def _prim_set_cdr(interp, args, pos):
    _require_pair(interp, args[0], "set-cdr!", pos)
    _check_storable(interp, args[1], "set-cdr!", pos)
    _use_refs(interp, args)
    interp.rt.write_slot(args[0], 1, args[1])
    return NIL


def _prim_null_p(interp, args, pos):
    _use_refs(interp, args)
    return isinstance(args[0], Nil)


def _prim_pair_p(interp, args, pos):
    _use_refs(interp, args)
    return interp.rt.is_pair(args[0])


def _prim_number_p(interp, args, pos):
    _use_refs(interp, args)
    return _is_number(args[0])


def _prim_vector(interp, args, pos):
    for v in args:
        _check_storable(interp, v, "vector", pos)
    _use_refs(interp, args)
    ref = interp.rt.alloc_vector(len(args), NIL)
    for i, v in enumerate(args):
        interp.rt.write_slot(ref, i, v)
    return ref


def _prim_make_vector(interp, args, pos):
    _require_number(interp, args[0], "make-vector", pos)
    if args[0] < 0:
        raise _rt_error(f"make-vector: negative length {args[0]}", pos)
    fill = args[1] if len(args) == 2 else NIL
    _check_storable(interp, fill, "make-vector", pos)
    _use_refs(interp, args)
    return interp.rt.alloc_vector(args[0], fill)


def _vector_index(interp, v, i, name, pos):
    _require_number(interp, i, name, pos)
    size = interp.rt.heap.size_of(v)
    if not 0 <= i < size:
        raise _rt_error(f"{name}: index {i} out of range for vector "
                        f"of length {size}", pos)


def _prim_vector_ref(interp, args, pos):
    _require_vector(interp, args[0], "vector-ref", pos)
    _vector_index(interp, args[0], args[1], "vector-ref", pos)
    _use_refs(interp, args)
    return interp.rt.read_slot(args[0], args[1])


def _prim_vector_set(interp, args, pos):
    _require_vector(interp, args[0], "vector-set!", pos)
    _vector_index(interp, args[0], args[1], "vector-set!", pos)
    _check_storable(interp, args[2], "vector-set!", pos)
    _use_refs(interp, args)
    interp.rt.write_slot(args[0], args[1], args[2])
    return NIL


def _prim_vector_length(interp, args, pos):
    _require_vector(interp, args[0], "vector-length", pos)
    interp.rt.record_use(args[0])
    return interp.rt.heap.size_of(args[0])


def _prim_vector_to_list(interp, args, pos):
    _require_vector(interp, args[0], "vector->list", pos)
    rt = interp.rt
    v = args[0]
    rt.record_use(v)
    result = NIL
    for i in range(rt.heap.size_of(v) - 1, -1, -1):
        result = rt.alloc_pair(rt.read_slot(v, i), result)
    return result


def _prim_list_to_vector(interp, args, pos):
    rt = interp.rt
    lst = args[0]
    # validate the spine first so an improper list records no events
    n, cur = 0, lst
    limit = rt.heap.object_count + 1
    while rt.is_pair(cur):
        n += 1
        if n > limit:
            raise _rt_error("list->vector: cyclic list", pos)
        cur = rt.read_slot(cur, 1)
    if not isinstance(cur, Nil):
        raise _rt_error(f"list->vector: expected a proper list, got "
                        f"{_type_name(rt, args[0])}", pos)
    items = []
    cur = lst
    while not isinstance(cur, Nil):
        rt.record_use(cur)
        items.append(rt.read_slot(cur, 0))
        cur = rt.read_slot(cur, 1)
    # items stay reachable through the pinned argument list
    vec = rt.alloc_vector(n, NIL)
    for i, v in enumerate(items):
        rt.write_slot(vec, i, v)
    return vec


def _arith_args(interp, args, name, pos):
    for v in args:
        _require_number(interp, v, name, pos)


def _prim_add(interp, args, pos):
    _arith_args(interp, args, "+", pos)
    return sum(args)


def _prim_sub(interp, args, pos):
    _arith_args(interp, args, "-", pos)
    if len(args) == 1:
        return -args[0]
    total = args[0]
    for v in args[1:]:
        total -= v
    return total


def _prim_mul(interp, args, pos):
    _arith_args(interp, args, "*", pos)
    total = 1
    for v in args:
        total *= v
    return total


def _prim_num_eq(interp, args, pos):
    _arith_args(interp, args, "=", pos)
    return all(a == args[0] for a in args[1:])


def _prim_lt(interp, args, pos):
    _arith_args(interp, args, "<", pos)
    return all(args[i] < args[i + 1] for i in range(len(args) - 1))


def _prim_eq_p(interp, args, pos):
    _use_refs(interp, args)
    a, b = args
    if type(a) is Ref:
        return type(b) is Ref and a.obj_id == b.obj_id
    if isinstance(a, bool):
        return a is b
    if isinstance(a, int):
        return _is_number(b) and a == b
    if isinstance(a, str):
        return isinstance(b, str) and a == b
    if isinstance(a, Nil):
        return isinstance(b, Nil)
    return a is b


def _prim_display(interp, args, pos):
    if type(args[0]) is Ref:
        interp.rt.record_use(args[0])
    sys.stdout.write(write_value(interp.rt.heap, args[0]))
    return NIL


_PRIMITIVES = [
    ("cons", 2, 2, _prim_cons),
    ("list", 0, None, _prim_list),
    ("car", 1, 1, _prim_car),
    ("cdr", 1, 1, _prim_cdr),
    ("set-car!", 2, 2, _prim_set_car),
    ("set-cdr!", 2, 2, _prim_set_cdr),
    ("null?", 1, 1, _prim_null_p),
    ("pair?", 1, 1, _prim_pair_p),
    ("number?", 1, 1, _prim_number_p),
    ("vector", 0, None, _prim_vector),
    ("make-vector", 1, 2, _prim_make_vector),
    ("vector-ref", 2, 2, _prim_vector_ref),
    ("vector-set!", 3, 3, _prim_vector_set),
    ("vector-length", 1, 1, _prim_vector_length),
    ("vector->list", 1, 1, _prim_vector_to_list),
    ("list->vector", 1, 1, _prim_list_to_vector),
    ("+", 0, None, _prim_add),
    ("-", 1, None, _prim_sub),
    ("*", 0, None, _prim_mul),
    ("=", 2, None, _prim_num_eq),
    ("<", 2, None, _prim_lt),
    ("eq?", 2, 2, _prim_eq_p),
    ("display", 1, 1, _prim_display),
]


# ---------------------------------------------------------------------------
# Evaluator

class Interpreter:
    """One evaluation context over one Runtime.  Single-threaded; after an
    error propagates out of a run the context should be discarded."""

    def __init__(self, runtime: Runtime):
        self.rt = runtime
        self.globals = Env(None)
        self._env_stack = []
        self._pinned = []
        for name, lo, hi, fn in _PRIMITIVES:
            self.globals.vars[sys.intern(name)] = Primitive(name, lo, hi, fn)
        runtime.add_root_provider(self._iter_roots)

    def _iter_roots(self):
        """Yield every Ref reachable from the environments in use and the
        pinned temporaries, walking closure captures, cycle-safely."""
        seen_envs = set()
        env_queue = []

        def push_env(env):
            while env is not None and id(env) not in seen_envs:
                seen_envs.add(id(env))
                env_queue.append(env)
                env = env.parent

        push_env(self.globals)
        for env in self._env_stack:
            push_env(env)
        values = []
        for v in self._pinned:
            if type(v) is list:
                values.extend(v)
            else:
                values.append(v)
        qi = 0
        while values or qi < len(env_queue):
            while values:
                v = values.pop()
                tv = type(v)
                if tv is Ref:
                    yield v
                elif tv is Closure:
                    push_env(v.env)
            if qi < len(env_queue):
                values.extend(env_queue[qi].vars.values())
                qi += 1

    def eval_program(self, program):
        result = NIL
        for expr in program:
            result = self._eval(expr, self.globals)
        return result

    def _materialize(self, datum):
        """Build a quoted datum, allocating its pairs now."""
        if type(datum) is not SrcList:
            return datum
        pins = self._pinned
        vals = []
        pins.append(vals)
        for item in datum.items:
            vals.append(self._materialize(item))
        result = self._materialize(datum.tail) if datum.tail is not None \
            else NIL
        for v in reversed(vals):
            result = self.rt.alloc_pair(v, result)
        pins.pop()
        return result

    def _eval(self, expr, env):
        stack = self._env_stack
        stack.append(env)
        ix = len(stack) - 1
        pins = self._pinned
        try:
            while True:
                t = type(expr)
                if t is Var:
                    return env.lookup(expr.name, expr.pos)
                if t is Literal:
                    return expr.value
                if t is Apply:
                    fn = self._eval(expr.fn, env)
                    pins.append(fn)
                    args = []
                    pins.append(args)
                    for a in expr.args:
                        args.append(self._eval(a, env))
                    tf = type(fn)
                    if tf is Closure:
                        if len(args) != len(fn.params):
                            raise _rt_error(
                                f"{fn.name or 'procedure'} expects "
                                f"{len(fn.params)} arguments, got "
                                f"{len(args)}", expr.pos)
                        frame = Env(fn.env)
                        fv = frame.vars
                        for p, v in zip(fn.params, args):
                            fv[p] = v
                        pins.pop()
                        pins.pop()
                        env = frame
                        stack[ix] = env
                        body = fn.body
                        for b in body[:-1]:
                            self._eval(b, env)
                        expr = body[-1]
                        continue
                    if tf is Primitive:
                        if (len(args) < fn.min_args
                                or (fn.max_args is not None
                                    and len(args) > fn.max_args)):
                            raise _rt_error(
                                f"{fn.name}: bad argument count "
                                f"{len(args)}", expr.pos)
                        try:
                            result = fn.fn(self, args, expr.pos)
                        except OutOfMemory as exc:
                            raise OutOfMemory(
                                f"{expr.pos[0]}:{expr.pos[1]}: "
                                f"{fn.name}: {exc}") from None
                        pins.pop()
                        pins.pop()
                        return result
                    raise _rt_error(
                        f"not a procedure: {write_value(self.rt.heap, fn)}",
                        expr.pos)
                if t is If:
                    test = self._eval(expr.test, env)
                    expr = expr.then if test is not False else expr.alt
                    continue
                if t is Begin:
                    exprs = expr.exprs
                    for e in exprs[:-1]:
                        self._eval(e, env)
                    expr = exprs[-1]
                    continue
                if t is Let:
                    vals = []
                    pins.append(vals)
                    for _, init in expr.bindings:
                        vals.append(self._eval(init, env))
                    frame = Env(env)
                    fv = frame.vars
                    for (name, _), v in zip(expr.bindings, vals):
                        fv[name] = v
                    pins.pop()
                    env = frame
                    stack[ix] = env
                    body = expr.body
                    for b in body[:-1]:
                        self._eval(b, env)
                    expr = body[-1]
                    continue
                if t is NamedLet:
                    # the loop name binds a closure over its own frame
                    loop_frame = Env(env)
                    closure = Closure(
                        tuple(name for name, _ in expr.bindings),
                        expr.body, loop_frame, expr.name)
                    loop_frame.vars[expr.name] = closure
                    vals = []
                    pins.append(vals)
                    for _, init in expr.bindings:
                        vals.append(self._eval(init, env))
                    frame = Env(loop_frame)
                    fv = frame.vars
                    for p, v in zip(closure.params, vals):
                        fv[p] = v
                    pins.pop()
                    env = frame
                    stack[ix] = env
                    body = expr.body
                    for b in body[:-1]:
                        self._eval(b, env)
                    expr = body[-1]
                    continue
                if t is Quote:
                    try:
                        return self._materialize(expr.datum)
                    except OutOfMemory as exc:
                        raise OutOfMemory(
                            f"{expr.pos[0]}:{expr.pos[1]}: "
                            f"quote: {exc}") from None
                if t is Lambda:
                    return Closure(expr.params, expr.body, env, None)
                if t is Define:
                    value = self._eval(expr.expr, env)
                    if type(value) is Closure and value.name is None:
                        value.name = expr.name
                    env.vars[expr.name] = value
                    return NIL
                if t is SetVar:
                    env.assign(expr.name, self._eval(expr.expr, env),
                               expr.pos)
                    return NIL
                raise AssertionError(f"unknown expression {expr!r}")
        finally:
            stack.pop()


# ---------------------------------------------------------------------------
# Entry point

@dataclass
class RunResult:
    value: object
    value_repr: str
    trace_log: TraceLog
    collections: list


def run_source(source: str, *,
               gc_interval: int = DEFAULT_GC_INTERVAL,
               heap_slots: int = DEFAULT_HEAP_SLOTS,
               source_name: str = "<string>",
               on_collection=None, on_event=None) -> RunResult:
    """Parse and run a program, returning its result and the trace log.

    The result is rendered before termination; if it is a heap reference
    the object may be collected by the closing collection, so value_repr
    is the faithful record of what the program produced.
    """
    program = parse(source)
    rt = Runtime(heap_slots, gc_interval, source_name,
                 on_collection=on_collection, on_event=on_event)
    interp = Interpreter(rt)
    value = interp.eval_program(program)
    value_repr = write_value(rt.heap, value)
    log = rt.terminate()
    return RunResult(value, value_repr, log, rt.collections)
