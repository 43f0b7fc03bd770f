"""Dependently sorted algebraic theories over direct categories.

The semantic side: finite direct categories with computed dimensions,
finite presheaves, boundaries, and cell contexts built by attaching one
cell at a time, carrying the strict parent/projection/pullback structure.

The syntactic side: type signatures, term signatures, and equation sets
parsed from a small declaration grammar, the translation between
signatures and direct categories, and an exhaustive finite-model checker.
"""

from __future__ import annotations

import re
from dataclasses import dataclass


class EmptyContext(ValueError):
    pass


class NotAMap(ValueError):
    pass


class ParseError(ValueError):
    pass


class FreshnessViolation(ValueError):
    pass


class IllFormedContext(ValueError):
    pass


# ---------------------------------------------------------------------------
# Finite direct categories


@dataclass(frozen=True)
class FinDirectCat:
    """A finite category given by tables.

    morphisms maps each non-identity or identity name to (source, target);
    composition lists g after f for composable non-identity pairs, with
    identity composites left implicit; identities designates one
    endomorphism per object.
    """

    objects: tuple[str, ...]
    morphisms: dict[str, tuple[str, str]]
    composition: dict[tuple[str, str], str]
    identities: dict[str, str]

    def src(self, f: str) -> str:
        return self.morphisms[f][0]

    def tgt(self, f: str) -> str:
        return self.morphisms[f][1]

    def is_identity(self, f: str) -> bool:
        return f in self.identities.values()

    def compose(self, g: str, f: str) -> str:
        """g after f."""
        if (g, f) in self.composition:
            return self.composition[(g, f)]
        if f == self.identities.get(self.src(f)):
            return g
        if g == self.identities.get(self.tgt(f)):
            return f
        raise KeyError(f"no composite {g}.{f}")

    def into(self, c: str) -> tuple[str, ...]:
        """Non-identity morphisms with target c, sorted by name."""
        return tuple(
            sorted(
                f
                for f, (_, b) in self.morphisms.items()
                if b == c and not self.is_identity(f)
            )
        )


def _find_cycle(C: FinDirectCat) -> tuple[str, ...] | None:
    """A cycle in the relation "non-identity morphism from a to b", or None."""
    succ: dict[str, set[str]] = {a: set() for a in C.objects}
    for f, (a, b) in C.morphisms.items():
        if not C.is_identity(f):
            succ[a].add(b)
    state: dict[str, int] = {}
    stack: list[str] = []

    def visit(v: str) -> tuple[str, ...] | None:
        state[v] = 1
        stack.append(v)
        for w in sorted(succ[v]):
            if state.get(w) == 1:
                return tuple(stack[stack.index(w) :]) + (w,)
            if state.get(w) is None:
                got = visit(w)
                if got is not None:
                    return got
        stack.pop()
        state[v] = 2
        return None

    for v in C.objects:
        if state.get(v) is None:
            got = visit(v)
            if got is not None:
                return got
    return None


def object_dimensions(C: FinDirectCat) -> dict[str, int]:
    """Dimension of each object: the length of the longest chain of
    non-identity morphisms ending at it.  Requires an acyclic category."""
    if _find_cycle(C) is not None:
        raise ValueError("the category is not direct")
    memo: dict[str, int] = {}

    def dim(c: str) -> int:
        if c not in memo:
            below = [
                dim(C.src(f))
                for f in C.morphisms
                if C.tgt(f) == c and not C.is_identity(f)
            ]
            memo[c] = 1 + max(below) if below else 0
        return memo[c]

    for c in C.objects:
        dim(c)
    return memo


@dataclass(frozen=True)
class LfdReport:
    dims: dict[str, int]
    covers: dict[str, tuple[str, ...]]
    cycle: tuple[str, ...] | None
    problems: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return self.cycle is None and not self.problems


def validate_lfd(C: FinDirectCat) -> LfdReport:
    """Check that C is a well-formed finite direct category: tables
    consistent, the reachability order acyclic, and for each object the
    family of non-identity morphisms into it a saturated cover closed
    under precomposition.  Dimensions are computed along the way."""
    problems: list[str] = []
    for f, (a, b) in C.morphisms.items():
        if a not in C.objects or b not in C.objects:
            problems.append(f"morphism {f} has unknown endpoints")
    for c in C.objects:
        i = C.identities.get(c)
        if i is None:
            problems.append(f"object {c} has no identity")
        elif C.morphisms.get(i) != (c, c):
            problems.append(f"identity {i} of {c} is not an endomorphism of {c}")
    for (g, f), h in C.composition.items():
        if C.tgt(f) != C.src(g):
            problems.append(f"composite {g}.{f} declared but not composable")
        elif C.morphisms.get(h) is None or (C.src(h), C.tgt(h)) != (
            C.src(f),
            C.tgt(g),
        ):
            problems.append(f"composite {g}.{f} = {h} has wrong endpoints")
    if problems:
        return LfdReport({}, {}, None, tuple(problems))

    cycle = _find_cycle(C)
    if cycle is not None:
        return LfdReport({}, {}, cycle, tuple(problems))
    dims = object_dimensions(C)

    covers: dict[str, tuple[str, ...]] = {}
    for c in C.objects:
        cover = C.into(c)
        covers[c] = cover
        for j in cover:
            for e in C.into(C.src(j)):
                try:
                    m = C.compose(j, e)
                except KeyError:
                    problems.append(f"missing composite {j}.{e} under {c}")
                    continue
                if m not in cover:
                    problems.append(f"composite {j}.{e} escapes the cover of {c}")
    for f in C.morphisms:
        a, b = C.morphisms[f]
        try:
            if C.compose(f, C.identities[a]) != f or C.compose(C.identities[b], f) != f:
                problems.append(f"identity laws fail at {f}")
        except KeyError:
            problems.append(f"identity composites missing at {f}")
    for f in C.morphisms:
        for g in C.morphisms:
            if C.tgt(f) != C.src(g):
                continue
            for h in C.morphisms:
                if C.tgt(g) != C.src(h):
                    continue
                try:
                    if C.compose(h, C.compose(g, f)) != C.compose(C.compose(h, g), f):
                        problems.append(f"associativity fails at {h}.{g}.{f}")
                except KeyError as err:
                    problems.append(str(err))
    return LfdReport(dims, covers, None, tuple(problems))


# ---------------------------------------------------------------------------
# Finite presheaves


@dataclass(frozen=True)
class FinPresheafC:
    """A finite presheaf on a finite direct category.

    cells lists the elements at each object; restriction maps a cell at
    the target of a non-identity morphism to a cell at its source.
    Identity restrictions are implicit.  Cell ids are globally unique.
    """

    cat: FinDirectCat
    cells: dict[str, tuple[str, ...]]
    restriction: dict[tuple[str, str], str]

    def __post_init__(self) -> None:
        index: dict[str, str] = {}
        for c, xs in self.cells.items():
            for x in xs:
                if x in index:
                    raise ValueError(f"cell id {x} is not unique")
                index[x] = c
        object.__setattr__(self, "_obj", index)

    def obj_of(self, x: str) -> str:
        return self._obj[x]  # type: ignore[attr-defined]

    def of_obj(self, c: str) -> tuple[str, ...]:
        return self.cells.get(c, ())

    def restrict(self, x: str, f: str) -> str:
        if self.cat.is_identity(f):
            return x
        return self.restriction[(x, f)]


def validate_presheaf(X: FinPresheafC) -> list[str]:
    problems: list[str] = []
    for c in X.cells:
        if c not in X.cat.objects:
            problems.append(f"cells declared at unknown object {c}")
    for f, (a, b) in X.cat.morphisms.items():
        if X.cat.is_identity(f):
            continue
        for x in X.of_obj(b):
            y = X.restriction.get((x, f))
            if y is None:
                problems.append(f"missing restriction of {x} along {f}")
            elif y not in X.of_obj(a):
                problems.append(f"restriction of {x} along {f} is not a cell at {a}")
    for (x, f), y in X.restriction.items():
        if X.cat.morphisms.get(f) is None or x not in X.of_obj(X.cat.tgt(f)):
            problems.append(f"stray restriction entry ({x}, {f})")
    for f in X.cat.morphisms:
        for g in X.cat.morphisms:
            if X.cat.is_identity(f) or X.cat.is_identity(g):
                continue
            if X.cat.tgt(f) != X.cat.src(g):
                continue
            gf = X.cat.compose(g, f)
            for x in X.of_obj(X.cat.tgt(g)):
                if X.restrict(x, gf) != X.restrict(X.restrict(x, g), f):
                    problems.append(f"functoriality fails at {x} along {g}.{f}")
    return problems


@dataclass(frozen=True)
class PshMap:
    src: FinPresheafC
    dst: FinPresheafC
    comp: dict[str, str]

    def __call__(self, x: str) -> str:
        return self.comp[x]


def psh_identity(X: FinPresheafC) -> PshMap:
    return PshMap(X, X, {x: x for xs in X.cells.values() for x in xs})


def psh_compose(g: PshMap, f: PshMap) -> PshMap:
    if f.dst != g.src:
        raise NotAMap("maps are not composable")
    return PshMap(f.src, g.dst, {x: g.comp[y] for x, y in f.comp.items()})


def check_psh_map(f: PshMap) -> list[str]:
    problems: list[str] = []
    for c, xs in f.src.cells.items():
        for x in xs:
            y = f.comp.get(x)
            if y is None:
                problems.append(f"no image for {x}")
            elif y not in f.dst.of_obj(c):
                problems.append(f"image of {x} is not a cell at {c}")
    for m, (a, b) in f.src.cat.morphisms.items():
        if f.src.cat.is_identity(m):
            continue
        for x in f.src.of_obj(b):
            if x not in f.comp or f.src.restrict(x, m) not in f.comp:
                continue
            if f.dst.restrict(f.comp[x], m) != f.comp[f.src.restrict(x, m)]:
                problems.append(f"naturality fails at {x} along {m}")
    return problems


def _cells_by_dimension(X: FinPresheafC) -> list[tuple[str, str]]:
    """(object, cell) pairs ordered by dimension, object order, cell order."""
    dims = object_dimensions(X.cat)
    order = {c: i for i, c in enumerate(X.cat.objects)}
    out: list[tuple[str, str]] = []
    for c in sorted(X.cells, key=lambda c: (dims[c], order[c])):
        out.extend((c, x) for x in X.cells[c])
    return out


def psh_maps(X: FinPresheafC, Y: FinPresheafC) -> list[PshMap]:
    """All natural maps X -> Y, by backtracking in dimension order."""
    if X.cat != Y.cat:
        raise NotAMap("presheaves live over different categories")
    todo = _cells_by_dimension(X)
    out: list[PshMap] = []

    def place(i: int, comp: dict[str, str]) -> None:
        if i == len(todo):
            out.append(PshMap(X, Y, dict(comp)))
            return
        c, x = todo[i]
        for y in Y.of_obj(c):
            if all(
                Y.restrict(y, m) == comp[X.restrict(x, m)]
                for m in X.cat.into(c)
            ):
                comp[x] = y
                place(i + 1, comp)
                del comp[x]

    place(0, {})
    return out


def psh_isomorphism(X: FinPresheafC, Y: FinPresheafC) -> PshMap | None:
    """An isomorphism X -> Y if one exists: a natural map bijective at
    every object, found by backtracking."""
    if X.cat != Y.cat:
        return None
    if any(len(X.of_obj(c)) != len(Y.of_obj(c)) for c in X.cat.objects):
        return None
    todo = _cells_by_dimension(X)

    def place(i: int, comp: dict[str, str], used: set[str]) -> dict[str, str] | None:
        if i == len(todo):
            return dict(comp)
        c, x = todo[i]
        for y in Y.of_obj(c):
            if y in used:
                continue
            if all(
                Y.restrict(y, m) == comp[X.restrict(x, m)]
                for m in X.cat.into(c)
            ):
                comp[x] = y
                used.add(y)
                got = place(i + 1, comp, used)
                if got is not None:
                    return got
                used.discard(y)
                del comp[x]
        return None

    got = place(0, {}, set())
    return None if got is None else PshMap(X, Y, got)


def representable_psh(C: FinDirectCat, c: str) -> FinPresheafC:
    """The presheaf of morphisms into c; cells are morphism names."""
    cells: dict[str, tuple[str, ...]] = {}
    for b in C.objects:
        ms = sorted(f for f, (s, t) in C.morphisms.items() if s == b and t == c)
        if ms:
            cells[b] = tuple(ms)
    restriction = {}
    for b, ms in cells.items():
        for x in ms:
            for e in C.into(b):
                restriction[(x, e)] = C.compose(x, e)
    return FinPresheafC(C, cells, restriction)


def boundary_c(C: FinDirectCat, c: str) -> PshMap:
    """The inclusion of the boundary of c into its representable.  The
    boundary keeps exactly the non-identity morphisms into c."""
    if c not in C.objects:
        raise ValueError(f"unknown object {c}")
    whole = representable_psh(C, c)
    keep = set(C.into(c))
    cells = {
        b: tuple(x for x in xs if x in keep) for b, xs in whole.cells.items()
    }
    cells = {b: xs for b, xs in cells.items() if xs}
    restriction = {
        (x, e): y for (x, e), y in whole.restriction.items() if x in keep
    }
    sub = FinPresheafC(C, cells, restriction)
    return PshMap(sub, whole, {x: x for xs in cells.values() for x in xs})


# ---------------------------------------------------------------------------
# Cell contexts


@dataclass(frozen=True)
class AttachStep:
    """One attachment: a new cell at obj whose boundary lands in the
    previous stage.  attach pairs each non-identity morphism into obj
    with the cell of the previous stage it restricts to."""

    obj: str
    attach: tuple[tuple[str, str], ...]
    name: str


@dataclass(frozen=True)
class Context:
    """A presheaf presented as an ordered sequence of cell attachments.
    Two contexts are equal only if they attach the same cells in the
    same order along the same maps."""

    cat: FinDirectCat
    steps: tuple[AttachStep, ...]

    def realization(self, upto: int | None = None) -> FinPresheafC:
        n = len(self.steps) if upto is None else upto
        cells: dict[str, list[str]] = {}
        restriction: dict[tuple[str, str], str] = {}
        for step in self.steps[:n]:
            cells.setdefault(step.obj, []).append(step.name)
            for m, y in step.attach:
                restriction[(step.name, m)] = y
        return FinPresheafC(
            self.cat, {c: tuple(xs) for c, xs in cells.items()}, restriction
        )

    def __str__(self) -> str:
        parts = []
        for step in self.steps:
            att = ", ".join(f"{m}->{y}" for m, y in step.attach)
            parts.append(f"{step.name}: {step.obj}({att})" if att else f"{step.name}: {step.obj}")
        return "[" + "; ".join(parts) + "]"


def validate_context(ctx: Context) -> list[str]:
    problems: list[str] = []
    for i, step in enumerate(ctx.steps):
        if step.name != f"x{i}":
            problems.append(f"step {i} is named {step.name}, expected x{i}")
        if step.obj not in ctx.cat.objects:
            problems.append(f"step {i} attaches at unknown object {step.obj}")
            continue
        prev = ctx.realization(i)
        attach = dict(step.attach)
        want = set(ctx.cat.into(step.obj))
        if set(attach) != want:
            problems.append(f"step {i} must attach along exactly {sorted(want)}")
            continue
        for m, y in attach.items():
            if y not in prev.of_obj(ctx.cat.src(m)):
                problems.append(f"step {i} sends {m} to a missing cell {y}")
        for m in want:
            for e in ctx.cat.into(ctx.cat.src(m)):
                if attach.get(ctx.cat.compose(m, e)) != prev.restrict(attach[m], e):
                    problems.append(f"step {i} attaching map is not natural at {m}.{e}")
    return problems


def presheaf_to_context(X: FinPresheafC) -> Context:
    """Present a finite presheaf as a context, attaching its cells in
    dimension order and then in the deterministic cell order.  The
    realization is isomorphic to X via the cell order."""
    steps: list[AttachStep] = []
    name_of: dict[str, str] = {}
    for c, x in _cells_by_dimension(X):
        name = f"x{len(steps)}"
        attach = tuple(
            sorted((m, name_of[X.restrict(x, m)]) for m in X.cat.into(c))
        )
        steps.append(AttachStep(c, attach, name))
        name_of[x] = name
    return Context(X.cat, tuple(steps))


def ctx_ft(ctx: Context) -> Context:
    """Drop the last attachment."""
    if not ctx.steps:
        raise EmptyContext("the empty context has no parent")
    return Context(ctx.cat, ctx.steps[:-1])


def ctx_pr(ctx: Context) -> PshMap:
    """The inclusion of the parent stage into the full realization."""
    if not ctx.steps:
        raise EmptyContext("the empty context has no projection")
    prev = ctx.realization(len(ctx.steps) - 1)
    whole = ctx.realization()
    return PshMap(prev, whole, {x: x for xs in prev.cells.values() for x in xs})


def ctx_pullback(
    ctx: Context, f: PshMap, base: Context
) -> tuple[Context, PshMap]:
    """Reattach the last cell of ctx along f, over the context base.

    f must be a map from the realization of the parent of ctx to the
    realization of base.  Returns the extended context together with the
    connecting map from the realization of ctx to its realization.  The
    construction is strictly functorial: pulling back along a composite
    equals the two-step pullback, as equality of contexts.
    """
    if not ctx.steps:
        raise EmptyContext("cannot pull back the empty context")
    last = ctx.steps[-1]
    parent = ctx.realization(len(ctx.steps) - 1)
    if f.src != parent:
        raise NotAMap("the map must start at the parent realization")
    if f.dst != base.realization():
        raise NotAMap("the map must land in the base realization")
    if ctx.cat != base.cat:
        raise NotAMap("contexts live over different categories")
    bad = check_psh_map(f)
    if bad:
        raise NotAMap(bad[0])
    name = f"x{len(base.steps)}"
    attach = tuple(sorted((m, f(y)) for m, y in last.attach))
    result = Context(base.cat, base.steps + (AttachStep(last.obj, attach, name),))
    comp = dict(f.comp)
    comp[last.name] = name
    connecting = PshMap(ctx.realization(), result.realization(), comp)
    return result, connecting


# ---------------------------------------------------------------------------
# Syntax: terms, sorts, declarations


@dataclass(frozen=True)
class Term:
    """A variable occurrence when args is None, an operation application
    otherwise."""

    head: str
    args: tuple["Term", ...] | None = None

    def __str__(self) -> str:
        if self.args is None:
            return self.head
        return f"{self.head}({', '.join(map(str, self.args))})"


@dataclass(frozen=True)
class SortExpr:
    head: str
    args: tuple[Term, ...] = ()

    def __str__(self) -> str:
        if not self.args:
            return self.head
        return f"{self.head}({', '.join(map(str, self.args))})"


Binding = tuple[str, SortExpr]


@dataclass(frozen=True)
class TypeDecl:
    name: str
    context: tuple[Binding, ...]
    arg_order: tuple[str, ...]
    grade: int

    def __str__(self) -> str:
        ctx = ", ".join(f"{v}: {s}" for v, s in self.context)
        head = self.name if not self.arg_order else f"{self.name}({', '.join(self.arg_order)})"
        return f"{ctx} |- {head} type" if ctx else f"|- {head} type"


@dataclass(frozen=True)
class TermDecl:
    name: str
    context: tuple[Binding, ...]
    explicit: tuple[str, ...]
    output: SortExpr
    grade: int

    def __str__(self) -> str:
        ctx = ", ".join(f"{v}: {s}" for v, s in self.context)
        head = f"{self.name}({', '.join(self.explicit)})"
        return f"{ctx} |- {head} : {self.output}" if ctx else f"|- {head} : {self.output}"


@dataclass(frozen=True)
class Equation:
    context: tuple[Binding, ...]
    lhs: Term
    rhs: Term
    sort: SortExpr
    grade: int

    @property
    def label(self) -> str:
        return f"{self.lhs} = {self.rhs}"


@dataclass(frozen=True)
class Signature:
    declarations: tuple[TypeDecl, ...]

    def decl(self, name: str) -> TypeDecl:
        for d in self.declarations:
            if d.name == name:
                return d
        raise KeyError(name)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(d.name for d in self.declarations)


@dataclass(frozen=True)
class TermSignature:
    declarations: tuple[TermDecl, ...]

    def decl(self, name: str) -> TermDecl:
        for d in self.declarations:
            if d.name == name:
                return d
        raise KeyError(name)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(d.name for d in self.declarations)


@dataclass(frozen=True)
class EquationSet:
    equations: tuple[Equation, ...]


_TOKEN = re.compile(r"[A-Za-z_][A-Za-z0-9_']*|\|-|[(),:={}]|\S")


class _Tokens:
    def __init__(self, line: str, lineno: int):
        self.items = _TOKEN.findall(line.replace("⊢", "|-"))
        self.pos = 0
        self.lineno = lineno

    def peek(self) -> str | None:
        return self.items[self.pos] if self.pos < len(self.items) else None

    def next(self) -> str:
        t = self.peek()
        if t is None:
            raise ParseError(f"line {self.lineno}: unexpected end of line")
        self.pos += 1
        return t

    def expect(self, token: str) -> None:
        t = self.next()
        if t != token:
            raise ParseError(f"line {self.lineno}: expected {token!r}, found {t!r}")

    def done(self) -> None:
        t = self.peek()
        if t is not None:
            raise ParseError(f"line {self.lineno}: trailing input {t!r}")


_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_']*\Z")


def _ident(tok: _Tokens) -> str:
    t = tok.next()
    if not _IDENT.match(t):
        raise ParseError(f"line {tok.lineno}: expected a name, found {t!r}")
    return t


def _parse_term(tok: _Tokens) -> Term:
    head = _ident(tok)
    if tok.peek() != "(":
        return Term(head)
    tok.next()
    args: list[Term] = []
    if tok.peek() != ")":
        args.append(_parse_term(tok))
        while tok.peek() == ",":
            tok.next()
            args.append(_parse_term(tok))
    tok.expect(")")
    return Term(head, tuple(args))


def _parse_sortexpr(tok: _Tokens) -> SortExpr:
    t = _parse_term(tok)
    return SortExpr(t.head, t.args or ())


def _parse_ctx(tok: _Tokens) -> tuple[Binding, ...]:
    if tok.peek() == "|-":
        return ()
    bindings: list[Binding] = []
    while True:
        names = [_ident(tok)]
        while tok.peek() not in (":",) and tok.peek() is not None and _IDENT.match(tok.peek() or ""):
            names.append(_ident(tok))
        tok.expect(":")
        sort = _parse_sortexpr(tok)
        bindings.extend((n, sort) for n in names)
        if tok.peek() == ",":
            tok.next()
            continue
        break
    return tuple(bindings)


# ---------------------------------------------------------------------------
# Typing


def _subst_term(t: Term, theta: dict[str, Term]) -> Term:
    if t.args is None:
        return theta.get(t.head, t)
    return Term(t.head, tuple(_subst_term(a, theta) for a in t.args))


def _subst_sort(s: SortExpr, theta: dict[str, Term]) -> SortExpr:
    return SortExpr(s.head, tuple(_subst_term(a, theta) for a in s.args))


def _match_term(pattern: Term, actual: Term, theta: dict[str, Term], where: str) -> None:
    if pattern.args is None:
        if pattern.head in theta:
            if theta[pattern.head] != actual:
                raise ParseError(
                    f"{where}: {pattern.head} matches both "
                    f"{theta[pattern.head]} and {actual}"
                )
        else:
            theta[pattern.head] = actual
        return
    if actual.args is None or actual.head != pattern.head:
        raise ParseError(f"{where}: {actual} does not match {pattern}")
    for p, a in zip(pattern.args, actual.args):
        _match_term(p, a, theta, where)


def _match_sort(pattern: SortExpr, actual: SortExpr, theta: dict[str, Term], where: str) -> None:
    if pattern.head != actual.head or len(pattern.args) != len(actual.args):
        raise ParseError(f"{where}: sort {actual} does not match {pattern}")
    for p, a in zip(pattern.args, actual.args):
        _match_term(p, a, theta, where)


def _sort_of(
    t: Term,
    ctx: dict[str, SortExpr],
    sig: Signature,
    ops: dict[str, TermDecl],
    where: str,
) -> SortExpr:
    if t.args is None:
        if t.head in ctx:
            return ctx[t.head]
        if t.head in ops and not ops[t.head].explicit:
            return _apply(ops[t.head], (), ctx, sig, ops, where)[1]
        raise ParseError(f"{where}: unbound variable {t.head}")
    if t.head not in ops:
        raise ParseError(f"{where}: unknown operation {t.head}")
    return _apply(ops[t.head], t.args, ctx, sig, ops, where)[1]


def _apply(
    op: TermDecl,
    args: tuple[Term, ...],
    ctx: dict[str, SortExpr],
    sig: Signature,
    ops: dict[str, TermDecl],
    where: str,
) -> tuple[dict[str, Term], SortExpr]:
    """Infer the full instantiation of op's context from its explicit
    arguments, verify it, and return it with the instantiated output sort."""
    if len(args) != len(op.explicit):
        raise ParseError(
            f"{where}: {op.name} takes {len(op.explicit)} arguments, got {len(args)}"
        )
    opctx = dict(op.context)
    theta: dict[str, Term] = dict(zip(op.explicit, args))
    for name, actual in zip(op.explicit, args):
        declared = opctx[name]
        _match_sort(declared, _sort_of(actual, ctx, sig, ops, where), theta, where)
    for v, _ in op.context:
        if v not in theta:
            raise ParseError(f"{where}: cannot infer {v} in {op.name}")
    for v, s in op.context:
        want = _subst_sort(s, theta)
        got = _sort_of(theta[v], ctx, sig, ops, where)
        if got != want:
            raise ParseError(f"{where}: {theta[v]} has sort {got}, expected {want}")
    return theta, _subst_sort(op.output, theta)


def _check_context(
    bindings: tuple[Binding, ...],
    sig: Signature,
    ops: dict[str, TermDecl],
    lineno: int,
) -> None:
    """A context must be built from the type signature alone: sorts name
    declared types and their arguments are previously bound variables."""
    where = f"line {lineno}"
    seen: dict[str, SortExpr] = {}
    declared = set(sig.names) | set(ops)
    for v, s in bindings:
        if v in declared:
            raise IllFormedContext(f"{where}: variable {v} shadows a declared symbol")
        if v in seen:
            raise IllFormedContext(f"{where}: variable {v} bound twice")
        if s.head in ops:
            raise IllFormedContext(
                f"{where}: context mentions the term symbol {s.head}; "
                "contexts must be well-formed over the type signature alone"
            )
        try:
            decl = sig.decl(s.head)
        except KeyError:
            raise IllFormedContext(f"{where}: unknown type {s.head}") from None
        for a in s.args:
            if a.args is not None:
                raise IllFormedContext(
                    f"{where}: context argument {a} is not a variable; "
                    "contexts must be well-formed over the type signature alone"
                )
            if a.head not in seen:
                raise IllFormedContext(f"{where}: unbound variable {a.head} in {s}")
        if len(s.args) != len(decl.arg_order):
            raise IllFormedContext(
                f"{where}: {s.head} takes {len(decl.arg_order)} arguments"
            )
        theta = dict(zip(decl.arg_order, s.args))
        opctx = dict(decl.context)
        for w in decl.arg_order:
            want = _subst_sort(opctx[w], theta)
            got = seen[theta[w].head]
            if got != want:
                raise IllFormedContext(
                    f"{where}: {theta[w]} has sort {got}, expected {want}"
                )
        seen[v] = s


def _grade_of_context(bindings: tuple[Binding, ...], grades: dict[str, int]) -> int:
    if not bindings:
        return 0
    return 1 + max(grades[s.head] for _, s in bindings)


def parse_theory(text: str) -> tuple[Signature, TermSignature, EquationSet]:
    """Parse a theory file: type declarations (ctx |- A(vars) type), term
    declarations (ctx |- t(args) : sort), and equations
    (ctx |- t = u : sort), in dependency order."""
    types: list[TypeDecl] = []
    ops: list[TermDecl] = []
    eqns: list[Equation] = []
    grades: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = _Tokens(line, lineno)
        ctx = _parse_ctx(tok)
        tok.expect("|-")
        sig = Signature(tuple(types))
        opmap = {d.name: d for d in ops}
        _check_context(ctx, sig, opmap, lineno)
        lead = _parse_term(tok)
        nxt = tok.peek()
        if nxt == "type":
            tok.next()
            tok.done()
            name = lead.head
            if name in grades or name in opmap:
                raise FreshnessViolation(f"line {lineno}: {name} is already declared")
            ctx_vars = tuple(v for v, _ in ctx)
            if lead.args is None:
                arg_order = ctx_vars
            else:
                arg_order = tuple(a.head for a in lead.args)
                if any(a.args is not None for a in lead.args):
                    raise ParseError(f"line {lineno}: type arguments must be variables")
                if sorted(arg_order) != sorted(ctx_vars) or len(set(arg_order)) != len(arg_order):
                    raise ParseError(
                        f"line {lineno}: {name} must list each context variable once"
                    )
            grade = _grade_of_context(ctx, grades)
            types.append(TypeDecl(name, ctx, arg_order, grade))
            grades[name] = grade
        elif nxt == ":":
            tok.next()
            output = _parse_sortexpr(tok)
            tok.done()
            name = lead.head
            if name in grades or name in opmap:
                raise FreshnessViolation(f"line {lineno}: {name} is already declared")
            if lead.args is None:
                raise ParseError(f"line {lineno}: operation {name} needs an argument list")
            explicit = tuple(a.head for a in lead.args)
            ctx_vars = {v for v, _ in ctx}
            if any(a.args is not None or a.head not in ctx_vars for a in lead.args):
                raise ParseError(
                    f"line {lineno}: arguments of {name} must be context variables"
                )
            if len(set(explicit)) != len(explicit):
                raise ParseError(f"line {lineno}: repeated argument in {name}")
            where = f"line {lineno}"
            if output.head not in grades:
                raise ParseError(f"{where}: unknown type {output.head}")
            _check_sort_instance(output, dict(ctx), sig, opmap, where)
            ops.append(TermDecl(name, ctx, explicit, output, grades[output.head]))
        elif nxt == "=":
            tok.next()
            rhs = _parse_term(tok)
            tok.expect(":")
            sort = _parse_sortexpr(tok)
            tok.done()
            where = f"line {lineno}"
            ctxmap = dict(ctx)
            for side in (lead, rhs):
                got = _sort_of(side, ctxmap, sig, opmap, where)
                if got != sort:
                    raise ParseError(
                        f"{where}: {side} has sort {got}, expected {sort}"
                    )
            if sort.head not in grades:
                raise ParseError(f"{where}: unknown type {sort.head}")
            eqns.append(Equation(ctx, lead, rhs, sort, grades[sort.head]))
        else:
            raise ParseError(
                f"line {lineno}: expected 'type', ':' or '=' after the head"
            )
    return Signature(tuple(types)), TermSignature(tuple(ops)), EquationSet(tuple(eqns))


def _check_sort_instance(
    s: SortExpr,
    ctx: dict[str, SortExpr],
    sig: Signature,
    ops: dict[str, TermDecl],
    where: str,
) -> None:
    decl = sig.decl(s.head)
    if len(s.args) != len(decl.arg_order):
        raise ParseError(f"{where}: {s.head} takes {len(decl.arg_order)} arguments")
    theta = dict(zip(decl.arg_order, s.args))
    opctx = dict(decl.context)
    for w in decl.arg_order:
        want = _subst_sort(opctx[w], theta)
        got = _sort_of(theta[w], ctx, sig, ops, where)
        if got != want:
            raise ParseError(f"{where}: {theta[w]} has sort {got}, expected {want}")


def parse_signature(text: str) -> Signature:
    """Parse a file of type declarations only."""
    sig, ops, eqns = parse_theory(text)
    if ops.declarations or eqns.equations:
        raise ParseError("a signature file may contain only type declarations")
    return sig


def parse_context(sig: Signature, text: str) -> tuple[Binding, ...]:
    """Parse a bare context such as "x y : V, f : E(x, y)" and check it
    against the type signature."""
    tok = _Tokens(text, 1)
    if tok.peek() is None:
        return ()
    bindings = _parse_ctx(tok)
    tok.done()
    _check_context(bindings, sig, {}, 1)
    return bindings


# ---------------------------------------------------------------------------
# Signatures as direct categories


_SELF = "@"


def _decl_vars(decl: TypeDecl) -> tuple[str, ...]:
    return tuple(v for v, _ in decl.context) + (_SELF,)


def _decl_sorts(decl: TypeDecl) -> dict[str, SortExpr]:
    out = dict(decl.context)
    out[_SELF] = SortExpr(decl.name, tuple(Term(v) for v in decl.arg_order))
    return out


def _assignments(src: TypeDecl, dst: TypeDecl) -> list[tuple[str, ...]]:
    """Sort-compatible maps from the variables of src's extended context
    into the variables of dst's extended context.  Each is a morphism
    from the src declaration to the dst declaration."""
    svars = _decl_vars(src)
    ssorts = _decl_sorts(src)
    dsorts = _decl_sorts(dst)
    out: list[tuple[str, ...]] = []

    def place(i: int, theta: dict[str, Term]) -> None:
        if i == len(svars):
            out.append(tuple(theta[v].head for v in svars))
            return
        v = svars[i]
        want = _subst_sort(ssorts[v], theta)
        for w in _decl_vars(dst):
            if dsorts[w] == want:
                theta[v] = Term(w)
                place(i + 1, theta)
                del theta[v]

    place(0, {})
    return out


def signature_category(
    sig: Signature,
) -> tuple[FinDirectCat, dict[str, tuple[str, ...]]]:
    """The direct category of a signature, with one object per type
    declaration, together with the variable assignment realizing each
    morphism (indexed by the source declaration's variables)."""
    decls = sig.declarations
    names: dict[tuple[str, str, tuple[str, ...]], str] = {}
    morphisms: dict[str, tuple[str, str]] = {}
    assign: dict[str, tuple[str, ...]] = {}
    identities: dict[str, str] = {}
    for a in decls:
        for b in decls:
            for t in _assignments(a, b):
                if a.name == b.name and t == _decl_vars(a):
                    mname = f"1_{a.name}"
                    identities[a.name] = mname
                else:
                    mname = f"{a.name}>{b.name}:{','.join(t)}"
                names[(a.name, b.name, t)] = mname
                morphisms[mname] = (a.name, b.name)
                assign[mname] = t
    composition: dict[tuple[str, str], str] = {}
    by_obj = {d.name: d for d in decls}
    for f, (a, b) in morphisms.items():
        for g, (b2, c) in morphisms.items():
            if b != b2:
                continue
            fa = dict(zip(_decl_vars(by_obj[a]), assign[f]))
            ga = dict(zip(_decl_vars(by_obj[b]), assign[g]))
            comp = tuple(ga[fa[v]] for v in _decl_vars(by_obj[a]))
            composition[(g, f)] = names[(a, c, comp)]
    composition = {
        (g, f): h
        for (g, f), h in composition.items()
        if g not in identities.values() and f not in identities.values()
    }
    cat = FinDirectCat(tuple(d.name for d in decls), morphisms, composition, identities)
    return cat, assign


def signature_to_lfd(sig: Signature) -> FinDirectCat:
    return signature_category(sig)[0]


def realize_bindings(sig: Signature, bindings: tuple[Binding, ...]) -> FinPresheafC:
    """The presheaf presented by a syntactic context: cells at each
    object are the sort-compatible assignments of that declaration's
    extended context into the bindings, named by their last variable."""
    cat, assign = signature_category(sig)
    sorts = dict(bindings)
    cells: dict[str, tuple[str, ...]] = {}
    for decl in sig.declarations:
        xs = [v for v, s in bindings if s.head == decl.name]
        if xs:
            cells[decl.name] = tuple(xs)
    restriction: dict[tuple[str, str], str] = {}
    for decl in sig.declarations:
        dsorts = _decl_sorts(decl)
        for x in cells.get(decl.name, ()):
            theta = dict(zip(decl.arg_order, sorts[x].args))
            theta[_SELF] = Term(x)
            for m in cat.into(decl.name):
                src_decl = sig.decl(cat.src(m))
                image = dict(zip(_decl_vars(src_decl), assign[m]))[_SELF]
                restriction[(x, m)] = _subst_term(Term(image), theta).head
    return FinPresheafC(cat, cells, restriction)


def lfd_to_signature(C: FinDirectCat) -> Signature:
    """A type signature presenting a validated direct category: one
    declaration per object, whose context attaches the cells of its
    boundary in the deterministic order."""
    report = validate_lfd(C)
    if not report.ok:
        raise ValueError("the category is not a valid finite direct category")
    dims = report.dims
    order = {c: i for i, c in enumerate(C.objects)}

    def boundary_order(c: str) -> list[str]:
        return sorted(C.into(c), key=lambda m: (dims[C.src(m)], order[C.src(m)], m))

    decls: list[TypeDecl] = []
    grades: dict[str, int] = {}
    for c in sorted(C.objects, key=lambda c: (dims[c], order[c])):
        cover = boundary_order(c)
        var_of = {m: f"x{i}" for i, m in enumerate(cover)}
        bindings: list[Binding] = []
        for m in cover:
            b = C.src(m)
            args = tuple(Term(var_of[C.compose(m, e)]) for e in boundary_order(b))
            bindings.append((var_of[m], SortExpr(b, args)))
        ctx = tuple(bindings)
        grade = _grade_of_context(ctx, grades)
        decls.append(TypeDecl(c, ctx, tuple(v for v, _ in ctx), grade))
        grades[c] = grade
    return Signature(tuple(decls))


def cat_isomorphic(C1: FinDirectCat, C2: FinDirectCat) -> dict[str, str] | None:
    """An isomorphism of categories as a map on objects and morphisms,
    or None.  Found by backtracking over dimension-compatible bijections."""
    d1, d2 = object_dimensions(C1), object_dimensions(C2)
    if sorted(d1.values()) != sorted(d2.values()):
        return None
    ms1 = sorted(C1.morphisms)
    candidates = {
        a: [b for b in C2.objects if d1[a] == d2[b]] for a in C1.objects
    }

    def try_objects(i: int, omap: dict[str, str]) -> dict[str, str] | None:
        if i == len(C1.objects):
            return try_morphisms(0, dict(omap), {})
        a = C1.objects[i]
        for b in candidates[a]:
            if b in omap.values():
                continue
            omap[a] = b
            got = try_objects(i + 1, omap)
            if got is not None:
                return got
            del omap[a]
        return None

    def try_morphisms(
        i: int, omap: dict[str, str], mmap: dict[str, str]
    ) -> dict[str, str] | None:
        if i == len(ms1):
            for (g, f), h in C1.composition.items():
                if C2.compose(mmap[g], mmap[f]) != mmap[h]:
                    return None
            return {**omap, **mmap}
        f = ms1[i]
        a, b = C1.morphisms[f]
        for f2, (a2, b2) in C2.morphisms.items():
            if f2 in mmap.values() or (a2, b2) != (omap[a], omap[b]):
                continue
            if C1.is_identity(f) != C2.is_identity(f2):
                continue
            mmap[f] = f2
            got = try_morphisms(i + 1, omap, mmap)
            if got is not None:
                return got
            del mmap[f]
        return None

    return try_objects(0, {})


# ---------------------------------------------------------------------------
# Finite models


@dataclass(frozen=True)
class Model:
    """Finite carriers per sort instance and interpretation tables per
    operation, keyed by the explicit arguments."""

    sorts: dict[tuple[str, tuple[str, ...]], tuple[str, ...]]
    ops: dict[str, dict[tuple[str, ...], str]]

    def carrier(self, key: tuple[str, tuple[str, ...]]) -> tuple[str, ...]:
        return self.sorts.get(key, ())


def parse_model(text: str) -> Model:
    """Read a model file: lines `sort V = {a, b}`, `sort E(a, b) = {f}`,
    `op c(g, f) table:` followed by rows `c(g1, f1) = h1`."""
    sorts: dict[tuple[str, tuple[str, ...]], tuple[str, ...]] = {}
    ops: dict[str, dict[tuple[str, ...], str]] = {}
    current: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = _Tokens(line, lineno)
        head = tok.next()
        if head == "sort":
            name = _ident(tok)
            args: list[str] = []
            if tok.peek() == "(":
                tok.next()
                if tok.peek() != ")":
                    args.append(_ident(tok))
                    while tok.peek() == ",":
                        tok.next()
                        args.append(_ident(tok))
                tok.expect(")")
            tok.expect("=")
            tok.expect("{")
            elems: list[str] = []
            if tok.peek() != "}":
                elems.append(_ident(tok))
                while tok.peek() == ",":
                    tok.next()
                    elems.append(_ident(tok))
            tok.expect("}")
            tok.done()
            key = (name, tuple(args))
            if key in sorts:
                raise ParseError(f"line {lineno}: duplicate carrier for {name}{tuple(args)}")
            sorts[key] = tuple(elems)
            current = None
        elif head == "op":
            name = _ident(tok)
            if tok.peek() == "(":
                depth = 0
                while True:
                    t = tok.next()
                    depth += {"(": 1, ")": -1}.get(t, 0)
                    if depth == 0:
                        break
            tok.expect("table")
            tok.expect(":")
            tok.done()
            ops.setdefault(name, {})
            current = name
        else:
            if current is None or not _IDENT.match(head) or head != current:
                raise ParseError(f"line {lineno}: expected a sort, op, or table row")
            tok.expect("(")
            args = []
            if tok.peek() != ")":
                args.append(_ident(tok))
                while tok.peek() == ",":
                    tok.next()
                    args.append(_ident(tok))
            tok.expect(")")
            tok.expect("=")
            value = _ident(tok)
            tok.done()
            key2 = tuple(args)
            if key2 in ops[current]:
                raise ParseError(f"line {lineno}: duplicate row for {current}{key2}")
            ops[current][key2] = value
    return Model(sorts, ops)


@dataclass(frozen=True)
class EquationResult:
    label: str
    checked: int
    witness: str | None


@dataclass(frozen=True)
class ModelReport:
    problems: tuple[str, ...]
    equations: tuple[EquationResult, ...]

    @property
    def ok(self) -> bool:
        return not self.problems and all(e.witness is None for e in self.equations)

    @property
    def failures(self) -> tuple[str, ...]:
        out = list(self.problems)
        for e in self.equations:
            if e.witness is not None:
                out.append(f"equation {e.label} fails at {e.witness}")
        return tuple(out)


class _MissingEntry(Exception):
    pass


def _instance_key(s: SortExpr, env: dict[str, str]) -> tuple[str, tuple[str, ...]]:
    return (s.head, tuple(env[a.head] for a in s.args))


def _environments(bindings: tuple[Binding, ...], M: Model):
    """All environments for a context of the type signature, in the
    canonical order: variables left to right, carrier order within each."""

    def go(i: int, env: dict[str, str]):
        if i == len(bindings):
            yield dict(env)
            return
        v, s = bindings[i]
        for e in M.carrier(_instance_key(s, env)):
            env[v] = e
            yield from go(i + 1, env)
            del env[v]

    yield from go(0, {})


def _eval(
    t: Term,
    env: dict[str, str],
    M: Model,
    sig: Signature,
    ops: dict[str, TermDecl],
) -> str:
    if t.args is None:
        if t.head in env:
            return env[t.head]
        if t.head in ops and not ops[t.head].explicit:
            return _eval(Term(t.head, ()), env, M, sig, ops)
        raise _MissingEntry(f"unbound {t.head}")
    op = ops[t.head]
    values = tuple(_eval(a, env, M, sig, ops) for a in t.args)
    table = M.ops.get(t.head, {})
    if values not in table:
        raise _MissingEntry(f"no table entry for {t.head}({', '.join(values)})")
    return table[values]


def check_model(
    theory: tuple[Signature, TermSignature, EquationSet], M: Model
) -> ModelReport:
    """Exhaustively check a finite model: carriers form a consistent
    family of sort instances, each operation table is total and lands in
    the declared instance, and every equation holds in every environment.
    The first counterexample per equation, in the canonical environment
    order, is reported."""
    sig, terms, eqns = theory
    ops = {d.name: d for d in terms.declarations}
    problems: list[str] = []

    elem_instance: dict[str, tuple[str, tuple[str, ...]]] = {}
    for key, elems in M.sorts.items():
        head, args = key
        try:
            decl = sig.decl(head)
        except KeyError:
            problems.append(f"carrier for unknown type {head}")
            continue
        if len(args) != len(decl.arg_order):
            problems.append(f"instance {head}{args} has the wrong arity")
            continue
        env = dict(zip(decl.arg_order, args))
        opctx = dict(decl.context)
        for w in decl.arg_order:
            want = _instance_key(opctx[w], env)
            if env[w] not in M.carrier(want):
                problems.append(
                    f"instance {head}{args}: {env[w]} is not in {want[0]}{want[1]}"
                )
        for e in elems:
            if e in elem_instance:
                problems.append(f"element {e} appears in two carriers")
            elem_instance[e] = key

    for name, decl in ops.items():
        table = M.ops.get(name, {})
        seen: set[tuple[str, ...]] = set()
        for env in _environments(decl.context, M):
            values = tuple(env[v] for v in decl.explicit)
            seen.add(values)
            if values not in table:
                problems.append(f"table for {name} is missing {name}({', '.join(values)})")
                continue
            try:
                out_key = (
                    decl.output.head,
                    tuple(_eval(a, env, M, sig, ops) for a in decl.output.args),
                )
            except _MissingEntry as err:
                problems.append(f"table for {name}: {err}")
                continue
            if table[values] not in M.carrier(out_key):
                problems.append(
                    f"{name}({', '.join(values)}) = {table[values]} "
                    f"is not in {out_key[0]}{out_key[1]}"
                )
        for values in table:
            if values not in seen:
                problems.append(
                    f"table row {name}({', '.join(values)}) is not well-typed"
                )

    results: list[EquationResult] = []
    for eq in eqns.equations:
        witness: str | None = None
        checked = 0
        for env in _environments(eq.context, M):
            checked += 1
            try:
                lhs = _eval(eq.lhs, env, M, sig, ops)
                rhs = _eval(eq.rhs, env, M, sig, ops)
            except _MissingEntry as err:
                witness = f"{_render_env(eq.context, env)} ({err})"
                break
            if lhs != rhs:
                witness = (
                    f"{_render_env(eq.context, env)}: "
                    f"{eq.lhs} = {lhs} but {eq.rhs} = {rhs}"
                )
                break
        results.append(EquationResult(eq.label, checked, witness))
    return ModelReport(tuple(problems), tuple(results))


def _render_env(bindings: tuple[Binding, ...], env: dict[str, str]) -> str:
    return ", ".join(f"{v} = {env[v]}" for v, _ in bindings)
