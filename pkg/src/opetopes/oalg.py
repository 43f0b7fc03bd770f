"""Opetopic algebras over a window of dimensions.

A sorted family is a finite opetopic set over the window [n-k, n].  Free
pasting cells over such a family, the unit and multiplication of the free
pasting monad, algebra structures given by finite composition tables, the
ordinal realization for (k, n) = (1, 1) together with diagrammatic
presentations of monotone maps, and nerves of finite categories all live
here.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .opetope import (
    Addr,
    Degenerate,
    Gen,
    Opetope,
    POINT,
    ARROW,
    STAR,
    T_GEN,
    Tree,
    _substitute_reloc,
    corolla,
    epsilon,
    enumerate_opetopes,
    faces,
    leaf_addrs,
    node_addrs,
    opetopic_integer,
    readdress,
    render,
    render_word,
    size,
    source,
    substitute,
    target,
    tree,
)
from .opset import (
    CellId,
    FinOpSet,
    Inclusion,
    OpSetMap,
    Window,
    WindowMismatch,
    boundary,
    empty_opset,
    maps,
    orthogonal_witness,
    spine,
    stored_gens,
)


class ShapeMismatch(ValueError):
    pass


class NotComposable(ValueError):
    pass


class NotACategory(ValueError):
    pass


class InfiniteNerve(ValueError):
    pass


# ---------------------------------------------------------------------------
# Sorted families and pasting cells


@dataclass(frozen=True, eq=False)
class SortedFamily:
    """A finite opetopic set over the window [n-k, n].

    k > n is clamped to k = n, so the window never dips below dimension 0.
    """

    family: FinOpSet
    k: int
    n: int

    def __post_init__(self) -> None:
        if self.n < 0 or self.k < 0:
            raise ValueError("parameters must be non-negative")
        if self.k > self.n:
            object.__setattr__(self, "k", self.n)
        want = (self.n - self.k, self.n)
        if self.family.window != want:
            raise WindowMismatch(
                f"family window {self.family.window} is not {want}"
            )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SortedFamily):
            return NotImplemented
        return (self.k, self.n) == (other.k, other.n) and self.family == other.family


@dataclass(frozen=True, eq=False)
class PastingCell:
    """A pasting shape together with a filling of its spine.

    The shape is an (n+1)-opetope nu; the filling maps the spine of nu,
    truncated to the family's window, into the family.  Its output sort is
    target(nu).
    """

    shape: Opetope
    filling: OpSetMap

    @property
    def output(self) -> Opetope:
        return target(self.shape)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PastingCell):
            return NotImplemented
        return self.shape == other.shape and self.filling == other.filling

    def __str__(self) -> str:
        return f"pasting of shape {render(self.shape)}"


def pasting_key(cell: PastingCell):
    """Hashable canonical form, used to index composition tables."""
    return cell.shape, tuple(sorted(cell.filling.comp.items()))


_SPINES: dict[tuple[Opetope, Window], Inclusion] = {}


def _spine_of(nu: Opetope, window: Window) -> FinOpSet:
    key = (nu, window)
    if key not in _SPINES:
        _SPINES[key] = spine(nu, window)
    return _SPINES[key].src


def _natural_fill(
    S: FinOpSet, X: FinOpSet, seeds: dict[CellId, CellId], what: str
) -> dict[CellId, CellId]:
    """Extend a partial assignment S -> X along faces.

    Every cell of S must end up covered, and no cell may receive two
    different values; either failure means the seeds do not present a
    natural map.
    """
    comp: dict[CellId, CellId] = {}
    stack = list(seeds.items())
    while stack:
        c, v = stack.pop()
        if S.shape_of(c) != X.shape_of(v):
            raise ShapeMismatch(
                f"{what}: cell {c} has shape {S.shape_of(c)} "
                f"but value {v} has shape {X.shape_of(v)}"
            )
        if c in comp:
            if comp[c] != v:
                raise ShapeMismatch(
                    f"{what}: conflicting values {comp[c]} and {v} at cell {c}"
                )
            continue
        comp[c] = v
        for g in stored_gens(S, S.shape_of(c)):
            stack.append((S.face(c, g), X.face(v, g)))
    if len(comp) != S.size():
        raise ShapeMismatch(
            f"{what}: seeds determine {len(comp)} of {S.size()} cells"
        )
    return comp


def _node_cell(a: Addr) -> CellId:
    return f"s{a}"


def _edge_cell(t: Opetope, e: Addr) -> CellId:
    """Name of the spine cell sitting on edge e of the tree t."""
    fs = faces(t)
    if len(e.entries) == 0:
        word: tuple[Gen, ...] = (T_GEN, T_GEN)
    else:
        word = (("s", e.parent()), ("s", e.last()))
    return render_word(fs.word_of(fs.cell_of_word(word)))


def _shell_cell(S: FinOpSet, shell: Opetope) -> CellId:
    """The unique shell-shaped cell in the spine of a degenerate shape."""
    cells = S.of_shape(shell)
    if len(cells) != 1:
        raise ShapeMismatch(f"expected one {shell}-shaped cell, found {len(cells)}")
    return cells[0]


# ---------------------------------------------------------------------------
# Free cells and the monad structure


def free_cells(X: SortedFamily, omega: Opetope, max_nodes: int) -> list[PastingCell]:
    """All pastings over X with output sort omega and at most max_nodes nodes."""
    if omega.dim != X.n:
        raise ShapeMismatch(f"output sort must have dimension {X.n}")
    out: list[PastingCell] = []
    for nu in enumerate_opetopes(X.n + 1, max_nodes):
        if target(nu) != omega:
            continue
        S = _spine_of(nu, X.family.window)
        for f in maps(S, X.family):
            out.append(PastingCell(nu, f))
    return out


def monad_unit(X: SortedFamily, x: CellId) -> PastingCell:
    """The trivial pasting of a single cell: a corolla filled with x."""
    omega = X.family.shape_of(x)
    if omega.dim != X.n:
        raise ShapeMismatch(f"unit takes a cell of dimension {X.n}")
    nu = corolla(omega)
    S = _spine_of(nu, X.family.window)
    root = node_addrs(nu)[0]
    comp = _natural_fill(S, X.family, {_node_cell(root): x}, "unit")
    return PastingCell(nu, OpSetMap(S, X.family, comp))


def _paste(alpha: Tree, parts: dict[Addr, Opetope]):
    """Substitute parts[p] into alpha at every node p.

    Returns the resulting tree, the placement map sending each node of the
    result to the (p, node-of-parts[p]) pair it came from, and, for each
    degenerate part, the edge of the result its collapse landed on.
    """
    current: Opetope = alpha
    pos = {p: p for p in node_addrs(alpha)}
    placed: dict[Addr, tuple[Addr, Addr]] = {}
    deg_edge: dict[Addr, Addr] = {}
    for p in sorted(node_addrs(alpha), key=lambda a: a.key, reverse=True):
        q = pos.pop(p)
        u = parts[p]
        nxt, reloc = _substitute_reloc(current, q, u)

        def move(e: Addr) -> Addr:
            if len(e.entries) == 0:
                return e
            par, last = e.parent(), e.last()
            if par == q:
                if isinstance(u, Degenerate):
                    return q
                inv = {v: l for l, v in readdress(u).items()}
                return q + inv[last]
            return reloc[par].extend(last)

        placed = {reloc[a]: v for a, v in placed.items()}
        deg_edge = {k: move(e) for k, e in deg_edge.items()}
        pos = {k: reloc[a] for k, a in pos.items()}
        if isinstance(u, Degenerate):
            deg_edge[p] = q
        else:
            for l in node_addrs(u):
                placed[q + l] = (p, l)
        current = nxt
    return current, placed, deg_edge


def _height_two_parts(xi: Opetope) -> tuple[Opetope, dict[Addr, Opetope]]:
    """Split a uniform-height-2 shape into its root decoration and the
    decorations sitting immediately above it."""
    if isinstance(xi, Degenerate):
        raise ShapeMismatch("a degenerate shape is not a height-2 pasting")
    if not isinstance(xi, Tree):
        raise ShapeMismatch(f"{render(xi)} has no height-2 structure")
    root = epsilon(xi.dim - 1)
    alpha = xi.decoration(root)
    parts: dict[Addr, Opetope] = {}
    expected = {root.extend(p) for p in node_addrs(alpha)}
    actual = set(xi.node_map())
    actual.discard(root)
    if actual != expected:
        raise ShapeMismatch(f"{render(xi)} is not of uniform height 2")
    for p in node_addrs(alpha):
        parts[p] = xi.decoration(root.extend(p))
    return alpha, parts


def monad_mult(
    X: SortedFamily,
    xi: Opetope,
    inner: dict[Addr, PastingCell],
    shell: CellId | None = None,
) -> PastingCell:
    """Flatten a pasting of pastings into a single pasting.

    xi must be of uniform height 2: a root decorated by the outer shape
    alpha, with exactly one node above it per node of alpha, decorated by
    the inner shapes.  inner supplies the pasting cell for each node of
    alpha.  When alpha is degenerate there are no inner cells; shell then
    names the single colour of the result.  The assembled filling places
    the cell of inner[p] at the nodes of the flattened tree coming from p,
    and the common boundary values must agree.
    """
    if xi.dim != X.n + 2:
        raise ShapeMismatch(f"multiplication takes a shape of dimension {X.n + 2}")
    if isinstance(xi, Tree) and isinstance(xi.decoration(epsilon(xi.dim - 1)), Degenerate):
        if len(xi.node_map()) != 1:
            raise ShapeMismatch(f"{render(xi)} is not of uniform height 2")
        alpha = xi.decoration(epsilon(xi.dim - 1))
        if inner:
            raise ShapeMismatch("a degenerate outer shape admits no inner cells")
        if shell is None:
            raise ShapeMismatch("a degenerate outer shape needs its colour")
        S = _spine_of(alpha, X.family.window)
        comp = _natural_fill(
            S, X.family, {_shell_cell(S, alpha.shell): shell}, "multiplication"
        )
        return PastingCell(alpha, OpSetMap(S, X.family, comp))

    alpha, parts = _height_two_parts(xi)
    if set(inner) != set(parts):
        raise ShapeMismatch("inner cells must be indexed by the outer nodes")
    for p, cell in inner.items():
        if cell.shape != parts[p]:
            raise ShapeMismatch(
                f"inner cell at {p} has shape {render(cell.shape)}, "
                f"expected {render(parts[p])}"
            )
        if cell.filling.dst != X.family:
            raise ShapeMismatch("inner cells must be pastings over the same family")

    result, placed, deg_edge = _paste(alpha, parts)
    S = _spine_of(result, X.family.window)
    lo = X.family.window[0]
    seeds: dict[CellId, CellId] = {}

    def seed(c: CellId, v: CellId) -> None:
        if c in seeds and seeds[c] != v:
            raise ShapeMismatch(
                f"multiplication: conflicting values {seeds[c]} and {v} at {c}"
            )
        seeds[c] = v

    for a, (p, l) in placed.items():
        seed(_node_cell(a), inner[p].filling(_node_cell(l)))
    for p, e in deg_edge.items():
        cell = inner[p]
        shell_shape = cell.shape.shell  # type: ignore[union-attr]
        if shell_shape.dim < lo:
            continue
        v = cell.filling(_shell_cell(cell.filling.src, shell_shape))
        if isinstance(result, Degenerate):
            seed(_shell_cell(S, result.shell), v)
        else:
            seed(_edge_cell(result, e), v)
    if isinstance(result, Degenerate) and not seeds:
        raise ShapeMismatch("multiplication: no data determines the result colour")
    comp = _natural_fill(S, X.family, seeds, "multiplication")
    return PastingCell(result, OpSetMap(S, X.family, comp))


def split_pasting(X: SortedFamily, xi: Opetope, cell: PastingCell) -> dict[Addr, PastingCell]:
    """Invert monad_mult: slice a filling of the flattened tree back into
    one pasting cell per outer node of the uniform-height-2 shape xi."""
    alpha, parts = _height_two_parts(xi)
    result, placed, deg_edge = _paste(alpha, parts)
    if cell.shape != result:
        raise ShapeMismatch(
            f"filling has shape {render(cell.shape)}, expected {render(result)}"
        )
    lo = X.family.window[0]
    out: dict[Addr, PastingCell] = {}
    for p in node_addrs(alpha):
        nu = parts[p]
        S = _spine_of(nu, X.family.window)
        seeds: dict[CellId, CellId] = {}
        if isinstance(nu, Degenerate):
            if nu.shell.dim >= lo:
                e = deg_edge[p]
                if isinstance(result, Degenerate):
                    v = cell.filling(_shell_cell(cell.filling.src, result.shell))
                else:
                    v = cell.filling(_edge_cell(result, e))
                seeds[_shell_cell(S, nu.shell)] = v
        else:
            for a, (p2, l) in placed.items():
                if p2 == p:
                    seeds[_node_cell(l)] = cell.filling(_node_cell(a))
        comp = _natural_fill(S, X.family, seeds, f"slice at {p}")
        out[p] = PastingCell(nu, OpSetMap(S, X.family, comp))
    return out


def pasting_face(X: SortedFamily, cell: PastingCell, gen: Gen) -> CellId:
    """The boundary value of a pasting cell along a generating face of its
    output sort."""
    nu = cell.shape
    S = cell.filling.src
    if isinstance(nu, Degenerate):
        return cell.filling(_shell_cell(S, nu.shell))
    if gen == T_GEN:
        e = epsilon(nu.dim - 1)
    else:
        inv = {v: l for l, v in readdress(nu).items()}
        e = inv[gen[1]]
    return cell.filling(_edge_cell(nu, e))


# ---------------------------------------------------------------------------
# Algebras as finite composition tables


@dataclass
class OAlgebra:
    """A sorted family with a materialized composition table.

    The table is indexed by the canonical form of each pasting cell and
    must cover every pasting up to the node bound it was built with.
    """

    base: SortedFamily
    table: dict[tuple, CellId] = field(default_factory=dict)
    max_nodes: int = 0

    def compose(self, cell: PastingCell) -> CellId:
        key = pasting_key(cell)
        if key not in self.table:
            raise ShapeMismatch(
                f"composition table has no entry for {cell} "
                f"(built up to {self.max_nodes} nodes)"
            )
        return self.table[key]


def build_algebra(X: SortedFamily, rule, max_nodes: int) -> OAlgebra:
    """Materialize an algebra structure by tabulating rule over every
    pasting with at most max_nodes nodes."""
    table: dict[tuple, CellId] = {}
    for omega in enumerate_opetopes(X.n, max_nodes):
        for cell in free_cells(X, omega, max_nodes):
            table[pasting_key(cell)] = rule(cell)
    return OAlgebra(X, table, max_nodes)


@dataclass(frozen=True)
class AlgebraLawReport:
    units_checked: int
    squares_checked: int
    failures: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.failures


def _height_two_shapes(n: int, max_nodes: int) -> list[Opetope]:
    """All uniform-height-2 shapes of dimension n+2 within the node bound."""
    out: list[Opetope] = []
    root = epsilon(n + 1)
    for alpha in enumerate_opetopes(n + 1, max_nodes):
        if isinstance(alpha, Degenerate):
            continue
        budget = max_nodes - 1 - size(alpha)
        ps = node_addrs(alpha)
        if budget < len(ps):
            continue
        pools = []
        for p in ps:
            tgt = source(alpha, p)
            pool = [
                beta
                for beta in enumerate_opetopes(n + 1, budget)
                if target(beta) == tgt
            ]
            pools.append(pool)
        for combo in itertools.product(*pools):
            if sum(1 + size(b) for b in combo) > budget:
                continue
            nodes = {root: alpha}
            for p, beta in zip(ps, combo):
                nodes[root.extend(p)] = beta
            out.append(tree(nodes))
    return out


def check_algebra_laws(A: OAlgebra, max_nodes: int) -> AlgebraLawReport:
    """Check the unit law on every cell and the multiplication square on
    every uniform-height-2 pasting of pastings within the node bound."""
    X = A.base
    failures: list[str] = []
    units = 0
    for omega in X.family.shapes():
        if omega.dim != X.n:
            continue
        for x in X.family.of_shape(omega):
            units += 1
            got = A.compose(monad_unit(X, x))
            if got != x:
                failures.append(f"unit: compose(unit({x})) = {got}")

    squares = 0
    for xi in _height_two_shapes(X.n, max_nodes):
        flat = target(xi)
        if size(flat) > A.max_nodes:
            continue
        S = _spine_of(flat, X.family.window)
        alpha, parts = _height_two_parts(xi)
        for f in maps(S, X.family):
            squares += 1
            whole = PastingCell(flat, f)
            lhs = A.compose(whole)
            inner = split_pasting(X, xi, whole)
            label = f"square at {render(xi)} with {sorted(f.comp.items())}"
            try:
                seeds = {
                    _node_cell(p): A.compose(cell) for p, cell in inner.items()
                }
                SA = _spine_of(alpha, X.family.window)
                comp = _natural_fill(SA, X.family, seeds, "outer pasting")
            except ShapeMismatch as err:
                failures.append(f"{label}: {err}")
                continue
            rhs = A.compose(PastingCell(alpha, OpSetMap(SA, X.family, comp)))
            if lhs != rhs:
                failures.append(f"{label}: flattened {lhs} != staged {rhs}")
    return AlgebraLawReport(units, squares, tuple(failures))


# ---------------------------------------------------------------------------
# Finite categories


@dataclass(frozen=True)
class FiniteCategory:
    """Objects, morphisms with endpoints, designated identities, and a
    total composition table (identity composites may be left implicit)."""

    objects: tuple[str, ...]
    morphisms: dict[str, tuple[str, str]]
    composition: dict[tuple[str, str], str]
    identities: dict[str, str]

    def src(self, f: str) -> str:
        return self.morphisms[f][0]

    def tgt(self, f: str) -> str:
        return self.morphisms[f][1]

    def compose(self, g: str, f: str) -> str:
        """g after f."""
        if (g, f) in self.composition:
            return self.composition[(g, f)]
        if f == self.identities.get(self.src(f)):
            return g
        if g == self.identities.get(self.tgt(f)):
            return f
        raise NotACategory(f"no composite for {g}.{f}")

    def chain_composite(self, start: str, ms: tuple[str, ...]) -> str:
        if not ms:
            return self.identities[start]
        c = ms[0]
        for e in ms[1:]:
            c = self.compose(e, c)
        return c


def ensure_category(C: FiniteCategory) -> None:
    """Raise NotACategory unless the tables satisfy the category axioms."""
    for f, (a, b) in C.morphisms.items():
        if a not in C.objects or b not in C.objects:
            raise NotACategory(f"morphism {f} has unknown endpoints")
    for a in C.objects:
        i = C.identities.get(a)
        if i is None:
            raise NotACategory(f"object {a} has no identity")
        if C.morphisms.get(i) != (a, a):
            raise NotACategory(f"identity {i} of {a} is not an endomorphism of {a}")
    for (g, f), h in C.composition.items():
        if C.tgt(f) != C.src(g):
            raise NotACategory(f"composite {g}.{f} declared but not composable")
        if C.morphisms.get(h) is None:
            raise NotACategory(f"composite {g}.{f} = {h} is not a morphism")
        if (C.src(h), C.tgt(h)) != (C.src(f), C.tgt(g)):
            raise NotACategory(f"composite {g}.{f} = {h} has wrong endpoints")
    for f in C.morphisms:
        for g in C.morphisms:
            if C.tgt(f) != C.src(g):
                continue
            try:
                C.compose(g, f)
            except NotACategory as err:
                raise NotACategory(str(err)) from None
    for f in C.morphisms:
        a, b = C.morphisms[f]
        if C.compose(f, C.identities[a]) != f:
            raise NotACategory(f"right identity fails at {f}")
        if C.compose(C.identities[b], f) != f:
            raise NotACategory(f"left identity fails at {f}")
    for f in C.morphisms:
        for g in C.morphisms:
            if C.tgt(f) != C.src(g):
                continue
            for h in C.morphisms:
                if C.tgt(g) != C.src(h):
                    continue
                if C.compose(h, C.compose(g, f)) != C.compose(C.compose(h, g), f):
                    raise NotACategory(
                        f"associativity fails at {h}.{g}.{f}"
                    )


def parse_category(text: str) -> FiniteCategory:
    """Read a finite category from lines of the form

        obj a b c
        mor f: a -> b
        id a = ida
        comp g.f = h
    """
    objects: list[str] = []
    morphisms: dict[str, tuple[str, str]] = {}
    composition: dict[tuple[str, str], str] = {}
    identities: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "obj":
                objects.extend(parts[1:])
            elif parts[0] == "mor":
                body = line[len("mor") :].strip()
                name, arrow = body.split(":", 1)
                a, b = arrow.split("->")
                morphisms[name.strip()] = (a.strip(), b.strip())
            elif parts[0] == "id":
                body = line[len("id") :].strip()
                a, i = body.split("=")
                identities[a.strip()] = i.strip()
            elif parts[0] == "comp":
                body = line[len("comp") :].strip()
                pair, h = body.split("=")
                g, f = pair.split(".")
                composition[(g.strip(), f.strip())] = h.strip()
            else:
                raise ValueError(f"unknown directive {parts[0]!r}")
        except ValueError as err:
            raise NotACategory(f"line {lineno}: {err}") from None
    C = FiniteCategory(tuple(objects), morphisms, composition, identities)
    ensure_category(C)
    return C


def category_family(C: FiniteCategory) -> SortedFamily:
    """The underlying graph of a category as a sorted family for k = n = 1."""
    cells = {POINT: tuple(f"o.{a}" for a in C.objects)}
    if C.morphisms:
        cells[ARROW] = tuple(f"a.{f}" for f in sorted(C.morphisms))
    fac = {}
    for f, (a, b) in C.morphisms.items():
        fac[(f"a.{f}", ("s", STAR))] = f"o.{a}"
        fac[(f"a.{f}", T_GEN)] = f"o.{b}"
    return SortedFamily(FinOpSet((0, 1), cells, fac), 1, 1)


def pasting_chain(cell: PastingCell) -> tuple[str, tuple[str, ...]]:
    """Read off the path a pasting over a graph traces out, as the start
    vertex followed by the edges in diagram order."""
    nu = cell.shape
    if isinstance(nu, Degenerate):
        return cell.filling(_shell_cell(cell.filling.src, POINT)), ()
    m = len(node_addrs(nu))
    edges = tuple(
        cell.filling(_node_cell(Addr(1, (STAR,) * (m - 1 - i)))) for i in range(m)
    )
    start = cell.filling(_edge_cell(nu, Addr(1, (STAR,) * m)))
    return start, edges


def category_algebra(C: FiniteCategory, max_nodes: int) -> OAlgebra:
    """The category as an algebra: pastings compose along its table."""
    ensure_category(C)
    X = category_family(C)

    def rule(cell: PastingCell) -> CellId:
        start, edges = pasting_chain(cell)
        names = tuple(e[2:] for e in edges)
        if not names:
            return f"a.{C.identities[start[2:]]}"
        return f"a.{C.chain_composite(C.src(names[0]), names)}"

    return build_algebra(X, rule, max_nodes)


# ---------------------------------------------------------------------------
# The ordinal realization for (k, n) = (1, 1)


@dataclass(frozen=True)
class LambdaMorphism:
    """A monotone map between finite ordinals; [m] has points 0..m."""

    src: int
    dst: int
    values: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.values) != self.src + 1:
            raise ValueError("wrong number of values")
        for v in self.values:
            if not 0 <= v <= self.dst:
                raise ValueError(f"value {v} outside [0, {self.dst}]")
        if any(a > b for a, b in zip(self.values, self.values[1:])):
            raise ValueError(f"values {self.values} are not monotone")

    def __call__(self, i: int) -> int:
        return self.values[i]

    def after(self, other: "LambdaMorphism") -> "LambdaMorphism":
        if other.dst != self.src:
            raise NotComposable(
                f"cannot compose [{other.src}]->[{other.dst}] "
                f"with [{self.src}]->[{self.dst}]"
            )
        return LambdaMorphism(
            other.src, self.dst, tuple(self.values[v] for v in other.values)
        )

    def __str__(self) -> str:
        return f"[{self.src}]->[{self.dst}] {self.values}"


def lambda_identity(m: int) -> LambdaMorphism:
    return LambdaMorphism(m, m, tuple(range(m + 1)))


def monotone_maps(m: int, mp: int) -> list[LambdaMorphism]:
    """Direct enumeration of all monotone maps [m] -> [mp]."""
    return [
        LambdaMorphism(m, mp, vals)
        for vals in itertools.combinations_with_replacement(range(mp + 1), m + 1)
    ]


def h_object(omega: Opetope) -> int:
    """The ordinal realized by a shape of dimension at most 3: the number
    of composable arrows it presents."""
    d = omega.dim
    if d == 0:
        return 0
    if d == 1:
        return 1
    if d == 2:
        return len(node_addrs(omega))
    if d == 3:
        return len(node_addrs(target(omega)))
    raise ValueError(f"no ordinal realization in dimension {d}")


def h_morphism(omega: Opetope, gen: Gen) -> LambdaMorphism:
    """The monotone map realizing a generating face of a shape of
    dimension at most 3."""
    d = omega.dim
    m = h_object(omega)
    if d == 1:
        if gen == T_GEN:
            return LambdaMorphism(0, 1, (1,))
        return LambdaMorphism(0, 1, (0,))
    if d == 2:
        if gen == T_GEN:
            return LambdaMorphism(1, m, (0, m))
        i = len(gen[1].entries)
        return LambdaMorphism(1, m, (m - 1 - i, m - i))
    if d == 3:
        if gen == T_GEN:
            return lambda_identity(m)
        return _h_source_map(omega, gen[1])
    raise ValueError(f"no realization for faces in dimension {d}")


def _h_source_map(omega: Opetope, p: Addr) -> LambdaMorphism:
    """Realize a source face of a 3-shape.

    Each arrow of the face corresponds to a subtree hanging off the node
    at p; the leaves of that subtree name, through the readdressing, the
    block of target arrows the subtree composes to.  The blocks tile a
    monotone map.  An input whose subtree has no leaves collapses, and a
    face none of whose inputs reaches a leaf lands entirely on the vertex
    its own edge occupies in the parent face.
    """
    nu = source(omega, p)
    m = h_object(omega)
    P = readdress(omega)
    r = len(node_addrs(nu))
    blocks: list[tuple[int, int] | None] = []
    for j in range(r):
        child = p.extend(Addr(1, (STAR,) * j))
        if isinstance(omega, Tree) and omega.has_node(child):
            hits = [P[l] for l in leaf_addrs(omega) if child.prefix_of(l)]
        else:
            hits = [P[child]]
        if not hits:
            blocks.append(None)
            continue
        ws = sorted(len(a.entries) for a in hits)
        lo, hi = m - 1 - ws[-1], m - ws[0]
        if ws != list(range(ws[0], ws[-1] + 1)):
            raise ShapeMismatch(f"face at {p} covers a non-contiguous block")
        blocks.append((lo, hi))
    vals: list[int | None] = [None] * (r + 1)
    cur: int | None = None
    first_hi: int | None = None
    for j in range(r):
        b = blocks[j]
        if b is None:
            vals[r - 1 - j] = cur
            continue
        lo, hi = b
        if cur is None:
            first_hi = hi
        elif hi != cur:
            raise ShapeMismatch(f"face at {p} has a gap between blocks")
        vals[r - j] = hi
        vals[r - 1 - j] = lo
        cur = lo
    if first_hi is None:
        if m == 0:
            vals = [0] * (r + 1)
        else:
            par = h_morphism(omega, ("s", p.parent()))
            rp = len(node_addrs(source(omega, p.parent())))
            i = rp - 1 - len(p.last().entries)
            vals = [par(i)] * (r + 1)
    else:
        vals = [first_hi if v is None else v for v in vals]
    return LambdaMorphism(r, m, tuple(vals))  # type: ignore[arg-type]


# ---------------------------------------------------------------------------
# Diagrammatic morphisms


@dataclass(frozen=True)
class Diagram:
    """A monotone map presented inside a single 3-shape: the marked source
    face maps to the target face."""

    shape: Opetope
    node: Addr

    def __post_init__(self) -> None:
        if self.shape.dim != 3:
            raise ValueError("diagrams live in dimension 3")
        if not (isinstance(self.shape, Tree) and self.shape.has_node(self.node)):
            raise ValueError(f"{self.node} is not a node of the shape")

    @property
    def source_shape(self) -> Opetope:
        return source(self.shape, self.node)

    @property
    def target_shape(self) -> Opetope:
        return target(self.shape)


def diagram_map(d: Diagram) -> LambdaMorphism:
    return h_morphism(d.shape, ("s", d.node))


def diagram_compose(d1: Diagram, d2: Diagram) -> Diagram:
    """Substitute d1's shape into the marked node of d2's; realizes the
    composite of the two monotone maps."""
    if target(d1.shape) != source(d2.shape, d2.node):
        raise NotComposable(
            f"target of the first diagram is {render(target(d1.shape))}, "
            f"the second expects {render(source(d2.shape, d2.node))}"
        )
    composite = substitute(d2.shape, d2.node, d1.shape)
    return Diagram(composite, d2.node + d1.node)


def diagram_for_monotone(f: LambdaMorphism) -> Diagram:
    """Present a monotone map [m] -> [mp], m >= 1, as a diagram.

    The root is a chain long enough to leave f(0) arrows below and
    mp - f(m) arrows above the image; the marked node carries the source
    chain, and each source arrow's image block is filled in by a chain of
    its own length.
    """
    m, mp = f.src, f.dst
    if m < 1:
        raise ValueError("only maps from [m] with m >= 1 are diagrams")
    r = f(0) + 1 + mp - f(m)
    q = Addr(1, (STAR,) * (r - 1 - f(0)))
    nodes: dict[Addr, Opetope] = {
        epsilon(2): opetopic_integer(r),
        Addr(2, (q,)): opetopic_integer(m),
    }
    for i in range(m):
        li = Addr(1, (STAR,) * (m - 1 - i))
        nodes[Addr(2, (q, li))] = opetopic_integer(f(i + 1) - f(i))
    return Diagram(tree(nodes), Addr(2, (q,)))


# ---------------------------------------------------------------------------
# Nerves of finite categories


def _chain_id(shape_tag: str, start: str, ms: tuple[str, ...]) -> CellId:
    body = ".".join((start,) + ms)
    return f"{shape_tag}.{body}"


def _chains(C: FiniteCategory, m: int) -> list[tuple[str, tuple[str, ...]]]:
    outgoing: dict[str, list[str]] = {a: [] for a in C.objects}
    for f in sorted(C.morphisms):
        outgoing[C.src(f)].append(f)
    chains: list[tuple[str, tuple[str, ...]]] = [
        (a, ()) for a in C.objects
    ]
    for _ in range(m):
        nxt = []
        for start, ms in chains:
            tip = C.tgt(ms[-1]) if ms else start
            for f in outgoing[tip]:
                nxt.append((start, ms + (f,)))
        chains = nxt
    return chains


def _chain_restrict(
    C: FiniteCategory, start: str, ms: tuple[str, ...], phi: LambdaMorphism
) -> tuple[str, tuple[str, ...]]:
    objs = [start]
    for e in ms:
        objs.append(C.tgt(e))
    out = []
    for j in range(phi.src):
        a, b = phi(j), phi(j + 1)
        out.append(C.chain_composite(objs[a], ms[a:b]))
    return objs[phi(0)], tuple(out)


def nerve_category(C: FiniteCategory, max_shape_nodes: int | None = None) -> FinOpSet:
    """The opetopic nerve of a finite category over the window [0, 3].

    Point cells are objects, arrow cells morphisms, 2-cells composable
    chains, and each 3-shape is filled uniquely by the chain its target
    presents.  Every nonempty category has chains of every length, so a
    shape bound is required; omitting it raises InfiniteNerve.
    """
    ensure_category(C)
    if max_shape_nodes is None:
        if C.objects:
            raise InfiniteNerve(
                "a nonempty category has cells at arbitrarily large shapes; "
                "pass a shape bound"
            )
        return empty_opset((0, 3))
    cells: dict[Opetope, tuple[CellId, ...]] = {
        POINT: tuple(f"o.{a}" for a in C.objects)
    }
    fac: dict[tuple[CellId, Gen], CellId] = {}
    if C.morphisms:
        cells[ARROW] = tuple(f"a.{f}" for f in sorted(C.morphisms))
        for f, (a, b) in C.morphisms.items():
            fac[(f"a.{f}", ("s", STAR))] = f"o.{a}"
            fac[(f"a.{f}", T_GEN)] = f"o.{b}"
    for m in range(max_shape_nodes + 1):
        shape = opetopic_integer(m)
        ids = []
        for start, ms in _chains(C, m):
            cid = _chain_id("c", start, ms)
            ids.append(cid)
            for i in range(m):
                fac[(cid, ("s", Addr(1, (STAR,) * i)))] = f"a.{ms[m - 1 - i]}"
            fac[(cid, T_GEN)] = f"a.{C.chain_composite(start, ms)}"
        if ids:
            cells[shape] = tuple(ids)
    for xi in enumerate_opetopes(3, max_shape_nodes):
        m = h_object(xi)
        if m > max_shape_nodes:
            continue
        tag = "x" + render(xi).replace(" ", "")
        ids = []
        for start, ms in _chains(C, m):
            cid = _chain_id(tag, start, ms)
            ids.append(cid)
            for p in node_addrs(xi):
                phi = h_morphism(xi, ("s", p))
                s2, ms2 = _chain_restrict(C, start, ms, phi)
                fac[(cid, ("s", p))] = _chain_id("c", s2, ms2)
            fac[(cid, T_GEN)] = _chain_id("c", start, ms)
        if ids:
            cells[xi] = tuple(ids)
    return FinOpSet((0, 3), cells, fac)


@dataclass(frozen=True)
class NerveReport:
    segal2: bool
    segal3: bool
    boundary3: bool
    failures: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return self.segal2 and self.segal3 and self.boundary3


def nerve_axioms_check(N: FinOpSet, max_nodes: int = 4) -> NerveReport:
    """Check unique spine extension in dimensions 2 and 3 and unique
    boundary extension in dimension 3, over shapes within the node bound."""
    if N.window != (0, 3):
        raise WindowMismatch(f"nerve checks need window (0, 3), got {N.window}")
    failures: list[str] = []

    def run(kind: str, incls) -> bool:
        good = True
        for label, incl in incls:
            w = orthogonal_witness(incl, N)
            if w is not None:
                f, count = w
                good = False
                failures.append(
                    f"{kind} fails at {label}: a map extends {count} times"
                )
        return good

    twos = [
        (render(opetopic_integer(m)), spine(opetopic_integer(m), (0, 3)))
        for m in range(max_nodes + 1)
    ]
    threes = list(enumerate_opetopes(3, max_nodes))
    s3 = [(render(xi), spine(xi, (0, 3))) for xi in threes]
    b3 = [(render(xi), boundary(xi, (0, 3))) for xi in threes]
    return NerveReport(
        run("spine extension in dimension 2", twos),
        run("spine extension in dimension 3", s3),
        run("boundary extension in dimension 3", b3),
        tuple(failures),
    )
