"""Command line front end.

Four groups of subcommands mirror the library layers: `opetope` for
single shapes, `opset` for finite opetopic sets, `oalg` for algebras and
nerves of finite categories, and `theory` for dependently sorted
theories and their finite models.

Exit codes: 0 on success, 1 when a requested check fails, 2 on usage or
parse errors.  Output formats: `text` (default), `json` (canonical,
sorted keys), and `dot` for single shapes.  The --seed flag is reserved
for future randomized modes and is accepted but ignored.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import oalg, opetope, opset, theory


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as handle:
        return handle.read()


def _emit_json(payload) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _window(text: str) -> tuple[int, int]:
    try:
        lo, hi = text.split(":")
        return (int(lo), int(hi))
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"expected m:n, got {text!r}") from err


def _one_expr(args) -> str:
    exprs = args.expr or []
    if isinstance(exprs, str):
        exprs = [exprs]
    if args.file:
        exprs = exprs + [_read(args.file)]
    if len(exprs) != 1:
        raise ValueError("give exactly one shape via --expr or --file")
    return exprs[0]


def _dot(omega: opetope.Opetope) -> str:
    lines = ["digraph opetope {"]
    lines.append(f'  label="{opetope.render(omega)}";')
    nodes = getattr(omega, "nodes", ())
    for addr, deco in sorted(nodes, key=lambda kv: str(kv[0])):
        lines.append(f'  "{addr}" [label="{opetope.render(deco)}"];')
    for addr, _ in sorted(nodes, key=lambda kv: str(kv[0])):
        if addr.entries:
            parent = opetope.Addr(addr.depth, addr.entries[:-1])
            lines.append(f'  "{parent}" -> "{addr}" [label="{addr.entries[-1]}"];')
    lines.append("}")
    return "\n".join(lines)


# --- opetope ------------------------------------------------------------------


def cmd_opetope_validate(args) -> int:
    omega = opetope.parse(_one_expr(args))
    problems = opetope.validate(omega)
    if args.format == "json":
        _emit_json(
            {
                "expr": opetope.render(omega),
                "dim": omega.dim,
                "size": opetope.size(omega),
                "ok": not problems,
                "problems": list(problems),
            }
        )
    elif args.format == "dot":
        print(_dot(omega))
    else:
        print(f"shape: {opetope.render(omega)}")
        print(f"dim: {omega.dim}")
        print(f"size: {opetope.size(omega)}")
        for p in problems:
            print(f"problem: {p}")
        print("ok" if not problems else "invalid")
    return 0 if not problems else 1


def cmd_opetope_target(args) -> int:
    omega = opetope.parse(_one_expr(args))
    out = opetope.target(omega)
    if args.format == "json":
        _emit_json({"expr": opetope.render(out), "dim": out.dim})
    elif args.format == "dot":
        print(_dot(out))
    else:
        print(opetope.render(out))
    return 0


def cmd_opetope_source(args) -> int:
    omega = opetope.parse(_one_expr(args))
    items = [
        (str(addr), opetope.render(opetope.source(omega, addr)))
        for addr in opetope.node_addrs(omega)
    ]
    if args.format == "json":
        _emit_json({"sources": dict(items)})
    else:
        for addr, expr in items:
            print(f"{addr} {expr}")
    return 0


def cmd_opetope_faces(args) -> int:
    omega = opetope.parse(_one_expr(args))
    fs = opetope.faces(omega)
    rows = [
        {
            "word": opetope.render_word(fs.word_of(cid)),
            "shape": opetope.render(fs.shape_of(cid)),
        }
        for cid in fs.cells()
    ]
    if args.format == "json":
        _emit_json({"cells": rows, "count": len(rows)})
    else:
        print(f"cells: {len(rows)}")
        for row in rows:
            print(f"{row['word']} : {row['shape']}")
    return 0


def cmd_opetope_enumerate(args) -> int:
    shapes = opetope.enumerate_opetopes(args.dim, args.max_nodes)
    rendered = [opetope.render(o) for o in shapes]
    if args.format == "json":
        _emit_json(
            {"dim": args.dim, "max_nodes": args.max_nodes, "opetopes": rendered}
        )
    else:
        for expr in rendered:
            print(expr)
    return 0


def cmd_opetope_hom(args) -> int:
    exprs = args.expr or []
    if args.file:
        exprs = exprs + [_read(args.file)]
    if len(exprs) != 2:
        raise ValueError("give two shapes: --expr SOURCE --expr TARGET")
    psi, omega = (opetope.parse(e) for e in exprs)
    maps = opetope.hom(psi, omega)
    words = [opetope.render_word(m.word) for m in maps]
    if args.format == "json":
        _emit_json({"count": len(words), "maps": words})
    else:
        print(f"maps: {len(words)}")
        for w in words:
            print(w)
    return 0


def cmd_opetope_identities(args) -> int:
    omega = opetope.parse(_one_expr(args))
    problems = opetope.check_identities(omega)
    fs = opetope.faces(omega)
    squares = opetope.relation_squares(omega)
    if args.format == "json":
        _emit_json(
            {
                "cells": len(fs.cells()),
                "squares": len(squares),
                "ok": not problems,
                "problems": list(problems),
            }
        )
    else:
        print(f"cells: {len(fs.cells())}")
        print(f"squares: {len(squares)}")
        for p in problems:
            print(f"problem: {p}")
        print("ok" if not problems else "invalid")
    return 0 if not problems else 1


# --- opset --------------------------------------------------------------------


def _inclusion_cmd(args, build) -> int:
    omega = opetope.parse(_one_expr(args))
    inc = build(omega, args.window)
    text = opset.dump_opset(inc.src)
    if args.format == "json":
        _emit_json(
            {
                "expr": opetope.render(omega),
                "window": list(inc.src.window),
                "opset": text,
            }
        )
    else:
        print(text, end="")
    return 0


def cmd_opset_spine(args) -> int:
    return _inclusion_cmd(args, opset.spine)


def cmd_opset_boundary(args) -> int:
    return _inclusion_cmd(args, opset.boundary)


def cmd_opset_orthogonal(args) -> int:
    omega = opetope.parse(args.expr)
    X = opset.load_opset(_read(args.file))
    results = {}
    for kind, build in (("spine", opset.spine), ("boundary", opset.boundary)):
        inc = build(omega, X.window)
        witness = opset.orthogonal_witness(inc, X)
        results[kind] = witness
    ok = all(w is None for w in results.values())
    if args.format == "json":
        _emit_json(
            {
                kind: (None if w is None else {"extensions": w[1]})
                for kind, w in results.items()
            }
            | {"ok": ok}
        )
    else:
        for kind, w in results.items():
            if w is None:
                print(f"{kind}: orthogonal")
            else:
                print(f"{kind}: not orthogonal (a map extends {w[1]} times)")
    return 0 if ok else 1


def cmd_opset_hlift(args) -> int:
    X = opset.load_opset(_read(args.file))
    report = opset.hlift_check(X, args.n, args.max_nodes)
    payload = {
        "spines_low": report.spines_low,
        "boundaries_mid": report.boundaries_mid,
        "boundaries_high": report.boundaries_high,
        "spines_high": report.spines_high,
        "ok": not report.failures,
        "failures": list(report.failures),
    }
    if args.format == "json":
        _emit_json(payload)
    else:
        for key in ("spines_low", "boundaries_mid", "boundaries_high", "spines_high"):
            print(f"{key}: {payload[key]}")
        for f in report.failures:
            print(f"failure: {f}")
        print("ok" if not report.failures else "failed")
    return 0 if not report.failures else 1


# --- oalg ---------------------------------------------------------------------


def cmd_oalg_free(args) -> int:
    C = oalg.parse_category(_read(args.file))
    family = oalg.category_family(C)
    shape = opetope.parse(args.expr) if args.expr else opetope.ARROW
    cells = oalg.free_cells(family, shape, args.max_nodes)
    rows = []
    for cell in cells:
        start, edges = oalg.pasting_chain(cell)
        rows.append(
            {
                "shape": opetope.render(cell.shape),
                "start": start,
                "edges": list(edges),
            }
        )
    if args.format == "json":
        _emit_json({"count": len(rows), "cells": rows})
    else:
        print(f"cells: {len(rows)}")
        for row in rows:
            chain = " ".join([row["start"]] + row["edges"])
            print(f"{row['shape']} | {chain}")
    return 0


def cmd_oalg_laws(args) -> int:
    C = oalg.parse_category(_read(args.file))
    algebra = oalg.category_algebra(C, args.max_nodes)
    report = oalg.check_algebra_laws(algebra, args.max_nodes)
    payload = {
        "units_checked": report.units_checked,
        "squares_checked": report.squares_checked,
        "ok": not report.failures,
        "failures": list(report.failures),
    }
    if args.format == "json":
        _emit_json(payload)
    else:
        print(f"units checked: {report.units_checked}")
        print(f"squares checked: {report.squares_checked}")
        for f in report.failures:
            print(f"failure: {f}")
        print("ok" if not report.failures else "failed")
    return 0 if not report.failures else 1


def cmd_oalg_h(args) -> int:
    if args.k != 1 or args.n != 1:
        raise ValueError("only the k = 1, n = 1 realization is implemented")
    omega = opetope.parse(_one_expr(args))
    value = oalg.h_object(omega)
    rows = []
    for gen in opetope.generators(omega):
        m = oalg.h_morphism(omega, gen)
        rows.append(
            {
                "face": opset.render_gen(gen),
                "src": m.src,
                "dst": m.dst,
                "values": list(m.values),
            }
        )
    if args.format == "json":
        _emit_json({"object": value, "faces": rows})
    else:
        print(f"object: {value}")
        for row in rows:
            vals = ", ".join(str(v) for v in row["values"])
            print(f"{row['face']}: ({vals}) : [{row['src']}] -> [{row['dst']}]")
    return 0


def cmd_oalg_nerve(args) -> int:
    C = oalg.parse_category(_read(args.file))
    N = oalg.nerve_category(C, args.max_nodes)
    text = opset.dump_opset(N)
    if args.format == "json":
        _emit_json({"window": list(N.window), "opset": text})
    else:
        print(text, end="")
    return 0


def cmd_oalg_nerve_check(args) -> int:
    C = oalg.parse_category(_read(args.file))
    N = oalg.nerve_category(C, args.max_nodes)
    report = oalg.nerve_axioms_check(N, args.max_nodes)
    payload = {
        "segal2": report.segal2,
        "segal3": report.segal3,
        "boundary3": report.boundary3,
        "ok": report.ok,
        "failures": list(report.failures),
    }
    if args.format == "json":
        _emit_json(payload)
    else:
        for key in ("segal2", "segal3", "boundary3"):
            print(f"{key}: {'yes' if payload[key] else 'no'}")
        for f in report.failures:
            print(f"failure: {f}")
        print("ok" if report.ok else "failed")
    return 0 if report.ok else 1


# --- theory -------------------------------------------------------------------


def cmd_theory_parse(args) -> int:
    sig, ops, eqns = theory.parse_theory(_read(args.file))
    if args.format == "json":
        _emit_json(
            {
                "types": [{"name": d.name, "grade": d.grade} for d in sig.declarations],
                "ops": [
                    {"name": d.name, "grade": d.grade, "output": str(d.output)}
                    for d in ops.declarations
                ],
                "equations": [
                    {"label": e.label, "grade": e.grade} for e in eqns.equations
                ],
            }
        )
    else:
        for d in sig.declarations:
            print(f"type {d} (grade {d.grade})")
        for d in ops.declarations:
            print(f"op {d} (grade {d.grade})")
        for e in eqns.equations:
            print(f"equation {e.label} (grade {e.grade})")
    return 0


def cmd_theory_lfd(args) -> int:
    sig, _, _ = theory.parse_theory(_read(args.file))
    cat = theory.signature_to_lfd(sig)
    report = theory.validate_lfd(cat)
    payload = {
        "objects": {c: report.dims.get(c) for c in cat.objects},
        "morphisms": len(cat.morphisms),
        "ok": report.ok,
        "problems": list(report.problems),
    }
    if args.format == "json":
        _emit_json(payload)
    else:
        for c in cat.objects:
            print(f"object {c} (dim {report.dims.get(c)})")
        print(f"morphisms: {len(cat.morphisms)}")
        print("ok" if report.ok else "invalid")
    return 0 if report.ok else 1


def cmd_theory_roundtrip(args) -> int:
    sig, _, _ = theory.parse_theory(_read(args.file))
    cat = theory.signature_to_lfd(sig)
    back = theory.signature_to_lfd(theory.lfd_to_signature(cat))
    iso = theory.cat_isomorphic(cat, back)
    ok = iso is not None and theory.validate_lfd(back).ok
    if args.format == "json":
        _emit_json({"ok": ok, "objects": len(cat.objects), "morphisms": len(cat.morphisms)})
    else:
        print("PASS" if ok else "FAIL")
    return 0 if ok else 1


def cmd_theory_check_model(args) -> int:
    th = theory.parse_theory(_read(args.theory))
    model = theory.parse_model(_read(args.model))
    report = theory.check_model(th, model)
    if args.format == "json":
        _emit_json(
            {
                "ok": report.ok,
                "problems": list(report.problems),
                "equations": [
                    {"label": e.label, "checked": e.checked, "witness": e.witness}
                    for e in report.equations
                ],
            }
        )
    else:
        for p in report.problems:
            print(f"problem: {p}")
        for e in report.equations:
            if e.witness is None:
                print(f"  {e.label}: holds ({e.checked} environments)")
            else:
                print(f"  {e.label}: fails at {e.witness}")
        print("PASS" if report.ok else "FAIL")
    return 0 if report.ok else 1


def cmd_theory_context(args) -> int:
    sig, _, _ = theory.parse_theory(_read(args.file))
    bindings = theory.parse_context(sig, args.expr or "")
    X = theory.realize_bindings(sig, bindings)
    ctx = theory.presheaf_to_context(X)
    problems = theory.validate_context(ctx)
    iso = theory.psh_isomorphism(X, ctx.realization())
    ok = not problems and iso is not None
    if args.format == "json":
        _emit_json(
            {
                "steps": [
                    {"name": s.name, "obj": s.obj, "attach": dict(s.attach)}
                    for s in ctx.steps
                ],
                "iso": None if iso is None else iso.comp,
                "ok": ok,
            }
        )
    else:
        for s in ctx.steps:
            att = ", ".join(f"{m}->{y}" for m, y in s.attach)
            print(f"{s.name}: {s.obj}({att})" if att else f"{s.name}: {s.obj}")
        if iso is not None:
            pairs = ", ".join(f"{k}->{v}" for k, v in sorted(iso.comp.items()))
            print(f"iso: {pairs}")
        print("ok" if ok else "failed")
    return 0 if ok else 1


# --- wiring -------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--format", choices=("text", "json", "dot"), default="text",
        help="output format (dot only for single shapes)",
    )
    common.add_argument(
        "--seed", type=int, default=None,
        help="reserved for future randomized modes; currently ignored",
    )

    parser = argparse.ArgumentParser(
        prog="opetopes",
        description="Opetopes, opetopic sets, algebras, and sorted theories.",
    )
    groups = parser.add_subparsers(dest="group", required=True)

    def leaf(group, name, fn, **flags):
        sub = group.add_parser(name, parents=[common])
        for flag, kw in flags.items():
            sub.add_argument(f"--{flag.replace('_', '-')}", **kw)
        sub.set_defaults(fn=fn)
        return sub

    g1 = groups.add_parser("opetope").add_subparsers(dest="cmd", required=True)
    expr = {"expr": {"action": "append", "help": "shape expression"}}
    exprfile = expr | {"file": {"help": "file holding a shape expression"}}
    leaf(g1, "validate", cmd_opetope_validate, **exprfile)
    leaf(g1, "target", cmd_opetope_target, **exprfile)
    leaf(g1, "source", cmd_opetope_source, **exprfile)
    leaf(g1, "faces", cmd_opetope_faces, **exprfile)
    leaf(
        g1, "enumerate", cmd_opetope_enumerate,
        dim={"type": int, "required": True},
        max_nodes={"type": int, "default": 6},
    )
    leaf(g1, "hom", cmd_opetope_hom, **exprfile)
    leaf(g1, "identities", cmd_opetope_identities, **exprfile)

    g2 = groups.add_parser("opset").add_subparsers(dest="cmd", required=True)
    window = {"window": {"type": _window, "default": None, "help": "dimension window m:n"}}
    leaf(g2, "spine", cmd_opset_spine, **exprfile, **window)
    leaf(g2, "boundary", cmd_opset_boundary, **exprfile, **window)
    leaf(
        g2, "orthogonal", cmd_opset_orthogonal,
        expr={"required": True, "help": "shape expression"},
        file={"required": True, "help": "opetopic set file"},
    )
    leaf(
        g2, "hlift", cmd_opset_hlift,
        file={"required": True, "help": "opetopic set file"},
        n={"type": int, "required": True, "help": "dimension to test around"},
        max_nodes={"type": int, "default": 4},
    )

    g3 = groups.add_parser("oalg").add_subparsers(dest="cmd", required=True)
    catfile = {"file": {"required": True, "help": "finite category file"}}
    leaf(
        g3, "free", cmd_oalg_free,
        **catfile,
        expr={"help": "pasting shape (default: the arrow)"},
        max_nodes={"type": int, "default": 4},
    )
    leaf(g3, "laws", cmd_oalg_laws, **catfile, max_nodes={"type": int, "default": 6})
    leaf(
        g3, "h", cmd_oalg_h,
        **exprfile,
        k={"type": int, "default": 1},
        n={"type": int, "default": 1},
    )
    leaf(g3, "nerve", cmd_oalg_nerve, **catfile, max_nodes={"type": int, "default": 3})
    leaf(
        g3, "nerve-check", cmd_oalg_nerve_check,
        **catfile, max_nodes={"type": int, "default": 3},
    )

    g4 = groups.add_parser("theory").add_subparsers(dest="cmd", required=True)
    thfile = {"file": {"required": True, "help": "theory or signature file"}}
    leaf(g4, "parse", cmd_theory_parse, **thfile)
    leaf(g4, "lfd", cmd_theory_lfd, **thfile)
    leaf(g4, "roundtrip", cmd_theory_roundtrip, **thfile)
    leaf(
        g4, "check-model", cmd_theory_check_model,
        theory={"required": True, "help": "theory file"},
        model={"required": True, "help": "model file"},
    )
    leaf(
        g4, "context", cmd_theory_context,
        **thfile,
        expr={"help": "context to realize, e.g. 'x y : V, f : E(x, y)'"},
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except BrokenPipeError:
        # the reader went away mid-output; silence the shutdown flush too
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 0
    except (ValueError, KeyError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
