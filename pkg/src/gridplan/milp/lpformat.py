"""CPLEX-style LP text export and import.

Layout written by :func:`write_lp` (field order is fixed so that output is
byte-stable)::

    \\ <instance name>
    Minimize
     obj: + 3 x + 2 y + 5
    Subject To
     row_a(1): + 1 x - 1 y >= 1.5
    Bounds
     0 <= x <= 10
     -inf <= y <= inf
    Generals
     x
    Binaries
     z
    End

Every variable is listed in ``Bounds`` in index order, which fixes the
variable order on re-import. Numbers use ``repr`` so they round-trip
exactly. A bare number in the objective is the constant term.
"""

from __future__ import annotations

import io
import math
from pathlib import Path

from .instance import BINARY, CONTINUOUS, EQ, GE, INTEGER, LE, MilpInstance

_TERMS_PER_LINE = 8


def _num(x: float) -> str:
    if x == math.inf:
        return "inf"
    if x == -math.inf:
        return "-inf"
    return repr(float(x))


def _terms(pairs, names) -> list[str]:
    out = []
    for j, a in pairs:
        sign = "-" if a < 0 or (a == 0 and math.copysign(1, a) < 0) else "+"
        out.append(f"{sign} {_num(abs(a))} {names[j]}")
    return out


def _wrap(head: str, terms: list[str], tail: str = "") -> str:
    lines = []
    for k in range(0, max(len(terms), 1), _TERMS_PER_LINE):
        chunk = " ".join(terms[k:k + _TERMS_PER_LINE])
        lines.append(("" if k else head) + chunk)
    if tail:
        lines[-1] += " " + tail
    return "\n   ".join(lines)


def dumps_lp(instance: MilpInstance) -> str:
    names = instance.var_names
    buf = io.StringIO()
    buf.write(f"\\ {instance.name}\n")
    buf.write("Minimize\n")
    obj_terms = _terms(sorted(instance.objective.items()), names)
    if instance.obj_constant != 0.0 or not obj_terms:
        c = instance.obj_constant
        obj_terms.append(f"{'-' if c < 0 else '+'} {_num(abs(c))}")
    buf.write(" " + _wrap("obj: ", obj_terms) + "\n")
    buf.write("Subject To\n")
    for i, rname in enumerate(instance.row_names):
        cols, vals, sense, rhs = instance.row(i)
        buf.write(" " + _wrap(f"{rname}: ", _terms(zip(cols, vals), names), f"{sense} {_num(rhs)}") + "\n")
    buf.write("Bounds\n")
    for j, n in enumerate(names):
        buf.write(f" {_num(instance.lower[j])} <= {n} <= {_num(instance.upper[j])}\n")
    gens = [n for n, k in zip(names, instance.kinds) if k == INTEGER]
    bins = [n for n, k in zip(names, instance.kinds) if k == BINARY]
    if gens:
        buf.write("Generals\n")
        buf.writelines(f" {n}\n" for n in gens)
    if bins:
        buf.write("Binaries\n")
        buf.writelines(f" {n}\n" for n in bins)
    buf.write("End\n")
    return buf.getvalue()


def write_lp(instance: MilpInstance, path: str | Path) -> None:
    Path(path).write_text(dumps_lp(instance))


class LPParseError(ValueError):
    pass


def _parse_float(tok: str) -> float:
    if tok in ("inf", "+inf", "infinity"):
        return math.inf
    if tok in ("-inf", "-infinity"):
        return -math.inf
    return float(tok)


def _parse_expr(tokens: list[str]):
    """Yield (coef, name) pairs and constants from '+ 3 x - 2 y + 5' tokens."""
    terms: list[tuple[float, str]] = []
    const = 0.0
    k = 0
    while k < len(tokens):
        sign = 1.0
        if tokens[k] in "+-":
            sign = -1.0 if tokens[k] == "-" else 1.0
            k += 1
        tok = tokens[k]
        try:
            coef = _parse_float(tok)
            k += 1
            if k < len(tokens) and tokens[k] not in "+-":
                terms.append((sign * coef, tokens[k]))
                k += 1
            else:
                const += sign * coef
        except ValueError:
            terms.append((sign, tok))
            k += 1
    return terms, const


def loads_lp(text: str) -> MilpInstance:
    """Parse text produced by :func:`dumps_lp` (and simple hand-written LP files)."""
    lines = text.splitlines()
    name = "model"
    if lines and lines[0].startswith("\\"):
        name = lines[0][1:].strip() or name
    sections: dict[str, list[str]] = {}
    current = None
    headers = {"minimize": "obj", "subject to": "rows", "bounds": "bounds",
               "generals": "gen", "binaries": "bin", "end": "end"}
    for raw in lines:
        line = raw.split("\\", 1)[0].strip()
        if not line:
            continue
        key = line.lower()
        if key in headers:
            current = headers[key]
            sections.setdefault(current, [])
            continue
        if current is None:
            raise LPParseError(f"content before first section: {raw!r}")
        sections[current].append(line)

    # statements: join continuation lines (a new statement starts with "name:")
    def statements(block: list[str]) -> list[str]:
        out: list[str] = []
        for line in block:
            head = line.split()[0]
            if head.endswith(":") or not out:
                out.append(line)
            else:
                out[-1] += " " + line
        return out

    bound_stmts = sections.get("bounds", [])
    inst = MilpInstance(name)
    gens = {ln.split()[0] for ln in sections.get("gen", [])}
    bins = {ln.split()[0] for ln in sections.get("bin", [])}
    for stmt in bound_stmts:
        toks = stmt.split()
        if len(toks) == 2 and toks[1] == "free":
            lo, vname, hi = -math.inf, toks[0], math.inf
        elif len(toks) == 5 and toks[1] == "<=" and toks[3] == "<=":
            lo, vname, hi = _parse_float(toks[0]), toks[2], _parse_float(toks[4])
        else:
            raise LPParseError(f"unsupported bound statement {stmt!r}")
        kind = BINARY if vname in bins else INTEGER if vname in gens else CONTINUOUS
        inst.add_var(vname, lo, hi, kind)

    def ensure(vname: str) -> int:
        if not inst.has_var(vname):
            kind = BINARY if vname in bins else INTEGER if vname in gens else CONTINUOUS
            return inst.add_var(vname, 0.0, math.inf, kind)
        return inst.var(vname)

    for stmt in statements(sections.get("obj", [])):
        toks = stmt.split()
        if toks[0].endswith(":"):
            toks = toks[1:]
        terms, const = _parse_expr(toks)
        for coef, vname in terms:
            inst.add_objective(ensure(vname), coef)
        inst.obj_constant += const

    for stmt in statements(sections.get("rows", [])):
        toks = stmt.split()
        if not toks[0].endswith(":"):
            raise LPParseError(f"unnamed row {stmt!r}")
        rname = toks[0][:-1]
        sense_pos = next((k for k, t in enumerate(toks) if t in ("<=", ">=", "=", "<", ">", "=<", "=>")), None)
        if sense_pos is None:
            raise LPParseError(f"row without sense {stmt!r}")
        sense = {"<": LE, "=<": LE, "<=": LE, ">": GE, "=>": GE, ">=": GE, "=": EQ}[toks[sense_pos]]
        terms, const = _parse_expr(toks[1:sense_pos])
        rhs = _parse_float(toks[sense_pos + 1]) - const
        inst.add_row(rname, [(ensure(v), c) for c, v in terms], sense, rhs)
    return inst


def read_lp(path: str | Path) -> MilpInstance:
    return loads_lp(Path(path).read_text())
