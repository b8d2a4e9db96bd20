"""Command-line front end.

Graph sources are either a lapnet-graph-v1 file or a builder string:

    cyclic:N            cycle on N vertices
    lattice:DxN         periodic box (Z_N)^D
    chain:RULE[:LAM]    half-line chain, RULE in constant|linear|square|geometric
    line[:RULE[:LAM]]   chain on all of Z (constant or geometric)

All output is deterministic: JSON keys are sorted, rows are sorted, and
floats are written with 17 significant digits.  Exit status is 0 on
success, 2 when a validation, convergence or consistency check fails and 1
on usage errors or malformed input files.
"""

from __future__ import annotations

import argparse
import io
import math
import os
import re
import sys
from dataclasses import dataclass

import numpy as np

from .graph import (
    GraphFormatError,
    GraphSystem,
    Window,
    build_chain,
    build_cyclic,
    build_lattice,
    load_graph,
    validate,
)
from .heisenberg import HalfLineBandedOperator, build_hamiltonian, build_P, build_Q, build_QPQ
from .operator import VertexField, assemble_matrix, format_float
from .potential import ConsistencyError, ConvergenceError, NoSolutionError, ResistanceMetric, solve_dipole
from .semigroup import IndefiniteMatrixError, heat_apply, truncation_error_check
from .spectral import NotHermitianError, cyclic_spectrum, defect_probe, hs_membership_line, truncated_spectrum

EXIT_OK, EXIT_USAGE, EXIT_CHECK = 0, 1, 2

SUBCOMMANDS = ("validate", "laplacian", "potential", "resistance", "spectrum", "heat", "hs", "defect")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# deterministic serialisation


def _num(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if not math.isfinite(x):
        return "null"
    if x == 0.0:
        return "0"
    return format(x, ".17g")


def to_json(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with sorted keys and 17-significant-digit floats."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_, int, np.integer, float, np.floating)):
        return _num(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return to_json({"re": obj.real, "im": obj.imag}, indent, _level)
    if isinstance(obj, str):
        return _quote(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = sorted((str(k), v) for k, v in obj.items())
        body = ",\n".join(f"{pad}{_quote(k)}: {to_json(v, indent, _level + 1)}" for k, v in items)
        return "{\n" + body + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(to_json(v, indent, _level + 1) for v in seq) + "]"
        body = ",\n".join(pad + to_json(v, indent, _level + 1) for v in seq)
        return "[\n" + body + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _quote(s: str) -> str:
    import json

    return json.dumps(s, ensure_ascii=True)


def _vertex_json(x):
    return list(x) if isinstance(x, tuple) else x


def _vertex_csv(x) -> str:
    return " ".join(str(c) for c in x) if isinstance(x, tuple) else str(x)


def _csv(header: list[str], rows: list[list]) -> str:
    out = io.StringIO()
    out.write(",".join(header) + "\n")
    for r in rows:
        out.write(",".join(c if isinstance(c, str) else format_float(c) for c in r) + "\n")
    return out.getvalue()


# ---------------------------------------------------------------------------
# parsing


_BUILDER = re.compile(
    r"^(?:cyclic:(?P<n>\d+)"
    r"|lattice:(?P<d>\d+)x(?P<ln>\d+)"
    r"|(?P<chain>chain|line)(?::(?P<rule>constant|linear|square|geometric)(?::(?P<lam>[0-9]*\.?[0-9]+))?)?)$"
)


def parse_graph_source(spec: str) -> GraphSystem:
    """Builder string or path to a lapnet-graph-v1 file."""
    m = _BUILDER.match(spec)
    if m is None:
        if os.path.exists(spec):
            return load_graph(spec)
        raise UsageError(f"cannot parse graph source {spec!r}")
    try:
        if m.group("n"):
            return build_cyclic(int(m.group("n")))
        if m.group("d"):
            return build_lattice(int(m.group("d")), int(m.group("ln")))
        rule = m.group("rule") or "constant"
        lam = float(m.group("lam")) if m.group("lam") else None
        if m.group("chain") == "chain" and m.group("rule") is None:
            raise UsageError("chain needs a weight rule, e.g. chain:linear")
        return build_chain(rule, "half-line" if m.group("chain") == "chain" else "full-line", lam)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def parse_window(spec: str | None, g: GraphSystem) -> Window:
    if spec is None:
        return g.default_window()
    m = re.fullmatch(r"(-?\d+):(-?\d+)", spec)
    if m is None:
        raise UsageError(f"window must look like lo:hi, got {spec!r}")
    lo, hi = int(m.group(1)), int(m.group(2))
    if hi < lo:
        raise UsageError("window needs lo <= hi")
    try:
        return g.check_window(Window.interval(lo, hi))
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None


def parse_vertex(spec: str | None, g: GraphSystem, default=None):
    if spec is None:
        if default is None:
            raise UsageError("a vertex argument is required")
        return default
    try:
        parts = [int(p) for p in spec.split(",")]
    except ValueError:
        raise UsageError(f"cannot parse vertex {spec!r}") from None
    x = tuple(parts) if g.kind == "lattice" else (parts[0] if len(parts) == 1 else None)
    if x is None or not g.contains(x):
        raise UsageError(f"vertex {spec!r} is not in {g.describe()}")
    return x


def parse_shift(spec: str) -> complex:
    table = {"-1": -1.0 + 0j, "i": 1j, "+i": 1j, "-i": -1j}
    if spec not in table:
        raise UsageError("shift must be one of -1, i, -i, pm-i")
    return table[spec]


@dataclass
class RunConfig:
    """One CLI invocation after argument parsing."""

    subcommand: str
    graph: str | None = None
    window: str | None = None
    alpha: str | None = None
    beta: str | None = None
    t: float | None = None
    s: float | None = None
    k: int = 1
    nmax: int = 256
    solver: str = "cg"
    boundary: str = "induced"
    method: str = "auto"
    ref_window: str | None = None
    model: str | None = None
    shift: str = "pm-i"
    out: str | None = None
    format: str | None = None


# ---------------------------------------------------------------------------
# subcommands


def _need_graph(cfg: RunConfig, strict: bool = True) -> GraphSystem:
    if cfg.graph is None:
        raise UsageError("--graph is required")
    if not _BUILDER.match(cfg.graph) and os.path.exists(cfg.graph):
        return load_graph(cfg.graph, strict=strict)
    return parse_graph_source(cfg.graph)


def _cmd_validate(cfg: RunConfig):
    g = _need_graph(cfg, strict=False)
    w = parse_window(cfg.window, g) if cfg.window else None
    rep = validate(g, w)
    return rep.as_dict(), None, (None if rep.ok else "validation failed")


def _cmd_laplacian(cfg: RunConfig):
    g = _need_graph(cfg)
    m = assemble_matrix(g, parse_window(cfg.window, g), cfg.boundary)
    if cfg.format == "json":
        w = m.window
        entries = [[_vertex_json(w.vertices[r]), _vertex_json(w.vertices[c]), float(v)]
                   for r, c, v in zip(m.rows.tolist(), m.indices.tolist(), m.data.tolist())]
        return {"window": w.describe(), "boundary": cfg.boundary, "bandwidth": m.bandwidth, "entries": entries}, None, None
    return None, m.to_csv(), None


def _cmd_potential(cfg: RunConfig):
    g = _need_graph(cfg)
    w = parse_window(cfg.window, g)
    a = parse_vertex(cfg.alpha, g)
    b = parse_vertex(cfg.beta, g)
    sol = solve_dipole(g, w, a, b, cfg.solver)
    values = sorted(zip(sol.field.window.vertices, np.real(sol.field.values).tolist()))
    if cfg.format == "csv":
        return None, _csv(["vertex", "value"], [[_vertex_csv(x), v] for x, v in values]), None
    doc = {
        "alpha": _vertex_json(a),
        "beta": _vertex_json(b),
        "energy": sol.energy,
        "residual": sol.residual_norm,
        "solver": sol.solver,
        "values": [[_vertex_json(x), v] for x, v in values],
    }
    return doc, None, None


def _cmd_resistance(cfg: RunConfig):
    g = _need_graph(cfg)
    w = parse_window(cfg.window, g)
    metric = ResistanceMetric(g, w, solver=cfg.solver)
    if cfg.alpha is not None or cfg.beta is not None:
        pairs = [(parse_vertex(cfg.alpha, g), parse_vertex(cfg.beta, g))]
    else:
        vs = sorted(w.vertices)
        pairs = [(x, y) for i, x in enumerate(vs) for y in vs[i + 1:]]
    rows = [[_vertex_csv(x), _vertex_csv(y), metric(x, y)] for x, y in pairs]
    if cfg.format == "json":
        return {"pairs": [[_vertex_json(x), _vertex_json(y), metric(x, y)] for x, y in pairs]}, None, None
    return None, _csv(["x", "y", "dist"], rows), None


def _cmd_spectrum(cfg: RunConfig):
    g = _need_graph(cfg)
    w = parse_window(cfg.window, g)
    if cfg.method == "auto" and g.kind == "cyclic" and w.vertices == g.full_window().vertices:
        lam, source = cyclic_spectrum(g.size).tolist(), "closed-form-cyclic"
    else:
        method = "eigh" if cfg.method == "auto" else cfg.method
        dec = truncated_spectrum(assemble_matrix(g, w, cfg.boundary), method)
        lam, source = dec.eigenvalues.tolist(), dec.source
    if cfg.format == "json":
        return {"source": source, "eigenvalues": lam}, None, None
    return None, _csv(["index", "eigenvalue"], [[str(i), v] for i, v in enumerate(lam)]), None


def _default_reference(g: GraphSystem, w: Window) -> Window:
    lo, hi = w.interval_bounds
    span = hi - lo + 1
    if g.kind == "half-line":
        return Window.interval(0, max(hi, 0) + 10 * span)
    return Window.interval(lo - 5 * span, hi + 5 * span)


def _cmd_heat(cfg: RunConfig):
    g = _need_graph(cfg)
    if cfg.t is None:
        raise UsageError("--t is required")
    w = parse_window(cfg.window, g)
    x0 = parse_vertex(cfg.alpha, g, default=0 if 0 in w.index else w.vertices[0])
    if x0 not in w.index:
        raise UsageError("--alpha must lie in the window")
    v = VertexField.delta(w, x0)
    if cfg.format == "csv":
        s = heat_apply(assemble_matrix(g, w, "compressed"), cfg.t, v)
        rows = sorted(zip(w.vertices, np.real(s.values).tolist()))
        return None, _csv(["vertex", "value"], [[_vertex_csv(x), val] for x, val in rows]), None
    if g.is_finite:
        if w.vertices != g.full_window().vertices:
            raise UsageError("finite graphs are propagated on their whole vertex set")
        chk = truncation_error_check(g, w, w, cfg.t, v, min_ratio=1.0)
    else:
        ref = parse_window(cfg.ref_window, g) if cfg.ref_window else _default_reference(g, w)
        chk = truncation_error_check(g, w, ref, cfg.t, v)
    doc = chk.as_dict()
    return doc, None, (None if chk.passed else "truncation bound violated")


def _cmd_hs(cfg: RunConfig):
    if cfg.s is None:
        raise UsageError("--s is required")
    if cfg.k < 1:
        raise UsageError("--k must be >= 1")
    return hs_membership_line(cfg.k, cfg.s).as_dict(), None, None


def _defect_operator(model: str):
    if model == "qpq":
        return build_QPQ()
    if model == "hamiltonian":
        return build_hamiltonian()
    if model == "P":
        return build_P()
    if model == "Q":
        return build_Q()
    if model.startswith("chain:"):
        g = parse_graph_source(model)
        if g.kind != "half-line":
            raise UsageError("defect chains live on the half-line")
        return HalfLineBandedOperator.from_graph(g)
    raise UsageError("model must be qpq, hamiltonian, P, Q or chain:<rule>")


def _cmd_defect(cfg: RunConfig):
    if cfg.model is None:
        raise UsageError("--model is required")
    if cfg.nmax < 8:
        raise UsageError("--nmax must be >= 8")
    op = _defect_operator(cfg.model)
    shifts = [1j, -1j] if cfg.shift == "pm-i" else [parse_shift(cfg.shift)]
    reports = [defect_probe(op, z, cfg.nmax) for z in shifts]
    doc = {"model": cfg.model, "reports": [r.as_dict() for r in reports]}
    if cfg.shift == "pm-i":
        doc["deficiency_indices"] = [r.estimated_count for r in reports]
    bad = [r for r in reports if r.status != "ok"]
    return doc, None, ("inconclusive defect probe" if bad else None)


_HANDLERS = {
    "validate": _cmd_validate,
    "laplacian": _cmd_laplacian,
    "potential": _cmd_potential,
    "resistance": _cmd_resistance,
    "spectrum": _cmd_spectrum,
    "heat": _cmd_heat,
    "hs": _cmd_hs,
    "defect": _cmd_defect,
}


def run(cfg: RunConfig, stdout=None, stderr=None) -> int:
    """Execute one subcommand and return its exit status."""
    stdout = stdout if stdout is not None else sys.stdout
    stderr = stderr if stderr is not None else sys.stderr
    if cfg.subcommand not in _HANDLERS:
        print(f"lapnet: unknown subcommand {cfg.subcommand!r}", file=stderr)
        return EXIT_USAGE
    try:
        doc, text, failure = _HANDLERS[cfg.subcommand](cfg)
    except UsageError as exc:
        print(f"lapnet: {exc}", file=stderr)
        return EXIT_USAGE
    except GraphFormatError as exc:
        print(f"lapnet: malformed graph file: {exc}", file=stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"lapnet: {exc}", file=stderr)
        return EXIT_USAGE
    except (NoSolutionError, ConvergenceError, ConsistencyError, IndefiniteMatrixError, NotHermitianError) as exc:
        print(f"lapnet: {exc}", file=stderr)
        return EXIT_CHECK
    except (ValueError, KeyError) as exc:
        print(f"lapnet: {exc}", file=stderr)
        return EXIT_USAGE
    payload = text if text is not None else to_json(doc) + "\n"
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(payload)
    else:
        stdout.write(payload)
    if failure:
        print(f"lapnet: {failure}", file=stderr)
        return EXIT_CHECK
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lapnet", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    def common(sp, graph=True):
        if graph:
            sp.add_argument("--graph", help="builder string or lapnet-graph-v1 file")
            sp.add_argument("--window", help="vertex interval lo:hi (write --window=-5:5 for negative bounds)")
        sp.add_argument("--out", help="write output to this file instead of stdout")
        sp.add_argument("--format", choices=("json", "csv"))
        return sp

    common(sub.add_parser("validate", help="check the graph axioms"))
    sp = common(sub.add_parser("laplacian", help="dump the Laplacian matrix as CSV"))
    sp.add_argument("--boundary", choices=("induced", "compressed"), default="induced")
    sp = common(sub.add_parser("potential", help="solve the dipole equation"))
    sp.add_argument("--alpha", required=True)
    sp.add_argument("--beta", required=True)
    sp.add_argument("--solver", choices=("cg", "dft", "direct", "closed-form"), default="cg")
    sp = common(sub.add_parser("resistance", help="resistance distances as CSV x,y,dist"))
    sp.add_argument("--alpha")
    sp.add_argument("--beta")
    sp.add_argument("--solver", choices=("cg", "direct"), default="cg")
    sp = common(sub.add_parser("spectrum", help="eigenvalues of a section"))
    sp.add_argument("--boundary", choices=("induced", "compressed"), default="induced")
    sp.add_argument("--method", choices=("auto", "eigh", "jacobi"), default="auto",
                    help="auto uses the closed form on whole cyclic graphs and eigh otherwise")
    sp = common(sub.add_parser("heat", help="heat semigroup truncation check"))
    sp.add_argument("--t", type=float, required=True)
    sp.add_argument("--alpha", help="vertex of the initial Dirac mass")
    sp.add_argument("--ref-window", dest="ref_window", help="reference window lo:hi")
    sp = common(sub.add_parser("hs", help="H(s) membership of the integer-line dipole"), graph=False)
    sp.add_argument("--s", type=float, required=True)
    sp.add_argument("--k", type=int, default=1)
    sp = common(sub.add_parser("defect", help="defect-space probe of a banded operator"), graph=False)
    sp.add_argument("--model", required=True, help="qpq | hamiltonian | P | Q | chain:<rule>[:lam]")
    sp.add_argument("--nmax", type=int, default=256)
    sp.add_argument("--shift", default="pm-i", help="-1, i, -i or pm-i (both)")
    return p


def config_from_args(argv=None) -> RunConfig:
    ns = build_parser().parse_args(argv)
    known = {f for f in RunConfig.__dataclass_fields__}
    kwargs = {k: v for k, v in vars(ns).items() if k in known and v is not None}
    return RunConfig(**kwargs)


def main(argv=None) -> int:
    return run(config_from_args(argv))


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
