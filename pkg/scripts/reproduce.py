"""Regenerate every documented CLI example into one directory.

Each invocation writes ``<name>.out`` (stdout) and the manifest
``MANIFEST.txt`` records its command line and exit status.  Running the
script twice must give byte-identical directories.

    python3 scripts/reproduce.py [--out-dir DIR]
"""

from __future__ import annotations

import argparse
import io
import json
import os
import shlex
import sys

from lapnet.cli import config_from_args, run

SELF_LOOP = {"format": "lapnet-graph-v1", "edges": [{"u": 0, "v": 1, "c": 1.0}, {"u": 1, "v": 1, "c": 1.0}]}
TWO_TRIANGLES = {
    "format": "lapnet-graph-v1",
    "edges": [
        {"u": 0, "v": 1, "c": 1.0}, {"u": 1, "v": 2, "c": 1.0}, {"u": 0, "v": 2, "c": 1.0},
        {"u": 3, "v": 4, "c": 1.0}, {"u": 4, "v": 5, "c": 1.0}, {"u": 3, "v": 5, "c": 1.0},
    ],
}
SINGLE_EDGE = {"format": "lapnet-graph-v1", "edges": [{"u": 0, "v": 1, "c": 5.0}]}


def invocations(fixtures: str) -> list[tuple[str, list[str]]]:
    f = lambda name: os.path.join(fixtures, name)  # noqa: E731
    runs = [
        ("validate-cyclic5", ["validate", "--graph", "cyclic:5"]),
        ("validate-self-loop", ["validate", "--graph", f("self_loop.json")]),
        ("validate-two-triangles", ["validate", "--graph", f("two_triangles.json")]),
        ("laplacian-cyclic4", ["laplacian", "--graph", "cyclic:4"]),
        ("laplacian-line", ["laplacian", "--graph", "line", "--window=-3:3"]),
        ("laplacian-linear", ["laplacian", "--graph", "chain:linear", "--window", "0:5"]),
        ("laplacian-square", ["laplacian", "--graph", "chain:square", "--window", "0:5"]),
        ("laplacian-geometric2", ["laplacian", "--graph", "chain:geometric:2", "--window", "0:5"]),
        ("laplacian-linear-compressed", ["laplacian", "--graph", "chain:linear", "--window", "0:5", "--boundary", "compressed"]),
        ("laplacian-lattice2x4", ["laplacian", "--graph", "lattice:2x4"]),
        ("potential-cyclic5", ["potential", "--graph", "cyclic:5", "--alpha", "0", "--beta", "1"]),
        ("potential-cyclic5-dft", ["potential", "--graph", "cyclic:5", "--alpha", "0", "--beta", "1", "--solver", "dft"]),
        ("potential-cyclic5-closed", ["potential", "--graph", "cyclic:5", "--alpha", "0", "--beta", "1", "--solver", "closed-form"]),
        ("potential-line-k3", ["potential", "--graph", "line", "--window=-50:50", "--alpha", "0", "--beta", "3"]),
        ("potential-line-k2-closed", ["potential", "--graph", "line", "--window=-5:5", "--alpha", "0", "--beta", "2", "--solver", "closed-form"]),
        ("potential-lattice2x16-cg", ["potential", "--graph", "lattice:2x16", "--alpha", "0,0", "--beta", "0,1", "--format", "csv"]),
        ("potential-lattice2x16-dft", ["potential", "--graph", "lattice:2x16", "--alpha", "0,0", "--beta", "0,1", "--solver", "dft", "--format", "csv"]),
        ("potential-two-triangles", ["potential", "--graph", f("two_triangles.json"), "--alpha", "0", "--beta", "4"]),
        ("resistance-cyclic4", ["resistance", "--graph", "cyclic:4"]),
        ("resistance-square", ["resistance", "--graph", "chain:square", "--window", "0:40", "--alpha", "2", "--beta", "7"]),
        ("resistance-single-edge", ["resistance", "--graph", f("single_edge.json")]),
        ("spectrum-cyclic3", ["spectrum", "--graph", "cyclic:3"]),
        ("spectrum-cyclic4", ["spectrum", "--graph", "cyclic:4"]),
        ("spectrum-cyclic6", ["spectrum", "--graph", "cyclic:6"]),
        ("spectrum-cyclic4-jacobi", ["spectrum", "--graph", "cyclic:4", "--method", "jacobi"]),
        ("spectrum-square-2x2", ["spectrum", "--graph", "chain:square", "--window", "0:1", "--boundary", "compressed"]),
        ("heat-line-t0.25", ["heat", "--graph", "line", "--window=-20:20", "--ref-window=-200:200", "--t", "0.25"]),
        ("heat-line-t0.5", ["heat", "--graph", "line", "--window=-20:20", "--ref-window=-200:200", "--t", "0.5"]),
        ("heat-line-t1", ["heat", "--graph", "line", "--window=-20:20", "--ref-window=-200:200", "--t", "1"]),
        ("heat-linear-t0.1", ["heat", "--graph", "chain:linear", "--window", "0:30", "--ref-window", "0:300", "--t", "0.1"]),
        ("heat-line-t0", ["heat", "--graph", "line", "--window=-20:20", "--ref-window=-200:200", "--t", "0"]),
        ("heat-cyclic4-snapshot", ["heat", "--graph", "cyclic:4", "--t", "1", "--format", "csv"]),
    ]
    for k in (1, 2, 5):
        for s in ("0.2", "0.25", "0.3", "0.5", "1.0"):
            runs.append((f"hs-k{k}-s{s}", ["hs", "--k", str(k), "--s", s]))
    runs += [
        ("defect-qpq", ["defect", "--model", "qpq", "--nmax", "256"]),
        ("defect-hamiltonian", ["defect", "--model", "hamiltonian", "--nmax", "256"]),
        ("defect-linear-m1", ["defect", "--model", "chain:linear", "--shift", "-1", "--nmax", "256"]),
        ("defect-constant-m1", ["defect", "--model", "chain:constant", "--shift", "-1", "--nmax", "256"]),
        ("defect-square-m1", ["defect", "--model", "chain:square", "--shift", "-1", "--nmax", "256"]),
        ("defect-geometric2-m1", ["defect", "--model", "chain:geometric:2", "--shift", "-1", "--nmax", "256"]),
        ("defect-geometric2", ["defect", "--model", "chain:geometric:2", "--nmax", "256"]),
        ("defect-linear", ["defect", "--model", "chain:linear", "--nmax", "256"]),
    ]
    return runs


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out-dir", default="reproduce_output")
    args = ap.parse_args(argv)
    out_dir = args.out_dir
    fixtures = os.path.join(out_dir, "fixtures")
    os.makedirs(fixtures, exist_ok=True)
    for name, doc in (("self_loop.json", SELF_LOOP), ("two_triangles.json", TWO_TRIANGLES), ("single_edge.json", SINGLE_EDGE)):
        with open(os.path.join(fixtures, name), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    manifest = []
    for name, argv_ in invocations("FIXTURES"):
        real = [a.replace("FIXTURES", fixtures) for a in argv_]
        out, err = io.StringIO(), io.StringIO()
        code = run(config_from_args(real), stdout=out, stderr=err)
        with open(os.path.join(out_dir, f"{name}.out"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(out.getvalue())
        # record the portable form of the command, not the absolute fixture path
        manifest.append(f"{name}\texit={code}\tlapnet {shlex.join(argv_)}\t{err.getvalue().strip()}")
    with open(os.path.join(out_dir, "MANIFEST.txt"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(manifest) + "\n")
    print(f"wrote {len(manifest)} outputs to {out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
