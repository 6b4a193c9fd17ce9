"""Command-line front door: build resources, run patterns, dump groups, report.

The canonical output of every command is one JSON document on stdout (sorted
keys, compact separators); the aligned text on stderr is derived from it and
purely cosmetic.  With ``--out DIR`` the same report is also written to
``report.json`` and ``report.csv`` in that directory, together with a rendered
``report.png`` figure.  A failed command prints ``{"error": {...}}`` and exits
with status 2; exit status is 0 exactly when no error record was emitted.

Sampling uses numpy's seeded PCG64 generator, so identical configuration and
seed give byte-identical output.  The ``CORRSPACE_CAP`` environment variable
bounds dense state sizes as everywhere else in the package.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from typing import Any, Callable, Sequence

import numpy as np

from .compile import compile_single_qubit, zxz_matrix
from .czgate import WgsFrontierSim, branch_probability_scan, logical_cz
from .discriminate import decode_marker, logical_born_probability, walgate_discriminate
from .groups import closure
from .mps import MpsChain, expectation, to_statevector, two_point_correlation
from .protocols import MeasurementPattern, ProtocolRecord, run_pattern
from .resources import (
    EncodedResourceSpec,
    aklt_type_chain,
    build_resource,
    cluster_state,
    correlation_chain,
    encoded_component,
    encoded_resource,
    parse_resource_spec,
)
from .statevec import binary_entropy, entropy_vn, entropy_z, reduced_density
from .tensor import named_gate, phase_gate, proportional_up_to_phase

FigureFn = Callable[[str], None]
CsvRows = list  # rows of report.csv, first row per section is the header


class CliError(ValueError):
    """Configuration problem reportable as a structured error record."""


# ---------------------------------------------------------------------------
# Serialization helpers
# ---------------------------------------------------------------------------


def dumps_canonical(doc: Any) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False)


def matrix_json(m: np.ndarray) -> list[list[list[float]]]:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m, dtype=complex)]


def _table_lines(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> list[str]:
    cells = [[str(h) for h in header]] + [[str(c) for c in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    return ["  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in cells]


def _split_outside_parens(text: str) -> list[str]:
    """Split on commas that are not nested in parentheses (``zxz(a,b,c)``)."""
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth = max(0, depth - 1)
        elif ch == "," and depth == 0:
            parts.append(text[start:i])
            start = i + 1
    parts.append(text[start:])
    return parts


def _parse_kv(rest: str) -> dict[str, Any]:
    """Parse ``key=val,key=val`` with int → float → string fallback per value."""
    params: dict[str, Any] = {}
    if not rest.strip():
        return params
    for item in _split_outside_parens(rest):
        key, eq, val = item.partition("=")
        if not eq:
            raise CliError(f"malformed parameter {item!r} (expected key=value)")
        key, val = key.strip(), val.strip()
        try:
            params[key] = int(val)
        except ValueError:
            try:
                params[key] = float(val)
            except ValueError:
                params[key] = val
    return params


def _parse_target(text: str) -> np.ndarray:
    """Gate spec: a named gate, ``S(phi)``, or ``zxz(a,b,c)`` Euler angles."""
    token = text.strip()
    if token.lower().startswith("s(") and token.endswith(")"):
        return phase_gate(float(token[2:-1]))
    if token.lower().startswith("zxz(") and token.endswith(")"):
        angles = [float(x) for x in token[4:-1].split(",")]
        if len(angles) != 3:
            raise CliError("zxz target needs exactly three angles")
        return zxz_matrix(*angles)
    return named_gate(token)


def _observable(name: str, dim: int) -> np.ndarray:
    if dim == 2:
        return named_gate(name)
    if dim == 3 and name.upper() == "Z":
        return np.diag([1.0, 0.0, -1.0]).astype(complex)
    raise CliError(f"no observable {name!r} for local dimension {dim}")


# ---------------------------------------------------------------------------
# Subcommand: correlations
# ---------------------------------------------------------------------------


def cmd_correlations(args: argparse.Namespace):
    spec = parse_resource_spec(args.resource)
    chain = build_resource(spec)
    if not isinstance(chain, MpsChain):
        raise CliError(f"resource family {spec.family!r} is not a 1-D chain")
    obs = _observable(args.observable, chain.d)
    max_r = int(args.max_r)
    if max_r < 1 or max_r >= chain.n:
        raise CliError(f"max_r must be in 1..{chain.n - 1}")
    site = int(args.site) if args.site is not None else max(0, (chain.n - max_r) // 2)
    if site + max_r >= chain.n:
        raise CliError(f"site {site} + max_r {max_r} exceeds chain length {chain.n}")

    state, _ = to_statevector(chain, normalize=True)
    mean = expectation(state, obs, site)
    var = expectation(state, obs @ obs, site) - mean**2
    rows = [{"r": 0, "correlator": float(var), "ratio": None}]
    prev = var
    for r in range(1, max_r + 1):
        corr = two_point_correlation(chain, obs, site, r)
        ratio = abs(corr) / abs(prev) if abs(prev) > 1e-30 else None
        rows.append({"r": r, "correlator": float(corr), "ratio": ratio})
        prev = corr

    doc = {
        "command": "correlations",
        "resource": spec.to_json(),
        "observable": args.observable,
        "site": site,
        "rows": rows,
    }
    csv_rows = [["r", "correlator", "ratio"]] + [
        [row["r"], row["correlator"], "" if row["ratio"] is None else row["ratio"]]
        for row in rows
    ]
    text = _table_lines(
        ["r", "correlator", "ratio"],
        [
            [
                row["r"],
                f"{row['correlator']:+.9e}",
                "-" if row["ratio"] is None else f"{row['ratio']:.6f}",
            ]
            for row in rows
        ],
    )

    def figure(path: str) -> None:
        from . import plots

        plots.correlation_figure(rows, path)

    return doc, csv_rows, figure, text


# ---------------------------------------------------------------------------
# Subcommand: group
# ---------------------------------------------------------------------------


def cmd_group(args: argparse.Namespace):
    names = [g.strip() for g in args.generators.split(",") if g.strip()]
    if not names:
        raise CliError("no generators given")
    mats = [named_gate(n) for n in names]
    group = closure(mats)
    elements = list(group.elements.values())
    index_of = {el.key: i for i, el in enumerate(elements)}

    def word_product(word: tuple[int, ...]) -> np.ndarray:
        acc = np.eye(2, dtype=complex)
        for g in word:
            acc = acc @ mats[g]
        return acc

    element_docs = []
    for i, el in enumerate(elements):
        verified = proportional_up_to_phase(word_product(el.word), el.rep, 1e-9) is not None
        element_docs.append(
            {
                "index": i,
                "word": [names[g] for g in el.word],
                "matrix": matrix_json(el.rep),
                "verified": bool(verified),
            }
        )
    cayley = [
        [index_of[group.find(a.rep @ b.rep).key] for b in elements]  # type: ignore[union-attr]
        for a in elements
    ]

    doc = {
        "command": "group",
        "generators": names,
        "order": group.order,
        "identity": index_of[group.identity_key],
        "elements": element_docs,
        "cayley": cayley,
    }
    csv_rows = [["index", "word", "verified"]] + [
        [e["index"], " ".join(e["word"]) or "I", e["verified"]] for e in element_docs
    ]
    text = [f"order {group.order}, generators {', '.join(names)}"] + _table_lines(
        ["index", "word", "verified"],
        [[e["index"], " ".join(e["word"]) or "I", e["verified"]] for e in element_docs],
    )

    def figure(path: str) -> None:
        from . import plots

        plots.cayley_figure(cayley, path)

    return doc, csv_rows, figure, text


# ---------------------------------------------------------------------------
# Subcommand: run
# ---------------------------------------------------------------------------


def _record_csv(records: Sequence[ProtocolRecord], var_order: Sequence[str]) -> CsvRows:
    header = ["branch", *var_order, "probability", "attempts", "byproduct"]
    rows: CsvRows = [header]
    for i, rec in enumerate(records):
        rows.append(
            [i]
            + [rec.outcomes.get(v, "") for v in var_order]
            + [rec.probability, rec.attempts, " ".join(rec.byproduct)]
        )
    return rows


def _site_key_order(outcomes: dict[str, int]) -> list[str]:
    def sort_key(name: str):
        if "," in name:
            r, c = name.split(",")
            return (0, int(c), int(r))
        return (1, 0, 0) if name != "success" else (2, 0, 0)

    return sorted(outcomes, key=sort_key)


def _parse_lattice_outcomes(text: str) -> dict[str, int] | str:
    if text.strip() == "designated":
        return "designated"
    if os.path.isfile(text):
        with open(text, "r", encoding="utf-8") as fh:
            text = fh.read()
    doc = json.loads(text)
    if not isinstance(doc, dict):
        raise CliError("lattice outcomes must be a JSON object of 'row,col': bit")
    return {str(k): int(v) for k, v in doc.items()}


def _run_lattice(args: argparse.Namespace, params: dict[str, Any]):
    cols, anchor = int(params.get("cols", 9)), int(params.get("anchor", 1))
    if args.resource:
        spec = parse_resource_spec(args.resource)
        if spec.family != "weighted_graph":
            raise CliError("logical-cz runs on a weighted_graph resource")
        rows_ = int(spec.params.get("rows", 3))
        if rows_ != 3:
            raise CliError("the windowed protocol is defined on 3 rows")
        cols = int(spec.params.get("cols", cols))
    meta = {"builtin": "logical-cz", "cols": cols, "anchor": anchor}

    if args.mode == "enumerate":
        scan = branch_probability_scan(cols=cols, anchor=anchor)
        doc = {"command": "run", "pattern": meta, "mode": "enumerate", "scan": scan}
        csv_rows: CsvRows = [["class", "mass", "branches", "attempt"]] + [
            [name, v["mass"], v["branches"], v["attempt"]]
            for name, v in scan["classes"].items()
        ]
        text = _table_lines(
            ["class", "mass", "branches"],
            [
                [name, f"{v['mass']:.9e}", v["branches"]]
                for name, v in scan["classes"].items()
            ],
        ) + [f"total {scan['total']:.12f}  peak merged states {scan['peak_states']}"]

        def figure(path: str) -> None:
            from . import plots

            plots.scan_figure(scan["classes"], path)

        return doc, csv_rows, figure, text

    sim = WgsFrontierSim(cols=cols)
    forced = None
    if args.mode == "force":
        forced = "designated" if args.outcomes is None else _parse_lattice_outcomes(args.outcomes)
    rec = logical_cz(
        sim,
        anchor=anchor,
        mode=args.mode,
        seed=args.seed,
        outcomes=forced,
        tol=args.tol,
    )
    doc = {
        "command": "run",
        "pattern": meta,
        "mode": args.mode,
        "seed": args.seed,
        "record": rec.to_json(),
    }
    order = _site_key_order(rec.outcomes)
    csv_rows = _record_csv([rec], order)
    text = [
        f"success {rec.outcomes['success']}  attempts {rec.attempts}  "
        f"probability {rec.probability:.6e}",
        "byproduct " + (" ".join(rec.byproduct) or "I"),
    ]

    def figure(path: str) -> None:
        from . import plots

        plots.operator_figure(rec.to_json()["realized_op"], path)

    return doc, csv_rows, figure, text


def _run_chain(args: argparse.Namespace, pattern: MeasurementPattern, meta: dict[str, Any],
               chain: MpsChain):
    outcomes = None
    if args.mode == "force":
        if args.outcomes is None:
            raise CliError("force mode needs --outcomes")
        if args.outcomes.strip() == "designated":
            if "designated" not in meta:
                raise CliError("designated outcomes are only defined for compiled patterns")
            outcomes = meta["designated"]
        else:
            outcomes = [int(x) for x in args.outcomes.split(",")]
    result = run_pattern(
        chain, pattern, mode=args.mode, seed=args.seed, outcomes=outcomes, tol=args.tol
    )
    records = result if isinstance(result, list) else [result]
    doc = {
        "command": "run",
        "pattern": {k: v for k, v in meta.items() if k != "designated"},
        "mode": args.mode,
        "seed": args.seed,
        "records": [r.to_json() for r in records],
    }
    if args.mode == "enumerate":
        doc["total_probability"] = float(sum(r.probability for r in records))
    var_order = list(pattern.outcome_vars)
    csv_rows = _record_csv(records, var_order)
    text = _table_lines(
        ["branch", "outcomes", "probability", "byproduct"],
        [
            [
                i,
                "".join(str(r.outcomes[v]) for v in var_order),
                f"{r.probability:.6e}",
                " ".join(r.byproduct) or "I",
            ]
            for i, r in enumerate(records)
        ],
    )
    if args.mode == "enumerate":
        text.append(f"total probability {doc['total_probability']:.12f}")

    def figure(path: str) -> None:
        from . import plots

        if len(records) > 1:
            plots.branch_figure([r.probability for r in records], path)
        else:
            plots.operator_figure(records[0].to_json()["realized_op"], path)

    return doc, csv_rows, figure, text


def cmd_run(args: argparse.Namespace):
    if args.mode == "sample" and args.seed is None:
        raise CliError("sample mode requires --seed")
    text = args.pattern
    if os.path.isfile(text):
        with open(text, "r", encoding="utf-8") as fh:
            pattern = MeasurementPattern.loads(fh.read())
        if not args.resource:
            raise CliError("pattern files need --resource to run on")
        chain = build_resource(parse_resource_spec(args.resource))
        if not isinstance(chain, MpsChain):
            raise CliError("pattern files run on 1-D chain resources")
        meta = {"file": text, "steps": len(pattern.steps)}
        return _run_chain(args, pattern, meta, chain)

    name, _, rest = text.partition(":")
    name = name.strip()
    if name == "logical-cz":
        return _run_lattice(args, _parse_kv(rest))
    if name == "single-qubit":
        params = _parse_kv(rest)
        if "target" not in params:
            raise CliError("single-qubit needs target=... (e.g. target=S(0.7))")
        family = str(params.get("family", "aklt"))
        if family == "chain":
            family = "correlation_chain"
        chain = None
        resource_spec = None
        if args.resource:
            resource_spec = parse_resource_spec(args.resource)
            chain = build_resource(resource_spec)
            if not isinstance(chain, MpsChain):
                raise CliError("single-qubit compilation runs on a 1-D chain")
        k = params.get("k")
        if k is None and family == "correlation_chain":
            if resource_spec is not None and "k" in resource_spec.params:
                k = int(resource_spec.params["k"])
            else:
                raise CliError("correlation_chain compilation needs k=...")
        compiled = compile_single_qubit(_parse_target(str(params["target"])), family, k)
        steps = len(compiled.pattern.steps)
        if chain is None:
            # two unmeasured tail sites so branch statistics are bulk-like
            # (hard chain boundaries can zero out ladder branches otherwise)
            n = steps + 2
            chain = (
                aklt_type_chain(n)
                if family == "aklt"
                else correlation_chain(int(k), n)  # type: ignore[arg-type]
            )
        elif chain.n < max(1, steps):
            raise CliError(f"resource has {chain.n} sites; pattern needs {steps}")
        meta = {
            "builtin": "single-qubit",
            "family": family,
            "target": matrix_json(compiled.target),
            "steps": steps,
            "sites": chain.n,
            "designated_byproduct": list(compiled.designated_byproduct),
            "designated": list(compiled.designated_outcomes),
        }
        if compiled.k is not None:
            meta["k"] = compiled.k
        return _run_chain(args, compiled.pattern, meta, chain)
    raise CliError(f"pattern {text!r} is neither a file nor a known builtin")


# ---------------------------------------------------------------------------
# Subcommand: encoded
# ---------------------------------------------------------------------------


def _first_branch_bits(spec: EncodedResourceSpec, t: int) -> list[int]:
    """Computational bits of the first nonzero branch of T^t|φ⟩, site order."""
    comp = encoded_component(spec, t)
    idx = int(np.flatnonzero(np.abs(comp.amps) > 1e-12)[0])
    n = spec.n_qubits
    return [(idx >> (n - 1 - s)) & 1 for s in range(n)]


def _parse_psi(text: str | None) -> tuple[complex, complex]:
    if text is None:
        return (1 / np.sqrt(2), 1 / np.sqrt(2))
    vals = [float(x) for x in text.split(",")]
    if len(vals) == 2:
        a, b = complex(vals[0]), complex(vals[1])
    elif len(vals) == 4:
        a, b = complex(vals[0], vals[1]), complex(vals[2], vals[3])
    else:
        raise CliError("--psi takes 2 real or 4 re,im components")
    norm = np.hypot(abs(a), abs(b))
    if norm < 1e-12:
        raise CliError("psi must be a nonzero state")
    return a / norm, b / norm


def cmd_encoded(args: argparse.Namespace):
    spec = EncodedResourceSpec(k=int(args.k), m=int(args.m))
    requested = [a.strip() for a in args.analyses.split(",") if a.strip()]
    known = ("entropy", "decode", "discriminate")
    for a in requested:
        if a not in known:
            raise CliError(f"unknown analysis {a!r} (known: {', '.join(known)})")

    analyses: dict[str, Any] = {}
    csv_rows: CsvRows = []
    text: list[str] = [f"encoded resource k={spec.k} m={spec.m} ({spec.n_qubits} qubits)"]
    figure: FigureFn | None = None

    if "entropy" in requested:
        state = encoded_resource(spec)
        z_bits = [entropy_z(state, s) for s in range(spec.n_qubits)]
        vn_bits = [entropy_vn(reduced_density(state, [s])) for s in range(spec.n_qubits)]
        reference = binary_entropy(3.0 / (4 * spec.k + 2))
        analyses["entropy"] = {
            "per_site_z": z_bits,
            "per_site_vn": vn_bits,
            "reference_z": reference,
            "spread_z": float(max(z_bits) - min(z_bits)),
        }
        csv_rows += [["site", "entropy_z", "entropy_vn"]] + [
            [s, z_bits[s], vn_bits[s]] for s in range(spec.n_qubits)
        ] + [[]]
        text += [f"S_Z per site ≈ {z_bits[0]:.9f} (reference {reference:.9f})"]

        def figure(path: str) -> None:  # noqa: F811 - entropy panel is the report figure
            from . import plots

            plots.entropy_figure(z_bits, vn_bits, path)

    if "decode" in requested:
        table = []
        for t in range(spec.block):
            bits = _first_branch_bits(spec, t)
            block_bits = [bits[s] for s in range(spec.block)]
            table.append({"t": t, "decoded": decode_marker(block_bits, spec.k)})
        decoded = [row["decoded"] for row in table]
        analyses["decode"] = {
            "table": table,
            "bijection": sorted(decoded) == list(range(spec.block)),
        }
        csv_rows += [["t", "decoded"]] + [[row["t"], row["decoded"]] for row in table] + [[]]
        text += _table_lines(["t", "decoded"], [[r["t"], r["decoded"]] for r in table])

    if "discriminate" in requested:
        a, b = _parse_psi(args.psi)
        comp = encoded_component(spec, 0)
        branches = walgate_discriminate(comp, spec.codeword_sites(0), (a, b))
        p_logical = [0.0, 0.0]
        for br in branches:
            p_logical[br.logical_outcome] += br.probability
        reference = logical_born_probability(cluster_state(spec.m, spec.base_edges), 0, (a, b))
        analyses["discriminate"] = {
            "psi": [[a.real, a.imag], [b.real, b.imag]],
            "branches": len(branches),
            "p_logical": p_logical,
            "born_reference": float(reference),
            "deviation": float(abs(p_logical[0] - reference)),
        }
        csv_rows += [["branch", "outcomes", "probability", "logical"]] + [
            [i, "".join(str(o) for _, _, o in br.transcript), br.probability, br.logical_outcome]
            for i, br in enumerate(branches)
        ] + [[]]
        text += [
            f"P(logical 0) = {p_logical[0]:.9f}  Born reference {reference:.9f}",
            f"branches {len(branches)}",
        ]

    if not analyses:
        raise CliError("no analyses requested")
    if csv_rows and not csv_rows[-1]:
        csv_rows.pop()
    doc = {"command": "encoded", "k": spec.k, "m": spec.m, "analyses": analyses}
    return doc, csv_rows, figure, text


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------


def _write_report(outdir: str, doc: Any, csv_rows: CsvRows, figure: FigureFn | None) -> None:
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "report.json"), "w", encoding="utf-8") as fh:
        fh.write(dumps_canonical(doc) + "\n")
    with open(os.path.join(outdir, "report.csv"), "w", encoding="utf-8", newline="") as fh:
        csv.writer(fh).writerows(csv_rows)
    if figure is not None:
        figure(os.path.join(outdir, "report.png"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="corrspace",
        description=__doc__.splitlines()[0],
    )
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("correlations", help="two-point correlator table for a chain resource")
    p.add_argument("--resource", required=True, help="e.g. correlation_chain:k=3,n=12")
    p.add_argument("--observable", default="Z")
    p.add_argument("--max-r", type=int, default=5, dest="max_r")
    p.add_argument("--site", type=int, default=None, help="left site (default: bulk)")
    p.set_defaults(fn=cmd_correlations)

    p = sub.add_parser("group", help="close a generator set and dump the projective group")
    p.add_argument("--generators", required=True, help="comma-separated names, e.g. H,Z or G3,Z")
    p.set_defaults(fn=cmd_group)

    p = sub.add_parser("run", help="run a measurement pattern or builtin protocol")
    p.add_argument("--resource", default=None)
    p.add_argument(
        "--pattern",
        required=True,
        help="pattern JSON file, 'single-qubit:target=...,family=...', or 'logical-cz[:cols=9,anchor=1]'",
    )
    p.add_argument("--mode", choices=("sample", "force", "enumerate"), default="enumerate")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument(
        "--outcomes",
        default=None,
        help="forced outcomes: comma bits for chains, JSON/'designated' for the lattice",
    )
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("encoded", help="entropy/decode/discrimination report for encoded blocks")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--analyses", default="entropy,decode,discriminate")
    p.add_argument("--psi", default=None, help="logical state for discrimination (default |+>)")
    p.set_defaults(fn=cmd_encoded)

    for p in sub.choices.values():
        p.add_argument("--out", default=None, help="directory for report.json/.csv/.png")
        p.add_argument("--tol", type=float, default=1e-9)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        doc, csv_rows, figure, text = args.fn(args)
        if args.out:
            _write_report(args.out, doc, csv_rows, figure)
    except (ValueError, LookupError, OSError, RuntimeError, ArithmeticError) as exc:
        record = {"error": {"type": type(exc).__name__, "message": str(exc)}}
        print(dumps_canonical(record))
        return 2
    print(dumps_canonical(doc))
    for line in text:
        print(line, file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
