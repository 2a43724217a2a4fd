"""Command line front end.

Every subcommand takes ``--seed``; all randomness is derived from it through
``derive_seed`` (trial t uses ``derive_seed(seed, t)``; mapping and pattern
generators use fixed stream tags below), so runs are byte-reproducible.

Exit status: 0 on success or a completed scan, 1 when a pipeline or
resampling run fails (or no certificate is found), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import embedder, graphs, lll, mappings, oracle
from ._prf import derive_seed, parse_seed

OUTPUT_DIR_ENV = "SETMAP_OUTPUT_DIR"

PATTERN_STREAM = 0x70617474
MAPPING_STREAM = 0x6D617070

CSV_COLUMNS = (
    "seed", "N", "C", "ell", "retries", "success",
    "rule_a_rejects", "rule_b_rejects", "rule_c_rejects",
    "prop1_ok", "prop2_max_ratio", "prop3_max_ratio",
)


class UsageError(Exception):
    pass


@dataclass
class RunSpec:
    subcommand: str
    pattern: str | None = None
    mapping: str | None = None
    N: int | None = None
    C: float | None = None
    ell: int = 2
    a: int = 0
    k: int = 2
    seed: int = 0
    trials: int = 1
    max_retries: int = 20
    out: str | None = None
    format: str = "json"
    extra: dict = field(default_factory=dict)


# --- sources --------------------------------------------------------------

def load_pattern(source: str, seed: int) -> graphs.Pattern:
    path = Path(source)
    if path.is_file():
        try:
            return graphs.parse_pattern(path.read_text())
        except graphs.PatternError as exc:
            raise UsageError(f"{source}: {exc}") from None
    try:
        kind, params = graphs.parse_generator(source)
        pseed = int(params.pop("seed")) if "seed" in params else derive_seed(seed, PATTERN_STREAM)
        return graphs.generate(kind, params, pseed)
    except (graphs.PatternError, ValueError) as exc:
        raise UsageError(f"pattern {source!r}: {exc}") from None


def host_size(p: graphs.Pattern, N: int | None, C: float | None, ell: int) -> int:
    if N is not None:
        return N
    if C is None:
        raise UsageError("give --N or --C")
    return math.ceil(C * ell * p.m)


def load_mapping(source: str, N: int | None, k: int, ell: int, seed: int) -> mappings.SetMapping:
    """File path, or ``random:<kind>[,dense|,lazy]`` with kind disjoint / disjoint-edge / incident-edge."""
    path = Path(source)
    if path.is_file():
        try:
            f = mappings.parse_mapping(path.read_text())
        except mappings.MappingError as exc:
            raise UsageError(f"{source}: {exc}") from None
        if N is not None and f.N != N:
            raise UsageError(f"mapping file {source} has N={f.N} but the run asks for N={N}")
        if f.k != k:
            raise UsageError(f"mapping file {source} has k={f.k} but the pattern has k={k}")
        return f
    if not source.startswith("random:") and source != "auto":
        raise UsageError(f"mapping {source!r} is neither a file nor random:<kind>")
    if N is None:
        raise UsageError("a generated mapping needs --N or --C")
    kind, *flags = (source.split(":", 1)[1] if source != "auto" else "disjoint").split(",")
    dense = True if "dense" in flags else False if "lazy" in flags or source == "auto" else None
    try:
        if kind == "disjoint":
            return mappings.gen_uniform_disjoint(N, k, ell, seed, dense)
        if kind == "disjoint-edge":
            return mappings.gen_random_disjoint_edge(N, seed, dense)
        if kind == "incident-edge":
            return mappings.gen_random_incident_edge(N, seed, dense)
    except mappings.MappingError as exc:
        raise UsageError(str(exc)) from None
    raise UsageError(f"unknown mapping generator {kind!r}")


def _out_path(out: str) -> Path:
    path = Path(out)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not path.is_absolute():
        path = Path(base) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_output(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        _out_path(out).write_text(text)


def _json(doc) -> str:
    return json.dumps(doc, indent=2, default=_jsonable) + "\n"


def _jsonable(obj):
    if hasattr(obj, "item"):
        return obj.item()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def _csv(rows: list[dict], columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow(["" if r.get(c) is None else r.get(c) for c in columns])
    return buf.getvalue()


def emit_csv(report: dict) -> str:
    """One row per embed trial in the fixed CSV_COLUMNS order."""
    rows = []
    for t in report["trials"]:
        rej = t.get("rejections") or {}
        rows.append({
            "seed": t["seed"], "N": t["N"], "C": t["C"], "ell": t["ell"],
            "retries": t["retries"], "success": t["success"],
            "rule_a_rejects": rej.get("a"), "rule_b_rejects": rej.get("b"), "rule_c_rejects": rej.get("c"),
            "prop1_ok": t.get("prop1_ok"),
            "prop2_max_ratio": t.get("prop2_max_ratio"),
            "prop3_max_ratio": t.get("prop3_max_ratio"),
        })
    return _csv(rows, CSV_COLUMNS)


# --- subcommands ----------------------------------------------------------

def cmd_embed(spec: RunSpec) -> tuple[dict, int]:
    p = load_pattern(spec.pattern, spec.seed)
    N = host_size(p, spec.N, spec.C, spec.ell)
    fixed = spec.extra.get("fixed_mapping", False) or Path(spec.mapping).is_file()
    shared = load_mapping(spec.mapping, N, 2, spec.ell, derive_seed(spec.seed, MAPPING_STREAM)) if fixed else None
    if shared is not None and (shared.a != 0 or shared.ell != spec.ell):
        raise UsageError(f"mapping has ell={shared.ell}, a={shared.a}; embed needs ell={spec.ell}, a=0")
    trials = []
    failures = 0
    for t in range(spec.trials):
        tseed = derive_seed(spec.seed, t)
        f = shared or load_mapping(spec.mapping, N, 2, spec.ell, derive_seed(tseed, MAPPING_STREAM))
        cfg = embedder.PipelineConfig(
            C=N / (spec.ell * p.m), ell=spec.ell, max_retries=spec.max_retries, seed=tseed,
            diagnostics=not spec.extra.get("no_diagnostics", False),
            enforce_size_property=spec.extra.get("enforce_size_property", False),
        )
        try:
            emb, report = embedder.embed_pipeline(p, f, cfg)
        except embedder.RetriesExhausted as exc:
            report = exc.report
            failures += 1
        except embedder.HostTooSmall as exc:
            raise UsageError(str(exc)) from None
        trials.append(report.to_dict())
    ok = [t for t in trials if t["success"]]
    hist: dict[str, int] = {}
    for t in ok:
        hist[str(t["retries"])] = hist.get(str(t["retries"]), 0) + 1
    summary = {
        "pattern_n": p.n, "pattern_m": p.m, "N": N,
        "trials": spec.trials, "successes": len(ok),
        "success_rate": len(ok) / spec.trials if spec.trials else None,
        "mean_retries": sum(t["retries"] for t in ok) / len(ok) if ok else None,
        "retry_histogram": dict(sorted(hist.items(), key=lambda kv: int(kv[0]))),
    }
    return {"spec": asdict(spec), "summary": summary, "trials": trials}, 1 if failures else 0


def cmd_lll(spec: RunSpec) -> tuple[dict, int]:
    p = load_pattern(spec.pattern, spec.seed)
    try:
        N_values = spec.extra.get("N_scan") or [spec.N or lll.required_host_size(p)]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rows = []
    failures = 0
    for N in N_values:
        p_val, d_val, holds = lll.lll_condition(p, N)
        for t in range(spec.trials):
            tseed = derive_seed(spec.seed, N, t)
            if spec.mapping and spec.mapping != "auto":
                f = load_mapping(spec.mapping, N, p.k, p.k, derive_seed(tseed, MAPPING_STREAM))
            else:
                f = None
            try:
                problem = lll.make_problem(p, N, seed=tseed, f=f)
            except ValueError as exc:
                raise UsageError(str(exc)) from None
            row = {"N": N, "trial": t, "seed": tseed, "p": p_val, "d": d_val, "lll_condition": holds,
                   "events": problem.event_count}
            try:
                res = lll.moser_tardos(problem, tseed, spec.extra.get("max_resamples"))
                clean = embedder.verify_clean(p, res.assignment, problem.f).clean
                row.update(success=True, resamples=res.resamples, histogram=res.histogram,
                           clean=clean, embedding=list(res.assignment))
            except lll.BudgetExhausted as exc:
                failures += 1
                row.update(success=False, resamples=exc.iterations, histogram=exc.result.histogram,
                           last_event=str(exc.last_event))
            rows.append(row)
    return {"spec": asdict(spec), "trials": rows}, 1 if failures else 0


def cmd_oracle(spec: RunSpec) -> tuple[dict, int]:
    p = load_pattern(spec.pattern, spec.seed)
    f = load_mapping(spec.mapping, spec.N, 2, spec.ell, derive_seed(spec.seed, MAPPING_STREAM))
    limits = dict(max_n=spec.extra.get("max_n", oracle.MAX_N), max_host=spec.extra.get("max_host", oracle.MAX_HOST))
    try:
        if spec.extra.get("search") == "f-free":
            res = oracle.find_f_free_copy(p, f, **limits)
        else:
            res = oracle.find_clean_copy(p, f, **limits)
    except (oracle.LimitExceeded, ValueError) as exc:
        raise UsageError(str(exc)) from None
    doc = {"spec": asdict(spec), "found": res.found, "embedding": list(res.phi) if res.found else None,
           "nodes": res.nodes}
    return doc, 0


def cmd_certify(spec: RunSpec) -> tuple[dict, int]:
    p = load_pattern(spec.pattern, spec.seed)
    try:
        cert = oracle.certify_lower_bound(
            p, spec.N, spec.extra["kind"], spec.trials, spec.seed, ell=spec.ell,
            max_n=spec.extra.get("max_n", oracle.MAX_N), max_host=spec.extra.get("max_host", oracle.MAX_HOST),
        )
    except (oracle.LimitExceeded, mappings.MappingError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    doc = {"spec": asdict(spec), "certified": cert is not None}
    if cert is not None:
        doc.update(kind=cert.kind, trial=cert.trial, mapping_seed=cert.seed, nodes=cert.nodes,
                   claim=f"{cert.kind.split('_')[0]}(G) > {cert.N}")
        text = oracle.serialize_certificate(cert)
        if spec.out:
            write_output(text, spec.out)
            doc["certificate_file"] = spec.out
        else:
            doc["certificate"] = text
    return doc, 0 if cert is not None else 1


def cmd_scan(spec: RunSpec) -> tuple[dict, int]:
    p = load_pattern(spec.pattern, spec.seed)
    try:
        rows = oracle.scan_w(p, spec.extra["N_values"], spec.trials, spec.seed, ell=spec.ell,
                             max_n=spec.extra.get("max_n", oracle.MAX_N),
                             max_host=spec.extra.get("max_host", oracle.MAX_HOST))
    except (oracle.LimitExceeded, mappings.MappingError) as exc:
        raise UsageError(str(exc)) from None
    return {"spec": asdict(spec), "rows": rows}, 0


def cmd_measure(spec: RunSpec) -> tuple[dict, int]:
    p = load_pattern(spec.pattern, spec.seed)
    N = host_size(p, spec.N, spec.C, spec.ell)
    f = load_mapping(spec.mapping or "auto", N, 2, spec.ell, derive_seed(spec.seed, MAPPING_STREAM))
    cfg = embedder.PipelineConfig(C=N / (spec.ell * p.m), ell=spec.ell, seed=spec.seed)
    try:
        table = embedder.measure_properties(p, f, cfg, spec.extra.get("samples", 200))
    except embedder.HostTooSmall as exc:
        raise UsageError(str(exc)) from None
    doc = table.to_dict()
    return {"spec": asdict(spec), "N": N, **doc}, 0


def cmd_gen_graph(spec: RunSpec) -> tuple[str, int]:
    return graphs.serialize_pattern(load_pattern(spec.pattern, spec.seed)), 0


def cmd_gen_mapping(spec: RunSpec) -> tuple[str, int]:
    f = load_mapping(f"random:{spec.extra['kind']},dense", spec.N, spec.k, spec.ell, spec.seed)
    return mappings.serialize_mapping(f), 0


COMMANDS = {
    "embed": cmd_embed,
    "lll-embed": cmd_lll,
    "oracle": cmd_oracle,
    "certify": cmd_certify,
    "scan": cmd_scan,
    "measure": cmd_measure,
    "gen-graph": cmd_gen_graph,
    "gen-mapping": cmd_gen_mapping,
}


def _int_list(text: str) -> list[int]:
    if ":" in text:
        lo, hi = text.split(":")
        return list(range(int(lo), int(hi) + 1))
    return [int(t) for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="setmap", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="subcommand", required=True)

    def common(sp, pattern=True):
        if pattern:
            sp.add_argument("--pattern", required=True, help="pattern file or generator, e.g. clique:5")
        sp.add_argument("--seed", type=parse_seed, default=0, help="64-bit seed (decimal or 0x-hex)")
        sp.add_argument("--out", help="output file (relative paths go under $%s)" % OUTPUT_DIR_ENV)
        sp.add_argument("--format", choices=("json", "csv"), default="json")

    sp = sub.add_parser("embed", help="randomised block embedding")
    common(sp)
    sp.add_argument("--mapping", default="auto", help="mapping file, auto, or random:<kind>[,dense|,lazy]")
    sp.add_argument("--N", type=int)
    sp.add_argument("--C", type=float)
    sp.add_argument("--ell", type=int, default=2)
    sp.add_argument("--trials", type=int, default=1)
    sp.add_argument("--max-retries", type=int, default=20)
    sp.add_argument("--fixed-mapping", action="store_true", help="share one mapping across trials")
    sp.add_argument("--no-diagnostics", action="store_true")
    sp.add_argument("--enforce-size-property", action="store_true")

    sp = sub.add_parser("lll-embed", help="Moser-Tardos embedding")
    common(sp)
    sp.add_argument("--mapping", default="auto")
    sp.add_argument("--N", type=int)
    sp.add_argument("--N-scan", type=_int_list, help="comma list or lo:hi of host sizes")
    sp.add_argument("--trials", type=int, default=1)
    sp.add_argument("--max-resamples", type=int)

    sp = sub.add_parser("oracle", help="exhaustive clean / f-free search")
    common(sp)
    sp.add_argument("--mapping", required=True)
    sp.add_argument("--N", type=int)
    sp.add_argument("--ell", type=int, default=1)
    sp.add_argument("--search", choices=("clean", "f-free"), default="clean")
    sp.add_argument("--max-n", type=int, default=oracle.MAX_N)
    sp.add_argument("--max-host", type=int, default=oracle.MAX_HOST)

    sp = sub.add_parser("certify", help="search for a lower-bound certificate")
    common(sp)
    sp.add_argument("--N", type=int, required=True)
    sp.add_argument("--ell", type=int, default=1)
    sp.add_argument("--kind", choices=sorted(oracle.KINDS), default="w")
    sp.add_argument("--trials", type=int, default=1)
    sp.add_argument("--max-n", type=int, default=oracle.MAX_N)
    sp.add_argument("--max-host", type=int, default=oracle.MAX_HOST)

    sp = sub.add_parser("scan", help="clean-copy frequency over a range of N")
    common(sp)
    sp.add_argument("--N-range", type=_int_list, required=True, help="lo:hi (inclusive) or comma list")
    sp.add_argument("--ell", type=int, default=1)
    sp.add_argument("--trials", type=int, default=20)
    sp.add_argument("--max-n", type=int, default=oracle.MAX_N)
    sp.add_argument("--max-host", type=int, default=oracle.MAX_HOST)

    sp = sub.add_parser("measure", help="pool property satisfaction rates")
    common(sp)
    sp.add_argument("--mapping", default="auto")
    sp.add_argument("--N", type=int)
    sp.add_argument("--C", type=float, default=64.0)
    sp.add_argument("--ell", type=int, default=2)
    sp.add_argument("--samples", type=int, default=200)

    sp = sub.add_parser("gen-graph", help="write a generated pattern file")
    common(sp)

    sp = sub.add_parser("gen-mapping", help="write a dense random mapping file")
    common(sp, pattern=False)
    sp.add_argument("--N", type=int, required=True)
    sp.add_argument("--k", type=int, default=2)
    sp.add_argument("--ell", type=int, default=2)
    sp.add_argument("--kind", choices=("disjoint", "disjoint-edge", "incident-edge"), default="disjoint")
    return ap


def spec_from_args(args: argparse.Namespace) -> RunSpec:
    d = vars(args).copy()
    spec = RunSpec(subcommand=d.pop("subcommand"))
    for name in ("pattern", "mapping", "N", "C", "ell", "k", "seed", "trials", "max_retries", "out", "format"):
        if name in d:
            value = d.pop(name)
            if value is not None:
                setattr(spec, name, value)
    if "N_range" in d:
        d["N_values"] = d.pop("N_range")
    spec.extra = {k: v for k, v in sorted(d.items()) if v not in (None, False)}
    return spec


def run(spec: RunSpec) -> int:
    doc, status = COMMANDS[spec.subcommand](spec)
    if isinstance(doc, str):
        text = doc
    elif spec.format == "csv":
        if spec.subcommand == "embed":
            text = emit_csv(doc)
        else:
            rows = doc.get("trials") or doc.get("rows") or [doc]
            cols = list(dict.fromkeys(c for r in rows for c in r if c != "spec"))
            text = _csv(rows, cols)
    else:
        text = _json(doc)
    # certify writes its certificate to --out itself; the summary goes to stdout
    write_output(text, None if spec.subcommand == "certify" else spec.out)
    return status


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(spec_from_args(args))
    except UsageError as exc:
        print(f"setmap {args.subcommand}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
