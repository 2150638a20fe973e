"""Command-line front end for the whole pipeline.

Subcommands: ``extract``, ``embed``, ``search``, ``fuse``, ``eval``,
``rank``, ``stats``, ``review``, ``run``, ``inspect``. Every subcommand
writes machine-readable output (files and/or a JSON line on stdout) before
any human-readable summary, and exits 0 on success or 2 on any error.

A full pipeline can also be driven from one declarative YAML/JSON config
(``run``); command-line overrides win on conflict. Identical configs
(including the seed) produce byte-identical output files, regardless of
worker counts.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from pathlib import Path

import yaml

from . import corpus as corpus_mod
from . import datasets as datasets_mod
from . import evalkit, fusion, statlab
from .embed import EmbedderSpec, MockEmbedder, RemoteEmbedder, load_vectors, store_vectors
from .errors import CloneSiftError
from .search import (
    CandidateList,
    CloneSearchIndex,
    SearchParams,
    ann_recall,
    load_candidates,
    store_candidates,
)

ANN_GATE_K = 10
ANN_GATE_FLOOR = 0.95


def _emit(record: dict) -> None:
    """Machine-readable result line, written before any summary text."""
    print(json.dumps(record, sort_keys=True))


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 2


# --- extract -----------------------------------------------------------------

def _cmd_extract(args) -> int:
    diagnostics: list[str] = []
    units: list[corpus_mod.FunctionUnit] = []
    for raw in args.paths:
        path = Path(raw)
        if not path.exists():
            return _fail(f"no such path: {path}")
        files = sorted(p for p in path.rglob("*") if p.is_file()) if path.is_dir() else [path]
        for file_path in files:
            try:
                text = file_path.read_text(encoding="utf-8")
            except UnicodeDecodeError:
                diagnostics.append(f"{file_path}: not UTF-8, skipped")
                continue
            rel = file_path.as_posix()
            root = Path(args.relative_to).resolve() if args.relative_to else None
            if root is not None:
                try:
                    rel = file_path.resolve().relative_to(root).as_posix()
                except ValueError:
                    pass
            units.extend(
                corpus_mod.extract_functions(text, rel, args.lang, diagnostics=diagnostics)
            )
    kept = corpus_mod.apply_minloc(units, args.minloc)
    manifest = corpus_mod.CorpusManifest(
        label=args.label, language=args.lang, units=tuple(kept), minloc_applied=args.minloc
    )
    corpus_mod.store_manifest(manifest, args.out)
    histogram: dict[str, int] = {}
    for unit in kept:
        bucket = f"{(unit.loc // 10) * 10}-{(unit.loc // 10) * 10 + 9}"
        histogram[bucket] = histogram.get(bucket, 0) + 1
    _emit({
        "command": "extract", "units": len(kept), "discarded_below_minloc":
        len(units) - len(kept), "out": str(args.out), "diagnostics": diagnostics,
    })
    print(f"{len(kept)} units -> {args.out}")
    for bucket in sorted(histogram, key=lambda b: int(b.split("-")[0])):
        print(f"  loc {bucket:>9}: {histogram[bucket]}")
    for note in diagnostics:
        print(f"  note: {note}", file=sys.stderr)
    return 0


# --- embed -------------------------------------------------------------------

def _cmd_embed(args) -> int:
    manifest = corpus_mod.load_manifest(args.manifest)
    endpoint = os.environ.get("CLONESIFT_ENDPOINT", args.endpoint)
    spec = EmbedderSpec(
        backend=args.backend, model_id=args.model, dimension=args.dim,
        code_length=args.code_length, seed=args.seed, endpoint=endpoint,
    )
    if spec.backend == "mock":
        embedder = MockEmbedder(
            model_id=spec.model_id, dimension=spec.dimension,
            code_length=spec.code_length, seed=spec.seed, workers=args.workers,
        )
        records = embedder.transform(manifest.units)
        normalized = True
    elif spec.backend == "remote":
        embedder = RemoteEmbedder(
            endpoint=spec.endpoint, model_id=spec.model_id,
            dimension=spec.dimension, code_length=spec.code_length,
        )
        records = embedder.transform(manifest.units)
        normalized = False
    else:
        return _fail("backend 'file' means vectors already exist; nothing to embed")
    store_vectors(records, args.out, normalized=normalized, encoding=args.encoding)
    _emit({"command": "embed", "model_id": spec.model_id, "records": len(records),
           "dimension": spec.dimension, "out": str(args.out)})
    print(f"{len(records)} vectors ({spec.model_id}, dim {spec.dimension}) -> {args.out}")
    return 0


# --- search ------------------------------------------------------------------

def _load_units_for(vector_path_arg, manifest_path) -> corpus_mod.CorpusManifest:
    return corpus_mod.load_manifest(manifest_path)


def _cmd_search(args) -> int:
    records = load_vectors(args.vectors)
    manifest = corpus_mod.load_manifest(args.manifest)
    top_ks = sorted(int(k) for k in str(args.top_k).split(","))
    params = SearchParams(
        top_n_class=args.top_n, similarity_threshold=args.threshold,
        global_top_k=top_ks[-1], metric="cosine", backend=args.backend,
    )
    index = CloneSearchIndex(
        backend=args.backend, m=args.graph_m,
        ef_construction=args.ef_construction, ef_search=args.ef_search,
        random_state=args.seed,
    ).fit(records, manifest)
    if args.against:
        query_records = load_vectors(args.against_vectors or args.vectors)
        query_manifest = corpus_mod.load_manifest(args.against)
        result = index.search_from(query_records, query_manifest, params)
    else:
        result = index.self_search(params)

    gate: float | None = None
    if args.backend == "approximate":
        exact = CloneSearchIndex(backend="exact").fit(records, manifest)
        if args.against:
            exact_list = exact.search_from(query_records, query_manifest,
                                           SearchParams(**{**params.to_dict(), "backend": "exact"}))
        else:
            exact_list = exact.self_search(SearchParams(**{**params.to_dict(), "backend": "exact"}))
        approx_cmp = CandidateList(result.model_id,
                                   SearchParams(**{**params.to_dict(), "backend": "exact"}),
                                   result.items)
        gate = ann_recall(exact_list, approx_cmp, ANN_GATE_K)

    outputs = []
    for k in top_ks:
        out = Path(args.out if len(top_ks) == 1 else f"{args.out}.top{k}")
        store_candidates(result.truncated(k), out)
        outputs.append(str(out))
    _emit({"command": "search", "model_id": result.model_id, "candidates": len(result),
           "outputs": outputs, "ann_recall_gate": gate})
    print(f"{len(result)} candidates ({result.model_id}) -> {', '.join(outputs)}")
    if gate is not None:
        print(f"approximate-backend gate: recall@{ANN_GATE_K} vs exact = {gate:.3f}")
        if gate < ANN_GATE_FLOOR and not args.force:
            return _fail(
                f"approximate backend failed the quality gate "
                f"({gate:.3f} < {ANN_GATE_FLOOR}); re-run with --force to keep the output"
            )
    return 0


# --- fuse --------------------------------------------------------------------

def _cmd_fuse(args) -> int:
    if len(args.inputs) < 2:
        return _fail("fusion needs at least two candidate-list files")
    lists = [load_candidates(p)[0] for p in args.inputs]
    norm = fusion.Normalization(kind=args.norm, rrf_k=args.rrf_k)
    agg = fusion.Aggregation(kind=args.agg)
    normalized = [fusion.normalize(cl, norm) for cl in lists]
    fused = fusion.fuse(normalized, agg, global_top_k=args.top_k,
                        method=fusion.method_name(norm, agg))
    fusion.store_fused(fused, args.out)
    _emit({"command": "fuse", "method": fused.method, "sources": list(fused.source_models),
           "items": len(fused), "out": str(args.out)})
    print(f"{len(fused)} fused candidates [{fused.method}] -> {args.out}")
    return 0


# --- eval --------------------------------------------------------------------

def _load_any_list(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        header = json.loads(fh.readline())
    if "method" in header:
        return fusion.load_fused(path)
    return load_candidates(path)[0]


def _cmd_eval(args) -> int:
    if args.what == "precision":
        labels = []
        with open(args.labels, "r", encoding="utf-8", newline="") as fh:
            for row in csv.reader(fh):
                if row:
                    labels.append(row[-2] if len(row) >= 2 and row[-2] in ("TP", "FP") else row[-1])
        value = evalkit.precision(labels)
        _emit({"command": "eval", "metric": "precision", "n": len(labels), "value": value})
        print(f"precision over {len(labels)} judgments: {value:.2f}%")
        return 0

    gt = evalkit.load_ground_truth(args.truth)
    candidates = _load_any_list(args.candidates)
    if args.what == "recall":
        cutoffs = sorted(int(k) for k in str(args.cutoffs).split(","))
        report = evalkit.recall_at(candidates, gt, cutoffs, mode=args.match,
                                   theta=args.overlap)
        _emit({
            "command": "eval", "metric": "recall",
            "recall_at": {str(k): round(report.recall_at[k], 2) for k in report.cutoffs},
            "average": round(report.average, 2),
        })
        headers = [f"Recall@{k}" for k in report.cutoffs] + ["Avg. Recall"]
        row = [report.recall_at[k] for k in report.cutoffs] + [report.average]
        print(evalkit.render_table(headers, [row]))
        return 0

    per_type, average = evalkit.typed_recall(candidates, gt, mode=args.match,
                                             theta=args.overlap)
    _emit({
        "command": "eval", "metric": "typed-recall",
        "per_type": {t: round(v, 2) for t, v in per_type.items()},
        "average": round(average, 2),
    })
    headers = list(per_type.keys()) + ["Avg. Recall"]
    print(evalkit.render_table(headers, [list(per_type.values()) + [average]]))
    return 0


# --- rank --------------------------------------------------------------------

def _cmd_rank(args) -> int:
    ranks_by_dataset: dict[str, dict[str, int]] = {}
    if args.bundled:
        for dataset in datasets_mod.DATASETS:
            ranks_by_dataset[dataset] = evalkit.dense_rank(
                datasets_mod.average_recalls(dataset)
            )
    else:
        for entry in args.reports:
            name, _, path = entry.partition("=")
            if not path:
                return _fail(f"--reports entries look like dataset=path, got {entry!r}")
            with open(path, "r", encoding="utf-8") as fh:
                averages = {m: round(float(v), 2) for m, v in json.load(fh).items()}
            ranks_by_dataset[name] = evalkit.dense_rank(averages)
    table = evalkit.borda(ranks_by_dataset)
    _emit({"command": "rank", "table": table.rows()})
    headers = ["Model"] + [f"{d} rank (borda)" for d in table.datasets] + [
        "Total", "Rank st.dev"]
    rows = []
    for row in table.rows():
        rows.append(
            [row["model"]]
            + [f"{row['ranks'][d]} ({row['borda'][d]})" for d in table.datasets]
            + [row["total"], row["rank_stdev"]]
        )
    print(evalkit.render_table(headers, rows))
    return 0


# --- stats -------------------------------------------------------------------

def _read_pairs_csv(path: str) -> tuple[list[float], list[float]]:
    a, b = [], []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].startswith("#"):
                continue
            try:
                a.append(float(row[0]))
                b.append(float(row[1]))
            except (IndexError, ValueError):
                raise CloneSiftError(f"pairs file needs two numeric columns, got {row}")
    return a, b


def _cmd_stats(args) -> int:
    if args.which == "ols":
        if args.bundled:
            dataset = datasets_mod.regression_dataset()
        else:
            dataset = datasets_mod.load_regression_dataset(args.data)
        X = statlab.zscore_features(dataset.X, dataset.feature_names) if args.standardize \
            else dataset.X
        model = statlab.LeastSquaresRegressor(feature_names=dataset.feature_names)
        fit = model.fit(X, dataset.y).fit_
        report = statlab.hypothesis_report(fit, alpha=args.alpha)
        _emit({
            "command": "stats", "test": "ols",
            "r_squared": round(fit.r_squared, 4),
            "adj_r_squared": round(fit.adj_r_squared, 4),
            "f_statistic": round(fit.f_statistic, 4),
            "f_p_value": round(fit.f_p_value, 6),
            "condition_number": round(fit.condition_number, 2),
            "hypotheses": report,
        })
        print(f"R^2 = {fit.r_squared:.3f}  adj R^2 = {fit.adj_r_squared:.3f}  "
              f"F = {fit.f_statistic:.3f} (p = {fit.f_p_value:.4f})")
        headers = ["Hypothesis", "Feature", "Coef", "p", "Decision"]
        rows = [[h["hypothesis"], h["feature"], h["coefficient"], h["p_value"],
                 h["decision"]] for h in report]
        print(evalkit.render_table(headers, rows, floatfmt=".4f"))
        return 0

    a, b = _read_pairs_csv(args.pairs)
    sample = statlab.PairedSample(name=Path(args.pairs).stem, a=a, b=b)
    if args.which == "ttest":
        result = statlab.paired_t_test(sample)
    elif args.which == "wilcoxon":
        result = statlab.wilcoxon_signed_rank(sample)
    else:  # route
        routed = statlab.route_paired_test(sample, alpha=args.alpha)
        result = routed.result
        _emit({
            "command": "stats", "test": "route",
            "normality_p": round(routed.normality_p, 5),
            "chosen": routed.chosen,
            "n": result.n, "mean_diff": round(result.mean_diff, 4),
            "statistic": round(result.statistic, 4), "p_value": result.p_value,
        })
        print(f"normality p = {routed.normality_p:.5f} -> {routed.chosen}; "
              f"mean diff = {result.mean_diff:.2f}, p = {result.p_value:.2e}")
        return 0
    _emit({"command": "stats", "test": result.test, "n": result.n,
           "mean_diff": round(result.mean_diff, 4),
           "statistic": round(result.statistic, 4), "p_value": result.p_value})
    print(f"{result.test}: n = {result.n}, mean diff = {result.mean_diff:.2f}, "
          f"statistic = {result.statistic:.3f}, p = {result.p_value:.2e}")
    return 0


# --- review ------------------------------------------------------------------

def _snippet(manifests: list[corpus_mod.CorpusManifest], triple, width: int = 12) -> str:
    for manifest in manifests:
        for unit in manifest.units:
            if unit.triple == tuple(triple):
                lines = unit.text.split("\n")[:width]
                return "\n".join("    " + l for l in lines)
    return "    <source not in manifest>"


def _cmd_review(args) -> int:
    clist = _load_any_list(args.infile)
    manifests = [corpus_mod.load_manifest(m) for m in args.corpus or []]
    labels_path = Path(args.out)
    judged: dict = {}
    if labels_path.exists():  # resume: replay prior judgments
        with labels_path.open("r", encoding="utf-8", newline="") as fh:
            for row in csv.reader(fh):
                if len(row) >= 9 and row[7] in ("TP", "FP"):
                    pair = ((row[1], int(row[2]), int(row[3])),
                            (row[4], int(row[5]), int(row[6])))
                    judged[pair] = row[7]
    seen_pairs: set = set()
    tp = 0
    inspected = 0
    stopped = False
    out_rows: list[list] = []
    interactive = sys.stdin.isatty()
    for rank, cand in enumerate(clist.items, start=1):
        if cand.pair in seen_pairs:
            continue  # duplicate canonical pair: auto-skip
        seen_pairs.add(cand.pair)
        if cand.pair in judged:
            verdict = judged[cand.pair]
        else:
            if stopped:
                break
            prompt = (
                f"\n#{rank} score={cand.score:.4f}\n"
                f"  A: {cand.a[0]}:{cand.a[1]}-{cand.a[2]}\n"
                f"{_snippet(manifests, cand.a)}\n"
                f"  B: {cand.b[0]}:{cand.b[1]}-{cand.b[2]}\n"
                f"{_snippet(manifests, cand.b)}\n"
                "clone? [y]es / [n]o / [s]kip / [q]uit: "
            )
            if interactive:
                answer = input(prompt).strip().lower()
            else:
                line = sys.stdin.readline()
                if not line:
                    break
                answer = line.strip().lower()
                print(prompt + answer)
            if answer in ("q", "quit"):
                break
            if answer in ("s", "skip", ""):
                continue
            verdict = "TP" if answer in ("y", "yes", "t") else "FP"
        inspected += 1
        tp += verdict == "TP"
        out_rows.append([
            rank, cand.a[0], cand.a[1], cand.a[2], cand.b[0], cand.b[1], cand.b[2],
            verdict, f"{time.time():.0f}",
        ])
        running = tp / inspected
        if inspected > args.grace and running < args.floor:
            stopped = True
    with labels_path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerows(out_rows)
    final_precision = 100.0 * tp / inspected if inspected else 0.0
    _emit({"command": "review", "inspected": inspected, "true_positives": tp,
           "precision": round(final_precision, 2), "stopped_by_floor": stopped,
           "labels": str(labels_path)})
    print(f"inspected {inspected}, {tp} true positives, precision {final_precision:.2f}%"
          + (" (stopped by precision floor)" if stopped else ""))
    return 0


# --- inspect -------------------------------------------------------------------

def _cmd_inspect(args) -> int:
    path = Path(args.path)
    if args.kind == "manifest":
        manifest = corpus_mod.load_manifest(path)
        _emit({"command": "inspect", "kind": "manifest", "label": manifest.label,
               "language": manifest.language, "units": len(manifest),
               "minloc_applied": manifest.minloc_applied})
    elif args.kind == "vectors":
        records = load_vectors(path)
        _emit({"command": "inspect", "kind": "vectors",
               "model_id": records[0].model_id if records else None,
               "rows": len(records),
               "dimension": len(records[0].vector) if records else None})
    else:
        clist = _load_any_list(str(path))
        _emit({"command": "inspect", "kind": "candidates",
               "model_id": getattr(clist, "model_id", "+".join(getattr(clist, "source_models", ()))),
               "items": len(clist.items)})
    return 0


# --- run (declarative pipeline) --------------------------------------------------

def _cmd_run(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        config = yaml.safe_load(fh)
    out_dir = Path(args.out_dir or config.get("out_dir", "clonesift-out"))
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = args.seed if args.seed is not None else int(config.get("seed", 0))
    workers = args.workers if args.workers is not None else int(config.get("workers", 1))

    diagnostics: list[str] = []
    units: list[corpus_mod.FunctionUnit] = []
    lang = config.get("language", "c")
    minloc = int(config.get("minloc", 0))
    for raw in config["corpus"]:
        root = Path(raw)
        files = sorted(p for p in root.rglob("*") if p.is_file()) if root.is_dir() else [root]
        for fp in files:
            rel = fp.relative_to(root).as_posix() if root.is_dir() else fp.name
            units.extend(corpus_mod.extract_functions(
                fp.read_text(encoding="utf-8"), rel, lang, diagnostics=diagnostics))
    kept = corpus_mod.apply_minloc(units, minloc)
    manifest = corpus_mod.CorpusManifest(
        label=config.get("label", "run"), language=lang,
        units=tuple(kept), minloc_applied=minloc)
    corpus_mod.store_manifest(manifest, out_dir / "corpus.manifest")

    search_cfg = config.get("search", {})
    params = SearchParams(
        top_n_class=int(search_cfg.get("top_n_class", 10)),
        similarity_threshold=float(search_cfg.get("similarity_threshold", 0.0)),
        global_top_k=int(search_cfg.get("global_top_k", 1000)),
        backend=search_cfg.get("backend", "exact"),
    )
    lists = {}
    for spec_cfg in config["embedders"]:
        spec = EmbedderSpec(
            backend=spec_cfg.get("backend", "mock"),
            model_id=spec_cfg["model_id"],
            dimension=int(spec_cfg.get("dimension", 256)),
            code_length=int(spec_cfg.get("code_length", 128)),
            seed=int(spec_cfg.get("seed", seed)),
            endpoint=spec_cfg.get("endpoint"),
        )
        if spec.backend == "file":
            records = load_vectors(spec_cfg["path"], model_id=spec.model_id)
        else:
            from .embed import build_embedder

            records = build_embedder(spec, workers=workers).transform(manifest.units)
        store_vectors(records, out_dir / f"{spec.model_id}.vec",
                      normalized=spec.backend == "mock")
        index = CloneSearchIndex(backend=params.backend, random_state=seed).fit(
            records, manifest)
        clist = index.self_search(params)
        store_candidates(clist, out_dir / f"{spec.model_id}.candidates")
        lists[spec.model_id] = clist

    fused_files = []
    methods = config.get("fusion_methods", [fusion.method_name(n, a)
                                            for n, a in fusion.all_methods()])
    model_ids = sorted(lists)
    if len(model_ids) >= 2:
        for i, ma in enumerate(model_ids):
            for mb in model_ids[i + 1:]:
                for name in methods:
                    norm, agg = fusion.parse_method(name, rrf_k=int(config.get("rrf_k", 60)))
                    fused = fusion.ensemble(lists[ma], lists[mb], norm, agg,
                                            global_top_k=params.global_top_k)
                    out = out_dir / f"{ma}+{mb}.{name}.fused"
                    fusion.store_fused(fused, out)
                    fused_files.append(str(out))

    evaluation = None
    if config.get("ground_truth"):
        gt = evalkit.load_ground_truth(config["ground_truth"])
        cutoffs = [int(k) for k in config.get("cutoffs", [params.global_top_k])]
        evaluation = {"individual": {}, "fused": {}}
        for model_id, clist in sorted(lists.items()):
            report = evalkit.recall_at(clist, gt, cutoffs)
            evaluation["individual"][model_id] = {
                str(k): round(report.recall_at[k], 2) for k in cutoffs}
        for path in fused_files:
            flist = fusion.load_fused(path)
            report = evalkit.recall_at(flist, gt, cutoffs)
            evaluation["fused"][Path(path).name] = {
                str(k): round(report.recall_at[k], 2) for k in cutoffs}
        (out_dir / "evaluation.json").write_text(
            json.dumps(evaluation, sort_keys=True, indent=2) + "\n", encoding="utf-8")

    _emit({"command": "run", "out_dir": str(out_dir), "units": len(manifest),
           "models": model_ids, "fused_lists": len(fused_files),
           "evaluated": evaluation is not None})
    print(f"pipeline complete -> {out_dir}")
    return 0


# --- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clonesift",
        description="Clone detection via embedding search, fusion, and evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="extract function units into a manifest")
    p.add_argument("paths", nargs="+")
    p.add_argument("--lang", default="c", choices=corpus_mod.SUPPORTED_LANGUAGES)
    p.add_argument("--minloc", type=int, default=0)
    p.add_argument("--label", default="corpus")
    p.add_argument("--relative-to", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("embed", help="embed a manifest into a vector store")
    p.add_argument("--manifest", required=True)
    p.add_argument("--backend", default="mock", choices=("mock", "remote"))
    p.add_argument("--model", default="mock")
    p.add_argument("--dim", type=int, default=256)
    p.add_argument("--code-length", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--endpoint", default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--encoding", default="jsonl", choices=("jsonl", "binary"))
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_embed)

    p = sub.add_parser("search", help="rank clone candidates from a vector store")
    p.add_argument("--vectors", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--against", default=None,
                   help="manifest of a query corpus (cross-corpus batch search)")
    p.add_argument("--against-vectors", default=None)
    p.add_argument("--top-n", type=int, default=10)
    p.add_argument("--threshold", type=float, default=0.0)
    p.add_argument("--top-k", default="1000",
                   help="comma-separated cutoffs; several emit one file per cutoff")
    p.add_argument("--backend", default="exact", choices=("exact", "approximate"))
    p.add_argument("--graph-m", type=int, default=16)
    p.add_argument("--ef-construction", type=int, default=128)
    p.add_argument("--ef-search", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--force", action="store_true",
                   help="keep approximate output even if the recall gate fails")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_search)

    p = sub.add_parser("fuse", help="merge candidate lists with one ensembling method")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--norm", default="non-norm", choices=fusion.NORMALIZATIONS)
    p.add_argument("--agg", default="max", choices=fusion.AGGREGATIONS)
    p.add_argument("--rrf-k", type=int, default=60)
    p.add_argument("--top-k", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_fuse)

    p = sub.add_parser("eval", help="score candidates against ground truth")
    p.add_argument("what", choices=("recall", "typed", "precision"))
    p.add_argument("--candidates")
    p.add_argument("--truth")
    p.add_argument("--labels", help="labels file (for: eval precision)")
    p.add_argument("--cutoffs", default="10")
    p.add_argument("--match", default="exact", choices=("exact", "overlap"))
    p.add_argument("--overlap", type=float, default=0.7)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("rank", help="Borda-count ranking across datasets")
    p.add_argument("what", choices=("borda",))
    p.add_argument("--reports", nargs="*", default=[],
                   help="dataset=path entries; each file maps model -> average recall")
    p.add_argument("--bundled", action="store_true",
                   help="rank the bundled reference benchmark")
    p.set_defaults(func=_cmd_rank)

    p = sub.add_parser("stats", help="regression and paired significance tests")
    p.add_argument("which", choices=("ols", "ttest", "wilcoxon", "route"))
    p.add_argument("--data", help="regression dataset CSV (for: ols)")
    p.add_argument("--bundled", action="store_true")
    p.add_argument("--standardize", action="store_true", default=True)
    p.add_argument("--no-standardize", dest="standardize", action="store_false")
    p.add_argument("--pairs", help="two-column CSV of paired measurements")
    p.add_argument("--alpha", type=float, default=0.05)
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("review", help="interactive in-situ candidate labelling")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--corpus", nargs="*", default=[],
                   help="manifests used to show code snippets")
    p.add_argument("--floor", type=float, default=0.2,
                   help="stop when running precision drops below this")
    p.add_argument("--grace", type=int, default=10,
                   help="judgments before the floor applies")
    p.add_argument("--out", required=True, help="labels file (resumable)")
    p.set_defaults(func=_cmd_review)

    p = sub.add_parser("inspect", help="validate and summarize a data file")
    p.add_argument("kind", choices=("manifest", "vectors", "candidates"))
    p.add_argument("path")
    p.set_defaults(func=_cmd_inspect)

    p = sub.add_parser("run", help="drive the whole pipeline from one config file")
    p.add_argument("config")
    p.add_argument("--out-dir", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=_cmd_run)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CloneSiftError as exc:
        return _fail(str(exc))
    except FileNotFoundError as exc:
        return _fail(f"{exc.filename or exc}: file not found")
    except (ValueError, KeyError, OSError) as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
