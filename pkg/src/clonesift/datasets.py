"""Bundled reference data and synthetic fixtures.

Ships the reference benchmark the toolkit's reports are calibrated against:
recall metrics for nine public code-embedding models over three clone
datasets (two C/C++ corpora evaluated at four global-top-K cutoffs each, and
a large Java benchmark evaluated per clone type), the transformed model
characteristics used by the selection regression, pairwise-ensemble
summaries, and the expert-review precision counts from a private-codebase
evaluation. These power the demo CLI flows and pin the arithmetic of the
evaluation toolkit in the test suite.

Also provides a deterministic synthetic C corpus generator with planted
clone pairs for end-to-end pipeline tests.
"""

from __future__ import annotations

import csv
import random
from pathlib import Path

import numpy as np

from .evalkit import GroundTruth
from .statlab import RegressionDataset

MODELS = (
    "CBFT", "GCB", "CT5", "CuBERT", "SPTCode",
    "CT5P-220", "CT5P-110", "StarEncoder", "C4",
)

DATASETS = ("company-c", "company-cpp", "bcb13")

COMPANY_C_CUTOFFS = (10, 50, 70, 140)
COMPANY_CPP_CUTOFFS = (10, 50, 83, 166)

# Recall (%) per model at the dataset's cutoffs; trailing value = row average.
RECALL_COMPANY_C = {
    "CT5P-110":    ((12.86, 67.14, 88.57, 95.71), 66.07),
    "SPTCode":     ((14.29, 62.86, 80.00, 98.57), 63.93),
    "CuBERT":      ((12.86, 55.71, 71.43, 98.57), 59.64),
    "CBFT":        ((14.29, 52.86, 61.43, 80.00), 52.15),
    "CT5":         ((12.86, 50.00, 64.29, 81.43), 52.15),
    "GCB":         ((12.86, 51.43, 60.00, 77.14), 50.36),
    "StarEncoder": ((12.86, 42.86, 60.00, 77.14), 48.22),
    "CT5P-220":    ((12.86, 38.57, 40.00, 51.43), 35.72),
    "C4":          ((14.29, 38.57, 38.57, 48.57), 35.00),
}

RECALL_COMPANY_CPP = {
    "CT5P-110":    ((10.84, 55.42, 83.13, 98.80), 62.05),
    "CuBERT":      ((10.84, 51.81, 78.31, 96.39), 59.34),
    "SPTCode":     ((10.84, 51.81, 77.11, 92.77), 58.13),
    "CT5":         ((8.43, 46.99, 78.31, 92.77), 56.63),
    "StarEncoder": ((9.64, 50.60, 74.70, 90.36), 56.33),
    "GCB":         ((9.64, 50.60, 75.90, 84.34), 55.12),
    "CBFT":        ((10.84, 53.01, 71.08, 81.93), 54.22),
    "CT5P-220":    ((7.23, 44.58, 66.27, 77.11), 48.80),
    "C4":          ((9.64, 33.73, 42.17, 50.60), 34.04),
}

BCB13_TYPES = ("T1", "T2", "VST3", "ST3", "MT3", "WT3/T4")

RECALL_BCB13 = {
    "CT5":         ((100, 97, 98, 90, 39, 1), 70.83),
    "StarEncoder": ((100, 97, 98, 89, 38, 1), 70.50),
    "CuBERT":      ((100, 97, 93, 86, 35, 1), 68.66),
    "SPTCode":     ((100, 97, 97, 83, 28, 1), 67.66),
    "GCB":         ((100, 97, 96, 80, 27, 1), 66.83),
    "CBFT":        ((100, 96, 96, 77, 26, 1), 66.00),
    "CT5P-110":    ((100, 94, 93, 75, 20, 1), 63.83),
    "CT5P-220":    ((100, 94, 84, 67, 24, 1), 61.67),
    "C4":          ((100, 92, 79, 45, 10, 1), 54.50),
}

# Reference cross-dataset aggregation: rank (borda) per dataset, total, spread.
BORDA_REFERENCE = {
    "CuBERT":      {"ranks": (3, 2, 3), "borda": (7, 8, 7), "total": 22, "stdev": 0.58},
    "CT5P-110":    {"ranks": (1, 1, 7), "borda": (9, 9, 3), "total": 21, "stdev": 3.46},
    "SPTCode":     {"ranks": (2, 3, 4), "borda": (8, 7, 6), "total": 21, "stdev": 1.00},
    "CT5":         {"ranks": (4, 4, 1), "borda": (6, 6, 9), "total": 21, "stdev": 1.73},
    "StarEncoder": {"ranks": (6, 5, 2), "borda": (4, 5, 8), "total": 17, "stdev": 2.08},
    "GCB":         {"ranks": (5, 6, 5), "borda": (5, 4, 5), "total": 14, "stdev": 0.58},
    "CBFT":        {"ranks": (4, 7, 6), "borda": (6, 3, 4), "total": 13, "stdev": 1.53},
    "CT5P-220":    {"ranks": (7, 8, 8), "borda": (3, 2, 2), "total": 7,  "stdev": 0.58},
    "C4":          {"ranks": (8, 9, 9), "borda": (2, 1, 1), "total": 4,  "stdev": 0.58},
}

# Expert-review precision on the private cross-corpus run (1390 inspected).
INSITU_REVIEW_BUDGET = 1390
INSITU_TRUE_CLONES = {"CBFT": 213, "CuBERT": 251, "CT5P-110": 552}
INSITU_PRECISION = {"CBFT": 15.32, "CuBERT": 18.06, "CT5P-110": 39.71}

# Transformed model characteristics: training-dataset-other indicator,
# matching-language count, encoder parameters (millions), embedding size,
# tokenizer vocabulary size.
CHARACTERISTIC_NAMES = (
    "training_dataset_other",
    "matching_languages",
    "encoder_parameters_m",
    "embedding_size",
    "tokenizer_vocabulary",
)

CHARACTERISTICS = {
    "CBFT":        (0, 1, 125, 768, 50265),
    "GCB":         (0, 1, 125, 768, 50265),
    "CT5":         (0, 2, 110, 768, 32100),
    "CuBERT":      (1, 1, 345, 1024, 50032),
    "SPTCode":     (0, 1, 130, 768, 50000),
    "CT5P-220":    (0, 3, 110, 768, 32100),
    "CT5P-110":    (0, 3, 110, 256, 32100),
    "StarEncoder": (1, 3, 125, 768, 49152),
    "C4":          (0, 2, 125, 768, 50265),
}

# Pairwise two-model ensembles: (avg individual-max recall, avg recall over
# the 12 ensembling methods, best single-method recall, best method).
ENSEMBLES_COMPANY_C = (
    ("CT5P-110+SPTCode", 67.14, 66.55, 67.14, "non-norm_sum"),
    ("CT5P-110+CuBERT", 66.79, 64.58, 66.07, "non-norm_sum"),
    ("CT5P-110+CT5", 66.07, 61.90, 66.07, "z-score_max"),
    ("CT5P-110+CBFT", 66.43, 61.49, 66.07, "z-score_max"),
    ("SPTCode+CuBERT", 63.93, 61.37, 64.29, "z-score_max"),
    ("CT5P-110+GCB", 66.07, 60.83, 66.07, "z-score_max"),
    ("SPTCode+CT5", 63.93, 60.21, 63.21, "z-score_max"),
    ("CT5P-110+StarEncoder", 66.07, 60.00, 66.07, "non-norm_sum"),
    ("SPTCode+CBFT", 63.93, 59.14, 63.93, "z-score_max"),
    ("SPTCode+GCB", 63.93, 57.62, 63.57, "z-score_max"),
    ("CT5P-110+CT5P-220", 66.07, 56.82, 66.07, "z-score_max"),
    ("CuBERT+CBFT", 60.00, 56.25, 59.64, "z-score_max"),
    ("CuBERT+CT5", 59.64, 56.16, 59.64, "non-norm_max"),
    ("CT5P-110+C4", 66.43, 55.92, 65.71, "non-norm_max"),
    ("StarEncoder+CuBERT", 59.64, 55.57, 58.93, "non-norm_sum"),
    ("GCB+CuBERT", 59.64, 55.48, 58.93, "z-score_max"),
    ("StarEncoder+SPTCode", 63.93, 55.45, 63.57, "z-score_max"),
    ("C4+SPTCode", 63.93, 54.26, 61.79, "non-norm_max"),
    ("SPTCode+CT5P-220", 63.93, 53.39, 63.57, "z-score_max"),
    ("GCB+CBFT", 52.14, 52.62, 53.21, "non-norm_max"),
    ("StarEncoder+GCB", 50.36, 51.70, 53.93, "min-max_max"),
    ("CT5+CBFT", 53.21, 51.70, 52.50, "z-score_max"),
    ("StarEncoder+CBFT", 52.14, 51.61, 53.21, "rrf_max"),
    ("GCB+CT5", 52.50, 51.10, 53.21, "rrf_max"),
    ("CuBERT+CT5P-220", 59.64, 50.60, 60.00, "non-norm_max"),
    ("StarEncoder+CT5", 52.14, 49.58, 53.21, "z-score_max"),
    ("C4+CuBERT", 60.00, 47.71, 60.71, "non-norm_max"),
    ("CT5P-220+CT5", 52.14, 46.93, 51.07, "z-score_max"),
    ("CT5P-220+CBFT", 52.14, 46.01, 52.86, "min-max_max"),
    ("C4+CT5", 52.50, 45.33, 51.43, "non-norm_max"),
    ("GCB+CT5P-220", 50.36, 45.30, 50.36, "non-norm_max"),
    ("C4+CBFT", 52.14, 43.84, 52.14, "non-norm_max"),
    ("StarEncoder+CT5P-220", 48.21, 43.39, 49.64, "min-max_max"),
    ("C4+GCB", 50.71, 42.86, 51.07, "non-norm_max"),
    ("C4+StarEncoder", 48.57, 42.77, 50.00, "non-norm_max"),
    ("C4+CT5P-220", 36.07, 39.35, 44.64, "rrf_sum"),
)

ENSEMBLES_COMPANY_CPP = (
    ("CT5P-110+SPTCode", 62.05, 61.67, 62.35, "non-norm_max"),
    ("CT5P-110+CuBERT", 62.05, 61.04, 62.05, "non-norm_sum"),
    ("CT5P-110+CT5", 62.05, 60.07, 62.05, "z-score_max"),
    ("SPTCode+CuBERT", 59.34, 59.69, 61.75, "rrf_sum"),
    ("GCB+CuBERT", 59.34, 59.66, 60.24, "non-norm_sum"),
    ("CuBERT+CBFT", 59.64, 59.14, 60.24, "non-norm_max"),
    ("StarEncoder+CuBERT", 59.34, 59.11, 60.54, "min-max_max"),
    ("CT5P-110+GCB", 62.05, 58.73, 62.05, "z-score_max"),
    ("CuBERT+CT5", 59.34, 58.58, 59.94, "rrf_max"),
    ("CT5P-110+CBFT", 62.05, 58.43, 62.05, "z-score_max"),
    ("SPTCode+CT5", 58.43, 57.96, 58.43, "non-norm_sum"),
    ("CT5P-110+StarEncoder", 62.05, 57.13, 62.05, "non-norm_sum"),
    ("StarEncoder+GCB", 56.63, 57.08, 58.73, "rrf_sum"),
    ("CuBERT+CT5P-220", 59.34, 56.68, 59.34, "z-score_max"),
    ("CT5P-110+CT5P-220", 62.05, 56.53, 62.05, "z-score_max"),
    ("StarEncoder+CBFT", 57.23, 56.45, 59.04, "rrf_max"),
    ("GCB+CT5", 57.83, 56.10, 57.83, "non-norm_sum"),
    ("CT5+CBFT", 58.73, 55.97, 57.23, "non-norm_sum"),
    ("GCB+CBFT", 56.02, 55.65, 56.33, "min-max_sum"),
    ("SPTCode+CBFT", 58.43, 55.42, 59.34, "rrf_sum"),
    ("StarEncoder+CT5", 57.83, 55.17, 57.53, "min-max_max"),
    ("SPTCode+GCB", 58.13, 54.99, 58.73, "non-norm_sum"),
    ("SPTCode+CT5P-220", 58.13, 54.47, 58.13, "z-score_max"),
    ("CT5P-220+CT5", 56.63, 53.89, 56.63, "z-score_max"),
    ("StarEncoder+SPTCode", 58.13, 53.39, 58.43, "non-norm_sum"),
    ("CT5P-220+CBFT", 54.22, 52.94, 55.72, "rrf_sum"),
    ("GCB+CT5P-220", 55.12, 52.91, 55.72, "rrf_sum"),
    ("StarEncoder+CT5P-220", 56.33, 52.26, 56.63, "z-score_max"),
    ("CT5P-110+C4", 62.05, 51.48, 62.05, "z-score_max"),
    ("C4+CuBERT", 59.34, 50.95, 59.94, "non-norm_max"),
    ("C4+CT5", 56.93, 49.20, 56.33, "z-score_max"),
    ("C4+SPTCode", 58.13, 48.37, 58.13, "z-score_max"),
    ("C4+GCB", 55.12, 47.72, 55.12, "non-norm_max"),
    ("C4+CBFT", 54.22, 46.64, 53.61, "non-norm_max"),
    ("C4+StarEncoder", 56.33, 44.60, 57.23, "min-max_max"),
    ("C4+CT5P-220", 49.40, 41.87, 49.40, "non-norm_max"),
)

# Selected two-model ensembles on the large Java benchmark:
# (ensemble, method, per-type recalls, avg recall, individual max).
ENSEMBLES_BCB13 = (
    ("CT5P-110+CT5", "min-max_max", (100, 99, 98, 91, 40, 1), 71.50, 70.83),
    ("CT5P-110+CT5", "min-max_sum", (100, 99, 98, 91, 40, 1), 71.50, 70.83),
    ("CT5P-110+CT5", "z-score_max", (100, 99, 98, 91, 40, 1), 71.50, 70.83),
    ("CT5P-110+CT5", "rrf_max", (100, 99, 98, 91, 40, 1), 71.50, 70.83),
    ("CT5P-110+CT5", "rrf_sum", (100, 99, 98, 91, 40, 1), 71.50, 70.83),
    ("CT5P-110+CT5", "z-score_sum", (100, 99, 98, 88, 38, 1), 70.67, 70.83),
    ("CT5P-110+CuBERT", "min-max_max", (100, 99, 97, 88, 36, 2), 70.33, 68.66),
    ("CT5P-110+CuBERT", "min-max_sum", (100, 99, 97, 88, 36, 2), 70.33, 68.66),
    ("CT5P-110+CuBERT", "z-score_max", (100, 99, 97, 88, 36, 2), 70.33, 68.66),
    ("CT5P-110+CuBERT", "rrf_max", (100, 99, 97, 88, 36, 2), 70.33, 68.66),
    ("CT5P-110+CuBERT", "rrf_sum", (100, 99, 97, 88, 36, 2), 70.33, 68.66),
    ("CT5P-110+CuBERT", "z-score_sum", (100, 99, 97, 86, 34, 1), 69.50, 68.66),
    ("CT5P-110+SPTCode", "z-score_max", (100, 99, 97, 85, 30, 1), 68.67, 67.66),
    ("CT5P-110+SPTCode", "rrf_max", (100, 99, 97, 85, 30, 1), 68.67, 67.66),
    ("CT5P-110+SPTCode", "rrf_sum", (100, 99, 97, 85, 30, 1), 68.67, 67.66),
    ("CT5P-110+SPTCode", "min-max_max", (100, 99, 97, 84, 29, 1), 68.33, 67.66),
    ("CT5P-110+SPTCode", "min-max_sum", (100, 99, 97, 84, 29, 1), 68.33, 67.66),
    ("CT5P-110+SPTCode", "z-score_sum", (100, 99, 94, 82, 28, 1), 67.33, 67.66),
)


def recall_table(dataset: str) -> dict[str, tuple[tuple[float, ...], float]]:
    if dataset == "company-c":
        return dict(RECALL_COMPANY_C)
    if dataset == "company-cpp":
        return dict(RECALL_COMPANY_CPP)
    if dataset == "bcb13":
        return dict(RECALL_BCB13)
    raise KeyError(f"unknown dataset {dataset!r}")


def average_recalls(dataset: str) -> dict[str, float]:
    """The per-model average-recall column of one dataset's table."""
    return {model: avg for model, (_, avg) in recall_table(dataset).items()}


def regression_dataset() -> RegressionDataset:
    """The 27-sample model-selection dataset: one row per (model, dataset),
    features from the transformed characteristics, target = average recall."""
    rows, y, labels = [], [], []
    for model in MODELS:
        for dataset in DATASETS:
            rows.append(CHARACTERISTICS[model])
            y.append(average_recalls(dataset)[model])
            labels.append(f"{model}@{dataset}")
    return RegressionDataset(
        feature_names=CHARACTERISTIC_NAMES,
        X=np.asarray(rows, dtype=np.float64),
        y=np.asarray(y, dtype=np.float64),
        row_labels=tuple(labels),
    )


def write_regression_dataset(path: str | Path) -> None:
    """CSV form: feature-name header plus 'recall' target, 27 rows."""
    dataset = regression_dataset()
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(dataset.feature_names) + ["recall"])
        for row, target in zip(dataset.X, dataset.y):
            writer.writerow([format(v, "g") for v in row] + [format(target, "g")])


def load_regression_dataset(path: str | Path) -> RegressionDataset:
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[-1] != "recall":
            raise ValueError("last column must be the recall target")
        rows = [[float(v) for v in row] for row in reader if row]
    X = np.asarray([r[:-1] for r in rows], dtype=np.float64)
    y = np.asarray([r[-1] for r in rows], dtype=np.float64)
    return RegressionDataset(feature_names=tuple(header[:-1]), X=X, y=y)


def ensemble_paired_sample(dataset: str):
    """(ensemble-average, individual-max) series for the paired tests."""
    if dataset == "company-c":
        rows = ENSEMBLES_COMPANY_C
    elif dataset == "company-cpp":
        rows = ENSEMBLES_COMPANY_CPP
    elif dataset == "bcb13":
        return (
            [r[3] for r in ENSEMBLES_BCB13],
            [r[4] for r in ENSEMBLES_BCB13],
        )
    else:
        raise KeyError(f"unknown dataset {dataset!r}")
    return [r[2] for r in rows], [r[1] for r in rows]


# --- synthetic corpus ------------------------------------------------------------

_C_TYPES = ("int", "long", "double", "float", "unsigned")
_C_OPS = ("+", "-", "*", "^", "|", "&")
_STEMS = (
    "count", "total", "delta", "ratio", "width", "depth", "mass", "flow",
    "gain", "phase", "bias", "slope", "drift", "merge", "quota", "shift",
)


def _render_function(rng: random.Random, name: str, tag: int) -> str:
    """One synthetic C function; identifiers are unique to the function so
    that a renamed copy stays its own nearest neighbour."""
    stem = f"{rng.choice(_STEMS)}_{tag:02x}"
    ret = rng.choice(_C_TYPES)
    n_args = rng.randint(1, 3)
    args = ", ".join(f"{rng.choice(_C_TYPES)} {stem}_in{i}" for i in range(n_args))
    lines = [f"{ret} {name}({args}) {{"]
    n_vars = rng.randint(2, 6)
    for v in range(n_vars):
        src = f"{stem}_in{rng.randrange(n_args)}"
        lines.append(
            f"    {rng.choice(_C_TYPES)} {stem}{v} = {src} "
            f"{rng.choice(_C_OPS)} {rng.randint(1, 997)};"
        )
    if rng.random() < 0.6:
        lines.append(f"    if ({stem}0 > {rng.randint(2, 800)}) {{")
        lines.append(
            f"        {stem}0 = {stem}0 {rng.choice(_C_OPS)} {rng.randint(1, 97)};")
        lines.append("    }")
    if rng.random() < 0.3:
        lines.append(f"    for (int i = 0; i < {rng.randint(2, 40)}; i++) {{")
        lines.append(f"        {stem}1 = {stem}1 + {stem}0;")
        lines.append("    }")
    expr = " + ".join(f"{stem}{v}" for v in range(n_vars))
    lines.append(f"    return {expr};")
    lines.append("}")
    return "\n".join(lines)


def _mutate_function(rng: random.Random, text: str, new_name: str,
                     heavy: bool) -> str:
    """Clone mutation. Mild: new function name plus renamed parameters
    (type-2-style). Heavy: additionally several nudged literals and one
    inserted statement (type-3-style), pushing the pair down the ranking."""
    old_name = text.split("(")[0].split()[-1]
    mutated = text.replace(old_name, new_name).replace("_in", "_arg")
    if not heavy:
        return mutated
    lines = mutated.split("\n")
    edited = 0
    for idx, line in enumerate(lines[1:], start=1):
        if line.rstrip().endswith(";") and "=" in line and rng.random() < 0.6:
            lines[idx] = line.replace(";", f" + {rng.randint(2, 30)};", 1)
            edited += 1
            if edited == 3:
                break
    stem = lines[1].split()[1]
    lines.insert(len(lines) - 2, f"    {stem} = {stem} ^ {rng.randint(1, 63)};")
    return "\n".join(lines)


def synthetic_corpus(n_functions: int = 200, n_clones: int = 20,
                     seed: int = 7, functions_per_file: int = 10):
    """Deterministic C-like corpus with planted mutation clones.

    Returns (files, ground_truth): ``files`` maps relative paths to source
    text; the ground truth holds the planted (original, mutant) pairs.
    """
    if n_clones * 2 > n_functions:
        raise ValueError("need n_functions >= 2 * n_clones")
    rng = random.Random(seed)
    originals = [
        _render_function(rng, f"routine_{i:03d}", tag=i)
        for i in range(n_functions - n_clones)
    ]
    texts = list(originals)
    clone_of: dict[int, int] = {}
    mutated_sources: set[int] = set()
    for j in range(n_clones):
        source_idx = rng.randrange(len(originals))
        while source_idx in mutated_sources:
            source_idx = rng.randrange(len(originals))
        mutated_sources.add(source_idx)
        mutant = _mutate_function(
            rng, originals[source_idx], f"variant_{j:03d}", heavy=j % 2 == 1
        )
        clone_of[len(texts)] = source_idx
        texts.append(mutant)
    order = list(range(len(texts)))
    rng.shuffle(order)

    files: dict[str, str] = {}
    placed: dict[int, tuple[str, int, int]] = {}
    for start in range(0, len(order), functions_per_file):
        chunk = order[start : start + functions_per_file]
        path = f"file_{start // functions_per_file:03d}.c"
        line, parts = 1, []
        for func_idx in chunk:
            body = texts[func_idx]
            n_lines = body.count("\n") + 1
            placed[func_idx] = (path, line, line + n_lines - 1)
            parts.append(body)
            line += n_lines + 1  # blank separator line
        files[path] = "\n\n".join(parts) + "\n"

    truth_pairs = [
        (placed[mutant_idx], placed[source_idx])
        for mutant_idx, source_idx in clone_of.items()
    ]
    return files, GroundTruth.from_pairs(truth_pairs)


def write_synthetic_corpus(root: str | Path, **kwargs):
    """Materialize the synthetic corpus under ``root``; returns the truth."""
    root = Path(root)
    files, gt = synthetic_corpus(**kwargs)
    for rel, text in files.items():
        target = root / rel
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text, encoding="utf-8")
    return files, gt
