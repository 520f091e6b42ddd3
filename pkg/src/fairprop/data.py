"""Dataset ingestion, deterministic splits, synthetic generation, results I/O."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from .graph import SparseGraph, build_graph, edge_homophily
from .metrics import RESULT_COLUMNS, MetricsReport

Array = np.ndarray

MISSING_LABEL = -1


@dataclass
class Dataset:
    graph: SparseGraph
    features: Array  # n x d, sensitive column excluded
    sensitive: Array  # length n, values in {-1, +1}
    labels: Array  # length n integers, MISSING_LABEL where unknown
    name: str = ""

    def __post_init__(self):
        n = self.graph.n
        if not (
            self.features.shape[0] == n
            and self.sensitive.shape[0] == n
            and self.labels.shape[0] == n
        ):
            raise ValueError("feature/sensitive/label lengths must equal node count")
        if not (np.any(self.sensitive == 1) and np.any(self.sensitive == -1)):
            raise ValueError("sensitive attribute must contain both values")

    @property
    def labeled_mask(self) -> Array:
        return self.labels != MISSING_LABEL


@dataclass
class SplitMasks:
    train: Array
    val: Array
    test: Array
    seed: int


def load_dataset(node_csv_path, edge_path, schema: dict, name: str = "") -> Dataset:
    """Load a node CSV plus edge list.

    ``schema`` declares {"id": col, "sensitive": col, "sensitive_pos_value":
    raw, "label": col, "drop": [cols]}. Nodes are indexed densely in file
    order; label values below zero are treated as missing.
    """
    with open(node_csv_path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        rows = [r for r in reader if r]

    for key in ("id", "sensitive", "label"):
        if schema[key] not in header:
            raise ValueError(f"missing column {schema[key]!r} in node CSV")
    drop = set(schema.get("drop", []))
    id_col = header.index(schema["id"])
    sens_col = header.index(schema["sensitive"])
    label_col = header.index(schema["label"])
    feat_cols = [
        i
        for i, col in enumerate(header)
        if i not in (id_col, sens_col, label_col) and col not in drop
    ]

    n = len(rows)
    id_map = {}
    sensitive = np.empty(n, dtype=np.int64)
    labels = np.empty(n, dtype=np.int64)
    features = np.empty((n, len(feat_cols)), dtype=np.float64)
    pos_value = str(schema["sensitive_pos_value"])
    for idx, row in enumerate(rows):
        id_map[row[id_col]] = idx
        sensitive[idx] = 1 if row[sens_col] == pos_value else -1
        raw_label = float(row[label_col]) if row[label_col] != "" else MISSING_LABEL
        labels[idx] = MISSING_LABEL if raw_label < 0 else int(raw_label)
        for k, col in enumerate(feat_cols):
            cell = row[col]
            try:
                features[idx, k] = float(cell) if cell != "" else 0.0
            except ValueError:
                raise ValueError(
                    f"non-numeric feature cell {cell!r} in column {header[col]!r}"
                ) from None

    if len(set(sensitive.tolist())) < 2:
        raise ValueError("sensitive column takes a single value")

    edges = []
    with open(edge_path) as f:
        for line in f:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise ValueError(f"malformed edge line {line!r}")
            a, b = parts
            if a not in id_map or b not in id_map:
                raise ValueError(f"edge references unknown node id in {line!r}")
            if id_map[a] != id_map[b]:
                edges.append((id_map[a], id_map[b]))

    graph = build_graph(n, edges)
    return Dataset(graph=graph, features=features, sensitive=sensitive, labels=labels, name=name)


def make_splits(dataset: Dataset, fractions=(0.5, 0.25, 0.25), seed: int = 0) -> SplitMasks:
    """Deterministic shuffle of labeled nodes, sliced into train/val/test.

    Train and val take floor(fraction * n_labeled); test takes the remainder.
    """
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError("split fractions must sum to 1")
    labeled = np.flatnonzero(dataset.labeled_mask)
    if labeled.size < 4:
        raise ValueError("too few labeled nodes to split")
    order = np.random.default_rng(seed).permutation(labeled)
    n_train = int(fractions[0] * labeled.size)
    n_val = int(fractions[1] * labeled.size)
    n = dataset.graph.n
    masks = [np.zeros(n, dtype=bool) for _ in range(3)]
    masks[0][order[:n_train]] = True
    masks[1][order[n_train : n_train + n_val]] = True
    masks[2][order[n_train + n_val :]] = True
    return SplitMasks(train=masks[0], val=masks[1], test=masks[2], seed=seed)


@dataclass
class SynthConfig:
    n: int = 1000
    group_frac: float = 0.5  # fraction of nodes with s = +1
    eps_sens: float = 0.8  # target sensitive edge homophily
    eps_label: float = 0.7  # target label edge homophily
    mean_degree: float = 10.0
    feat_dim: int = 16
    class_shift: float = 1.0  # class-conditional feature mean shift
    group_shift: float = 1.0  # group-conditional feature mean shift
    label_group_corr: float = 0.75  # P(label == group indicator)
    seed: int = 0

    def __post_init__(self):
        if self.n < 4:
            raise ValueError("need at least 4 nodes")
        if not (0.0 <= self.eps_sens <= 1.0 and 0.0 <= self.eps_label <= 1.0):
            raise ValueError("homophily targets must lie in [0, 1]")


def synth_generate(cfg: SynthConfig, max_attempts: int = 20) -> Dataset:
    """Two-group synthetic graph with tunable sensitive and label homophily.

    Edges pick endpoint pairs constrained to the same/different sensitive
    group per ``eps_sens`` (exactly: eps_sens of 1 or 0 forbids the other
    kind), steered toward ``eps_label`` via the same-label decision. The
    whole draw is retried until the measured label homophily lands within
    0.05 of the target.
    """
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n
    n_pos = max(1, min(n - 1, int(round(cfg.group_frac * n))))
    sensitive = np.full(n, -1, dtype=np.int64)
    sensitive[:n_pos] = 1

    for _ in range(max_attempts):
        indicator = (sensitive == 1).astype(np.int64)
        flip = rng.random(n) >= cfg.label_group_corr
        labels = np.where(flip, 1 - indicator, indicator)

        cells = {
            (grp, lab): np.flatnonzero((sensitive == grp) & (labels == lab))
            for grp in (1, -1)
            for lab in (0, 1)
        }
        by_group = {grp: np.flatnonzero(sensitive == grp) for grp in (1, -1)}

        m_target = int(round(cfg.mean_degree * n / 2.0))
        edges = set()
        for _ in range(m_target):
            same_group = rng.random() < cfg.eps_sens
            same_label = rng.random() < cfg.eps_label
            for _attempt in range(100):
                i = int(rng.integers(n))
                gj = sensitive[i] if same_group else -sensitive[i]
                lj = labels[i] if same_label else 1 - labels[i]
                pool = cells[(gj, lj)]
                if pool.size == 0:
                    pool = by_group[gj]  # keep the group constraint exact
                j = int(pool[rng.integers(pool.size)])
                if i != j and (min(i, j), max(i, j)) not in edges:
                    edges.add((min(i, j), max(i, j)))
                    break

        graph = build_graph(n, sorted(edges))
        if abs(edge_homophily(graph, labels) - cfg.eps_label) <= 0.05:
            break
    else:
        raise RuntimeError(
            f"could not reach label homophily {cfg.eps_label} "
            f"(sensitive homophily {cfg.eps_sens}) after {max_attempts} attempts"
        )

    d = cfg.feat_dim
    features = rng.standard_normal((n, d))
    half = d // 2
    features[:, :half] += cfg.class_shift * labels[:, None]
    features[:, half:] += cfg.group_shift * indicator[:, None]

    return Dataset(
        graph=graph,
        features=features,
        sensitive=sensitive,
        labels=labels,
        name=f"synth-n{n}-es{cfg.eps_sens}-el{cfg.eps_label}-seed{cfg.seed}",
    )


def standardize_features(features: Array, train_mask) -> Array:
    """Per-column zero mean, unit variance computed over training nodes."""
    train_mask = np.asarray(train_mask, dtype=bool)
    mean = features[train_mask].mean(axis=0)
    std = features[train_mask].std(axis=0)
    std[std == 0.0] = 1.0
    return (features - mean) / std


def write_results(path, reports, append: bool = False):
    """Write one CSV row per report; appending suppresses the header."""
    write_header = not (append and os.path.exists(path) and os.path.getsize(path) > 0)
    mode = "a" if append else "w"
    with open(path, mode, newline="") as f:
        writer = csv.writer(f)
        if write_header:
            writer.writerow(RESULT_COLUMNS)
        for report in reports:
            writer.writerow(report.row())


def read_results(path):
    """Parse a results CSV back into MetricsReport objects."""
    reports = []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        for row in reader:
            reports.append(
                MetricsReport(
                    accuracy=float(row["acc"]),
                    dp=float(row["dp"]),
                    eo=float(row["eo"]),
                    fairness_obj=float(row["fairness_obj"]),
                    n_eval=int(row["n_eval"]),
                    seed=int(row["seed"]),
                    config_fingerprint=row["fingerprint"],
                    scheme=row["scheme"],
                    lambda_s=float(row["lambda_s"]),
                    lambda_f=float(row["lambda_f"]),
                    wall_time_ms=float(row["wall_time_ms"]),
                )
            )
    return reports
