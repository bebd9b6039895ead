"""Samples, CSV ingestion, and label/cost derivation from dual-radio traces.

A sample is (feature vector, radio label, misclassification cost in bps).
The cost of a trace record is the throughput the transmitter forfeits by
picking the slower radio, so zero-cost ties carry no training signal and
are dropped at labeling time.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import DataError

FEATURE_NAMES = ("hn", "rssi", "prr", "rnp")

DATASET_HEADER = ("hn", "rssi", "prr", "rnp", "label", "cost")
TRACE_HEADER = ("node_id", "t", "tp_zigbee", "tp_lora", "hn", "rssi", "prr", "rnp")


class RadioClass(enum.IntEnum):
    """Binary radio label. Encoding fixed project-wide: Zigbee=0, Lora=1."""

    ZIGBEE = 0
    LORA = 1

    @classmethod
    def from_name(cls, name: str) -> "RadioClass":
        key = name.strip().lower()
        if key == "zigbee":
            return cls.ZIGBEE
        if key == "lora":
            return cls.LORA
        raise DataError(f"unknown radio label {name!r} (expected 'zigbee' or 'lora')")

    @property
    def short(self) -> str:
        return "Z" if self is RadioClass.ZIGBEE else "L"


def _fmt(x: float) -> str:
    """Decimal rendering with 17 significant digits: exact float round trip."""
    return f"{float(x):.17g}"


@dataclass(frozen=True)
class Scaler:
    """Per-feature affine standardization x -> (x - mean) / std."""

    mean: np.ndarray
    std: np.ndarray

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.std

    def inverse(self, X: np.ndarray) -> np.ndarray:
        return X * self.std + self.mean

    def to_dict(self) -> dict:
        return {"mean": [float(v) for v in self.mean], "std": [float(v) for v in self.std]}

    @classmethod
    def from_dict(cls, d: dict) -> "Scaler":
        mean = np.asarray(d["mean"], dtype=float)
        std = np.asarray(d["std"], dtype=float)
        if mean.shape != std.shape or mean.ndim != 1:
            raise DataError("scaler mean/std must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(std)) and np.all(std > 0)):
            raise DataError("scaler entries must be finite with std > 0")
        return cls(mean=mean, std=std)


@dataclass
class Dataset:
    """Column-oriented sample store.

    X is (N, D) float64, y is (N,) int labels in {0,1}, c is (N,) positive
    costs in bps. A non-None ``scaler`` means X already holds standardized
    features and records the transform that produced them.
    """

    X: np.ndarray
    y: np.ndarray
    c: np.ndarray
    feature_names: tuple = FEATURE_NAMES
    scaler: Scaler | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=int)
        self.c = np.asarray(self.c, dtype=float)
        if self.X.ndim != 2:
            raise DataError("X must be 2-d")
        n = self.X.shape[0]
        if n < 1:
            raise DataError("empty dataset")
        if self.y.shape != (n,) or self.c.shape != (n,):
            raise DataError("X, y, c length mismatch")
        if not np.all(np.isfinite(self.X)):
            raise DataError("non-finite feature value")
        if not np.all((self.y == 0) | (self.y == 1)):
            raise DataError("labels must be 0/1")
        if not np.all(np.isfinite(self.c) & (self.c > 0)):
            raise DataError("costs must be finite and > 0")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.X[idx], self.y[idx], self.c[idx],
                       feature_names=self.feature_names, scaler=self.scaler)


@dataclass(frozen=True)
class TraceRecord:
    """One scheduled transmission: both radios' realized throughputs plus
    the selector-visible features at send time."""

    node_id: str
    t: float
    tp_zigbee: float
    tp_lora: float
    hn: float
    rssi: float
    prr: float
    rnp: float

    def features(self) -> np.ndarray:
        return np.array([self.hn, self.rssi, self.prr, self.rnp], dtype=float)


def _check_feature_row(hn: float, rssi: float, prr: float, rnp: float, row: int) -> None:
    vals = (hn, rssi, prr, rnp)
    if not all(math.isfinite(v) for v in vals):
        raise DataError(f"row {row}: non-finite feature value")
    if hn < 1:
        raise DataError(f"row {row}: hn must be >= 1, got {hn}")
    if not (0.0 <= prr <= 1.0):
        raise DataError(f"row {row}: prr must be in [0,1], got {prr}")
    if rnp < 1:
        raise DataError(f"row {row}: rnp must be >= 1, got {rnp}")


def _read_csv_rows(path, expected_header) -> list[dict]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, expected header {','.join(expected_header)}")
        header = [h.strip() for h in header]
        missing = [c for c in expected_header if c not in header]
        extra = [c for c in header if c not in expected_header]
        if missing:
            raise DataError(f"{path}: missing column {missing[0]!r}")
        if extra:
            raise DataError(f"{path}: unexpected column {extra[0]!r}")
        if tuple(header) != tuple(expected_header):
            raise DataError(f"{path}: columns must be ordered {','.join(expected_header)}")
        rows = []
        for i, raw in enumerate(reader):
            if not raw or (len(raw) == 1 and raw[0].strip() == ""):
                continue
            if len(raw) != len(header):
                raise DataError(f"{path}: row {i}: expected {len(header)} fields, got {len(raw)}")
            rows.append(dict(zip(header, raw)))
    return rows


def _parse_float(s: str, row: int, col: str) -> float:
    try:
        return float(s)
    except ValueError:
        raise DataError(f"row {row}: cannot parse {col}={s!r} as number")


def load_dataset(path, with_scaler: bool = False) -> Dataset:
    """Read a `hn,rssi,prr,rnp,label,cost` CSV into a Dataset.

    Features are returned raw (no scaling) unless ``with_scaler`` is set,
    in which case a z-scaler is fitted, applied, and stored on the result.
    """
    rows = _read_csv_rows(path, DATASET_HEADER)
    if not rows:
        raise DataError(f"{path}: empty dataset")
    X = np.empty((len(rows), 4), dtype=float)
    y = np.empty(len(rows), dtype=int)
    c = np.empty(len(rows), dtype=float)
    for i, r in enumerate(rows):
        hn = _parse_float(r["hn"], i, "hn")
        rssi = _parse_float(r["rssi"], i, "rssi")
        prr = _parse_float(r["prr"], i, "prr")
        rnp = _parse_float(r["rnp"], i, "rnp")
        _check_feature_row(hn, rssi, prr, rnp, i)
        cost = _parse_float(r["cost"], i, "cost")
        if not math.isfinite(cost) or cost <= 0:
            raise DataError(f"row {i}: cost must be finite and > 0, got {r['cost']}")
        X[i] = (hn, rssi, prr, rnp)
        y[i] = int(RadioClass.from_name(r["label"]))
        c[i] = cost
    ds = Dataset(X, y, c)
    if with_scaler:
        ds = standardize(ds)
    return ds


def save_dataset(ds: Dataset, path) -> None:
    """Write a Dataset as CSV (raw-feature convention; scaler not persisted)."""
    path = Path(path)
    with path.open("w", newline="\n", encoding="utf-8") as fh:
        fh.write(",".join(DATASET_HEADER) + "\n")
        for i in range(ds.n):
            label = "zigbee" if ds.y[i] == 0 else "lora"
            fields = [_fmt(v) for v in ds.X[i]] + [label, _fmt(ds.c[i])]
            fh.write(",".join(fields) + "\n")


def load_traces(path) -> list[TraceRecord]:
    """Read a `node_id,t,tp_zigbee,tp_lora,hn,rssi,prr,rnp` trace CSV."""
    rows = _read_csv_rows(path, TRACE_HEADER)
    if not rows:
        raise DataError(f"{path}: empty trace file")
    out = []
    last_t: dict[str, float] = {}
    for i, r in enumerate(rows):
        t = _parse_float(r["t"], i, "t")
        tpz = _parse_float(r["tp_zigbee"], i, "tp_zigbee")
        tpl = _parse_float(r["tp_lora"], i, "tp_lora")
        if not (math.isfinite(tpz) and math.isfinite(tpl)) or tpz < 0 or tpl < 0:
            raise DataError(f"row {i}: throughputs must be finite and >= 0")
        hn = _parse_float(r["hn"], i, "hn")
        rssi = _parse_float(r["rssi"], i, "rssi")
        prr = _parse_float(r["prr"], i, "prr")
        rnp = _parse_float(r["rnp"], i, "rnp")
        _check_feature_row(hn, rssi, prr, rnp, i)
        node = r["node_id"].strip()
        if node in last_t and t < last_t[node]:
            raise DataError(f"row {i}: t decreases for node {node}")
        last_t[node] = t
        out.append(TraceRecord(node, t, tpz, tpl, hn, rssi, prr, rnp))
    return out


def save_traces(traces: list[TraceRecord], path) -> None:
    path = Path(path)
    with path.open("w", newline="\n", encoding="utf-8") as fh:
        fh.write(",".join(TRACE_HEADER) + "\n")
        for r in traces:
            fields = [r.node_id, _fmt(r.t), _fmt(r.tp_zigbee), _fmt(r.tp_lora),
                      _fmt(r.hn), _fmt(r.rssi), _fmt(r.prr), _fmt(r.rnp)]
            fh.write(",".join(fields) + "\n")


def label_traces(traces: list[TraceRecord], tie_policy: str = "drop") -> Dataset:
    """Derive labels and costs from realized throughputs.

    Label = radio with the higher throughput; cost = |tp_zigbee - tp_lora|.
    Ties (cost 0) are dropped under the default policy or rejected under
    tie_policy="error".
    """
    if not traces:
        raise DataError("no trace records")
    if tie_policy not in ("drop", "error"):
        raise DataError(f"unknown tie policy {tie_policy!r}")
    X, y, c = [], [], []
    for r in traces:
        diff = r.tp_zigbee - r.tp_lora
        if diff == 0.0:
            if tie_policy == "error":
                raise DataError(f"tied throughputs at node {r.node_id}, t={r.t}")
            continue
        X.append(r.features())
        y.append(int(RadioClass.ZIGBEE) if diff > 0 else int(RadioClass.LORA))
        c.append(abs(diff))
    if not X:
        raise DataError("all trace records tied: empty dataset")
    return Dataset(np.array(X), np.array(y), np.array(c))


def standardize(ds: Dataset) -> Dataset:
    """Z-score every feature column (population std) and store the scaler."""
    if ds.scaler is not None:
        raise DataError("dataset already standardized")
    mean = ds.X.mean(axis=0)
    std = ds.X.std(axis=0)
    for j, s in enumerate(std):
        if s <= 0:
            raise DataError(f"constant feature column {ds.feature_names[j]!r}: cannot standardize")
    scaler = Scaler(mean=mean, std=std)
    return Dataset(scaler.transform(ds.X), ds.y.copy(), ds.c.copy(),
                   feature_names=ds.feature_names, scaler=scaler)


def _stratified_counts(n: int, fractions) -> list[int]:
    # Largest-remainder apportionment; ties go to the earlier part.
    exact = [f * n for f in fractions]
    counts = [int(math.floor(e)) for e in exact]
    short = n - sum(counts)
    order = sorted(range(len(fractions)), key=lambda i: (-(exact[i] - counts[i]), i))
    for i in order[:short]:
        counts[i] += 1
    return counts


def split(ds: Dataset, fractions=(0.6, 0.2, 0.2), seed: int = 0) -> tuple:
    """Deterministic stratified split into len(fractions) disjoint parts."""
    fractions = tuple(float(f) for f in fractions)
    if any(f <= 0 for f in fractions):
        raise DataError("fractions must be positive")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise DataError(f"fractions must sum to 1, got {sum(fractions)}")
    rng = np.random.default_rng(seed)
    part_idx: list[list[int]] = [[] for _ in fractions]
    for cls in (0, 1):
        members = np.flatnonzero(ds.y == cls)
        if members.size == 0:
            continue
        perm = members[rng.permutation(members.size)]
        counts = _stratified_counts(perm.size, fractions)
        if any(k == 0 for k in counts):
            raise DataError(f"class {cls} stratum empty in one split part "
                            f"(have {perm.size} samples for fractions {fractions})")
        start = 0
        for p, k in enumerate(counts):
            part_idx[p].extend(perm[start:start + k].tolist())
            start += k
    parts = []
    for idx in part_idx:
        idx.sort()
        parts.append(ds.subset(np.array(idx, dtype=int)))
    return tuple(parts)


def stratified_kfold_indices(ds: Dataset, k: int, seed: int = 0) -> list[np.ndarray]:
    """Index arrays of k disjoint stratified folds covering the dataset."""
    if k < 2:
        raise DataError("k must be >= 2")
    if k > ds.n:
        raise DataError(f"k={k} exceeds dataset size {ds.n}")
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    offset = 0
    for cls in (0, 1):
        members = np.flatnonzero(ds.y == cls)
        perm = members[rng.permutation(members.size)]
        # offset staggers classes so small-class samples spread over folds
        for i, idx in enumerate(perm):
            folds[(i + offset) % k].append(int(idx))
        offset += members.size
    return [np.array(sorted(f), dtype=int) for f in folds]
