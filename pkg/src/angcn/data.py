"""Synthetic dataset generation, file formats, and checkpoints.

The generator stands in for restricted clinical cohorts: it draws one latent
connectivity template per class, perturbs it per subject, and runs each
subject's correlation matrix through the Fisher-transform pipeline, so the
feature vectors have the same shape and provenance as connectome features.
Two phenotypic measures accompany them: a site-like categorical one and an
age-like thresholded one, each weakly class-informative.

All files are CSV/JSON written atomically (temp + rename); floats round-trip
exactly.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParseError, SchemaMismatch
from .graph_core import Graph
from .model import ModelParams
from .popgraph import QUALITATIVE, QUANTITATIVE, PhenotypicMeasure, connectome_features

CHECKPOINT_VERSION = 1

# Scales chosen so class_separation ~ 2 gives a dataset a linear model can
# fit well while class_separation = 0 carries no signal at all. The subject
# noise keeps the class signal in the similarity kernel noisy per pair, so
# graph smoothing helps shallow stacks and genuinely destroys signal in deep
# ones.
_TEMPLATE_SCALE = 0.3
_SEPARATION_SCALE = 0.2
_SUBJECT_NOISE = 0.5
_SITES = ("site_a", "site_b", "site_c")


@dataclass(frozen=True)
class SyntheticSpec:
    n_subjects: int = 300
    n_roi: int = 16
    class_separation: float = 2.0
    phenotype_informativeness: float = 0.1
    seed: int = 0
    n_classes: int = 2
    age_tau: float = 2.0

    def __post_init__(self):
        if self.n_subjects < 20:
            raise ValueError(f"need at least 20 subjects, got {self.n_subjects}")
        if self.class_separation < 0:
            raise ValueError(f"class_separation must be >= 0, got {self.class_separation}")
        if not 0.0 <= self.phenotype_informativeness <= 1.0:
            raise ValueError("phenotype_informativeness must be in [0, 1]")
        if self.n_classes != 2:
            raise ValueError("only binary generation is supported")


@dataclass
class DatasetBundle:
    features: np.ndarray                 # N x F
    phenotypes: list[PhenotypicMeasure]
    labels: np.ndarray                   # N ints in {0, 1}
    name: str = "synthetic"

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        n = self.features.shape[0]
        if self.labels.shape != (n,):
            raise ValueError(f"labels shape {self.labels.shape} != ({n},)")
        for m in self.phenotypes:
            if len(m.values) != n:
                raise ValueError(f"measure {m.name!r} does not cover all {n} subjects")

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, DatasetBundle)
            and self.name == other.name
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
            and self.phenotypes == other.phenotypes
        )


def generate_synthetic(spec: SyntheticSpec) -> DatasetBundle:
    """Deterministic two-community connectome-style dataset."""
    rng = np.random.default_rng(spec.seed)
    n, n_roi = spec.n_subjects, spec.n_roi
    m = n_roi * (n_roi - 1) // 2

    labels = np.zeros(n, dtype=int)
    labels[n // 2 :] = 1
    labels = rng.permutation(labels)

    base = rng.normal(0.0, _TEMPLATE_SCALE, size=m)
    direction = rng.normal(0.0, 1.0, size=m)
    offset = 0.5 * spec.class_separation * _SEPARATION_SCALE * direction
    templates = {0: base - offset, 1: base + offset}

    features = np.zeros((n, m))
    iu = np.triu_indices(n_roi, k=1)
    for i in range(n):
        z = templates[int(labels[i])] + rng.normal(0.0, _SUBJECT_NOISE, size=m)
        z = np.clip(z, -8.0, 8.0)
        corr = np.eye(n_roi)
        corr[iu] = np.tanh(z)
        corr = np.triu(corr) + np.triu(corr, k=1).T
        features[i] = connectome_features(corr)

    p = spec.phenotype_informativeness
    sites = []
    for i in range(n):
        if rng.uniform() < p:
            sites.append(_SITES[int(labels[i])])
        else:
            sites.append(_SITES[int(rng.integers(0, len(_SITES)))])
    ages = rng.uniform(20.0, 60.0, size=n) + 4.0 * p * (labels - 0.5)

    phenotypes = [
        PhenotypicMeasure(name="site", kind=QUALITATIVE, values=tuple(sites)),
        PhenotypicMeasure(
            name="age",
            kind=QUANTITATIVE,
            values=tuple(float(a) for a in ages),
            tau=spec.age_tau,
        ),
    ]
    return DatasetBundle(features=features, phenotypes=phenotypes, labels=labels)


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------

def _atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x: float) -> str:
    return repr(float(x))


def save_bundle(bundle: DatasetBundle, directory: str | Path) -> None:
    """Write features.csv, phenotypes.csv (+ schema), and labels.csv."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    n, f = bundle.features.shape

    lines = ["subject_id," + ",".join(f"f{k}" for k in range(f))]
    for i in range(n):
        lines.append(str(i) + "," + ",".join(_fmt(v) for v in bundle.features[i]))
    _atomic_write(directory / "features.csv", "\n".join(lines) + "\n")

    lines = ["subject_id," + ",".join(m.name for m in bundle.phenotypes)]
    for i in range(n):
        cells = [str(i)]
        for m in bundle.phenotypes:
            cells.append(_fmt(m.values[i]) if m.kind == QUANTITATIVE else str(m.values[i]))
        lines.append(",".join(cells))
    _atomic_write(directory / "phenotypes.csv", "\n".join(lines) + "\n")

    schema = []
    for m in bundle.phenotypes:
        entry: dict = {"name": m.name, "kind": m.kind}
        if m.kind == QUANTITATIVE:
            entry["tau"] = m.tau
        schema.append(entry)
    _atomic_write(directory / "phenotypes.schema.json", json.dumps(schema, indent=2) + "\n")

    lines = ["subject_id,label"]
    for i in range(n):
        lines.append(f"{i},{int(bundle.labels[i])}")
    _atomic_write(directory / "labels.csv", "\n".join(lines) + "\n")


def _read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    try:
        with open(path, "r", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not rows:
        raise ParseError(f"{path}: line 1: empty file")
    return rows[0], rows[1:]


def _parse_float(cell: str, path: Path, line: int, column: str) -> float:
    try:
        return float(cell)
    except ValueError as exc:
        raise ParseError(
            f"{path}: line {line}, column {column!r}: cannot parse {cell!r} as a number"
        ) from exc


def load_bundle(directory: str | Path, name: str = "synthetic") -> DatasetBundle:
    """Read the CSV trio back; inverse of save_bundle."""
    directory = Path(directory)

    header, rows = _read_csv(directory / "features.csv")
    if not header or header[0] != "subject_id":
        raise SchemaMismatch(f"features.csv must start with subject_id, got {header[:1]}")
    feat_cols = header[1:]
    features = np.zeros((len(rows), len(feat_cols)))
    subject_ids = []
    for r, row in enumerate(rows):
        subject_ids.append(row[0])
        if len(row) != len(header):
            raise ParseError(f"features.csv: line {r + 2}: expected {len(header)} cells")
        for c, cell in enumerate(row[1:]):
            features[r, c] = _parse_float(cell, directory / "features.csv", r + 2, feat_cols[c])

    try:
        schema = json.loads((directory / "phenotypes.schema.json").read_text())
    except OSError as exc:
        raise ParseError(f"phenotypes.schema.json: {exc}") from exc

    header, rows = _read_csv(directory / "phenotypes.csv")
    if len(rows) != len(subject_ids):
        raise SchemaMismatch(
            f"phenotypes.csv has {len(rows)} subjects, features.csv has {len(subject_ids)}"
        )
    col_index = {name_: k for k, name_ in enumerate(header)}
    phenotypes = []
    for entry in schema:
        mname, kind = entry["name"], entry["kind"]
        if mname not in col_index:
            raise SchemaMismatch(f"phenotypes.csv is missing declared column {mname!r}")
        k = col_index[mname]
        raw = [row[k] for row in rows]
        if kind == QUANTITATIVE:
            values = tuple(
                _parse_float(cell, directory / "phenotypes.csv", r + 2, mname)
                for r, cell in enumerate(raw)
            )
            phenotypes.append(
                PhenotypicMeasure(name=mname, kind=kind, values=values, tau=entry["tau"])
            )
        else:
            phenotypes.append(PhenotypicMeasure(name=mname, kind=kind, values=tuple(raw)))

    header, rows = _read_csv(directory / "labels.csv")
    if header[:2] != ["subject_id", "label"]:
        raise SchemaMismatch(f"labels.csv header must be subject_id,label, got {header}")
    if len(rows) != len(subject_ids):
        raise SchemaMismatch(
            f"labels.csv has {len(rows)} subjects, features.csv has {len(subject_ids)}"
        )
    labels = np.zeros(len(rows), dtype=int)
    for r, row in enumerate(rows):
        if row[1] not in ("0", "1"):
            raise ParseError(f"labels.csv: line {r + 2}, column 'label': got {row[1]!r}")
        labels[r] = int(row[1])

    return DatasetBundle(features=features, phenotypes=phenotypes, labels=labels, name=name)


def save_adjacency(g: Graph, path: str | Path) -> None:
    """Write edges as i,j,weight rows with i < j."""
    lines = ["i,j,weight"]
    for i, j, w in g.edges:
        lines.append(f"{i},{j},{_fmt(w)}")
    _atomic_write(Path(path), "\n".join(lines) + "\n")


def load_adjacency(path: str | Path, n: int) -> Graph:
    header, rows = _read_csv(Path(path))
    if header[:3] != ["i", "j", "weight"]:
        raise SchemaMismatch(f"adjacency header must be i,j,weight, got {header}")
    edges = []
    for r, row in enumerate(rows):
        i, j = int(row[0]), int(row[1])
        w = _parse_float(row[2], Path(path), r + 2, "weight")
        edges.append((i, j, w))
    return Graph(n=n, edges=tuple(edges))


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

def _encode_matrix(mat: np.ndarray) -> dict:
    return {
        "shape": list(mat.shape),
        "data": [f"{v:.16e}" for v in mat.ravel()],
    }


def _decode_matrix(obj: dict) -> np.ndarray:
    return np.array([float(v) for v in obj["data"]]).reshape(obj["shape"])


def stats_digest(payload: str) -> str:
    return hashlib.sha256(payload.encode()).hexdigest()


def save_checkpoint(
    path: str | Path,
    params: ModelParams,
    config: dict,
    gamma_digest: str,
    seed: int,
) -> None:
    """Versioned JSON checkpoint; floats carry 17 significant digits so the
    round-trip is bit-exact."""
    payload = {
        "format_version": CHECKPOINT_VERSION,
        "config": config,
        "seed": seed,
        "gamma_digest": gamma_digest,
        "alpha": params.alpha,
        "beta": params.beta,
        "input_projection": _encode_matrix(params.input_projection),
        "layers": [_encode_matrix(w) for w in params.layers],
        "output_head": _encode_matrix(params.output_head),
    }
    _atomic_write(Path(path), json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_checkpoint(path: str | Path) -> tuple[ModelParams, dict, str, int]:
    try:
        payload = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if payload.get("format_version") != CHECKPOINT_VERSION:
        raise SchemaMismatch(
            f"checkpoint version {payload.get('format_version')} != {CHECKPOINT_VERSION}"
        )
    params = ModelParams(
        input_projection=_decode_matrix(payload["input_projection"]),
        layers=[_decode_matrix(w) for w in payload["layers"]],
        output_head=_decode_matrix(payload["output_head"]),
        alpha=payload["alpha"],
        beta=payload["beta"],
    )
    return params, payload["config"], payload["gamma_digest"], payload["seed"]
