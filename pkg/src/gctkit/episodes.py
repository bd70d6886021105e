"""Feature tables, two-view alignment, episode sampling, synthetic data.

Two on-disk formats are supported:

* CSV: header ``id,label,f0,...,f{dim-1}``, one sample per line.
* FVEC: one JSON header line ``{"modality", "dim", "n", "ids", "labels"}``
  followed by ``n * dim`` little-endian float32 values, row-major by sample.
"""
import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import AlignmentError, CapacityError, ParseError, ReportIOError, ValidationError

REGIMES = ("ISFSL", "TSFSL", "ISSFSL", "TSSFSL")
SUPERVISED_REGIMES = ("ISFSL", "TSFSL")


@dataclass(frozen=True, eq=False)
class FeatureSet:
    """Embeddings of one modality, one row of ``embeddings`` per sample."""

    modality: str
    ids: tuple
    labels: tuple
    embeddings: np.ndarray

    def __post_init__(self):
        E = np.asarray(self.embeddings, dtype=np.float64)
        if E.ndim != 2 or E.shape[0] != len(self.ids) or len(self.ids) != len(self.labels):
            raise ValidationError("ids, labels and embeddings disagree in length")
        if E.shape[1] < 1:
            raise ValidationError("embeddings must have dim >= 1")
        if len(set(self.ids)) != len(self.ids):
            seen, dup = set(), None
            for sid in self.ids:
                if sid in seen:
                    dup = sid
                    break
                seen.add(sid)
            raise ValidationError(f"duplicate sample_id {dup!r}")
        if not self.labels:
            raise ValidationError("feature set is empty")
        if not np.all(np.isfinite(E)):
            bad = int(np.argwhere(~np.isfinite(E))[0, 0])
            raise ValidationError(f"non-finite value in sample {self.ids[bad]!r}")
        E.setflags(write=False)
        object.__setattr__(self, "embeddings", E)
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def dim(self):
        return self.embeddings.shape[1]

    def __len__(self):
        return len(self.ids)

    def columns(self, positions):
        """``dim x len(positions)`` matrix of the selected embeddings."""
        return self.embeddings[np.asarray(positions, dtype=int)].T


@dataclass(frozen=True, eq=False)
class MultiModalSet:
    """Two views of the same samples, rows aligned by position."""

    modality_a: FeatureSet
    modality_b: FeatureSet

    def __post_init__(self):
        a, b = self.modality_a, self.modality_b
        if a.ids != b.ids or a.labels != b.labels:
            raise AlignmentError("modalities are not row-aligned; use align_modalities")
        object.__setattr__(self, "_position", {sid: i for i, sid in enumerate(a.ids)})
        by_class = {}
        for i, lab in enumerate(a.labels):
            by_class.setdefault(lab, []).append(i)
        # sorted so the roster draw does not depend on file order of classes
        object.__setattr__(
            self, "by_class", {lab: np.array(by_class[lab]) for lab in sorted(by_class)}
        )

    @property
    def ids(self):
        return self.modality_a.ids

    @property
    def labels(self):
        return self.modality_a.labels

    def positions(self, ids):
        return np.array([self._position[sid] for sid in ids], dtype=int)


@dataclass(frozen=True)
class EpisodeSpec:
    ways: int = 5
    shots: int = 1
    queries: int = 15
    unlabeled: int = 80
    regime: str = "ISSFSL"
    seed: int = 42
    distractors: bool = False

    def __post_init__(self):
        regime = self.regime.upper()
        object.__setattr__(self, "regime", regime)
        if regime not in REGIMES:
            raise ValidationError(f"unknown regime {self.regime!r}")
        if self.ways < 2:
            raise ValidationError("ways must be >= 2")
        if self.shots < 1 or self.queries < 1 or self.unlabeled < 0:
            raise ValidationError("need shots >= 1, queries >= 1, unlabeled >= 0")
        if regime in SUPERVISED_REGIMES and self.unlabeled != 0:
            raise ValidationError(f"{regime} takes no unlabeled pool (got {self.unlabeled})")


@dataclass(frozen=True)
class Episode:
    support: tuple
    unlabeled: tuple
    query: tuple
    class_roster: tuple


def _parse_label(text):
    try:
        return int(text)
    except ValueError:
        return text


def load_feature_table(path, format="csv", modality=None):
    """Read a feature table written in ``csv`` or ``fvec`` format."""
    path = Path(path)
    try:
        if format == "csv":
            return _load_csv(path, modality or path.stem)
        if format == "fvec":
            return _load_fvec(path, modality)
    except OSError as exc:
        raise ReportIOError(f"cannot read {path}: {exc}") from exc
    raise ValidationError(f"unknown feature format {format!r}")


def _load_csv(path, modality):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:2] != ["id", "label"] or len(header) < 3:
            raise ParseError("header must be id,label,f0,...", line=1)
        dim = len(header) - 2
        if header[2:] != [f"f{j}" for j in range(dim)]:
            raise ParseError("feature columns must be named f0..f{dim-1}", line=1)
        ids, raw_labels, rows = [], [], []
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != dim + 2:
                raise ParseError(f"expected {dim + 2} fields, got {len(row)}", line=line)
            try:
                values = [float(v) for v in row[2:]]
            except ValueError as exc:
                raise ParseError(str(exc), line=line) from None
            if not all(np.isfinite(values)):
                raise ValidationError(f"line {line}: non-finite feature value")
            ids.append(row[0])
            raw_labels.append(row[1])
            rows.append(values)
    labels = [_parse_label(t) for t in raw_labels]
    if any(isinstance(v, str) for v in labels):
        labels = raw_labels
    return FeatureSet(modality, ids, labels, np.array(rows).reshape(len(rows), dim))


def _load_fvec(path, modality):
    with open(path, "rb") as fh:
        first = fh.readline()
        body = fh.read()
    try:
        head = json.loads(first.decode("utf-8"))
        dim, n = int(head["dim"]), int(head["n"])
        ids, labels = list(head["ids"]), list(head["labels"])
    except (ValueError, KeyError, TypeError) as exc:
        raise ParseError(f"bad fvec header: {exc}", line=1) from None
    if len(ids) != n or len(labels) != n:
        raise ParseError("header ids/labels length differs from n", line=1)
    if len(body) != 4 * n * dim:
        raise ParseError(f"payload holds {len(body)} bytes, expected {4 * n * dim}", line=2)
    data = np.frombuffer(body, dtype="<f4").reshape(n, dim).astype(np.float64)
    return FeatureSet(modality or head.get("modality", path.stem), ids, labels, data)


def write_feature_table(fs, path, format="csv"):
    path = Path(path)
    try:
        if format == "csv":
            with open(path, "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["id", "label"] + [f"f{j}" for j in range(fs.dim)])
                for sid, lab, row in zip(fs.ids, fs.labels, fs.embeddings):
                    w.writerow([sid, lab] + [repr(float(v)) for v in row])
        elif format == "fvec":
            head = {
                "modality": fs.modality,
                "dim": fs.dim,
                "n": len(fs),
                "ids": list(fs.ids),
                "labels": [_jsonable(v) for v in fs.labels],
            }
            with open(path, "wb") as fh:
                fh.write(json.dumps(head).encode("utf-8") + b"\n")
                fh.write(fs.embeddings.astype("<f4").tobytes())
        else:
            raise ValidationError(f"unknown feature format {format!r}")
    except OSError as exc:
        raise ReportIOError(f"cannot write {path}: {exc}") from exc


def _jsonable(v):
    return v.item() if isinstance(v, np.generic) else v


def align_modalities(a, b):
    """Reorder ``b`` to follow ``a``'s sample order and pair them up."""
    pos_b = {sid: i for i, sid in enumerate(b.ids)}
    missing = [sid for sid in a.ids if sid not in pos_b]
    extra = [sid for sid in b.ids if sid not in set(a.ids)]
    if missing or extra:
        bad = (missing + extra)[:10]
        raise AlignmentError(f"sample ids differ between modalities: {bad}", bad)
    order = [pos_b[sid] for sid in a.ids]
    clash = [sid for sid, lab, i in zip(a.ids, a.labels, order) if lab != b.labels[i]][:10]
    if clash:
        raise AlignmentError(f"labels disagree for ids: {clash}", clash)
    b_aligned = FeatureSet(b.modality, a.ids, a.labels, b.embeddings[order])
    return MultiModalSet(a, b_aligned)


def episode_rng(master_seed, index):
    """Independent generator for episode ``index`` of a run."""
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), int(index)]))


def _rng(rng_state):
    if isinstance(rng_state, np.random.Generator):
        return rng_state
    return np.random.default_rng(rng_state)


def sample_episode(data, spec, rng_state):
    """Draw one episode: roster, then support/query per class, then the pool."""
    rng = _rng(rng_state)
    by_class = data.by_class
    classes = list(by_class)
    if len(classes) < spec.ways:
        raise CapacityError(f"{spec.ways}-way episode needs {spec.ways} classes, data has {len(classes)}")
    roster = [classes[i] for i in sorted(rng.choice(len(classes), spec.ways, replace=False))]

    need = spec.shots + spec.queries
    support, query, leftover = [], [], []
    for lab in roster:
        members = by_class[lab]
        if len(members) < need:
            raise CapacityError(
                f"class {lab!r} has {len(members)} samples, episode needs {need}", label=lab
            )
        perm = members[rng.permutation(len(members))]
        support.extend(perm[: spec.shots])
        query.extend(perm[spec.shots: need])
        leftover.extend(perm[need:])
    if spec.distractors:
        roster_set = set(roster)
        for lab in classes:
            if lab not in roster_set:
                leftover.extend(by_class[lab])
    if len(leftover) < spec.unlabeled:
        raise CapacityError(
            f"unlabeled pool needs {spec.unlabeled} samples, only {len(leftover)} remain"
        )
    leftover = np.sort(np.array(leftover, dtype=int))
    pool = leftover[rng.choice(len(leftover), spec.unlabeled, replace=False)] if spec.unlabeled else []

    ids = data.ids
    return Episode(
        support=tuple(ids[i] for i in support),
        unlabeled=tuple(ids[i] for i in pool),
        query=tuple(ids[i] for i in query),
        class_roster=tuple(roster),
    )


def _class_means(rng, n_classes, dim, separation):
    """Random means rescaled so the closest pair is exactly ``separation`` apart."""
    means = rng.standard_normal((n_classes, dim))
    if separation == 0:
        return np.zeros_like(means)
    gaps = np.sqrt(((means[:, None] - means[None]) ** 2).sum(-1))
    return means * (separation / gaps[~np.eye(n_classes, dtype=bool)].min())


def synth_two_modal(n_classes=5, per_class=100, dim=32, separation=6.0, rng_state=0):
    """Two-view Gaussian blobs sharing ids and labels.

    Each view places its own class means (pairwise distance >= ``separation``)
    and draws its own unit-variance isotropic noise, so the two views make
    independent errors.
    """
    if n_classes < 2 or per_class < 2 or dim < 2:
        raise ValidationError("need n_classes >= 2, per_class >= 2, dim >= 2")
    if separation < 0:
        raise ValidationError("separation must be >= 0")
    rng = _rng(rng_state)
    labels = np.repeat(np.arange(n_classes), per_class)
    ids = [f"s{i:06d}" for i in range(n_classes * per_class)]
    views = []
    for name in ("a", "b"):
        means = _class_means(rng, n_classes, dim, separation)
        emb = means[labels] + rng.standard_normal((labels.size, dim))
        views.append(FeatureSet(name, ids, labels.tolist(), emb))
    return MultiModalSet(*views)
