"""Graph Co-Training over two feature views of the same episode.

Each round fits one IGL classifier per view on that view's current support,
scores the shared pool, and lets each view pick its single most confident
(sample, class) pair. The pick of one view joins the *other* view's support
with a one-hot pseudo label, and picked samples leave the pool. Queries are
finally labeled by the mean of the two views' score matrices.
"""
from dataclasses import dataclass, field, replace

import numpy as np

from . import igl as iglmod
from .errors import ValidationError
from .episodes import SUPERVISED_REGIMES

MODALITIES = ("a", "b")


@dataclass(frozen=True)
class GctConfig:
    igl: iglmod.IglConfig = field(default_factory=iglmod.IglConfig)
    confidence: str = "raw"
    # "auto": each view may pseudo-label a class at most ceil(pool / (2 K)) times
    class_cap: object = "auto"
    max_rounds: int = None

    def __post_init__(self):
        if self.confidence not in ("raw", "softmax"):
            raise ValidationError(f"unknown confidence {self.confidence!r}")
        cap = self.class_cap
        if not (cap is None or cap == "auto" or (isinstance(cap, int) and cap >= 1)):
            raise ValidationError(f"class_cap must be 'auto', None or >= 1, got {cap!r}")

    def cap_for(self, pool_size, n_classes):
        if self.class_cap == "auto":
            return max(1, -(-pool_size // (2 * n_classes)))
        return self.class_cap


@dataclass(frozen=True)
class Selection:
    round: int
    modality: str
    sample_id: object
    class_label: object
    score: float


@dataclass(frozen=True)
class CoTrainState:
    """Per-view supports plus the shared pool; views are keyed "a" and "b"."""

    class_order: tuple
    support_X: dict
    support_Y: dict
    support_ids: dict
    pool_ids: tuple
    pool_X: dict
    models: dict = field(default_factory=dict)
    round: int = 0
    log: tuple = ()
    initial_pool: int = 0


@dataclass(frozen=True)
class EpisodeResult:
    query_ids: tuple
    true_labels: tuple
    predicted: list
    soft: dict
    fused: np.ndarray
    accuracy: float
    rounds: int
    log: tuple


def _softmax_rows(S):
    Z = np.exp(S - S.max(axis=1, keepdims=True))
    return Z / Z.sum(axis=1, keepdims=True)


def select_most_confident(soft, eligible=None, allowed_classes=None):
    """Position of the largest entry of ``soft`` over eligible rows/columns.

    ``eligible`` is a sequence of row indices (default: all rows). Returns
    ``(row, column, score)``, with ties going to the lower row and then the
    lower column, or ``None`` when nothing is eligible.
    """
    soft = np.asarray(soft, dtype=np.float64)
    rows = np.arange(soft.shape[0]) if eligible is None else np.asarray(eligible, dtype=int)
    cols = np.arange(soft.shape[1]) if allowed_classes is None else np.asarray(allowed_classes, dtype=int)
    if rows.size == 0 or cols.size == 0:
        return None
    rows, cols = np.sort(rows), np.sort(cols)
    sub = soft[np.ix_(rows, cols)]
    flat = int(np.argmax(sub))
    r, c = divmod(flat, sub.shape[1])
    return int(rows[r]), int(cols[c]), float(sub[r, c])


def init_state(ep, data, regime):
    """Starting state for ``ep``; the pool depends on the regime."""
    regime = regime.upper()
    if regime in SUPERVISED_REGIMES and ep.unlabeled:
        raise ValidationError(f"{regime} episodes must not carry unlabeled samples")
    if regime == "ISFSL":
        pool = ()
    elif regime == "TSFSL":
        pool = ep.query
    elif regime == "ISSFSL":
        pool = ep.unlabeled
    elif regime == "TSSFSL":
        pool = ep.unlabeled + ep.query
    else:
        raise ValidationError(f"unknown regime {regime!r}")

    class_order = tuple(sorted(ep.class_roster))
    sup_pos = data.positions(ep.support)
    Y = iglmod.LabelMatrix.from_labels([data.labels[i] for i in sup_pos], class_order)
    pool_pos = data.positions(pool)
    views = {"a": data.modality_a, "b": data.modality_b}
    return CoTrainState(
        class_order=class_order,
        support_X={m: views[m].columns(sup_pos) for m in MODALITIES},
        support_Y={m: Y for m in MODALITIES},
        support_ids={m: tuple(ep.support) for m in MODALITIES},
        pool_ids=tuple(pool),
        pool_X={m: views[m].columns(pool_pos) for m in MODALITIES},
        initial_pool=len(pool),
    )


def fit_views(state, cfg):
    return {m: iglmod.fit(state.support_X[m], state.support_Y[m], cfg.igl) for m in MODALITIES}


def _allowed(state, modality, cfg):
    cap = cfg.cap_for(state.initial_pool, len(state.class_order))
    if cap is None:
        return None
    counts = np.zeros(len(state.class_order), dtype=int)
    for sel in state.log:
        if sel.modality == modality:
            counts[state.class_order.index(sel.class_label)] += 1
    return np.flatnonzero(counts < cap)


def cotrain_round(state, cfg):
    """One fit / score / cross-expand step. Returns a new state."""
    if not state.pool_ids:
        raise ValidationError("pool is empty")
    models = fit_views(state, cfg)
    picks = {}
    for m in MODALITIES:
        scores = iglmod.predict_soft(models[m], state.pool_X[m])
        if cfg.confidence == "softmax":
            scores = _softmax_rows(scores)
        pick = select_most_confident(scores, allowed_classes=_allowed(state, m, cfg))
        if pick is None:
            # per-class cap exhausted every class; fall back to the global max
            pick = select_most_confident(scores)
        picks[m] = pick

    n_cls = len(state.class_order)
    support_X, support_Y, support_ids = {}, {}, {}
    log = list(state.log)
    for m, other in (("a", "b"), ("b", "a")):
        row, col, score = picks[other]
        log_entry = Selection(state.round, other, state.pool_ids[row], state.class_order[col], score)
        support_X[m] = np.hstack([state.support_X[m], state.pool_X[m][:, [row]]])
        onehot = np.zeros((1, n_cls))
        onehot[0, col] = 1.0
        support_Y[m] = iglmod.LabelMatrix(np.vstack([state.support_Y[m].Y, onehot]), state.class_order)
        support_ids[m] = state.support_ids[m] + (state.pool_ids[row],)
        log.append(log_entry)
    log.sort(key=lambda s: (s.round, s.modality))

    taken = {picks["a"][0], picks["b"][0]}
    keep = [i for i in range(len(state.pool_ids)) if i not in taken]
    return replace(
        state,
        support_X=support_X,
        support_Y=support_Y,
        support_ids=support_ids,
        pool_ids=tuple(state.pool_ids[i] for i in keep),
        pool_X={m: state.pool_X[m][:, keep] for m in MODALITIES},
        models=models,
        round=state.round + 1,
        log=tuple(log),
    )


def fuse_predict(model_a, model_b, Xq_a, Xq_b):
    """Mean of the two views' query scores and its row-wise argmax labels."""
    if model_a.class_order != model_b.class_order:
        raise ValidationError("models disagree on class order")
    Sa = iglmod.predict_soft(model_a, Xq_a)
    Sb = iglmod.predict_soft(model_b, Xq_b)
    if Sa.shape[0] != Sb.shape[0]:
        raise ValidationError(f"query counts differ: {Sa.shape[0]} vs {Sb.shape[0]}")
    fused = (Sa + Sb) / 2.0
    return iglmod.argmax_labels(fused, model_a.class_order), fused


def run_episode(ep, data, cfg=None, regime="ISSFSL"):
    """Co-train on the regime's pool until it is exhausted, then label queries."""
    cfg = cfg or GctConfig()
    state = init_state(ep, data, regime)
    while state.pool_ids and (cfg.max_rounds is None or state.round < cfg.max_rounds):
        state = cotrain_round(state, cfg)
    models = fit_views(state, cfg)

    qpos = data.positions(ep.query)
    Xq = {"a": data.modality_a.columns(qpos), "b": data.modality_b.columns(qpos)}
    predicted, fused = fuse_predict(models["a"], models["b"], Xq["a"], Xq["b"])
    truth = tuple(data.labels[i] for i in qpos)
    correct = sum(p == t for p, t in zip(predicted, truth))
    return EpisodeResult(
        query_ids=tuple(ep.query),
        true_labels=truth,
        predicted=predicted,
        soft={m: iglmod.predict_soft(models[m], Xq[m]) for m in MODALITIES},
        fused=fused,
        accuracy=correct / len(truth) if truth else 0.0,
        rounds=state.round,
        log=state.log,
    )


def run_single_view(ep, data, cfg=None, modality="a"):
    """Plain IGL on one view: fit on the support, predict the queries."""
    cfg = cfg or GctConfig()
    view = data.modality_a if modality == "a" else data.modality_b
    class_order = tuple(sorted(ep.class_roster))
    sup, qpos = data.positions(ep.support), data.positions(ep.query)
    Y = iglmod.LabelMatrix.from_labels([data.labels[i] for i in sup], class_order)
    model = iglmod.fit(view.columns(sup), Y, cfg.igl)
    predicted = iglmod.predict(model, view.columns(qpos))
    truth = [data.labels[i] for i in qpos]
    return sum(p == t for p, t in zip(predicted, truth)) / len(truth)
