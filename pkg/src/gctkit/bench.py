"""Episode-loop evaluation and report writing."""
import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from . import gct
from .episodes import episode_rng, sample_episode
from .errors import CapacityError, ReportIOError, ValidationError
from .gl_baseline import GlConfig, run_episode_gl

METHODS = ("gct", "igl", "gl")
REPORT_KEYS = ("regime", "episodes", "mean_acc", "ci95", "per_episode", "config", "wall_time_s")


@dataclass
class Report:
    regime: str
    episodes: int
    mean_acc: float
    ci95: float
    per_episode: list
    config: dict
    wall_time_s: float = 0.0

    @classmethod
    def from_accuracies(cls, regime, accuracies, config, wall_time_s=0.0):
        """Build a report from per-episode accuracies given as fractions."""
        pct = [100.0 * float(a) for a in accuracies]
        mean, ci = summarize(pct)
        return cls(regime, len(pct), mean, ci, pct, dict(config), wall_time_s)

    def summary_line(self):
        return f"{self.regime}: {self.mean_acc:.2f} +- {self.ci95:.2f} ({self.episodes} episodes)"


def summarize(values):
    """Mean and normal-approximation 95% half-width ``1.96 * s / sqrt(n)``."""
    x = np.asarray(values, dtype=np.float64)
    if x.size == 0:
        raise ValidationError("no episodes to summarize")
    mean = float(x.mean())
    ci = 1.96 * float(x.std(ddof=1)) / math.sqrt(x.size) if x.size > 1 else 0.0
    return mean, ci


def config_echo(spec, cfg, method="gct", gl_cfg=None):
    c = cfg.igl
    echo = {
        "method": method,
        "lambda": c.lam,
        "mu": c.mu,
        "k": c.k,
        "ways": spec.ways,
        "shots": spec.shots,
        "queries": spec.queries,
        "unlabeled": spec.unlabeled,
        "seed": spec.seed,
        "distractors": spec.distractors,
        "laplacian": c.laplacian,
        "b_update": c.b_update,
        "normalize_features": c.normalize_features,
        "max_iters": c.max_iters,
        "rel_tol": c.rel_tol,
        "confidence": cfg.confidence,
        "class_cap": cfg.class_cap,
    }
    if method == "gl":
        g = gl_cfg or GlConfig()
        echo.update(beta=g.beta, k=g.k, laplacian=g.laplacian, normalize_features=g.normalize_features)
    return echo


def _episode_accuracy(data, spec, cfg, method, gl_cfg, index):
    try:
        ep = sample_episode(data, spec, episode_rng(spec.seed, index))
    except CapacityError as exc:
        raise CapacityError(f"episode {index}: {exc}", label=exc.label, episode_index=index) from None
    if method == "gct":
        return gct.run_episode(ep, data, cfg, spec.regime).accuracy
    if method == "igl":
        return gct.run_single_view(ep, data, cfg)
    return run_episode_gl(ep, data, gl_cfg)


def _run_chunk(args):
    data, spec, cfg, method, gl_cfg, indices = args
    return [_episode_accuracy(data, spec, cfg, method, gl_cfg, i) for i in indices]


def evaluate(data, spec, cfg=None, episodes=600, master_seed=None, jobs=1, method="gct", gl_cfg=None):
    """Run ``episodes`` independent episodes and aggregate their accuracy.

    Episode ``i`` draws from a generator seeded by ``(master_seed, i)``, so the
    result does not depend on ``jobs``.
    """
    cfg = cfg or gct.GctConfig()
    if episodes < 1:
        raise ValidationError("episodes must be >= 1")
    if method not in METHODS:
        raise ValidationError(f"unknown method {method!r}")
    if method == "igl" and spec.regime != "ISFSL":
        raise ValidationError("single-view IGL runs the ISFSL regime only")
    if master_seed is not None:
        spec = replace(spec, seed=master_seed)

    start = time.perf_counter()
    if jobs <= 1:
        accs = _run_chunk((data, spec, cfg, method, gl_cfg, range(episodes)))
    else:
        chunks = [list(range(episodes))[j::jobs] for j in range(jobs)]
        accs = [0.0] * episodes
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for idx, part in zip(chunks, pool.map(_run_chunk, [(data, spec, cfg, method, gl_cfg, c) for c in chunks])):
                for i, a in zip(idx, part):
                    accs[i] = a
    wall = time.perf_counter() - start
    return Report.from_accuracies(spec.regime, accs, config_echo(spec, cfg, method, gl_cfg), wall)


def emit_report(report, path, format="json"):
    path = Path(path)
    try:
        if format == "json":
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(asdict(report), fh, indent=2)
                fh.write("\n")
        elif format == "csv":
            with open(path, "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["row", "episode", "accuracy", "ci95"])
                for i, acc in enumerate(report.per_episode):
                    w.writerow(["episode", i, repr(acc), ""])
                w.writerow(["summary", report.episodes, repr(report.mean_acc), repr(report.ci95)])
        else:
            raise ValidationError(f"unknown report format {format!r}")
    except OSError as exc:
        raise ReportIOError(f"cannot write report {path}: {exc}") from exc


def read_report(path):
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ReportIOError(f"cannot read report {path}: {exc}") from exc
    return Report(**{k: obj[k] for k in REPORT_KEYS})
