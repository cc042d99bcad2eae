"""Seeded experiment runner with CSV output.

Each trial draws its instance from ``SeedSequence(cfg.seed, spawn_key=(trial,))``
and its SIT candidates from the stream keyed by ``(cfg.seed, trial)``, so any
row can be recomputed from the config alone and parallel runs match serial
ones.  Trial and summary CSVs hold only deterministic quantities; wall times
go to a separate ``timing.csv``.
"""
from __future__ import annotations

import csv
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from math import comb
from pathlib import Path

import numpy as np

from ..errors import DegenerateY, SitError
from ..l1solve import SolverConfig, solve_lad, solve_reweighted_l1
from ..oracle import DEFAULT_CAP, certify
from ..sit import build_frame, detect, sample_detections, select_best
from .config import REGRESSION_KINDS, ExperimentConfig
from .generators import gen_detection_instance, gen_regression_instance

__all__ = [
    "TrialRecord",
    "make_instance",
    "run_experiment",
    "run_snbr_sweep",
    "run_trial",
    "score_support",
    "summarize",
]

TRIAL_FIELDS = ["trial_id", "method", "exact_support_match", "per_entry_accuracy",
                "l0_detected", "l0_true", "certificate", "error"]
SUMMARY_FIELDS = ["experiment", "method", "trials", "exact_rate", "per_entry_accuracy",
                  "certified_exact_rate", "failures"]
TIMING_FIELDS = ["experiment", "trial_id", "method", "wall_time"]


@dataclass(frozen=True)
class TrialRecord:
    """Score of one method on one trial.

    ``certificate`` is the oracle verdict for SIT detections on noiseless
    instances small enough to enumerate, else empty; ``error`` holds the
    message of a per-trial failure.
    """

    trial_id: int
    method: str
    exact_support_match: bool
    per_entry_accuracy: float
    l0_detected: int
    l0_true: int
    wall_time: float
    certificate: str = ""
    error: str = ""

    def row(self) -> dict:
        return {
            "trial_id": self.trial_id,
            "method": self.method,
            "exact_support_match": int(self.exact_support_match),
            "per_entry_accuracy": f"{self.per_entry_accuracy:.6f}",
            "l0_detected": self.l0_detected,
            "l0_true": self.l0_true,
            "certificate": self.certificate,
            "error": self.error,
        }


def make_instance(cfg: ExperimentConfig, trial_id: int):
    """``(problem, x_true, e_true)`` for one trial."""
    seed = np.random.SeedSequence(cfg.seed, spawn_key=(trial_id,))
    if cfg.is_regression:
        return gen_regression_instance(REGRESSION_KINDS[cfg.name], cfg.noise_std, seed)
    return gen_detection_instance(cfg, seed)


def sampling_seed(cfg: ExperimentConfig, trial_id: int):
    return [cfg.seed, trial_id]


def score_support(predicted, e_true) -> tuple:
    """``(exact match, per-entry accuracy)`` of a predicted error support."""
    n = e_true.size
    pred = np.zeros(n, dtype=bool)
    pred[list(predicted)] = True
    truth = e_true != 0
    return bool(np.array_equal(pred, truth)), float(np.mean(pred == truth))


def _residual_support(p, x, eps):
    return tuple(int(i) for i in np.flatnonzero(np.abs(p.y - p.a @ x) > eps))


def run_trial(cfg: ExperimentConfig, trial_id: int, solver: SolverConfig | None = None) -> list:
    """Run every configured method on trial ``trial_id``."""
    p, _, e_true = make_instance(cfg, trial_id)
    l0_true = int(np.count_nonzero(e_true))
    can_certify = cfg.noise_std == 0 and comb(p.n, p.r) <= DEFAULT_CAP
    out = []
    for method in cfg.methods:
        start = time.perf_counter()
        cert = ""
        try:
            if method == "sit":
                det = detect(p, cfg.snbr, cfg.eps, sampling_seed(cfg, trial_id), solver, cfg.bpdn_sigma)
                support = det.support
                if can_certify:
                    cert = str(certify(p, det))
            elif method == "lad":
                support = _residual_support(p, solve_lad(p.a, p.y, solver).solution, cfg.eps)
            else:
                support = _residual_support(p, solve_reweighted_l1(p.a, p.y, solver).solution, cfg.eps)
        except SitError as exc:
            elapsed = time.perf_counter() - start
            msg = f"{type(exc).__name__}: {exc}"
            out.append(TrialRecord(trial_id, method, False, 0.0, -1, l0_true, elapsed, "", msg))
            continue
        elapsed = time.perf_counter() - start
        exact, acc = score_support(support, e_true)
        out.append(TrialRecord(trial_id, method, exact, acc, len(support), l0_true, elapsed, cert))
    return out


def _run_trial_args(args):
    return run_trial(*args)


def _map_trials(fn, args, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, args))
    return [fn(a) for a in args]


def summarize(records, methods) -> list:
    """One dict per method with mean rates over its trials."""
    rows = []
    for m in methods:
        rs = [r for r in records if r.method == m]
        certs = [r.certificate for r in rs if r.certificate]
        rows.append({
            "method": m,
            "trials": len(rs),
            "exact_rate": float(np.mean([r.exact_support_match for r in rs])),
            "per_entry_accuracy": float(np.mean([r.per_entry_accuracy for r in rs])),
            "certified_exact_rate": (float(np.mean([c == "Exact" for c in certs]))
                                     if certs else None),
            "failures": sum(1 for r in rs if r.error),
            "mean_wall_time": float(np.mean([r.wall_time for r in rs])),
        })
    return rows


def _merge_csv(path: Path, fields, experiment, rows):
    """Replace ``experiment``'s rows in ``path``, keeping other experiments."""
    kept = []
    if path.exists():
        with path.open(newline="") as fh:
            kept = [r for r in csv.DictReader(fh) if r.get("experiment") != experiment]
    kept.extend(rows)
    kept.sort(key=lambda r: r["experiment"])
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        w.writerows(kept)


def _fmt(v):
    return "" if v is None else f"{v:.6f}"


def run_experiment(cfg: ExperimentConfig, workers: int | None = None,
                   solver: SolverConfig | None = None) -> list:
    """Run all trials, write the per-trial CSV plus ``summary.csv`` and
    ``timing.csv`` beside it, and return the records ordered by trial."""
    args = [(cfg, t, solver) for t in range(cfg.trials)]
    records = [r for batch in _map_trials(_run_trial_args, args, workers) for r in batch]

    out = Path(cfg.out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=TRIAL_FIELDS, lineterminator="\n")
        w.writeheader()
        w.writerows(r.row() for r in records)

    summary = summarize(records, cfg.methods)
    _merge_csv(out.parent / "summary.csv", SUMMARY_FIELDS, cfg.name, [
        {"experiment": cfg.name, "method": s["method"], "trials": s["trials"],
         "exact_rate": _fmt(s["exact_rate"]), "per_entry_accuracy": _fmt(s["per_entry_accuracy"]),
         "certified_exact_rate": _fmt(s["certified_exact_rate"]), "failures": s["failures"]}
        for s in summary
    ])
    _merge_csv(out.parent / "timing.csv", TIMING_FIELDS, cfg.name, [
        {"experiment": cfg.name, "trial_id": r.trial_id, "method": r.method,
         "wall_time": f"{r.wall_time:.6f}"}
        for r in records
    ])
    return records


# --- sample-count sweep ---------------------------------------------------------


def _sweep_trial(args):
    cfg, trial_id, values, solver = args
    p, _, e_true = make_instance(cfg, trial_id)
    try:
        frame = build_frame(p)
    except DegenerateY:
        return [score_support((), e_true)[0]] * len(values)
    dets = sample_detections(p, max(values), cfg.eps, sampling_seed(cfg, trial_id),
                             solver, cfg.bpdn_sigma, frame)
    hits = []
    for v in values:
        try:
            hits.append(score_support(select_best(dets[:v + 1]).support, e_true)[0])
        except SitError:
            hits.append(False)
    return hits


def run_snbr_sweep(cfg: ExperimentConfig, values, workers: int | None = None,
                   solver: SolverConfig | None = None, out_path=None) -> dict:
    """SIT exact-support rate for each sample count in ``values``.

    Each trial draws ``max(values)`` candidates once; smaller counts use a
    prefix of the same stream, so rates cannot decrease with the count.
    Returns ``{"rates": {snbr: rate}, "knee": snbr}`` where the knee is the
    smallest count reaching 95% of the best rate.
    """
    values = sorted(int(v) for v in values)
    args = [(cfg, t, values, solver) for t in range(cfg.trials)]
    hits = np.array(_map_trials(_sweep_trial, args, workers), dtype=bool)
    rates = {v: float(hits[:, i].mean()) for i, v in enumerate(values)}
    best = max(rates.values())
    knee = next(v for v in values if rates[v] >= 0.95 * best)
    if out_path is not None:
        out = Path(out_path)
        out.parent.mkdir(parents=True, exist_ok=True)
        with out.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["snbr", "exact_rate"])
            w.writerows([v, f"{rates[v]:.6f}"] for v in values)
    return {"rates": rates, "knee": knee}
