"""Evaluation protocol: pointmap conversion, densification, normalized RMSE,
PCK, precision/recall, and the paired signed-rank test.

All errors live in normalized floor-plan coordinates (each image remapped to
the unit square), so models with different output resolutions compare
directly. A prediction counts as correct when its Euclidean error is below
``DEFAULT_CORRECT_THRESH`` normalized units.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .correspondence import CorrespondenceSet
from .dataset.manifest import Dataset
from .errors import (
    AllZeroDifferences,
    ConfidenceRequired,
    DimensionMismatch,
    EmptyErrors,
    EmptyGroundTruth,
    EmptySparseSet,
    LengthMismatch,
    MissingPredictions,
)
from .predictions import PredictionSet, load_predictions, prediction_path

DEFAULT_CORRECT_THRESH = 0.05
DEFAULT_QUERY_TOL_PX = 0.5
DEFAULT_PCK_THRESHOLDS = tuple(np.round(np.arange(0.01, 0.51, 0.01), 2))


# ------------------------------------------------------------- input adapters

def pointmap_to_predictions(pointmap, confidence=None, convention="normalized",
                            plan_size=None, *, scene_id="", plan_id="",
                            image_id=0) -> PredictionSet:
    """Turn an H x W grid of 3D coordinates into per-pixel plan predictions.

    Cell (u, v) holds the 3D location of photo pixel (u, v) in the plan
    frame; the up (middle) coordinate is dropped. With the ``plan_pixels``
    convention the remaining (x, z) are divided per-axis by ``plan_size``.
    """
    pm = np.asarray(pointmap, dtype=np.float64)
    if pm.ndim != 3 or pm.shape[2] != 3:
        raise DimensionMismatch(f"pointmap must be HxWx3, got {pm.shape}")
    h, w = pm.shape[:2]
    if confidence is not None:
        confidence = np.asarray(confidence, dtype=np.float64)
        if confidence.shape != (h, w):
            raise DimensionMismatch(
                f"confidence grid {confidence.shape} does not match pointmap {(h, w)}"
            )
    if convention not in ("plan_pixels", "normalized"):
        raise ValueError(f"unknown convention {convention!r}")

    vs, us = np.mgrid[0:h, 0:w]
    pred = pm[:, :, [0, 2]].reshape(-1, 2)  # drop the up coordinate
    if convention == "plan_pixels":
        if plan_size is None:
            raise ValueError("plan_pixels convention requires plan_size")
        pred = pred / np.asarray(plan_size, dtype=np.float64)
    return PredictionSet(
        scene_id=scene_id,
        plan_id=plan_id,
        image_id=image_id,
        query_xy=np.column_stack([us.ravel(), vs.ravel()]).astype(np.float64),
        pred_norm=pred,
        confidence=None if confidence is None else confidence.ravel(),
    )


def densify_sparse(sparse_query_xy, sparse_pred_norm, queries,
                   sparse_confidence=None, *, scene_id="", plan_id="",
                   image_id=0) -> PredictionSet:
    """Nearest-neighbor densification of sparse matches onto query pixels.

    Each query adopts the prediction of its Euclidean-nearest sparse query;
    exact ties go to the lowest sparse index.
    """
    sparse_query_xy = np.asarray(sparse_query_xy, dtype=np.float64).reshape(-1, 2)
    sparse_pred_norm = np.asarray(sparse_pred_norm, dtype=np.float64).reshape(-1, 2)
    queries = np.asarray(queries, dtype=np.float64).reshape(-1, 2)
    if len(sparse_query_xy) == 0:
        raise EmptySparseSet("no sparse matches to densify")
    if len(sparse_query_xy) != len(sparse_pred_norm):
        raise ValueError("sparse queries and predictions differ in length")

    nearest = np.empty(len(queries), dtype=np.int64)
    # Chunked exhaustive scan; np.argmin picks the first (lowest) index on ties.
    chunk = max(1, int(4_000_000 // max(1, len(sparse_query_xy))))
    for start in range(0, len(queries), chunk):
        q = queries[start:start + chunk]
        d2 = ((q[:, None, :] - sparse_query_xy[None, :, :]) ** 2).sum(axis=2)
        nearest[start:start + len(q)] = np.argmin(d2, axis=1)
    conf = None
    if sparse_confidence is not None:
        conf = np.asarray(sparse_confidence, dtype=np.float64)[nearest]
    return PredictionSet(
        scene_id=scene_id,
        plan_id=plan_id,
        image_id=image_id,
        query_xy=queries,
        pred_norm=sparse_pred_norm[nearest],
        confidence=conf,
    )


# ------------------------------------------------------------------- matching

def _match_queries(pred: PredictionSet, gt: CorrespondenceSet,
                   tol_px: float = DEFAULT_QUERY_TOL_PX) -> np.ndarray:
    """Index of the prediction answering each GT record's photo pixel."""
    if len(gt) == 0:
        raise EmptyGroundTruth(f"pair {gt.key} has no records")
    from scipy.spatial import cKDTree

    tree = cKDTree(pred.query_xy)
    dist, idx = tree.query(gt.photo_xy, k=1)
    missing = dist > tol_px
    if missing.any():
        absent = gt.photo_xy[missing]
        raise MissingPredictions(
            f"pair {gt.key}: {int(missing.sum())} of {len(gt)} ground-truth "
            f"queries have no prediction within {tol_px} px",
            missing=[tuple(p) for p in absent[:50]],
        )
    return idx


def record_errors(pred: PredictionSet, gt: CorrespondenceSet,
                  tol_px: float = DEFAULT_QUERY_TOL_PX) -> np.ndarray:
    """Per-record normalized Euclidean distances between prediction and GT."""
    idx = _match_queries(pred, gt, tol_px)
    delta = pred.pred_norm[idx] - gt.plan_norm
    return np.sqrt((delta ** 2).sum(axis=1))


def rmse(pred: PredictionSet, gt: CorrespondenceSet,
         tol_px: float = DEFAULT_QUERY_TOL_PX) -> float:
    """Root mean squared normalized error over the pair's GT records."""
    idx = _match_queries(pred, gt, tol_px)
    delta = pred.pred_norm[idx] - gt.plan_norm
    return float(np.sqrt((delta ** 2).sum(axis=1).mean()))


# --------------------------------------------------------------------- curves

def pck(errors, thresholds) -> list:
    """Fraction of records with error <= threshold, for each threshold."""
    errors = np.asarray(errors, dtype=np.float64).ravel()
    if len(errors) == 0:
        raise EmptyErrors("no errors to pool")
    thresholds = [float(t) for t in thresholds]
    if any(b < a for a, b in zip(thresholds, thresholds[1:])):
        raise ValueError("thresholds must be sorted ascending")
    return [(t, float((errors <= t).mean())) for t in thresholds]


def pr_curve(pred: PredictionSet, gt: CorrespondenceSet,
             correct_thresh: float = DEFAULT_CORRECT_THRESH,
             tol_px: float = DEFAULT_QUERY_TOL_PX) -> list:
    """Precision/recall swept over the sorted unique confidence values.

    A prediction is correct when its normalized error is below
    ``correct_thresh``; precision over zero emissions is defined as 1.
    """
    if pred.confidence is None:
        raise ConfidenceRequired(f"pair {gt.key}: predictions carry no confidence")
    idx = _match_queries(pred, gt, tol_px)
    delta = pred.pred_norm[idx] - gt.plan_norm
    errors = np.sqrt((delta ** 2).sum(axis=1))
    conf = pred.confidence[idx]
    return _pr_points(conf, errors < correct_thresh, total_gt=len(gt))


def _pr_points(conf, correct, total_gt) -> list:
    out = []
    for tau in np.unique(conf):
        emitted = conf >= tau
        n_emitted = int(emitted.sum())
        n_correct = int((emitted & correct).sum())
        precision = 1.0 if n_emitted == 0 else n_correct / n_emitted
        out.append((float(tau), precision, n_correct / total_gt))
    return out


# -------------------------------------------------------------- paired test

def _exact_two_sided_p(ranks: np.ndarray, w: float) -> float:
    # Distribution of 2*W+ over all sign assignments via subset-sum counting;
    # doubling makes tied (half-integer) ranks integral.
    ranks2 = np.rint(2.0 * ranks).astype(np.int64)
    total = int(ranks2.sum())
    counts = np.zeros(total + 1)
    counts[0] = 1.0
    for r in ranks2:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total + 1 - r]
        counts += shifted
    w2 = int(round(2.0 * w))
    low = counts[: w2 + 1].sum()
    high = counts[total - w2:].sum()
    return min(1.0, (low + high) / 2.0 ** len(ranks2))


def _approx_two_sided_p(abs_diffs: np.ndarray, w: float) -> float:
    n = len(abs_diffs)
    mu = n * (n + 1) / 4.0
    _, tie_counts = np.unique(abs_diffs, return_counts=True)
    tie_counts = tie_counts.astype(np.float64)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - float((tie_counts ** 3 - tie_counts).sum()) / 48.0
    if var <= 0:
        return 1.0
    z = (w - mu + 0.5) / math.sqrt(var)  # continuity correction toward the center
    return min(1.0, math.erfc(-z / math.sqrt(2.0)))


def wilcoxon_signed_rank(a, b, method: str = "auto"):
    """Two-sided Wilcoxon signed-rank test on paired samples.

    Zero differences are dropped, ties receive average ranks, and the
    statistic is W = min(W+, W-). The p-value is exact (full sign
    enumeration) for n <= 25 and a tie- and continuity-corrected normal
    approximation beyond; ``method`` forces "exact" or "approx".
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if len(a) != len(b):
        raise LengthMismatch(f"paired samples differ in length: {len(a)} vs {len(b)}")
    d = a - b
    d = d[d != 0.0]
    if len(d) == 0:
        raise AllZeroDifferences("every paired difference is zero")
    abs_d = np.abs(d)
    ranks = rankdata(abs_d)
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    w = min(w_plus, w_minus)
    if method == "auto":
        method = "exact" if len(d) <= 25 else "approx"
    if method == "exact":
        p = _exact_two_sided_p(ranks, w)
    elif method == "approx":
        p = _approx_two_sided_p(abs_d, w)
    else:
        raise ValueError(f"unknown method {method!r}")
    return w, p


def improvement_ratio(ours: float, baseline: float) -> float:
    """Relative error reduction, 1 - ours/baseline."""
    if baseline <= 0:
        raise ValueError("baseline error must be positive")
    return 1.0 - ours / baseline


# ----------------------------------------------------------------- evaluation

@dataclass
class PairResult:
    scene_id: str
    plan_id: str
    image_id: int
    rmse: float
    n_records: int


@dataclass
class MetricReport:
    per_pair: list
    aggregate_rmse: float  # mean of per-pair RMSEs
    pck: list  # pooled over all records: (threshold, fraction)
    pck_per_pair: list  # mean of per-pair fractions: (threshold, fraction)
    pr: list = None  # (confidence threshold, precision, recall), when available
    tests: dict = field(default_factory=dict)  # baseline name -> (W, p) or error str
    failures: list = field(default_factory=list)  # machine-readable skip reasons
    n_expected: int = 0
    n_evaluated: int = 0


def _collect_pair_errors(dataset: Dataset, root, split, tol_px, failures, tag=""):
    """Per-pair normalized error vectors keyed by pair, plus failure records."""
    out = {}
    confs = {}
    for gt in dataset.iter_pairs(split):
        key = gt.key
        path = prediction_path(root, gt.scene_id, gt.plan_id, gt.image_id)
        if path is None:
            failures.append({"pair": list(key), "source": tag, "error": "missing prediction"})
            continue
        try:
            pred = load_predictions(path)
            pred.validate_queries(gt.photo_size)
            idx = _match_queries(pred, gt, tol_px)
        except Exception as exc:  # noqa: BLE001 - report, never abort the batch
            failures.append({"pair": list(key), "source": tag, "error": str(exc)})
            continue
        delta = pred.pred_norm[idx] - gt.plan_norm
        out[key] = np.sqrt((delta ** 2).sum(axis=1))
        confs[key] = None if pred.confidence is None else pred.confidence[idx]
    return out, confs


def evaluate(dataset: Dataset, predictions_root, *, split="test",
             baselines=None, pck_thresholds=DEFAULT_PCK_THRESHOLDS,
             correct_thresh: float = DEFAULT_CORRECT_THRESH,
             tol_px: float = DEFAULT_QUERY_TOL_PX,
             allow_missing: bool = False) -> MetricReport:
    """Assemble the full metric protocol over every pair in ``split``.

    Predictions live under ``predictions_root/<scene>/<plan>/<image>.c3p``
    (or ``.c3pr``). ``baselines`` maps a name to another predictions root;
    each is compared to the main predictions with the signed-rank test over
    per-pair RMSEs. Missing or unreadable pairs abort unless
    ``allow_missing``, in which case they are reported in ``failures``.
    """
    failures = []
    expected = [gt.key for gt in dataset.iter_pairs(split)]
    errors_by_pair, confs_by_pair = _collect_pair_errors(
        dataset, predictions_root, split, tol_px, failures, tag="main"
    )
    if failures and not allow_missing:
        raise MissingPredictions(
            f"{len(failures)} of {len(expected)} pairs unusable: "
            f"{failures[0]['error']} (first)",
            missing=[f["pair"] for f in failures],
        )

    keys = sorted(errors_by_pair)
    per_pair = []
    pooled = []
    per_pair_rmse = {}
    for key in keys:
        err = errors_by_pair[key]
        value = float(np.sqrt((err ** 2).mean()))
        per_pair.append(PairResult(key[0], key[1], key[2], value, len(err)))
        per_pair_rmse[key] = value
        pooled.append(err)
    if not per_pair:
        raise EmptyGroundTruth(f"no evaluable pairs in split {split!r}")
    pooled = np.concatenate(pooled)

    pck_pooled = pck(pooled, pck_thresholds)
    fractions = np.stack([
        [float((errors_by_pair[key] <= t).mean()) for t in pck_thresholds]
        for key in keys
    ])
    pck_mean = [(float(t), float(f)) for t, f in zip(pck_thresholds, fractions.mean(axis=0))]

    pr = None
    if all(confs_by_pair[key] is not None for key in keys):
        conf = np.concatenate([confs_by_pair[key] for key in keys])
        pr = _pr_points(conf, pooled < correct_thresh, total_gt=len(pooled))

    tests = {}
    for name, root in (baselines or {}).items():
        base_errors, _ = _collect_pair_errors(
            dataset, root, split, tol_px, failures, tag=name
        )
        shared = [k for k in keys if k in base_errors]
        if not shared:
            tests[name] = "no shared pairs"
            continue
        ours = [per_pair_rmse[k] for k in shared]
        theirs = [float(np.sqrt((base_errors[k] ** 2).mean())) for k in shared]
        try:
            tests[name] = wilcoxon_signed_rank(ours, theirs)
        except AllZeroDifferences:
            tests[name] = "all per-pair errors identical"

    return MetricReport(
        per_pair=per_pair,
        aggregate_rmse=float(np.mean([p.rmse for p in per_pair])),
        pck=pck_pooled,
        pck_per_pair=pck_mean,
        pr=pr,
        tests=tests,
        failures=failures,
        n_expected=len(expected),
        n_evaluated=len(per_pair),
    )
