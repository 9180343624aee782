"""Evaluation: linear/log R², MAE, RMSE per head, macro aggregation,
task-level uncertainty correlation and calibration, and strict numeric
parsing for scoring external prediction files.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .model import make_batch
from .objective import sigma_from_rho
from .records import ParseFailure, parse_quantity
from .registry import N_HEADS, PropertyRegistry, PropertySpec, default_registry
from .units import IncompatibleUnit, convert


class ZeroVariance(Exception):
    """All targets equal; R² undefined."""


def r_squared(targets, preds, space: str = "linear") -> tuple[float, int]:
    """1 - SSE/SST in the chosen space; returns (r2, n_excluded).

    Log space excludes pairs with a non-positive target or prediction and
    reports the exclusion count.
    """
    y = np.asarray(targets, dtype=np.float64)
    p = np.asarray(preds, dtype=np.float64)
    excluded = 0
    if space == "log10":
        keep = (y > 0) & (p > 0)
        excluded = int((~keep).sum())
        y, p = np.log10(y[keep]), np.log10(p[keep])
    elif space != "linear":
        raise ValueError(f"unknown space {space!r}")
    if y.size < 2:
        raise ZeroVariance("need at least 2 usable pairs")
    sst = float(((y - y.mean()) ** 2).sum())
    if sst == 0.0:
        raise ZeroVariance("all targets equal")
    sse = float(((y - p) ** 2).sum())
    return 1.0 - sse / sst, excluded


def mae(targets, preds) -> float:
    y = np.asarray(targets, dtype=np.float64)
    p = np.asarray(preds, dtype=np.float64)
    return float(np.abs(p - y).mean())


def rmse(targets, preds) -> float:
    y = np.asarray(targets, dtype=np.float64)
    p = np.asarray(preds, dtype=np.float64)
    return float(np.sqrt(((p - y) ** 2).mean()))


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    xc, yc = x - x.mean(), y - y.mean()
    denom = np.sqrt((xc * xc).sum() * (yc * yc).sum())
    if denom == 0:
        raise ZeroVariance("zero variance in correlation input")
    return float((xc * yc).sum() / denom)


def rank_correlations(x, y) -> tuple[float, float]:
    """(Pearson, Spearman); Spearman is Pearson on average ranks."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size != y.size or x.size < 3:
        raise ValueError("need equal lengths >= 3")
    return pearson(x, y), pearson(rankdata(x), rankdata(y))


def calibration_ratio(rmse_per_head, sigma_per_head) -> float:
    """Mean over heads of RMSE_t / sigma_t (normalized space)."""
    r = np.asarray(rmse_per_head, dtype=np.float64)
    s = np.asarray(sigma_per_head, dtype=np.float64)
    if np.any(s <= 0):
        raise ValueError("sigma must be positive")
    return float((r / s).mean())


# ---- strict numeric-response parsing --------------------------------------

_NUM_RE = re.compile(r"[-+]?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?")


def strict_numeric_parse(text: str, head: PropertySpec | None = None) -> float | None:
    """Accept a response that is exactly one number with an optional unit.

    Ranges, hedged prose and multiple numbers are rejected (None).  With a
    head, the value converts to the head's canonical unit; an unknown or
    incompatible unit also rejects.
    """
    if not isinstance(text, str):
        return None
    stripped = text.strip().rstrip(".")
    if len(_NUM_RE.findall(stripped)) != 1:
        return None
    try:
        q = parse_quantity(stripped)
    except ParseFailure:
        return None
    if q.kind != "point":
        return None
    if head is None:
        return q.value
    if q.unit is None:
        return q.value  # bare number read in the head's canonical unit
    try:
        return convert(q.value, q.unit, head.canonical_unit)
    except IncompatibleUnit:
        return None


# ---- report ---------------------------------------------------------------


@dataclass
class HeadResult:
    head_id: int
    name: str
    n: int
    r2_linear: float | None
    r2_log: float | None
    mae: float
    rmse: float
    rmse_normalized: float | None
    primary_metric: str  # "linear" or "log"
    log_excluded: int = 0

    @property
    def primary_r2(self) -> float | None:
        return self.r2_log if self.primary_metric == "log" else self.r2_linear


@dataclass
class EvalReport:
    heads: list[HeadResult]
    macro_r2_linear: float | None = None
    macro_r2_log: float | None = None
    macro_primary_r2: float | None = None
    uncertainty_pearson: float | None = None
    uncertainty_spearman: float | None = None
    calibration_ratio: float | None = None
    sigma: dict[int, float] = field(default_factory=dict)

    def to_json(self) -> str:
        payload = {
            "heads": [vars(h) for h in self.heads],
            "macro_r2_linear": self.macro_r2_linear,
            "macro_r2_log": self.macro_r2_log,
            "macro_primary_r2": self.macro_primary_r2,
            "uncertainty_pearson": self.uncertainty_pearson,
            "uncertainty_spearman": self.uncertainty_spearman,
            "calibration_ratio": self.calibration_ratio,
            "sigma": {str(k): v for k, v in self.sigma.items()},
        }
        return json.dumps(payload, indent=2)

    def to_table(self) -> str:
        lines = ["head_id\tname\tn\tr2_linear\tr2_log\tmae\trmse\tprimary"]
        for h in self.heads:
            r2l = "NA" if h.r2_linear is None else f"{h.r2_linear:.6f}"
            r2g = "NA" if h.r2_log is None else f"{h.r2_log:.6f}"
            lines.append(
                f"{h.head_id}\t{h.name}\t{h.n}\t{r2l}\t{r2g}\t{h.mae:.6g}\t{h.rmse:.6g}\t{h.primary_metric}"
            )
        return "\n".join(lines) + "\n"


def predict(trained, instances, batch_size: int = 256) -> np.ndarray:
    """Canonical-unit predictions (n, 22) for a list of prompt instances."""
    n = len(instances)
    model = trained.model
    preds_norm = np.zeros((n, N_HEADS))
    dummy = np.zeros((1, N_HEADS))
    for start in range(0, n, batch_size):
        chunk = instances[start : start + batch_size]
        batch = make_batch(
            [i.text for i in chunk],
            np.zeros((len(chunk), N_HEADS)),
            np.zeros((len(chunk), N_HEADS), dtype=bool),
            np.zeros((len(chunk), N_HEADS)),
            model.cfg.vocab_size,
        )
        p, _ = model.forward(batch)
        preds_norm[start : start + len(chunk)] = p
    preds = np.full((n, N_HEADS), np.nan)
    for t in range(N_HEADS):
        tr = trained.transforms[t]
        if tr is not None:
            preds[:, t] = tr.denormalize(preds_norm[:, t])
    return preds


def evaluate(
    trained,
    instances,
    registry: PropertyRegistry | None = None,
    min_head_n: int = 2,
) -> EvalReport:
    """Score a trained model on held-out prompt instances."""
    registry = registry or default_registry()
    preds = predict(trained, instances)
    labels = np.stack([i.labels for i in instances])
    masks = np.stack([i.label_mask for i in instances])
    sigma = sigma_from_rho(trained.model.params["rho"])
    heads: list[HeadResult] = []
    for t in range(N_HEADS):
        tr = trained.transforms[t]
        idx = np.flatnonzero(masks[:, t] & np.isfinite(preds[:, t]))
        if tr is None or idx.size < min_head_n:
            continue
        y, p = labels[idx, t], preds[idx, t]
        spec = registry.spec(t)
        try:
            r2_lin, _ = r_squared(y, p, "linear")
        except ZeroVariance:
            r2_lin = None
        try:
            r2_log, excluded = r_squared(y, p, "log10")
        except ZeroVariance:
            r2_log, excluded = None, 0
        keep = y > 0 if tr.log_space else np.ones_like(y, dtype=bool)
        rmse_norm = (
            rmse(tr.normalize(y[keep]), tr.normalize(np.maximum(p[keep], 1e-300)))
            if keep.sum() >= 2
            else None
        )
        heads.append(
            HeadResult(
                head_id=t,
                name=spec.name,
                n=int(idx.size),
                r2_linear=r2_lin,
                r2_log=r2_log,
                mae=mae(y, p),
                rmse=rmse(y, p),
                rmse_normalized=rmse_norm,
                primary_metric="log" if spec.log_space else "linear",
                log_excluded=excluded,
            )
        )
    report = EvalReport(heads=heads, sigma={h.head_id: float(sigma[h.head_id]) for h in heads})
    lin = [h.r2_linear for h in heads if h.r2_linear is not None]
    log = [h.r2_log for h in heads if h.r2_log is not None]
    prim = [h.primary_r2 for h in heads if h.primary_r2 is not None]
    report.macro_r2_linear = float(np.mean(lin)) if lin else None
    report.macro_r2_log = float(np.mean(log)) if log else None
    report.macro_primary_r2 = float(np.mean(prim)) if prim else None
    pairs = [
        (float(sigma[h.head_id]), h.rmse_normalized)
        for h in heads
        if h.rmse_normalized is not None
    ]
    if len(pairs) >= 3:
        svec = np.array([p[0] for p in pairs])
        rvec = np.array([p[1] for p in pairs])
        try:
            report.uncertainty_pearson, report.uncertainty_spearman = rank_correlations(
                svec, rvec
            )
        except ZeroVariance:
            pass
        report.calibration_ratio = calibration_ratio(rvec, svec)
    return report


def score_prediction_file(
    path, instances, registry: PropertyRegistry | None = None
) -> tuple[EvalReport, float]:
    """Score an external baseline file of (sample_id, head, response text).

    Responses pass through strict numeric parsing; the retention fraction
    (parsed / total) is returned alongside the report.
    """
    registry = registry or default_registry()
    by_sample = {inst.sample_id: inst for inst in instances}
    values: dict[int, list[tuple[float, float]]] = {}
    total = kept = 0
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        if not header.lower().startswith("sample_id"):
            raise ValueError(f"{path}: missing prediction header")
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            sid, head_name, response = line.split("\t", 2)
            spec = registry.lookup(head_name)
            if spec is None or sid not in by_sample:
                total += 1
                continue
            total += 1
            value = strict_numeric_parse(response, spec)
            if value is None:
                continue
            inst = by_sample[sid]
            if not inst.label_mask[spec.head_id]:
                continue
            kept += 1
            values.setdefault(spec.head_id, []).append((inst.labels[spec.head_id], value))
    heads = []
    for t, pairs in sorted(values.items()):
        y = np.array([p[0] for p in pairs])
        p = np.array([p[1] for p in pairs])
        if y.size < 2:
            continue
        spec = registry.spec(t)
        try:
            r2_lin, _ = r_squared(y, p, "linear")
        except ZeroVariance:
            r2_lin = None
        try:
            r2_log, excluded = r_squared(y, p, "log10")
        except ZeroVariance:
            r2_log, excluded = None, 0
        heads.append(
            HeadResult(
                head_id=t,
                name=spec.name,
                n=int(y.size),
                r2_linear=r2_lin,
                r2_log=r2_log,
                mae=mae(y, p),
                rmse=rmse(y, p),
                rmse_normalized=None,
                primary_metric="log" if spec.log_space else "linear",
                log_excluded=excluded,
            )
        )
    report = EvalReport(heads=heads)
    lin = [h.r2_linear for h in heads if h.r2_linear is not None]
    log = [h.r2_log for h in heads if h.r2_log is not None]
    prim = [h.primary_r2 for h in heads if h.primary_r2 is not None]
    report.macro_r2_linear = float(np.mean(lin)) if lin else None
    report.macro_r2_log = float(np.mean(log)) if log else None
    report.macro_primary_r2 = float(np.mean(prim)) if prim else None
    retention = kept / total if total else 0.0
    return report, retention
