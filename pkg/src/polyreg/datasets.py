"""Prompt dataset construction and file IO.

A dataset row is one sample: the masked prompt text, a sparse 22-slot
label vector in canonical units and its observation mask.  Files are TSV
with newlines in the prompt escaped and ``NA`` as the missing marker.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .records import ExtractedSample
from .prompts import build_prompt, leakage_hits, mask_labels
from .registry import N_HEADS, PropertyRegistry, default_registry


class LeakageDetected(Exception):
    """A built prompt still contains an observed target value."""


@dataclass
class PromptInstance:
    sample_id: str
    variant: str
    text: str
    labels: np.ndarray  # (22,) canonical units, NaN where unobserved
    label_mask: np.ndarray  # (22,) bool

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.float64)
        self.label_mask = np.asarray(self.label_mask, dtype=bool)
        assert self.labels.shape == (N_HEADS,) and self.label_mask.shape == (N_HEADS,)


def build_dataset(
    samples: list[ExtractedSample],
    variant: str,
    registry: PropertyRegistry | None = None,
    check_leakage: bool = True,
) -> list[PromptInstance]:
    """Turn extracted samples into masked prompt instances.

    Multiple observations of one head average to a single label; limit
    observations (no canonical value) never become labels.  The leakage
    guard re-scans every built prompt and refuses to emit leaks.
    """
    registry = registry or default_registry()
    instances = []
    for sample in samples:
        labels = np.full(N_HEADS, np.nan)
        mask = np.zeros(N_HEADS, dtype=bool)
        per_head: dict[int, list[float]] = {}
        for obs in sample.observations:
            if obs.canonical_value is not None:
                per_head.setdefault(obs.head_id, []).append(obs.canonical_value)
        for head_id, values in per_head.items():
            labels[head_id] = float(np.mean(values))
            mask[head_id] = True
        text = build_prompt(sample.sample_text, sample.synthesis_text, variant)
        text = mask_labels(text, sample.observations, registry)
        if check_leakage:
            hits = leakage_hits(text, sample.observations, registry)
            if hits:
                raise LeakageDetected(f"sample {sample.sample_id}: surviving targets {hits}")
        instances.append(PromptInstance(sample.sample_id, variant, text, labels, mask))
    return instances


def scan_dataset_for_leaks(
    instances: list[PromptInstance], registry: PropertyRegistry | None = None
) -> int:
    """Exhaustive leakage scan over a built dataset; returns the hit count."""
    registry = registry or default_registry()
    from .records import PropertyObservation, Quantity

    total = 0
    for inst in instances:
        observations = [
            PropertyObservation(
                sample_id=inst.sample_id,
                head_id=h,
                quantity=Quantity(kind="point", value=inst.labels[h]),
                canonical_value=float(inst.labels[h]),
            )
            for h in np.flatnonzero(inst.label_mask)
        ]
        total += len(leakage_hits(inst.text, observations, registry))
    return total


def _escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace("\t", "\\t").replace("\n", "\\n")


def _unescape(text: str) -> str:
    out, i = [], 0
    while i < len(text):
        c = text[i]
        if c == "\\" and i + 1 < len(text):
            nxt = text[i + 1]
            out.append({"n": "\n", "t": "\t", "\\": "\\"}.get(nxt, "\\" + nxt))
            i += 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


def save_dataset(instances: list[PromptInstance], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        heads = "\t".join(f"label_{i}" for i in range(N_HEADS))
        fh.write(f"sample_id\tvariant\ttext\t{heads}\n")
        for inst in instances:
            slots = "\t".join(
                f"{inst.labels[i]:.17g}" if inst.label_mask[i] else "NA" for i in range(N_HEADS)
            )
            fh.write(f"{inst.sample_id}\t{inst.variant}\t{_escape(inst.text)}\t{slots}\n")


def load_dataset(path) -> list[PromptInstance]:
    instances = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("sample_id\tvariant\ttext"):
            raise ValueError(f"{path}: not a prompt dataset file")
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            sid, variant, text = parts[0], parts[1], _unescape(parts[2])
            slots = parts[3:]
            if len(slots) != N_HEADS:
                raise ValueError(f"{path}: expected {N_HEADS} label slots, got {len(slots)}")
            labels = np.full(N_HEADS, np.nan)
            mask = np.zeros(N_HEADS, dtype=bool)
            for i, slot in enumerate(slots):
                if slot != "NA":
                    labels[i] = float(slot)
                    mask[i] = True
            instances.append(PromptInstance(sid, variant, text, labels, mask))
    return instances
