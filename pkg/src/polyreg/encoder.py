"""Text encoder: hashed-token embeddings, frozen base projection with a
trainable low-rank adapter, and mean/attention pooling.

This is a compact stand-in exercising the pooling and adapter interfaces;
there are no transformer layers or subword vocabularies.  The token hash
is a fixed FNV-1a 64-bit so bucket assignment is stable across platforms.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

HASH_VERSION = 1

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF

_TOKEN_RE = re.compile(
    r"(\[(?:Sample|Synthesis|MASKED)\])"
    r"|(\d+(?:\.\d+)?(?:[eE][-+]?\d+)?)"
    r"|([^\W\d_]+)"
)

POOLING_MODES = ("mean", "attention")


def fnv1a64(text: str) -> int:
    """Stable 64-bit FNV-1a hash over UTF-8 bytes."""
    h = _FNV_OFFSET
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


def tokenize(text: str) -> list[str]:
    """Lowercased word/number tokens; [MASKED] and block headers stay atomic."""
    tokens = []
    for atomic, number, word in _TOKEN_RE.findall(text):
        if atomic:
            tokens.append(atomic)
        elif number:
            tokens.append(number)
        else:
            tokens.append(word.lower())
    return tokens


def bucket_ids(tokens: list[str], vocab_size: int) -> np.ndarray:
    return np.array([fnv1a64(t) % vocab_size for t in tokens], dtype=np.int64)


@dataclass
class EncoderConfig:
    vocab_size: int = 2**16
    dim: int = 64
    rank: int = 8
    alpha: float = 16.0
    pooling_mode: str = "mean"

    def __post_init__(self):
        if not self.rank < self.dim:
            raise ValueError("low-rank condition requires rank < dim")
        if self.pooling_mode not in POOLING_MODES:
            raise ValueError(f"unknown pooling mode {self.pooling_mode!r}")


def init_encoder_params(cfg: EncoderConfig, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Initialize encoder tensors.  lora_b starts at zero so the adapter
    delta is exactly zero at initialization; w0 is frozen."""
    d, r = cfg.dim, cfg.rank
    return {
        "embed": rng.normal(0.0, 0.1, size=(cfg.vocab_size, d)),
        "w0": rng.normal(0.0, 1.0 / np.sqrt(d), size=(d, d)),
        "lora_a": rng.normal(0.0, 0.02, size=(r, d)),
        "lora_b": np.zeros((d, r)),
        "attn_q": np.zeros(d),
    }


def embed(ids: np.ndarray, table: np.ndarray) -> np.ndarray:
    """Look up embedding rows; an empty id list yields one all-zero row."""
    if ids.size == 0:
        return np.zeros((1, table.shape[1]))
    return table[ids]


def lora_project(H: np.ndarray, params: dict, cfg: EncoderConfig) -> np.ndarray:
    """x -> W0 x + (alpha/r) B (A x), applied row-wise."""
    scale = cfg.alpha / cfg.rank
    return H @ params["w0"].T + scale * (H @ params["lora_a"].T) @ params["lora_b"].T


def lora_project_backward(
    dH2: np.ndarray, H: np.ndarray, params: dict, cfg: EncoderConfig
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients (dH, dA, dB) of the low-rank projection; w0 is frozen."""
    scale = cfg.alpha / cfg.rank
    A, B = params["lora_a"], params["lora_b"]
    d = H.shape[-1]
    H_flat = H.reshape(-1, d)
    dH2_flat = dH2.reshape(-1, d)
    HA = H_flat @ A.T  # (N, r)
    dB = scale * dH2_flat.T @ HA
    dHA = dH2_flat @ B  # (N, r)
    dA = scale * dHA.T @ H_flat
    dH = (dH2_flat @ params["w0"] + scale * dHA @ A).reshape(H.shape)
    return dH, dA, dB


def pool(
    H: np.ndarray, mask: np.ndarray, params: dict, cfg: EncoderConfig
) -> tuple[np.ndarray, dict]:
    """Pool (B, T, d) rows into (B, d) vectors over unmasked positions.

    Mean mode averages unmasked rows; attention mode softmaxes q·h_t over
    unmasked rows.  Rows with no unmasked positions pool to zero.
    """
    mask = mask.astype(bool)
    counts = mask.sum(axis=-1)  # (B,)
    safe = np.maximum(counts, 1)
    if cfg.pooling_mode == "mean":
        weights = mask / safe[:, None]
    else:
        scores = H @ params["attn_q"]  # (B, T)
        scores = np.where(mask, scores, -np.inf)
        shifted = scores - np.where(counts > 0, scores.max(axis=-1, initial=-np.inf), 0.0)[:, None]
        expv = np.where(mask, np.exp(shifted), 0.0)
        denom = expv.sum(axis=-1)
        weights = expv / np.where(denom > 0, denom, 1.0)[:, None]
    pooled = np.einsum("bt,btd->bd", weights, H)
    pooled = np.where((counts > 0)[:, None], pooled, 0.0)
    return pooled, {"weights": weights, "mask": mask}


def pool_backward(
    dpooled: np.ndarray, H: np.ndarray, cache: dict, params: dict, cfg: EncoderConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Gradients (dH, dq) of the pooling step."""
    weights, mask = cache["weights"], cache["mask"]
    dH = weights[:, :, None] * dpooled[:, None, :]
    dq = np.zeros_like(params["attn_q"])
    if cfg.pooling_mode == "attention":
        dw = np.einsum("bd,btd->bt", dpooled, H)  # dL/dweights
        inner = (dw * weights).sum(axis=-1, keepdims=True)
        ds = weights * (dw - inner)  # softmax backward, zero at masked slots
        dq = np.einsum("bt,btd->d", ds, H)
        dH = dH + ds[:, :, None] * params["attn_q"][None, None, :]
    return dH, dq
