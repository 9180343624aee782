"""Full network: hashed-embedding encoder -> LoRA projection -> pooling ->
residual trunk -> 22 heads, with the KDE-weighted homoscedastic objective
and exact analytic gradients for every trainable tensor.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import encoder as enc
from . import regressor as reg
from .registry import N_HEADS
from .datasets import PromptInstance


@dataclass
class ModelConfig:
    vocab_size: int = 2**16
    dim: int = 64
    rank: int = 8
    alpha: float = 16.0
    pooling_mode: str = "mean"
    hidden_dim: int = 128
    n_blocks: int = 2
    freeze_embeddings: bool = False
    freeze_encoder: bool = False
    freeze_trunk: bool = False

    def encoder_config(self) -> enc.EncoderConfig:
        return enc.EncoderConfig(
            vocab_size=self.vocab_size,
            dim=self.dim,
            rank=self.rank,
            alpha=self.alpha,
            pooling_mode=self.pooling_mode,
        )

    def trunk_config(self) -> reg.TrunkConfig:
        return reg.TrunkConfig(
            input_dim=self.dim, hidden_dim=self.hidden_dim, n_blocks=self.n_blocks
        )


@dataclass
class Batch:
    """Tokenized prompts plus normalized labels for one mini-batch."""

    ids: np.ndarray  # (B, T) int64 bucket ids, 0 at padding
    token_mask: np.ndarray  # (B, T) bool
    targets: np.ndarray  # (B, 22) normalized labels, 0 where missing
    label_mask: np.ndarray  # (B, 22) bool
    weights: np.ndarray  # (B, 22) KDE weights, 0 where missing


def make_batch(
    texts: list[str],
    targets: np.ndarray,
    label_mask: np.ndarray,
    weights: np.ndarray,
    vocab_size: int,
) -> Batch:
    token_lists = [enc.tokenize(t) for t in texts]
    T = max(1, max(len(t) for t in token_lists))
    B = len(token_lists)
    ids = np.zeros((B, T), dtype=np.int64)
    mask = np.zeros((B, T), dtype=bool)
    for i, tokens in enumerate(token_lists):
        if tokens:
            ids[i, : len(tokens)] = enc.bucket_ids(tokens, vocab_size)
            mask[i, : len(tokens)] = True
    targets = np.where(label_mask, targets, 0.0)
    weights = np.where(label_mask, weights, 0.0)
    return Batch(ids, mask, targets.astype(np.float64), label_mask.astype(bool), weights)


class PropertyModel:
    """Parameter container with deterministic forward/backward passes."""

    def __init__(self, cfg: ModelConfig, seed: int = 0):
        self.cfg = cfg
        rng = np.random.default_rng(seed)
        self.params: dict[str, np.ndarray] = {}
        self.params.update(enc.init_encoder_params(cfg.encoder_config(), rng))
        self.params.update(reg.init_trunk_params(cfg.trunk_config(), rng))
        self.params["rho"] = np.zeros(N_HEADS)

    FROZEN_ALWAYS = ("w0",)

    def trainable_names(self) -> list[str]:
        names = []
        for name in self.params:
            if name in self.FROZEN_ALWAYS:
                continue
            if name == "embed" and self.cfg.freeze_embeddings:
                continue
            if name in ("lora_a", "lora_b", "attn_q") and self.cfg.freeze_encoder:
                continue
            if (
                self.cfg.freeze_trunk
                and name not in ("embed", "lora_a", "lora_b", "attn_q", "head_w", "head_b", "rho")
            ):
                continue
            names.append(name)
        return names

    def parameter_counts(self) -> tuple[int, int]:
        trainable = sum(self.params[n].size for n in self.trainable_names())
        total = sum(p.size for p in self.params.values())
        return trainable, total

    # ---- forward -----------------------------------------------------

    def forward(self, batch: Batch):
        """Predictions in normalized space plus the cache for backward."""
        ecfg = self.cfg.encoder_config()
        tcfg = self.cfg.trunk_config()
        H = enc.embed(batch.ids.reshape(-1), self.params["embed"]).reshape(
            batch.ids.shape + (self.cfg.dim,)
        )
        H2 = enc.lora_project(H, self.params, ecfg)
        pooled, pool_cache = enc.pool(H2, batch.token_mask, self.params, ecfg)
        z, trunk_cache = reg.trunk_forward(pooled, self.params, tcfg)
        preds = reg.heads_forward(z, self.params)
        cache = {
            "H": H,
            "H2": H2,
            "pool": pool_cache,
            "trunk": trunk_cache,
            "z": z,
            "preds": preds,
        }
        return preds, cache

    def loss(self, batch: Batch, preds: np.ndarray):
        """Per-head weighted MSE and the uncertainty-weighted total.

        Heads absent from the batch contribute neither the scaled loss nor
        the log-sigma term.
        """
        rho = self.params["rho"]
        counts = batch.label_mask.sum(axis=0)  # (22,)
        present = counts > 0
        err = np.where(batch.label_mask, preds - batch.targets, 0.0)
        sq = batch.weights * err * err
        task_losses = np.zeros(N_HEADS)
        np.divide(sq.sum(axis=0), counts, out=task_losses, where=present)
        total = float(
            (task_losses[present] * np.exp(-rho[present]) / 2.0 + rho[present] / 2.0).sum()
        )
        return total, task_losses, present

    def backward(self, batch: Batch, cache: dict):
        """Exact gradients of the total objective for every tensor."""
        ecfg = self.cfg.encoder_config()
        tcfg = self.cfg.trunk_config()
        preds = cache["preds"]
        rho = self.params["rho"]
        counts = batch.label_mask.sum(axis=0)
        present = counts > 0
        err = np.where(batch.label_mask, preds - batch.targets, 0.0)
        sq = batch.weights * err * err
        task_losses = np.zeros(N_HEADS)
        np.divide(sq.sum(axis=0), counts, out=task_losses, where=present)

        scale = np.zeros(N_HEADS)
        np.divide(np.exp(-rho), counts, out=scale, where=present)
        dpred = batch.weights * err * scale[None, :]

        grads: dict[str, np.ndarray] = {}
        grads["rho"] = np.where(present, -task_losses * np.exp(-rho) / 2.0 + 0.5, 0.0)

        dz, head_grads = reg.heads_backward(dpred, cache["z"], self.params)
        grads.update(head_grads)
        dpooled, trunk_grads = reg.trunk_backward(dz, cache["trunk"], self.params, tcfg)
        grads.update(trunk_grads)
        dH2, dq = enc.pool_backward(dpooled, cache["H2"], cache["pool"], self.params, ecfg)
        grads["attn_q"] = dq
        dH, dA, dB = enc.lora_project_backward(dH2, cache["H"], self.params, ecfg)
        grads["lora_a"] = dA
        grads["lora_b"] = dB

        dembed = np.zeros_like(self.params["embed"])
        valid = batch.token_mask
        np.add.at(dembed, batch.ids[valid], dH[valid])
        grads["embed"] = dembed
        return grads

    def objective(self, batch: Batch) -> float:
        preds, _ = self.forward(batch)
        total, _, _ = self.loss(batch, preds)
        return total
