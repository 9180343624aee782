"""Mini-batch training loop: seeded shuffling, Adam updates on trainable
tensors only, gradient clipping by global norm, and checkpoint persistence
carrying the label transforms and density models.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import objective as obj
from .checkpoint import load_checkpoint, save_checkpoint
from .datasets import PromptInstance
from .model import Batch, ModelConfig, PropertyModel, make_batch
from .registry import N_HEADS, PropertyRegistry, default_registry


class NonFiniteLoss(Exception):
    """Training aborted on a non-finite batch loss."""


@dataclass
class TrainConfig:
    seed: int = 0
    batch_size: int = 64
    epochs: int = 10
    lr: float = 1e-3
    rho_lr: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    grad_clip: float = 5.0
    variant: str = "sample_synthesis"
    pooling_mode: str = "mean"
    vocab_size: int = 2**16
    dim: int = 64
    rank: int = 8
    alpha: float = 16.0
    hidden_dim: int = 128
    n_blocks: int = 2
    freeze_embeddings: bool = False
    freeze_encoder: bool = False
    freeze_trunk: bool = False

    def model_config(self) -> ModelConfig:
        return ModelConfig(
            vocab_size=self.vocab_size,
            dim=self.dim,
            rank=self.rank,
            alpha=self.alpha,
            pooling_mode=self.pooling_mode,
            hidden_dim=self.hidden_dim,
            n_blocks=self.n_blocks,
            freeze_embeddings=self.freeze_embeddings,
            freeze_encoder=self.freeze_encoder,
            freeze_trunk=self.freeze_trunk,
        )

    def digest(self) -> str:
        return hashlib.sha256(
            json.dumps(asdict(self), sort_keys=True).encode("utf-8")
        ).hexdigest()


def save_config(cfg: TrainConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in asdict(cfg).items():
            fh.write(f"{key} = {value}\n")


def load_config(path) -> TrainConfig:
    values: dict = {}
    fields = {f.name: f.type for f in TrainConfig.__dataclass_fields__.values()}
    defaults = TrainConfig()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, _, raw = line.partition("=")
            key, raw = key.strip(), raw.strip()
            if key not in fields:
                raise ValueError(f"unknown config key {key!r}")
            current = getattr(defaults, key)
            if isinstance(current, bool):
                values[key] = raw.lower() in ("1", "true", "yes")
            elif isinstance(current, int):
                values[key] = int(raw)
            elif isinstance(current, float):
                values[key] = float(raw)
            else:
                values[key] = raw
    return TrainConfig(**values)


@dataclass
class TrainedModel:
    model: PropertyModel
    config: TrainConfig
    transforms: list  # per head: LabelTransform or None
    density: list  # per head: DensityModel or None
    loss_trace: list[float] = field(default_factory=list)


def fit_label_stats(
    instances: list[PromptInstance],
    registry: PropertyRegistry | None = None,
):
    """Fit per-head transforms and density models on a training set.

    Heads with fewer than 2 usable labels or zero variance fall back to an
    identity-scale transform and unit weights instead of failing the run.
    Returns (transforms, density_models, normalized_targets, masks, weights).
    """
    registry = registry or default_registry()
    n = len(instances)
    labels = np.stack([inst.labels for inst in instances]) if n else np.zeros((0, N_HEADS))
    masks = np.stack([inst.label_mask for inst in instances]) if n else np.zeros((0, N_HEADS), bool)
    masks = masks.copy()
    transforms: list = [None] * N_HEADS
    density: list = [None] * N_HEADS
    targets = np.zeros((n, N_HEADS))
    weights = np.zeros((n, N_HEADS))
    for t in range(N_HEADS):
        log_space = registry.is_log_space(t)
        idx = np.flatnonzero(masks[:, t])
        if idx.size == 0:
            continue
        vals = labels[idx, t]
        if log_space:
            bad = vals <= 0
            if bad.any():
                masks[idx[bad], t] = False
                idx = idx[~bad]
                vals = vals[~bad]
            if idx.size == 0:
                continue
        try:
            tr = obj.fit_transform(vals, log_space)
        except obj.DegenerateHead:
            mu = float(np.log10(vals).mean() if log_space else vals.mean()) if idx.size else 0.0
            tr = obj.LabelTransform(log_space=log_space, mu=mu, sigma=1.0)
        transforms[t] = tr
        normed = tr.normalize(vals)
        targets[idx, t] = normed
        if idx.size >= 2:
            dm = obj.fit_density_model(normed)
            density[t] = dm
            weights[idx, t] = dm.weights
        else:
            weights[idx, t] = 1.0
    return transforms, density, targets, masks, weights


def _adam_update(param, grad, state, lr, beta1, beta2, eps, step):
    m, v = state
    m[:] = beta1 * m + (1 - beta1) * grad
    v[:] = beta2 * v + (1 - beta2) * grad * grad
    mhat = m / (1 - beta1**step)
    vhat = v / (1 - beta2**step)
    param -= lr * mhat / (np.sqrt(vhat) + eps)


def train(
    cfg: TrainConfig,
    instances: list[PromptInstance],
    registry: PropertyRegistry | None = None,
) -> TrainedModel:
    """Run the training loop and return the trained model plus loss trace."""
    registry = registry or default_registry()
    model = PropertyModel(cfg.model_config(), seed=cfg.seed)
    transforms, density, targets, masks, weights = fit_label_stats(instances, registry)
    texts = [inst.text for inst in instances]
    n = len(instances)
    trainable = model.trainable_names()
    adam_state = {
        name: (np.zeros_like(model.params[name]), np.zeros_like(model.params[name]))
        for name in trainable
    }
    rng = np.random.default_rng(cfg.seed)
    trace: list[float] = []
    step = 0
    for _epoch in range(cfg.epochs):
        perm = rng.permutation(n)
        batch_losses = []
        for start in range(0, n, cfg.batch_size):
            sel = perm[start : start + cfg.batch_size]
            batch = make_batch(
                [texts[i] for i in sel],
                targets[sel],
                masks[sel],
                weights[sel],
                cfg.vocab_size,
            )
            if not batch.label_mask.any():
                continue
            preds, cache = model.forward(batch)
            total, _, _ = model.loss(batch, preds)
            if not np.isfinite(total):
                raise NonFiniteLoss(f"non-finite loss at step {step}")
            grads = model.backward(batch, cache)
            gnorm = np.sqrt(sum(float((grads[k] ** 2).sum()) for k in trainable))
            clip = min(1.0, cfg.grad_clip / gnorm) if gnorm > 0 else 1.0
            step += 1
            for name in trainable:
                lr = cfg.rho_lr if name == "rho" else cfg.lr
                _adam_update(
                    model.params[name],
                    grads[name] * clip,
                    adam_state[name],
                    lr,
                    cfg.beta1,
                    cfg.beta2,
                    cfg.adam_eps,
                    step,
                )
            batch_losses.append(total)
        if batch_losses:
            trace.append(float(np.mean(batch_losses)))
    return TrainedModel(model=model, config=cfg, transforms=transforms, density=density, loss_trace=trace)


# ---- checkpoint packing ---------------------------------------------------


def save_trained(trained: TrainedModel, path) -> None:
    tensors = dict(trained.model.params)
    mu = np.full(N_HEADS, np.nan)
    sigma = np.full(N_HEADS, np.nan)
    log_flags = np.zeros(N_HEADS)
    valid = np.zeros(N_HEADS)
    for t, tr in enumerate(trained.transforms):
        if tr is not None:
            mu[t], sigma[t], log_flags[t], valid[t] = tr.mu, tr.sigma, float(tr.log_space), 1.0
    tensors["transform_mu"] = mu
    tensors["transform_sigma"] = sigma
    tensors["transform_log"] = log_flags
    tensors["transform_valid"] = valid
    for t, dm in enumerate(trained.density):
        if dm is not None:
            tensors[f"density_labels_{t}"] = dm.train_labels
            tensors[f"density_weights_{t}"] = dm.weights
            tensors[f"density_hparams_{t}"] = np.array([dm.bandwidth, dm.epsilon])
    metadata = {
        "config": asdict(trained.config),
        "config_digest": trained.config.digest(),
        "loss_trace": [float(x) for x in trained.loss_trace],
    }
    save_checkpoint(path, tensors, metadata)


def load_trained(path) -> TrainedModel:
    tensors, metadata = load_checkpoint(path)
    cfg = TrainConfig(**metadata["config"])
    model = PropertyModel(cfg.model_config(), seed=cfg.seed)
    for name in model.params:
        model.params[name] = tensors.pop(name)
    transforms: list = [None] * N_HEADS
    valid = tensors.pop("transform_valid")
    mu = tensors.pop("transform_mu")
    sigma = tensors.pop("transform_sigma")
    log_flags = tensors.pop("transform_log")
    for t in range(N_HEADS):
        if valid[t]:
            transforms[t] = obj.LabelTransform(
                log_space=bool(log_flags[t]), mu=float(mu[t]), sigma=float(sigma[t])
            )
    density: list = [None] * N_HEADS
    for t in range(N_HEADS):
        if f"density_labels_{t}" in tensors:
            h, eps = tensors[f"density_hparams_{t}"]
            density[t] = obj.DensityModel(
                train_labels=tensors[f"density_labels_{t}"],
                bandwidth=float(h),
                epsilon=float(eps),
                weights=tensors[f"density_weights_{t}"],
            )
    return TrainedModel(
        model=model,
        config=cfg,
        transforms=transforms,
        density=density,
        loss_trace=list(metadata.get("loss_trace", [])),
    )
