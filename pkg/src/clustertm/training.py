"""Minibatched ELBO ascent with Adam, plus the multi-model experiment driver."""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import lda_baseline, metrics, model, sgns
from .cluster import ClusterModel
from .corpus import Corpus

logger = logging.getLogger(__name__)


class TrainingError(Exception):
    pass


@dataclass
class TrainConfig:
    model_kind: str = "modified"  # "etm" | "modified"
    n_topics: int = 50
    emb_dim: int = 200
    hidden: int = 800
    epochs: int = 100
    batch_size: int = 512
    learning_rate: float = 2e-3
    optimizer: str = "adam"
    weight_decay: float = 1.2e-6  # encoder weights only
    grad_clip: float = 5.0
    kl_anneal_epochs: int = 0  # 0 disables annealing
    seed: int = 0
    freeze_word_emb: bool = False
    pretrained_path: str | None = None

    def __post_init__(self):
        if self.model_kind not in ("etm", "modified"):
            raise TrainingError(f"unknown model kind {self.model_kind!r}")
        if self.epochs < 1:
            raise TrainingError("epochs must be >= 1")
        if self.batch_size < 1:
            raise TrainingError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise TrainingError("learning_rate must be positive")
        if self.optimizer not in ("adam", "sgd"):
            raise TrainingError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class TrainReport:
    epoch_elbo: list[float] = field(default_factory=list)  # mean per document
    wall_time: float = 0.0
    checkpoint_path: str | None = None
    warnings: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        """Deterministic serialization: wall time is process noise and stays out."""
        payload = asdict(self)
        payload.pop("wall_time")
        return json.dumps(payload, sort_keys=True)


class Adam:
    def __init__(self, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.t = 0

    def step(self, blocks: dict[str, np.ndarray], grads: dict[str, np.ndarray]):
        """Ascent step (gradients point uphill)."""
        self.t += 1
        for name, g in grads.items():
            if name not in self.m:
                self.m[name] = np.zeros_like(g)
                self.v[name] = np.zeros_like(g)
            self.m[name] = self.beta1 * self.m[name] + (1 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1 - self.beta2) * g * g
            mhat = self.m[name] / (1 - self.beta1 ** self.t)
            vhat = self.v[name] / (1 - self.beta2 ** self.t)
            blocks[name] += self.lr * mhat / (np.sqrt(vhat) + self.eps)


class Sgd:
    def __init__(self, lr):
        self.lr = lr

    def step(self, blocks, grads):
        for name, g in grads.items():
            blocks[name] += self.lr * g


_DECAYED = ("enc.W1", "enc.W2", "enc.Wm", "enc.Ws")


def _clip_global_norm(grads: dict[str, np.ndarray], limit: float) -> bool:
    norm = np.sqrt(sum(float((g * g).sum()) for g in grads.values()))
    if norm > limit:
        scale = limit / norm
        for g in grads.values():
            g *= scale
        return True
    return False


def fit(corpus: Corpus, cluster_model: ClusterModel | None, config: TrainConfig,
        checkpoint_path=None) -> tuple[model.ModelParams, TrainReport]:
    """Train an ETM variant by minibatched ELBO ascent; deterministic given the seed."""
    if config.model_kind == "modified" and cluster_model is None:
        raise TrainingError("modified model requires a cluster model (--clusters)")

    word_emb = None
    if config.pretrained_path:
        emb = sgns.load_embeddings(config.pretrained_path)
        if emb.words != corpus.vocabulary.words:
            raise TrainingError("pretrained embedding vocabulary does not match the corpus")
        if emb.dim != config.emb_dim:
            raise TrainingError(f"pretrained dim {emb.dim} != configured emb_dim {config.emb_dim}")
        word_emb = emb.vectors

    kw = {}
    if config.model_kind == "modified":
        kw = dict(centres=cluster_model.centres,
                  log_g0=np.log(corpus.g0),
                  assignment=cluster_model.assignment)
    params = model.init_params(
        config.model_kind, corpus.vocab_size, config.n_topics, config.emb_dim,
        corpus.n_docs, hidden=config.hidden, seed=config.seed,
        word_emb=word_emb, freeze_word_emb=config.freeze_word_emb, **kw)

    rng = np.random.default_rng(config.seed + 1)
    batch = min(config.batch_size, corpus.n_docs)
    opt = Adam(config.learning_rate) if config.optimizer == "adam" else Sgd(config.learning_rate)
    report = TrainReport()
    t0 = time.monotonic()
    step_seed = config.seed * 1_000_003

    for epoch in range(config.epochs):
        order = rng.permutation(corpus.n_docs)
        epoch_elbo = 0.0
        for start in range(0, corpus.n_docs, batch):
            ids = order[start : start + batch]
            docs = [corpus.documents[d] for d in ids]
            step_seed += 1
            kl_w = 1.0
            if config.kl_anneal_epochs:
                kl_w = min(1.0, (epoch + 1) / config.kl_anneal_epochs)
            value, grads = model.elbo_and_grad(params, docs, ids, step_seed, kl_weight=kl_w)
            if not np.isfinite(value):
                raise TrainingError(f"non-finite ELBO at epoch {epoch}")
            for name, g in grads.items():
                if not np.all(np.isfinite(g)):
                    raise TrainingError(f"non-finite gradient in block {name!r} at epoch {epoch}")
            for g in grads.values():
                g /= len(docs)
            if _clip_global_norm(grads, config.grad_clip):
                report.warnings.append(f"epoch {epoch}: gradient clipped")
            blocks = model.trainable_blocks(params)
            opt.step(blocks, grads)
            if config.weight_decay:
                for name in _DECAYED:
                    blocks[name] *= 1.0 - config.weight_decay
            epoch_elbo += value
        report.epoch_elbo.append(epoch_elbo / corpus.n_docs)

    report.wall_time = time.monotonic() - t0
    if checkpoint_path is not None:
        chash = cluster_hash(cluster_model) if cluster_model is not None else ""
        model.save_checkpoint(params, checkpoint_path, cluster_hash=chash)
        report.checkpoint_path = str(checkpoint_path)
    return params, report


def cluster_hash(cluster_model: ClusterModel) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(cluster_model.centres).tobytes())
    h.update(np.ascontiguousarray(cluster_model.assignment).tobytes())
    return h.hexdigest()


def run_experiment(corpus: Corpus, configs: list[dict], cluster_model: ClusterModel | None = None,
                   n_top: int = 10, out_dir=None) -> list[dict]:
    """Train and evaluate each requested variant; one result row per config.

    Each config dict needs `model` in {"lda", "etm", "modified"} plus keyword
    overrides for TrainConfig (neural) or fit_lda (LDA).
    """
    out_dir = Path(out_dir) if out_dir is not None else None
    rows = []
    for i, spec in enumerate(configs):
        spec = dict(spec)
        kind = spec.pop("model")
        label = spec.pop("label", kind)
        ckpt = out_dir / f"run{i}_{kind}.ckpt" if out_dir else None

        if kind == "lda":
            state = lda_baseline.fit_lda(
                corpus, spec.pop("n_topics", 50),
                **{k: v for k, v in spec.items() if k in ("alpha", "beta", "sweeps", "seed")})
            beta_tw = lda_baseline.lda_topic_word(state)
            tops = metrics.top_words_from_matrix(beta_tw, n_top)
        elif kind in ("etm", "modified"):
            config = TrainConfig(model_kind=kind, **spec)
            params, _ = fit(corpus, cluster_model, config, checkpoint_path=ckpt)
            log_beta = model.log_topic_word_matrix(params)
            tops = metrics.top_words_from_matrix(np.exp(log_beta), n_top)
        else:
            raise TrainingError(f"unknown model kind {kind!r}")

        rep = metrics.evaluate_topics(corpus, tops, n_top)
        row = {"label": label, "model": kind, "tc": rep.tc, "wswf": rep.wswf,
               "per_topic_tc": rep.per_topic_tc, "per_topic_wswf": rep.per_topic_wswf}
        if ckpt is not None and ckpt.exists():
            row["checkpoint"] = str(ckpt)
            row["checkpoint_sha256"] = hashlib.sha256(ckpt.read_bytes()).hexdigest()
        rows.append(row)
        logger.info("experiment %s: TC=%.4f WSWF=%.4f", label, rep.tc, rep.wswf)
    return rows
