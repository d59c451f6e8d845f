"""Collapsed Gibbs sampling LDA, the frequency-based baseline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Corpus


class LdaError(Exception):
    pass


@dataclass
class LdaState:
    z: list[np.ndarray]  # topic of every token, per document
    n_tv: np.ndarray  # (#T, #V) topic-word counts
    n_dt: np.ndarray  # (#D, #T) document-topic counts
    n_t: np.ndarray  # (#T,) topic totals
    alpha: float
    beta: float

    @property
    def n_topics(self) -> int:
        return self.n_tv.shape[0]

    def check_consistency(self, docs: list[np.ndarray]) -> None:
        n_tv = np.zeros_like(self.n_tv)
        n_dt = np.zeros_like(self.n_dt)
        for d, (toks, zs) in enumerate(zip(docs, self.z)):
            for v, t in zip(toks, zs):
                n_tv[t, v] += 1
                n_dt[d, t] += 1
        if not (np.array_equal(n_tv, self.n_tv) and np.array_equal(n_dt, self.n_dt)
                and np.array_equal(n_tv.sum(axis=1), self.n_t)):
            raise LdaError("count matrices inconsistent with assignments")


def fit_lda(corpus: Corpus, n_topics: int, alpha: float | None = None, beta: float = 0.01,
            sweeps: int = 1000, seed: int = 0, debug_checks: bool = False,
            on_sweep=None) -> LdaState:
    """Run collapsed Gibbs sweeps; last sample kept. Deterministic given the seed.

    `on_sweep(z)` is called with the assignment lists after every sweep, for
    chain diagnostics.
    """
    if n_topics < 1:
        raise LdaError("n_topics must be >= 1")
    if alpha is None:
        alpha = 50.0 / n_topics

    n_v, n_d = corpus.vocab_size, corpus.n_docs
    docs = [np.asarray(d.tokens, dtype=np.int64) for d in corpus.documents]
    rng = np.random.default_rng(seed)

    n_tv = np.zeros((n_topics, n_v))
    n_dt = np.zeros((n_d, n_topics))
    n_t = np.zeros(n_topics)
    z = []
    for d, toks in enumerate(docs):
        zs = rng.integers(0, n_topics, size=len(toks))
        z.append(zs)
        for v, t in zip(toks, zs):
            n_tv[t, v] += 1
            n_dt[d, t] += 1
            n_t[t] += 1

    beta_v = beta * n_v
    for _ in range(sweeps):
        for d, toks in enumerate(docs):
            zs = z[d]
            nd = n_dt[d]
            for i, v in enumerate(toks):
                t_old = zs[i]
                n_tv[t_old, v] -= 1
                nd[t_old] -= 1
                n_t[t_old] -= 1
                p = (n_tv[:, v] + beta) * (nd + alpha) / (n_t + beta_v)
                cdf = np.cumsum(p)
                t_new = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
                t_new = min(t_new, n_topics - 1)
                zs[i] = t_new
                n_tv[t_new, v] += 1
                nd[t_new] += 1
                n_t[t_new] += 1
        if debug_checks:
            LdaState(z, n_tv, n_dt, n_t, alpha, beta).check_consistency(docs)
        if on_sweep is not None:
            on_sweep(z)

    return LdaState(z, n_tv, n_dt, n_t, alpha, beta)


def lda_topic_word(state: LdaState) -> np.ndarray:
    """Smoothed posterior word distribution per topic, (#T, #V)."""
    n_v = state.n_tv.shape[1]
    return (state.n_tv + state.beta) / (state.n_t[:, None] + state.beta * n_v)
