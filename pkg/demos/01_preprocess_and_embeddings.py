"""Preprocess raw text and pretrain word embeddings.

Walks through the first two pipeline stages on the bundled toy corpus
(80 short documents about cooking, gardening, astronomy, and football):

1. tokenize / filter raw strings into a `Corpus` with a background
   word-frequency vector `g0`;
2. train skip-gram embeddings on it and inspect nearest neighbours.

Run with:  python demos/01_preprocess_and_embeddings.py
"""
from importlib.resources import files

import numpy as np

from clustertm import PreprocessOptions, SgnsConfig, preprocess, pretrain
from clustertm.corpus import read_texts

TOY = str(files("clustertm").joinpath("data/toy_corpus.jsonl"))


def main() -> None:
    raw = read_texts(TOY)
    print(f"loaded {len(raw)} raw documents, e.g.: {raw[0][:60]!r}...")

    # min_freq=2 keeps most of the tiny vocabulary; real corpora use ~5.
    corpus = preprocess(raw, PreprocessOptions(min_freq=2))
    print(f"corpus: {corpus.n_docs} docs, {corpus.vocab_size} words, "
          f"{corpus.total_tokens} tokens")

    common = np.argsort(corpus.g0)[::-1][:5]
    print("most frequent words:",
          ", ".join(f"{corpus.vocabulary.words[v]} ({corpus.g0[v]:.3f})" for v in common))

    losses: list[float] = []
    emb = pretrain(corpus, dim=16, config=SgnsConfig(epochs=10, subsample=0.0),
                   seed=0, report=losses)
    print(f"skip-gram epoch losses: first={losses[0]:.4f} last={losses[-1]:.4f}")

    # Nearest neighbours by cosine similarity; same-topic words should rank high.
    norms = emb.vectors / np.linalg.norm(emb.vectors, axis=1, keepdims=True)
    for probe in ("butter", "seed", "telescope"):
        if probe not in corpus.vocabulary.index:
            continue
        sims = norms @ norms[corpus.vocabulary.index[probe]]
        order = np.argsort(sims)[::-1][1:4]
        print(f"nearest to {probe!r}:",
              ", ".join(f"{emb.words[i]} ({sims[i]:.2f})" for i in order))


if __name__ == "__main__":
    main()
