"""Corpus ingestion: tokenization, filtering, vocabulary and background word frequencies."""

from __future__ import annotations

import json
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

_EDGE_PUNCT = re.compile(r"^\W+|\W+$", re.UNICODE)
_HAS_DIGIT = re.compile(r"\d")


class CorpusError(Exception):
    pass


def default_stopwords() -> set[str]:
    """Bundled pronoun/preposition/function-word list; editable by passing your own."""
    text = resources.files("clustertm.data").joinpath("stopwords.txt").read_text("utf-8")
    return {line.strip() for line in text.splitlines() if line.strip()}


def load_stopwords(paths) -> set[str]:
    words: set[str] = set()
    for p in paths:
        for line in Path(p).read_text("utf-8").splitlines():
            w = line.strip()
            if w:
                words.add(w)
    return words


def load_lemma_dict(path) -> dict[str, str]:
    """TSV file, one `word<TAB>lemma` pair per line."""
    table: dict[str, str] = {}
    for i, line in enumerate(Path(path).read_text("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise CorpusError(f"{path}:{i}: expected 'word<TAB>lemma', got {line!r}")
        table[parts[0].strip()] = parts[1].strip()
    return table


@dataclass
class PreprocessOptions:
    min_freq: int = 5
    stopwords: set[str] | None = None  # None -> bundled list
    lemma: dict[str, str] | None = None


@dataclass
class Vocabulary:
    words: list[str]
    index: dict[str, int] = field(init=False)

    def __post_init__(self):
        self.index = {w: i for i, w in enumerate(self.words)}
        if len(self.index) != len(self.words):
            raise CorpusError("duplicate words in vocabulary")

    @property
    def size(self) -> int:
        return len(self.words)

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.words == other.words


@dataclass
class Document:
    tokens: list[int]  # order preserved
    counts: dict[int, int] = field(init=False)

    def __post_init__(self):
        self.counts = dict(Counter(self.tokens))

    @property
    def length(self) -> int:
        return len(self.tokens)

    def count_vector(self, vocab_size: int) -> np.ndarray:
        x = np.zeros(vocab_size)
        for v, c in self.counts.items():
            x[v] = c
        return x

    def __eq__(self, other):
        return isinstance(other, Document) and self.tokens == other.tokens


@dataclass
class Corpus:
    documents: list[Document]
    vocabulary: Vocabulary
    g0: np.ndarray

    @property
    def n_docs(self) -> int:
        return len(self.documents)

    @property
    def vocab_size(self) -> int:
        return self.vocabulary.size

    @property
    def total_tokens(self) -> int:
        return sum(d.length for d in self.documents)

    def __eq__(self, other):
        return (
            isinstance(other, Corpus)
            and self.documents == other.documents
            and self.vocabulary == other.vocabulary
            and np.allclose(self.g0, other.g0, rtol=0, atol=1e-12)
        )


def tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace, strip edge punctuation, drop tokens with digits."""
    out = []
    for raw in text.lower().split():
        tok = _EDGE_PUNCT.sub("", raw)
        if not tok or _HAS_DIGIT.search(tok):
            continue
        out.append(tok)
    return out


def compute_g0(documents: list[Document], vocabulary: Vocabulary) -> np.ndarray:
    """Relative frequency of each word over the whole token stream."""
    counts = np.zeros(vocabulary.size)
    total = 0
    for doc in documents:
        for v, c in doc.counts.items():
            if v >= vocabulary.size:
                raise CorpusError(f"token id {v} outside vocabulary of size {vocabulary.size}")
            counts[v] += c
        total += doc.length
    if total == 0:
        raise CorpusError("cannot compute background frequencies over zero tokens")
    return counts / total


def preprocess(raw_docs: list[str], options: PreprocessOptions | None = None) -> Corpus:
    """Clean raw texts into a bag-of-words corpus.

    Pipeline: lowercase/tokenize, optional lemma lookup, stopword removal,
    corpus-frequency filter, drop emptied documents, build vocabulary and
    background frequencies. Dropped-document count is logged.
    """
    options = options or PreprocessOptions()
    if not raw_docs:
        raise CorpusError("no input documents")
    stop = options.stopwords if options.stopwords is not None else default_stopwords()
    lemma = options.lemma or {}

    token_docs = []
    for text in raw_docs:
        toks = [lemma.get(t, t) for t in tokenize(text)]
        token_docs.append([t for t in toks if t not in stop])

    freq = Counter(t for toks in token_docs for t in toks)
    kept = {w for w, c in freq.items() if c >= options.min_freq}
    token_docs = [[t for t in toks if t in kept] for toks in token_docs]

    n_dropped = sum(1 for toks in token_docs if not toks)
    if n_dropped:
        logger.info("preprocess: dropped %d empty documents", n_dropped)
    token_docs = [toks for toks in token_docs if toks]
    if not token_docs:
        raise CorpusError("all documents were filtered out")

    vocab = Vocabulary(sorted(kept))
    documents = [Document([vocab.index[t] for t in toks]) for toks in token_docs]
    return Corpus(documents, vocab, compute_g0(documents, vocab))


def read_texts(path) -> list[str]:
    """Directory of .txt files (one document each) or a JSON-lines file with field `text`."""
    p = Path(path)
    if p.is_dir():
        files = sorted(p.glob("*.txt"))
        if not files:
            raise CorpusError(f"{p}: no .txt files found")
        return [f.read_text("utf-8") for f in files]
    texts = []
    for i, line in enumerate(p.read_text("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            texts.append(rec["text"])
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            raise CorpusError(f"{p}:{i}: bad JSON-lines record ({e})") from e
    if not texts:
        raise CorpusError(f"{p}: no documents found")
    return texts


def save_corpus(corpus: Corpus, path) -> None:
    payload = {
        "vocab": corpus.vocabulary.words,
        "docs": [d.tokens for d in corpus.documents],
        "g0": corpus.g0.tolist(),
    }
    Path(path).write_text(json.dumps(payload), "utf-8")


def load_corpus(path) -> Corpus:
    try:
        payload = json.loads(Path(path).read_text("utf-8"))
        vocab = Vocabulary(payload["vocab"])
        docs = [Document(list(map(int, toks))) for toks in payload["docs"]]
        g0 = np.asarray(payload["g0"], dtype=float)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise CorpusError(f"{path}: malformed corpus file ({e})") from e
    if g0.shape != (vocab.size,):
        raise CorpusError(f"{path}: g0 length {g0.shape} does not match vocabulary {vocab.size}")
    return Corpus(docs, vocab, g0)
