"""Compare LDA, ETM, and the modified model on the same corpus.

`run_experiment` trains each variant and scores it with the two topic-quality
metrics: topic coherence (TC, mean NPMI over top-word pairs) and the weighted
sum of word familiarity (WSWF, which rewards topics whose mass sits on common
words).  The per-topic pairs are then written out as a CSV and an SVG scatter.

Run with:  python demos/04_compare_and_evaluate.py
"""
import tempfile
from importlib.resources import files
from pathlib import Path

from clustertm import MetricsReport, PreprocessOptions, cluster_corpus, preprocess, run_experiment
from clustertm.corpus import read_texts
from clustertm.metrics import read_scatter_csv, write_scatter_csv, write_scatter_svg

TOY = str(files("clustertm").joinpath("data/toy_corpus.jsonl"))


def main() -> None:
    corpus = preprocess(read_texts(TOY), PreprocessOptions(min_freq=2))
    clusters = cluster_corpus(corpus, 4, seed=0)

    neural = dict(n_topics=4, emb_dim=16, hidden=32, epochs=60, batch_size=32,
                  learning_rate=5e-3, kl_anneal_epochs=20, seed=0)
    rows = run_experiment(corpus, [
        {"model": "lda", "n_topics": 4, "sweeps": 200, "seed": 0},
        {"model": "etm", **neural},
        {"model": "modified", **neural},
    ], cluster_model=clusters, n_top=6)

    print(f"{'model':<10}{'TC':>8}{'WSWF':>9}")
    for row in rows:
        print(f"{row['label']:<10}{row['tc']:>8.3f}{row['wswf']:>9.3f}")

    # Per-topic scatter for the modified model: one (TC, WSWF) point per topic.
    modified = next(row for row in rows if row["model"] == "modified")
    report = MetricsReport(per_topic_tc=modified["per_topic_tc"],
                           per_topic_wswf=modified["per_topic_wswf"],
                           top_words=[], n_top=6)
    with tempfile.TemporaryDirectory() as tmp:
        csv_path, svg_path = Path(tmp) / "scatter.csv", Path(tmp) / "scatter.svg"
        write_scatter_csv(report, csv_path)
        write_scatter_svg(report, svg_path, label="modified")
        pts = read_scatter_csv(csv_path)
        print(f"\nscatter CSV round-trips {len(pts)} points; "
              f"SVG is {svg_path.stat().st_size} bytes")
        print("first CSV lines:")
        for line in csv_path.read_text().splitlines()[:3]:
            print(" ", line)


if __name__ == "__main__":
    main()
