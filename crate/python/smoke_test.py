"""Smoke test for the contamkit_py extension.

Build and install first:  maturin build --release -m crates/python/Cargo.toml
                          pip install target/wheels/contamkit-*.whl
Then run:                 python3 python/smoke_test.py
"""

import os
import tempfile

import contamkit_py as ck


def main():
    assert ck.tokenize("The movie was GREAT!") == ["the", "movie", "was", "great"]
    assert ck.sentences("Hi. Bye.") == [["hi"], ["bye"]]

    samples = [
        {"id": "1", "dataset": "qa", "text": "which river flows through the ancient city of baghdad",
         "answer": "Tigris", "choices": ["Tigris", "Nile"]},
        {"id": "2", "dataset": "qa", "text": "what gas do green plants absorb from the air during photosynthesis",
         "answer": "carbon dioxide"},
    ]
    index = ck.NGramIndex.from_samples(samples, 8)
    assert index.n == 8 and index.side == "eval" and len(index) == 6, index

    corpus = [(f"doc{i}", f"plain filler text number {i} about soup") for i in range(50)]
    injected, manifest = ck.inject(corpus, samples, mode="gt", factor=3, seed=7)
    assert len(injected) == 50 + 3 * len(samples)
    assert len(manifest) == 6
    again, _ = ck.inject(corpus, samples, mode="gt", factor=3, seed=7)
    assert injected == again

    for definition in (ck.Definition.direct(8), ck.Definition.palm(8, 0.3), ck.Definition.llama2(8, 0.5)):
        kept, report = ck.filter_corpus(injected, index, definition, workers=4)
        assert kept == corpus, definition
        assert report["docs_removed"] == 6 and report["definition"] == definition.name, report
        _, rescan = ck.filter_corpus(kept, index, definition)
        assert rescan["docs_removed"] == 0

    v = ck.judge_document("x", "noise which river flows through the ancient city of baghdad noise",
                          index, ck.Definition.direct(8))
    assert v["contaminated"] and v["contaminated_tokens"] == 11, v

    corpus_index = ck.NGramIndex.build([ck.tokenize(t) for _, t in injected], 8, side="corpus")
    tokens = [f"t{i}" for i in range(15)]
    run_index = ck.NGramIndex.build([["x"] + tokens[2:14] + ["y"]], 11, side="corpus")
    marked, pct = ck.llama2_mark_tokens(tokens, run_index, 11)
    assert marked == list(range(2, 14)) and pct == 0.8
    s = ck.judge_sample("1", samples[0]["text"], corpus_index, ck.Definition.llama2(8, 0.8))
    assert s["contaminated"], s

    assert ck.bucket_assign(0, 10) == ("clean", "not_dirty")
    assert ck.bucket_assign(9, 10) == ("not_clean", "dirty")
    assert ck.format_sample({"id": "7", "dataset": "sst2", "text": "great film", "prompt": "Sentiment:",
                             "answer": "positive"}, mode="gt") == "great film Sentiment: positive"

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "eval.idx")
        index.save(path)
        loaded = ck.NGramIndex.load(path)
        assert len(loaded) == len(index)
        src = os.path.join(d, "corpus.jsonl")
        with open(src, "w") as f:
            for doc_id, text in injected:
                f.write('{"id": "%s", "text": "%s"}\n' % (doc_id, text))
        report = ck.filter_file(src, loaded, ck.Definition.direct(), os.path.join(d, "clean.jsonl"))
        assert report["docs_removed"] == 6
        try:
            ck.NGramIndex.load(os.path.join(d, "missing.idx"))
        except OSError:
            pass
        else:
            raise AssertionError("missing file should raise OSError")

    try:
        ck.Definition.palm(8, 1.5)
    except ValueError:
        pass
    else:
        raise AssertionError("lambda out of range should raise ValueError")

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
