import re
from pathlib import Path

import numpy as np
import pytest

from lfadv.corpus import Corpus, Instance
from lfadv.errors import ConfigError, SchemaError
from lfadv.features import tokenize
from lfadv.labeling import (
    NO_LABEL,
    apply_lfs,
    compile_lf,
    coverage_stats,
    load_lf_file,
    resolve_weak_labels,
)

LABELS = ["ham", "spam"]
REPO = Path(__file__).resolve().parent.parent


def corpus_of(texts, label_names=None):
    return Corpus(
        instances=[Instance(i, t) for i, t in enumerate(texts)],
        label_names=label_names or LABELS,
    )


def kw(pattern, label, lf_id=0, label_names=None):
    return compile_lf(
        {"name": f"kw_{pattern}", "kind": "keyword", "pattern": pattern, "label": label},
        label_names or LABELS,
        lf_id=lf_id,
    )


class TestCompileLf:
    def test_keyword_case_insensitive_phrase(self):
        lf = kw("check out", "spam")
        m = apply_lfs(corpus_of(["Check out my channel"]), [lf])
        assert m.hits[0, 0]

    def test_keyword_respects_token_boundaries(self):
        lf = kw("song", "ham")
        m = apply_lfs(corpus_of(["great songs here", "great song here"]), [lf])
        assert not m.hits[0, 0]
        assert m.hits[1, 0]

    def test_bad_regex(self):
        with pytest.raises(SchemaError, match="regex"):
            compile_lf({"name": "x", "kind": "regex", "pattern": "[", "label": "spam"}, LABELS)

    def test_regex_case_sensitive(self):
        lf = compile_lf({"name": "x", "kind": "regex", "pattern": "SPAM", "label": "spam"}, LABELS)
        m = apply_lfs(corpus_of(["this is SPAM", "this is spam"]), [lf])
        assert m.hits[0, 0]
        assert not m.hits[1, 0]

    def test_unknown_label(self):
        with pytest.raises(SchemaError, match="unknown label"):
            compile_lf({"kind": "keyword", "pattern": "xx", "label": "nope"}, LABELS)

    def test_missing_field(self):
        with pytest.raises(SchemaError, match="missing"):
            compile_lf({"kind": "keyword", "label": "spam"}, LABELS)

    def test_spam_lf_file_has_ten(self):
        lfs = load_lf_file(REPO / "configs" / "spam_lfs.jsonl", LABELS)
        assert len(lfs) == 10
        assert [lf.lf_id for lf in lfs] == list(range(10))


class TestApplyLfs:
    def test_hand_matrix(self):
        lfs = [kw("song", "ham", 0), kw("check out", "spam", 1)]
        m = apply_lfs(corpus_of(["great song", "check out my page"]), lfs)
        np.testing.assert_array_equal(m.hits.toarray(), [[True, False], [False, True]])

    def test_never_matching_lf(self):
        m = apply_lfs(corpus_of(["aa bb", "cc dd"]), [kw("zz", "spam")])
        assert m.hits.nnz == 0

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(4)
        words = ["alpha", "beta", "gamma", "delta", "echo", "fox", "golf"]
        texts = [" ".join(rng.choice(words, size=rng.integers(2, 9))) for _ in range(50)]
        corpus = corpus_of(texts)
        lfs = [
            kw("alpha", "ham", 0),
            kw("beta gamma", "spam", 1),
            compile_lf({"name": "rx", "kind": "regex", "pattern": "fox.*golf", "label": "spam"}, LABELS, 2),
            kw("echo", "spam", 3),
        ]

        def fires(lf, text):
            if lf.kind == "regex":
                return re.search(lf.pattern, text) is not None
            toks, pat = tokenize(text), tokenize(lf.pattern)
            return any(toks[i : i + len(pat)] == pat for i in range(len(toks) - len(pat) + 1))

        expected = [[fires(lf, t) for lf in lfs] for t in texts]
        m = apply_lfs(corpus, lfs)
        np.testing.assert_array_equal(m.hits.toarray(), expected)

    def test_pure(self):
        lfs = [kw("aa", "ham", 0), kw("bb", "spam", 1)]
        c = corpus_of(["aa bb", "bb cc", "dd"])
        m1 = apply_lfs(c, lfs)
        m2 = apply_lfs(c, lfs)
        assert (m1.hits != m2.hits).nnz == 0

    def test_column_content_independent_of_lf_order(self):
        c = corpus_of(["aa bb", "bb cc", "aa"])
        a, b = kw("aa", "ham", 0), kw("bb", "spam", 1)
        m1 = apply_lfs(c, [a, b])
        a2, b2 = kw("aa", "ham", 1), kw("bb", "spam", 0)
        m2 = apply_lfs(c, [b2, a2])
        np.testing.assert_array_equal(m1.hits.toarray()[:, 0], m2.hits.toarray()[:, 1])
        np.testing.assert_array_equal(m1.hits.toarray()[:, 1], m2.hits.toarray()[:, 0])

    def test_empty_lf_list(self):
        with pytest.raises(ConfigError):
            apply_lfs(corpus_of(["aa"]), [])


class TestResolve:
    def test_majority_wins_with_agreeing_triples(self):
        # votes {spam, spam, ham} -> spam with 2 agreeing triples
        lfs = [kw("xx", "spam", 0), kw("yy", "spam", 1), kw("xx", "ham", 2)]
        c = corpus_of(["xx yy"])
        weak = resolve_weak_labels(apply_lfs(c, lfs), lfs, c)
        assert weak.weak_labels[0] == 1
        assert weak.triples.tolist() == [[0, 1, 0], [0, 1, 1]]

    def test_tie_dropped_by_default(self):
        lfs = [kw("xx", "spam", 0), kw("xx", "ham", 1)]
        c = corpus_of(["xx"])
        weak = resolve_weak_labels(apply_lfs(c, lfs), lfs, c)
        assert weak.weak_labels[0] == NO_LABEL
        assert len(weak.triples) == 0

    def test_tie_random_policy_is_seeded(self):
        lfs = [kw("xx", "spam", 0), kw("xx", "ham", 1)]
        c = corpus_of(["xx"] * 20)
        m = apply_lfs(c, lfs)
        w1 = resolve_weak_labels(m, lfs, c, policy="majority_random_tie", tie_seed=9)
        w2 = resolve_weak_labels(m, lfs, c, policy="majority_random_tie", tie_seed=9)
        np.testing.assert_array_equal(w1.weak_labels, w2.weak_labels)
        assert (w1.weak_labels != NO_LABEL).all()
        assert len(set(w1.weak_labels.tolist())) == 2  # both outcomes occur over 20 ties

    def test_no_match_means_no_label(self):
        lfs = [kw("zz", "spam", 0)]
        c = corpus_of(["aa", "bb"])
        weak = resolve_weak_labels(apply_lfs(c, lfs), lfs, c)
        assert (weak.weak_labels == NO_LABEL).all()

    def test_matches_vote_counting_oracle(self):
        rng = np.random.default_rng(8)
        words = ["aa", "bb", "cc", "dd", "ee"]
        texts = [" ".join(rng.choice(words, size=rng.integers(1, 6))) for _ in range(30)]
        c = corpus_of(texts)
        lfs = [
            kw("aa", "ham", 0),
            kw("bb", "spam", 1),
            kw("cc", "spam", 2),
            kw("dd", "ham", 3),
            kw("ee", "spam", 4),
        ]
        m = apply_lfs(c, lfs)
        weak = resolve_weak_labels(m, lfs, c)

        hits = m.hits.toarray()
        for i in range(len(texts)):
            votes = [lfs[j].output_label for j in range(5) if hits[i, j]]
            counts = {lab: votes.count(lab) for lab in set(votes)}
            if not counts:
                assert weak.weak_labels[i] == NO_LABEL
                continue
            best = max(counts.values())
            winners = [lab for lab, n in counts.items() if n == best]
            if len(winners) > 1:
                assert weak.weak_labels[i] == NO_LABEL
            else:
                assert weak.weak_labels[i] == winners[0]
                expect = sorted(j for j in range(5) if hits[i, j] and lfs[j].output_label == winners[0])
                got = sorted(weak.triples[weak.triples[:, 0] == i][:, 2].tolist())
                assert got == expect

    def test_single_lf_labels_exactly_its_matches(self):
        lfs = [kw("aa", "spam", 0)]
        c = corpus_of(["aa bb", "bb", "aa"])
        m = apply_lfs(c, lfs)
        weak = resolve_weak_labels(m, lfs, c)
        np.testing.assert_array_equal(weak.weak_labels, [1, NO_LABEL, 1])
        assert len(weak.triples) == 2

    def test_triples_subset_of_matches_and_counts(self):
        rng = np.random.default_rng(2)
        words = ["aa", "bb", "cc"]
        texts = [" ".join(rng.choice(words, size=rng.integers(1, 4))) for _ in range(25)]
        c = corpus_of(texts)
        lfs = [kw("aa", "ham", 0), kw("bb", "spam", 1), kw("cc", "spam", 2)]
        m = apply_lfs(c, lfs)
        weak = resolve_weak_labels(m, lfs, c)
        hits = m.hits.toarray()
        for inst, _lab, lf_id in weak.triples:
            assert hits[inst, lf_id]
        assert len(weak.triples) >= weak.n_labeled
        per_lf = np.bincount(weak.triples[:, 2], minlength=3)
        assert per_lf.sum() == len(weak.triples)


class TestCoverageStats:
    def test_full_coverage(self):
        lfs = [kw("aa", "spam", 0)]
        c = corpus_of(["aa", "aa aa"])
        m = apply_lfs(c, lfs)
        stats = coverage_stats(resolve_weak_labels(m, lfs, c), m)
        assert stats["coverage"] == 1.0
        assert stats["lf_fire_counts"] == [2]

    def test_zero_coverage(self):
        lfs = [kw("zz", "spam", 0)]
        c = corpus_of(["aa", "bb"])
        m = apply_lfs(c, lfs)
        stats = coverage_stats(resolve_weak_labels(m, lfs, c), m)
        assert stats["coverage"] == 0.0
        assert stats["n_triples"] == 0

    def test_synthetic_fire_rate_within_binomial_bound(self):
        from lfadv.corpus import SynthSpec, synth_generate

        spec = SynthSpec(n_train=2000, n_test=10, n_lfs_per_class=1, lf_leak_prob=0.5, seed=13)
        train, _, lf_specs = synth_generate(spec)
        lfs = [compile_lf(s, train.label_names, i) for i, s in enumerate(lf_specs)]
        m = apply_lfs(train, lfs)
        fires = m.fire_counts()
        golds = train.gold_labels()
        for lf in lfs:
            n_class = int((golds == lf.output_label).sum())
            p = spec.lf_leak_prob
            sigma = np.sqrt(n_class * p * (1 - p))
            assert abs(fires[lf.lf_id] - n_class * p) <= 3 * sigma
