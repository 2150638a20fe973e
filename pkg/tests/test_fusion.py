import numpy as np
import pytest

from clonesift.errors import EmptyList, TooFewLists
from clonesift.fusion import (
    Aggregation,
    Normalization,
    all_methods,
    ensemble,
    fuse,
    load_fused,
    method_name,
    normalize,
    parse_method,
    store_fused,
)
from clonesift.search import Candidate, CandidateList, sort_candidates

from oracles import brute_force_fuse


def clist(scores, model="m", prefix="p"):
    items = [
        Candidate(a=(f"{prefix}{i}.c", 1, 5), b=(f"{prefix}{i}x.c", 1, 5), score=s)
        for i, s in enumerate(scores)
    ]
    return CandidateList(model_id=model, params=None, items=sort_candidates(items))


def clist_pairs(pairs_scores, model="m"):
    items = [Candidate(a=a, b=b, score=s) for (a, b), s in pairs_scores]
    return CandidateList(model_id=model, params=None, items=sort_candidates(items))


PAIR_1 = (("fileA.c", 10, 20), ("fileB.c", 15, 25))
PAIR_2 = (("fileC.c", 5, 15), ("fileD.c", 8, 18))
PAIR_3 = (("fileE.c", 1, 5), ("fileF.c", 3, 7))


class TestNormalize:
    def test_min_max_endpoints(self):
        out = normalize(clist([0.9, 0.5, 0.1]), Normalization("min-max"))
        assert [c.score for c in out.items] == pytest.approx([1.0, 0.5, 0.0])

    def test_rrf_rank_one(self):
        out = normalize(clist([0.9]), Normalization("rrf", rrf_k=60))
        assert out.items[0].score == pytest.approx(1.0 / 61, abs=1e-9)

    def test_zscore_sample_stdev(self):
        out = normalize(clist([1.0, 2.0, 3.0]), Normalization("z-score"))
        assert sorted(c.score for c in out.items) == pytest.approx([-1.0, 0.0, 1.0])

    def test_non_norm_identity(self):
        base = clist([0.7, 0.2])
        out = normalize(base, Normalization("non-norm"))
        assert [c.score for c in out.items] == [0.7, 0.2]

    def test_empty_list_errors(self):
        empty = CandidateList(model_id="m", params=None, items=())
        for kind in ("min-max", "z-score"):
            with pytest.raises(EmptyList):
                normalize(empty, Normalization(kind))
        assert len(normalize(empty, Normalization("rrf")).items) == 0

    def test_degenerate_min_max_maps_to_half(self):
        out = normalize(clist([0.4, 0.4, 0.4]), Normalization("min-max"))
        assert {c.score for c in out.items} == {0.5}

    def test_degenerate_zscore_maps_to_zero(self):
        out = normalize(clist([0.4, 0.4]), Normalization("z-score"))
        assert {c.score for c in out.items} == {0.0}

    def test_order_preserved(self):
        rng = np.random.default_rng(0)
        base = clist(sorted(set(rng.uniform(-1, 1, 25).tolist()), reverse=True))
        for kind in ("non-norm", "min-max", "z-score", "rrf"):
            out = normalize(base, Normalization(kind))
            assert [c.pair for c in out.items] == [c.pair for c in base.items]

    def test_rrf_scores_bounded(self):
        rng = np.random.default_rng(1)
        base = clist(rng.uniform(-1, 1, 40).tolist())
        out = normalize(base, Normalization("rrf", rrf_k=60))
        assert all(0.0 < c.score <= 1.0 / 61 for c in out.items)


class TestFuse:
    def test_duplicate_aggregation_arithmetic(self):
        la = clist_pairs([(PAIR_1, 0.85)], model="m1")
        lb = clist_pairs([(PAIR_1, 0.74)], model="m2")
        assert fuse([la, lb], Aggregation("max")).items[0].score == pytest.approx(0.85)
        assert fuse([la, lb], Aggregation("sum")).items[0].score == pytest.approx(1.59)
        assert fuse([la, lb], Aggregation("average")).items[0].score == pytest.approx(0.795)

    def test_single_occurrence_keeps_score(self):
        la = clist_pairs([(PAIR_1, 0.80)], model="m1")
        lb = clist_pairs([(PAIR_2, 0.60)], model="m2")
        for kind in ("average", "sum", "max"):
            fused = fuse([la, lb], Aggregation(kind))
            scores = {c.pair: c.score for c in fused.items}
            assert scores[Candidate(*PAIR_1, 0.8).pair] == pytest.approx(0.80)

    def test_self_fuse_idempotent_under_max(self):
        base = clist_pairs([(PAIR_1, 0.85), (PAIR_2, 0.80), (PAIR_3, 0.75)])
        fused = fuse([base, base], Aggregation("max"))
        assert [c.pair for c in fused.items] == [c.pair for c in base.items]
        assert [c.score for c in fused.items] == [c.score for c in base.items]

    def test_too_few_lists(self):
        with pytest.raises(TooFewLists):
            fuse([clist([0.5])], Aggregation("max"))

    def test_provenance(self):
        la = clist_pairs([(PAIR_1, 0.85), (PAIR_2, 0.5)], model="m1")
        lb = clist_pairs([(PAIR_1, 0.74)], model="m2")
        fused = fuse([la, lb], Aggregation("sum"))
        by_pair = dict(zip((c.pair for c in fused.items), fused.provenance))
        assert by_pair[Candidate(*PAIR_1, 0).pair] == {"m1", "m2"}
        assert by_pair[Candidate(*PAIR_2, 0).pair] == {"m1"}


class TestEnsemble:
    def test_rrf_sum_first_in_both(self):
        la = clist_pairs([(PAIR_1, 0.9), (PAIR_2, 0.2)], model="m1")
        lb = clist_pairs([(PAIR_1, 0.7), (PAIR_3, 0.1)], model="m2")
        fused = ensemble(la, lb, Normalization("rrf", rrf_k=60), Aggregation("sum"))
        assert fused.items[0].score == pytest.approx(2.0 / 61, abs=1e-12)

    def test_non_norm_average_disjoint_is_merged_sort(self):
        la = clist_pairs([(PAIR_1, 0.9), (PAIR_2, 0.5)], model="m1")
        lb = clist_pairs([(PAIR_3, 0.7)], model="m2")
        fused = ensemble(la, lb, Normalization("non-norm"), Aggregation("average"))
        assert [c.score for c in fused.items] == [0.9, 0.7, 0.5]

    def test_method_name_serialization(self):
        norm, agg = Normalization("z-score"), Aggregation("max")
        fused = ensemble(clist([0.5, 0.4], model="a"), clist([0.6], model="b"),
                         norm, agg)
        assert fused.method == "z-score_max"

    def test_min_max_max_matches_fusion_oracle(self, four_unit_corpus):
        from clonesift.search import CloneSearchIndex, SearchParams

        manifest, records = four_unit_corpus
        index = CloneSearchIndex().fit(records, manifest)
        la = index.self_search(SearchParams(top_n_class=2, global_top_k=10))
        lb_items = tuple(Candidate(c.a, c.b, min(1.0, c.score * 0.9 + 0.05))
                         for c in la.items)
        lb = CandidateList("other", None, sort_candidates(lb_items))
        norm = Normalization("min-max")
        fused = ensemble(la, lb, norm, Aggregation("max"))
        na, nb = normalize(la, norm), normalize(lb, norm)
        expected = brute_force_fuse(
            [("fix", [(c.pair, c.score) for c in na.items]),
             ("other", [(c.pair, c.score) for c in nb.items])],
            "max",
        )
        assert [c.pair for c in fused.items] == [p for p, _ in expected]
        for cand, (_, score) in zip(fused.items, expected):
            assert cand.score == pytest.approx(score, abs=1e-12)

    def test_all_twelve_methods(self):
        names = {method_name(n, a) for n, a in all_methods()}
        assert len(names) == 12
        assert "non-norm_average" in names and "rrf_sum" in names
        for name in names:
            norm, agg = parse_method(name)
            assert method_name(norm, agg) == name


class TestFusedIO:
    def test_round_trip(self, tmp_path):
        la = clist_pairs([(PAIR_1, 0.85), (PAIR_2, 0.5)], model="m1")
        lb = clist_pairs([(PAIR_1, 0.74), (PAIR_3, 0.3)], model="m2")
        fused = ensemble(la, lb, Normalization("min-max"), Aggregation("sum"))
        path = tmp_path / "fused.csv"
        store_fused(fused, path)
        loaded = load_fused(path)
        assert loaded.method == fused.method
        assert loaded.source_models == fused.source_models
        assert [c.pair for c in loaded.items] == [c.pair for c in fused.items]
        assert loaded.provenance == fused.provenance
