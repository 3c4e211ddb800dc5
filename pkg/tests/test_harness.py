import math
import statistics

import pytest

from synthex.evalkit import EvalHarness
from synthex.extractor import ExtractionConfig, Extractor
from synthex.llmgate import Gateway, MockTransport
from synthex.promptkit import OrderingStrategy, ShotOrdering, default_template
from synthex.retrieval import bm25_scorer, build_index

from mockllm import GradedMockModel, make_harness_pool


@pytest.fixture
def harness():
    pool = make_harness_pool(10)
    model = GradedMockModel(pool)

    def make_extractor(active_pool):
        gateway = Gateway(MockTransport(model))
        scorer = bm25_scorer(build_index(active_pool)) if active_pool.n else None
        return Extractor(gateway, default_template(), pool=active_pool, scorer=scorer)

    queries = [(d.id, d.paragraph) for d in pool.entries]
    gold = {d.id: d.gold for d in pool.entries}
    return EvalHarness(make_extractor, pool, queries, gold)


class TestSweepK:
    def test_f1_increases_with_shot_relevance(self, harness):
        reports = harness.sweep_k([0, 1, 4])
        f1 = [r.mean["f1"] for r in reports]
        assert f1[2] > f1[1] > f1[0]

    def test_k_list_gives_reports_in_order(self, harness):
        reports = harness.sweep_k([0, 1, 2, 4, 8])
        assert [r.config["k"] for r in reports] == [0, 1, 2, 4, 8]
        assert len(reports) == 5

    def test_k_zero_equals_direct_zero_shot_run(self, harness):
        report = harness.sweep_k([0])[0]
        _, metrics = harness.run_once(ExtractionConfig.zero_shot())
        assert report.trial_metrics[0] == metrics

    def test_identical_seeds_identical_reports(self, harness):
        a = harness.sweep_k([4], trials=2, seed=5)
        b = harness.sweep_k([4], trials=2, seed=5)
        assert a == b

    def test_bm25_beats_random_selection(self, harness):
        bm25 = harness.sweep_k([4], algo="bm25")[0].mean["f1"]
        rand = harness.sweep_k([4], trials=3, algo="random")[0].mean["f1"]
        assert bm25 > rand


class TestSweepPoolSize:
    def test_size_zero_is_zero_shot_with_zero_ci(self, harness):
        report = harness.sweep_pool_size([0], trials=5)[0]
        zero_shot = harness.sweep_k([0])[0]
        assert report.ci_half_width["f1"] == 0.0
        assert report.ci_half_width["acc"] == 0.0
        assert all(m == zero_shot.trial_metrics[0] for m in report.trial_metrics)

    def test_full_pool_has_no_sampling_freedom(self, harness):
        report = harness.sweep_pool_size([harness.pool.n], trials=4)[0]
        assert len(set(report.trial_metrics)) == 1
        assert report.ci_half_width["f1"] == 0.0

    def test_ci_half_width_matches_textbook_formula(self, harness):
        report = harness.sweep_pool_size([5], trials=5, seed=3)[0]
        values = [m.f1 for m in report.trial_metrics]
        if len(set(values)) > 1:
            expected = 1.96 * statistics.stdev(values) / math.sqrt(len(values))
            assert report.ci_half_width["f1"] == pytest.approx(expected)
        else:
            assert report.ci_half_width["f1"] == 0.0

    def test_mean_over_trials(self, harness):
        report = harness.sweep_pool_size([4], trials=3, seed=9)[0]
        values = [m.f1 for m in report.trial_metrics]
        assert report.mean["f1"] == pytest.approx(sum(values) / len(values))

    def test_oversized_pool_rejected(self, harness):
        from synthex.evalkit import EvalError

        with pytest.raises(EvalError):
            harness.sweep_pool_size([harness.pool.n + 1])


class TestCompareOrderings:
    def orderings(self):
        return [
            ShotOrdering(OrderingStrategy.SIMILARITY_DESCENDING),
            ShotOrdering(OrderingStrategy.SIMILARITY_ASCENDING),
            ShotOrdering(OrderingStrategy.RANDOM, seed=11),
        ]

    def test_same_shot_multiset_across_orderings(self, harness):
        out = harness.compare_orderings(self.orderings(), k=4)
        multisets = [
            {r.paragraph_id: frozenset(r.shot_ids) for r in results} for _, results in out
        ]
        assert multisets[0] == multisets[1] == multisets[2]

    def test_random_ordering_reproducible(self, harness):
        ordering = [ShotOrdering(OrderingStrategy.RANDOM, seed=7)]
        a = harness.compare_orderings(ordering, k=4)
        b = harness.compare_orderings(ordering, k=4)
        assert a[0][0] == b[0][0]
        assert [r.prompt_fingerprint for r in a[0][1]] == [r.prompt_fingerprint for r in b[0][1]]

    def test_distinct_fingerprints_per_ordering(self, harness):
        out = harness.compare_orderings(self.orderings()[:2], k=4)
        fp_desc = [r.prompt_fingerprint for _, results in out[:1] for r in results]
        fp_asc = [r.prompt_fingerprint for _, results in out[1:2] for r in results]
        # Same shots, different order in the prompt: different bytes, different keys.
        assert fp_desc != fp_asc


class TestSelfExclusion:
    def test_own_paragraph_never_among_shots(self, harness):
        for k in (1, 2, 4, 8):
            results, _ = harness.run_once(ExtractionConfig.few_shot(k=k))
            for result in results:
                assert result.paragraph_id not in result.shot_ids
                assert len(result.shot_ids) == min(k, harness.pool.n - 1)

    def test_repeated_runs_identical(self, harness):
        a, _ = harness.run_once(ExtractionConfig.few_shot(k=4))
        b, _ = harness.run_once(ExtractionConfig.few_shot(k=4))
        assert a == b
