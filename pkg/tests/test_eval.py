"""Ranking, recall@k against a brute-force oracle, and the task suite."""

import numpy as np
import pytest

from trialign.data import gen_synthetic
from trialign.errors import EmptyInputError, MappingError, ParameterError
from trialign.eval import (RetrievalReport, dataset_fingerprint,
                           format_report_table, merged_report_dict,
                           rank_database, recall_at_k, run_task_suite)
from trialign.model import init_aligner


def _unit_rows(rng, n, d):
    m = rng.standard_normal((n, d))
    return m / np.linalg.norm(m, axis=1, keepdims=True)


def _oracle_recall(queries, database, truth, k):
    """Brute force: full python sort by (-similarity, index)."""
    hits = 0
    for qi in range(queries.shape[0]):
        sims = [(float(-(queries[qi] @ database[di])), di)
                for di in range(database.shape[0])]
        ranked = [di for _, di in sorted(sims)]
        hits += truth[qi] in ranked[:k]
    return hits / queries.shape[0]


class TestRankDatabase:
    def test_self_retrieval_first(self):
        rng = np.random.default_rng(0)
        db = _unit_rows(rng, 10, 6)
        order = rank_database(db[4], db)
        assert order[0] == 4

    def test_singleton(self):
        np.testing.assert_array_equal(
            rank_database(np.array([1.0, 0.0]), [[0.0, 1.0]]), [0])

    def test_hand_ranked_dot_products(self):
        """Similarities 0.6, 1.0, 0.0 to [1, 0] rank as [1, 0, 2]."""
        order = rank_database(np.array([1.0, 0.0]),
                              [[0.6, 0.8], [1.0, 0.0], [0.0, 1.0]])
        np.testing.assert_array_equal(order, [1, 0, 2])

    def test_ties_break_by_ascending_index(self):
        order = rank_database(np.array([1.0, 0.0]),
                              [[0.6, 0.8], [0.6, -0.8], [1.0, 0.0]])
        np.testing.assert_array_equal(order, [2, 0, 1])

    def test_empty_database(self):
        with pytest.raises(EmptyInputError):
            rank_database(np.array([1.0]), np.zeros((0, 1)))

    def test_rotation_invariance(self):
        rng = np.random.default_rng(1)
        db = _unit_rows(rng, 20, 8)
        query = _unit_rows(rng, 1, 8)[0]
        q, _ = np.linalg.qr(rng.standard_normal((8, 8)))
        np.testing.assert_array_equal(rank_database(query, db),
                                      rank_database(query @ q, db @ q))


class TestRecallAtK:
    def test_identical_database_is_perfect(self):
        rng = np.random.default_rng(2)
        m = _unit_rows(rng, 12, 5)
        for k in (1, 3, 10):
            assert recall_at_k(m, m, np.arange(12), k) == 1.0

    def test_k_at_least_n_is_perfect(self):
        rng = np.random.default_rng(3)
        queries = _unit_rows(rng, 6, 4)
        database = _unit_rows(rng, 6, 4)
        assert recall_at_k(queries, database, np.arange(6), 6) == 1.0
        assert recall_at_k(queries, database, np.arange(6), 60) == 1.0

    def test_chance_level_for_random_embeddings(self):
        """Independent random unit vectors: recall ~ k/n in expectation."""
        rng = np.random.default_rng(4)
        n, k, rounds = 80, 8, 30
        observed = [recall_at_k(_unit_rows(rng, n, 64),
                                _unit_rows(rng, n, 64), np.arange(n), k)
                    for _ in range(rounds)]
        chance = k / n
        sigma = np.sqrt(chance * (1 - chance) / (n * rounds))
        assert abs(np.mean(observed) - chance) <= 4 * sigma

    def test_monotone_in_k(self):
        rng = np.random.default_rng(5)
        queries = _unit_rows(rng, 30, 6)
        database = _unit_rows(rng, 40, 6)
        truth = rng.integers(0, 40, size=30)
        values = [recall_at_k(queries, database, truth, k)
                  for k in range(1, 41)]
        assert all(b >= a for a, b in zip(values, values[1:]))
        assert values[-1] == 1.0

    def test_agrees_exactly_with_brute_force_oracle(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            n = int(rng.integers(2, 101))
            q = int(rng.integers(1, 40))
            d = int(rng.integers(2, 12))
            queries = _unit_rows(rng, q, d)
            database = _unit_rows(rng, n, d)
            truth = rng.integers(0, n, size=q)
            for k in (1, 5, 10):
                assert recall_at_k(queries, database, truth, k) == \
                    _oracle_recall(queries, database, truth, k)

    def test_bad_ground_truth_raises_mapping_error(self):
        rng = np.random.default_rng(7)
        queries = _unit_rows(rng, 3, 4)
        database = _unit_rows(rng, 5, 4)
        with pytest.raises(MappingError):
            recall_at_k(queries, database, np.array([0, 1, 5]), 2)
        with pytest.raises(MappingError):
            recall_at_k(queries, database, np.array([0, 1]), 2)

    def test_k_validation(self):
        rng = np.random.default_rng(8)
        m = _unit_rows(rng, 3, 4)
        with pytest.raises(ParameterError):
            recall_at_k(m, m, np.arange(3), 0)


class TestTaskSuite:
    def setup_method(self):
        self.dataset = gen_synthetic(48, 4, 2, 2, 0.1, 2, seed=3,
                                     captions_per_type=2)
        self.aligner = init_aligner(0)

    def test_report_has_seven_task_rows(self):
        report = run_task_suite(self.aligner, self.dataset, k=10)
        assert len(report.tasks) == 7
        assert sum(t.retrieve == "visual" for t in report.tasks) == 4
        assert sum(t.retrieve == "audio" for t in report.tasks) == 3
        assert not any(t.skipped for t in report.tasks)

    def test_recalls_in_unit_interval(self):
        report = run_task_suite(self.aligner, self.dataset, k=10)
        for task in report.tasks:
            assert 0.0 <= task.recall <= 1.0

    def test_untrained_aligner_near_chance(self):
        report = run_task_suite(self.aligner, self.dataset, k=5)
        chance = 5 / 48
        for task in report.tasks:
            assert task.recall <= 4 * chance

    def test_deterministic(self):
        a = run_task_suite(self.aligner, self.dataset, k=10)
        b = run_task_suite(self.aligner, self.dataset, k=10)
        assert a == b
        assert a.to_json() == b.to_json()

    def test_all_captions_counted_as_queries(self):
        report = run_task_suite(self.aligner, self.dataset, k=10)
        caption_task = report.task("visual", "visual_captions")
        assert caption_task.n_queries == 2 * 48
        first_only = run_task_suite(self.aligner, self.dataset, k=10,
                                    all_captions=False)
        assert first_only.task("visual", "visual_captions").n_queries == 48

    def test_missing_caption_type_marks_skipped(self):
        dataset = gen_synthetic(12, 4, 2, 2, 0.1, 2, seed=4)
        no_av = dataset.subset(dataset.clip_ids)
        no_av.captions[:] = [c for c in dataset.captions
                             if c.caption_type != "audio_visual"]
        stripped = type(dataset)(records=no_av.records,
                                 captions=no_av.captions)
        report = run_task_suite(self.aligner, stripped, k=5)
        skipped = {(t.retrieve, t.based_on) for t in report.tasks if t.skipped}
        assert skipped == {("visual", "audio_visual_captions"),
                           ("audio", "audio_visual_captions")}
        for task in report.tasks:
            assert task.skipped == (task.recall is None)

    def test_fingerprint_tracks_content(self):
        same = gen_synthetic(48, 4, 2, 2, 0.1, 2, seed=3,
                             captions_per_type=2)
        other = gen_synthetic(48, 4, 2, 2, 0.1, 2, seed=5,
                              captions_per_type=2)
        assert dataset_fingerprint(same) == dataset_fingerprint(self.dataset)
        assert dataset_fingerprint(other) != dataset_fingerprint(self.dataset)

    def test_fingerprint_stable_across_disk_round_trip(self, tmp_path):
        from trialign.data import read_dataset, write_dataset
        write_dataset(self.dataset, tmp_path / "ds")
        loaded = read_dataset(tmp_path / "ds")
        assert dataset_fingerprint(loaded) == dataset_fingerprint(self.dataset)


class TestReportFormats:
    def setup_method(self):
        self.dataset = gen_synthetic(16, 4, 2, 2, 0.1, 2, seed=6)
        self.reports = [
            run_task_suite(init_aligner(s), self.dataset, k=5,
                           model_tag=f"model-{s}")
            for s in (0, 1)]

    def test_table_layout(self):
        table = format_report_table(self.reports)
        lines = table.splitlines()
        assert lines[0].split()[:2] == ["Retrieve", "Based"]
        assert "model-0" in lines[0] and "model-1" in lines[0]
        assert len(lines) == 9  # header + rule + seven tasks
        assert lines[-1].startswith("Visual")
        assert "Audio-Visual Captions" in table

    def test_merged_dict_shape(self):
        merged = merged_report_dict(self.reports)
        assert merged["models"] == ["model-0", "model-1"]
        assert len(merged["rows"]) == 7
        for row in merged["rows"]:
            assert len(row["recalls"]) == 2

    def test_merge_rejects_mismatched_datasets(self):
        other = gen_synthetic(16, 4, 2, 2, 0.1, 2, seed=9)
        mismatched = [self.reports[0],
                      run_task_suite(init_aligner(0), other, k=5,
                                     model_tag="other")]
        with pytest.raises(ParameterError, match="different datasets"):
            merged_report_dict(mismatched)

    def test_json_round_trip_fields(self):
        report = self.reports[0]
        data = report.to_json_dict()
        assert data["k"] == 5 and data["n_clips"] == 16
        assert len(data["tasks"]) == 7
