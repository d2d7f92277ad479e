"""Aligner initialization and the project -> pool -> normalize pipeline."""

import numpy as np
import pytest

from trialign.errors import ShapeError
from trialign.model import (AlignerConfig, ProjectionHead, TrimodalAligner,
                            embed_modality, embed_stack, init_aligner)


def _identity_head(dim: int) -> ProjectionHead:
    return ProjectionHead(np.eye(dim), np.zeros(dim))


class TestInitAligner:
    def test_same_seed_bit_identical(self):
        a = init_aligner(0)
        b = init_aligner(0)
        for name in ("visual", "audio", "text"):
            np.testing.assert_array_equal(a.head(name).weight,
                                          b.head(name).weight)
            np.testing.assert_array_equal(a.head(name).bias, b.head(name).bias)

    def test_seed_sensitivity(self):
        a = init_aligner(0)
        b = init_aligner(1)
        assert not np.array_equal(a.visual_head.weight, b.visual_head.weight)

    def test_uniform_bound_from_fan_in(self):
        """Entries drawn uniform in +-1/sqrt(in_dim): 1/sqrt(768) ~ 0.03608."""
        aligner = init_aligner(0)
        bound = 1.0 / np.sqrt(768.0)
        assert abs(bound - 0.036084391824351615) < 1e-18
        for name in ("visual", "audio"):
            w = aligner.head(name).weight
            assert np.abs(w).max() <= bound
        assert np.abs(aligner.text_head.weight).max() <= 1.0 / np.sqrt(512.0)

    def test_default_dims(self):
        aligner = init_aligner(0)
        assert aligner.visual_head.weight.shape == (768, 512)
        assert aligner.audio_head.weight.shape == (768, 512)
        assert aligner.text_head.weight.shape == (512, 512)
        assert aligner.out_dim == 512

    def test_temperature_must_be_positive(self):
        with pytest.raises(Exception, match="temperature"):
            TrimodalAligner(_identity_head(4), _identity_head(4),
                            _identity_head(4), temperature=0.0)


class TestEmbedModality:
    def test_identity_projection_single_row(self):
        head = _identity_head(4)
        row = np.array([[3.0, 0.0, 4.0, 0.0]])
        vec, degenerate = embed_modality(head, row)
        np.testing.assert_allclose(vec, [0.6, 0.0, 0.8, 0.0],
                                   rtol=0, atol=1e-15)
        assert not degenerate

    def test_duplicate_rows_pool_to_single_row_result(self):
        rng = np.random.default_rng(5)
        head = ProjectionHead(rng.standard_normal((6, 4)), np.zeros(4))
        row = rng.standard_normal((1, 6))
        single, _ = embed_modality(head, row)
        doubled, _ = embed_modality(head, np.vstack([row, row]))
        np.testing.assert_array_equal(doubled, single)

    def test_three_step_hand_pipeline(self):
        """Match an independent normalize(mean(xW + b)) computed inline."""
        x = np.array([[1.0, 2.0], [3.0, 4.0]])
        w = np.array([[0.5, -0.25], [1.0, 0.75]])
        b = np.array([0.1, -0.2])
        head = ProjectionHead(w, b, use_bias=True)
        vec, degenerate = embed_modality(head, x)
        projected = x @ w + b
        pooled = projected.mean(axis=0)
        expected = pooled / np.linalg.norm(pooled)
        np.testing.assert_allclose(vec, expected, rtol=0, atol=1e-14)
        assert not degenerate

    def test_unit_norm_invariant(self):
        rng = np.random.default_rng(6)
        head = ProjectionHead(rng.standard_normal((8, 5)), np.zeros(5))
        for _ in range(50):
            x = rng.standard_normal((int(rng.integers(1, 7)), 8))
            vec, degenerate = embed_modality(head, x)
            assert not degenerate
            assert abs(np.linalg.norm(vec) - 1.0) <= 1e-9

    def test_row_permutation_bit_unchanged(self):
        rng = np.random.default_rng(7)
        head = ProjectionHead(rng.standard_normal((8, 5)), np.zeros(5))
        x = rng.standard_normal((6, 8))
        base, _ = embed_modality(head, x)
        for _ in range(10):
            permuted, _ = embed_modality(head, x[rng.permutation(6)])
            np.testing.assert_array_equal(permuted, base)

    def test_positive_scaling_invariance_without_bias(self):
        rng = np.random.default_rng(8)
        head = ProjectionHead(rng.standard_normal((8, 5)), np.zeros(5),
                              use_bias=False)
        x = rng.standard_normal((4, 8))
        base, _ = embed_modality(head, x)
        for c in (1e-3, 0.5, 7.0, 1e4):
            scaled, _ = embed_modality(head, c * x)
            np.testing.assert_allclose(scaled, base, rtol=0, atol=1e-9)

    def test_degenerate_input_flagged_zero_vector(self):
        head = _identity_head(3)
        vec, degenerate = embed_modality(head, np.zeros((2, 3)))
        assert degenerate
        np.testing.assert_array_equal(vec, np.zeros(3))

    def test_dimension_mismatch(self):
        head = _identity_head(4)
        with pytest.raises(ShapeError):
            embed_modality(head, np.ones((2, 5)))

    def test_frozen_flag_survives_copy(self):
        aligner = init_aligner(0)
        aligner.audio_head.trainable = False
        assert not aligner.copy().audio_head.trainable


class TestEmbedStack:
    def test_matches_per_clip_embedding(self):
        """The stacked batch path agrees with one-clip embedding calls."""
        rng = np.random.default_rng(9)
        head = ProjectionHead(rng.standard_normal((8, 5)), np.zeros(5))
        xs = [rng.standard_normal((int(rng.integers(1, 5)), 8))
              for _ in range(6)]
        unit, cache = embed_stack(head, xs)
        for i, x in enumerate(xs):
            vec, _ = embed_modality(head, x)
            np.testing.assert_allclose(unit[i], vec, rtol=0, atol=1e-12)
            np.testing.assert_allclose(cache.input_means[i], x.mean(axis=0),
                                       rtol=0, atol=1e-12)

    def test_toy_out_dim_supported(self):
        config = AlignerConfig(visual_in=6, audio_in=6, text_in=5, out_dim=4)
        aligner = init_aligner(3, config)
        assert aligner.out_dim == 4
        vec, _ = embed_modality(aligner.text_head, np.ones((1, 5)))
        assert vec.shape == (4,)
