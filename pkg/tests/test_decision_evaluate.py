"""Tests for mode decision and whole-image evaluation."""

import sys
import os
import pytest
import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from harness.complexity import multiplication_count
from harness.conventional import ConventionalModeSet
from harness.decision import select_mode, candidate_costs, sse, satd, ModeDecision
from harness.evaluate import evaluate_image, evaluate_images, FamilyUsage, PredictionReport
from prediction.collapse import collapse_no_intercept, collapse_with_intercept
from prediction.errors import SpecMismatchError
from prediction.types import BlockSpec, NNModel, LinearNoIntercept, LinearWithIntercept
from training.images import LumaImage
from training.patches import sample_dataset
from training.trainer import TrainConfig, train_nn


def checkerboard(tiles=4, N=8):
    """Alternating black / white N x N tiles, black at the top-left."""
    ty, tx = np.indices((tiles * N, tiles * N)) // N
    plane = np.where((tx + ty) % 2 == 0, 0, 255).astype(np.uint8)
    return LumaImage.from_array(plane, name="checker")


def smooth_image(width=48, height=40, seed=0):
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    plane = 100 + 1.5 * xx + 30 * np.sin(yy / 6.0) + rng.normal(0, 4, (height, width))
    return LumaImage.from_array(np.clip(np.rint(plane), 0, 255).astype(np.uint8), name=f"smooth{seed}")


def black_white_affine(spec):
    """Two learned modes: all-black and all-white blocks."""
    beta = np.vstack([np.zeros(spec.n), np.ones(spec.n)])
    return LinearWithIntercept(spec, np.zeros((2, spec.n, spec.m)), beta)


def black_white_network(spec):
    arrays = dict(NNModel.zeros(spec, 2).arrays())
    arrays['b4'] = np.vstack([np.zeros(spec.n), np.ones(spec.n)])
    return NNModel(spec, **arrays)


def vertical_copy_model(spec):
    """Learned mode equal to pure vertical prediction from the adjacent line."""
    N = spec.N
    A = np.zeros((1, spec.n, spec.m))
    for y in range(N):
        for x in range(N):
            A[0, y * N + x, 16 + 3 * N + x] = 1.0
    return LinearNoIntercept(spec, A)


# ── Distortion ───────────────────────────────────────────────────

class TestDistortion:
    def test_sse_in_8bit_units(self):
        t = np.full(16, 0.5)
        assert sse(t + 1 / 255, t) == pytest.approx(16.0)

    def test_satd_of_constant_residual(self):
        t = np.full(16, 0.5)
        assert satd(t + 2 / 255, t) == pytest.approx(16.0)
        t8 = np.full(64, 0.5)
        assert satd(t8 + 2 / 255, t8) == pytest.approx(64.0)

    def test_candidates_are_clipped(self):
        costs = candidate_costs(np.array([[1.5, -0.5], [-0.2, 0.0]]), np.array([1.0, 0.0]))
        assert costs[0] == 0.0
        assert costs[1] == pytest.approx(255.0 ** 2)


def as_candidates(blocks, family="conventional"):
    return [(family, i, b) for i, b in enumerate(blocks)]


class TestSelectMode:
    def test_matches_brute_force(self):
        rng = np.random.default_rng(0)
        for _ in range(10000):
            conv_count = int(rng.integers(1, 36))
            learned_count = int(rng.integers(0, 9))
            blocks = rng.uniform(-0.1, 1.1, (conv_count + learned_count, 16))
            candidates = (as_candidates(blocks[:conv_count])
                          + as_candidates(blocks[conv_count:], "learned"))
            target = rng.uniform(0, 1, 16)
            best, best_cost = None, None
            for family, k, c in candidates:
                cost = float(np.sum((255.0 * (np.clip(c, 0, 1) - target)) ** 2))
                if best_cost is None or cost < best_cost:
                    best, best_cost = (family, k), cost
            decision = select_mode(candidates, target)
            assert (decision.family, decision.mode) == best
            assert decision.cost == pytest.approx(best_cost, rel=1e-12)

    def test_learned_winner_reports_its_mode(self):
        target = np.zeros(16)
        candidates = [("conventional", 0, np.full(16, 0.2)), ("learned", 3, np.zeros(16))]
        decision = select_mode(candidates, target, x=4, y=12, pool="nn")
        assert decision == ModeDecision(4, 12, "learned", 3, 0.0, pool="nn")

    def test_single_candidate_always_chosen(self):
        decision = select_mode([("learned", 5, np.ones(16))], np.zeros(16))
        assert (decision.family, decision.mode) == ("learned", 5)
        assert decision.cost == pytest.approx(16 * 255.0 ** 2)

    def test_earliest_minimum_wins(self):
        t = np.zeros(4)
        c = np.array([[0.1, 0, 0, 0], [0, 0, 0.05, 0], [0, 0.05, 0, 0]])
        assert select_mode(as_candidates(c), t).mode == 1

    def test_conventional_listed_first_wins_tie(self):
        t = np.full(16, 0.5)
        same = np.full(16, 0.6)
        candidates = [("conventional", 7, same), ("learned", 0, same.copy())]
        assert select_mode(candidates, t).family == "conventional"

    def test_permutation_keeps_cost(self):
        rng = np.random.default_rng(1)
        blocks = rng.uniform(0, 1, (12, 16))
        target = rng.uniform(0, 1, 16)
        candidates = as_candidates(blocks)
        cost = select_mode(candidates, target).cost
        for _ in range(10):
            shuffled = [candidates[i] for i in rng.permutation(12)]
            decision = select_mode(shuffled, target)
            assert decision.cost == cost
            assert decision.mode == select_mode(candidates, target).mode

    def test_satd_metric(self):
        t = np.full(16, 0.5)
        candidates = as_candidates([t + 3 / 255, t + 1 / 255])
        decision = select_mode(candidates, t, metric="satd", x=8, y=4)
        assert (decision.mode, decision.cost) == (1, pytest.approx(8.0))
        assert (decision.x, decision.y, decision.family) == (8, 4, "conventional")

    def test_invalid(self):
        with pytest.raises(ValueError):
            select_mode([], np.zeros(16))
        with pytest.raises(ValueError):
            select_mode(as_candidates(np.zeros((2, 16))), np.zeros(16), metric="sad")
        with pytest.raises(ValueError):
            select_mode([("hybrid", 0, np.zeros(16))], np.zeros(16))


# ── Image evaluation ─────────────────────────────────────────────

class TestEvaluateImage:
    def test_tiles_and_partial_edges(self):
        img = LumaImage.from_array(np.full((36, 30), 90, dtype=np.uint8))
        report = evaluate_image(img, BlockSpec(8), models=())
        assert report.blocks == 3 * 4
        assert report.usage == {}
        # only the top-left block has no references and predicts mid-gray
        assert report.conventional_sse == pytest.approx(64 * (127.5 - 90) ** 2, rel=1e-9)

    def test_learned_modes_win_checkerboard(self):
        spec = BlockSpec(8)
        report = evaluate_image(checkerboard(), spec, [black_white_affine(spec)])
        fam = report.usage['linear_with_intercept']
        assert report.blocks == 16
        assert fam.usage_pct == 100.0
        assert fam.histogram == [8, 8]
        assert fam.dominant_modes == [0, 1]
        assert fam.pool_sse == 0.0
        assert report.conventional_sse > 0

    def test_ties_keep_conventional(self):
        spec = BlockSpec(4)
        img = smooth_image(seed=3)
        report = evaluate_image(img, spec, [vertical_copy_model(spec)])
        fam = report.usage['linear_no_intercept']
        assert fam.learned_blocks == 0
        assert fam.pool_sse == report.conventional_sse

    def test_pool_never_worse_than_conventional(self):
        spec = BlockSpec(4)
        rng = np.random.default_rng(2)
        Gamma = rng.uniform(0, 2.0 / spec.m, (3, spec.n, spec.m))
        model = LinearWithIntercept(spec, Gamma, rng.uniform(-0.1, 0.1, (3, spec.n)))
        report = evaluate_image(smooth_image(seed=4), spec, [model])
        fam = report.usage['linear_with_intercept']
        assert fam.pool_sse <= report.conventional_sse + 1e-9
        assert fam.usage_pct + fam.conventional_pct == pytest.approx(100.0)
        assert sum(fam.histogram) == fam.learned_blocks

    def test_more_conventional_modes_never_hurt(self):
        spec = BlockSpec(8)
        img = smooth_image(seed=5)
        few = evaluate_image(img, spec, mode_set=ConventionalModeSet(3))
        all_modes = evaluate_image(img, spec, mode_set=ConventionalModeSet(35))
        assert all_modes.conventional_sse <= few.conventional_sse + 1e-9

    def test_decisions_and_tally(self):
        spec = BlockSpec(8)
        models = [black_white_affine(spec), black_white_network(spec)]
        report = evaluate_image(checkerboard(), spec, models, keep_decisions=True)
        assert len(report.decisions) == 16 * 3
        pools = [d.pool for d in report.decisions]
        assert pools.count(None) == 16
        assert pools.count('nn') == 16
        learned = [d for d in report.decisions if d.pool == 'nn']
        assert all(d.family == "learned" and d.mode in (0, 1) for d in learned)
        assert report.tally.totals['nn'] == 16 * 2 * multiplication_count(spec, "nn")
        assert report.tally.totals['linear_with_intercept'] == 16 * 2 * multiplication_count(spec, "simplified")

    def test_model_block_size_mismatch(self):
        with pytest.raises(SpecMismatchError):
            evaluate_image(checkerboard(), BlockSpec(8), [black_white_affine(BlockSpec(4))])

    def test_duplicate_kind_rejected(self):
        spec = BlockSpec(8)
        with pytest.raises(ValueError):
            evaluate_image(checkerboard(), spec, [black_white_affine(spec), black_white_affine(spec)])

    def test_invalid_metric(self):
        with pytest.raises(ValueError):
            evaluate_image(checkerboard(), BlockSpec(8), metric="mse")


# ── Report merging ───────────────────────────────────────────────

class TestReportMerge:
    def test_associative(self):
        spec = BlockSpec(4)
        model = black_white_affine(spec)
        a, b, c = (evaluate_image(smooth_image(seed=s), spec, [model]) for s in (6, 7, 8))
        left = a.merge(b).merge(c)
        right = a.merge(b.merge(c))
        assert left.blocks == right.blocks == a.blocks + b.blocks + c.blocks
        assert left.conventional_sse == pytest.approx(right.conventional_sse, rel=1e-12)
        fl, fr = left.usage['linear_with_intercept'], right.usage['linear_with_intercept']
        assert fl.histogram == fr.histogram
        assert fl.learned_blocks == fr.learned_blocks
        assert left.tally.totals == right.tally.totals
        assert left.images == right.images == ["smooth6", "smooth7", "smooth8"]

    def test_merge_needs_same_block_size(self):
        with pytest.raises(SpecMismatchError):
            PredictionReport(N=4).merge(PredictionReport(N=8))

    def test_family_usage_merge(self):
        a = FamilyUsage("nn", 2, blocks=4, learned_blocks=1, histogram=[1, 0], pool_sse=3.0)
        b = FamilyUsage("nn", 2, blocks=6, learned_blocks=4, histogram=[1, 3], pool_sse=2.0)
        m = a.merge(b)
        assert (m.blocks, m.learned_blocks, m.histogram, m.pool_sse) == (10, 5, [2, 3], 5.0)
        assert m.usage_pct == 50.0
        with pytest.raises(ValueError):
            a.merge(FamilyUsage("nn", 3))

    def test_evaluate_images(self):
        spec = BlockSpec(8)
        report = evaluate_images([checkerboard(), checkerboard()], spec, [black_white_affine(spec)])
        assert report.blocks == 32
        assert report.usage['linear_with_intercept'].histogram == [16, 16]
        with pytest.raises(ValueError):
            evaluate_images([], spec)

    def test_csv_rows(self):
        spec = BlockSpec(8)
        report = evaluate_image(checkerboard(), spec, [black_white_affine(spec)])
        rows = report.csv_rows()
        assert [r['pool'] for r in rows] == ['conventional', 'linear_with_intercept']
        assert rows[1]['usage_pct'] == 100.0
        assert rows[1]['dominant_modes'] == "0 1"


# ── Desk experiment ──────────────────────────────────────────────

def natural_image(seed, size=96):
    """Oriented textures, a couple of edges and sensor noise."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    plane = np.full((size, size), rng.uniform(90, 160))
    for _ in range(3):
        angle, period = rng.uniform(0, np.pi), rng.uniform(6, 30)
        phase = (xx * np.cos(angle) + yy * np.sin(angle)) * 2 * np.pi / period
        plane += rng.uniform(10, 35) * np.sin(phase + rng.uniform(0, 2 * np.pi))
    for _ in range(2):
        angle, offset = rng.uniform(0, np.pi), rng.uniform(0.3, 0.7) * size
        plane += rng.uniform(-40, 40) * ((xx * np.cos(angle) + yy * np.sin(angle)) > offset)
    plane += rng.normal(0, 3, (size, size))
    return LumaImage.from_array(np.clip(np.rint(plane), 0, 255).astype(np.uint8), name=f"natural{seed}")


class TestDeskExperiment:
    @pytest.mark.parametrize("N", [4, 8])
    def test_train_collapse_evaluate_held_out(self, N):
        spec = BlockSpec(N)
        train_images = [natural_image(seed) for seed in range(5)]
        held_out = natural_image(100)
        dataset = sample_dataset(train_images, 5 * 2000, spec, seed=0)
        config = TrainConfig(K=8, steps=1500, batch_size=256, learning_rate=1e-3, log_every=0)
        nn = train_nn(dataset, spec, config).model
        models = [nn, collapse_no_intercept(nn), collapse_with_intercept(nn)]

        report = evaluate_image(held_out, spec, models, keep_decisions=True)
        assert report.blocks == (96 // N) ** 2
        assert set(report.usage) == {'nn', 'linear_no_intercept', 'linear_with_intercept'}

        # the full pool never does worse than the conventional modes alone, block by block
        conventional = {(d.x, d.y): d.cost for d in report.decisions if d.pool is None}
        assert len(conventional) == report.blocks
        for d in report.decisions:
            if d.pool is not None:
                assert d.cost <= conventional[(d.x, d.y)]
        for fam in report.usage.values():
            assert fam.pool_sse <= report.conventional_sse
            assert len(fam.histogram) == 8

        fam = report.usage['nn']
        assert fam.usage_pct > 0.0
        assert len(set(fam.histogram)) > 1
        assert report.to_dict()['complexity']['per_mode'] == {
            'nn': multiplication_count(spec, "nn"), 'simplified': multiplication_count(spec, "simplified")}
