"""Tests for per-block multiplication counts."""

import sys
import os
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from harness.complexity import (ComplexityTally, GROWTH_NOTE, complexity_table, format_complexity_table,
                                instrumented_count, multiplication_count)
from prediction.types import BlockSpec


EXPECTED = {4: (5888, 768), 8: (17984, 5120), 16: (68672, 36864)}


# ── Closed form ──────────────────────────────────────────────────

class TestMultiplicationCount:
    @pytest.mark.parametrize("N", [4, 8, 16])
    def test_table_values(self, N):
        nn, simplified = EXPECTED[N]
        assert multiplication_count(BlockSpec(N), "nn") == nn
        assert multiplication_count(BlockSpec(N), "simplified") == simplified

    @pytest.mark.parametrize("N", [4, 8, 16])
    def test_formula_from_layer_sizes(self, N):
        s = BlockSpec(N)
        assert multiplication_count(s, "nn") == 2 * s.m * s.m + s.q * s.m + s.n * s.q
        assert multiplication_count(s, "simplified") == s.n * s.m

    @pytest.mark.parametrize("N", [4, 8, 16])
    @pytest.mark.parametrize("kind", ["nn", "simplified"])
    def test_instrumented_count_agrees(self, N, kind):
        spec = BlockSpec(N)
        assert instrumented_count(spec, kind) == multiplication_count(spec, kind)

    def test_simplified_always_cheaper(self):
        for N in (4, 8, 16):
            spec = BlockSpec(N)
            assert multiplication_count(spec, "simplified") < multiplication_count(spec, "nn")

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            multiplication_count(BlockSpec(4), "conv")
        with pytest.raises(ValueError):
            instrumented_count(BlockSpec(4), "conv")


class TestComplexityTable:
    def test_rows(self):
        rows = complexity_table()
        assert [r['N'] for r in rows] == [4, 8, 16]
        assert [(r['nn'], r['simplified']) for r in rows] == [EXPECTED[4], EXPECTED[8], EXPECTED[16]]
        assert [r['n'] for r in rows] == [16, 64, 256]

    def test_subset(self):
        assert [r['N'] for r in complexity_table([8])] == [8]

    def test_formatted(self):
        text = format_complexity_table(complexity_table())
        assert "68672" in text
        assert "36864" in text
        assert text.splitlines()[-1] == GROWTH_NOTE
        assert "7.67" in text                   # 5888 / 768


# ── Tally ────────────────────────────────────────────────────────

class TestComplexityTally:
    def test_add(self):
        tally = ComplexityTally.for_spec(BlockSpec(4))
        tally.add("nn", blocks=10, K=3)
        tally.add("linear_no_intercept", blocks=10, K=3)
        tally.add("linear_no_intercept", blocks=2, K=3)
        assert tally.totals == {'nn': 10 * 3 * 5888, 'linear_no_intercept': 12 * 3 * 768}

    def test_merge(self):
        a = ComplexityTally.for_spec(BlockSpec(8))
        b = ComplexityTally.for_spec(BlockSpec(8))
        a.add("nn", 1, 1)
        b.add("nn", 2, 1)
        b.add("linear_with_intercept", 4, 2)
        merged = a.merge(b)
        assert merged.totals == {'nn': 3 * 17984, 'linear_with_intercept': 8 * 5120}
        assert a.totals == {'nn': 17984}
        assert merged.to_dict()['per_mode'] == {'nn': 17984, 'simplified': 5120}

    def test_merge_into_empty(self):
        b = ComplexityTally.for_spec(BlockSpec(4))
        b.add("nn", 1, 1)
        merged = ComplexityTally().merge(b)
        assert merged.per_mode == b.per_mode
        assert merged.totals == b.totals
