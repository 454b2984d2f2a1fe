"""Multiplications per predicted block for the network and the simplified predictor.

Only weight-matrix products count. Bias additions and activations are free.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, List

import numpy as np

from prediction.layers import nn_forward, linear_forward
from prediction.opcount import count_multiplications
from prediction.types import (BlockSpec, NNModel, LinearNoIntercept, SUPPORTED_SIZES)

COUNT_KINDS = ("nn", "simplified")

GROWTH_NOTE = ("Both counts grow as O(n*sqrt(n)) in the block area n; "
               "the simplified predictor saves a constant factor only.")


def multiplication_count(spec: BlockSpec, kind: str) -> int:
    """Closed-form count for one mode on one block.

    nn         = 4n(sqrt(n) + 41) + 32(19 sqrt(n) + 18)
    simplified = 8n(sqrt(n) + 2)
    """
    n, root = spec.n, spec.N
    if kind == "nn":
        return 4 * n * (root + 41) + 32 * (19 * root + 18)
    if kind == "simplified":
        return 8 * n * (root + 2)
    raise ValueError(f"Invalid complexity kind: '{kind}' (must be one of {COUNT_KINDS})")


def _unit_models(spec: BlockSpec):
    s = spec
    nn = NNModel(s, W1=np.zeros((s.m, s.m)), b1=np.zeros(s.m),
                 W2=np.zeros((s.m, s.m)), b2=np.zeros(s.m),
                 W3=np.zeros((s.q, s.m)), b3=np.zeros(s.q),
                 W4=np.zeros((1, s.n, s.q)), b4=np.zeros((1, s.n)))
    lin = LinearNoIntercept(s, np.full((1, s.n, s.m), 1.0 / s.m))
    return nn, lin


def instrumented_count(spec: BlockSpec, kind: str) -> int:
    """Count by running the reference forward pass under the op counter."""
    if kind not in COUNT_KINDS:
        raise ValueError(f"Invalid complexity kind: '{kind}' (must be one of {COUNT_KINDS})")
    nn, lin = _unit_models(spec)
    r = np.full(spec.m, 0.5)
    with count_multiplications() as counter:
        if kind == "nn":
            nn_forward(nn, r, 0)
        else:
            linear_forward(lin, r, 0)
    return counter.total


def complexity_table(sizes: Iterable[int] = SUPPORTED_SIZES) -> List[Dict[str, int]]:
    """One row per block size: N, n, nn count, simplified count."""
    rows = []
    for N in sizes:
        spec = BlockSpec(N)
        rows.append({
            'N': N,
            'n': spec.n,
            'nn': multiplication_count(spec, "nn"),
            'simplified': multiplication_count(spec, "simplified"),
        })
    return rows


def format_complexity_table(rows: List[Dict[str, int]]) -> str:
    lines = [f"{'block':>7}  {'n':>4}  {'nn':>7}  {'simplified':>10}  {'ratio':>6}"]
    for row in rows:
        ratio = row['nn'] / row['simplified']
        lines.append(f"{row['N']:>3}x{row['N']:<3}  {row['n']:>4}  {row['nn']:>7}  "
                     f"{row['simplified']:>10}  {ratio:>6.2f}")
    lines.append(GROWTH_NOTE)
    return "\n".join(lines)


@dataclass
class ComplexityTally:
    """Multiplications spent predicting an image, per learned-model kind.

    A block evaluated with a K-mode model costs K times the per-mode count.
    """
    per_mode: Dict[str, int] = field(default_factory=dict)
    totals: Dict[str, int] = field(default_factory=dict)

    @classmethod
    def for_spec(cls, spec: BlockSpec) -> "ComplexityTally":
        return cls(per_mode={k: multiplication_count(spec, k) for k in COUNT_KINDS})

    def add(self, model_kind: str, blocks: int, K: int):
        count_kind = "nn" if model_kind == "nn" else "simplified"
        self.totals[model_kind] = self.totals.get(model_kind, 0) + blocks * K * self.per_mode[count_kind]

    def merge(self, other: "ComplexityTally") -> "ComplexityTally":
        totals = dict(self.totals)
        for kind, value in other.totals.items():
            totals[kind] = totals.get(kind, 0) + value
        return ComplexityTally(per_mode=dict(self.per_mode or other.per_mode), totals=totals)

    def to_dict(self) -> dict:
        return {'per_mode': dict(self.per_mode), 'totals': dict(self.totals)}
