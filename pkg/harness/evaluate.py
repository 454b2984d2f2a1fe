"""Whole-image evaluation of learned modes against the conventional set.

The image is cut into non-overlapping N x N tiles (partial tiles at the
right and bottom edges are skipped). Every tile is predicted once with the
conventional modes alone, then once per learned model from the pool of
conventional plus learned modes. Conventional candidates come first, so a
tie keeps the conventional mode.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from harness.complexity import ComplexityTally
from harness.conventional import ConventionalModeSet, conventional_predict_all
from harness.decision import METRICS, ModeDecision, select_mode, sse
from harness.references import gather_one_line, gather_references
from prediction.errors import SpecMismatchError
from prediction.layers import clip_block, predict_all
from prediction.types import BlockSpec
from training.images import LumaImage

logger = logging.getLogger(__name__)

DOMINANT_MODES = 3


@dataclass
class FamilyUsage:
    """How often one learned-model kind beat the conventional modes."""
    kind: str
    K: int
    blocks: int = 0
    learned_blocks: int = 0
    histogram: List[int] = field(default_factory=list)
    pool_sse: float = 0.0

    def __post_init__(self):
        if not self.histogram:
            self.histogram = [0] * self.K

    @property
    def usage_pct(self) -> float:
        return 100.0 * self.learned_blocks / self.blocks if self.blocks else 0.0

    @property
    def conventional_pct(self) -> float:
        return 100.0 - self.usage_pct if self.blocks else 0.0

    @property
    def dominant_modes(self) -> List[int]:
        """Most used learned modes, most frequent first (ties: lower index)."""
        order = sorted(range(self.K), key=lambda k: (-self.histogram[k], k))
        return [k for k in order[:DOMINANT_MODES] if self.histogram[k] > 0]

    def merge(self, other: "FamilyUsage") -> "FamilyUsage":
        if (self.kind, self.K) != (other.kind, other.K):
            raise ValueError(f"Cannot merge usage of {self.kind}/K={self.K} with {other.kind}/K={other.K}")
        return FamilyUsage(self.kind, self.K, self.blocks + other.blocks,
                           self.learned_blocks + other.learned_blocks,
                           [a + b for a, b in zip(self.histogram, other.histogram)],
                           self.pool_sse + other.pool_sse)

    def to_dict(self) -> dict:
        return {
            'kind': self.kind,
            'K': self.K,
            'blocks': self.blocks,
            'learned_blocks': self.learned_blocks,
            'usage_pct': self.usage_pct,
            'conventional_pct': self.conventional_pct,
            'histogram': list(self.histogram),
            'pool_sse': self.pool_sse,
            'pool_mean_sse': self.pool_sse / self.blocks if self.blocks else 0.0,
            'dominant_modes': self.dominant_modes,
        }


@dataclass
class PredictionReport:
    N: int
    blocks: int = 0
    conventional_sse: float = 0.0
    usage: Dict[str, FamilyUsage] = field(default_factory=dict)
    tally: Optional[ComplexityTally] = None
    decisions: List[ModeDecision] = field(default_factory=list)
    images: List[str] = field(default_factory=list)

    @property
    def conventional_mean_sse(self) -> float:
        return self.conventional_sse / self.blocks if self.blocks else 0.0

    def merge(self, other: "PredictionReport") -> "PredictionReport":
        """Combine two reports for the same block size; associative."""
        if self.N != other.N:
            raise SpecMismatchError(f"Cannot merge reports for N={self.N} and N={other.N}")
        usage = dict(self.usage)
        for kind, fam in other.usage.items():
            usage[kind] = usage[kind].merge(fam) if kind in usage else fam
        if self.tally is None or other.tally is None:
            tally = self.tally or other.tally
        else:
            tally = self.tally.merge(other.tally)
        return PredictionReport(
            N=self.N,
            blocks=self.blocks + other.blocks,
            conventional_sse=self.conventional_sse + other.conventional_sse,
            usage=usage,
            tally=tally,
            decisions=self.decisions + other.decisions,
            images=self.images + other.images,
        )

    def to_dict(self, include_decisions: bool = False) -> dict:
        out = {
            'N': self.N,
            'images': list(self.images),
            'blocks': self.blocks,
            'conventional_sse': self.conventional_sse,
            'conventional_mean_sse': self.conventional_mean_sse,
            'usage': {kind: fam.to_dict() for kind, fam in sorted(self.usage.items())},
            'complexity': self.tally.to_dict() if self.tally else None,
        }
        if include_decisions:
            out['decisions'] = [d.to_dict() for d in self.decisions]
        return out

    def csv_rows(self) -> List[dict]:
        """One summary row per candidate pool, conventional-only first."""
        rows = [{
            'N': self.N, 'pool': 'conventional', 'K': 0, 'blocks': self.blocks,
            'learned_blocks': 0, 'usage_pct': 0.0,
            'sse': self.conventional_sse, 'mean_sse': self.conventional_mean_sse,
            'multiplications': 0, 'dominant_modes': '',
        }]
        for kind, fam in sorted(self.usage.items()):
            rows.append({
                'N': self.N, 'pool': kind, 'K': fam.K, 'blocks': fam.blocks,
                'learned_blocks': fam.learned_blocks, 'usage_pct': fam.usage_pct,
                'sse': fam.pool_sse, 'mean_sse': fam.pool_sse / fam.blocks if fam.blocks else 0.0,
                'multiplications': self.tally.totals.get(kind, 0) if self.tally else 0,
                'dominant_modes': ' '.join(str(k) for k in fam.dominant_modes),
            })
        return rows


def _check_models(models: Sequence, spec: BlockSpec):
    seen = set()
    for model in models:
        if model.spec != spec:
            raise SpecMismatchError(f"Model ({model.kind}) is for N={model.spec.N}, evaluating N={spec.N}")
        if model.kind in seen:
            raise ValueError(f"More than one {model.kind} model supplied")
        seen.add(model.kind)


def evaluate_image(img: LumaImage, spec: BlockSpec, models: Sequence = (),
                   mode_set: Optional[ConventionalModeSet] = None, metric: str = "sse",
                   keep_decisions: bool = False) -> PredictionReport:
    """Mode-decision statistics for one image."""
    if metric not in METRICS:
        raise ValueError(f"Invalid metric: '{metric}' (must be one of {METRICS})")
    _check_models(models, spec)
    mode_set = mode_set or ConventionalModeSet()
    S, N = mode_set.S, spec.N

    report = PredictionReport(N=N, tally=ComplexityTally.for_spec(spec), images=[img.name])
    for model in models:
        report.usage[model.kind] = FamilyUsage(model.kind, model.K)

    for y in range(0, img.height - N + 1, N):
        for x in range(0, img.width - N + 1, N):
            target = img.samples[y:y + N, x:x + N].astype(np.float64).ravel() / 255.0
            conv = clip_block(conventional_predict_all(gather_one_line(img, x, y, spec), spec, mode_set))
            conv_candidates = [("conventional", s, conv[s]) for s in range(S)]

            decision = select_mode(conv_candidates, target, metric, x, y)
            report.conventional_sse += sse(conv[decision.mode], target)
            report.blocks += 1
            if keep_decisions:
                report.decisions.append(decision)

            if not models:
                continue
            r = gather_references(img, x, y, spec)
            for model in models:
                learned = clip_block(predict_all(model, r))
                candidates = conv_candidates + [("learned", k, learned[k]) for k in range(model.K)]
                decision = select_mode(candidates, target, metric, x, y, pool=model.kind)
                fam = report.usage[model.kind]
                fam.blocks += 1
                if decision.family == "learned":
                    fam.learned_blocks += 1
                    fam.histogram[decision.mode] += 1
                    fam.pool_sse += sse(learned[decision.mode], target)
                else:
                    fam.pool_sse += sse(conv[decision.mode], target)
                if keep_decisions:
                    report.decisions.append(decision)

    for model in models:
        report.tally.add(model.kind, report.blocks, model.K)

    logger.info("%s: %d blocks of %dx%d, conventional mean SSE %.2f", img.name, report.blocks,
                N, N, report.conventional_mean_sse)
    for kind, fam in sorted(report.usage.items()):
        logger.info("%s: %s modes chosen for %.1f%% of blocks (dominant %s)", img.name, kind,
                    fam.usage_pct, fam.dominant_modes)
    return report


def evaluate_images(images: Sequence[LumaImage], spec: BlockSpec, models: Sequence = (),
                    mode_set: Optional[ConventionalModeSet] = None, metric: str = "sse",
                    keep_decisions: bool = False) -> PredictionReport:
    """Merged report over several images."""
    if not images:
        raise ValueError("No images to evaluate")
    reports = [evaluate_image(img, spec, models, mode_set, metric, keep_decisions) for img in images]
    merged = reports[0]
    for rep in reports[1:]:
        merged = merged.merge(rep)
    return merged
