"""Artifact writers. Every file is written to a temporary sibling and renamed
into place, so an interrupted command never leaves a partial output. Writers
given an `OutputBatch` defer the rename until the whole batch succeeds."""

import csv
import json
import logging
import os
import tempfile
from contextlib import contextmanager
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from persistence.serializers import sanitize
from prediction.heatmap import HeatmapGrid
from prediction.types import REF_LINES
from training.images import save_pgm

logger = logging.getLogger(__name__)


class OutputBatch:
    """Outputs of one command, moved into place together.

    Used as a context manager: leaving the block normally renames every
    staged file over its destination, an exception deletes them all.
    """

    def __init__(self):
        self._staged: List[Tuple[str, str]] = []

    def stage(self, tmp: str, path: str):
        self._staged.append((tmp, path))

    def commit(self):
        staged, self._staged = self._staged, []
        for i, (tmp, path) in enumerate(staged):
            try:
                os.replace(tmp, path)
            except BaseException:
                self._staged = staged[i:]
                self.discard()
                raise
            logger.debug("Wrote %s", path)

    def discard(self):
        for tmp, _ in self._staged:
            if os.path.exists(tmp):
                os.unlink(tmp)
        self._staged = []

    def __enter__(self) -> "OutputBatch":
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            self.commit()
        else:
            self.discard()
        return False


@contextmanager
def atomic_write(path: str, binary: bool = False, batch: Optional[OutputBatch] = None):
    """Open a temp file next to `path`; on success rename it over `path`,
    or hand it to `batch` for a joint rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix='.' + os.path.basename(path) + '.', suffix='.tmp', dir=directory)
    try:
        mode = 'wb' if binary else 'w'
        kwargs = {} if binary else {'encoding': 'utf-8', 'newline': ''}
        with os.fdopen(fd, mode, **kwargs) as f:
            yield f
        if batch is not None:
            batch.stage(tmp, path)
            return
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    logger.debug("Wrote %s", path)


def write_json(path: str, obj, batch: Optional[OutputBatch] = None):
    with atomic_write(path, batch=batch) as f:
        json.dump(sanitize(obj), f, indent=2, sort_keys=True)
        f.write('\n')


def write_csv(path: str, rows: Sequence[dict], fieldnames: List[str], batch: Optional[OutputBatch] = None):
    with atomic_write(path, batch=batch) as f:
        writer = csv.DictWriter(f, fieldnames=fieldnames, lineterminator='\n')
        writer.writeheader()
        for row in rows:
            writer.writerow(sanitize(row))


def write_report_json(path: str, report, include_decisions: bool = False,
                      batch: Optional[OutputBatch] = None):
    write_json(path, report.to_dict(include_decisions=include_decisions), batch=batch)


REPORT_COLUMNS = ['N', 'pool', 'K', 'blocks', 'learned_blocks', 'usage_pct',
                  'sse', 'mean_sse', 'multiplications', 'dominant_modes']


def write_report_csv(path: str, report, batch: Optional[OutputBatch] = None):
    write_csv(path, report.csv_rows(), REPORT_COLUMNS, batch=batch)


def write_loss_csv(path: str, trace: Iterable[tuple], batch: Optional[OutputBatch] = None):
    """Loss trace rows (step, epoch, loss, lr)."""
    rows = [{'step': s, 'epoch': e, 'loss': repr(float(l)), 'lr': lr} for s, e, l, lr in trace]
    write_csv(path, rows, ['step', 'epoch', 'loss', 'lr'], batch=batch)


def write_heatmap_pgm(path: str, canvas: np.ndarray, batch: Optional[OutputBatch] = None):
    with atomic_write(path, binary=True, batch=batch) as f:
        save_pgm(canvas, f)


def heatmap_table(grid: HeatmapGrid) -> List[List[str]]:
    """(4+N) x (4+N) cells: coefficients at reference positions, blank over the block."""
    L, N = REF_LINES, grid.spec.N
    cells = [[''] * (L + N) for _ in range(L + N)]
    for r in range(L):
        for c in range(L):
            cells[r][c] = repr(float(grid.corner[r, c]))
        for c in range(N):
            cells[r][L + c] = repr(float(grid.top[r, c]))
    for r in range(N):
        for c in range(L):
            cells[L + r][c] = repr(float(grid.left[r, c]))
    return cells


def write_heatmap_csv(path: str, grid: HeatmapGrid, batch: Optional[OutputBatch] = None):
    with atomic_write(path, batch=batch) as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerows(heatmap_table(grid))


def read_heatmap_csv(path: str) -> np.ndarray:
    """Grid of floats with NaN where the block area was left blank."""
    with open(path, newline='', encoding='utf-8') as f:
        rows = list(csv.reader(f))
    return np.array([[float(c) if c else np.nan for c in row] for row in rows])
