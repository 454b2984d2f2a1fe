"""Multiplication counting for forward passes.

Forward passes route their weight products through `matvec`, which records
rows x cols multiplications on the active counter. Bias additions and
activations are never counted.
"""

import threading
from contextlib import contextmanager

import numpy as np

state = threading.local()
state.counter = None


class MultiplicationCounter:
    def __init__(self):
        self.ops = []                       # (label, multiplications)

    def record(self, label: str, count: int):
        self.ops.append((label, int(count)))

    @property
    def total(self) -> int:
        return sum(c for _, c in self.ops)


@contextmanager
def count_multiplications(enable: bool = True):
    """Activate a fresh counter for the current thread."""
    old = getattr(state, 'counter', None)
    state.counter = MultiplicationCounter() if enable else None
    try:
        yield state.counter
    finally:
        state.counter = old


def matvec(W: np.ndarray, x: np.ndarray, label: str = "") -> np.ndarray:
    counter = getattr(state, 'counter', None)
    if counter is not None:
        counter.record(label, W.shape[0] * W.shape[1])
    return W @ x
