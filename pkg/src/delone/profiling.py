"""Opt-in counters for the enumeration and backtracking kernels."""

from __future__ import annotations

import threading
from collections import Counter
from contextlib import contextmanager

_lock = threading.Lock()
_active: list[Counter] = []


def bump(key: str, amount: int = 1) -> None:
    if _active:
        with _lock:
            for counter in _active:
                counter[key] += amount


@contextmanager
def collect():
    """Collect kernel statistics for the duration of the block."""
    counter: Counter = Counter()
    with _lock:
        _active.append(counter)
    try:
        yield counter
    finally:
        with _lock:
            _active.remove(counter)
