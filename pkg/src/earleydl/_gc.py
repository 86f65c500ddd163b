"""Pausing the cyclic garbage collector around saturation loops."""

from __future__ import annotations

import gc
from contextlib import contextmanager


@contextmanager
def paused_gc():
    # Saturation allocates millions of acyclic tuples; generational passes over
    # them make run time grow faster than the data.
    was_enabled = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if was_enabled:
            gc.enable()
