"""Kernel backend selection.

The compiled extension (ibdiar._native, built from _native.pyx) is used
when importable; otherwise the pure-numpy fallback takes over. Set
IBDIAR_PURE=1 to force the fallback, e.g. for benchmarking.
"""

from __future__ import annotations

import os

from . import _fallback

if os.environ.get("IBDIAR_PURE", "") in ("1", "true", "yes"):
    _impl = _fallback
else:
    try:
        from . import _native as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _fallback

BACKEND_NAME: str = _impl.BACKEND_NAME
merge_cost_row = _impl.merge_cost_row
viterbi_min_duration = _impl.viterbi_min_duration
entropy_rows = _fallback.entropy_rows
