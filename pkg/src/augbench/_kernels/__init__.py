"""Hot kernels: compiled Cython core with a numpy fallback.

The compiled module is used when it imports; setting ``AUGBENCH_PURE=1`` in
the environment forces the fallback. ``BACKEND`` names the active one.
"""

import os

from . import _fallback

if os.environ.get("AUGBENCH_PURE", "") not in ("", "0"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"

best_split_gini = _impl.best_split_gini
best_split_newton = _impl.best_split_newton
tsne_gradient = _impl.tsne_gradient

__all__ = ["BACKEND", "best_split_gini", "best_split_newton", "tsne_gradient"]
