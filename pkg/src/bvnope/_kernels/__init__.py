"""Hot-loop kernels with a compiled core and a pure-numpy fallback.

The compiled extension is selected at import when available; set
``BVNOPE_PURE_PYTHON=1`` to force the fallback. Both backends consume
caller-supplied uniform draws and produce bit-identical outputs, so the
choice of backend never changes simulation results.
"""
import os

from . import pure

if os.environ.get("BVNOPE_PURE_PYTHON"):
    _impl = pure
    BACKEND = "pure"
else:
    try:
        from . import _fast as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = pure
        BACKEND = "pure"

apply_pin_rules_batch = _impl.apply_pin_rules_batch
bernoulli_clicks_batch = _impl.bernoulli_clicks_batch
display_counts = _impl.display_counts


def available_backends() -> dict:
    """Name -> module for every importable backend (used by benchmarks/tests)."""
    backends = {"pure": pure}
    try:
        from . import _fast  # type: ignore[attr-defined]

        backends["cython"] = _fast
    except ImportError:
        pass
    return backends
