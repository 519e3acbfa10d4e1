"""Standing-wave stability analyzer for the 3d radial NLS."""

import os
import sys

try:
    from nlstab._core import (  # type: ignore
        ConfigError,
        NumericalError,
        fgr,
        profile,
        resonance_set,
        run,
        schema_version,
        verdict,
    )
except ImportError:  # pragma: no cover - dev-tree fallback
    _pydir = os.environ.get("NLSTAB_PYDIR")
    if _pydir and _pydir not in sys.path:
        sys.path.insert(0, _pydir)
    from _core import (  # type: ignore
        ConfigError,
        NumericalError,
        fgr,
        profile,
        resonance_set,
        run,
        schema_version,
        verdict,
    )

__all__ = [
    "ConfigError",
    "NumericalError",
    "fgr",
    "profile",
    "resonance_set",
    "run",
    "schema_version",
    "verdict",
]
