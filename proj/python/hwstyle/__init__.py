"""Handwriting style autoencoder bindings."""

try:
    from . import _hwstyle as _core
except ImportError:  # in-tree build: the extension sits on PYTHONPATH
    import _hwstyle as _core

from_core = [name for name in dir(_core) if not name.startswith("_")]
globals().update({name: getattr(_core, name) for name in from_core})
__version__ = _core.__version__
__all__ = from_core + ["__version__"]
del from_core
