"""CoLog: point and collective log anomaly detection with collaborative transformers."""

try:
    from ._colog import *  # noqa: F401,F403  (installed layout: colog/_colog.so)
    from . import _colog as _impl  # noqa: F401
except ImportError:  # in-tree builds put _colog.so on sys.path directly
    from _colog import *  # noqa: F401,F403
    import _colog as _impl  # noqa: F401

__version__ = "0.1.0"
