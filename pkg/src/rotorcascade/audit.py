"""Records which rows each fitting step reads.

Fitting code calls :func:`record` with the keys of the rows it consumed; when
a :class:`FitAudit` is active the keys are collected per phase, otherwise the
call is a no-op. Tests use this to prove held-out rows never reach a fit.
"""
import contextvars
from collections import defaultdict

_active = contextvars.ContextVar("fit_audit", default=None)

PHASES = ("denoise", "selection", "standardize", "undersample", "train")


class FitAudit:
    def __init__(self):
        self.reads = defaultdict(set)
        self.calls = defaultdict(int)
        self._token = None

    def __enter__(self):
        self._token = _active.set(self)
        return self

    def __exit__(self, *exc):
        _active.reset(self._token)
        return False

    def touched(self, keys) -> dict:
        """Per phase, the subset of ``keys`` that was read."""
        keys = set(keys)
        return {phase: self.reads[phase] & keys for phase in PHASES}


def record(phase, keys):
    audit = _active.get()
    if audit is not None:
        audit.reads[phase].update(keys)
        audit.calls[phase] += 1


def count(name):
    audit = _active.get()
    if audit is not None:
        audit.calls[name] += 1
