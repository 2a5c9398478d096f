"""Semantic exception hierarchy shared across hevlab modules.

Every error the library raises deliberately derives from HevlabError so
callers (including the command line front end) can map failure classes to
exit codes without string matching.
"""

from __future__ import annotations


class HevlabError(Exception):
    """Base class for all hevlab errors."""


class DomainError(HevlabError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class RegimeError(HevlabError, ValueError):
    """A tail-index / moment-order combination has no finite answer.

    Raised e.g. when a stability constant is requested for p*gamma >= 1,
    or when a bridge inequality is asked for outside its covered regimes.
    """


class AdmissibilityError(HevlabError, ValueError):
    """A tilt problem's normalizing integral diverges for the baseline."""


class BracketError(HevlabError, RuntimeError):
    """Safeguarded root bracketing failed to enclose a sign change."""


class NumericalError(HevlabError, RuntimeError):
    """A numerical routine failed to converge or lost all precision."""


class ConfigError(HevlabError, ValueError):
    """A scenario file is malformed, incomplete, or references unknown names."""
