"""Optimality Theory syllable languages, a seq2seq learner, and MAML."""

from ._otmeta import *  # noqa: F401,F403
from ._otmeta import __doc__  # noqa: F401
