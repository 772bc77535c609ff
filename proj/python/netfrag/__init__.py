"""Network fragility indicators from macroscopic fundamental diagrams."""

from ._netfrag import *  # noqa: F401,F403
from ._netfrag import __version__  # noqa: F401
