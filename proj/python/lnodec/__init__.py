from ._lnodec import *  # noqa: F401,F403
from ._lnodec import __version__  # noqa: F401
