from ._topic import *  # noqa: F401,F403
from ._topic import __doc__  # noqa: F401
