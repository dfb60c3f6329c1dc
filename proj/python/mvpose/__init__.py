from ._mvpose import *  # noqa: F401,F403
