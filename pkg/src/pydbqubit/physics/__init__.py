# ruff: noqa: F403

from .decoherence import *
from .defines import *
from .dynamics import *
from .gates import *
from .hubbard import *
from .model import *
from .qubit import *
from .well1d import *
