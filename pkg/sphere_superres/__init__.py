__version__ = '0.1.0'

from .exceptions import *
from .sphere_core import *
from .harmonics import *
from .operators import *
from .signal_gen import *
from .solver import *
from .experiments import *
