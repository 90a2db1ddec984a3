__title__ = "vemeig"
__description__ = "Virtual element eigenvalue studies on polygonal meshes."
__url__ = ""
__version__ = "0.1.0"
__author__ = "vemeig developers"
__author_email__ = ""
__license__ = "MIT"

from . import helpers
from . import polygeom
from . import mesh_baseclasses
from . import mesh
from . import vem_dataclasses
from . import vem_local
from . import assembly
from . import eigensolve
from . import study
