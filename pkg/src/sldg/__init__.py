"""hp-adaptive symmetric interior penalty DG solver for strain-limiting anti-plane shear."""
from .assembly import BoundaryData, DgParams, assemble
from .constitutive import ModelParams
from .dgspace import DgSpace, Solution, make_space, project
from .experiments import RunConfig, run
from .mesh import Mesh, build_uniform, refine
from .solve import picard

__all__ = ["BoundaryData", "DgParams", "DgSpace", "Mesh", "ModelParams", "RunConfig",
           "Solution", "assemble", "build_uniform", "make_space", "picard", "project",
           "refine", "run"]
__version__ = "0.1.0"
