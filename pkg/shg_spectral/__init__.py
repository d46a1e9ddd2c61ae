import importlib
from pathlib import Path


# Get the project root directory
_PROJECT_ROOT = Path(__file__).resolve().parent.parent
CONFIG_DIR = _PROJECT_ROOT.joinpath("config")

# Limits the import to the following classes and functions
__all__ = ['main', 'PeriodicPotential', 'make_potential', 'random_potential', 'vacuum', 'monodromy', 'monodromy_batch',
           'find_divisor', 'find_branch_points', 'reconstruct_monodromy', 'finite_type_project', 'make_curve',
           'RunConfig', 'load_run_config', 'SpectralDivisor', 'BranchPointSet', 'Matrix2C', 'load_config_file']

from typing import TYPE_CHECKING
if TYPE_CHECKING:
    # these lines are invisible at runtime, but IDEs index them
    from .cli              import main
    from .potential        import PeriodicPotential, make_potential, random_potential, vacuum
    from .monodromy        import monodromy, monodromy_batch
    from .spectral.divisor import find_divisor, find_branch_points
    from .reconstruct      import reconstruct_monodromy
    from .finitetype       import finite_type_project
    from .jacobi.curve     import make_curve
    from .run_config       import RunConfig, load_run_config
    from .utils.utility_classes import SpectralDivisor, BranchPointSet, Matrix2C
    from .utils.json_utils import load_config_file

_LAZY_IMPORTS = {
    'main': '.cli',
    'PeriodicPotential': '.potential',
    'make_potential': '.potential',
    'random_potential': '.potential',
    'vacuum': '.potential',
    'monodromy': '.monodromy',
    'monodromy_batch': '.monodromy',
    'find_divisor': '.spectral.divisor',
    'find_branch_points': '.spectral.divisor',
    'reconstruct_monodromy': '.reconstruct',
    'finite_type_project': '.finitetype',
    'make_curve': '.jacobi.curve',
    'RunConfig': '.run_config',
    'load_run_config': '.run_config',
    'SpectralDivisor': '.utils.utility_classes',
    'BranchPointSet': '.utils.utility_classes',
    'Matrix2C': '.utils.utility_classes',
    'load_config_file': '.utils.json_utils',
}

# lazy importing of the modules
def __getattr__(name: str) -> object:
    """Lazy import of the module."""
    if name in _LAZY_IMPORTS:
        return getattr(importlib.import_module(_LAZY_IMPORTS[name], __name__), name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")

def __dir__() -> list[str]:
    """Override the default __dir__ to include the lazy loaded modules."""
    return sorted(set(__all__) | set(globals()))
