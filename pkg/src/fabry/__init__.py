"""Fabry-Perot resonances of finite 1D high-contrast resonator chains.

The package is organised bottom-up:

* :mod:`fabry.chain` -- geometry, structural vector, resonant index sets;
* :mod:`fabry.capacitance` -- the frequency-dependent capacitance matrix and
  its block spectra;
* :mod:`fabry.transfer` -- transfer-matrix products and their polynomial
  expansion in the contrast;
* :mod:`fabry.asymptotics` -- closed-form expansion coefficients;
* :mod:`fabry.solver` -- Newton refinement and contour counting of resonances;
* :mod:`fabry.eigenmode` -- eigenmode reconstruction by exact propagation;
* :mod:`fabry.cli` -- command-line entry point.
"""

from fabry.chain import (
    Block,
    BlockPartition,
    MaterialParams,
    ResonatorChain,
    StructuralVector,
    Wavenumber,
    build_structural_vector,
    enumerate_E,
    load_config,
    resonant_index_set,
    t_of_k,
)
from fabry.capacitance import (
    block_spectrum,
    build_capacitance,
    char_poly,
    global_char_poly,
)
from fabry.asymptotics import expansion_coefficients, newton_boundary
from fabry.solver import contour_count, delta_sweep, find_resonances, newton_refine

__all__ = [
    "Block",
    "BlockPartition",
    "MaterialParams",
    "ResonatorChain",
    "StructuralVector",
    "Wavenumber",
    "block_spectrum",
    "build_capacitance",
    "build_structural_vector",
    "char_poly",
    "contour_count",
    "delta_sweep",
    "enumerate_E",
    "expansion_coefficients",
    "find_resonances",
    "global_char_poly",
    "load_config",
    "newton_boundary",
    "newton_refine",
    "resonant_index_set",
    "t_of_k",
]

__version__ = "0.1.0"
