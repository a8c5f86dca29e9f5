"""Nodal DG solver for the Galerkin-Boltzmann (BGK) equations in 2D.

Unstructured triangles, unsplit multiaxial PML, semi-analytic single-rate
and multirate time integrators, and a validation harness (Couette shear
flow, isothermal vortex, square-cylinder forces).
"""

__version__ = "0.1.0"

from .reference_element import ReferenceElement, build_reference_element
from .mesh import MeshGeometry, connect_mesh, trace_pairing
from .bgk import FlowParameters, PhaseField
from .pml import PmlConfig, PmlZone, damping_profiles, flag_pml_elements

__all__ = [
    "ReferenceElement", "build_reference_element",
    "MeshGeometry", "connect_mesh", "trace_pairing",
    "FlowParameters", "PhaseField",
    "PmlConfig", "PmlZone", "damping_profiles", "flag_pml_elements",
    "__version__",
]
