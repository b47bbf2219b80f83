"""Finite cell method on a Cartesian grid with integrated-Legendre bases."""

from .analysis import (
    LinearSystem,
    SolutionField,
    assemble_elasticity,
    assemble_heat,
    discretize,
    solve,
    thermo_elastic,
    von_mises,
)
from .boundary import (
    HeatDirichlet,
    HeatFlux,
    Neumann,
    PenaltyDirichlet,
    SurfacePoints,
    TriangleSet,
    support_points,
    surface_points,
)
from .materials import (
    CellChannels,
    Graded,
    Homogeneous,
    MaterialModel,
    Piecewise,
    TableMaterial,
    as_material,
    isotropic_stiffness,
)
from .export import export_fields, read_vtk, sample_fields, write_vtk
from .mesh import FiniteCellMesh
from .quadrature import CUT, INSIDE, OUTSIDE, Indicator, QuadratureSet, classify_cells, integrate_mesh
from .solver import Factorization, NumericalError
