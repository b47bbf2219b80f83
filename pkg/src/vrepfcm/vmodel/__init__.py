"""Volumetric models from trivariate spline cells and their point-membership engines."""

from .inverse import InverseEngine, InversionCache, point_inclusion_inverse
from .model import Leaf, Op, SingularCellError, VCell, VModel, csg_from_dict, csg_leaves, csg_to_dict, evaluate_csg, model_of
from .oracle import RayEngine, membership_oracle
from .primitives import make_box, make_cylinder, make_extrusion, make_revolution, make_ruled, make_sphere, union_model
from .raycast import KdTree, point_inclusion_ray
from .tessellation import NotWatertightError, TriBoundary, tessellate, tessellate_cells, tessellate_leaves
