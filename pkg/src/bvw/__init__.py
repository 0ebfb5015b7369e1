"""Exact BV-formalism workbench: graded polynomial algebra, antibracket and
BV Laplacian, BV/Koszul/Chevalley-Eilenberg cohomology, lattice scalar field
deformation quantization, and a model-file driven command line."""

from .algebra import (Algebra, AlgebraError, Generator, Poly, antifield_of, antighost,
                      define_algebra, field, ghost, grading, left_derivative, multiplier,
                      poly_str, rational_str, series_coefficient)
from .bv import (Differential, Model, ModelError, antibracket, build_algebra,
                 build_extended_action, bv_laplacian, check_cme, expand_by_ta, gauge_fix,
                 is_symmetry, koszul, make_model, s_squared_on_generators)
from .cohomology import CohomologyError, CohomologyReport, cohomology_dim, monomial_basis
from .lattice import Lattice, LatticeError, PropagatorMatrix, ScalarField, propagators
from .models import lie_gauge, toy_circles, ym_matrix
from .dsl import ModelSpec, ParseError, parse_model, print_model
from .cli import Report, emit, run

__version__ = "0.1.0"
