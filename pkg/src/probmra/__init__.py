"""Numerical checks for low-pass filters of multiresolution analyses.

A filter is represented by M(xi) = |m(2 pi xi)|^2 on the one-periodic line.
The package builds the partial-product probability measures attached to M,
tests their tightness, condition (C) and dyadic limits, and extends the
construction to expansive similarity dilations on Z^d.
"""

__version__ = "0.1.0"

from .errors import (BudgetError, DomainError, LatticeError, NotSimilarityError, QMFError,
                     SingularMatrixError, StructuralError)
from .filters import (FilterKind, PeriodicFilter, ReflectedFilter, ValidationOutcome, builtin,
                      evaluate, load_filter, reflect, sampled, validate_qmf)
from .dyadic import CylinderIndex, SignedDyadicCode, cylinder, decode, encode, msb_index
from .measures import (LimitMassEstimate, ProductMeasureTable, limit_mass, limit_masses,
                       p_table, q_mass, reflected_q_mass, tail_mass)
from .diagnostics import (ScanConfig, condition_c_scan, dyadic_limit_scan, orthonormality_check,
                          theorem1_verdict, tightness_scan)
from .lattice import (DigitSystem, LatticeExpansion, LatticeMatrix, TileSample, analyze_matrix,
                      build_digit_system, choose_power, expand, reconstruct, sample_tile,
                      tile_measure_estimate)
from .multidim import m_tilde, multidim_p_table, multidim_qmf_check, multidim_tightness
