"""Geometry from SU(2) triples of 2-forms.

A wedge-orthonormal triple Sigma determines a metric (Urbantke), a torsion
connection A with d_A Sigma = 0, and its curvature F, whose irreducible parts
carry the Weyl, Ricci and scalar curvature. The pipeline can be cross-checked
against an independent metric-based oracle.
"""
from .errors import (ChartViolation, DegenerateFrame, DegenerateVolume, FormatError, GridTooSmall,
                     NonInvertibleMetric, NonPeriodicDomain, NotARotation, NotOriented, SigmaForgeError,
                     SingularCoframe, StepRejected)
from .geometries import CATALOG, GeometryEntry, TrigCoframe, get_geometry
from .grid import ChartGrid, SampledField, fd_partials, read_sgf1, write_sgf1
from .pipeline import geometry_fields, oracle_fields, sigma_fields
from .su2_structure import (canonical_coframe, canonical_sigma, sigma_from_coframe, so3_rotate,
                            urbantke_metric, validate_structure)
from .tensor_core import EPS3, EPS4, Metric4

__version__ = "0.1.0"

__all__ = [
    "CATALOG", "EPS3", "EPS4", "ChartGrid", "ChartViolation", "DegenerateFrame", "DegenerateVolume",
    "FormatError", "GeometryEntry", "GridTooSmall", "Metric4", "NonInvertibleMetric", "NonPeriodicDomain",
    "NotARotation", "NotOriented", "SampledField", "SigmaForgeError", "SingularCoframe", "StepRejected",
    "TrigCoframe", "canonical_coframe", "canonical_sigma", "fd_partials", "geometry_fields", "get_geometry",
    "oracle_fields", "read_sgf1", "sigma_fields", "sigma_from_coframe", "so3_rotate", "urbantke_metric",
    "validate_structure", "write_sgf1",
]
