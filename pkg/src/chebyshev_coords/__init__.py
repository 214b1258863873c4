"""Chebyshev coordinate nets on cone-metric disks."""

from .chart import PlanarChart, flatten_net, lipschitz_estimate, straighten
from .cross import CrossFigure, HalfPlane, LineVector, find_cross, phi_map
from .distance import distance, distances
from .errors import ChebError
from .geodesic import chord_arc_check, trace_geodesic, trace_line
from .net import (SectorNet, audit_all_patches, build_nets, hazzidakis_audit, net_report,
                  propagate_net, validate_branched_net)
from .surface import ConeSurface, SurfacePoint, TangentVector, load_surface, save_surface

__all__ = [
    "ChebError", "ConeSurface", "CrossFigure", "HalfPlane", "LineVector", "PlanarChart",
    "SectorNet", "SurfacePoint", "TangentVector", "audit_all_patches", "build_nets",
    "chord_arc_check", "distance", "distances", "find_cross", "flatten_net", "hazzidakis_audit",
    "lipschitz_estimate", "load_surface", "net_report", "phi_map", "propagate_net",
    "save_surface", "straighten", "trace_geodesic", "trace_line", "validate_branched_net",
]
