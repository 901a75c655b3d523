"""Particle-in-Cell engine for the magnetized Vlasov-Poisson system in
orthogonal curvilinear coordinates, with asymptotic-preserving
semi-implicit pushers and a finite-element Poisson solver on the polar
annulus."""

from .geometry import (
    CoordinateChart,
    OutOfDomainError,
    SingularJacobianError,
    chart_cylindrical,
    chart_identity,
    chart_polar,
)
from .pushers import GAMMA, ParticleState, SchemeParams

__version__ = "0.1.0"

__all__ = [
    "CoordinateChart",
    "OutOfDomainError",
    "SingularJacobianError",
    "chart_cylindrical",
    "chart_identity",
    "chart_polar",
    "GAMMA",
    "ParticleState",
    "SchemeParams",
    "__version__",
]
