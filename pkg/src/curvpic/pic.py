"""Particle ensemble management and the coupled field-solve/push loop.

The diocotron setup lives on the polar annulus: positions are sampled from
the density r * rho0(r, theta) (the Jacobian-weighted initial density),
velocities from a 2D unit Gaussian, and all particles carry equal weight
alpha = Q_total / N_p. Charge deposition uses the FEM nodal basis itself
(cloud-in-cell), which makes deposition the exact transpose of field
interpolation. The magnetic field in this loop is uniform, b = 1; the
magnetization enters only through the pusher's dt/eps^2 ratio.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.integrate import simpson

from . import kernels
from .fields import (
    PolarFemGrid,
    PotentialCoefficients,
    StiffnessMatrix,
    assemble_stiffness,
    solve_poisson,
)
from .geometry import CoordinateChart, OutOfDomainError
from .pushers import GAMMA, SchemeParams

TWO_PI = 2.0 * np.pi

__all__ = [
    "ParticleEnsemble",
    "DiocotronParams",
    "sample_diocotron",
    "deposit_charge",
    "deposit_nodes",
    "push_ensemble",
    "pic_step",
    "PicStepResult",
    "apply_boundary",
]


@dataclass
class ParticleEnsemble:
    """Positions y (curvilinear), velocities v (Cartesian components), weights."""

    y: np.ndarray       # (n, 2)
    v: np.ndarray       # (n, 2)
    alpha: np.ndarray   # (n,)
    active: np.ndarray  # (n,) bool

    @property
    def n_particles(self) -> int:
        return self.y.shape[0]

    @property
    def active_charge(self) -> float:
        return float(self.alpha[self.active].sum())

    @property
    def active_count(self) -> int:
        return int(self.active.sum())

    def copy(self) -> "ParticleEnsemble":
        return ParticleEnsemble(
            self.y.copy(), self.v.copy(), self.alpha.copy(), self.active.copy()
        )


@dataclass(frozen=True)
class DiocotronParams:
    """Annular density (1 + alpha*cos(l*theta)) * exp(-width*(r - center)^2)
    supported on [r_minus, r_plus]."""

    l: int = 5
    alpha_perturb: float = 0.2
    r_minus: float = 5.0
    r_plus: float = 8.0
    center: float = 6.5
    width: float = 4.0

    def __post_init__(self):
        if self.l < 1:
            raise ValueError("mode number l must be >= 1")
        if not (0 < self.r_minus < self.r_plus):
            raise ValueError("need 0 < r_minus < r_plus")
        if self.alpha_perturb < 0:
            raise ValueError("alpha_perturb must be nonnegative")

    def density(self, r, theta):
        """rho0(r, theta), zero outside [r_minus, r_plus]."""
        r = np.asarray(r, float)
        prof = (1.0 + self.alpha_perturb * np.cos(self.l * np.asarray(theta, float)))
        prof = prof * np.exp(-self.width * (r - self.center) ** 2)
        return np.where((r >= self.r_minus) & (r <= self.r_plus), prof, 0.0)

    def total_charge(self, panels: int = 512) -> float:
        """Q = int int r * rho0 dr dtheta by composite Simpson quadrature."""
        r = np.linspace(self.r_minus, self.r_plus, panels + 1)
        th = np.linspace(0.0, TWO_PI, panels + 1)
        rr, tt = np.meshgrid(r, th, indexing="ij")
        vals = rr * self.density(rr, tt)
        return float(simpson(simpson(vals, x=th, axis=1), x=r))


def sample_diocotron(
    params: DiocotronParams, n_particles: int, seed: int
) -> ParticleEnsemble:
    """Rejection-sample positions from r * rho0 with a constant envelope;
    velocities are standard normal in 2D; equal weights Q_total / N_p."""
    if n_particles < 1:
        raise ValueError("n_particles must be >= 1")
    rng = np.random.default_rng(seed)
    env = params.r_plus * (1.0 + params.alpha_perturb)
    r_out = np.empty(n_particles)
    th_out = np.empty(n_particles)
    filled = 0
    while filled < n_particles:
        m = max(2 * (n_particles - filled), 1024)
        r = rng.uniform(params.r_minus, params.r_plus, m)
        th = rng.uniform(0.0, TWO_PI, m)
        u = rng.uniform(0.0, env, m)
        keep = u < r * params.density(r, th)
        k = min(int(keep.sum()), n_particles - filled)
        r_out[filled:filled + k] = r[keep][:k]
        th_out[filled:filled + k] = th[keep][:k]
        filled += k
    v = rng.standard_normal((n_particles, 2))
    alpha = np.full(n_particles, params.total_charge() / n_particles)
    y = np.column_stack([r_out, th_out])
    return ParticleEnsemble(y, v, alpha, np.ones(n_particles, bool))


def deposit_nodes(ensemble: ParticleEnsemble, grid: PolarFemGrid) -> np.ndarray:
    """CIC deposition of active-particle charge onto ALL grid nodes."""
    act = ensemble.active
    r = np.ascontiguousarray(ensemble.y[act, 0])
    th = np.ascontiguousarray(ensemble.y[act, 1])
    w = np.ascontiguousarray(ensemble.alpha[act])
    if np.any(r < grid.r0 - 1e-12) or np.any(r > grid.r_max + 1e-12):
        raise OutOfDomainError("active particle outside the radial domain")
    return kernels.deposit_cic(
        r, th, w, grid.r0, grid.dr, grid.dtheta, grid.n_r, grid.n_theta
    )


def deposit_charge(ensemble: ParticleEnsemble, grid: PolarFemGrid) -> np.ndarray:
    """FEM load vector rhs_j = sum_s alpha_s W_j(Y_s) over the free DOFs."""
    return deposit_nodes(ensemble, grid)[1:-1, :].ravel()


def _polar_apply_n(r, theta, e1, e2):
    """N(y) @ E for the polar chart, N = [[c, -s/r], [s, c/r]]."""
    c, s = np.cos(theta), np.sin(theta)
    return c * e1 - s / r * e2, s * e1 + c / r * e2


def _polar_apply_nt(r, theta, w1, w2):
    """N(y)^T @ w for the polar chart."""
    c, s = np.cos(theta), np.sin(theta)
    return c * w1 + s * w2, (-s * w1 + c * w2) / r


def _gather_e(grid, node_vals, r, theta):
    gr, gth = kernels.gather_gradient(
        node_vals, np.ascontiguousarray(r), np.ascontiguousarray(theta),
        grid.r0, grid.dr, grid.dtheta, grid.n_r, grid.n_theta,
    )
    return -gr, -gth


def _rot_inv(beta, w1, w2):
    """(I + beta*K) w / (1 + beta^2), vectorized over particles."""
    d = 1.0 + beta * beta
    return (w1 + beta * w2) / d, (w2 - beta * w1) / d


def push_ensemble(
    ensemble: ParticleEnsemble,
    coeffs: PotentialCoefficients,
    grid: PolarFemGrid,
    params: SchemeParams,
    scheme: str = "apsi1",
) -> ParticleEnsemble:
    """Advance all active particles one step against the frozen field snapshot.

    Polar chart, uniform b = 1. Fields are evaluated at the pre-step
    positions (and, for the two-stage scheme, at the midpoint stage).
    """
    out = ensemble.copy()
    act = ensemble.active
    if not np.any(act):
        return out
    node_vals = grid.node_values(coeffs.values)
    r = ensemble.y[act, 0]
    th = ensemble.y[act, 1]
    v1 = ensemble.v[act, 0]
    v2 = ensemble.v[act, 1]
    tau, lam = params.tau, params.lam

    e1, e2 = _gather_e(grid, node_vals, r, th)
    ne1, ne2 = _polar_apply_n(r, th, e1, e2)

    if scheme == "apsi1":
        w1 = v1 + tau * ne1
        w2 = v2 + tau * ne2
        vn1, vn2 = _rot_inv(lam, w1, w2)
        s1, s2 = _polar_apply_nt(r, th, vn1, vn2)
        rn = r + tau * s1
        thn = th + tau * s2
    elif scheme == "apsi2":
        g = GAMMA
        a1, a2 = _rot_inv(g * lam, v1 + g * tau * ne1, v2 + g * tau * ne2)
        s1, s2 = _polar_apply_nt(r, th, a1, a2)
        r2 = r + (tau / (2.0 * g)) * s1
        th2 = th + (tau / (2.0 * g)) * s2
        if np.any(r2 <= grid.r0) or np.any(r2 >= grid.r_max):
            # freeze field coefficients but clamp the stage radius to the wall
            r2 = np.clip(r2, grid.r0, grid.r_max)
        e1m, e2m = _gather_e(grid, node_vals, r2, th2)
        nem1, nem2 = _polar_apply_n(r2, th2, e1m, e2m)
        # tau*F1 = tau*N(y)E(y) + lam*K v1  (b = 1)
        tf1_1 = tau * ne1 + lam * a2
        tf1_2 = tau * ne2 - lam * a1
        vn1, vn2 = _rot_inv(
            g * lam,
            v1 + (1.0 - g) * tf1_1 + g * tau * nem1,
            v2 + (1.0 - g) * tf1_2 + g * tau * nem2,
        )
        t1, t2 = _polar_apply_nt(r2, th2, vn1, vn2)
        rn = r + (1.0 - g) * tau * s1 + g * tau * t1
        thn = th + (1.0 - g) * tau * s2 + g * tau * t2
    else:
        raise ValueError(f"unknown scheme {scheme!r}")

    out.y[act, 0] = rn
    out.y[act, 1] = thn
    out.v[act, 0] = vn1
    out.v[act, 1] = vn2
    return out


def apply_boundary(
    ensemble: ParticleEnsemble, grid: PolarFemGrid, policy: str = "deactivate"
) -> ParticleEnsemble:
    """Wrap theta mod 2pi; handle radial wall crossings by policy.

    deactivate (default): flag escapers inactive, frozen at exit state.
    reflect: mirror r about the wall and flip the radial velocity component.
    """
    out = ensemble.copy()
    out.y[:, 1] = np.mod(out.y[:, 1], TWO_PI)
    r = out.y[:, 0]
    escaped = out.active & ((r <= grid.r0) | (r >= grid.r_max))
    if not np.any(escaped):
        return out
    if policy == "deactivate":
        out.active[escaped] = False
    elif policy == "reflect":
        lo = escaped & (r <= grid.r0)
        hi = escaped & (r >= grid.r_max)
        out.y[lo, 0] = 2.0 * grid.r0 - out.y[lo, 0]
        out.y[hi, 0] = 2.0 * grid.r_max - out.y[hi, 0]
        th = out.y[escaped, 1]
        c, s = np.cos(th), np.sin(th)
        vr = c * out.v[escaped, 0] + s * out.v[escaped, 1]
        out.v[escaped, 0] -= 2.0 * vr * c
        out.v[escaped, 1] -= 2.0 * vr * s
    else:
        raise ValueError(f"unknown boundary policy {policy!r}")
    return out


@lru_cache(maxsize=8)
def _cached_stiffness(grid: PolarFemGrid) -> StiffnessMatrix:
    return assemble_stiffness(grid)


@dataclass(frozen=True)
class PicStepResult:
    ensemble: ParticleEnsemble
    coeffs: PotentialCoefficients
    rhs: np.ndarray


def pic_step(
    ensemble: ParticleEnsemble,
    grid: PolarFemGrid,
    chart: CoordinateChart,
    params: SchemeParams,
    scheme: str = "apsi1",
    policy: str = "deactivate",
    stiffness: StiffnessMatrix | None = None,
) -> PicStepResult:
    """One coupled step: deposit -> Poisson solve -> push -> boundary policy."""
    if chart.name != "polar":
        raise ValueError("the self-consistent loop runs on the polar chart")
    if stiffness is None:
        stiffness = _cached_stiffness(grid)
    rhs = deposit_charge(ensemble, grid)
    coeffs = solve_poisson(stiffness, rhs)
    pushed = push_ensemble(ensemble, coeffs, grid, params, scheme)
    bounded = apply_boundary(pushed, grid, policy)
    return PicStepResult(bounded, coeffs, rhs)
