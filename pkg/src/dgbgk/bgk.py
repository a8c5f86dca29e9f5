"""Galerkin-Boltzmann model: coefficient matrices, collision, moments,
flux eigenstructure, and boundary ghost states.

State vector q holds the six Hermite coefficients; all per-node operations
broadcast over leading axes of arrays shaped (..., 6).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class FlowParameters:
    """Nondimensional flow setup; c, RT, nu, tau follow from Ma and Re."""

    ma: float
    re: float
    uref: float = 1.0
    lref: float = 1.0

    def __post_init__(self):
        if self.ma <= 0 or self.re <= 0 or self.uref <= 0 or self.lref <= 0:
            raise ConfigError("Ma, Re, Uref, Lref must all be positive")

    @property
    def c(self):
        return self.uref / self.ma

    @property
    def rt(self):
        return self.c ** 2

    @property
    def nu(self):
        return self.uref * self.lref / self.re

    @property
    def tau(self):
        return self.nu / self.rt


@dataclass
class PhaseField:
    """Nodal Hermite coefficients plus PML memory fields.

    q is (K, Np, 6); qx/qy share the layout but exist only on the PML
    elements listed in pml_elems (in that order).
    """

    q: np.ndarray
    qx: np.ndarray = None
    qy: np.ndarray = None
    pml_elems: np.ndarray = field(default=None)

    def copy(self):
        return PhaseField(
            self.q.copy(),
            None if self.qx is None else self.qx.copy(),
            None if self.qy is None else self.qy.copy(),
            self.pml_elems,
        )


def flux_matrices(params):
    """Directional coefficient matrices A_x, A_y (both symmetric)."""
    c = params.c
    ax = -c * np.array([
        [0, 1, 0, 0, 0, 0],
        [1, 0, 0, 0, SQRT2, 0],
        [0, 0, 0, 1, 0, 0],
        [0, 0, 1, 0, 0, 0],
        [0, SQRT2, 0, 0, 0, 0],
        [0, 0, 0, 0, 0, 0],
    ], dtype=float)
    ay = -c * np.array([
        [0, 0, 1, 0, 0, 0],
        [0, 0, 0, 1, 0, 0],
        [1, 0, 0, 0, 0, SQRT2],
        [0, 1, 0, 0, 0, 0],
        [0, 0, 0, 0, 0, 0],
        [0, 0, SQRT2, 0, 0, 0],
    ], dtype=float)
    return ax, ay


def collision(q, tau):
    """BGK relaxation source; components 1-3 are identically zero."""
    q = np.asarray(q, dtype=float)
    q1 = q[..., 0]
    if np.any(q1 == 0.0):
        raise ValueError("collision undefined at zero density")
    out = np.zeros_like(q)
    if not np.isfinite(tau):
        return out
    inv = 1.0 / tau
    out[..., 3] = -inv * (q[..., 3] - q[..., 1] * q[..., 2] / q1)
    out[..., 4] = -inv * (q[..., 4] - q[..., 1] ** 2 / (SQRT2 * q1))
    out[..., 5] = -inv * (q[..., 5] - q[..., 2] ** 2 / (SQRT2 * q1))
    return out


def collision_gpart(q, tau):
    """State-coupling part of the collision: collision(q) + Lambda q.

    Depends only on q1..q3, which is what makes the semi-analytic and
    node-wise implicit updates cheap.
    """
    q = np.asarray(q, dtype=float)
    out = np.zeros_like(q)
    if not np.isfinite(tau):
        return out
    q1 = q[..., 0]
    inv = 1.0 / tau
    out[..., 3] = inv * q[..., 1] * q[..., 2] / q1
    out[..., 4] = inv * q[..., 1] ** 2 / (SQRT2 * q1)
    out[..., 5] = inv * q[..., 2] ** 2 / (SQRT2 * q1)
    return out


def stiff_split(q, tau):
    """Return (lambda_diag, ntilde) with collision(q) = -lambda*q + ntilde."""
    lam = np.zeros(6)
    if np.isfinite(tau):
        lam[3:] = 1.0 / tau
    return lam, collision_gpart(q, tau)


def equilibrium_state(rho, u, v, params):
    """Hermite coefficients of the local equilibrium (collision fixed point)."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise ValueError("equilibrium_state needs rho > 0")
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    c = params.c
    out = np.zeros(np.broadcast(rho, u, v).shape + (6,))
    out[..., 0] = rho
    out[..., 1] = rho * u / c
    out[..., 2] = rho * v / c
    out[..., 3] = rho * u * v / c ** 2
    out[..., 4] = rho * u ** 2 / (SQRT2 * c ** 2)
    out[..., 5] = rho * v ** 2 / (SQRT2 * c ** 2)
    return out


def macroscopic(q, params):
    """Recover (rho, u, v, p, sigma11, sigma22, sigma12) from coefficients."""
    q = np.asarray(q, dtype=float)
    q1 = q[..., 0]
    if np.any(q1 <= 0):
        raise ValueError("macroscopic recovery needs positive density")
    c = params.c
    rt = params.rt
    rho = q1
    u = c * q[..., 1] / q1
    v = c * q[..., 2] / q1
    p = rho * rt
    s11 = -rt * (SQRT2 * q[..., 4] - q[..., 1] ** 2 / q1)
    s22 = -rt * (SQRT2 * q[..., 5] - q[..., 2] ** 2 / q1)
    s12 = -rt * (q[..., 3] - q[..., 1] * q[..., 2] / q1)
    return rho, u, v, p, s11, s22, s12


def upwind_split(normal, params):
    """Characteristic split F = Fplus + Fminus of F = nx*Ax + ny*Ay.

    Fminus feeds the upwind penalty F(q*-q-) = Fminus (q+ - q-).
    """
    nx, ny = normal
    if abs(nx * nx + ny * ny - 1.0) > 1e-12:
        raise ValueError("normal must have unit length")
    ax, ay = flux_matrices(params)
    f = nx * ax + ny * ay
    lam, r = np.linalg.eigh(f)
    fplus = (r * np.maximum(lam, 0.0)) @ r.T
    fminus = (r * np.minimum(lam, 0.0)) @ r.T
    return fplus, fminus


def trace_selector(normal, params, eig_tol=1e-9):
    """Matrix D with q* = q- + D (q+ - q-).

    Characteristics entering the element (negative eigenvalues) take the
    neighbor value, outgoing ones keep the local value, and the null space
    is averaged; F annihilates the null space so F(q*-q-) stays upwind.
    """
    nx, ny = normal
    ax, ay = flux_matrices(params)
    f = nx * ax + ny * ay
    lam, r = np.linalg.eigh(f)
    scale = params.c * math.sqrt(3.0)
    d = np.where(lam < -eig_tol * scale, 1.0,
                 np.where(lam > eig_tol * scale, 0.0, 0.5))
    return (r * d) @ r.T


class FaceFluxCache:
    """Per-face split-flux operators, built once per mesh.

    Straight-sided triangles have one normal per face, so the cache is
    keyed on rounded normals and shared across faces.
    """

    def __init__(self, mesh, params):
        self.params = params
        key_of = {}
        fminus = np.zeros((mesh.K, 3, 6, 6))
        dsel = np.zeros((mesh.K, 3, 6, 6))
        for e in range(mesh.K):
            for f in range(3):
                n = mesh.normals[e, f]
                key = (round(n[0], 14), round(n[1], 14))
                if key not in key_of:
                    _, fm = upwind_split(n, params)
                    key_of[key] = (fm, trace_selector(n, params))
                fm, ds = key_of[key]
                fminus[e, f] = fm
                dsel[e, f] = ds
        self.fminus = fminus
        self.dsel = dsel


# ---------------------------------------------------------------------------
# Boundary ghost states


WALL = "wall"
FARFIELD = "farfield"
PML_OUTER = "pml_outer"


@dataclass(frozen=True)
class BoundarySpec:
    kind: str
    velocity: tuple = (0.0, 0.0)   # wall velocity
    state: tuple = (1.0, 0.0, 0.0)  # far-field (rho, u, v)


def boundary_state(q_minus, spec, params):
    """Ghost state q+ for a boundary face."""
    q_minus = np.asarray(q_minus, dtype=float)
    if spec.kind == WALL:
        c = params.c
        uw, vw = spec.velocity
        out = q_minus.copy()
        out[..., 1] = 2.0 * q_minus[..., 0] * uw / c - q_minus[..., 1]
        out[..., 2] = 2.0 * q_minus[..., 0] * vw / c - q_minus[..., 2]
        return out
    if spec.kind in (FARFIELD, PML_OUTER):
        rho, u, v = spec.state
        eq = equilibrium_state(rho, u, v, params)
        return np.broadcast_to(eq, q_minus.shape).copy()
    raise ConfigError(f"unknown boundary kind {spec.kind!r}")
