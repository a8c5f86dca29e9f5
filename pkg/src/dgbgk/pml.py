"""Absorbing-layer damping profiles and PML element bookkeeping.

The damping follows the multiaxial construction: each direction gets its
own polynomial profile outside the physical-domain box, plus a tunable
fraction of the orthogonal profile for long-time stability.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class PmlConfig:
    """Layer width, strength, profile order, and the physical-domain box."""

    width: float
    sigma_max: float
    box: tuple  # (x0m, x0p, y0m, y0p) interface box of the physical domain
    alpha: float = 4.0
    alpha_x: float = 0.1
    alpha_y: float = 0.1
    sides: tuple = ("left", "right", "bottom", "top")

    def __post_init__(self):
        if self.width <= 0:
            raise ConfigError("pml width must be positive")
        if self.sigma_max < 0:
            raise ConfigError("pml sigma_max must be nonnegative")
        if self.alpha < 1:
            raise ConfigError("pml profile order must be >= 1")
        if self.alpha_x < 0 or self.alpha_y < 0:
            raise ConfigError("multiaxial constants must be nonnegative")


def _axis_profile(coord, lo, hi, lo_on, hi_on, width, sigma_max, alpha):
    coord = np.asarray(coord, dtype=float)
    out = np.zeros_like(coord)
    if sigma_max == 0.0:
        return out
    if lo_on:
        d = np.clip(lo - coord, 0.0, None)
        out = out + sigma_max * (d / width) ** alpha
    if hi_on:
        d = np.clip(coord - hi, 0.0, None)
        out = out + sigma_max * (d / width) ** alpha
    return out


def damping_profiles(config, x, y):
    """Multiaxial damping (sigma_x, sigma_y) at the given points.

    Inside the interface box both vanish; corners pick up the superposed
    contributions of the intersecting layers automatically.
    """
    x0m, x0p, y0m, y0p = config.box
    sx_hat = _axis_profile(x, x0m, x0p, "left" in config.sides,
                           "right" in config.sides,
                           config.width, config.sigma_max, config.alpha)
    sy_hat = _axis_profile(y, y0m, y0p, "bottom" in config.sides,
                           "top" in config.sides,
                           config.width, config.sigma_max, config.alpha)
    sigma_x = sx_hat + config.alpha_x * sy_hat
    sigma_y = sy_hat + config.alpha_y * sx_hat
    return sigma_x, sigma_y


@dataclass
class PmlZone:
    """Flagged elements with damping sampled at their cubature nodes."""

    elements: np.ndarray        # flagged element ids, sorted
    sigma_x: np.ndarray         # (Kpml, Nc)
    sigma_y: np.ndarray         # (Kpml, Nc)
    index_of: dict              # element id -> row in the arrays above

    def __len__(self):
        return len(self.elements)


def flag_pml_elements(mesh, config, refelem):
    """Flag elements with centroid outside the interface box.

    The damping profiles are sampled once at every cubature node of each
    flagged element, which is where the semi-discrete form applies them.
    """
    x0m, x0p, y0m, y0p = config.box
    cx = mesh.centroids[:, 0]
    cy = mesh.centroids[:, 1]
    outside = ((cx < x0m) & ("left" in config.sides)
               | (cx > x0p) & ("right" in config.sides)
               | (cy < y0m) & ("bottom" in config.sides)
               | (cy > y0p) & ("top" in config.sides))
    elems = np.flatnonzero(outside)

    xmin, ymin = mesh.vertices.min(axis=0)
    xmax, ymax = mesh.vertices.max(axis=0)
    eps = 1e-10 * max(xmax - xmin, ymax - ymin, 1.0)
    need = {
        "left": xmin <= x0m - config.width + eps,
        "right": xmax >= x0p + config.width - eps,
        "bottom": ymin <= y0m - config.width + eps,
        "top": ymax >= y0p + config.width - eps,
    }
    for side in config.sides:
        if side not in need:
            raise ConfigError(f"unknown pml side {side!r}")
        if not need[side]:
            raise ConfigError(
                f"pml declared on side {side!r} but the mesh does not extend "
                f"{config.width} beyond the interface box there")

    xc, yc = mesh.cubature_coords(refelem)
    sx, sy = damping_profiles(config, xc[elems], yc[elems])
    return PmlZone(
        elements=elems,
        sigma_x=sx,
        sigma_y=sy,
        index_of={int(e): i for i, e in enumerate(elems)},
    )
