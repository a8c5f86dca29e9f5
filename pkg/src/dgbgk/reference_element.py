"""Polynomial operators on the reference triangle.

The reference element is the bi-unit triangle with vertices
(-1,-1), (1,-1), (-1,1).  Nodal interpolation uses the Warp & Blend
points, the modal basis is the orthonormal Koornwinder-Dubiner family,
and volume quadrature is a collapsed-coordinate Gauss rule so that any
requested cubature degree is available without tabulated rules.
"""

import numpy as np
from scipy.special import eval_jacobi, gammaln, roots_jacobi, roots_legendre

from .errors import ConfigError, OperatorError

MAX_DEGREE = 9

# Warp & Blend blending exponents for N = 1..15.
_WARP_ALPHA = (0.0000, 0.0000, 1.4152, 0.1001, 0.2751, 0.9800, 1.0999,
               1.2832, 1.3648, 1.4773, 1.4959, 1.5743, 1.5770, 1.6223, 1.6258)

NODE_TOL = 1e-10


def jacobi_poly(x, alpha, beta, n):
    """Jacobi polynomial of degree n, orthonormal on [-1,1] with weight
    (1-x)^alpha (1+x)^beta."""
    x = np.asarray(x, dtype=float)
    lognorm = ((alpha + beta + 1) * np.log(2.0)
               + gammaln(n + alpha + 1) + gammaln(n + beta + 1)
               - np.log(2 * n + alpha + beta + 1)
               - gammaln(n + 1) - gammaln(n + alpha + beta + 1))
    return eval_jacobi(n, alpha, beta, x) / np.sqrt(np.exp(lognorm))


def grad_jacobi_poly(x, alpha, beta, n):
    if n == 0:
        return np.zeros_like(np.asarray(x, dtype=float))
    return np.sqrt(n * (n + alpha + beta + 1)) * jacobi_poly(
        x, alpha + 1, beta + 1, n - 1)


def gauss_lobatto(n):
    """n+1 Gauss-Lobatto points on [-1,1]."""
    if n == 1:
        return np.array([-1.0, 1.0])
    interior, _ = roots_jacobi(n - 1, 1.0, 1.0)
    return np.concatenate(([-1.0], interior, [1.0]))


def vandermonde_1d(n, x):
    return np.column_stack([jacobi_poly(x, 0.0, 0.0, j) for j in range(n + 1)])


def _rs_to_ab(r, s):
    denom = np.where(np.abs(1.0 - s) > 1e-14, 1.0 - s, 1.0)
    a = np.where(np.abs(1.0 - s) > 1e-14, 2.0 * (1.0 + r) / denom - 1.0, -1.0)
    return a, s.copy()


def _simplex_2d(a, b, i, j):
    return (np.sqrt(2.0) * jacobi_poly(a, 0.0, 0.0, i)
            * jacobi_poly(b, 2.0 * i + 1.0, 0.0, j) * (1.0 - b) ** i)


def _grad_simplex_2d(a, b, i, j):
    fa = jacobi_poly(a, 0.0, 0.0, i)
    dfa = grad_jacobi_poly(a, 0.0, 0.0, i)
    gb = jacobi_poly(b, 2.0 * i + 1.0, 0.0, j)
    dgb = grad_jacobi_poly(b, 2.0 * i + 1.0, 0.0, j)

    dr = dfa * gb
    if i > 0:
        dr = dr * (0.5 * (1.0 - b)) ** (i - 1)
    ds = dfa * (gb * 0.5 * (1.0 + a))
    if i > 0:
        ds = ds * (0.5 * (1.0 - b)) ** (i - 1)
    tmp = dgb * (0.5 * (1.0 - b)) ** i
    if i > 0:
        tmp = tmp - 0.5 * i * gb * (0.5 * (1.0 - b)) ** (i - 1)
    ds = ds + fa * tmp
    scale = 2.0 ** (i + 0.5)
    return scale * dr, scale * ds


def _mode_pairs(n):
    return [(i, j) for i in range(n + 1) for j in range(n + 1 - i)]


def vandermonde_2d(n, r, s):
    a, b = _rs_to_ab(r, s)
    return np.column_stack([_simplex_2d(a, b, i, j) for i, j in _mode_pairs(n)])


def grad_vandermonde_2d(n, r, s):
    a, b = _rs_to_ab(r, s)
    cols = [_grad_simplex_2d(a, b, i, j) for i, j in _mode_pairs(n)]
    vr = np.column_stack([c[0] for c in cols])
    vs = np.column_stack([c[1] for c in cols])
    return vr, vs


def _warp_factor(n, rout):
    """1D warp from equidistant toward Gauss-Lobatto spacing."""
    lgl = gauss_lobatto(n)
    req = np.linspace(-1.0, 1.0, n + 1)
    veq = vandermonde_1d(n, req)
    pmat = np.vstack([jacobi_poly(rout, 0.0, 0.0, i) for i in range(n + 1)])
    lmat = np.linalg.solve(veq.T, pmat)
    warp = lmat.T @ (lgl - req)
    zerof = (np.abs(rout) < 1.0 - 1e-10).astype(float)
    sf = 1.0 - (zerof * rout) ** 2
    return warp / sf + warp * (zerof - 1.0)


def warp_blend_nodes(n):
    """Warp & Blend interpolation nodes on the reference triangle."""
    alpha = _WARP_ALPHA[n - 1] if n <= 15 else 5.0 / 3.0
    np_count = (n + 1) * (n + 2) // 2

    l1 = np.zeros(np_count)
    l3 = np.zeros(np_count)
    k = 0
    for i in range(n + 1):
        for j in range(n + 1 - i):
            l1[k] = i / n
            l3[k] = j / n
            k += 1
    l2 = 1.0 - l1 - l3
    x = -l2 + l3
    y = (-l2 - l3 + 2.0 * l1) / np.sqrt(3.0)

    blend1 = 4.0 * l2 * l3
    blend2 = 4.0 * l1 * l3
    blend3 = 4.0 * l1 * l2
    warpf1 = _warp_factor(n, l3 - l2)
    warpf2 = _warp_factor(n, l1 - l3)
    warpf3 = _warp_factor(n, l2 - l1)
    warp1 = blend1 * warpf1 * (1.0 + (alpha * l1) ** 2)
    warp2 = blend2 * warpf2 * (1.0 + (alpha * l2) ** 2)
    warp3 = blend3 * warpf3 * (1.0 + (alpha * l3) ** 2)

    x = x + warp1 + np.cos(2.0 * np.pi / 3.0) * warp2 + np.cos(4.0 * np.pi / 3.0) * warp3
    y = y + np.sin(2.0 * np.pi / 3.0) * warp2 + np.sin(4.0 * np.pi / 3.0) * warp3

    # equilateral -> (r,s)
    lam1 = (np.sqrt(3.0) * y + 1.0) / 3.0
    lam2 = (-3.0 * x - np.sqrt(3.0) * y + 2.0) / 6.0
    lam3 = (3.0 * x - np.sqrt(3.0) * y + 2.0) / 6.0
    r = -lam2 + lam3 - lam1
    s = -lam2 - lam3 + lam1
    return r, s


def triangle_cubature(degree):
    """Collapsed-coordinate Gauss rule exact for polynomials up to `degree`.

    Gauss-Legendre in the first collapsed coordinate and Gauss-Jacobi(1,0)
    in the second absorb the (1-b)/2 Duffy Jacobian, so positivity and the
    advertised degree hold for any requested order.
    """
    n1d = (degree + 2) // 2
    ga, wa = roots_legendre(n1d)
    gb, wb = roots_jacobi(n1d, 1.0, 0.0)
    a, b = np.meshgrid(ga, gb, indexing="ij")
    wgt = 0.5 * np.outer(wa, wb)
    r = (1.0 + a) * (1.0 - b) / 2.0 - 1.0
    s = b
    return r.ravel(), s.ravel(), wgt.ravel()


def vandermonde_and_mass(n, nodes):
    """Modal Vandermonde and mass matrix for a nodal set.

    Raises OperatorError when the nodes are not unisolvent for degree n.
    """
    r, s = nodes
    v = vandermonde_2d(n, r, s)
    if v.shape[0] != v.shape[1]:
        raise OperatorError(
            f"need {v.shape[1]} nodes for degree {n}, got {v.shape[0]}")
    cond = np.linalg.cond(v)
    if not np.isfinite(cond) or cond > 1e12:
        raise OperatorError(
            f"nodal set is not unisolvent for degree {n} (cond(V) = {cond:.3e})")
    vinv = np.linalg.inv(v)
    mass = vinv.T @ vinv
    return v, mass


class ReferenceElement:
    """All reference-triangle operators used by the semi-discrete scheme."""

    def __init__(self, n, cubature_degree=None):
        if not (1 <= n <= MAX_DEGREE):
            raise ConfigError(
                f"polynomial degree {n} unsupported (allowed: 1..{MAX_DEGREE})")
        if cubature_degree is None:
            cubature_degree = 3 * n
        if cubature_degree < 2 * n + 1:
            raise ConfigError(
                f"cubature degree {cubature_degree} too low; need >= {2 * n + 1}")

        self.N = n
        self.Np = (n + 1) * (n + 2) // 2
        self.Nfp = n + 1
        self.Nfaces = 3
        self.cubature_degree = cubature_degree

        self.r, self.s = warp_blend_nodes(n)
        self.V, self.M = vandermonde_and_mass(n, (self.r, self.s))
        self.Vinv = np.linalg.inv(self.V)

        vr, vs = grad_vandermonde_2d(n, self.r, self.s)
        self.Dr = vr @ self.Vinv
        self.Ds = vs @ self.Vinv

        self.face_node_ids = self._face_nodes()
        self.LIFT, self.face_mass = self._lift()

        rc, sc, wc = triangle_cubature(cubature_degree)
        self.cub_r, self.cub_s, self.cub_w = rc, sc, wc
        self.Nc = rc.size
        self.Icub = vandermonde_2d(n, rc, sc) @ self.Vinv
        # Pcub = M^-1 Icub^T diag(w); with cubature degree >= 2N this makes
        # Pcub @ Icub the identity on degree-N data.
        self.Pcub = np.linalg.solve(self.M, self.Icub.T * wc[None, :])

    def _face_nodes(self):
        r, s = self.r, self.s
        faces = []
        for mask, key in (
            (np.abs(s + 1.0) < NODE_TOL, r),          # face 0: v0 -> v1
            (np.abs(r + s) < NODE_TOL, s),            # face 1: v1 -> v2
            (np.abs(r + 1.0) < NODE_TOL, -s),         # face 2: v2 -> v0
        ):
            ids = np.flatnonzero(mask)
            if ids.size != self.Nfp:
                raise OperatorError("face node count mismatch")
            faces.append(ids[np.argsort(key[ids])])
        return np.array(faces)

    def _lift(self):
        """LIFT = M^-1 E where E holds the three face mass matrices.

        Faces are parametrized affinely on [-1,1]; the physical face length
        enters later through the surface Jacobian (half the edge length).
        """
        emat = np.zeros((self.Np, 3 * self.Nfp))
        face_param = (self.r, self.s, -self.s)
        face_mass = []
        for f in range(3):
            ids = self.face_node_ids[f]
            v1d = vandermonde_1d(self.N, face_param[f][ids])
            mf = np.linalg.inv(v1d @ v1d.T)
            face_mass.append(mf)
            emat[ids, f * self.Nfp:(f + 1) * self.Nfp] = mf
        return self.V @ (self.V.T @ emat), face_mass

    def interpolate_to(self, r, s):
        """Matrix mapping nodal values to samples at (r,s)."""
        return vandermonde_2d(self.N, r, s) @ self.Vinv


def build_reference_element(n, cubature_degree=None):
    return ReferenceElement(n, cubature_degree)
