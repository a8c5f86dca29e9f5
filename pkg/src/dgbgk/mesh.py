"""Triangulation, connectivity, affine geometric factors, boundary tags."""

import numpy as np

from .errors import MeshError

INTERIOR = 0
PERIODIC = -1


class MeshGeometry:
    """Connected triangulation with per-element affine metric data.

    Attributes
    ----------
    K : element count
    vertices : (Nv,2) coordinates
    EToV : (K,3) vertex ids, counterclockwise
    EToE, EToF : (K,3) neighbor element / neighbor face ids (self on boundary)
    EToB : (K,3) INTERIOR, PERIODIC, or a positive boundary marker id
    rx, ry, sx, sy, J : per-element inverse-map entries and Jacobian
    sJ : (K,3) surface Jacobian, half the physical edge length
    normals : (K,3,2) outward unit normals
    boundary_markers : name -> marker id
    """

    def __init__(self, vertices, etov):
        self.vertices = np.asarray(vertices, dtype=float)
        self.EToV = np.asarray(etov, dtype=np.int64)
        self.K = self.EToV.shape[0]

        v0 = self.vertices[self.EToV[:, 0]]
        v1 = self.vertices[self.EToV[:, 1]]
        v2 = self.vertices[self.EToV[:, 2]]
        xr = (v1[:, 0] - v0[:, 0]) / 2.0
        yr = (v1[:, 1] - v0[:, 1]) / 2.0
        xs = (v2[:, 0] - v0[:, 0]) / 2.0
        ys = (v2[:, 1] - v0[:, 1]) / 2.0
        jac = xr * ys - xs * yr
        if np.any(np.abs(jac) < 1e-14 * max(1.0, float(np.abs(jac).max(initial=0.0)))):
            bad = int(np.argmin(np.abs(jac)))
            raise MeshError(f"element {bad} is degenerate (zero area)")
        if np.any(jac <= 0):
            raise MeshError("negatively oriented element after normalization")

        self.J = jac
        self.rx = ys / jac
        self.ry = -xs / jac
        self.sx = -yr / jac
        self.sy = xr / jac

        # faces: 0 = v0->v1, 1 = v1->v2, 2 = v2->v0
        edges = np.stack([v1 - v0, v2 - v1, v0 - v2], axis=1)
        lengths = np.linalg.norm(edges, axis=2)
        self.sJ = lengths / 2.0
        tang = edges / lengths[:, :, None]
        self.normals = np.stack([tang[:, :, 1], -tang[:, :, 0]], axis=2)

        self.centroids = (v0 + v1 + v2) / 3.0
        self.EToE = np.tile(np.arange(self.K)[:, None], (1, 3))
        self.EToF = np.tile(np.arange(3)[None, :], (self.K, 1))
        self.EToB = np.zeros((self.K, 3), dtype=np.int64)
        self.boundary_markers = {}
        self.periodic_shift = np.zeros((self.K, 3, 2))

    # -- derived quantities ------------------------------------------------

    def area(self):
        return 2.0 * float(self.J.sum())

    def inradius(self):
        a = self.sJ.sum(axis=1)  # semi-perimeter
        return 2.0 * self.J / a

    def node_coords(self, refelem):
        """Physical coordinates of the interpolation nodes, (K,Np) each."""
        return self._map_ref(refelem.r, refelem.s)

    def cubature_coords(self, refelem):
        return self._map_ref(refelem.cub_r, refelem.cub_s)

    def _map_ref(self, r, s):
        v0 = self.vertices[self.EToV[:, 0]]
        v1 = self.vertices[self.EToV[:, 1]]
        v2 = self.vertices[self.EToV[:, 2]]
        lam0 = -(r + s) / 2.0
        lam1 = (1.0 + r) / 2.0
        lam2 = (1.0 + s) / 2.0
        x = np.outer(v0[:, 0], lam0) + np.outer(v1[:, 0], lam1) + np.outer(v2[:, 0], lam2)
        y = np.outer(v0[:, 1], lam0) + np.outer(v1[:, 1], lam1) + np.outer(v2[:, 1], lam2)
        return x, y

    def marker_id(self, name):
        try:
            return self.boundary_markers[name]
        except KeyError:
            raise MeshError(f"unknown boundary marker {name!r}") from None


def _face_key(a, b):
    return (a, b) if a < b else (b, a)


def connect_mesh(vertices, etov, boundary_edges=(), periodic=()):
    """Build full connectivity and geometric factors.

    boundary_edges : iterable of (v0, v1, marker_name)
    periodic : iterable of (marker_a, marker_b, (tx, ty)); faces tagged a
        pair with faces tagged b after translating by +(tx,ty).
    """
    vertices = np.asarray(vertices, dtype=float)
    etov = np.asarray(etov, dtype=np.int64)
    if etov.min(initial=0) < 0 or etov.max(initial=-1) >= len(vertices):
        raise MeshError("EToV refers to vertices outside the table")

    # normalize orientation before building metric data
    v0 = vertices[etov[:, 0]]
    v1 = vertices[etov[:, 1]]
    v2 = vertices[etov[:, 2]]
    twice_area = ((v1[:, 0] - v0[:, 0]) * (v2[:, 1] - v0[:, 1])
                  - (v2[:, 0] - v0[:, 0]) * (v1[:, 1] - v0[:, 1]))
    flip = twice_area < 0
    etov = etov.copy()
    etov[flip, 1], etov[flip, 2] = etov[flip, 2], etov[flip, 1]

    mesh = MeshGeometry(vertices, etov)
    K = mesh.K

    face_map = {}
    for e in range(K):
        for f in range(3):
            a = etov[e, f]
            b = etov[e, (f + 1) % 3]
            face_map.setdefault(_face_key(a, b), []).append((e, f))

    marker_of_edge = {}
    names = sorted({str(m) for _, _, m in boundary_edges})
    mesh.boundary_markers = {name: i + 1 for i, name in enumerate(names)}
    for a, b, m in boundary_edges:
        marker_of_edge[_face_key(int(a), int(b))] = mesh.boundary_markers[str(m)]

    unmatched = []
    for key, members in face_map.items():
        if len(members) == 2:
            (e1, f1), (e2, f2) = members
            mesh.EToE[e1, f1] = e2
            mesh.EToF[e1, f1] = f2
            mesh.EToE[e2, f2] = e1
            mesh.EToF[e2, f2] = f1
        elif len(members) == 1:
            e, f = members[0]
            marker = marker_of_edge.get(key)
            if marker is None:
                unmatched.append((e, f, key))
            else:
                mesh.EToB[e, f] = marker
        else:
            raise MeshError(f"face {key} shared by more than two elements")

    _match_periodic(mesh, periodic)

    leftovers = [(e, f) for e, f, key in unmatched]
    for e, f in list(leftovers):
        if mesh.EToB[e, f] != INTERIOR or mesh.EToE[e, f] != e:
            leftovers.remove((e, f))
    if leftovers:
        e, f = leftovers[0]
        raise MeshError(
            f"element {e} face {f} has no neighbor and no boundary tag")
    return mesh


def _face_midpoints(mesh, faces):
    out = np.zeros((len(faces), 2))
    for i, (e, f) in enumerate(faces):
        a = mesh.EToV[e, f]
        b = mesh.EToV[e, (f + 1) % 3]
        out[i] = 0.5 * (mesh.vertices[a] + mesh.vertices[b])
    return out


def _match_periodic(mesh, periodic):
    if not periodic:
        return
    diam = np.linalg.norm(mesh.vertices.max(axis=0) - mesh.vertices.min(axis=0))
    tol = 1e-8 * max(diam, 1.0)
    for marker_a, marker_b, shift in periodic:
        ida = mesh.marker_id(str(marker_a))
        idb = mesh.marker_id(str(marker_b))
        shift = np.asarray(shift, dtype=float)
        fa = [(e, f) for e in range(mesh.K) for f in range(3)
              if mesh.EToB[e, f] == ida]
        fb = [(e, f) for e in range(mesh.K) for f in range(3)
              if mesh.EToB[e, f] == idb]
        if len(fa) != len(fb):
            raise MeshError(
                f"periodic markers {marker_a}/{marker_b} have "
                f"{len(fa)} vs {len(fb)} faces")
        mida = _face_midpoints(mesh, fa) + shift[None, :]
        midb = _face_midpoints(mesh, fb)
        used = set()
        for i, (e, f) in enumerate(fa):
            d = np.linalg.norm(midb - mida[i], axis=1)
            j = int(np.argmin(d))
            if d[j] > tol or j in used:
                raise MeshError(
                    f"no periodic partner for element {e} face {f} "
                    f"(best distance {d[j]:.3e})")
            used.add(j)
            e2, f2 = fb[j]
            mesh.EToE[e, f] = e2
            mesh.EToF[e, f] = f2
            mesh.EToE[e2, f2] = e
            mesh.EToF[e2, f2] = f
            mesh.EToB[e, f] = PERIODIC
            mesh.EToB[e2, f2] = PERIODIC
            mesh.periodic_shift[e, f] = shift
            mesh.periodic_shift[e2, f2] = -shift


class FaceMap:
    """Node-level trace indexing for surface terms.

    vmapM/vmapP index into flattened (K*Np) nodal arrays; on boundary faces
    vmapP repeats vmapM and the ghost state is supplied by the model.
    """

    def __init__(self, vmapM, vmapP, boundary_faces):
        self.vmapM = vmapM
        self.vmapP = vmapP
        self.boundary_faces = boundary_faces  # list of (e, f, marker)


def trace_pairing(mesh, refelem, tol_scale=1e-8):
    """Match face nodes with coinciding physical coordinates.

    Periodic partners coincide after the declared translation.  A node
    mismatch beyond the tolerance raises MeshError.
    """
    x, y = mesh.node_coords(refelem)
    nfp = refelem.Nfp
    npts = refelem.Np
    fids = refelem.face_node_ids

    diam = np.linalg.norm(mesh.vertices.max(axis=0) - mesh.vertices.min(axis=0))
    tol = tol_scale * max(diam, 1.0)

    vmapM = np.zeros((mesh.K, 3, nfp), dtype=np.int64)
    vmapP = np.zeros((mesh.K, 3, nfp), dtype=np.int64)
    boundary_faces = []
    for e in range(mesh.K):
        for f in range(3):
            ids = fids[f]
            vmapM[e, f] = e * npts + ids
            e2 = mesh.EToE[e, f]
            f2 = mesh.EToF[e, f]
            tag = mesh.EToB[e, f]
            if e2 == e and f2 == f:
                vmapP[e, f] = vmapM[e, f]
                boundary_faces.append((e, f, int(tag)))
                continue
            xm = x[e, ids] + mesh.periodic_shift[e, f, 0]
            ym = y[e, ids] + mesh.periodic_shift[e, f, 1]
            ids2 = fids[f2]
            xp = x[e2, ids2]
            yp = y[e2, ids2]
            d2 = (xm[:, None] - xp[None, :]) ** 2 + (ym[:, None] - yp[None, :]) ** 2
            perm = np.argmin(d2, axis=1)
            if (np.sqrt(d2[np.arange(nfp), perm]) > tol).any() or len(set(perm)) != nfp:
                raise MeshError(
                    f"face nodes of element {e} face {f} do not coincide "
                    f"with neighbor {e2} face {f2}")
            vmapP[e, f] = e2 * npts + ids2[perm]
    return FaceMap(vmapM, vmapP, boundary_faces)
