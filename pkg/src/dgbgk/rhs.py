"""Semi-discrete right-hand sides.

Per element the rate assembles four contributions: the affine volume
derivatives, the upwind surface penalty, cubature-projected collision
terms, and (on flagged elements) the PML damping and memory-field rates.
Evaluation can be restricted to an element subset reading neighbor traces
from a caller-supplied array, which is what the multirate scheduler uses.
All gathers and matmuls are vectorized over elements, so results do not
depend on how a caller partitions the element range.
"""

import numpy as np

from . import bgk
from .errors import NumericalError, PositivityError
from .mesh import trace_pairing

FULL = "full"      # -Lambda q + projected coupling (explicit integrators)
GPART = "gpart"    # projected coupling only (semi-analytic F)
NONE = "none"      # transport only (LSIMEX nonstiff part)


class SpatialOperator:
    """Precomputed discrete operators for one mesh/element/model triple."""

    def __init__(self, mesh, refelem, params, bc_specs=None, pml_zone=None,
                 positivity_floor=0.0):
        self.mesh = mesh
        self.refelem = refelem
        self.params = params
        self.bc_specs = dict(bc_specs or {})
        self.pml = pml_zone
        self.positivity_floor = positivity_floor

        self.facemap = trace_pairing(mesh, refelem)
        self.flux = bgk.FaceFluxCache(mesh, params)
        self.Ax, self.Ay = bgk.flux_matrices(params)

        self.fscale = mesh.sJ / mesh.J[:, None]
        self.lam6 = np.zeros(6)
        if np.isfinite(params.tau):
            self.lam6[3:] = 1.0 / params.tau

        # boundary faces grouped by marker for vectorized ghost states
        groups = {}
        for e, f, marker in self.facemap.boundary_faces:
            groups.setdefault(marker, []).append((e, f))
        self.boundary_groups = {
            m: (np.array([ef[0] for ef in g]), np.array([ef[1] for ef in g]))
            for m, g in groups.items()
        }
        for m in self.boundary_groups:
            if m not in self.bc_specs:
                raise NumericalError(
                    f"boundary marker {m} has no boundary condition")

        if self.pml is not None:
            self.pml_row_of = -np.ones(mesh.K, dtype=np.int64)
            self.pml_row_of[self.pml.elements] = np.arange(len(self.pml))

    # -- helpers -------------------------------------------------------------

    def _gather_traces(self, q, qtr, elems):
        """Minus/plus states on the face nodes of the subset."""
        re = self.refelem
        nfp = re.Nfp
        qm = q.reshape(-1, 6)[self.facemap.vmapM[elems]]
        qp = qtr.reshape(-1, 6)[self.facemap.vmapP[elems]]

        pos = -np.ones(self.mesh.K, dtype=np.int64)
        pos[elems] = np.arange(len(elems))
        for marker, (eb, fb) in self.boundary_groups.items():
            sel = pos[eb] >= 0
            if not sel.any():
                continue
            rows = pos[eb[sel]]
            faces = fb[sel]
            spec = self.bc_specs[marker]
            qp[rows, faces] = bgk.boundary_state(qm[rows, faces], spec,
                                                 self.params)
        return qm, qp.reshape(len(elems), 3, nfp, 6)

    def _check_finite(self, rate, elems, label):
        if np.isfinite(rate).all():
            return
        bad = np.flatnonzero(~np.isfinite(rate).reshape(len(elems), -1).all(axis=1))
        raise NumericalError(
            f"non-finite {label} rate in element {int(elems[bad[0]])}")

    # -- main evaluation -------------------------------------------------------

    def rhs(self, q, qx=None, qy=None, t=0.0, qtr=None, elems=None,
            collision_mode=FULL, include_sigma=True, want_aux=False):
        """Rates for q and, when requested, the PML memory fields.

        Returns (rate_q, rate_qx, rate_qy); the aux rates are None unless
        want_aux is set and the subset touches PML elements.  rate_q rows
        follow `elems` order; aux rows follow the zone's own ordering
        restricted to the subset.
        """
        mesh = self.mesh
        re = self.refelem
        if elems is None:
            elems = np.arange(mesh.K)
        else:
            elems = np.asarray(elems, dtype=np.int64)
        if qtr is None:
            qtr = q

        qe = q[elems]
        dqr = np.matmul(re.Dr, qe)
        dqs = np.matmul(re.Ds, qe)
        dqx = mesh.rx[elems, None, None] * dqr + mesh.sx[elems, None, None] * dqs
        dqy = mesh.ry[elems, None, None] * dqr + mesh.sy[elems, None, None] * dqs
        rate = dqx @ self.Ax + dqy @ self.Ay

        qm, qp = self._gather_traces(q, qtr, elems)
        qm = qm.reshape(len(elems), 3, re.Nfp, 6)
        jump = qp - qm
        fm = self.flux.fminus[elems]
        flux = np.einsum("kfcd,kfnd->kfnc", fm, jump)
        flux *= self.fscale[elems][:, :, None, None]
        rate += np.matmul(re.LIFT, flux.reshape(len(elems), 3 * re.Nfp, 6))

        needs_cub = collision_mode in (FULL, GPART)
        if needs_cub:
            qc = np.matmul(re.Icub, qe)
            floor = self.positivity_floor
            if floor is not None:
                dmin = qc[..., 0].min()
                if dmin <= floor:
                    rows = np.flatnonzero((qc[..., 0] <= floor).any(axis=1))
                    raise PositivityError(
                        f"density {dmin:.3e} at cubature node of element "
                        f"{int(elems[rows[0]])} reached the floor {floor:.3e}")
            rate += np.matmul(re.Pcub,
                              bgk.collision_gpart(qc, self.params.tau))
            if collision_mode == FULL:
                rate -= self.lam6 * qe

        aux_x = aux_y = None
        if self.pml is not None:
            rows_all = self.pml_row_of[elems]
            sub = np.flatnonzero(rows_all >= 0)
            if sub.size:
                prows = rows_all[sub]
                sx = self.pml.sigma_x[prows][:, :, None]
                sy = self.pml.sigma_y[prows][:, :, None]
                if include_sigma and qx is not None:
                    qxc = np.matmul(re.Icub, qx[prows])
                    qyc = np.matmul(re.Icub, qy[prows])
                    rate[sub] -= np.matmul(re.Pcub, sx * qxc)
                    rate[sub] -= np.matmul(re.Pcub, sy * qyc)
                if want_aux:
                    dstar = np.einsum("kfcd,kfnd->kfnc",
                                      self.flux.dsel[elems][sub], jump[sub])
                    scale = self.fscale[elems[sub]][:, :, None, None]
                    nrm = mesh.normals[elems[sub]]
                    sx_ax = (dstar @ self.Ax) * nrm[:, :, 0][:, :, None, None]
                    sy_ay = (dstar @ self.Ay) * nrm[:, :, 1][:, :, None, None]
                    lift_x = np.matmul(re.LIFT, (sx_ax * scale).reshape(
                        sub.size, 3 * re.Nfp, 6))
                    lift_y = np.matmul(re.LIFT, (sy_ay * scale).reshape(
                        sub.size, 3 * re.Nfp, 6))
                    aux_x = (dqx[sub] @ self.Ax) + lift_x
                    aux_y = (dqy[sub] @ self.Ay) + lift_y
                    if include_sigma and qx is not None:
                        aux_x -= np.matmul(re.Pcub, sx * qxc)
                        aux_y -= np.matmul(re.Pcub, sy * qyc)
                    self._check_finite(aux_x, elems[sub], "pml-x")
                    self._check_finite(aux_y, elems[sub], "pml-y")

        self._check_finite(rate, elems, "field")
        return rate, aux_x, aux_y

    def collision_term(self, q, elems=None):
        """Projected full collision alone (the LSIMEX stiff part)."""
        re = self.refelem
        if elems is None:
            elems = np.arange(self.mesh.K)
        qe = q[elems]
        qc = np.matmul(re.Icub, qe)
        out = np.matmul(re.Pcub, bgk.collision_gpart(qc, self.params.tau))
        out -= self.lam6 * qe
        return out

    # -- integrals -------------------------------------------------------------

    def integrate(self, nodal):
        """Domain integral of a nodal scalar field (K, Np)."""
        w = self.refelem.M.sum(axis=1)
        return float(np.einsum("k,kn,n->", self.mesh.J, nodal, w))


class BoltzmannSystem:
    """Flat-vector adapter between the spatial operator and the steppers.

    Layout: [q (K*Np*6), qx (Kpml*Np*6), qy (Kpml*Np*6)].  The stiff rate
    array `lam` is 1/tau on components 4..6 of q and zero elsewhere; the
    PML memory fields always advance on the classical path.
    """

    def __init__(self, op):
        self.op = op
        mesh = op.mesh
        re = op.refelem
        self.kq = mesh.K * re.Np * 6
        self.kaux = (len(op.pml) * re.Np * 6) if op.pml is not None else 0
        self.size = self.kq + 2 * self.kaux
        self.shape_q = (mesh.K, re.Np, 6)
        self.shape_aux = (self.kaux // (re.Np * 6), re.Np, 6) if self.kaux else None

        lam = np.zeros(self.size)
        lam_q = lam[:self.kq].reshape(self.shape_q)
        lam_q[:, :, 3:] = op.lam6[3]
        self.lam = lam

    def pack(self, field):
        parts = [field.q.ravel()]
        if self.kaux:
            parts += [field.qx.ravel(), field.qy.ravel()]
        return np.concatenate(parts)

    def unpack(self, y):
        q = y[:self.kq].reshape(self.shape_q)
        if not self.kaux:
            return q, None, None
        qx = y[self.kq:self.kq + self.kaux].reshape(self.shape_aux)
        qy = y[self.kq + self.kaux:].reshape(self.shape_aux)
        return q, qx, qy

    def _assemble(self, rq, rx, ry):
        parts = [rq.ravel()]
        if self.kaux:
            parts += [rx.ravel(), ry.ravel()]
        return np.concatenate(parts)

    def rhs_full(self, y, t):
        q, qx, qy = self.unpack(y)
        rq, rx, ry = self.op.rhs(q, qx, qy, t, collision_mode=FULL,
                                 want_aux=bool(self.kaux))
        return self._assemble(rq, rx, ry)

    def rhs_semi(self, y, t):
        """F = L + Ntilde; the diagonal relaxation is handled analytically."""
        q, qx, qy = self.unpack(y)
        rq, rx, ry = self.op.rhs(q, qx, qy, t, collision_mode=GPART,
                                 want_aux=bool(self.kaux))
        return self._assemble(rq, rx, ry)

    def rhs_nonstiff(self, y, t):
        q, qx, qy = self.unpack(y)
        rq, rx, ry = self.op.rhs(q, qx, qy, t, collision_mode=NONE,
                                 want_aux=bool(self.kaux))
        return self._assemble(rq, rx, ry)

    def stiff_gpart(self, y, t):
        q, _, _ = self.unpack(y)
        re = self.op.refelem
        qc = np.matmul(re.Icub, q)
        g = np.matmul(re.Pcub, bgk.collision_gpart(qc, self.op.params.tau))
        out = np.zeros(self.size)
        out[:self.kq] = g.ravel()
        return out
