"""Structured triangulations for the built-in studies and tests.

General mesh generation is out of scope; these helpers cover the shapes
the validation harness needs: rectangles (optionally graded or with a
rectangular hole), uniform refinement for convergence studies, and
interior-vertex jitter for irregular-mesh checks.
"""

import numpy as np

from .errors import ConfigError


def rect_mesh(x0, x1, y0, y1, nx, ny, pattern="right"):
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    return rect_mesh_graded(xs, ys, pattern=pattern)


def rect_mesh_graded(xs, ys, pattern="right", hole=None):
    """Triangulate the tensor grid xs x ys.

    pattern "right" splits each cell along one diagonal, "cross" adds the
    cell center and makes four triangles.  `hole` is an optional
    (hx0, hx1, hy0, hy1) box; cells inside are removed and their exposed
    edges are tagged "hole".  Side tags: left/right/bottom/top.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    nx = len(xs) - 1
    ny = len(ys) - 1
    if nx < 1 or ny < 1:
        raise ConfigError("rect_mesh needs at least one cell per direction")

    def vid(i, j):
        return j * (nx + 1) + i

    gx, gy = np.meshgrid(xs, ys, indexing="xy")
    verts = np.column_stack([gx.ravel(), gy.ravel()])

    keep = np.ones((nx, ny), dtype=bool)
    if hole is not None:
        hx0, hx1, hy0, hy1 = hole
        for i in range(nx):
            for j in range(ny):
                cx = 0.5 * (xs[i] + xs[i + 1])
                cy = 0.5 * (ys[j] + ys[j + 1])
                if hx0 < cx < hx1 and hy0 < cy < hy1:
                    keep[i, j] = False

    tris = []
    extra = []
    for j in range(ny):
        for i in range(nx):
            if not keep[i, j]:
                continue
            a = vid(i, j)
            b = vid(i + 1, j)
            c = vid(i + 1, j + 1)
            d = vid(i, j + 1)
            if pattern == "right":
                if (i + j) % 2 == 0:
                    tris += [(a, b, c), (a, c, d)]
                else:
                    tris += [(a, b, d), (b, c, d)]
            elif pattern == "cross":
                m = len(verts) + len(extra)
                extra.append([0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])])
                tris += [(a, b, m), (b, c, m), (c, d, m), (d, a, m)]
            else:
                raise ConfigError(f"unknown rect pattern {pattern!r}")
    if extra:
        verts = np.vstack([verts, np.array(extra)])

    edges = []
    for i in range(nx):
        if keep[i, 0]:
            edges.append((vid(i, 0), vid(i + 1, 0), "bottom"))
        if keep[i, ny - 1]:
            edges.append((vid(i, ny), vid(i + 1, ny), "top"))
    for j in range(ny):
        if keep[0, j]:
            edges.append((vid(0, j), vid(0, j + 1), "left"))
        if keep[nx - 1, j]:
            edges.append((vid(nx, j), vid(nx, j + 1), "right"))
    if hole is not None:
        for i in range(nx):
            for j in range(ny):
                if keep[i, j]:
                    continue
                # exposed edges of removed cells, walked from kept neighbors
                if i > 0 and keep[i - 1, j]:
                    edges.append((vid(i, j), vid(i, j + 1), "hole"))
                if i < nx - 1 and keep[i + 1, j]:
                    edges.append((vid(i + 1, j), vid(i + 1, j + 1), "hole"))
                if j > 0 and keep[i, j - 1]:
                    edges.append((vid(i, j), vid(i + 1, j), "hole"))
                if j < ny - 1 and keep[i, j + 1]:
                    edges.append((vid(i, j + 1), vid(i + 1, j + 1), "hole"))

    verts, tris, edges = _drop_unused_vertices(verts, np.array(tris, dtype=np.int64), edges)
    return verts, tris, edges


def _drop_unused_vertices(verts, tris, edges):
    used = np.zeros(len(verts), dtype=bool)
    used[tris.ravel()] = True
    for a, b, _ in edges:
        used[a] = True
        used[b] = True
    new_id = -np.ones(len(verts), dtype=np.int64)
    new_id[used] = np.arange(int(used.sum()))
    verts = verts[used]
    tris = new_id[tris]
    edges = [(int(new_id[a]), int(new_id[b]), m) for a, b, m in edges]
    return verts, tris, edges


def refine_uniform(verts, tris, edges):
    """Split every triangle into four via edge midpoints."""
    verts = np.asarray(verts, dtype=float)
    tris = np.asarray(tris, dtype=np.int64)
    mid_cache = {}
    new_verts = [v for v in verts]

    def midpoint(a, b):
        key = (a, b) if a < b else (b, a)
        if key not in mid_cache:
            new_verts.append(0.5 * (verts[a] + verts[b]))
            mid_cache[key] = len(new_verts) - 1
        return mid_cache[key]

    out = []
    for a, b, c in tris:
        ab = midpoint(a, b)
        bc = midpoint(b, c)
        ca = midpoint(c, a)
        out += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]

    new_edges = []
    for a, b, m in edges:
        mab = midpoint(a, b)
        new_edges += [(a, mab, m), (mab, b, m)]
    return np.array(new_verts), np.array(out, dtype=np.int64), new_edges


def jitter_interior(verts, tris, edges, amount, seed=0):
    """Perturb interior vertices; boundary vertices stay put."""
    verts = np.asarray(verts, dtype=float).copy()
    fixed = np.zeros(len(verts), dtype=bool)
    for a, b, _ in edges:
        fixed[a] = True
        fixed[b] = True
    rng = np.random.default_rng(seed)
    shift = rng.uniform(-amount, amount, size=verts.shape)
    verts[~fixed] += shift[~fixed]
    return verts, tris, edges
