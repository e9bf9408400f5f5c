"""Flat-array octree over particle positions for sphere range queries.

The tree is a Barnes-Hut-style octant subdivision stored in parallel numpy
arrays rather than linked nodes: children of an internal node occupy eight
contiguous slots starting at ``child_base``. Particle membership is encoded
as a permutation array; each node owns the contiguous slice
``perm[start:end]``. Leaves are nodes with ``child_base == -1``.

Octant assignment compares each coordinate against the node center
(>= goes to the upper half) and packs the three outcomes x-major:
``octant = (x_hi << 2) | (y_hi << 1) | z_hi``. Children are ordered by that
code, and the per-node partition is a stable counting sort, so builds are
fully deterministic.

Queries walk the flat array iteratively with an explicit stack and prune a
node when the squared per-axis-clamped distance from the query point to the
node cube exceeds the (slightly padded) squared radius. The pad absorbs the
one rounding step between a child's stored center and its true octant
boundary, so pruning never drops a particle that is genuinely in range; the
final per-particle test ``d2 <= radius**2`` is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

DEFAULT_LEAF_CAPACITY = 8
MAX_TREE_DEPTH = 48

_NO_CHILD = -1


@njit(cache=True, nogil=True)
def _build_kernel(x, y, z, perm, leaf_capacity, max_depth, cx0, cy0, cz0, half0):
    n = perm.shape[0]
    cap = 64
    centers = np.empty((cap, 3), np.float64)
    halfs = np.empty(cap, np.float64)
    child = np.empty(cap, np.int64)
    start = np.empty(cap, np.int64)
    end = np.empty(cap, np.int64)
    scratch = np.empty(n, np.int64)

    centers[0, 0] = cx0
    centers[0, 1] = cy0
    centers[0, 2] = cz0
    halfs[0] = half0
    child[0] = _NO_CHILD
    start[0] = 0
    end[0] = n
    n_nodes = 1

    stack_cap = 1024
    stack_node = np.empty(stack_cap, np.int64)
    stack_depth = np.empty(stack_cap, np.int64)
    stack_node[0] = 0
    stack_depth[0] = 0
    sp = 1

    counts = np.empty(8, np.int64)
    offs = np.empty(9, np.int64)
    cursor = np.empty(8, np.int64)

    while sp > 0:
        sp -= 1
        node = stack_node[sp]
        depth = stack_depth[sp]
        s = start[node]
        e = end[node]
        if e - s <= leaf_capacity or depth >= max_depth:
            continue

        # coincident-point guard: a cell of identical positions can never be
        # separated by subdivision, so it stays a leaf even over capacity
        j0 = perm[s]
        separable = False
        for t in range(s + 1, e):
            j = perm[t]
            if x[j] != x[j0] or y[j] != y[j0] or z[j] != z[j0]:
                separable = True
                break
        if not separable:
            continue

        cx = centers[node, 0]
        cy = centers[node, 1]
        cz = centers[node, 2]

        # stable counting sort of perm[s:e] by octant code
        for o in range(8):
            counts[o] = 0
        for t in range(s, e):
            j = perm[t]
            o = 0
            if x[j] >= cx:
                o += 4
            if y[j] >= cy:
                o += 2
            if z[j] >= cz:
                o += 1
            counts[o] += 1
        offs[0] = 0
        for o in range(8):
            offs[o + 1] = offs[o] + counts[o]
            cursor[o] = offs[o]
        for t in range(s, e):
            j = perm[t]
            o = 0
            if x[j] >= cx:
                o += 4
            if y[j] >= cy:
                o += 2
            if z[j] >= cz:
                o += 1
            scratch[s + cursor[o]] = j
            cursor[o] += 1
        for t in range(s, e):
            perm[t] = scratch[t]

        if n_nodes + 8 > centers.shape[0]:
            new_cap = centers.shape[0] * 2
            nc = np.empty((new_cap, 3), np.float64)
            nh = np.empty(new_cap, np.float64)
            nk = np.empty(new_cap, np.int64)
            ns = np.empty(new_cap, np.int64)
            ne = np.empty(new_cap, np.int64)
            nc[:n_nodes, :] = centers[:n_nodes, :]
            nh[:n_nodes] = halfs[:n_nodes]
            nk[:n_nodes] = child[:n_nodes]
            ns[:n_nodes] = start[:n_nodes]
            ne[:n_nodes] = end[:n_nodes]
            centers = nc
            halfs = nh
            child = nk
            start = ns
            end = ne

        base = n_nodes
        child[node] = base
        h2 = halfs[node] * 0.5
        for o in range(8):
            k = base + o
            centers[k, 0] = cx + h2 if (o & 4) != 0 else cx - h2
            centers[k, 1] = cy + h2 if (o & 2) != 0 else cy - h2
            centers[k, 2] = cz + h2 if (o & 1) != 0 else cz - h2
            halfs[k] = h2
            child[k] = _NO_CHILD
            start[k] = s + offs[o]
            end[k] = s + offs[o + 1]
        n_nodes += 8

        if sp + 8 > stack_node.shape[0]:
            new_cap = stack_node.shape[0] * 2
            nsn = np.empty(new_cap, np.int64)
            nsd = np.empty(new_cap, np.int64)
            nsn[:sp] = stack_node[:sp]
            nsd[:sp] = stack_depth[:sp]
            stack_node = nsn
            stack_depth = nsd
        for o in range(8):
            k = base + o
            if end[k] - start[k] > leaf_capacity:
                stack_node[sp] = k
                stack_depth[sp] = depth + 1
                sp += 1

    return (
        centers[:n_nodes].copy(),
        halfs[:n_nodes].copy(),
        child[:n_nodes].copy(),
        start[:n_nodes].copy(),
        end[:n_nodes].copy(),
    )


@njit(cache=True, nogil=True)
def _range_query_kernel(centers, halfs, child, start, end, perm,
                        x, y, z, qx, qy, qz, radius, pad, exclude,
                        out_index, out_dist2, stack):
    # Returns the candidate count, -1 if the output buffers are too small,
    # -2 if the traversal stack is too small (callers grow and retry).
    r2 = radius * radius
    rp = radius + pad
    rp2 = rp * rp
    count = 0
    stack[0] = 0
    sp = 1
    while sp > 0:
        sp -= 1
        node = stack[sp]
        dx = abs(qx - centers[node, 0]) - halfs[node]
        if dx < 0.0:
            dx = 0.0
        dy = abs(qy - centers[node, 1]) - halfs[node]
        if dy < 0.0:
            dy = 0.0
        dz = abs(qz - centers[node, 2]) - halfs[node]
        if dz < 0.0:
            dz = 0.0
        if dx * dx + dy * dy + dz * dz > rp2:
            continue
        c = child[node]
        if c == _NO_CHILD:
            for t in range(start[node], end[node]):
                j = perm[t]
                if j == exclude:
                    continue
                ddx = x[j] - qx
                ddy = y[j] - qy
                ddz = z[j] - qz
                d2 = ddx * ddx + ddy * ddy + ddz * ddz
                if d2 <= r2:
                    if count >= out_index.shape[0]:
                        return -1
                    out_index[count] = j
                    out_dist2[count] = d2
                    count += 1
        else:
            if sp + 8 > stack.shape[0]:
                return -2
            for o in range(8):
                stack[sp] = c + o
                sp += 1
    return count


@dataclass(frozen=True)
class TreeNode:
    """Read-only view of one node of the flat array."""

    center: np.ndarray
    half_extent: float
    child_base: int
    particle_range: tuple[int, int]

    @property
    def is_leaf(self) -> bool:
        return self.child_base == _NO_CHILD


@dataclass
class Octree:
    node_center: np.ndarray
    node_half: np.ndarray
    node_child: np.ndarray
    node_start: np.ndarray
    node_end: np.ndarray
    particle_perm: np.ndarray
    root_extent: float
    leaf_capacity: int
    query_pad: float
    x: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    z: np.ndarray = field(repr=False)

    @property
    def n_nodes(self) -> int:
        return self.node_child.shape[0]

    @property
    def n_particles(self) -> int:
        return self.particle_perm.shape[0]

    def node(self, i: int) -> TreeNode:
        return TreeNode(
            center=self.node_center[i].copy(),
            half_extent=float(self.node_half[i]),
            child_base=int(self.node_child[i]),
            particle_range=(int(self.node_start[i]), int(self.node_end[i])),
        )


class QueryWorkspace:
    """Reusable per-worker buffers so queries allocate nothing in steady state."""

    def __init__(self, capacity: int = 2048):
        self.index = np.empty(capacity, dtype=np.int64)
        self.dist2 = np.empty(capacity, dtype=np.float64)
        self.stack = np.empty(4096, dtype=np.int64)

    def grow(self) -> None:
        cap = 2 * self.index.shape[0]
        self.index = np.empty(cap, dtype=np.int64)
        self.dist2 = np.empty(cap, dtype=np.float64)


def _as_xyz(positions) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if isinstance(positions, (tuple, list)) and len(positions) == 3:
        x, y, z = (np.asarray(a, dtype=np.float64) for a in positions)
        if not (x.ndim == y.ndim == z.ndim == 1 and x.shape == y.shape == z.shape):
            raise ValueError("x, y, z must be 1-D arrays of equal length")
        return x, y, z
    pos = np.asarray(positions, dtype=np.float64)
    if pos.ndim != 2 or pos.shape[1] != 3:
        raise ValueError(f"expected an (N, 3) position array, got shape {pos.shape}")
    return (
        np.ascontiguousarray(pos[:, 0]),
        np.ascontiguousarray(pos[:, 1]),
        np.ascontiguousarray(pos[:, 2]),
    )


def build_octree(positions, leaf_capacity: int = DEFAULT_LEAF_CAPACITY,
                 max_depth: int = MAX_TREE_DEPTH) -> Octree:
    """Build the tree over particle positions.

    ``positions`` is an (N, 3) array or a tuple of three 1-D coordinate
    arrays (which may be strided views into a structured record array; they
    are used in place, not copied). The build is single-threaded and
    deterministic; the returned tree is immutable and safe for concurrent
    queries.
    """
    if leaf_capacity < 1:
        raise ValueError(f"leaf_capacity must be >= 1, got {leaf_capacity}")
    x, y, z = _as_xyz(positions)
    n = x.shape[0]
    if n and not (np.isfinite(x).all() and np.isfinite(y).all()
                  and np.isfinite(z).all()):
        raise ValueError("positions must be finite")

    if n:
        lo = np.array([x.min(), y.min(), z.min()])
        hi = np.array([x.max(), y.max(), z.max()])
        center = 0.5 * (lo + hi)
        half = float(np.max(hi - lo)) * 0.5
        max_abs = float(np.max(np.abs(np.concatenate([lo, hi]))))
    else:
        center = np.zeros(3)
        half = 0.0
        max_abs = 0.0
    # one rounding step separates a stored child center from its exact octant
    # boundary; the pad dominates it by a wide margin
    pad = 8.0 * np.finfo(np.float64).eps * (max_abs + half)

    perm = np.arange(n, dtype=np.int64)
    centers, halfs, child, start, end = _build_kernel(
        x, y, z, perm, leaf_capacity, max_depth,
        center[0], center[1], center[2], half,
    )
    return Octree(
        node_center=centers, node_half=halfs, node_child=child,
        node_start=start, node_end=end, particle_perm=perm,
        root_extent=2.0 * half, leaf_capacity=leaf_capacity,
        query_pad=pad, x=x, y=y, z=z,
    )


def range_query(tree: Octree, center, radius: float,
                workspace: QueryWorkspace | None = None,
                exclude: int = -1) -> tuple[np.ndarray, np.ndarray]:
    """Find all particles with |r - center| <= radius.

    Returns (indices, squared distances) as views into the workspace, valid
    until the next query through the same workspace. ``exclude`` drops one
    particle index from the result (the querying particle itself).
    """
    if radius < 0.0:
        raise ValueError(f"radius must be non-negative, got {radius}")
    if workspace is None:
        workspace = QueryWorkspace()
    qx, qy, qz = (float(c) for c in center)
    while True:
        count = _range_query_kernel(
            tree.node_center, tree.node_half, tree.node_child,
            tree.node_start, tree.node_end, tree.particle_perm,
            tree.x, tree.y, tree.z, qx, qy, qz,
            float(radius), tree.query_pad, exclude,
            workspace.index, workspace.dist2, workspace.stack,
        )
        if count == -1:
            workspace.grow()
        elif count == -2:
            workspace.stack = np.empty(2 * workspace.stack.shape[0],
                                       dtype=np.int64)
        else:
            return workspace.index[:count], workspace.dist2[:count]


def validate_tree(tree: Octree) -> list[str]:
    """Walk the whole tree and report structural violations as strings.

    Checks the permutation, leaf-partition, child-nesting, and point
    containment invariants; an empty list means the tree is valid.
    Geometric checks allow the same rounding pad used by queries.
    """
    report: list[str] = []
    n = tree.n_particles
    tol = 4.0 * tree.query_pad

    perm_sorted = np.sort(tree.particle_perm)
    if not np.array_equal(perm_sorted, np.arange(n, dtype=np.int64)):
        report.append("particle_perm is not a permutation of 0..N-1")

    leaves = np.flatnonzero(tree.node_child == _NO_CHILD)
    spans = sorted(
        (int(tree.node_start[i]), int(tree.node_end[i])) for i in leaves
    )
    cursor = 0
    for s, e in spans:
        if s != cursor:
            report.append(
                f"leaf ranges do not tile the permutation at offset {cursor}"
            )
            break
        cursor = e
    else:
        if cursor != n:
            report.append(f"leaf ranges cover {cursor} of {n} particles")

    for i in range(tree.n_nodes):
        c = int(tree.node_child[i])
        if c == _NO_CHILD:
            continue
        if c < 1 or c + 8 > tree.n_nodes:
            report.append(f"node {i}: child_base {c} out of bounds")
            continue
        s, e = int(tree.node_start[i]), int(tree.node_end[i])
        if int(tree.node_start[c]) != s or int(tree.node_end[c + 7]) != e:
            report.append(f"node {i}: children do not span the parent range")
        for o in range(8):
            k = c + o
            if o and int(tree.node_start[k]) != int(tree.node_end[k - 1]):
                report.append(f"node {i}: child ranges are not contiguous")
                break
            if (np.abs(tree.node_center[k] - tree.node_center[i]).max()
                    > tree.node_half[i] + tol):
                report.append(f"node {i}: child {k} cube escapes the parent")
                break

    for i in leaves:
        s, e = int(tree.node_start[i]), int(tree.node_end[i])
        idx = tree.particle_perm[s:e]
        if idx.size == 0:
            continue
        if idx.max() >= n or idx.min() < 0:
            report.append(f"leaf {i}: particle index out of range")
            continue
        for ax, coords in enumerate((tree.x, tree.y, tree.z)):
            dev = np.abs(coords[idx] - tree.node_center[i, ax])
            if dev.max() > tree.node_half[i] + tol:
                report.append(f"leaf {i}: particle outside cube on axis {ax}")
                break

    return report
