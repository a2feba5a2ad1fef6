"""Numerical kernels for open polygonal arms in 3-space.

An arm is a list of positive edge lengths together with unit direction
vectors; edge vectors are ``edges[i] = lengths[i] * directions[i]`` and the
joints sit at the partial sums.  The module provides the scalar functionals
everything else is built on: the planar signed (shoelace) area, the signed
volume of a spatial arm, the projected-area functional for an arbitrary
projection direction, and the orthogonal decomposition of an arm along an
axis.

All functions are pure and safe for unrestricted concurrent use.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])

#: directions whose norm deviates from 1 by more than this are input errors
UNIT_SNAP_TOL = 1e-9
#: post-construction guarantee on direction norms
UNIT_TOL = 1e-12


class Mode(enum.Enum):
    """Parameter-space convention for an arm configuration.

    FULL      all joints beyond the first move on the full 2-sphere; the
              first direction is held fixed as given.
    REDUCED   same sphere product, but the first direction is pinned to
              (1,0,0) exactly; rotation about that axis is a residual
              symmetry (see ``search.canonicalize``).
    PLANE_B   3-edge arms only: first direction (1,0,0), second direction
              confined to the xy-plane (a circle-times-sphere parameter
              space).
    """

    FULL = "full"
    REDUCED = "reduced"
    PLANE_B = "plane_b"


def _validated_directions(directions: np.ndarray, mode: Mode) -> np.ndarray:
    dirs = np.array(directions, dtype=float)
    if dirs.ndim != 2 or dirs.shape[1] != 3:
        raise ValueError(f"directions must have shape (n, 3), got {dirs.shape}")
    if not np.all(np.isfinite(dirs)):
        raise ValueError("directions contain non-finite entries")
    norms = np.linalg.norm(dirs, axis=1)
    if np.any(np.abs(norms - 1.0) > UNIT_SNAP_TOL):
        worst = float(np.abs(norms - 1.0).max())
        raise ValueError(f"directions deviate from unit length by {worst:.3e} "
                         f"(limit {UNIT_SNAP_TOL:.0e})")
    if mode in (Mode.REDUCED, Mode.PLANE_B):
        if np.linalg.norm(dirs[0] - E1) > UNIT_SNAP_TOL:
            raise ValueError(f"{mode.value} mode requires the first direction "
                             f"to be (1, 0, 0), got {dirs[0]}")
        dirs[0] = E1
    if mode is Mode.PLANE_B:
        if len(dirs) != 3:
            raise ValueError("plane_b mode is defined for 3-edge arms only")
        if abs(dirs[1, 2]) > UNIT_SNAP_TOL:
            raise ValueError("plane_b mode requires the second direction to "
                             f"lie in the xy-plane, got z = {dirs[1, 2]:.3e}")
        dirs[1, 2] = 0.0
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    dirs.setflags(write=False)
    return dirs


@dataclass(frozen=True)
class ArmConfiguration:
    """An open polygonal arm: edge lengths plus unit edge directions.

    Directions within 1e-9 of unit length are renormalized on construction;
    larger deviations raise ``ValueError``.  Instances are immutable; the
    stored arrays are read-only.
    """

    lengths: np.ndarray
    directions: np.ndarray
    mode: Mode = Mode.REDUCED

    def __post_init__(self) -> None:
        lens = np.array(self.lengths, dtype=float)
        if lens.ndim != 1 or lens.size < 2:
            raise ValueError("an arm needs at least two edges")
        if not np.all(np.isfinite(lens)) or np.any(lens <= 0.0):
            raise ValueError("edge lengths must be finite and positive")
        lens.setflags(write=False)
        dirs = _validated_directions(self.directions, self.mode)
        if len(dirs) != lens.size:
            raise ValueError(f"{lens.size} lengths but {len(dirs)} directions")
        object.__setattr__(self, "lengths", lens)
        object.__setattr__(self, "directions", dirs)

    @property
    def n(self) -> int:
        return int(self.lengths.size)

    @property
    def edges(self) -> np.ndarray:
        """Edge vectors, shape (n, 3)."""
        return self.lengths[:, None] * self.directions

    @property
    def vertices(self) -> np.ndarray:
        """Joint positions including the origin, shape (n+1, 3)."""
        out = np.zeros((self.n + 1, 3))
        np.cumsum(self.edges, axis=0, out=out[1:])
        return out

    @property
    def total_length(self) -> float:
        """Sum of edge lengths; the length scale used in tolerances."""
        return float(self.lengths.sum())

    def with_directions(self, directions: np.ndarray) -> "ArmConfiguration":
        """Same lengths and mode, new directions (revalidated)."""
        return ArmConfiguration(self.lengths, directions, self.mode)


def triple_product(u, v, w) -> float:
    """Determinant of the 3x3 matrix with rows u, v, w."""
    u = np.asarray(u, dtype=float)
    return float(np.dot(u, np.cross(v, w)))


def signed_area(vertices, closed: bool = False) -> float:
    """Signed (shoelace) area of a planar chain.

    The cyclic closing term is always included, so an open chain is measured
    as the polygon obtained by joining its last vertex back to its first.
    The ``closed`` flag only documents intent; a closed polygon may be passed
    either with or without a repeated final vertex (the extra term is zero).

    Returns the area A; the plain shoelace sum equals 2A.
    """
    pts = np.asarray(vertices, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
        raise ValueError(f"expected (m, 2) vertex array with m >= 2, got {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("vertices contain non-finite entries")
    nxt = np.roll(pts, -1, axis=0)
    twice = float(np.sum(pts[:, 0] * nxt[:, 1] - nxt[:, 0] * pts[:, 1]))
    return 0.5 * twice


def signed_volume_many(lengths: np.ndarray, directions: np.ndarray) -> np.ndarray:
    """Signed volume for a stack of configurations sharing one length vector.

    ``directions`` has shape (m, n, 3); returns shape (m,).  This is the hot
    kernel behind finite-difference Hessians and the multistart search.
    """
    edges = np.asarray(lengths, dtype=float)[None, :, None] * directions
    partial = np.cumsum(edges, axis=1)
    wedge = np.cross(partial[:, :-1], partial[:, 1:])
    return np.einsum("mkj,mj->m", wedge, edges[:, 0])


def signed_volume(cfg: ArmConfiguration) -> float:
    """Signed volume of the arm.

    Defined as the sum over consecutive partial sums ``c_k`` of the triple
    products ``det[first edge, c_k, c_{k+1}]``.  For a 3-edge arm this equals
    the triple product of the three edge vectors.  Antisymmetric under
    mirror reflection; cubically homogeneous in the lengths.
    """
    if cfg.n < 3:
        raise ValueError("signed volume needs at least three edges")
    return float(signed_volume_many(cfg.lengths, cfg.directions[None])[0])


def projected_area(p, cfg: ArmConfiguration) -> float:
    """Signed area swept by the arm in the plane orthogonal to ``p``.

    Computed as the signed volume of the (n+1)-edge arm obtained by
    prepending ``p`` to the edge list, which is the same arithmetic path, so
    the identity between the two functionals is exact.
    """
    p = np.asarray(p, dtype=float)
    norm = np.linalg.norm(p)
    if not np.isfinite(norm) or norm == 0.0:
        raise ValueError("projection vector must be nonzero and finite")
    if cfg.n < 2:
        raise ValueError("projected area needs at least two edges")
    lengths = np.concatenate(([norm], cfg.lengths))
    directions = np.vstack((p / norm, cfg.directions))
    return float(signed_volume_many(lengths, directions[None])[0])


def plane_basis(axis) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic orthonormal basis of the plane orthogonal to ``axis``.

    For ``axis`` parallel to (1,0,0) the basis is ((0,1,0), (0,0,1)).  In
    general the first basis vector is built by Gram-Schmidt from the
    coordinate axis least aligned with ``axis`` (ties broken by coordinate
    index) and the second completes a right-handed frame.
    """
    a = np.asarray(axis, dtype=float)
    norm = np.linalg.norm(a)
    if not np.isfinite(norm) or norm == 0.0:
        raise ValueError("axis must be nonzero and finite")
    a = a / norm
    pick = int(np.argmin(np.abs(a)))
    e = np.zeros(3)
    e[pick] = 1.0
    v1 = e - np.dot(e, a) * a
    v1 /= np.linalg.norm(v1)
    v2 = np.cross(a, v1)
    return v1, v2


def project_perp(cfg: ArmConfiguration, axis) -> np.ndarray:
    """Project the arm beyond its first edge onto the plane orthogonal to ``axis``.

    Returns the planar chain of partial sums of the components of edges
    2..n orthogonal to ``axis``, expressed in the ``plane_basis`` frame,
    shape (n, 2).  The first vertex is the origin (the tip of the first
    edge projects there when ``axis`` is the first edge itself).
    """
    v1, v2 = plane_basis(axis)
    tail = cfg.edges[1:]
    coords = np.column_stack((tail @ v1, tail @ v2))
    out = np.zeros((cfg.n, 2))
    np.cumsum(coords, axis=0, out=out[1:])
    return out
