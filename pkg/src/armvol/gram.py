"""The Gram-determinant picture for 3-edge arms.

With edge lengths (a, b, c) fixed, the pairwise inner products
x = edge2.edge3, y = edge1.edge3, z = edge1.edge2 determine the Gram matrix

    [[a^2, z,   y  ],
     [z,   b^2, x  ],
     [y,   x,   c^2]],

whose determinant expands to the cubic

    det G = 2xyz - a^2 x^2 - b^2 y^2 - c^2 z^2 + a^2 b^2 c^2

and equals the squared signed volume of the arm.  Admissible points live in
the box |x| <= bc, |y| <= ac, |z| <= ab.  This module evaluates the
polynomial, its gradient and Hessian, enumerates its five critical points,
converts configurations to Gram points and back (PSD reconstruction), and
extracts level-set meshes of the determinant inside the box.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from skimage import measure

from .geometry import ArmConfiguration, Mode, signed_volume

#: reconstruction accepts smallest eigenvalue >= -PSD_TOL_FACTOR * trace
PSD_TOL_FACTOR = 1e-8


@dataclass(frozen=True)
class GramPoint:
    """Off-diagonal Gram entries (x, y, z) for edge lengths (a, b, c)."""

    x: float
    y: float
    z: float
    a: float = 1.0
    b: float = 1.0
    c: float = 1.0

    def __post_init__(self) -> None:
        vals = (self.x, self.y, self.z, self.a, self.b, self.c)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError("GramPoint entries must be finite")
        if min(self.a, self.b, self.c) <= 0.0:
            raise ValueError("edge lengths must be positive")

    @property
    def box_bounds(self) -> tuple[float, float, float]:
        """Half-widths (bc, ac, ab) of the admissible box."""
        return (self.b * self.c, self.a * self.c, self.a * self.b)

    @property
    def in_box(self) -> bool:
        bx, by, bz = self.box_bounds
        return abs(self.x) <= bx and abs(self.y) <= by and abs(self.z) <= bz

    @property
    def matrix(self) -> np.ndarray:
        return np.array([
            [self.a ** 2, self.z, self.y],
            [self.z, self.b ** 2, self.x],
            [self.y, self.x, self.c ** 2],
        ])

    def mirrored(self) -> "GramPoint":
        return replace(self, x=-self.x, y=-self.y, z=-self.z)


def gram_det(pt: GramPoint) -> float:
    """The cubic 2xyz - a^2 x^2 - b^2 y^2 - c^2 z^2 + a^2 b^2 c^2."""
    return gram_det_values(pt.a, pt.b, pt.c, pt.x, pt.y, pt.z)


def gram_det_values(a: float, b: float, c: float, x, y, z):
    """Array-friendly evaluation of the determinant polynomial."""
    return (2.0 * x * y * z - a * a * x * x - b * b * y * y - c * c * z * z
            + a * a * b * b * c * c)


def gram_gradient(pt: GramPoint) -> np.ndarray:
    """Gradient (2(yz - a^2 x), 2(xz - b^2 y), 2(xy - c^2 z))."""
    x, y, z = pt.x, pt.y, pt.z
    return np.array([
        2.0 * (y * z - pt.a ** 2 * x),
        2.0 * (x * z - pt.b ** 2 * y),
        2.0 * (x * y - pt.c ** 2 * z),
    ])


def gram_hessian(pt: GramPoint) -> np.ndarray:
    """Second-derivative matrix of the determinant polynomial.

    Diagonal (-2a^2, -2b^2, -2c^2); off-diagonals (2z, 2y, 2x) in the
    symmetric slots mixing (x,y), (x,z), (y,z) respectively.
    """
    return np.array([
        [-2.0 * pt.a ** 2, 2.0 * pt.z, 2.0 * pt.y],
        [2.0 * pt.z, -2.0 * pt.b ** 2, 2.0 * pt.x],
        [2.0 * pt.y, 2.0 * pt.x, -2.0 * pt.c ** 2],
    ])


def reflection_identity_residual(pt: GramPoint) -> float:
    """Relative residual of det(H/2)(x,y,z) = -det G(-x,-y,-z).

    H is the Hessian above; halving removes the factor 2**3 that double
    differentiation puts in front of the identity.
    """
    lhs = float(np.linalg.det(gram_hessian(pt))) / 8.0
    rhs = -gram_det(pt.mirrored())
    return abs(lhs - rhs) / (1.0 + abs(rhs))


@dataclass(frozen=True)
class GramCriticalPoint:
    point: GramPoint
    value: float
    morse_index: int


def gram_critical_points(a: float, b: float, c: float) -> list[GramCriticalPoint]:
    """The five critical points of the determinant polynomial.

    The origin (value a^2 b^2 c^2) plus the four box corners with an even
    number of negative signs (value 0).  Gradients vanish in closed form;
    the Morse index of each point is computed from the Hessian spectrum.
    """
    if min(a, b, c) <= 0.0:
        raise ValueError("edge lengths must be positive")
    corners = [(1, 1, 1), (-1, 1, -1), (-1, -1, 1), (1, -1, -1)]
    points = [GramPoint(0.0, 0.0, 0.0, a, b, c)]
    points += [GramPoint(sx * b * c, sy * a * c, sz * a * b, a, b, c)
               for sx, sy, sz in corners]
    out = []
    for pt in points:
        eigs = np.linalg.eigvalsh(gram_hessian(pt))
        out.append(GramCriticalPoint(point=pt, value=gram_det(pt),
                                     morse_index=int(np.sum(eigs < 0.0))))
    return out


def gram_from_config(cfg: ArmConfiguration) -> GramPoint:
    """Off-diagonal inner products of a 3-edge arm's edge vectors."""
    if cfg.n != 3:
        raise ValueError("the Gram picture is implemented for 3-edge arms")
    e = cfg.edges
    return GramPoint(x=float(e[1] @ e[2]), y=float(e[0] @ e[2]),
                     z=float(e[0] @ e[1]),
                     a=float(cfg.lengths[0]), b=float(cfg.lengths[1]),
                     c=float(cfg.lengths[2]))


def reconstruct_from_gram(pt: GramPoint, mirror: bool = False) -> ArmConfiguration:
    """Recover a 3-edge arm whose Gram point is ``pt``.

    The Gram matrix must be positive semidefinite within tolerance
    (smallest eigenvalue >= -1e-8 * trace); otherwise ValueError.  The
    result is in REDUCED mode with non-negative signed volume; set
    ``mirror`` for the opposite-orientation branch (same Gram point, the
    reconstruction is unique only up to isometry).
    """
    G = pt.matrix
    eigs, Q = np.linalg.eigh(G)
    trace = float(np.trace(G))
    if eigs[0] < -PSD_TOL_FACTOR * trace:
        raise ValueError(f"Gram matrix is indefinite: min eigenvalue "
                         f"{eigs[0]:.3e} < {-PSD_TOL_FACTOR * trace:.3e}")
    root = np.sqrt(np.clip(eigs, 0.0, None))
    B = root[:, None] * Q.T
    if np.linalg.det(B) < 0.0:
        B[0] *= -1.0
    edges = B.T
    lengths = np.array([pt.a, pt.b, pt.c])
    dirs = edges / lengths[:, None]
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    # rotate the first direction onto (1,0,0)
    u1 = dirs[0]
    pick = int(np.argmin(np.abs(u1)))
    e = np.zeros(3)
    e[pick] = 1.0
    r2 = e - (e @ u1) * u1
    r2 /= np.linalg.norm(r2)
    r3 = np.cross(u1, r2)
    rot = np.vstack((u1, r2, r3))
    dirs = dirs @ rot.T
    if mirror:
        dirs = dirs * np.array([1.0, 1.0, -1.0])
    return ArmConfiguration(lengths, dirs, Mode.REDUCED)


def cosine_rule_convert(pt: GramPoint) -> np.ndarray:
    """Squared chord lengths |edge_i - edge_j|^2 via the cosine rule.

    Returns (b^2 + c^2 - 2x, a^2 + c^2 - 2y, a^2 + b^2 - 2z), the squared
    distances between edge tips for the pairs (2,3), (1,3), (1,2).  All are
    non-negative (within rounding) on the admissible box.
    """
    a2, b2, c2 = pt.a ** 2, pt.b ** 2, pt.c ** 2
    return np.array([b2 + c2 - 2.0 * pt.x,
                     a2 + c2 - 2.0 * pt.y,
                     a2 + b2 - 2.0 * pt.z])


@dataclass(frozen=True)
class TriangleMesh:
    """Indexed triangle mesh; vertices (m, 3) float, triangles (k, 3) int."""

    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self) -> None:
        verts = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        tris = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if len(tris) and (tris.min() < 0 or tris.max() >= len(verts)):
            raise ValueError("triangle indices out of range")
        verts.setflags(write=False)
        tris.setflags(write=False)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "triangles", tris)

    @property
    def is_empty(self) -> bool:
        return len(self.triangles) == 0


def _empty_mesh() -> TriangleMesh:
    return TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))


def extract_isosurface(a: float, b: float, c: float, level: float = 0.0,
                       resolution: int = 64) -> TriangleMesh:
    """Marching-cubes mesh of {det G = level} inside the open admissible box.

    The determinant is sampled on a (resolution+1)^3 grid over the closed
    box; triangles touching the box boundary are clipped away (the zero
    level meets the boundary only at the four corner critical points) and
    degenerate triangles are dropped.  Returns an empty mesh when the level
    is outside the range of the determinant over the box.
    """
    if resolution < 8:
        raise ValueError("resolution must be at least 8")
    if min(a, b, c) <= 0.0:
        raise ValueError("edge lengths must be positive")
    half = np.array([b * c, a * c, a * b])
    axes = [np.linspace(-h, h, resolution + 1) for h in half]
    X, Y, Z = np.meshgrid(*axes, indexing="ij")
    F = gram_det_values(a, b, c, X, Y, Z)
    if not (F.min() <= level <= F.max()):
        return _empty_mesh()
    spacing = tuple(2.0 * h / resolution for h in half)
    try:
        verts, faces, _, _ = measure.marching_cubes(F, level=level, spacing=spacing)
    except (ValueError, RuntimeError):
        return _empty_mesh()
    verts = verts.astype(float) - half[None, :]
    # clip to the open box
    margin = 1e-12 * half
    inside = np.all(np.abs(verts) < (half - margin)[None, :], axis=1)
    keep = inside[faces].all(axis=1)
    faces = faces[keep]
    if len(faces) == 0:
        return _empty_mesh()
    # drop zero-area triangles
    p0, p1, p2 = (verts[faces[:, i]] for i in range(3))
    area2 = np.linalg.norm(np.cross(p1 - p0, p2 - p0), axis=1)
    faces = faces[area2 > 2e-14 * float(half.max()) ** 2]
    if len(faces) == 0:
        return _empty_mesh()
    used = np.unique(faces)
    remap = np.full(len(verts), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    return TriangleMesh(verts[used], remap[faces])


def write_obj(mesh: TriangleMesh, stream) -> None:
    """Write a Wavefront OBJ: 'v x y z' then 1-based 'f i j k' lines.

    Coordinates are printed with 9 significant digits; accepts a path or a
    text stream.
    """
    if isinstance(stream, (str, bytes)):
        with open(stream, "w", encoding="ascii") as handle:
            write_obj(mesh, handle)
        return
    for v in mesh.vertices:
        stream.write(f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}\n")
    for t in mesh.triangles:
        stream.write(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}\n")


def roundtrip_residual(cfg: ArmConfiguration) -> float:
    """|det G - V^2| / (1 + V^2) for a 3-edge arm."""
    v = signed_volume(cfg)
    d = gram_det(gram_from_config(cfg))
    return abs(d - v * v) / (1.0 + v * v)
