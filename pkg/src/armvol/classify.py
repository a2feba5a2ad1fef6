"""Structure classification of critical arm configurations.

At a critical configuration every joint r = 2..n satisfies exactly one of
two first-order conditions: *ortho* (edge r perpendicular to the first edge
and to the partial-sum difference d_r) or *parallel* (d_r parallel to the
first edge).  Projecting along the first edge, the ortho edges trace chords
of a circle through all projected vertices while each parallel edge jumps
between antipodal points of that circle.  The classifier labels a critical
point as

    FULL_ORTHO       every joint ortho: the projected chain is diacyclic
                     (all vertices on a circle whose diameter is the segment
                     from the first projected vertex to the last),
    ALIGNED          every joint parallel with vanishing perpendicular
                     components (the arm lies on a line),
    ZIGZAG_FAMILY    every joint parallel with non-vanishing perpendicular
                     components (consecutive components cancel; a 1-parameter
                     family),
    MIXED(k)         otherwise; virtually permuting the parallel joints last
                     (licensed by the mirror symmetry of the functional),
                     joints 2..k are ortho and k+1..n parallel.

For MIXED records the ortho sub-chain, unfolded by the parity of preceding
parallel joints, must close up when n-k is odd (*closing condition*) or span
a diameter when n-k is even (*diameter condition*).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .geometry import ArmConfiguration, plane_basis, project_perp
from .variational import condition_residuals

#: joints with parallel residual above 10x the tolerance and tangent
#: gradient below it are ortho; below the tolerance parallel; in between is
#: a dead zone flagged ambiguous
ORTHO_CLEARANCE = 10.0


class JointFlag(enum.Enum):
    ORTHO = "ortho"
    PARALLEL = "parallel"
    AMBIGUOUS = "ambiguous"


class Label(enum.Enum):
    FULL_ORTHO = "full_ortho"
    ALIGNED = "aligned"
    ZIGZAG_FAMILY = "zigzag_family"
    MIXED = "mixed"


class PlanarSubtype(enum.Enum):
    CYCLIC_CLOSED = "cyclic_closed"
    DIACYCLIC = "diacyclic"


class CircleFitError(ValueError):
    """Raised when no finite circle fits the points (collinear input)."""


@dataclass(frozen=True)
class CircleFit:
    """Algebraic circle fit: center, radius, and RMS radial residual."""

    center: np.ndarray
    radius: float
    rms: float


@dataclass(frozen=True)
class Verdict:
    ok: bool
    residual: float


@dataclass(frozen=True)
class ClassificationReport:
    """Per-joint condition pattern plus the structure-theorem verdicts."""

    pattern: tuple[JointFlag, ...]
    label: Label
    split: int | None
    ambiguous: bool
    circle: CircleFit | None
    closing: Verdict | None
    diameter: Verdict | None
    zigzag: Verdict | None
    planar_subtype: PlanarSubtype | None


def fit_circle(points) -> CircleFit:
    """Taubin-style algebraic least-squares circle through planar points.

    Exact (to rounding) for points lying on a true circle.  Collinear input
    has no finite fit and raises CircleFitError.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
        raise ValueError("circle fit needs at least three planar points")
    centroid = pts.mean(axis=0)
    xy = pts - centroid
    spread = np.linalg.norm(xy, axis=1).max()
    if spread == 0.0:
        raise CircleFitError("all points coincide")
    sing = np.linalg.svd(xy, compute_uv=False)
    if sing[-1] <= 1e-12 * sing[0]:
        raise CircleFitError("points are collinear; radius is infinite")
    zsq = (xy ** 2).sum(axis=1)
    zmean = zsq.mean()
    z0 = (zsq - zmean) / (2.0 * np.sqrt(zmean))
    design = np.column_stack((z0, xy))
    _, _, vt = np.linalg.svd(design, full_matrices=False)
    coef = vt[2].copy()
    coef[0] /= 2.0 * np.sqrt(zmean)
    const = -zmean * coef[0]
    if abs(coef[0]) <= 1e-14 * np.linalg.norm(coef[1:]) / max(spread, 1e-300):
        raise CircleFitError("points are collinear; radius is infinite")
    center = -coef[1:] / (2.0 * coef[0]) + centroid
    radius = float(np.sqrt(coef[1] ** 2 + coef[2] ** 2 - 4.0 * coef[0] * const)
                   / abs(coef[0]) / 2.0)
    rms = float(np.sqrt(np.mean((np.linalg.norm(pts - center, axis=1) - radius) ** 2)))
    return CircleFit(center=center, radius=radius, rms=rms)


@dataclass(frozen=True)
class ChainCheck:
    """Circle-based verdict on a planar chain with its residuals.

    Residuals are relative: ``rms`` to the fitted radius, the others to the
    fitted diameter.
    """

    ok: bool
    circle: CircleFit
    rms_residual: float
    closure_residual: float | None = None
    span_residual: float | None = None
    midpoint_residual: float | None = None


def check_diacyclic(chain, tol: float) -> ChainCheck:
    """Do the chain's vertices lie on a circle with first-to-last a diameter?

    Fits a circle to all vertices, then requires the endpoint separation to
    match the diameter and the endpoint midpoint to match the center, all
    within ``tol`` relative to the diameter.
    """
    pts = np.asarray(chain, dtype=float)
    if len(pts) < 3:
        raise ValueError("diacyclic check needs at least three vertices")
    circle = fit_circle(pts)
    d = 2.0 * circle.radius
    span = float(np.linalg.norm(pts[-1] - pts[0]))
    mid = 0.5 * (pts[0] + pts[-1])
    span_res = abs(span - d) / d
    mid_res = float(np.linalg.norm(mid - circle.center)) / d
    rms_res = circle.rms / circle.radius
    ok = span_res <= tol and mid_res <= tol and rms_res <= tol
    return ChainCheck(ok=ok, circle=circle, rms_residual=rms_res,
                      span_residual=span_res, midpoint_residual=mid_res)


def check_cyclic_closed(chain, tol: float) -> ChainCheck:
    """Is the chain a closed traversal of a cyclic polygon?

    The chain must end where it started (closure within ``tol`` times the
    chain's total edge length) with all vertices on the fitted circle.
    """
    pts = np.asarray(chain, dtype=float)
    if len(pts) < 3:
        raise ValueError("cyclic check needs at least three vertices")
    circle = fit_circle(pts)
    perimeter = float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())
    closure = float(np.linalg.norm(pts[-1] - pts[0])) / max(perimeter, 1e-300)
    rms_res = circle.rms / circle.radius
    ok = closure <= tol and rms_res <= tol
    return ChainCheck(ok=ok, circle=circle, rms_residual=rms_res,
                      closure_residual=closure)


@dataclass(frozen=True)
class ZigzagCheck:
    """Alternation verdict for the tail of an arm.

    ``direction`` is the common projected interval direction in the plane
    orthogonal to the first edge (None when all components vanish, the
    degenerate aligned case, which still counts as a zigzag).
    """

    ok: bool
    residual: float
    direction: np.ndarray | None
    lengths_ok: bool


def detect_zigzag(cfg: ArmConfiguration, from_index: int, tol: float,
                  circle_radius: float | None = None) -> ZigzagCheck:
    """Check that edges ``from_index``..n project to one alternating interval.

    Consecutive perpendicular components (relative to the first edge) must
    cancel pairwise: perp_r + perp_{r+1} = 0 within ``tol`` times the total
    length, for r = from_index..n-1.  When ``circle_radius`` is given, every
    involved edge must be at least that long (the interval spans a diameter
    of the critical circle).
    """
    if not 2 <= from_index <= cfg.n:
        raise ValueError(f"from_index must be in 2..{cfg.n}")
    scale = cfg.total_length
    v1, v2 = plane_basis(cfg.directions[0])
    tail = cfg.edges[from_index - 1:]
    perp = np.column_stack((tail @ v1, tail @ v2))
    if len(perp) >= 2:
        residual = float(np.linalg.norm(perp[:-1] + perp[1:], axis=1).max()) / scale
    else:
        residual = 0.0
    norms = np.linalg.norm(perp, axis=1)
    direction = None
    if norms.max() > tol * scale:
        direction = perp[int(np.argmax(norms))] / norms.max()
    lengths_ok = True
    if circle_radius is not None:
        lengths_ok = bool(cfg.lengths[from_index - 1:].min()
                          >= circle_radius * (1.0 - tol))
    return ZigzagCheck(ok=residual <= tol and lengths_ok, residual=residual,
                       direction=direction, lengths_ok=lengths_ok)


def _pattern(cfg: ArmConfiguration, tol: float) -> tuple[tuple[JointFlag, ...], float]:
    res = condition_residuals(cfg)
    scale = cfg.total_length
    flags = []
    for o, p in zip(res.ortho, res.parallel):
        if p <= tol * scale:
            flags.append(JointFlag.PARALLEL)
        elif p > ORTHO_CLEARANCE * tol * scale and o <= tol * scale:
            flags.append(JointFlag.ORTHO)
        else:
            flags.append(JointFlag.AMBIGUOUS)
    return tuple(flags), scale


def classify_critical(cfg: ArmConfiguration, tol: float = 1e-6) -> ClassificationReport:
    """Classify an (approximately) critical configuration.

    The per-joint pattern comes from the first-order condition residuals
    with a dead zone between the parallel and ortho thresholds; ambiguous
    joints degrade confidence (``ambiguous`` flag) and are treated as
    parallel for labeling.  Verdicts follow the label: a diacyclic check of
    the projected chain for FULL_ORTHO, alternation for zigzags, and the
    parity-dependent closing/diameter condition on the unfolded ortho
    sub-chain for MIXED(k).
    """
    pattern, scale = _pattern(cfg, tol)
    ambiguous = JointFlag.AMBIGUOUS in pattern
    effective = [JointFlag.PARALLEL if f is JointFlag.AMBIGUOUS else f
                 for f in pattern]
    n = cfg.n
    verts = project_perp(cfg, cfg.directions[0])
    perp_edges = verts[1:] - verts[:-1]
    endpoint = verts[-1]

    circle = None
    closing = diameter = zigzag = None
    subtype = None

    if all(f is JointFlag.ORTHO for f in effective):
        label, split = Label.FULL_ORTHO, n
        try:
            dia = check_diacyclic(verts, tol)
            circle = dia.circle
            diameter = Verdict(ok=dia.ok, residual=max(dia.span_residual,
                                                       dia.midpoint_residual,
                                                       dia.rms_residual))
        except CircleFitError:
            ambiguous = True
            diameter = Verdict(ok=False, residual=np.inf)
        subtype = PlanarSubtype.DIACYCLIC
    elif all(f is JointFlag.PARALLEL for f in effective):
        split = None
        perp_max = float(np.linalg.norm(perp_edges, axis=1).max())
        label = Label.ALIGNED if perp_max <= tol * scale else Label.ZIGZAG_FAMILY
        zigzag = _verdict_from_zigzag(detect_zigzag(cfg, 2, tol))
    else:
        ortho_count = sum(f is JointFlag.ORTHO for f in effective)
        split = ortho_count + 1
        label = Label.MIXED
        try:
            circle = fit_circle(verts)
        except CircleFitError:
            circle = None
            ambiguous = True
        # unfold the ortho edges by the parity of preceding parallel joints
        unfolded = np.zeros(2)
        parallels_seen = 0
        antipodal = 0.0
        for i, flag in enumerate(effective):
            if flag is JointFlag.PARALLEL:
                antipodal = max(antipodal, float(np.linalg.norm(
                    verts[i] + verts[i + 1] - endpoint)))
                parallels_seen += 1
            else:
                sign = -1.0 if parallels_seen % 2 else 1.0
                unfolded += sign * perp_edges[i]
        if (n - split) % 2 == 1:
            residual = float(np.linalg.norm(unfolded)) / scale
            closing = Verdict(ok=residual <= tol, residual=residual)
            subtype = PlanarSubtype.CYCLIC_CLOSED
        else:
            residual = float(np.linalg.norm(unfolded - endpoint)) / scale
            span_ok = True
            if circle is not None:
                span_ok = abs(np.linalg.norm(endpoint) - 2.0 * circle.radius) \
                    <= tol * scale
            diameter = Verdict(ok=residual <= tol and span_ok, residual=residual)
            subtype = PlanarSubtype.DIACYCLIC
        radius_ok = True
        if circle is not None:
            tail_lengths = [cfg.lengths[i + 1] for i, f in enumerate(effective)
                            if f is JointFlag.PARALLEL]
            radius_ok = min(tail_lengths) >= circle.radius * (1.0 - tol)
        zigzag = Verdict(ok=antipodal / scale <= tol and radius_ok,
                         residual=antipodal / scale)

    return ClassificationReport(pattern=pattern, label=label, split=split,
                                ambiguous=ambiguous, circle=circle,
                                closing=closing, diameter=diameter,
                                zigzag=zigzag, planar_subtype=subtype)


def _verdict_from_zigzag(z: ZigzagCheck) -> Verdict:
    return Verdict(ok=z.ok, residual=z.residual)
