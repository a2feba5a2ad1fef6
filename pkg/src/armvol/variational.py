"""First-order conditions, tangent gradients, and finite-difference Hessians.

The signed volume is multilinear in the edge vectors, so its Euclidean
gradient with respect to edge r has the closed form

    w_r = first_edge x d_r,
    d_r = (edges 2..r-1 summed) - (edges r+1..n summed),

fixed in sign by matching central finite differences.  A configuration is
critical exactly when every tangent-projected w_r vanishes; per joint this
splits into the *ortho* case (d_r not parallel to the first edge, forcing
edge r orthogonal to both) and the *parallel* case (d_r parallel to the
first edge), which is what the classifier consumes.

Hessians are taken by second-order central differences of the volume along
an orthonormal tangent frame with a renormalizing retraction; the spectrum
at an (approximate) critical point yields the Morse index, the nullity, and
the transversal index.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .geometry import ArmConfiguration, Mode, signed_volume, signed_volume_many

#: hessian_tangent warns when the gradient norm exceeds this; away from
#: critical points the tangent-frame Hessian is not frame-invariant
CRITICAL_GRAD_TOL = 1e-6

#: central-difference step for gradient checks
GRAD_CHECK_STEP = 1e-5


def _difference_vectors_many(lengths: np.ndarray, directions: np.ndarray) -> np.ndarray:
    """d_r for every joint r = 2..n over a (m, n, 3) direction stack."""
    edges = lengths[None, :, None] * directions
    partial = np.cumsum(edges, axis=1)
    return partial[:, :-1] + partial[:, 1:] - edges[:, :1] - partial[:, -1:]


def euclidean_gradient_many(lengths: np.ndarray, directions: np.ndarray) -> np.ndarray:
    edges0 = lengths[0] * directions[:, 0]
    diffs = _difference_vectors_many(lengths, directions)
    return np.cross(edges0[:, None, :], diffs)


def riemannian_gradient_many(lengths: np.ndarray, directions: np.ndarray,
                             mode: Mode) -> np.ndarray:
    """Tangent gradients of V in unit-direction coordinates, (m, n-1, 3).

    Per joint this is the tangent projection of w_r scaled by the edge
    length (chain rule for edge = length * direction); the scaling makes
    the field the honest gradient of the volume on the sphere product, and
    in particular exactly orthogonal to the rotation orbit about the first
    edge, which Newton refinement relies on.
    """
    w = euclidean_gradient_many(lengths, directions)
    tail = directions[:, 1:]
    g = w - np.einsum("mrj,mrj->mr", w, tail)[:, :, None] * tail
    g *= lengths[1:, None]
    if mode is Mode.PLANE_B:
        u = directions[:, 1]
        t = np.column_stack((-u[:, 1], u[:, 0], np.zeros(len(u))))
        g[:, 0] = np.einsum("mj,mj->m", g[:, 0], t)[:, None] * t
    return g


def euclidean_gradient(cfg: ArmConfiguration) -> np.ndarray:
    """Gradient of the signed volume with respect to edges 2..n, shape (n-1, 3).

    Row r-2 is w_r above: the directional derivative of the volume under an
    additive perturbation ``delta`` of edge r equals ``w_r @ delta``.  The
    first edge is held fixed by convention in every mode.
    """
    if cfg.n < 3:
        raise ValueError("gradient needs at least three edges")
    return euclidean_gradient_many(cfg.lengths, cfg.directions[None])[0]


def riemannian_gradient(cfg: ArmConfiguration) -> np.ndarray:
    """Per-joint tangent gradients of V on the sphere product, (n-1, 3).

    Row r-2 is w_r minus its component along direction r, scaled by edge
    length r; central finite differences of V along the renormalizing
    retraction reproduce these components (see ``gradient_check``).  In
    PLANE_B mode the second joint's gradient is further restricted to the
    in-plane tangent direction.  The configuration is critical iff every
    row vanishes.
    """
    if cfg.n < 3:
        raise ValueError("gradient needs at least three edges")
    return riemannian_gradient_many(cfg.lengths, cfg.directions[None], cfg.mode)[0]


def gradient_norm(cfg: ArmConfiguration) -> float:
    """Euclidean norm of the stacked Riemannian gradient."""
    return float(np.linalg.norm(riemannian_gradient(cfg)))


@dataclass(frozen=True)
class ConditionResiduals:
    """Per-joint first-order condition residuals for joints 2..n.

    ortho[i] is the tangent-gradient norm at joint i+2; parallel[i] is
    |first_edge x d_{i+2}|, zero exactly when d is parallel to the first
    edge; differences[i] is d_{i+2} itself.
    """

    ortho: np.ndarray
    parallel: np.ndarray
    differences: np.ndarray

    def flags(self, tol: float) -> list[str]:
        """Classify each joint at tolerance ``tol``: 'ortho', 'parallel', or
        'ambiguous' (ortho requires the parallel residual clear of the
        tolerance and the tangent gradient below it)."""
        out = []
        for o, p in zip(self.ortho, self.parallel):
            if p <= tol:
                out.append("parallel")
            elif o <= tol:
                out.append("ortho")
            else:
                out.append("ambiguous")
        return out


def condition_residuals(cfg: ArmConfiguration) -> ConditionResiduals:
    """Evaluate both families of first-order residuals at every joint."""
    if cfg.n < 3:
        raise ValueError("condition residuals need at least three edges")
    diffs = _difference_vectors_many(cfg.lengths, cfg.directions[None])[0]
    first = cfg.edges[0]
    parallel = np.linalg.norm(np.cross(first[None, :], diffs), axis=1)
    ortho = np.linalg.norm(riemannian_gradient(cfg), axis=1)
    for arr in (ortho, parallel, diffs):
        arr.setflags(write=False)
    return ConditionResiduals(ortho=ortho, parallel=parallel, differences=diffs)


def tangent_basis(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic orthonormal basis of the tangent plane at a unit vector.

    Built from the coordinate axis least aligned with ``u`` (ties broken by
    index), completed to a right-handed frame.
    """
    pick = int(np.argmin(np.abs(u)))
    e = np.zeros(3)
    e[pick] = 1.0
    t1 = e - np.dot(e, u) * u
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(u, t1)
    return t1, t2


def tangent_frame_tensor(cfg: ArmConfiguration) -> np.ndarray:
    """Orthonormal tangent frame embedded per joint, shape (dim, n, 3).

    Two directions per free sphere joint; in PLANE_B mode the second joint
    contributes the single in-plane direction.  ``dim`` is the tangent
    dimension of the parameter space.
    """
    n = cfg.n
    rows = []
    for r in range(1, n):
        u = cfg.directions[r]
        if cfg.mode is Mode.PLANE_B and r == 1:
            vecs = (np.array([-u[1], u[0], 0.0]),)
        else:
            vecs = tangent_basis(u)
        for t in vecs:
            emb = np.zeros((n, 3))
            emb[r] = t
            rows.append(emb)
    return np.array(rows)


def tangent_dimension(cfg: ArmConfiguration) -> int:
    return 3 if cfg.mode is Mode.PLANE_B else 2 * (cfg.n - 1)


def retract_directions_many(directions: np.ndarray, frame: np.ndarray,
                            deltas: np.ndarray) -> np.ndarray:
    """Move along tangent coordinates and renormalize each joint.

    ``directions`` is a single (n, 3) configuration, ``frame`` the tensor
    from ``tangent_frame_tensor``, ``deltas`` a (m, dim) batch of tangent
    coordinates; returns (m, n, 3) unit-row stacks.
    """
    moved = directions[None] + np.einsum("mi,inj->mnj", deltas, frame)
    return moved / np.linalg.norm(moved, axis=2, keepdims=True)


def hessian_tangent(cfg: ArmConfiguration, step: float | None = None,
                    warn_threshold: float | None = CRITICAL_GRAD_TOL) -> np.ndarray:
    """Tangent-frame Hessian of the signed volume by central differences.

    Uses the renormalizing retraction ``u <- (u + h*delta)/|u + h*delta|``
    and step ``h = 1e-4 * (1 + |V|)`` unless overridden.  Meaningful as a
    Riemannian Hessian only at critical points; a RuntimeWarning is issued
    when the gradient norm exceeds ``warn_threshold`` (pass None to skip the
    check in optimization loops).
    """
    value = signed_volume(cfg)
    if warn_threshold is not None:
        gn = gradient_norm(cfg)
        if gn > warn_threshold:
            warnings.warn(
                f"Hessian requested at gradient norm {gn:.3e} > {warn_threshold:.0e}; "
                "the tangent-frame Hessian is not frame-invariant away from "
                "critical points", RuntimeWarning, stacklevel=2)
    h = 1e-4 * (1.0 + abs(value)) if step is None else float(step)
    frame = tangent_frame_tensor(cfg)
    dim = len(frame)
    deltas = []
    for i in range(dim):
        e = np.zeros(dim)
        e[i] = 2.0 * h
        deltas += [e, -e]
    pairs = [(i, j) for i in range(dim) for j in range(i + 1, dim)]
    for i, j in pairs:
        ei = np.zeros(dim)
        ej = np.zeros(dim)
        ei[i] = h
        ej[j] = h
        deltas += [ei + ej, ei - ej, -ei + ej, -ei - ej]
    stacks = retract_directions_many(cfg.directions, frame, np.array(deltas))
    vals = signed_volume_many(cfg.lengths, stacks)
    hess = np.zeros((dim, dim))
    for i in range(dim):
        hess[i, i] = (vals[2 * i] - 2.0 * value + vals[2 * i + 1]) / (4.0 * h * h)
    base = 2 * dim
    for k, (i, j) in enumerate(pairs):
        a, b, c, d = vals[base + 4 * k: base + 4 * k + 4]
        hess[i, j] = hess[j, i] = (a - b - c + d) / (4.0 * h * h)
    return hess


@dataclass(frozen=True)
class MorseData:
    """Spectrum of the tangent Hessian with sign counts at threshold ``tau``.

    ``morse_index`` counts eigenvalues below -tau, ``nullity`` those within
    tau of zero; ``transversal_index`` is the count of negatives among the
    non-null directions (equal to ``morse_index`` under this thresholding).
    """

    eigenvalues: np.ndarray
    morse_index: int
    nullity: int
    transversal_index: int
    tau: float

    @property
    def dimension(self) -> int:
        return int(self.eigenvalues.size)


def morse_data(cfg: ArmConfiguration, tau: float | None = None,
               hessian: np.ndarray | None = None) -> MorseData:
    """Eigen-decompose the tangent Hessian and classify the signs.

    ``tau`` defaults to 1e-6 * max(1, spectral radius); pass ``hessian`` to
    reuse a precomputed matrix.
    """
    if hessian is None:
        hessian = hessian_tangent(cfg)
    eigs = np.linalg.eigvalsh(hessian)
    if tau is None:
        tau = 1e-6 * max(1.0, float(np.abs(eigs).max(initial=0.0)))
    negatives = int(np.sum(eigs < -tau))
    nulls = int(np.sum(np.abs(eigs) <= tau))
    eigs.setflags(write=False)
    return MorseData(eigenvalues=eigs, morse_index=negatives, nullity=nulls,
                     transversal_index=negatives, tau=float(tau))


def gradient_check(cfg: ArmConfiguration, step: float = GRAD_CHECK_STEP) -> float:
    """Max relative error between tangent gradients and central differences.

    Walks each tangent frame direction with the renormalizing retraction
    (the same chart the Hessian uses); the error for each direction is
    |fd - analytic| / (1 + |fd|).
    """
    grad = riemannian_gradient(cfg)
    frame = tangent_frame_tensor(cfg)
    dim = len(frame)
    deltas = step * np.vstack((np.eye(dim), -np.eye(dim)))
    stacks = retract_directions_many(cfg.directions, frame, deltas)
    vals = signed_volume_many(cfg.lengths, stacks)
    fd = (vals[:dim] - vals[dim:]) / (2.0 * step)
    worst = 0.0
    for k, emb in enumerate(frame):
        joint = int(np.flatnonzero(np.abs(emb).sum(axis=1))[0])
        analytic = float(grad[joint - 1] @ emb[joint])
        worst = max(worst, abs(fd[k] - analytic) / (1.0 + abs(fd[k])))
    return worst
