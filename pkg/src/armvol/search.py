"""Multistart search for critical configurations of the signed volume.

Each restart seeds a deterministic start on the sphere product (counter
style: generator keyed by (seed, restart index)) and contributes three
attempts: projected-gradient ascent, descent, and a raw damped-Newton run
(which is what finds the saddle configurations), all finished by Newton
refinement in the tangent frame.  Converged configurations are rotated to a
canonical representative about the first edge, merged, and annotated with
their Hessian spectrum and structure classification.

Determinism: identical options produce identical results; the Newton phase
may be parallelized by setting the LVL_THREADS environment variable, which
does not change the output (results are merged in restart order).
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .classify import ClassificationReport, classify_critical
from .geometry import E1, ArmConfiguration, Mode, signed_volume, signed_volume_many
from .variational import (MorseData, hessian_tangent, morse_data,
                          retract_directions_many, riemannian_gradient_many,
                          tangent_frame_tensor)

#: line-search sufficient-decrease constant
ARMIJO_C1 = 1e-4
#: joints with perpendicular norm above this anchor the canonical rotation
CANONICAL_PERP_TOL = 1e-9


class ConvergenceError(RuntimeError):
    """Newton refinement failed to reach the requested gradient norm."""


@dataclass(frozen=True)
class SearchOptions:
    """Knobs for the multistart search; defaults suit unit-scale arms."""

    restarts: int = 100
    seed: int = 0
    step_tol: float = 1e-14
    grad_tol: float = 1e-13
    max_iters: int = 80
    mode: Mode = Mode.REDUCED
    first_order_iters: int = 250
    switch_tol: float = 1e-3
    classify_tol: float = 1e-6
    dedupe_tol: float = 1e-6

    def __post_init__(self) -> None:
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")
        if self.grad_tol <= 0.0:
            raise ValueError("grad_tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass(frozen=True)
class CriticalPointRecord:
    """A found critical configuration (canonical form) with its diagnostics."""

    configuration: ArmConfiguration
    value: float
    grad_norm: float
    morse: MorseData | None = None
    classification: ClassificationReport | None = None
    multiplicity: int = 1

    def sort_key(self):
        return (-self.value, tuple(self.configuration.directions.ravel()))


@dataclass(frozen=True)
class SearchResult:
    records: list[CriticalPointRecord]
    attempts: int
    converged: int
    failed: int


def _thread_count() -> int:
    raw = os.environ.get("LVL_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def random_directions(n: int, mode: Mode, rng: np.random.Generator) -> np.ndarray:
    """Uniform start on the parameter space; first direction pinned to e1."""
    dirs = rng.normal(size=(n, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    dirs[0] = E1
    if mode is Mode.PLANE_B:
        theta = rng.uniform(0.0, 2.0 * np.pi)
        dirs[1] = np.array([np.cos(theta), np.sin(theta), 0.0])
    return dirs


def _first_order_many(lengths: np.ndarray, U: np.ndarray, sign: float,
                      mode: Mode, switch_tol: float, max_iters: int) -> np.ndarray:
    """Batched projected-gradient ascent on sign*V with Armijo backtracking."""
    m = len(U)
    alpha = np.ones(m)
    active = np.ones(m, dtype=bool)
    st2 = switch_tol * switch_tol
    for _ in range(max_iters):
        grads = riemannian_gradient_many(lengths, U, mode)
        gn2 = np.einsum("mrj,mrj->m", grads, grads)
        active &= gn2 > st2
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        f0 = sign * signed_volume_many(lengths, U[idx])
        pending = np.arange(idx.size)
        while pending.size:
            runs = idx[pending]
            trial = U[runs].copy()
            trial[:, 1:] += (sign * alpha[runs])[:, None, None] * grads[runs]
            trial[:, 1:] /= np.linalg.norm(trial[:, 1:], axis=2, keepdims=True)
            fv = sign * signed_volume_many(lengths, trial)
            ok = fv >= f0[pending] + ARMIJO_C1 * alpha[runs] * gn2[runs]
            U[runs[ok]] = trial[ok]
            alpha[runs[ok]] = np.minimum(alpha[runs[ok]] * 2.0, 1.0)
            pending = pending[~ok]
            alpha[idx[pending]] *= 0.5
            stuck = alpha[idx[pending]] < 1e-14
            if stuck.any():
                active[idx[pending[stuck]]] = False
                pending = pending[~stuck]
    return U


def _frame_gradient(frame: np.ndarray, grads: np.ndarray) -> np.ndarray:
    """Tangent-frame coordinates of the per-joint ambient gradients."""
    full = np.zeros((frame.shape[1], 3))
    full[1:] = grads
    return np.einsum("inj,nj->i", frame, full)


def _gnorm(lengths: np.ndarray, U: np.ndarray, mode: Mode) -> float:
    g = riemannian_gradient_many(lengths, U[None], mode)[0]
    return float(np.linalg.norm(g))


def _newton(lengths: np.ndarray, U: np.ndarray, mode: Mode, grad_tol: float,
            max_iters: int, step_tol: float) -> tuple[np.ndarray, bool, float]:
    """Damped Newton on the tangent gradient; pseudo-inverse on null space.

    Eigendirections below the truncation cutoff (finite-difference noise
    floor, widened to the current gradient norm so Bott-null directions
    never amplify) are excluded from the step; steps are capped at 0.5 and
    backtracked until the gradient norm decreases.
    """
    U = U.copy()
    cfg = ArmConfiguration(lengths, U, mode)
    for _ in range(max_iters):
        cfg = cfg.with_directions(U)
        grads = riemannian_gradient_many(lengths, U[None], mode)[0]
        frame = tangent_frame_tensor(cfg)
        g = _frame_gradient(frame, grads)
        gn = float(np.linalg.norm(g))
        if gn <= grad_tol:
            return U, True, gn
        hess = hessian_tangent(cfg, warn_threshold=None)
        eigs, basis = np.linalg.eigh(hess)
        rho = max(1.0, float(np.abs(eigs).max()))
        cutoff = max(1e-8 * rho, min(gn, 1e-3 * rho))
        inv = np.zeros_like(eigs)
        mask = np.abs(eigs) > cutoff
        inv[mask] = 1.0 / eigs[mask]
        step = -basis @ (inv * (basis.T @ g))
        norm = float(np.linalg.norm(step))
        if norm < step_tol:
            break
        if norm > 0.5:
            step *= 0.5 / norm
        moved = False
        for _half in range(12):
            trial = retract_directions_many(U, frame, step[None])[0]
            if _gnorm(lengths, trial, mode) < gn:
                U = trial
                moved = True
                break
            step *= 0.5
        if not moved:
            break
    gn = _gnorm(lengths, U, mode)
    return U, gn <= grad_tol, gn


def refine_newton(cfg: ArmConfiguration, grad_tol: float = 1e-10,
                  max_iters: int = 60, step_tol: float = 1e-13) -> ArmConfiguration:
    """Polish an approximate critical configuration to ``grad_tol``.

    Inputs already at the tolerance are returned unchanged.  The tangent
    Hessian only steers Newton reliably near a critical point; a gradient
    norm above 1e-2 draws a warning.  Raises ConvergenceError on failure.
    """
    grads = riemannian_gradient_many(cfg.lengths, cfg.directions[None], cfg.mode)[0]
    gn = float(np.linalg.norm(grads))
    if gn <= grad_tol:
        return cfg
    if gn > 1e-2:
        warnings.warn(f"refine_newton started at gradient norm {gn:.3e}; "
                      "the tangent Hessian may not be informative here",
                      RuntimeWarning, stacklevel=2)
    out, ok, gn = _newton(cfg.lengths, cfg.directions, cfg.mode, grad_tol,
                          max_iters, step_tol)
    if not ok:
        raise ConvergenceError(f"gradient norm {gn:.3e} > {grad_tol:.3e} "
                               f"after {max_iters} Newton iterations")
    return cfg.with_directions(out)


def canonicalize(cfg: ArmConfiguration) -> ArmConfiguration:
    """Rotate about the first edge into the canonical representative.

    The first joint whose direction has a perpendicular component above
    1e-9 is rotated to have that component along +e2 (e3-component exactly
    zero); fully aligned arms return unchanged.  Requires the first
    direction to be (1,0,0); PLANE_B configurations are rejected since the
    rotation would leave their constraint plane.
    """
    if cfg.mode is Mode.PLANE_B:
        raise ValueError("canonicalize is undefined in plane_b mode")
    if not np.array_equal(cfg.directions[0], E1):
        raise ValueError("canonicalize requires the first direction (1,0,0)")
    ys = cfg.directions[1:, 1]
    zs = cfg.directions[1:, 2]
    norms = np.hypot(ys, zs)
    anchors = np.flatnonzero(norms > CANONICAL_PERP_TOL)
    if anchors.size == 0:
        return cfg
    k = int(anchors[0])
    cos_t = ys[k] / norms[k]
    sin_t = -zs[k] / norms[k]
    dirs = cfg.directions.copy()
    y, z = dirs[:, 1].copy(), dirs[:, 2].copy()
    dirs[:, 1] = cos_t * y - sin_t * z
    dirs[:, 2] = sin_t * y + cos_t * z
    return cfg.with_directions(dirs)


def dedupe(records: list[CriticalPointRecord],
           tol: float = 1e-6) -> list[CriticalPointRecord]:
    """Merge records whose canonical direction coordinates agree within tol.

    Multiplicities accumulate; the representative is the member with the
    smallest gradient norm.  Records are sorted (descending value, then
    lexicographic coordinates) before clustering, so the merge result is
    independent of input order.
    """
    ordered = sorted(records, key=lambda r: r.sort_key())
    reps: list[CriticalPointRecord] = []
    members: list[list[CriticalPointRecord]] = []
    for rec in ordered:
        cfg = rec.configuration
        placed = False
        for i, rep in enumerate(reps):
            other = rep.configuration
            if (other.mode is cfg.mode
                    and other.n == cfg.n
                    and np.array_equal(other.lengths, cfg.lengths)
                    and float(np.abs(other.directions
                                     - cfg.directions).max()) <= tol):
                members[i].append(rec)
                placed = True
                break
        if not placed:
            reps.append(rec)
            members.append([rec])
    merged = []
    for group in members:
        best = min(group, key=lambda r: (r.grad_norm,) + r.sort_key())
        total = sum(r.multiplicity for r in group)
        merged.append(replace(best, multiplicity=total))
    return sorted(merged, key=lambda r: r.sort_key())


def search_critical_points(lengths, opts: SearchOptions = SearchOptions()) -> SearchResult:
    """Run the full multistart pipeline and return records plus a summary."""
    lengths = np.asarray(lengths, dtype=float)
    if lengths.ndim != 1 or lengths.size < 3:
        raise ValueError("search needs at least three edge lengths")
    if np.any(lengths <= 0.0) or not np.all(np.isfinite(lengths)):
        raise ValueError("edge lengths must be positive and finite")
    if opts.mode is Mode.PLANE_B and lengths.size != 3:
        raise ValueError("plane_b mode is defined for 3-edge arms only")
    n = lengths.size
    starts = np.stack([
        random_directions(n, opts.mode, np.random.default_rng([opts.seed, i]))
        for i in range(opts.restarts)
    ])
    candidates = [
        _first_order_many(lengths, starts.copy(), +1.0, opts.mode,
                          opts.switch_tol, opts.first_order_iters),
        _first_order_many(lengths, starts.copy(), -1.0, opts.mode,
                          opts.switch_tol, opts.first_order_iters),
        starts,
    ]
    stacked = np.concatenate(candidates, axis=0)

    def attempt(U0: np.ndarray):
        # aim below grad_tol so canonicalization rounding cannot push a
        # converged record back over the threshold
        return _newton(lengths, U0, opts.mode, 0.5 * opts.grad_tol,
                       opts.max_iters, opts.step_tol)

    workers = _thread_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(attempt, stacked))
    else:
        outcomes = [attempt(U0) for U0 in stacked]

    raw: list[CriticalPointRecord] = []
    failed = 0
    for dirs, _, gn0 in outcomes:
        if gn0 > opts.grad_tol:
            failed += 1
            continue
        cfg = ArmConfiguration(lengths, dirs, opts.mode)
        if opts.mode is not Mode.PLANE_B:
            cfg = canonicalize(cfg)
        # recheck independently of the optimizer's bookkeeping
        gn = float(np.linalg.norm(
            riemannian_gradient_many(lengths, cfg.directions[None], cfg.mode)[0]))
        if gn > opts.grad_tol:
            failed += 1
            continue
        raw.append(CriticalPointRecord(configuration=cfg,
                                       value=signed_volume(cfg),
                                       grad_norm=gn))
    merged = dedupe(raw, tol=opts.dedupe_tol)
    enriched = []
    for rec in merged:
        morse = morse_data(rec.configuration)
        classification = None
        if opts.mode is not Mode.PLANE_B:
            classification = classify_critical(rec.configuration,
                                               tol=opts.classify_tol)
        enriched.append(replace(rec, morse=morse, classification=classification))
    enriched.sort(key=lambda r: r.sort_key())
    return SearchResult(records=enriched, attempts=len(stacked),
                        converged=len(raw), failed=failed)


def find_critical_points(lengths, opts: SearchOptions = SearchOptions()) -> list[CriticalPointRecord]:
    """Deduplicated, classified critical points sorted by descending value."""
    return search_critical_points(lengths, opts).records
