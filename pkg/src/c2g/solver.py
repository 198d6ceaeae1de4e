"""Solvers for the perceptual-consistency objective.

The l2 objective is a strictly convex quadratic whose normal equations read

    (Lambda(w) + (alpha_l + 2 alpha_ab) A^T A) g = u

with A the multi-scale contrast operator. The system matrix is dense (large
band supports) but fast to apply, so it is never assembled: conjugate
gradient runs matrix-free, seeded with the lightness plane. The l1 objective
is handled by iteratively reweighted least squares, a short sequence of
reweighted quadratics warm-started from one another.

Everything here is deterministic: reductions use np.sum (pairwise), no
BLAS dot products, no threading.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .colorspace import LabImage, gray_to_rgb, srgb_to_lab
from .contrast import ContrastConfig, apply_contrast, apply_contrast_adjoint
from .energy import EnergyParams, brightness_weight


@dataclass
class SolverConfig:
    """Tolerances and iteration caps for the inner and outer loops."""

    cg_tol: float = 1e-6
    cg_max_iters: int = 1000
    irls_iters: int = 10
    irls_tol: float = 1e-3
    clamp_output: bool = True

    def __post_init__(self):
        if not (0.0 < self.cg_tol < 1.0):
            raise ValueError(f"cg_tol must lie in (0, 1), got {self.cg_tol}")
        if self.cg_max_iters < 1 or self.irls_iters < 1:
            raise ValueError("iteration caps must be >= 1")
        if not (math.isfinite(self.irls_tol) and self.irls_tol > 0):
            raise ValueError(f"irls_tol must be positive, got {self.irls_tol}")


class SolverError(RuntimeError):
    """Raised when CG fails to reach the target residual.

    Carries the final relative residual, the iteration count, and (when the
    failure happened inside an IRLS outer loop) the outer iteration index.
    """

    def __init__(self, message: str, relative_residual: float, iterations: int,
                 irls_iteration: int | None = None):
        super().__init__(message)
        self.relative_residual = relative_residual
        self.iterations = iterations
        self.irls_iteration = irls_iteration


@dataclass
class IrlsState:
    """Diagnostic snapshot of one reweighted-least-squares iteration.

    ``q`` is the weight plane used by this iteration's inner solve
    (iteration 0 has q == 1 everywhere), ``r`` the per-pixel residual of the
    new iterate. ``g`` and the inner quadratic value before/after the solve
    are carried for convergence diagnostics.
    """

    iteration: int
    q: np.ndarray
    r: np.ndarray
    g: np.ndarray = field(repr=False, default=None)
    inner_before: float = float("nan")
    inner_after: float = float("nan")


def _dot(a: np.ndarray, b: np.ndarray) -> float:
    # pairwise summation: deterministic, unlike BLAS dot
    return float(np.sum(a * b))


def _l2norm(a: np.ndarray) -> float:
    return math.sqrt(_dot(a, a))


def apply_system(g: np.ndarray, w: np.ndarray, cfg: ContrastConfig,
                 params: EnergyParams, q: np.ndarray | None = None) -> np.ndarray:
    """Apply the normal-equations operator to a gray field.

    Computes q w g + (alpha_l + 2 alpha_ab) A^T(q A g); ``q`` (the
    reweighting plane) defaults to all-ones, which is the plain l2 system.
    """
    g = np.asarray(g, dtype=np.float64)
    if g.shape != w.shape:
        raise ValueError(f"field shape {g.shape} does not match weights {w.shape}")
    gain = params.alpha_l + 2.0 * params.alpha_ab
    cg = apply_contrast(g, cfg)
    if q is None:
        return w * g + gain * apply_contrast_adjoint(cg, cfg)
    return q * w * g + gain * apply_contrast_adjoint(q * cg, cfg)


def _channel_bands(lab: LabImage, cfg: ContrastConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return (
        apply_contrast(lab.L, cfg),
        apply_contrast(lab.a, cfg),
        apply_contrast(lab.b, cfg),
    )


def _rhs_from_bands(lab: LabImage, w: np.ndarray, cfg: ContrastConfig, params: EnergyParams,
                    bands: tuple[np.ndarray, np.ndarray, np.ndarray],
                    q: np.ndarray | None) -> np.ndarray:
    cl, ca, cb = bands
    combo = params.alpha_l * cl + params.alpha_ab * (ca + cb)
    if q is None:
        return w * lab.L + apply_contrast_adjoint(combo, cfg)
    return q * w * lab.L + apply_contrast_adjoint(q * combo, cfg)


def assemble_rhs(lab: LabImage, w: np.ndarray, cfg: ContrastConfig,
                 params: EnergyParams, q: np.ndarray | None = None) -> np.ndarray:
    """Right-hand side of the normal equations.

    u = q w l + A^T(q (alpha_l A l + alpha_ab A a + alpha_ab A b)); the
    bracketing applies the adjoint once to the combined band image, which is
    the same linear map as three separate adjoint applications.
    """
    w = np.asarray(w, dtype=np.float64)
    if w.shape != lab.shape:
        raise ValueError(f"weight shape {w.shape} does not match image {lab.shape}")
    return _rhs_from_bands(lab, w, cfg, params, _channel_bands(lab, cfg), q)


def _cg(apply_A, b: np.ndarray, x0: np.ndarray, tol: float,
        max_iters: int) -> tuple[np.ndarray, int]:
    """Conjugate gradient on an SPD operator, no preconditioning.

    Stops at ||r|| <= tol ||b||. The recursive residual is confirmed against
    the true residual on convergence; if roundoff drift pushed it above
    target, CG restarts from the true residual (still bounded by max_iters).
    """
    bnorm = _l2norm(b)
    target = tol * bnorm
    x = x0.astype(np.float64, copy=True)
    r = b - apply_A(x)
    rr = _dot(r, r)
    if math.sqrt(rr) <= target:
        return x, 0
    p = r.copy()
    for it in range(1, max_iters + 1):
        Ap = apply_A(p)
        pAp = _dot(p, Ap)
        if not (pAp > 0.0):
            rel = math.sqrt(rr) / bnorm if bnorm > 0 else math.inf
            raise SolverError(
                f"CG breakdown at iteration {it}: p^T A p = {pAp}", rel, it
            )
        alpha = rr / pAp
        x += alpha * p
        r -= alpha * Ap
        rr_new = _dot(r, r)
        if math.sqrt(rr_new) <= target:
            r_true = b - apply_A(x)
            rtn = _dot(r_true, r_true)
            if math.sqrt(rtn) <= target:
                return x, it
            # recursion drifted: restart from the true residual
            r = r_true
            rr = rtn
            p = r.copy()
            continue
        p = r + (rr_new / rr) * p
        rr = rr_new
    rel = math.sqrt(rr) / bnorm if bnorm > 0 else math.inf
    raise SolverError(
        f"CG did not reach tolerance {tol} in {max_iters} iterations "
        f"(relative residual {rel:.3e})",
        rel,
        max_iters,
    )


def solve_l2(lab: LabImage, cfg: ContrastConfig, params: EnergyParams,
             solver_cfg: SolverConfig) -> np.ndarray:
    """Minimize the l2 objective by matrix-free conjugate gradient."""
    w = brightness_weight(lab, params.epsilon)
    u = assemble_rhs(lab, w, cfg, params)
    g, _ = _cg(
        lambda x: apply_system(x, w, cfg, params),
        u,
        lab.L,
        solver_cfg.cg_tol,
        solver_cfg.cg_max_iters,
    )
    return np.clip(g, 0.0, 100.0) if solver_cfg.clamp_output else g


def _inner_quadratic(diff_l: np.ndarray, cg_g: np.ndarray, bands, w, q, params) -> float:
    cl, ca, cb = bands
    val = float(np.sum(q * w * diff_l * diff_l))
    for chan, alpha in ((cl, params.alpha_l), (ca, params.alpha_ab), (cb, params.alpha_ab)):
        d = chan - cg_g
        val += alpha * float(np.sum(q * d * d))
    return val


def solve_l1(lab: LabImage, cfg: ContrastConfig, params: EnergyParams,
             solver_cfg: SolverConfig, trace: list | None = None) -> np.ndarray:
    """Minimize the l1 objective by iteratively reweighted least squares.

    Iteration i solves the q_i-weighted quadratic (q_0 == 1, so the first
    iterate is the plain l2 solution), computes the per-pixel residual of the
    new iterate, and reweights q_{i+1} = 1/(|r_i| + 1). Stops after
    ``irls_iters`` solves or when the iterate's relative change drops below
    ``irls_tol``. Pass a list as ``trace`` to collect per-iteration
    diagnostics.
    """
    w = brightness_weight(lab, params.epsilon)
    bands = _channel_bands(lab, cfg)
    cl, ca, cb = bands

    g = lab.L.astype(np.float64, copy=True)
    q = np.ones_like(g)
    prev_cg = cl.copy()  # bands of the initial iterate: g0 is the L plane
    for i in range(solver_cfg.irls_iters):
        u = _rhs_from_bands(lab, w, cfg, params, bands, q)
        try:
            g_new, _ = _cg(
                lambda x, q=q: apply_system(x, w, cfg, params, q=q),
                u,
                g,
                solver_cfg.cg_tol,
                solver_cfg.cg_max_iters,
            )
        except SolverError as err:
            raise SolverError(
                f"IRLS iteration {i}: {err}", err.relative_residual, err.iterations, i
            ) from err
        cg_g = apply_contrast(g_new, cfg)
        diff = np.abs(lab.L - g_new)
        r = q * (
            w * diff
            + params.alpha_l * np.abs(cl - cg_g)
            + params.alpha_ab * np.abs(ca - cg_g)
            + params.alpha_ab * np.abs(cb - cg_g)
        )
        if trace is not None:
            trace.append(
                IrlsState(
                    iteration=i,
                    q=q,
                    r=r,
                    g=g_new,
                    inner_before=_inner_quadratic(lab.L - g, prev_cg, bands, w, q, params),
                    inner_after=_inner_quadratic(lab.L - g_new, cg_g, bands, w, q, params),
                )
            )
        rel_change = _l2norm(g_new - g) / max(_l2norm(g), np.finfo(np.float64).tiny)
        q = 1.0 / (np.abs(r) + 1.0)
        g = g_new
        prev_cg = cg_g
        if rel_change < solver_cfg.irls_tol:
            break
    return np.clip(g, 0.0, 100.0) if solver_cfg.clamp_output else g


def convert(img: np.ndarray, cfg: ContrastConfig, params: EnergyParams,
            solver_cfg: SolverConfig) -> np.ndarray:
    """Full pipeline: decode, solve in the configured norm, encode to gray."""
    lab = srgb_to_lab(img)
    if params.norm == "l1":
        g = solve_l1(lab, cfg, params, solver_cfg)
    else:
        g = solve_l2(lab, cfg, params, solver_cfg)
    return gray_to_rgb(g)
