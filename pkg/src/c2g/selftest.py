"""Self-contained correctness checks runnable from the CLI.

Every check rebuilds its expected values from first principles (dense
operator matrices assembled via scipy's own 1-D correlation on identity
columns, finite differences, direct dense solves), so a pass means the
matrix-free operators, the energy, and the solvers agree with independent
constructions. Checks are seeded and deterministic; each prints one
PASS/FAIL line with the measured worst case.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .colorspace import LabImage
from .contrast import ContrastConfig, apply_contrast, apply_contrast_adjoint, gaussian_kernel
from .energy import EnergyParams, brightness_weight, total_energy
from .solver import SolverConfig, SolverError, apply_system, assemble_rhs, solve_l2


def _dense_axis_matrix(n: int, sigma: float) -> np.ndarray:
    # independent construction: run the reference correlation on identity
    # columns instead of reusing the package's own cached matrices
    k = gaussian_kernel(sigma)
    return ndimage.correlate1d(np.eye(n), k, axis=0, mode="nearest")


def _dense_contrast(h: int, w: int, cfg: ContrastConfig) -> np.ndarray:
    m = np.zeros((h * w, h * w))
    for sigma, beta in zip(cfg.scales, cfg.betas):
        if beta == 0.0:
            continue
        lo = np.kron(_dense_axis_matrix(h, sigma), _dense_axis_matrix(w, sigma))
        hi = np.kron(_dense_axis_matrix(h, 2 * sigma), _dense_axis_matrix(w, 2 * sigma))
        m += beta * (lo - hi)
    return m


def _rel(err: float, scale: float) -> float:
    return err / max(scale, 1e-300)


def _random_lab(rng, shape) -> LabImage:
    return LabImage(
        L=rng.uniform(0.0, 100.0, shape),
        a=rng.uniform(-60.0, 60.0, shape),
        b=rng.uniform(-60.0, 60.0, shape),
    )


def run_selftest(cfg: ContrastConfig, params: EnergyParams,
                 size: tuple[int, int] = (8, 8), seed: int = 0,
                 emit=print) -> bool:
    """Run all checks at the given (rows, cols) size; returns overall pass."""
    h, w = size
    if h < 2 or w < 2:
        raise ValueError(f"selftest size must be at least 2x2, got {h}x{w}")
    rng = np.random.default_rng(seed)
    ok = True

    def report(name: str, passed: bool, detail: str):
        nonlocal ok
        ok &= passed
        emit(f"{'PASS' if passed else 'FAIL'} {name} ({detail})")

    c = _dense_contrast(h, w, cfg)

    # forward and adjoint operator vs dense matrix, machine-checked modes
    worst_f = worst_a = 0.0
    for _ in range(20):
        f = rng.standard_normal((h, w))
        ref_f = (c @ f.ravel()).reshape(h, w)
        ref_a = (c.T @ f.ravel()).reshape(h, w)
        for mode in ("auto", "direct", "fft"):
            got_f = apply_contrast(f, cfg, mode=mode)
            got_a = apply_contrast_adjoint(f, cfg, mode=mode)
            worst_f = max(worst_f, _rel(np.abs(got_f - ref_f).max(), np.abs(ref_f).max()))
            worst_a = max(worst_a, _rel(np.abs(got_a - ref_a).max(), np.abs(ref_a).max()))
    report("contrast-forward-dense", worst_f <= 1e-9, f"rel err {worst_f:.2e}")
    report("contrast-adjoint-dense", worst_a <= 1e-9, f"rel err {worst_a:.2e}")

    # adjoint identity <Cf, y> == <f, C^T y>
    worst = 0.0
    for _ in range(20):
        f = rng.standard_normal((h, w))
        y = rng.standard_normal((h, w))
        lhs = float(np.sum(apply_contrast(f, cfg) * y))
        rhs = float(np.sum(f * apply_contrast_adjoint(y, cfg)))
        worst = max(worst, _rel(abs(lhs - rhs), max(abs(lhs), abs(rhs))))
    report("adjoint-identity", worst <= 1e-10, f"rel err {worst:.2e}")

    # normal-equations operator and right-hand side vs dense assembly
    lab = _random_lab(rng, (h, w))
    wts = brightness_weight(lab, params.epsilon)
    gain = params.alpha_l + 2.0 * params.alpha_ab
    m = np.diag(wts.ravel()) + gain * (c.T @ c)
    worst = 0.0
    for _ in range(20):
        g = rng.standard_normal((h, w))
        ref = (m @ g.ravel()).reshape(h, w)
        got = apply_system(g, wts, cfg, params)
        worst = max(worst, _rel(np.abs(got - ref).max(), np.abs(ref).max()))
    report("system-operator-dense", worst <= 1e-9, f"rel err {worst:.2e}")

    combo = (params.alpha_l * c @ lab.L.ravel()
             + params.alpha_ab * c @ lab.a.ravel()
             + params.alpha_ab * c @ lab.b.ravel())
    ref_u = (wts.ravel() * lab.L.ravel() + c.T @ combo).reshape(h, w)
    got_u = assemble_rhs(lab, wts, cfg, params)
    err = _rel(np.abs(got_u - ref_u).max(), np.abs(ref_u).max())
    report("rhs-dense", err <= 1e-9, f"rel err {err:.2e}")

    # SPD probes on the system operator
    min_quad = np.inf
    worst_sym = 0.0
    for _ in range(100):
        x = rng.standard_normal((h, w))
        y = rng.standard_normal((h, w))
        mx = apply_system(x, wts, cfg, params)
        my = apply_system(y, wts, cfg, params)
        min_quad = min(min_quad, float(np.sum(x * mx)))
        lhs = float(np.sum(mx * y))
        rhs = float(np.sum(x * my))
        worst_sym = max(worst_sym, _rel(abs(lhs - rhs), max(abs(lhs), abs(rhs))))
    report("system-positive", min_quad > 0.0, f"min quadratic form {min_quad:.3e}")
    report("system-symmetric", worst_sym <= 1e-8, f"rel asymmetry {worst_sym:.2e}")

    # analytic energy gradient vs central differences at random coordinates
    g0 = rng.uniform(0.0, 100.0, (h, w))
    u = assemble_rhs(lab, wts, cfg, params)
    grad = 2.0 * (apply_system(g0, wts, cfg, params) - u)
    step = 1e-4
    worst = 0.0
    for _ in range(10):
        i = int(rng.integers(0, h))
        j = int(rng.integers(0, w))
        gp = g0.copy(); gp[i, j] += step
        gm = g0.copy(); gm[i, j] -= step
        fd = (total_energy(gp, lab, cfg, params).total
              - total_energy(gm, lab, cfg, params).total) / (2 * step)
        worst = max(worst, _rel(abs(fd - grad[i, j]), max(abs(fd), abs(grad[i, j]))))
    report("energy-gradient", worst <= 1e-5, f"rel err {worst:.2e}")

    # dense direct solve vs the matrix-free CG path, solved tight
    ref_g = np.linalg.solve(m, ref_u.ravel()).reshape(h, w)
    tight = SolverConfig(cg_tol=1e-14, cg_max_iters=50000, clamp_output=False)
    try:
        got_g = solve_l2(lab, cfg, params, tight)
    except SolverError as exc:
        report("cg-vs-dense-solve", False, f"cg stalled: {exc}")
    else:
        err = np.abs(got_g - ref_g).max()
        report("cg-vs-dense-solve", err <= 1e-6, f"inf-norm err {err:.2e}")

    return ok
