"""Optimizers driving the circuit angles.

Three strategies matching the training study: Adam for noisy sampled
gradients, L-BFGS (two-loop recursion, strong Wolfe line search) for
exact gradients, and CMA-ES as the gradient-free baseline. Angles are
periodic and unconstrained, so no box constraints anywhere.

L-BFGS is not noise tolerant; feed it exact gradients only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


# ---------------------------------------------------------------------------
# Adam


@dataclass
class AdamState:
    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0
    learning_rate: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


def adam_init(parameter_count: int, learning_rate: float = 0.1, **kwargs) -> AdamState:
    return AdamState(
        first_moment=np.zeros(parameter_count),
        second_moment=np.zeros(parameter_count),
        learning_rate=learning_rate,
        **kwargs,
    )


def adam_step(
    state: AdamState, theta: np.ndarray, grad: np.ndarray
) -> tuple[AdamState, np.ndarray]:
    """One bias-corrected Adam update; returns (new state, new theta)."""
    grad = np.asarray(grad, dtype=np.float64)
    if not np.all(np.isfinite(grad)):
        raise ValueError("non-finite gradient")
    t = state.step_count + 1
    m = state.beta1 * state.first_moment + (1.0 - state.beta1) * grad
    v = state.beta2 * state.second_moment + (1.0 - state.beta2) * grad * grad
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    new_theta = theta - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
    new_state = AdamState(
        first_moment=m,
        second_moment=v,
        step_count=t,
        learning_rate=state.learning_rate,
        beta1=state.beta1,
        beta2=state.beta2,
        epsilon=state.epsilon,
    )
    return new_state, new_theta


# ---------------------------------------------------------------------------
# L-BFGS


@dataclass
class LbfgsResult:
    theta: np.ndarray
    loss: float
    trace: list[float]
    iterations: int
    converged: bool
    line_search_failed: bool


def _strong_wolfe(fn, x, f0, g0, direction, c1=1e-4, c2=0.9, max_steps=25):
    """Strong Wolfe line search (bracket + zoom with quadratic interpolation).

    Returns (alpha, f, g, evals) or None when no acceptable step exists
    within the evaluation budget.
    """
    d0 = float(g0 @ direction)
    if d0 >= 0:
        return None

    def phi(alpha):
        f, g = fn(x + alpha * direction)
        return f, g, float(g @ direction)

    def zoom(lo, f_lo, d_lo, hi, f_hi, evals):
        for _ in range(max_steps):
            # quadratic interpolation on the lo endpoint, bisection fallback
            denom = 2.0 * (f_hi - f_lo - d_lo * (hi - lo))
            alpha = lo + (-d_lo * (hi - lo) ** 2) / denom if denom != 0 else 0.5 * (lo + hi)
            width = abs(hi - lo)
            if not (min(lo, hi) + 0.1 * width <= alpha <= max(lo, hi) - 0.1 * width):
                alpha = 0.5 * (lo + hi)
            f, g, d = phi(alpha)
            evals += 1
            if f > f0 + c1 * alpha * d0 or f >= f_lo:
                hi, f_hi = alpha, f
            else:
                if abs(d) <= -c2 * d0:
                    return alpha, f, g, evals
                if d * (hi - lo) >= 0:
                    hi, f_hi = lo, f_lo
                lo, f_lo, d_lo = alpha, f, d
            if width < 1e-16:
                break
        return None

    alpha_prev, f_prev, d_prev = 0.0, f0, d0
    alpha = 1.0
    evals = 0
    for i in range(max_steps):
        f, g, d = phi(alpha)
        evals += 1
        if f > f0 + c1 * alpha * d0 or (i > 0 and f >= f_prev):
            return zoom(alpha_prev, f_prev, d_prev, alpha, f, evals)
        if abs(d) <= -c2 * d0:
            return alpha, f, g, evals
        if d >= 0:
            return zoom(alpha, f, d, alpha_prev, f_prev, evals)
        alpha_prev, f_prev, d_prev = alpha, f, d
        alpha *= 2.0
    return None


def lbfgs_minimize(
    fn,
    theta0: np.ndarray,
    max_iters: int,
    memory: int = 10,
    grad_tol: float = 1e-9,
    stall_tol: float = 1e-16,
    callback=None,
) -> LbfgsResult:
    """Minimize fn(theta) -> (loss, grad) with limited-memory BFGS.

    Stops on gradient norm < grad_tol, on a stalled loss, or after
    max_iters. If the line search cannot find an acceptable point the
    best iterate so far is returned with ``line_search_failed`` set.
    """
    x = np.asarray(theta0, dtype=np.float64).copy()
    f, g = fn(x)
    trace = [float(f)]
    s_hist: list[np.ndarray] = []
    y_hist: list[np.ndarray] = []
    rho_hist: list[float] = []
    converged = False
    failed = False
    iteration = 0

    for iteration in range(1, max_iters + 1):
        if np.linalg.norm(g) < grad_tol:
            converged = True
            iteration -= 1
            break

        # two-loop recursion for the search direction
        q = g.copy()
        alphas = []
        for s, y, rho in zip(reversed(s_hist), reversed(y_hist), reversed(rho_hist)):
            a = rho * float(s @ q)
            alphas.append(a)
            q -= a * y
        if y_hist:
            gamma = float(s_hist[-1] @ y_hist[-1]) / float(y_hist[-1] @ y_hist[-1])
            q *= gamma
        for s, y, rho, a in zip(s_hist, y_hist, rho_hist, reversed(alphas)):
            b = rho * float(y @ q)
            q += (a - b) * s
        direction = -q

        result = _strong_wolfe(fn, x, f, g, direction)
        if result is None:
            failed = True
            break
        alpha, f_new, g_new, _ = result

        s = alpha * direction
        y = g_new - g
        sy = float(s @ y)
        if sy > 1e-12 * float(np.linalg.norm(s)) * float(np.linalg.norm(y)):
            s_hist.append(s)
            y_hist.append(y)
            rho_hist.append(1.0 / sy)
            if len(s_hist) > memory:
                s_hist.pop(0)
                y_hist.pop(0)
                rho_hist.pop(0)

        x = x + s
        stalled = abs(f - f_new) <= stall_tol * max(1.0, abs(f))
        f, g = f_new, g_new
        trace.append(float(f))
        if callback is not None:
            callback(iteration, x, float(f), g)
        if stalled:
            converged = True
            break

    return LbfgsResult(
        theta=x,
        loss=float(f),
        trace=trace,
        iterations=iteration,
        converged=converged,
        line_search_failed=failed,
    )


# ---------------------------------------------------------------------------
# CMA-ES


@dataclass
class CmaesResult:
    theta: np.ndarray
    loss: float
    trace: list[float] = field(repr=False)
    generations: int = 0
    restarts: int = 0
    best_theta: np.ndarray | None = None
    best_loss: float = np.inf


def cmaes_minimize(
    fn,
    theta0: np.ndarray,
    max_gens: int,
    popsize: int = 50,
    sigma0: float = 0.3 * np.pi,
    elite_fraction: float = 0.2,
    rng_seed: int = 0,
    ftarget: float | None = None,
    callback=None,
) -> CmaesResult:
    """(mu/mu_w, lambda)-CMA-ES with rank-mu update.

    Selection keeps the top ``elite_fraction`` of each generation with
    log-rank weights; selection is purely rank based, so shifting the
    loss by a constant cannot change the search path. ``trace`` records
    the mean population loss per generation. A degenerate covariance
    triggers a flagged restart with an inflated step size.
    """
    if popsize < 4:
        raise ValueError(f"population size must be >= 4, got {popsize}")
    dim = len(theta0)
    rng = np.random.default_rng(rng_seed)

    mu = max(1, int(np.ceil(elite_fraction * popsize)))
    weights = np.log(mu + 0.5) - np.log(np.arange(1, mu + 1))
    weights /= weights.sum()
    mueff = 1.0 / float(weights @ weights)

    cc = (4.0 + mueff / dim) / (dim + 4.0 + 2.0 * mueff / dim)
    cs = (mueff + 2.0) / (dim + mueff + 5.0)
    c1 = 2.0 / ((dim + 1.3) ** 2 + mueff)
    cmu = min(1.0 - c1, 2.0 * (mueff - 2.0 + 1.0 / mueff) / ((dim + 2.0) ** 2 + mueff))
    damps = 1.0 + 2.0 * max(0.0, np.sqrt((mueff - 1.0) / (dim + 1.0)) - 1.0) + cs
    chi_n = np.sqrt(dim) * (1.0 - 1.0 / (4.0 * dim) + 1.0 / (21.0 * dim**2))

    mean = np.asarray(theta0, dtype=np.float64).copy()
    sigma = float(sigma0)
    cov = np.eye(dim)
    ps = np.zeros(dim)
    pc = np.zeros(dim)
    eig_basis = np.eye(dim)
    eig_scale = np.ones(dim)
    eig_stale = True
    # refresh the eigendecomposition only every few generations (O(dim^3))
    eig_interval = max(1, int(1.0 / ((c1 + cmu) * dim * 10.0)))

    trace: list[float] = []
    best_theta = mean.copy()
    best_loss = np.inf
    restarts = 0
    generation = 0

    for generation in range(1, max_gens + 1):
        if eig_stale or generation % eig_interval == 0:
            eigvals, eig_basis = np.linalg.eigh(cov)
            if not np.all(np.isfinite(eigvals)) or eigvals.min() <= 0 or (
                eigvals.max() / max(eigvals.min(), 1e-300) > 1e14
            ):
                cov = np.eye(dim)
                ps[:] = 0.0
                pc[:] = 0.0
                sigma *= 2.0
                restarts += 1
                eigvals, eig_basis = np.linalg.eigh(cov)
            eig_scale = np.sqrt(eigvals)
            eig_stale = False

        z = rng.standard_normal((popsize, dim))
        steps = (z * eig_scale) @ eig_basis.T
        candidates = mean + sigma * steps
        losses = np.array([fn(c) for c in candidates])

        order = np.argsort(losses, kind="stable")
        elite = candidates[order[:mu]]
        gen_best = float(losses[order[0]])
        if gen_best < best_loss:
            best_loss = gen_best
            best_theta = candidates[order[0]].copy()
        trace.append(float(losses.mean()))

        old_mean = mean
        mean = weights @ elite
        shift = (mean - old_mean) / sigma

        inv_sqrt_shift = eig_basis @ ((eig_basis.T @ shift) / eig_scale)
        ps = (1.0 - cs) * ps + np.sqrt(cs * (2.0 - cs) * mueff) * inv_sqrt_shift
        ps_norm = float(np.linalg.norm(ps))
        hsig = ps_norm / np.sqrt(
            1.0 - (1.0 - cs) ** (2.0 * generation)
        ) / chi_n < 1.4 + 2.0 / (dim + 1.0)
        pc = (1.0 - cc) * pc + hsig * np.sqrt(cc * (2.0 - cc) * mueff) * shift

        elite_steps = (elite - old_mean) / sigma
        rank_mu = (elite_steps.T * weights) @ elite_steps
        cov = (
            (1.0 - c1 - cmu) * cov
            + c1 * (np.outer(pc, pc) + (1.0 - hsig) * cc * (2.0 - cc) * cov)
            + cmu * rank_mu
        )
        sigma *= float(np.exp((cs / damps) * (ps_norm / chi_n - 1.0)))
        if not np.isfinite(sigma) or sigma <= 0:
            sigma = float(sigma0)
            restarts += 1
        eig_stale = eig_stale or (generation % eig_interval == 0)

        if callback is not None:
            callback(generation, mean, trace[-1])
        if ftarget is not None and gen_best <= ftarget:
            break

    final_loss = float(fn(mean)) if max_gens > 0 else np.inf
    return CmaesResult(
        theta=mean,
        loss=final_loss,
        trace=trace,
        generations=generation,
        restarts=restarts,
        best_theta=best_theta,
        best_loss=best_loss,
    )
