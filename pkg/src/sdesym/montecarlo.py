"""Numerical validation: path simulation and finite symmetry-map checks.

Randomness is counter-based so that ensembles are bit-reproducible and
independent of execution order: the normal increment for (seed, path p,
step s, component k) is

    ndtri(u) * sqrt(dt),
    u   = ((v >> 11) + 0.5) * 2^-53,
    v   = mix13(P_p + GOLDEN * (s*m + k + 1)),
    P_p = mix13(K + GOLDEN * (p + 1)),
    K   = mix13(seed XOR GOLDEN),

where GOLDEN = 0x9E3779B97F4A7C15 and mix13 is the Stafford variant-13
SplitMix64 finalizer (z ^= z>>30; z *= 0xBF58476D1CE4E5B9; z ^= z>>27;
z *= 0x94D049BB133111EB; z ^= z>>31).  Normal variates use the inverse
CDF, so any implementation of this recipe reproduces the same paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import expm
from scipy.special import ndtri

from .expr import (
    Const,
    Context,
    Expr,
    TIME,
    Var,
    VarKind,
    eval_array,
    free_vars,
    simplify,
    state,
    wiener,
)
from .expr.calculus import differentiate
from .reduction import SolutionForm
from .sde import ItoSystem, StratSystem
from .symmetry import LinearW, VectorField

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_DIVERGENCE_BOUND = 1e10


def _mix13(z: np.ndarray) -> np.ndarray:
    z = z.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= _M1
    z ^= z >> np.uint64(27)
    z *= _M2
    z ^= z >> np.uint64(31)
    return z


def _stream_key(seed: int) -> np.uint64:
    return _mix13(np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF) ^ GOLDEN]))[0]


def _path_keys(seed: int, n_paths: int) -> np.ndarray:
    key = _stream_key(seed)
    paths = np.arange(1, n_paths + 1, dtype=np.uint64)
    return _mix13(key + GOLDEN * paths)


def _uniforms(path_keys: np.ndarray, positions: np.ndarray) -> np.ndarray:
    """(len(path_keys), len(positions)) uniforms in (0, 1)."""
    lanes = path_keys[:, None] + GOLDEN * (positions[None, :] + np.uint64(1))
    bits = _mix13(lanes)
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53


def step_normals(seed: int, n_paths: int, step: int, m: int, dt: float) -> np.ndarray:
    """Increments Delta W for one time step, shape (n_paths, m)."""
    keys = _path_keys(seed, n_paths)
    positions = (np.uint64(step) * np.uint64(m) + np.arange(m, dtype=np.uint64))
    return ndtri(_uniforms(keys, positions)) * math.sqrt(dt)


@dataclass
class BrownianGrid:
    """A single discretized Brownian path with its increments."""

    t0: float
    T: float
    dt: float
    steps: int
    m: int
    seed: int
    path_index: int
    increments: np.ndarray  # (steps, m)
    w: np.ndarray  # (steps + 1, m), w(t0) = 0

    @staticmethod
    def generate(seed: int, path_index: int, t0: float, T: float, dt: float, m: int) -> "BrownianGrid":
        steps = int(round((T - t0) / dt))
        keys = _path_keys(seed, path_index + 1)[path_index : path_index + 1]
        positions = np.arange(steps * m, dtype=np.uint64)
        incs = (ndtri(_uniforms(keys, positions)) * math.sqrt(dt)).reshape(steps, m)
        w = np.vstack([np.zeros((1, m)), np.cumsum(incs, axis=0)])
        return BrownianGrid(t0, T, dt, steps, m, seed, path_index, incs, w)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.steps + 1)


@dataclass
class Ensemble:
    """Snapshots of an ensemble simulation on a shared time grid."""

    ctx: Context
    scheme: str
    t0: float
    T: float
    dt: float
    steps: int
    n_paths: int
    seed: int
    snap_steps: np.ndarray  # (K,) step indices of the stored snapshots
    states: np.ndarray  # (K, N, n)
    w: np.ndarray  # (K, N, m) cumulative Brownian values
    excluded: np.ndarray  # (N,) bool

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * self.snap_steps

    @property
    def excluded_fraction(self) -> float:
        return float(np.mean(self.excluded))

    def terminal_states(self) -> np.ndarray:
        return self.states[-1]


def _snapshot_steps(steps: int, snapshots: int) -> np.ndarray:
    if snapshots <= 0 or snapshots >= steps:
        return np.arange(steps + 1)
    idx = np.unique(np.round(np.linspace(0, steps, snapshots + 1)).astype(int))
    return idx


def _coefficient_evaluator(ctx: Context, exprs: Sequence[Expr]):
    exprs = [simplify(e) for e in exprs]
    params = dict(ctx.params)

    def call(x: np.ndarray, t: float) -> List[np.ndarray]:
        env = {state(i + 1): x[:, i] for i in range(ctx.n)}
        env[TIME] = t
        return [np.broadcast_to(eval_array(e, env, params), x.shape[:1]).astype(float) for e in exprs]

    return call


def _simulate(
    ctx: Context,
    drift: Sequence[Expr],
    sigma: Sequence[Sequence[Expr]],
    x0: Sequence[float],
    t0: float,
    T: float,
    dt: float,
    n_paths: int,
    seed: int,
    scheme: str,
    snapshots: int,
    dw_transform: Optional[np.ndarray],
) -> Ensemble:
    n, m = ctx.n, ctx.m
    steps = int(round((T - t0) / dt))
    snap = _snapshot_steps(steps, snapshots)
    snap_set = {int(s): i for i, s in enumerate(snap)}

    drift_eval = _coefficient_evaluator(ctx, list(drift))
    sigma_eval = _coefficient_evaluator(ctx, [sigma[i][k] for i in range(n) for k in range(m)])

    keys = _path_keys(seed, n_paths)
    x = np.tile(np.asarray(x0, dtype=float), (n_paths, 1))
    w = np.zeros((n_paths, m))
    alive = np.ones(n_paths, dtype=bool)

    states = np.empty((len(snap), n_paths, n))
    ws = np.empty((len(snap), n_paths, m))
    if 0 in snap_set:
        states[snap_set[0]] = x
        ws[snap_set[0]] = w

    sqrt_dt = math.sqrt(dt)
    with np.errstate(all="ignore"):
        for s in range(steps):
            t = t0 + s * dt
            positions = np.uint64(s) * np.uint64(m) + np.arange(m, dtype=np.uint64)
            dW = ndtri(_uniforms(keys, positions)) * sqrt_dt
            if dw_transform is not None:
                dW = dW @ dw_transform.T
            if scheme == "euler_maruyama":
                f_vals = drift_eval(x, t)
                s_vals = sigma_eval(x, t)
                new_x = x.copy()
                for i in range(n):
                    incr = f_vals[i] * dt
                    for k in range(m):
                        incr = incr + s_vals[i * m + k] * dW[:, k]
                    new_x[:, i] = x[:, i] + incr
            elif scheme == "heun":
                f_vals = drift_eval(x, t)
                s_vals = sigma_eval(x, t)
                pred = x.copy()
                for i in range(n):
                    incr = f_vals[i] * dt
                    for k in range(m):
                        incr = incr + s_vals[i * m + k] * dW[:, k]
                    pred[:, i] = x[:, i] + incr
                f_pred = drift_eval(pred, t + dt)
                s_pred = sigma_eval(pred, t + dt)
                new_x = x.copy()
                for i in range(n):
                    incr = 0.5 * (f_vals[i] + f_pred[i]) * dt
                    for k in range(m):
                        incr = incr + 0.5 * (s_vals[i * m + k] + s_pred[i * m + k]) * dW[:, k]
                    new_x[:, i] = x[:, i] + incr
            else:
                raise ValueError(f"unknown scheme {scheme!r}")

            ok = np.all(np.isfinite(new_x), axis=1) & (
                np.max(np.abs(new_x), axis=1) < _DIVERGENCE_BOUND
            )
            alive &= ok
            x = np.where(alive[:, None], new_x, x)
            w = w + dW
            if (s + 1) in snap_set:
                states[snap_set[s + 1]] = x
                ws[snap_set[s + 1]] = w

    return Ensemble(
        ctx=ctx,
        scheme=scheme,
        t0=t0,
        T=T,
        dt=dt,
        steps=steps,
        n_paths=n_paths,
        seed=seed,
        snap_steps=snap,
        states=states,
        w=ws,
        excluded=~alive,
    )


def euler_maruyama(
    sys: ItoSystem,
    x0: Sequence[float],
    t0: float = 0.0,
    T: float = 1.0,
    dt: float = 1e-3,
    n_paths: int = 1000,
    seed: int = 0,
    snapshots: int = 100,
    dw_transform: Optional[np.ndarray] = None,
) -> Ensemble:
    """Strong order-1/2 explicit scheme for the Ito interpretation:
    x_{s+1} = x_s + f(x_s, t_s) dt + sigma(x_s, t_s) dW_s."""
    return _simulate(
        sys.ctx, sys.f, sys.sigma, x0, t0, T, dt, n_paths, seed,
        "euler_maruyama", snapshots, dw_transform,
    )


def heun_stratonovich(
    sys: StratSystem,
    x0: Sequence[float],
    t0: float = 0.0,
    T: float = 1.0,
    dt: float = 1e-3,
    n_paths: int = 1000,
    seed: int = 0,
    snapshots: int = 100,
    dw_transform: Optional[np.ndarray] = None,
) -> Ensemble:
    """Predictor-corrector (midpoint) scheme converging to the Stratonovich
    interpretation; reuses the same Brownian increments as the Ito scheme
    for a given seed."""
    return _simulate(
        sys.ctx, sys.b, sys.sigma, x0, t0, T, dt, n_paths, seed,
        "heun", snapshots, dw_transform,
    )


# ---------------------------------------------------------------------------
# finite group maps


class FlowError(ValueError):
    pass


def _affine_generator(X: VectorField) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    """If the field is affine in (x, w) with constant coefficients, return
    (L, c) with dz/ds = L z + c over z = (x, w); else None."""
    ctx = X.ctx
    d = ctx.n + ctx.m
    L = np.zeros((d, d))
    c = np.zeros(d)
    coords = [state(i + 1) for i in range(ctx.n)] + [wiener(k + 1) for k in range(ctx.m)]
    components = list(X.phi) + list(X.noise_exprs())
    for row, comp in enumerate(components):
        comp = simplify(comp)
        if TIME in free_vars(comp):
            return None
        remainder = comp
        for col, var in enumerate(coords):
            coeff = simplify(differentiate(comp, var))
            if not isinstance(coeff, Const):
                return None
            L[row, col] = float(coeff.value)
        from .expr import Neg, add, mul

        remainder = simplify(
            add(comp, *(Neg(mul(Const(L[row, col]), Var(v))) for col, v in enumerate(coords)))
        )
        if not isinstance(remainder, Const):
            return None
        c[row] = float(remainder.value)
    return L, c


def flow_map(X: VectorField, s: float) -> Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]]:
    """Finite flow exp(s X) acting on stacked (states, w) arrays.

    Affine fields (all the linear scaling / rotation / shear actions) flow
    exactly through the matrix exponential of the augmented generator;
    anything else is integrated numerically with fixed-step RK4."""
    ctx = X.ctx
    d = ctx.n + ctx.m
    affine = _affine_generator(X)
    if affine is not None:
        L, c = affine
        aug = np.zeros((d + 1, d + 1))
        aug[:d, :d] = L
        aug[:d, d] = c
        Phi = expm(s * aug)

        def apply_affine(states: np.ndarray, w: np.ndarray):
            z = np.concatenate([states, w, np.ones((states.shape[0], 1))], axis=1)
            out = z @ Phi.T
            return out[:, : ctx.n], out[:, ctx.n : d]

        return apply_affine

    params = dict(ctx.params)
    components = [simplify(e) for e in list(X.phi) + list(X.noise_exprs())]

    def velocity(z: np.ndarray) -> np.ndarray:
        env = {state(i + 1): z[:, i] for i in range(ctx.n)}
        env.update({wiener(k + 1): z[:, ctx.n + k] for k in range(ctx.m)})
        env[TIME] = 0.0
        return np.stack(
            [np.broadcast_to(eval_array(e, env, params), z.shape[:1]) for e in components],
            axis=1,
        ).astype(float)

    substeps = 64

    def apply_numeric(states: np.ndarray, w: np.ndarray):
        z = np.concatenate([states, w], axis=1).astype(float)
        h = s / substeps
        with np.errstate(all="ignore"):
            for _ in range(substeps):
                k1 = velocity(z)
                k2 = velocity(z + 0.5 * h * k1)
                k3 = velocity(z + 0.5 * h * k2)
                k4 = velocity(z + h * k3)
                z = z + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        return z[:, : ctx.n], z[:, ctx.n :]

    return apply_numeric


def apply_group_map(ens: Ensemble, X: VectorField, s: float) -> Ensemble:
    """Apply the finite map exp(s X) to every snapshot of an ensemble,
    transforming states and Brownian values consistently."""
    mapping = flow_map(X, s)
    states = np.empty_like(ens.states)
    ws = np.empty_like(ens.w)
    for snap in range(ens.states.shape[0]):
        states[snap], ws[snap] = mapping(ens.states[snap], ens.w[snap])
    excluded = ens.excluded | ~np.all(np.isfinite(states[-1]), axis=1)
    return Ensemble(
        ctx=ens.ctx,
        scheme=ens.scheme + "+map",
        t0=ens.t0,
        T=ens.T,
        dt=ens.dt,
        steps=ens.steps,
        n_paths=ens.n_paths,
        seed=ens.seed,
        snap_steps=ens.snap_steps,
        states=states,
        w=ws,
        excluded=excluded,
    )


# ---------------------------------------------------------------------------
# statistics


@dataclass
class StatsReport:
    times: np.ndarray
    mean: np.ndarray  # (K, n)
    var: np.ndarray
    se: np.ndarray
    n_effective: int
    excluded_fraction: float
    ks_at_terminal: Optional[np.ndarray] = None  # per component, when compared

    def to_csv(self) -> str:
        n = self.mean.shape[1]
        header = ["t"]
        for i in range(1, n + 1):
            header += [f"mean_{i}", f"var_{i}", f"se_{i}"]
        lines = [",".join(header)]
        for row in range(len(self.times)):
            cells = [f"{self.times[row]:.10g}"]
            for i in range(n):
                cells += [
                    f"{self.mean[row, i]:.10g}",
                    f"{self.var[row, i]:.10g}",
                    f"{self.se[row, i]:.10g}",
                ]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "times": self.times.tolist(),
            "mean": self.mean.tolist(),
            "var": self.var.tolist(),
            "se": self.se.tolist(),
            "n_effective": self.n_effective,
            "excluded_fraction": self.excluded_fraction,
        }


def ensemble_stats(ens: Ensemble) -> StatsReport:
    include = ~ens.excluded
    n_eff = int(np.sum(include))
    if n_eff == 0:
        raise FlowError("all paths were excluded")
    data = ens.states[:, include, :]
    mean = data.mean(axis=1)
    var = data.var(axis=1, ddof=1) if n_eff > 1 else np.zeros_like(mean)
    se = np.sqrt(var / n_eff)
    return StatsReport(
        times=ens.times,
        mean=mean,
        var=var,
        se=se,
        n_effective=n_eff,
        excluded_fraction=ens.excluded_fraction,
    )


def ks_statistic(a: np.ndarray, b: np.ndarray) -> float:
    """Two-sample Kolmogorov-Smirnov statistic."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    everything = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, everything, side="right") / len(a)
    cdf_b = np.searchsorted(b, everything, side="right") / len(b)
    return float(np.max(np.abs(cdf_a - cdf_b)))


def ks_threshold(n1: int, n2: int, alpha: float = 1e-3) -> float:
    c = math.sqrt(-0.5 * math.log(alpha / 2.0))
    return c * math.sqrt((n1 + n2) / (n1 * n2))


@dataclass
class ValidationReport:
    verdict: str  # 'pass' | 'fail' | 'inconclusive'
    mean_sigmas: np.ndarray  # |mean difference| / SE per component
    ks: np.ndarray
    ks_limit: float
    excluded_fraction: float
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "mean_sigmas": self.mean_sigmas.tolist(),
            "ks": self.ks.tolist(),
            "ks_limit": self.ks_limit,
            "excluded_fraction": self.excluded_fraction,
            "detail": self.detail,
        }


def symmetry_validation(
    sys,
    X: VectorField,
    s: float,
    x0: Sequence[float],
    t0: float = 0.0,
    T: float = 1.0,
    dt: float = 1e-3,
    n_paths: int = 10000,
    seed: int = 0,
    scheme: str = "euler_maruyama",
    mean_sigma_limit: float = 4.0,
    ks_alpha: float = 1e-3,
    max_excluded: float = 0.05,
) -> ValidationReport:
    """Distributional check that exp(s X) maps solutions to solutions.

    Ensemble (a): solve from x0 and push every path through the finite map.
    Ensemble (b): solve from the mapped initial point, driving the same
    Brownian increments through the map's Wiener-sector action.  For exact
    linear flows the two are nearly pathwise equal; the verdict compares
    terminal means (in units of the standard error of the difference) and
    the per-component Kolmogorov-Smirnov statistic.
    """
    integrate = euler_maruyama if scheme == "euler_maruyama" else heun_stratonovich
    base = integrate(sys, x0, t0, T, dt, n_paths, seed, snapshots=2)
    mapped = apply_group_map(base, X, s)

    mapping = flow_map(X, s)
    x0_arr = np.asarray(x0, dtype=float)[None, :]
    x0_mapped, _ = mapping(x0_arr, np.zeros((1, sys.ctx.m)))
    if isinstance(X.noise, LinearW):
        dw_transform = expm(s * X.noise.matrix)
    else:
        dw_transform = None
    direct = integrate(
        sys, x0_mapped[0], t0, T, dt, n_paths, seed, snapshots=2,
        dw_transform=dw_transform,
    )

    include = ~(mapped.excluded | direct.excluded)
    frac_excluded = 1.0 - float(np.mean(include))
    n_eff = int(np.sum(include))
    a = mapped.terminal_states()[include]
    b = direct.terminal_states()[include]
    se = np.sqrt(a.var(axis=0, ddof=1) / n_eff + b.var(axis=0, ddof=1) / n_eff)
    se = np.where(se == 0, 1e-300, se)
    mean_sigmas = np.abs(a.mean(axis=0) - b.mean(axis=0)) / se
    ks = np.array([ks_statistic(a[:, i], b[:, i]) for i in range(a.shape[1])])
    limit = ks_threshold(n_eff, n_eff, ks_alpha)

    if frac_excluded > max_excluded:
        verdict = "inconclusive"
        detail = f"{frac_excluded:.1%} of paths excluded (> {max_excluded:.0%})"
    elif np.all(mean_sigmas < mean_sigma_limit) and np.all(ks < limit):
        verdict = "pass"
        detail = ""
    else:
        verdict = "fail"
        detail = f"max mean deviation {float(np.max(mean_sigmas)):.2f} SE, max KS {float(np.max(ks)):.4f}"
    return ValidationReport(verdict, mean_sigmas, ks, limit, frac_excluded, detail)


# ---------------------------------------------------------------------------
# evaluation of stochastic quadrature solution forms


def evaluate_solution_form(sf: SolutionForm, grid: BrownianGrid, x0: float) -> np.ndarray:
    """Evaluate x(t) = x0 + int F dt + sum_k int S_k dw^k along one path:
    trapezoidal rule for the dt integral, left-point (non-anticipating)
    sums for the stochastic integrals."""
    params = dict(sf.ctx.params)
    times = grid.times
    K = len(times)

    def values(e: Expr) -> np.ndarray:
        env = {TIME: times}
        for k in range(grid.m):
            env[wiener(k + 1)] = grid.w[:, k]
        return np.broadcast_to(eval_array(e, env, params), (K,)).astype(float)

    drift_vals = values(sf.drift)
    out = np.empty(K)
    out[0] = x0
    drift_cum = np.concatenate(
        [[0.0], np.cumsum(0.5 * (drift_vals[1:] + drift_vals[:-1]) * grid.dt)]
    )
    stoch_cum = np.zeros(K)
    for k, noise in enumerate(sf.noises):
        noise_vals = values(noise)
        stoch_cum += np.concatenate(
            [[0.0], np.cumsum(noise_vals[:-1] * grid.increments[:, k])]
        )
    return x0 + drift_cum + stoch_cum


def solution_form_terminals(
    sf: SolutionForm,
    t0: float,
    T: float,
    dt: float,
    n_paths: int,
    seed: int,
    x0: float,
) -> np.ndarray:
    """Terminal values of the solution form over the same Brownian ensemble
    that `euler_maruyama` would generate for (seed, n_paths); streamed, so
    nothing but running sums is stored."""
    params = dict(sf.ctx.params)
    steps = int(round((T - t0) / dt))
    keys = _path_keys(seed, n_paths)
    m = sf.ctx.m
    w = np.zeros((n_paths, m))
    drift_sum = np.zeros(n_paths)
    stoch_sum = np.zeros(n_paths)
    sqrt_dt = math.sqrt(dt)

    def coeff_values(e: Expr, t: float, wv: np.ndarray) -> np.ndarray:
        env = {TIME: t}
        for k in range(m):
            env[wiener(k + 1)] = wv[:, k]
        return np.broadcast_to(eval_array(e, env, params), (n_paths,)).astype(float)

    with np.errstate(all="ignore"):
        prev_drift = coeff_values(sf.drift, t0, w)
        for s in range(steps):
            t = t0 + s * dt
            positions = np.uint64(s) * np.uint64(m) + np.arange(m, dtype=np.uint64)
            dW = ndtri(_uniforms(keys, positions)) * sqrt_dt
            for k in range(m):
                stoch_sum += coeff_values(sf.noises[k], t, w) * dW[:, k]
            w = w + dW
            new_drift = coeff_values(sf.drift, t + dt, w)
            drift_sum += 0.5 * (prev_drift + new_drift) * dt
            prev_drift = new_drift
    return x0 + drift_sum + stoch_sum
