"""SDE model types, the Ito Laplacian, the associated first/second order
operators, and Ito <-> Stratonovich conversion.

Conventions: the diffusion matrix sigma has row i = state component and
column k = Wiener component; indices are raised and lowered with the
Euclidean metric, so (sigma sigma^T)^{jl} = sum_k sigma^j_k sigma^l_k.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Tuple

from .expr import (
    Const,
    Context,
    Expr,
    HALF,
    Neg,
    TIME,
    VarKind,
    add,
    differentiate,
    free_vars,
    mul,
    simplify,
    state,
    wiener,
)

Vector = Tuple[Expr, ...]
Matrix = Tuple[Tuple[Expr, ...], ...]


class ModelError(ValueError):
    pass


def _check_coefficients(ctx: Context, f: Sequence[Expr], sigma, what: str):
    f = tuple(f)
    sigma = tuple(tuple(row) for row in sigma)
    if len(f) != ctx.n:
        raise ModelError(f"{what}: drift has {len(f)} components, expected n = {ctx.n}")
    if len(sigma) != ctx.n or any(len(row) != ctx.m for row in sigma):
        raise ModelError(f"{what}: diffusion matrix must be {ctx.n} x {ctx.m}")
    for label, e in [(f"drift[{i+1}]", c) for i, c in enumerate(f)] + [
        (f"sigma[{i+1}][{k+1}]", sigma[i][k])
        for i in range(ctx.n)
        for k in range(ctx.m)
    ]:
        for v in free_vars(e):
            if v.kind is VarKind.WIENER:
                raise ModelError(
                    f"{what}: {label} depends on {v.name}; coefficients may "
                    "depend only on states and t"
                )
            if v.kind is VarKind.STATE and v.index > ctx.n:
                raise ModelError(f"{what}: {label} uses undeclared state {v.name}")
    return f, sigma


@dataclass(frozen=True)
class ItoSystem:
    """dx^i = f^i(x,t) dt + sigma^i_k(x,t) dw^k"""

    ctx: Context
    f: Vector
    sigma: Matrix

    def __post_init__(self):
        f, sigma = _check_coefficients(self.ctx, self.f, self.sigma, "Ito system")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "sigma", sigma)

    @property
    def n(self) -> int:
        return self.ctx.n

    @property
    def m(self) -> int:
        return self.ctx.m


@dataclass(frozen=True)
class StratSystem:
    """dx^i = b^i(x,t) dt + sigma^i_k(x,t) o dw^k"""

    ctx: Context
    b: Vector
    sigma: Matrix

    def __post_init__(self):
        b, sigma = _check_coefficients(self.ctx, self.b, self.sigma, "Stratonovich system")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "sigma", sigma)

    @property
    def n(self) -> int:
        return self.ctx.n

    @property
    def m(self) -> int:
        return self.ctx.m


@dataclass(frozen=True)
class DriftCorrection:
    """rho^i = (1/2) sum_{j,k} (d sigma^i_j / d x^k) sigma^k_j"""

    rho: Vector


def ito_laplacian(u: Expr, sys) -> Expr:
    """Second-order operator from the Ito rule:

    Delta u = sum_k u_{w^k w^k}
            + sum_{j,l} (sigma sigma^T)^{jl} u_{x^j x^l}
            + 2 sum_{j,k} sigma^j_k u_{x^j w^k}
    """
    ctx = sys.ctx
    sigma = sys.sigma
    pieces = []
    for k in range(1, ctx.m + 1):
        pieces.append(differentiate(differentiate(u, wiener(k)), wiener(k)))
    dstate = {j: differentiate(u, state(j)) for j in range(1, ctx.n + 1)}
    for j in range(1, ctx.n + 1):
        for l in range(1, ctx.n + 1):
            a_jl = add(
                *(mul(sigma[j - 1][k], sigma[l - 1][k]) for k in range(ctx.m))
            )
            pieces.append(mul(a_jl, differentiate(dstate[j], state(l))))
    for j in range(1, ctx.n + 1):
        for k in range(1, ctx.m + 1):
            pieces.append(
                mul(Const(2), sigma[j - 1][k - 1], differentiate(dstate[j], wiener(k)))
            )
    return simplify(add(*pieces))


def drift_correction(sigma: Matrix, ctx: Context) -> DriftCorrection:
    sigma = tuple(tuple(row) for row in sigma)
    rho = []
    for i in range(1, ctx.n + 1):
        pieces = []
        for j in range(1, ctx.m + 1):
            for k in range(1, ctx.n + 1):
                pieces.append(
                    mul(
                        differentiate(sigma[i - 1][j - 1], state(k)),
                        sigma[k - 1][j - 1],
                    )
                )
        rho.append(simplify(mul(HALF, add(*pieces))))
    return DriftCorrection(tuple(rho))


def ito_to_strat(sys: ItoSystem) -> StratSystem:
    """Same diffusion; drift shifted down by the correction: b = f - rho."""
    rho = drift_correction(sys.sigma, sys.ctx).rho
    b = tuple(simplify(add(fi, Neg(ri))) for fi, ri in zip(sys.f, rho))
    return StratSystem(sys.ctx, b, sys.sigma)


def strat_to_ito(sys: StratSystem) -> ItoSystem:
    """Inverse conversion: f = b + rho."""
    rho = drift_correction(sys.sigma, sys.ctx).rho
    f = tuple(simplify(add(bi, ri)) for bi, ri in zip(sys.b, rho))
    return ItoSystem(sys.ctx, f, sys.sigma)


def sigma_rank_info(sys, box=None, points: int = 8, seed: int = 0) -> dict:
    """Informational only: numeric rank of the diffusion matrix at sample
    points.  No rank condition is imposed anywhere; a rank-deficient sigma
    simply means some state directions are driven deterministically."""
    import numpy as np

    from .expr import SamplingBox, TIME
    from .expr.evaluate import EvaluationError, evaluate

    box = box or SamplingBox()
    rng = np.random.default_rng(seed)
    ctx = sys.ctx
    ranks = []
    for _ in range(points):
        point = {TIME: float(rng.uniform(*box.time))}
        for i in range(1, ctx.n + 1):
            point[state(i)] = float(rng.uniform(*box.for_var(state(i))))
        try:
            mat = np.array(
                [
                    [evaluate(sys.sigma[i][k], point, dict(ctx.params)) for k in range(ctx.m)]
                    for i in range(ctx.n)
                ]
            )
        except EvaluationError:
            continue
        ranks.append(int(np.linalg.matrix_rank(mat, tol=1e-10)))
    if not ranks:
        return {"rank_min": None, "rank_max": None, "points": 0}
    return {
        "rank_min": min(ranks),
        "rank_max": max(ranks),
        "full_rank": min(ranks) == min(ctx.n, ctx.m),
        "points": len(ranks),
    }


def transport_operator(u: Expr, sys: ItoSystem) -> Expr:
    """L0 = d/dt + f^j d/dx^j + (1/2) Delta"""
    pieces = [differentiate(u, TIME)]
    for j in range(1, sys.ctx.n + 1):
        pieces.append(mul(sys.f[j - 1], differentiate(u, state(j))))
    pieces.append(mul(HALF, ito_laplacian(u, sys)))
    return simplify(add(*pieces))


def shift_operator(u: Expr, sys: ItoSystem, k: int) -> Expr:
    """L_k = d/dw^k + sigma^j_k d/dx^j"""
    if not 1 <= k <= sys.ctx.m:
        raise ModelError(f"wiener index {k} outside 1..{sys.ctx.m}")
    pieces = [differentiate(u, wiener(k))]
    for j in range(1, sys.ctx.n + 1):
        pieces.append(mul(sys.sigma[j - 1][k - 1], differentiate(u, state(j))))
    return simplify(add(*pieces))
