"""Comparison fusion strategies: no-comm, mean, median, greedy-local, and the
covariance-based fusers (Kalman, Bayes, covariance intersection, covariance union).

Every fuser consumes the raw expert predictions shared across the current
neighborhood and is memoryless step to step; members are processed in
ascending robot-id order so results are deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

from .geometry import Mat2, Vec2, mat2_scaled_identity

FLAG_REGULARIZED_COVARIANCE = "RegularizedCovariance"

# Covariances with a smaller minimum eigenvalue get lifted by REG_LAMBDA * I.
SINGULAR_EIG_TOL = 1e-12
REG_LAMBDA = 1e-9


class FusionMember(NamedTuple):
    robot_id: int
    mean: Vec2
    cov: Mat2
    cumulative_loss: float


@dataclass(frozen=True)
class FusionInput:
    """Predictions available to one robot: itself plus its current neighbors."""

    own_id: int
    members: tuple[FusionMember, ...]

    def __post_init__(self):
        if not self.members:
            raise ValueError("fusion input must be nonempty")
        if self.own_id not in {m.robot_id for m in self.members}:
            raise ValueError("fusion input must include the fusing robot itself")
        object.__setattr__(
            self, "members", tuple(sorted(self.members, key=lambda m: m.robot_id))
        )


class FusedPrediction(NamedTuple):
    mean: Vec2
    cov: Mat2
    chosen_id: Optional[int] = None
    flags: tuple[str, ...] = ()


def _regularize(cov: Mat2) -> tuple[Mat2, bool]:
    lo, _ = cov.sym_eigvals()
    if lo < SINGULAR_EIG_TOL:
        return Mat2(cov.xx + REG_LAMBDA, cov.xy, cov.yx, cov.yy + REG_LAMBDA), True
    return cov, False


def _inv2(m: Mat2) -> Mat2:
    det = m.xx * m.yy - m.xy * m.yx
    return Mat2(m.yy / det, -m.xy / det, -m.yx / det, m.xx / det)


def _matvec(m: Mat2, v: Vec2) -> Vec2:
    return Vec2(m.xx * v[0] + m.xy * v[1], m.yx * v[0] + m.yy * v[1])


def _sym_eig2(m: Mat2) -> tuple[tuple[float, float], tuple[Vec2, Vec2]]:
    """Eigenvalues (ascending) and orthonormal eigenvectors of a symmetric 2x2."""
    b = 0.5 * (m.xy + m.yx)
    if b == 0.0:
        if m.xx <= m.yy:
            return (m.xx, m.yy), (Vec2(1.0, 0.0), Vec2(0.0, 1.0))
        return (m.yy, m.xx), (Vec2(0.0, 1.0), Vec2(1.0, 0.0))
    mid = 0.5 * (m.xx + m.yy)
    r = math.hypot(0.5 * (m.xx - m.yy), b)
    lo, hi = mid - r, mid + r
    # (b, hi - xx) and (hi - yy, b) both span the top eigenvector; take the stabler
    v1 = (b, hi - m.xx)
    v2 = (hi - m.yy, b)
    vx, vy = v1 if math.hypot(*v1) >= math.hypot(*v2) else v2
    n = math.hypot(vx, vy)
    top = Vec2(vx / n, vy / n)
    return (lo, hi), (Vec2(-top[1], top[0]), top)


def fuse_nocomm(inputs: FusionInput) -> FusedPrediction:
    """The robot's own expert prediction, neighbors ignored."""
    for m in inputs.members:
        if m.robot_id == inputs.own_id:
            return FusedPrediction(m.mean, m.cov, chosen_id=m.robot_id)
    raise AssertionError("own member missing")


def fuse_mean(inputs: FusionInput) -> FusedPrediction:
    n = len(inputs.members)
    sx = sy = 0.0
    for m in inputs.members:
        sx += m.mean[0]
        sy += m.mean[1]
    return FusedPrediction(Vec2(sx / n, sy / n), mat2_scaled_identity(1.0))


def fuse_median(inputs: FusionInput) -> FusedPrediction:
    xs = sorted(m.mean[0] for m in inputs.members)
    ys = sorted(m.mean[1] for m in inputs.members)
    k = len(xs)
    if k % 2 == 1:
        med = Vec2(xs[k // 2], ys[k // 2])
    else:
        med = Vec2(0.5 * (xs[k // 2 - 1] + xs[k // 2]), 0.5 * (ys[k // 2 - 1] + ys[k // 2]))
    return FusedPrediction(med, mat2_scaled_identity(1.0))


def fuse_greedy_local(inputs: FusionInput) -> FusedPrediction:
    """Prediction of the member with the least shared cumulative loss.

    Ties prefer the fusing robot itself, then the lowest robot id.
    """
    best = min(
        inputs.members,
        key=lambda m: (m.cumulative_loss, m.robot_id != inputs.own_id, m.robot_id),
    )
    return FusedPrediction(best.mean, best.cov, chosen_id=best.robot_id)


def fuse_kalman(inputs: FusionInput) -> FusedPrediction:
    """Information-form fusion assuming uncorrelated inputs."""
    flags: tuple[str, ...] = ()
    sxx = sxy = syx = syy = 0.0
    ix = iy = 0.0
    for m in inputs.members:
        cov, regged = _regularize(m.cov)
        if regged:
            flags = (FLAG_REGULARIZED_COVARIANCE,)
        info = _inv2(cov)
        sxx += info.xx
        sxy += info.xy
        syx += info.yx
        syy += info.yy
        v = _matvec(info, m.mean)
        ix += v[0]
        iy += v[1]
    cov_f = _inv2(Mat2(sxx, sxy, syx, syy))
    return FusedPrediction(_matvec(cov_f, Vec2(ix, iy)), cov_f, flags=flags)


def _ci_weights_heuristic(covs: Sequence[Mat2]) -> list[float]:
    raw = [1.0 / c.trace() for c in covs]
    total = sum(raw)
    return [r / total for r in raw]


def _ci_fuse_with_weights(
    members: Sequence[FusionMember], covs: Sequence[Mat2], omegas: Sequence[float]
) -> tuple[Vec2, Mat2]:
    sxx = sxy = syx = syy = 0.0
    ix = iy = 0.0
    for m, cov, w in zip(members, covs, omegas):
        info = _inv2(cov)
        sxx += w * info.xx
        sxy += w * info.xy
        syx += w * info.yx
        syy += w * info.yy
        v = _matvec(info, m.mean)
        ix += w * v[0]
        iy += w * v[1]
    cov_f = _inv2(Mat2(sxx, sxy, syx, syy))
    return _matvec(cov_f, Vec2(ix, iy)), cov_f


def _golden_section(f, lo: float, hi: float, tol: float = 1e-6, iters: int = 80) -> float:
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if b - a < tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def _ci_weights_exact(members, covs) -> list[float]:
    k = len(covs)
    if k == 1:
        return [1.0]
    if k == 2:

        def trace_at(w):
            return _ci_fuse_with_weights(members, covs, [w, 1.0 - w])[1].trace()

        w = _golden_section(trace_at, 0.0, 1.0)
        return [w, 1.0 - w]
    omegas = [1.0 / k] * k
    for _ in range(50):
        prev = list(omegas)
        for j in range(k):
            rest = 1.0 - omegas[j]
            shares = (
                [omegas[i] / rest for i in range(k) if i != j]
                if rest > 0.0
                else [1.0 / (k - 1)] * (k - 1)
            )

            def trace_at(wj, j=j, shares=shares):
                om = []
                s = iter(shares)
                for i in range(k):
                    om.append(wj if i == j else (1.0 - wj) * next(s))
                return _ci_fuse_with_weights(members, covs, om)[1].trace()

            wj = _golden_section(trace_at, 0.0, 1.0)
            omegas = [
                wj if i == j else (1.0 - wj) * (omegas[i] / rest if rest > 0 else 1.0 / (k - 1))
                for i in range(k)
            ]
        if max(abs(a - b) for a, b in zip(omegas, prev)) < 1e-6:
            break
    return omegas


def fuse_ci(inputs: FusionInput, exact: bool = False) -> FusedPrediction:
    """Covariance intersection: convex combination of information matrices.

    Default weights follow the fast inverse-trace heuristic; `exact` switches
    to trace-minimizing search.
    """
    flags: tuple[str, ...] = ()
    covs = []
    for m in inputs.members:
        cov, regged = _regularize(m.cov)
        if regged:
            flags = (FLAG_REGULARIZED_COVARIANCE,)
        covs.append(cov)
    if exact:
        omegas = _ci_weights_exact(inputs.members, covs)
    else:
        omegas = _ci_weights_heuristic(covs)
    mean, cov_f = _ci_fuse_with_weights(inputs.members, covs, omegas)
    return FusedPrediction(mean, cov_f, flags=flags)


def fuse_bayes(inputs: FusionInput) -> FusedPrediction:
    """Gaussian-product fusion with covariance inflated by the member count.

    Mean matches Kalman fusion; the inflation hedges the unknown
    cross-correlation the product form ignores, placing this fuser between
    Kalman fusion and covariance intersection in conservatism.
    """
    kf = fuse_kalman(inputs)
    kappa = float(len(inputs.members))
    cov = Mat2(kappa * kf.cov.xx, kappa * kf.cov.xy, kappa * kf.cov.yx, kappa * kf.cov.yy)
    return FusedPrediction(kf.mean, cov, flags=kf.flags)


def pair_union(
    m1: Vec2, c1: Mat2, m2: Vec2, c2: Mat2, mean_rule: str = "midpoint"
) -> tuple[Vec2, Mat2, bool]:
    """Covariance union of two estimates: a mean on the segment between the
    input means and a covariance consistent with both inputs shifted there.

    mean rules: 'midpoint' halves the segment; 'grid' searches 101 segment
    points for the trace-minimal union; 'balanced' places the mean where the
    two shifted candidate traces equalize (the covariance-weighted closed form,
    which sticks to whichever input is already the least certain).
    """

    def union_at(u: Vec2) -> tuple[Mat2, bool]:
        d1x, d1y = u[0] - m1[0], u[1] - m1[1]
        d2x, d2y = u[0] - m2[0], u[1] - m2[1]
        u1 = Mat2(c1.xx + d1x * d1x, c1.xy + d1x * d1y, c1.yx + d1y * d1x, c1.yy + d1y * d1y)
        u2 = Mat2(c2.xx + d2x * d2x, c2.xy + d2x * d2y, c2.yx + d2y * d2x, c2.yy + d2y * d2y)
        return _matrix_max(u1, u2)

    if mean_rule == "grid":
        best_u = None
        best_cov = None
        best_tr = math.inf
        regged = False
        for k in range(101):
            f = k / 100.0
            u = Vec2(m1[0] + f * (m2[0] - m1[0]), m1[1] + f * (m2[1] - m1[1]))
            cov, r = union_at(u)
            if cov.trace() < best_tr:
                best_tr = cov.trace()
                best_u, best_cov, regged = u, cov, r
        return best_u, best_cov, regged
    if mean_rule == "balanced":
        dx, dy = m2[0] - m1[0], m2[1] - m1[1]
        dist = math.hypot(dx, dy)
        if dist < 1e-12:
            f = 0.5
        else:
            # tr(c1) + d1^2 = tr(c2) + d2^2 with d1 + d2 = dist, clamped to the segment
            d1 = 0.5 * (dist + (c2.trace() - c1.trace()) / dist)
            f = min(max(d1 / dist, 0.0), 1.0)
        u = Vec2(m1[0] + f * dx, m1[1] + f * dy)
        cov, regged = union_at(u)
        return u, cov, regged
    if mean_rule != "midpoint":
        raise ValueError(f"unknown covariance-union mean rule: {mean_rule!r}")
    u = Vec2(0.5 * (m1[0] + m2[0]), 0.5 * (m1[1] + m2[1]))
    cov, regged = union_at(u)
    return u, cov, regged


def _matrix_max(u1: Mat2, u2: Mat2) -> tuple[Mat2, bool]:
    """Joint-diagonalization upper bound: the matrix dominating u1 and u2 that is
    minimal in the basis where both are diagonal."""
    u1r, regged = _regularize(u1)
    # lower Cholesky of u1r
    la = math.sqrt(u1r.xx)
    lb = u1r.yx / la
    rem = u1r.yy - lb * lb
    lc = math.sqrt(rem) if rem > 0.0 else math.sqrt(REG_LAMBDA)
    # B = Linv @ u2 @ Linv'
    inv_a = 1.0 / la
    inv_b = -lb / (la * lc)
    inv_c = 1.0 / lc
    # rows of Linv: (inv_a, 0), (inv_b, inv_c)
    b00 = inv_a * (u2.xx * inv_a)
    b01 = inv_a * (u2.xx * inv_b + u2.xy * inv_c)
    b11 = inv_b * (u2.xx * inv_b + u2.xy * inv_c) + inv_c * (u2.yx * inv_b + u2.yy * inv_c)
    (lo, hi), (vlo, vhi) = _sym_eig2(Mat2(b00, b01, b01, b11))
    dlo = max(lo, 1.0)
    dhi = max(hi, 1.0)
    # M = L Q diag(d) Q' L'
    q00, q10 = vlo
    q01, q11 = vhi
    # W = L @ Q with L = [[la,0],[lb,lc]]
    w00 = la * q00
    w01 = la * q01
    w10 = lb * q00 + lc * q10
    w11 = lb * q01 + lc * q11
    mxx = dlo * w00 * w00 + dhi * w01 * w01
    mxy = dlo * w00 * w10 + dhi * w01 * w11
    myy = dlo * w10 * w10 + dhi * w11 * w11
    return Mat2(mxx, mxy, mxy, myy), regged


def fuse_cu(
    inputs: FusionInput, exact_mean: bool = False, mean_rule: Optional[str] = None
) -> FusedPrediction:
    """Sequential pairwise covariance union in ascending robot-id order.

    Each pairwise step picks a fused mean on the segment between the two means
    (midpoint by default, trace-grid-searched with `exact_mean`, or the
    covariance-balanced closed form) and a covariance large enough to be
    consistent with both inputs after shifting to that mean.
    """
    members = inputs.members
    mean, cov = members[0].mean, members[0].cov
    flags: tuple[str, ...] = ()
    rule = mean_rule or ("grid" if exact_mean else "midpoint")
    for m in members[1:]:
        mean, cov, regged = pair_union(mean, cov, m.mean, m.cov, rule)
        if regged:
            flags = (FLAG_REGULARIZED_COVARIANCE,)
    return FusedPrediction(mean, cov, flags=flags)


STRATEGIES = ("d2eal", "nocomm", "mean", "median", "greedy", "kf", "ci", "bf", "cu")


def fuse(
    strategy: str,
    inputs: FusionInput,
    ci_exact: bool = False,
    cu_mean_rule: str = "midpoint",
) -> FusedPrediction:
    """Dispatch a memoryless fusion strategy by config key."""
    if strategy == "nocomm":
        return fuse_nocomm(inputs)
    if strategy == "mean":
        return fuse_mean(inputs)
    if strategy == "median":
        return fuse_median(inputs)
    if strategy == "greedy":
        return fuse_greedy_local(inputs)
    if strategy == "kf":
        return fuse_kalman(inputs)
    if strategy == "ci":
        return fuse_ci(inputs, exact=ci_exact)
    if strategy == "bf":
        return fuse_bayes(inputs)
    if strategy == "cu":
        return fuse_cu(inputs, mean_rule=cu_mean_rule)
    raise ValueError(f"unknown fusion strategy: {strategy!r}")
