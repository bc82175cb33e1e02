"""Exact Euclidean projections onto the feasible sets of the design problem:
the BS sum-power ball, the per-antenna row box, the precoder ellipsoid
{w : sum_k w_k^H Psi w_k <= P}, and the joint RIS box-intersect-ellipsoid set
{phi : |phi_i| <= eta_i, phi^H Diag(lam) phi <= P}.

The two quadratic sets need a one-dimensional dual search.  Both targets are
monotone in their multiplier, so a guarded bisection (lower bracket 0, upper
bracket doubled from 1 until the target is undershot) converges; it stops on
an absolute residual of 1e-10 times the radius, or after 200 iterations, in
which case the returned certificate is flagged.

Every dual-based projection returns a :class:`ProjectionCertificate` with the
multiplier and scale-normalized KKT residuals (stationarity, complementary
slackness, feasibility).
"""

from dataclasses import dataclass

import numpy as np

BISECT_REL_TOL = 1e-10
BISECT_MAX_ITERS = 200
# Identity-branch slack: inputs this close to the boundary count as feasible,
# which makes re-projection an exact no-op (idempotence) while keeping
# constraint violations within 1e-9 relative.
FEASIBLE_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class EllipsoidSpec:
    """Quadratic-set shape: either a positive diagonal `diag` (length N) or a
    Hermitian PSD `matrix` (M x M), plus the radius (watts)."""

    radius: float
    diag: np.ndarray | None = None
    matrix: np.ndarray | None = None

    def __post_init__(self):
        if (self.diag is None) == (self.matrix is None):
            raise ValueError("exactly one of diag / matrix must be given")
        if self.diag is not None:
            object.__setattr__(self, "diag", np.asarray(self.diag, dtype=float))
            if self.diag.ndim != 1 or np.any(self.diag <= 0.0):
                raise ValueError("diagonal ellipsoid weights must be positive")
        if not np.isfinite(self.radius):
            raise ValueError("radius must be finite")


@dataclass(frozen=True)
class ProjectionCertificate:
    """Dual variable plus scale-normalized KKT residuals.  On a clean exit all
    residuals are below the bisection tolerance; `flagged` marks degenerate
    paths (nonpositive radius, bisection iteration cap)."""

    dual: float
    stationarity: float
    complementary_slackness: float
    feasibility: float
    iterations: int = 0
    flagged: bool = False
    note: str = ""


def _bisect_decreasing(fn, target: float, abs_tol: float,
                       max_iters: int = BISECT_MAX_ITERS):
    """Root of the non-increasing `fn` against `target`, assuming
    fn(0) > target.  Returns (x, iterations, converged); on iteration
    exhaustion the feasible (undershooting) bracket end is returned."""
    lo = 0.0
    hi = 1.0
    iters = 0
    while fn(hi) > target:
        lo = hi
        hi *= 2.0
        iters += 1
        if hi > 1e300:
            return hi, iters, False
    for _ in range(max_iters):
        mid = 0.5 * (lo + hi)
        val = fn(mid)
        iters += 1
        if abs(val - target) <= abs_tol:
            return mid, iters, True
        if val > target:
            lo = mid
        else:
            hi = mid
    return hi, iters, False


def project_ball(w: np.ndarray, p_bs: float) -> np.ndarray:
    """Closest point with total power sum_k ||w_k||^2 <= p_bs."""
    if p_bs <= 0.0:
        raise ValueError("p_bs must be positive")
    total = float(np.sum(np.abs(w) ** 2))
    if total <= p_bs:
        return w
    return w * np.sqrt(p_bs / total)


def project_per_antenna(w: np.ndarray, p_bs: float,
                        num_antennas: int | None = None) -> np.ndarray:
    """Row-separable projection onto ||row_m||^2 <= p_bs / M for every
    antenna m."""
    if p_bs <= 0.0:
        raise ValueError("p_bs must be positive")
    m = w.shape[0]
    if num_antennas is not None and num_antennas != m:
        raise ValueError(f"precoder has {m} rows, expected {num_antennas}")
    cap = p_bs / m
    row_norm = np.sqrt(np.sum(np.abs(w) ** 2, axis=1))
    with np.errstate(divide="ignore"):
        scale = np.minimum(1.0, np.sqrt(cap) / np.where(row_norm > 0, row_norm, 1.0))
    return w * scale[:, None]


def project_ellipsoid(w: np.ndarray,
                      spec: EllipsoidSpec) -> tuple[np.ndarray, ProjectionCertificate]:
    """Projection onto {w : sum_k w_k^H Psi w_k <= P} for Hermitian PSD Psi.

    If infeasible the solution is w_k -> (I + 2 nu Psi)^{-1} w_k with the
    multiplier nu > 0 found by bisection on the constraint value, which is
    strictly decreasing in nu.  A nonpositive radius degenerates to the
    nu -> inf limit: the component of w in the null space of Psi (the zero
    point when Psi is positive definite); the certificate is then flagged.
    """
    psi = spec.matrix
    if psi is None:
        raise ValueError("project_ellipsoid needs a matrix-shaped spec")
    scale = float(np.max(np.abs(psi))) if psi.size else 0.0
    if float(np.max(np.abs(psi - psi.conj().T))) > 1e-8 * (1.0 + scale):
        raise ValueError("Psi must be Hermitian")
    radius = spec.radius

    value = float(np.real(np.sum(w.conj() * (psi @ w))))
    if radius > 0.0 and value <= radius * (1.0 + FEASIBLE_SLACK):
        return w, ProjectionCertificate(
            dual=0.0, stationarity=0.0, complementary_slackness=0.0,
            feasibility=max(0.0, (value - radius) / radius))

    eigval, eigvec = np.linalg.eigh(psi)
    eigval = np.maximum(eigval, 0.0)
    w_rot = eigvec.conj().T @ w
    mode_power = np.sum(np.abs(w_rot) ** 2, axis=1)

    if radius <= 0.0:
        null = eigval <= 1e-12 * max(float(eigval[-1]), 1.0)
        out = eigvec[:, null] @ w_rot[null]
        residual = float(np.real(np.sum(out.conj() * (psi @ out))))
        return out, ProjectionCertificate(
            dual=np.inf, stationarity=0.0, complementary_slackness=0.0,
            feasibility=max(0.0, residual), flagged=True,
            note="nonpositive radius: returned the null-space component")

    def constraint_value(nu):
        return float(np.sum(eigval * mode_power / (1.0 + 2.0 * nu * eigval) ** 2))

    nu, iters, converged = _bisect_decreasing(
        constraint_value, radius, BISECT_REL_TOL * radius)
    shrink = 1.0 / (1.0 + 2.0 * nu * eigval)
    out = eigvec @ (w_rot * shrink[:, None])
    value_out = float(np.real(np.sum(out.conj() * (psi @ out))))
    stationarity = float(np.linalg.norm(out + 2.0 * nu * (psi @ out) - w)
                         / (1.0 + np.linalg.norm(w)))
    cert = ProjectionCertificate(
        dual=nu,
        stationarity=stationarity,
        complementary_slackness=abs(nu * (value_out - radius))
        / ((1.0 + nu) * max(radius, 1e-300)),
        feasibility=max(0.0, (value_out - radius) / radius),
        iterations=iters,
        flagged=not converged,
        note="" if converged else "bisection iteration cap reached",
    )
    return out, cert


def box_ellipsoid_amplitudes(amp: np.ndarray, eta: np.ndarray,
                             lam: np.ndarray, gamma: float) -> np.ndarray:
    """Candidate amplitudes min(|phi_i| / (1 + gamma lam_i), eta_i) of the
    joint projection at dual value gamma.  The induced constraint value
    sum_i lam_i amp_i^2 is non-increasing in gamma, which justifies the
    bisection."""
    return np.minimum(amp / (1.0 + gamma * lam), eta)


def project_box_ellipsoid(phi: np.ndarray, eta: np.ndarray,
                          spec: EllipsoidSpec,
                          p_ris: float | None = None
                          ) -> tuple[np.ndarray, ProjectionCertificate]:
    """Projection onto {|phi_i| <= eta_i} intersected with
    {phi^H Diag(lam) phi <= P_A}; semi-closed form, phases preserved.

    Stationarity of the per-coordinate KKT system forces the output to keep
    the input's phase, so only the amplitudes move: clip to the caps, and if
    the clipped point still exceeds the power budget shrink coordinate i by
    1/(1 + gamma lam_i) before clipping, bisecting gamma >= 0 until the power
    constraint holds with equality.  Entries with phi_i = 0 stay at 0.
    """
    lam = spec.diag
    if lam is None:
        raise ValueError("project_box_ellipsoid needs a diagonal spec")
    eta = np.asarray(eta, dtype=float)
    if np.any(eta <= 0.0):
        raise ValueError("element caps eta must be positive")
    budget = spec.radius if p_ris is None else p_ris
    if budget <= 0.0:
        raise ValueError("RIS power budget must be positive")

    amp = np.abs(phi)
    unit = np.where(amp > 0.0, phi / np.where(amp > 0.0, amp, 1.0), 0.0 + 0.0j)
    clipped = np.minimum(amp, eta)
    power0 = float(lam @ clipped ** 2)

    if np.all(amp <= eta) and power0 <= budget * (1.0 + FEASIBLE_SLACK):
        return phi, ProjectionCertificate(
            dual=0.0, stationarity=0.0, complementary_slackness=0.0,
            feasibility=max(0.0, (power0 - budget) / budget))
    if power0 <= budget * (1.0 + FEASIBLE_SLACK):
        gamma, iters, converged = 0.0, 0, True
        out_amp = clipped
    else:
        def constraint_value(g):
            return float(lam @ box_ellipsoid_amplitudes(amp, eta, lam, g) ** 2)

        gamma, iters, converged = _bisect_decreasing(
            constraint_value, budget, BISECT_REL_TOL * budget)
        out_amp = box_ellipsoid_amplitudes(amp, eta, lam, gamma)

    out = out_amp * unit

    # Cap multipliers beta_i are nonzero only where the cap binds; there the
    # stationarity equation fixes beta_i = |phi_i|/eta_i - 1 - gamma lam_i.
    at_cap = out_amp >= eta
    beta = np.where(at_cap, np.maximum(amp / eta - 1.0 - gamma * lam, 0.0), 0.0)
    stationarity = float(np.max(np.abs(out_amp * (1.0 + gamma * lam + beta) - amp))
                         / (1.0 + float(np.max(amp, initial=0.0))))
    power_out = float(lam @ out_amp ** 2)
    cs_gamma = abs(gamma * (power_out - budget)) / ((1.0 + gamma) * budget)
    cs_beta = float(np.max(beta * np.abs(out_amp ** 2 - eta ** 2)
                           / (1.0 + eta ** 2), initial=0.0))
    cert = ProjectionCertificate(
        dual=gamma,
        stationarity=stationarity,
        complementary_slackness=max(cs_gamma, cs_beta),
        feasibility=max(0.0, (power_out - budget) / budget),
        iterations=iters,
        flagged=not converged,
        note="" if converged else "bisection iteration cap reached",
    )
    return out, cert
