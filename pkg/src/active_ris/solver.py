"""Block-coordinate solver for joint precoder / reflect-coefficient design.

One outer iteration updates, in order: the receive scalars u and the weights
rho (exact closed forms), then the precoder block and the reflect block, each
via a proximal step that majorizes the squared distance to its feasible set
by the distance to the projection of the previous iterate:

    w_k <- (2 mu I + A)^{-1} (b_k + mu wtil_bs_k + mu wtil_br_k)
    phi <- (Q + mu I)^{-1} (z + mu proj(phi))

The quadratic data (A, b) and (Q, z) are exactly the surrogate's dependence
on the respective block, so every step minimizes the iteration's majorized
penalized objective; with a fixed penalty that objective is non-increasing
per outer iteration.  The penalty mu grows geometrically across iterations
(homotopy) so that late iterates are driven to feasibility; the reported
solution is additionally pushed through the exact projections before its sum
rate is evaluated.
"""

import time
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .channel import ChannelSet, effective_channel
from .objective import (AuxiliaryVars, PowerBudget, ResidualReport,
                        constraint_residuals, per_user_rates, sum_rate,
                        surrogate_g)
from .projections import (EllipsoidSpec, project_ball, project_box_ellipsoid,
                          project_ellipsoid, project_per_antenna)

# Effective ellipsoid radius for the precoder subproblem is clamped to this
# fraction of the RIS budget when a wildly infeasible phi would make it
# nonpositive; keeps the subproblem well posed while homotopy restores
# feasibility.
MIN_RADIUS_FRACTION = 1e-6


class SolverDivergenceError(RuntimeError):
    """Non-finite values appeared mid-run; carries the trace so far."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class SolverConfig:
    """Penalty schedule, stopping rule, and iteration budget.

    mu0 / mu_max default to 1e-3 times the trace of the quadratic term at the
    initialization and 1e6 times mu0.  mu_growth = 1 keeps the penalty fixed
    (diagnostic mode used by the descent tests).  The stopping rule compares
    successive sum rates; `stop_per_user` switches to the largest per-user
    rate change.  `per_antenna`, when set, must agree with the budget flag.
    """

    mu0: float | None = None
    mu_growth: float = 1.2
    mu_max: float | None = None
    tol: float = 1e-4
    max_iters: int = 500
    per_antenna: bool | None = None
    stop_per_user: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.mu0 is not None and self.mu0 <= 0.0:
            raise ValueError("mu0 must be positive")
        if self.mu_growth < 1.0:
            raise ValueError("mu_growth must be at least 1")
        if self.mu_max is not None and self.mu_max <= 0.0:
            raise ValueError("mu_max must be positive")
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass(frozen=True, eq=False)
class WSubproblem:
    """Quadratic data of the precoder block: minimize
    sum_k w_k^H A w_k - 2 Re(b_k^H w_k) subject to the BS power set and
    {sum_k w_k^H Psi w_k <= p_eff}."""

    a_matrix: np.ndarray
    b: np.ndarray
    psi: np.ndarray
    p_eff: float
    p_clamped: bool = False


@dataclass(frozen=True, eq=False)
class PhiSubproblem:
    """Quadratic data of the reflect block: minimize
    phi^H Q phi - 2 Re(phi^H z) subject to the element caps and
    {phi^H Diag(lambda_diag) phi <= P_A}."""

    q_matrix: np.ndarray
    z: np.ndarray
    lambda_diag: np.ndarray


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    sum_rate: float
    surrogate: float
    mu: float
    res_bs: float
    res_ris_element: float
    res_ris_power: float
    wall_ms: float
    penalized_before: float
    penalized_after: float


@dataclass(frozen=True, eq=False)
class Solution:
    w: np.ndarray
    phi: np.ndarray
    sum_rate: float
    sum_rate_pre_projection: float
    iterations: int
    converged: bool
    trace: list[TraceRecord]
    residuals: ResidualReport


def update_u(ch: ChannelSet, w: np.ndarray, phi: np.ndarray,
             h_eff: np.ndarray | None = None) -> np.ndarray:
    """Closed-form receive scalars u_k = h_k^H w_k / (total received power +
    amplified RIS noise + user noise)."""
    if h_eff is None:
        h_eff = effective_channel(ch, phi)
    gains = h_eff @ w
    ris_noise = (np.abs(ch.ris_user) ** 2 @ np.abs(phi) ** 2) * ch.noise_ris
    denom = np.sum(np.abs(gains) ** 2, axis=1) + ris_noise + ch.noise_user
    return np.diag(gains) / denom


def update_rho(ch: ChannelSet, w: np.ndarray, phi: np.ndarray, u: np.ndarray,
               h_eff: np.ndarray | None = None) -> np.ndarray:
    """Closed-form weights rho_k = 1 / (1 - u_k^* h_k^H w_k); with the
    closed-form u this equals 1 + SINR_k."""
    if h_eff is None:
        h_eff = effective_channel(ch, phi)
    gains = h_eff @ w
    denom = np.real(1.0 - u.conj() * np.diag(gains))
    if np.any(denom <= 0.0) or not np.all(np.isfinite(denom)):
        bad = np.flatnonzero(~(denom > 0.0))
        raise ValueError(
            f"weight update denominator nonpositive for users {bad.tolist()}; "
            "u is not the closed-form receive scalar")
    return 1.0 / denom


def assemble_w_subproblem(ch: ChannelSet, phi: np.ndarray, u: np.ndarray,
                          rho: np.ndarray, budget: PowerBudget,
                          h_eff: np.ndarray | None = None) -> WSubproblem:
    """A = sum_k rho_k |u_k|^2 h_k h_k^H, b_k = rho_k u_k h_k,
    Psi = G^H Diag(|phi|^2) G, and the effective reflected-power radius
    p_eff = P_A - ||phi||^2 sigma_v^2 (clamped to stay positive)."""
    if h_eff is None:
        h_eff = effective_channel(ch, phi)
    coef = rho * np.abs(u) ** 2
    a_matrix = (h_eff.conj().T * coef) @ h_eff
    b = h_eff.conj().T * (rho * u)
    psi = (ch.bs_ris.conj().T * np.abs(phi) ** 2) @ ch.bs_ris
    p_raw = budget.p_ris - float(np.sum(np.abs(phi) ** 2)) * ch.noise_ris
    p_floor = MIN_RADIUS_FRACTION * budget.p_ris
    return WSubproblem(a_matrix=a_matrix, b=b, psi=psi,
                       p_eff=max(p_raw, p_floor), p_clamped=p_raw < p_floor)


def _w_step(sub: WSubproblem, mu: float, w_bs: np.ndarray,
            w_br: np.ndarray) -> np.ndarray:
    """Solve (2 mu I + A) w_k = b_k + mu (wtil_bs_k + wtil_br_k); one
    Hermitian factorization shared by all K right-hand sides."""
    m = sub.a_matrix.shape[0]
    lhs = sub.a_matrix + 2.0 * mu * np.eye(m)
    rhs = sub.b + mu * (w_bs + w_br)
    try:
        return cho_solve(cho_factor(lhs, lower=True), rhs)
    except np.linalg.LinAlgError:
        return np.linalg.solve(lhs, rhs)


def update_w(sub: WSubproblem, w_prev: np.ndarray, mu: float,
             budget: PowerBudget) -> np.ndarray:
    """Proximal precoder step with both distance anchors taken at w_prev."""
    if mu <= 0.0:
        raise ValueError("mu must be positive")
    if budget.per_antenna:
        w_bs = project_per_antenna(w_prev, budget.p_bs)
    else:
        w_bs = project_ball(w_prev, budget.p_bs)
    w_br, _ = project_ellipsoid(
        w_prev, EllipsoidSpec(matrix=sub.psi, radius=sub.p_eff))
    return _w_step(sub, mu, w_bs, w_br)


def assemble_phi_subproblem(ch: ChannelSet, w: np.ndarray, u: np.ndarray,
                            rho: np.ndarray) -> PhiSubproblem:
    """Exact quadratic data of the surrogate's dependence on phi.

    With b_{k,i} = conj(f_k) * (G w_i) elementwise,

        Q  = sum_k rho_k |u_k|^2 ( sum_i conj(b_{k,i}) b_{k,i}^T
                                   + sigma_v^2 Diag(|f_k|^2) )
        z  = sum_k rho_k ( u_k conj(b_{k,k})
                           - |u_k|^2 sum_i (hbar_k^H w_i) conj(b_{k,i}) )

    and the constraint weights are lambda = sum_k |G w_k|^2 + sigma_v^2, so
    that phi^H Q phi - 2 Re(phi^H z) equals the surrogate up to terms that do
    not involve phi.  The direct-channel coefficients hbar_k (not the
    phi-dependent effective channels) enter z; anything else would break the
    exactness of the quadratic model.
    """
    num_elements = ch.num_elements
    gw = ch.bs_ris @ w
    lam = np.sum(np.abs(gw) ** 2, axis=1) + ch.noise_ris
    coef = rho * np.abs(u) ** 2
    q_matrix = np.zeros((num_elements, num_elements), dtype=complex)
    q_diag = np.zeros(num_elements)
    z = np.zeros(num_elements, dtype=complex)
    for k in range(ch.num_users):
        b_k = ch.ris_user[k].conj()[:, None] * gw
        q_matrix += coef[k] * (b_k.conj() @ b_k.T)
        q_diag += coef[k] * ch.noise_ris * np.abs(ch.ris_user[k]) ** 2
        direct = ch.bs_user[k].conj() @ w
        z += rho[k] * u[k] * b_k[:, k].conj() - coef[k] * (b_k.conj() @ direct)
    q_matrix[np.diag_indices(num_elements)] += q_diag
    return PhiSubproblem(q_matrix=q_matrix, z=z, lambda_diag=lam)


def _phi_step(sub: PhiSubproblem, mu: float, phi_proj: np.ndarray) -> np.ndarray:
    n = sub.q_matrix.shape[0]
    lhs = sub.q_matrix + mu * np.eye(n)
    rhs = sub.z + mu * phi_proj
    try:
        return cho_solve(cho_factor(lhs, lower=True), rhs)
    except np.linalg.LinAlgError:
        return np.linalg.solve(lhs, rhs)


def update_phi(sub: PhiSubproblem, phi_prev: np.ndarray, mu: float,
               budget: PowerBudget) -> np.ndarray:
    """Proximal reflect step anchored at the projection of phi_prev onto the
    joint cap / reflected-power set."""
    if mu <= 0.0:
        raise ValueError("mu must be positive")
    phi_proj, _ = project_box_ellipsoid(
        phi_prev, budget.eta,
        EllipsoidSpec(diag=sub.lambda_diag, radius=budget.p_ris))
    return _phi_step(sub, mu, phi_proj)


def default_initialization(ch: ChannelSet, budget: PowerBudget,
                           seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Matched filter on the direct channels scaled to the BS budget, and
    full-gain reflect coefficients with seeded random phases projected onto
    the joint RIS set.  Avoids the all-zero stationary point."""
    rng = np.random.default_rng(seed)
    w = ch.bs_user.T.copy().astype(complex)
    total = float(np.sum(np.abs(w) ** 2))
    if total <= 0.0:
        w = np.ones_like(w)
        total = float(np.sum(np.abs(w) ** 2))
    w *= np.sqrt(budget.p_bs / total)
    if budget.per_antenna:
        w = project_per_antenna(w, budget.p_bs)
    phases = rng.uniform(0.0, 2.0 * np.pi, ch.num_elements)
    phi = budget.eta * np.exp(1j * phases)
    lam = np.sum(np.abs(ch.bs_ris @ w) ** 2, axis=1) + ch.noise_ris
    phi, _ = project_box_ellipsoid(
        phi, budget.eta, EllipsoidSpec(diag=lam, radius=budget.p_ris))
    return w, phi


def _check_finite(trace, **arrays):
    for name, arr in arrays.items():
        if not np.all(np.isfinite(arr)):
            raise SolverDivergenceError(
                f"non-finite values in {name}; aborting", trace)


def _final_projection(ch, budget, w, phi):
    """Push (w, phi) to joint feasibility: reflected-power ellipsoid, then the
    BS set, then the joint RIS set with the final precoder (which restores the
    reflected-power constraint exactly even if the BS step perturbed it)."""
    psi = (ch.bs_ris.conj().T * np.abs(phi) ** 2) @ ch.bs_ris
    p_eff = max(budget.p_ris - float(np.sum(np.abs(phi) ** 2)) * ch.noise_ris,
                MIN_RADIUS_FRACTION * budget.p_ris)
    w, _ = project_ellipsoid(w, EllipsoidSpec(matrix=psi, radius=p_eff))
    if budget.per_antenna:
        w = project_per_antenna(w, budget.p_bs)
    else:
        w = project_ball(w, budget.p_bs)
    lam = np.sum(np.abs(ch.bs_ris @ w) ** 2, axis=1) + ch.noise_ris
    phi, _ = project_box_ellipsoid(
        phi, budget.eta, EllipsoidSpec(diag=lam, radius=budget.p_ris))
    return w, phi


def bsum_solve(ch: ChannelSet, budget: PowerBudget,
               cfg: SolverConfig | None = None,
               init: tuple[np.ndarray, np.ndarray] | None = None) -> Solution:
    """Run the block-coordinate loop until the sum-rate change drops below
    `cfg.tol` or `cfg.max_iters` is reached.

    The reported sum rate is evaluated after a final feasibility projection;
    the last pre-projection rate is kept in `sum_rate_pre_projection`.  Each
    trace record carries the iteration's majorized penalized objective before
    and after the block updates, which is non-increasing by construction when
    mu_growth = 1.

    A caller-supplied all-zero `init` is a stationary point of every update
    and the run will simply stay there; the default initialization avoids it.
    """
    cfg = cfg or SolverConfig()
    if cfg.per_antenna is not None and cfg.per_antenna != budget.per_antenna:
        raise ValueError("cfg.per_antenna conflicts with budget.per_antenna")
    if budget.eta.shape != (ch.num_elements,):
        raise ValueError("budget.eta length must match the RIS size")

    if init is None:
        w, phi = default_initialization(ch, budget, seed=cfg.seed)
    else:
        w = np.asarray(init[0], dtype=complex)
        phi = np.asarray(init[1], dtype=complex)
        if w.shape != (ch.num_antennas, ch.num_users) or phi.shape != (ch.num_elements,):
            raise ValueError("init shapes inconsistent with the channel dims")
    _check_finite([], w=w, phi=phi)

    h_eff = effective_channel(ch, phi)
    u = update_u(ch, w, phi, h_eff=h_eff)
    rho = update_rho(ch, w, phi, u, h_eff=h_eff)

    if cfg.mu0 is not None:
        mu = cfg.mu0
    else:
        sub0 = assemble_w_subproblem(ch, phi, u, rho, budget, h_eff=h_eff)
        trace_a = float(np.real(np.trace(sub0.a_matrix)))
        mu = 1e-3 * trace_a if trace_a > 0.0 else 1e-3
    mu_max = cfg.mu_max if cfg.mu_max is not None else 1e6 * mu

    prev_rates = per_user_rates(ch, w, phi, h_eff=h_eff)
    prev_sr = float(np.sum(prev_rates))
    trace: list[TraceRecord] = []
    converged = False
    iterations = 0

    for iteration in range(1, cfg.max_iters + 1):
        tic = time.perf_counter()
        h_eff = effective_channel(ch, phi)
        g_start = surrogate_g(ch, w, phi, AuxiliaryVars(u, rho), h_eff=h_eff)

        u = update_u(ch, w, phi, h_eff=h_eff)
        _check_finite(trace, u=u)
        rho = update_rho(ch, w, phi, u, h_eff=h_eff)
        sub_w = assemble_w_subproblem(ch, phi, u, rho, budget, h_eff=h_eff)
        if budget.per_antenna:
            w_bs = project_per_antenna(w, budget.p_bs)
        else:
            w_bs = project_ball(w, budget.p_bs)
        w_br, _ = project_ellipsoid(
            w, EllipsoidSpec(matrix=sub_w.psi, radius=sub_w.p_eff))
        pen_w = (float(np.sum(np.abs(w - w_bs) ** 2))
                 + float(np.sum(np.abs(w - w_br) ** 2)))
        w_new = _w_step(sub_w, mu, w_bs, w_br)

        sub_phi = assemble_phi_subproblem(ch, w_new, u, rho)
        phi_proj, _ = project_box_ellipsoid(
            phi, budget.eta,
            EllipsoidSpec(diag=sub_phi.lambda_diag, radius=budget.p_ris))
        pen_phi = float(np.sum(np.abs(phi - phi_proj) ** 2))
        phi_new = _phi_step(sub_phi, mu, phi_proj)

        _check_finite(trace, u=u, rho=rho, w=w_new, phi=phi_new)

        h_new = effective_channel(ch, phi_new)
        g_end = surrogate_g(ch, w_new, phi_new, AuxiliaryVars(u, rho),
                            h_eff=h_new)
        penalized_before = g_start + mu * (pen_w + pen_phi)
        penalized_after = (
            g_end
            + mu * (float(np.sum(np.abs(w_new - w_bs) ** 2))
                    + float(np.sum(np.abs(w_new - w_br) ** 2))
                    + float(np.sum(np.abs(phi_new - phi_proj) ** 2))))

        rates = per_user_rates(ch, w_new, phi_new, h_eff=h_new)
        sr = float(np.sum(rates))
        res = constraint_residuals(w_new, phi_new, budget, ch)
        trace.append(TraceRecord(
            iteration=iteration, sum_rate=sr,
            surrogate=g_end,
            mu=mu, res_bs=res.bs_normalized,
            res_ris_element=res.ris_element_normalized,
            res_ris_power=res.ris_power_normalized,
            wall_ms=(time.perf_counter() - tic) * 1e3,
            penalized_before=penalized_before,
            penalized_after=penalized_after))

        w, phi = w_new, phi_new
        iterations = iteration
        if cfg.stop_per_user:
            delta = float(np.max(np.abs(rates - prev_rates)))
        else:
            delta = abs(sr - prev_sr)
        prev_rates, prev_sr = rates, sr
        if delta <= cfg.tol:
            converged = True
            break
        mu = min(mu * cfg.mu_growth, mu_max)

    pre_projection_sr = prev_sr
    w, phi = _final_projection(ch, budget, w, phi)
    final_res = constraint_residuals(w, phi, budget, ch)
    return Solution(
        w=w, phi=phi,
        sum_rate=sum_rate(ch, w, phi),
        sum_rate_pre_projection=pre_projection_sr,
        iterations=iterations,
        converged=converged,
        trace=trace,
        residuals=final_res,
    )
