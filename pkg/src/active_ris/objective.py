"""SINR, per-user rate, sum rate, the weighted-MMSE surrogate, and constraint
residuals.  These are the ground-truth metrics everything else is tested
against.

Conventions: the precoder `w` is an (M, K) complex array with columns w_k;
reflect coefficients `phi` are a length-N complex array.  Rates are in bits
(log2); the surrogate's weight-log term uses the natural logarithm, which is
why the surrogate at the optimal auxiliary variables equals
K - ln(2) * sum_rate.
"""

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet, effective_channel


@dataclass(frozen=True, eq=False)
class PowerBudget:
    """BS power, RIS output power, per-element amplitude caps, and the flag
    selecting the per-antenna BS constraint instead of the sum-power ball."""

    p_bs: float
    p_ris: float
    eta: np.ndarray
    per_antenna: bool = False

    def __post_init__(self):
        object.__setattr__(self, "eta", np.asarray(self.eta, dtype=float))
        if self.p_bs <= 0.0 or self.p_ris <= 0.0:
            raise ValueError("power budgets must be positive")
        if self.eta.ndim != 1 or np.any(self.eta <= 0.0):
            raise ValueError("eta must be a 1-D array of positive caps")


@dataclass(frozen=True, eq=False)
class AuxiliaryVars:
    """Receive scalars u (complex, length K) and weights rho (positive)."""

    u: np.ndarray
    rho: np.ndarray


def _ris_noise_power(ch: ChannelSet, phi: np.ndarray) -> np.ndarray:
    """||f_k^H Diag(phi)||^2 * sigma_v^2 for every user, length K."""
    return (np.abs(ch.ris_user) ** 2 @ np.abs(phi) ** 2) * ch.noise_ris


def sinr(ch: ChannelSet, w: np.ndarray, phi: np.ndarray, k: int,
         h_eff: np.ndarray | None = None) -> float:
    """|h_k^H w_k|^2 over interference + amplified RIS noise + user noise."""
    if not 0 <= k < ch.num_users:
        raise ValueError(f"user index {k} out of range")
    if h_eff is None:
        h_eff = effective_channel(ch, phi)
    gains = h_eff[k] @ w
    signal = float(np.abs(gains[k]) ** 2)
    interference = float(np.sum(np.abs(gains) ** 2)) - signal
    denom = interference + _ris_noise_power(ch, phi)[k] + ch.noise_user[k]
    return signal / denom


def per_user_rates(ch: ChannelSet, w: np.ndarray, phi: np.ndarray,
                   h_eff: np.ndarray | None = None) -> np.ndarray:
    """log2(1 + SINR_k) for every user, length K."""
    if h_eff is None:
        h_eff = effective_channel(ch, phi)
    gains = h_eff @ w
    signal = np.abs(np.diag(gains)) ** 2
    total = np.sum(np.abs(gains) ** 2, axis=1)
    denom = (total - signal) + _ris_noise_power(ch, phi) + ch.noise_user
    return np.log2(1.0 + signal / denom)


def sum_rate(ch: ChannelSet, w: np.ndarray, phi: np.ndarray,
             h_eff: np.ndarray | None = None) -> float:
    """Multiuser sum rate in bits/s/Hz."""
    return float(np.sum(per_user_rates(ch, w, phi, h_eff=h_eff)))


def surrogate_g(ch: ChannelSet, w: np.ndarray, phi: np.ndarray,
                aux: AuxiliaryVars, h_eff: np.ndarray | None = None) -> float:
    """Weighted-MMSE surrogate sum_k rho_k * F_k - ln(rho_k) with

        F_k = |u_k|^2 (sum_i |h_k^H w_i|^2 + ris noise + user noise)
              - 2 Re(u_k^* h_k^H w_k) + 1.

    Minimizing this over (u, rho) at fixed (w, phi) recovers
    K - ln(2) * sum_rate.
    """
    rho = np.asarray(aux.rho, dtype=float)
    if np.any(rho <= 0.0):
        raise ValueError("weights rho must be positive")
    u = np.asarray(aux.u)
    if h_eff is None:
        h_eff = effective_channel(ch, phi)
    gains = h_eff @ w
    total = np.sum(np.abs(gains) ** 2, axis=1)
    received = total + _ris_noise_power(ch, phi) + ch.noise_user
    f = (np.abs(u) ** 2 * received
         - 2.0 * np.real(u.conj() * np.diag(gains)) + 1.0)
    return float(np.sum(rho * f - np.log(rho)))


@dataclass(frozen=True)
class ResidualReport:
    """Constraint residuals; every value <= 0 means feasible.

    Absolute residuals are in watts except `ris_element`, which is an
    amplitude excess.  Normalized residuals divide by the corresponding
    budget (or cap).
    """

    bs: float
    ris_element: float
    ris_power: float
    bs_normalized: float
    ris_element_normalized: float
    ris_power_normalized: float

    @property
    def max_normalized(self) -> float:
        return max(self.bs_normalized, self.ris_element_normalized,
                   self.ris_power_normalized)

    def is_feasible(self, tol: float = 1e-8) -> bool:
        return self.max_normalized <= tol


def constraint_residuals(w: np.ndarray, phi: np.ndarray, budget: PowerBudget,
                         ch: ChannelSet) -> ResidualReport:
    """Residuals of the BS power (sum or per-antenna), RIS element caps, and
    RIS output power constraints at (w, phi)."""
    if budget.per_antenna:
        cap = budget.p_bs / w.shape[0]
        row_power = np.sum(np.abs(w) ** 2, axis=1)
        bs_abs = float(np.max(row_power) - cap)
        bs_norm = bs_abs / cap
    else:
        bs_abs = float(np.sum(np.abs(w) ** 2) - budget.p_bs)
        bs_norm = bs_abs / budget.p_bs
    elem_excess = np.abs(phi) - budget.eta
    elem_abs = float(np.max(elem_excess))
    elem_norm = float(np.max(elem_excess / budget.eta))
    reflected = ch.bs_ris @ w * phi[:, None]
    ris_abs = float(np.sum(np.abs(reflected) ** 2)
                    + np.sum(np.abs(phi) ** 2) * ch.noise_ris - budget.p_ris)
    return ResidualReport(
        bs=bs_abs,
        ris_element=elem_abs,
        ris_power=ris_abs,
        bs_normalized=bs_norm,
        ris_element_normalized=elem_norm,
        ris_power_normalized=ris_abs / budget.p_ris,
    )
