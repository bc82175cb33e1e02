"""Seeded channel generation for an active-RIS multiuser MISO downlink.

Small-scale fading is Rician: a deterministic line-of-sight component built
from uniform-linear-array steering responses at seeded random angles, mixed
with i.i.d. circularly-symmetric unit-variance Gaussian scatter.  Large-scale
fading follows log-distance path-loss laws (base-10 logarithm, values in dB):

    BS to user : 41.2 + 28.7 log10(d)
    RIS links  : 37.3 + 22.0 log10(d)

Users are dropped uniformly at random in a disk around the RIS.  All powers
are stored in watts internally; dBm appears only at configuration boundaries.
A fixed seed reproduces the exact same :class:`ChannelSet`, bit for bit.
"""

import math
from dataclasses import dataclass

import numpy as np

# (intercept dB, slope per decade) of the log-distance path-loss laws.
PATHLOSS_BS_USER = (41.2, 28.7)
PATHLOSS_RIS_LINKS = (37.3, 22.0)

DEFAULT_NOISE_DBM = -80.0


def dbm_to_watts(p_dbm: float) -> float:
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


def watts_to_dbm(p_watts: float) -> float:
    if p_watts <= 0.0:
        raise ValueError(f"power must be positive to express in dBm, got {p_watts}")
    return 10.0 * math.log10(p_watts) + 30.0


def path_loss_db(distance_m: float, model: tuple[float, float]) -> float:
    """Log-distance path loss in dB; `model` is (intercept dB, slope)."""
    if distance_m <= 0.0:
        raise ValueError(f"path loss undefined for distance {distance_m} m")
    intercept, slope = model
    return intercept + slope * math.log10(distance_m)


def path_gain_linear(distance_m: float, model: tuple[float, float]) -> float:
    """Linear power gain 10^(-PL/10) of the log-distance model."""
    return 10.0 ** (-path_loss_db(distance_m, model) / 10.0)


@dataclass(frozen=True)
class Geometry:
    """Planar layout (meters): BS and RIS positions, user disk, user count.

    Users are placed uniformly in the disk of radius `user_radius` centered
    at the RIS; the BS sits `|bs - ris|` meters away.
    """

    bs_position: tuple[float, float] = (0.0, 0.0)
    ris_position: tuple[float, float] = (100.0, 0.0)
    user_radius: float = 8.0
    num_users: int = 8

    def __post_init__(self):
        if self.user_radius <= 0.0:
            raise ValueError("user_radius must be positive")
        if self.num_users < 1:
            raise ValueError("num_users must be at least 1")
        if self.bs_ris_distance <= 0.0:
            raise ValueError("BS and RIS must not be co-located")

    @property
    def bs_ris_distance(self) -> float:
        dx = self.bs_position[0] - self.ris_position[0]
        dy = self.bs_position[1] - self.ris_position[1]
        return math.hypot(dx, dy)


@dataclass(frozen=True)
class FadingConfig:
    """Rician factor (linear, >= 0; 0 degenerates to Rayleigh), seed, and the
    two log-distance path-loss laws."""

    rician_factor: float = 10.0
    seed: int = 0
    pathloss_bs_user: tuple[float, float] = PATHLOSS_BS_USER
    pathloss_ris_links: tuple[float, float] = PATHLOSS_RIS_LINKS

    def __post_init__(self):
        if not (self.rician_factor >= 0.0 and math.isfinite(self.rician_factor)):
            raise ValueError("rician_factor must be finite and >= 0")
        for model in (self.pathloss_bs_user, self.pathloss_ris_links):
            if not all(math.isfinite(v) for v in model):
                raise ValueError("path-loss coefficients must be finite")


@dataclass(frozen=True, eq=False)
class ChannelSet:
    """One channel realization.  Immutable; safe to share across trials.

    bs_user[k]  : direct channel of user k, length M
    ris_user[k] : RIS-to-user-k channel, length N
    bs_ris      : BS-to-RIS matrix, N x M
    noise_ris   : RIS-side noise power (watts)
    noise_user  : per-user noise powers (watts), length K
    """

    bs_user: np.ndarray
    ris_user: np.ndarray
    bs_ris: np.ndarray
    noise_ris: float
    noise_user: np.ndarray
    user_positions: np.ndarray

    def __post_init__(self):
        for arr in (self.bs_user, self.ris_user, self.bs_ris, self.noise_user):
            if not np.all(np.isfinite(arr)):
                raise ValueError("channel entries must be finite")
        if self.noise_ris <= 0.0 or np.any(self.noise_user <= 0.0):
            raise ValueError("noise powers must be positive")
        k, m = self.bs_user.shape
        k2, n = self.ris_user.shape
        if k2 != k or self.bs_ris.shape != (n, m) or self.noise_user.shape != (k,):
            raise ValueError("inconsistent channel dimensions")
        for arr in (self.bs_user, self.ris_user, self.bs_ris,
                    self.noise_user, self.user_positions):
            arr.setflags(write=False)

    @property
    def num_users(self) -> int:
        return self.bs_user.shape[0]

    @property
    def num_antennas(self) -> int:
        return self.bs_user.shape[1]

    @property
    def num_elements(self) -> int:
        return self.ris_user.shape[1]


def _steering(num: int, angle: float) -> np.ndarray:
    """Half-wavelength ULA response exp(j*pi*sin(angle)*[0..num-1])."""
    return np.exp(1j * np.pi * np.sin(angle) * np.arange(num))


def _rician(los: np.ndarray, kappa: float, rng: np.random.Generator) -> np.ndarray:
    scatter = (rng.standard_normal(los.shape) + 1j * rng.standard_normal(los.shape))
    scatter /= math.sqrt(2.0)
    return (math.sqrt(kappa / (kappa + 1.0)) * los
            + math.sqrt(1.0 / (kappa + 1.0)) * scatter)


def generate_channels(geometry: Geometry, fading: FadingConfig,
                      dims: tuple[int, int],
                      noise_dbm: float = DEFAULT_NOISE_DBM) -> ChannelSet:
    """Draw one seeded channel realization for dims = (M antennas, N elements).

    Each link is sqrt(linear path gain) * (sqrt(k/(k+1)) LOS + sqrt(1/(k+1))
    scatter), the LOS part built from ULA steering vectors at angles drawn
    from the seeded stream.  Per-entry mean power therefore equals the linear
    path gain for any Rician factor.  Identical (geometry, fading, dims,
    noise) reproduce an identical ChannelSet.
    """
    num_antennas, num_elements = dims
    if num_antennas < 1 or num_elements < 1:
        raise ValueError("dims must be at least (1, 1)")
    num_users = geometry.num_users
    kappa = fading.rician_factor
    rng = np.random.default_rng(fading.seed)

    # User drop: uniform over the disk of radius r centered at the RIS.
    radii = geometry.user_radius * np.sqrt(rng.random(num_users))
    angles = 2.0 * np.pi * rng.random(num_users)
    ris = np.asarray(geometry.ris_position, dtype=float)
    bs = np.asarray(geometry.bs_position, dtype=float)
    user_positions = ris + np.stack(
        [radii * np.cos(angles), radii * np.sin(angles)], axis=1)

    # BS-RIS link.
    d_bs_ris = geometry.bs_ris_distance
    gain_g = path_gain_linear(d_bs_ris, fading.pathloss_ris_links)
    theta_in = rng.uniform(-np.pi / 2, np.pi / 2)
    theta_out = rng.uniform(-np.pi / 2, np.pi / 2)
    los_g = np.outer(_steering(num_elements, theta_in),
                     _steering(num_antennas, theta_out).conj())
    bs_ris = math.sqrt(gain_g) * _rician(los_g, kappa, rng)

    bs_user = np.empty((num_users, num_antennas), dtype=complex)
    ris_user = np.empty((num_users, num_elements), dtype=complex)
    for k in range(num_users):
        d_bs = float(np.linalg.norm(user_positions[k] - bs))
        d_ris = float(np.linalg.norm(user_positions[k] - ris))
        if d_bs <= 0.0 or d_ris <= 0.0:
            raise ValueError("user co-located with a device; path loss undefined")
        theta = rng.uniform(-np.pi / 2, np.pi / 2)
        gain = path_gain_linear(d_bs, fading.pathloss_bs_user)
        bs_user[k] = math.sqrt(gain) * _rician(
            _steering(num_antennas, theta), kappa, rng)
        theta = rng.uniform(-np.pi / 2, np.pi / 2)
        gain = path_gain_linear(d_ris, fading.pathloss_ris_links)
        ris_user[k] = math.sqrt(gain) * _rician(
            _steering(num_elements, theta), kappa, rng)

    noise_w = dbm_to_watts(noise_dbm)
    return ChannelSet(
        bs_user=bs_user,
        ris_user=ris_user,
        bs_ris=bs_ris,
        noise_ris=noise_w,
        noise_user=np.full(num_users, noise_w),
        user_positions=user_positions,
    )


def effective_channel(ch: ChannelSet, phi: np.ndarray) -> np.ndarray:
    """Per-user effective channels including the RIS cascade.

    Returns a (K, M) array whose k-th row is the conjugate-transposed
    effective channel

        h_k^H = hbar_k^H + f_k^H Diag(phi) G,

    so `row @ w_k` is the complex gain seen by user k.  Affine in phi.
    """
    phi = np.asarray(phi)
    if phi.shape != (ch.num_elements,):
        raise ValueError(
            f"phi must have shape ({ch.num_elements},), got {phi.shape}")
    return ch.bs_user.conj() + (ch.ris_user.conj() * phi[None, :]) @ ch.bs_ris
