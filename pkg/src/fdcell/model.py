"""Core network model: parameters, sector antennas, interference thinning,
and the loop-interference angle/suppression model.

Everything here is closed-form and pure; the numerical engines
(`fdcell.analytic`, `fdcell.montecarlo`) build on these primitives.

Conventions used throughout the package:
 - all powers/variances are linear quantities; dB appears only at the CLI
   boundary (see `db_to_linear` / `linear_to_db`),
 - path-loss exponents: `alpha1` for BS<->user links, `alpha2` for BS<->BS
   and user<->user links,
 - thinning tables are oriented (receiver side, transmitter side); see
   `thinning_table`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_THIRDS_PI = 2.0 * math.pi / 3.0


def db_to_linear(x_db: float) -> float:
    """Convert a power quantity from dB to linear scale (10^(x/10))."""
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0) if np.ndim(x_db) else 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    """Convert a linear power quantity to dB.

    ``linear_to_db(0.0)`` returns ``-inf`` (the conventional representation
    of a switched-off term); negative inputs are rejected.
    """
    if np.ndim(x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise ValueError("linear_to_db: negative power has no dB representation")
        with np.errstate(divide="ignore"):
            return 10.0 * np.log10(x)
    if x < 0:
        raise ValueError("linear_to_db: negative power has no dB representation")
    if x == 0:
        return float("-inf")
    return 10.0 * math.log10(x)


@dataclass(frozen=True)
class AntennaPattern:
    """Circular-sector approximation of a directional antenna.

    The main lobe covers one of `m` equal sectors with gain `g`; the
    remaining sectors radiate at the side-lobe gain `h = gamma * g`.  The
    gains satisfy the total-power normalization g/m + (m-1)h/m = 1.
    """

    m: int
    gamma: float
    g: float
    h: float

    @property
    def beamwidth(self) -> float:
        """Main-lobe beamwidth in radians."""
        return 2.0 * math.pi / self.m


def antenna_gains(m: int, gamma: float) -> AntennaPattern:
    """Build the sector antenna pattern for `m` sectors and side-lobe ratio `gamma`.

    Main-lobe gain is m / (1 + gamma*(m-1)); side-lobe gain is gamma times
    that.  `m = 1` is the omni-directional case (g = 1).
    """
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise ValueError(f"antenna_gains: sector count m must be a positive integer, got {m!r}")
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"antenna_gains: side-lobe ratio must lie in [0, 1], got {gamma!r}")
    g = m / (1.0 + gamma * (m - 1))
    return AntennaPattern(m=int(m), gamma=float(gamma), g=g, h=gamma * g)


@dataclass(frozen=True)
class ThinningTable:
    """Split of an interferer process into the four orientation cases.

    Case k=1: transmitter aims at the receiver and sits in the receiver's
    main sector; k=2: aims away, in the main sector; k=3: aims at the
    receiver, outside the main sector; k=4: aims away, outside.  Densities
    sum to the parent density; `gains[k-1]` is the link power gain of case k.
    """

    densities: tuple[float, float, float, float]
    gains: tuple[float, float, float, float]

    @property
    def total_density(self) -> float:
        return sum(self.densities)

    def case_probabilities(self) -> np.ndarray:
        """Probability that an interferer falls in each case (marking view)."""
        lam = self.total_density
        return np.asarray(self.densities) / lam


def thinning_table(lam: float, rx: AntennaPattern, tx: AntennaPattern) -> ThinningTable:
    """Orientation thinning of a density-`lam` interferer process.

    Orientation convention: `rx` is the pattern of the receiving node (index
    i), `tx` the pattern of the interfering transmitters (index j).  The
    last density is obtained by subtraction so the four entries sum to
    `lam` exactly in floating point.
    """
    if lam <= 0:
        raise ValueError(f"thinning_table: density must be positive, got {lam!r}")
    mi, mj = rx.m, tx.m
    d1 = lam / (mi * mj)
    d2 = lam * (mj - 1) / (mi * mj)
    d3 = lam * (mi - 1) / (mi * mj)
    d4 = lam - d1 - d2 - d3
    gains = (rx.g * tx.g, rx.g * tx.h, tx.g * rx.h, rx.h * tx.h)
    return ThinningTable(densities=(d1, d2, d3, d4), gains=gains)


def passive_suppression_fraction(theta: float) -> float:
    """Fraction of the loop interference surviving passive suppression.

    `theta` is the angle between the transmit and receive antenna
    boresights, restricted to [-pi, pi).  Returns
    exp(-cos(|theta| - 2pi/3) - 1/2): 1 at theta = 0 (no suppression),
    minimum exp(-3/2) at |theta| = 2pi/3.  Out-of-range angles are rejected
    rather than wrapped so caller bugs surface early.
    """
    th = np.asarray(theta, dtype=float)
    if np.any(th < -math.pi) or np.any(th >= math.pi):
        raise ValueError(f"passive_suppression_fraction: angle outside [-pi, pi): {theta!r}")
    out = np.exp(-np.cos(np.abs(th) - TWO_THIRDS_PI) - 0.5)
    return float(out) if np.ndim(theta) == 0 else out


@dataclass(frozen=True)
class LiAngleModel:
    """Distribution of the angle between a full-duplex node's two antennas.

    With `m` sectors the angle is a uniform draw over the `m` sector
    boundaries folded into [-pi, pi); the aligned outcome (theta = 0, where
    the loop channel sees the full main-lobe gain) has probability 1/m.
    """

    m: int
    angles: tuple[float, ...]
    probabilities: tuple[float, ...]


def li_angle_model(m_b: int) -> LiAngleModel:
    """Uniform angle grid {2*pi*k/m_b folded into [-pi, pi)}, weight 1/m_b each."""
    if not isinstance(m_b, (int, np.integer)) or m_b < 1:
        raise ValueError(f"li_angle_model: sector count must be a positive integer, got {m_b!r}")
    raw = 2.0 * math.pi * np.arange(m_b) / m_b
    folded = np.sort((raw + math.pi) % (2.0 * math.pi) - math.pi)
    return LiAngleModel(
        m=int(m_b),
        angles=tuple(float(a) for a in folded),
        probabilities=(1.0 / m_b,) * int(m_b),
    )


@dataclass(frozen=True)
class NetworkParams:
    """Physical and model parameters of the full-duplex cellular network.

    Defaults reproduce the reference configuration used throughout the
    test-suite: unit powers, density 1e-2, Rayleigh rate 1, dual path-loss
    exponents 4, interference-limited (zero noise), 4-sector antennas with
    side-lobe ratio 0.2, and residual loop-interference variance -30 dB.
    """

    lam: float = 1e-2          # BS and user process density (per unit area)
    mu: float = 1.0            # fading rate: channel power ~ Exp(mu), mean 1/mu
    p_b: float = 1.0           # BS transmit power (linear)
    p_u: float = 1.0           # user transmit power (linear)
    alpha1: float = 4.0        # BS<->user path-loss exponent
    alpha2: float = 4.0        # BS<->BS and user<->user path-loss exponent
    sigma_n2: float = 0.0      # AWGN variance (linear)
    sigma_l2: float = 1e-3     # residual loop-interference variance (linear)
    m_b: int = 4               # BS antenna sectors
    m_u: int = 4               # user antenna sectors
    gamma_b: float = 0.2       # BS side-lobe to main-lobe ratio
    gamma_u: float = 0.2       # user side-lobe to main-lobe ratio

    def __post_init__(self):
        checks = [
            ("lam", self.lam > 0, "must be positive"),
            ("mu", self.mu > 0, "must be positive"),
            ("p_b", self.p_b > 0, "must be positive"),
            ("p_u", self.p_u > 0, "must be positive"),
            ("alpha1", self.alpha1 > 2, "must exceed 2 for a finite interference field"),
            ("alpha2", self.alpha2 > 2, "must exceed 2 for a finite interference field"),
            ("sigma_n2", self.sigma_n2 >= 0, "must be nonnegative"),
            ("sigma_l2", self.sigma_l2 >= 0, "must be nonnegative"),
            ("m_b", isinstance(self.m_b, (int, np.integer)) and self.m_b >= 1, "must be a positive integer"),
            ("m_u", isinstance(self.m_u, (int, np.integer)) and self.m_u >= 1, "must be a positive integer"),
            ("gamma_b", 0 <= self.gamma_b <= 1, "must lie in [0, 1]"),
            ("gamma_u", 0 <= self.gamma_u <= 1, "must lie in [0, 1]"),
        ]
        for name, ok, why in checks:
            if not ok:
                raise ValueError(f"NetworkParams.{name} {why} (got {getattr(self, name)!r})")

    def bs_pattern(self) -> AntennaPattern:
        return antenna_gains(self.m_b, self.gamma_b)

    def user_pattern(self) -> AntennaPattern:
        return antenna_gains(self.m_u, self.gamma_u)

    def thinning(self, rx: str, tx: str) -> ThinningTable:
        """Thinning table for a (receiver, transmitter) node-type pair.

        `rx`/`tx` are 'b' (base station) or 'u' (user), e.g. ``thinning('b',
        'u')`` describes uplink-user interferers seen by a BS.
        """
        pats = {"b": self.bs_pattern(), "u": self.user_pattern()}
        if rx not in pats or tx not in pats:
            raise ValueError(f"thinning: node types must be 'b' or 'u', got {rx!r}, {tx!r}")
        return thinning_table(self.lam, pats[rx], pats[tx])
