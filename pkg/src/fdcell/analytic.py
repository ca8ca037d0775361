"""Analytic performance expressions: uplink/downlink outage probability,
average sum rate, and their large-antenna-count limits.

All results follow the standard Rayleigh-fading route: conditioned on the
serving-link distance, the coverage probability factors into Laplace
transforms of the independent interference terms (loop, base-station field,
user field), each reduced to nested improper integrals that
`fdcell.numerics` evaluates adaptively.

Suppression semantics, used consistently across this module and the
simulator: with passive suppression *enabled* the receive chain of a
full-duplex base station points at the served sector, the angle between its
two chains is the uniform sector draw of `li_angle_model`, and the loop
channel keeps only `passive_suppression_fraction(angle)` of its power
(side-lobe gain applies off the aligned angle).  With suppression
*disabled* the two chains share a boresight: the angle is 0 and the loop
channel sees the full main-lobe gain on both ends.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import NetworkParams, li_angle_model, passive_suppression_fraction
from .numerics import DEFAULT_SPEC, QuadratureSpec, integrate_finite, integrate_semi_infinite

LINKS = ("uplink", "downlink")


def rate_threshold(rate: float) -> float:
    """SINR threshold 2^R - 1 for a target rate of R bits per channel use."""
    if rate < 0:
        raise ValueError(f"rate must be nonnegative, got {rate!r}")
    return math.expm1(rate * math.log(2.0))


@dataclass(frozen=True)
class OutageQuery:
    """One outage evaluation request."""

    rate: float
    params: NetworkParams = field(default_factory=NetworkParams)
    suppression: bool = True
    link: str = "uplink"

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError(f"OutageQuery.rate must be positive, got {self.rate!r}")
        if self.link not in LINKS:
            raise ValueError(f"OutageQuery.link must be one of {LINKS}, got {self.link!r}")


@dataclass(frozen=True)
class MetricEstimate:
    """A metric value together with how it was obtained.

    `uncertainty` is a quadrature error bound for analytic/asymptotic
    results and a standard error for simulation results; `metadata` echoes
    the query so results are self-describing.
    """

    value: float
    method: str
    uncertainty: float
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in ("analytic", "asymptotic", "montecarlo"):
            raise ValueError(f"unknown method {self.method!r}")
        if not (self.uncertainty >= 0):
            raise ValueError(f"uncertainty must be nonnegative, got {self.uncertainty!r}")


# ---------------------------------------------------------------------------
# gain ratios entering the interference kernels
# ---------------------------------------------------------------------------

def _uplink_tables(params: NetworkParams):
    """Densities and normalized gains of both interferer fields at a BS.

    Gains are normalized by the served-link gain G_b*G_u, which is how they
    enter the coverage kernels.
    """
    bu = params.thinning("b", "u")
    bb = params.thinning("b", "b")
    served = params.bs_pattern().g * params.user_pattern().g
    q = np.asarray(bu.gains) / served
    c = np.asarray(bb.gains) / served
    return np.asarray(bu.densities), q, np.asarray(bb.densities), c


def _downlink_tables(params: NetworkParams):
    ub = params.thinning("u", "b")
    uu = params.thinning("u", "u")
    served = params.bs_pattern().g * params.user_pattern().g
    c = np.asarray(ub.gains) / served
    q = np.asarray(uu.gains) / served
    return np.asarray(ub.densities), c, np.asarray(uu.densities), q


# ---------------------------------------------------------------------------
# Laplace transforms of the three uplink interference terms
# ---------------------------------------------------------------------------

def _laplace_li_uplink_core(r, T: float, params: NetworkParams, suppression: bool):
    r = np.asarray(r, dtype=float)
    if T == 0.0 or params.sigma_l2 == 0.0:
        return np.ones_like(r)
    bs = params.bs_pattern()
    gu = params.user_pattern().g
    base = (params.p_b / (params.p_u * gu)) * params.mu * params.sigma_l2 * T * r ** params.alpha1
    if not suppression:
        return 1.0 / (1.0 + bs.g * base)
    acc = np.zeros_like(r)
    for angle in li_angle_model(params.m_b).angles:
        if angle == 0.0:
            acc += 1.0 / (1.0 + bs.g * base)
        else:
            acc += 1.0 / (1.0 + bs.h * passive_suppression_fraction(angle) * base)
    return acc / params.m_b


def laplace_li_uplink(r: float, T: float, params: NetworkParams, suppression: bool = True) -> float:
    """Laplace transform of the residual loop interference at the serving BS.

    Evaluated at the coverage point s = mu*T*r^alpha1 / (P_u*G_b*G_u); the
    loop channel carries the BS's own transmit power.  Closed form: one
    geometric-mixture term per antenna angle.
    """
    if r <= 0:
        raise ValueError(f"distance must be positive, got {r!r}")
    return float(_laplace_li_uplink_core(r, T, params, suppression))


def _user_field_exponent_coeff_uplink(T: float, params: NetworkParams, spec: QuadratureSpec) -> float:
    """Coefficient k such that L_{user field}(r) = exp(-k * r^2) at a BS.

    The field kernel depends on distance only through y/r, so the exclusion
    at the serving-user radius makes the whole exponent proportional to r^2.
    """
    if T == 0.0:
        return 0.0
    dens, q, _, _ = _uplink_tables(params)
    a1 = params.alpha1

    def kernel(v):
        vv = v[:, None]
        return (q[None, :] * T * vv) / (q[None, :] * T + vv ** a1)

    vals, _ = integrate_semi_infinite(kernel, 1.0, spec)
    return 2.0 * math.pi * float(np.dot(dens, vals))


def laplace_iu_uplink(r: float, T: float, params: NetworkParams,
                      spec: QuadratureSpec | None = None) -> float:
    """Laplace transform of the uplink-user interference field at a BS.

    Interfering users lie beyond the serving user's radius `r`; the four
    orientation cases enter through their thinned densities and normalized
    gains.
    """
    if r <= 0:
        raise ValueError(f"distance must be positive, got {r!r}")
    spec = spec or DEFAULT_SPEC
    coeff = _user_field_exponent_coeff_uplink(T, params, spec.tightened())
    return float(np.exp(-coeff * r * r))


def _tail_integrals(tau: np.ndarray, amps: np.ndarray, alpha: float,
                    spec: QuadratureSpec) -> np.ndarray:
    """T[j, i] = integral_{tau_j}^inf  amps_i * w / (amps_i + w^alpha) dw.

    Batched over all (tau, amplitude) pairs with a shared subdivision;
    amplitudes equal to zero produce exactly-zero columns.
    """
    n = tau.shape[0]
    amax = float(np.max(amps))
    if amax == 0.0:
        return np.zeros((n, amps.shape[0]))

    def f(s):
        w = tau[None, :, None] + s[:, None, None]
        val = (amps[None, None, :] * w) / (amps[None, None, :] + w ** alpha)
        return val.reshape(s.shape[0], -1)

    scale = max(1.0, amax ** (1.0 / alpha), float(np.median(tau)))
    vals, _ = integrate_semi_infinite(f, 0.0, spec.scaled(scale))
    return vals.reshape(n, amps.shape[0])


def _laplace_ib_uplink_vec(r, T: float, params: NetworkParams, spec: QuadratureSpec):
    """Normalized Laplace transform of the BS interference field at a BS.

    The nearest other BS sits at a random exclusion radius rho with the
    nearest-neighbor density 2*pi*lam*rho*exp(-lam*pi*rho^2); interferers
    are the BSs beyond it.  The rho-average (including its density
    normalization, so the T = 0 value is exactly 1) is evaluated here with
    the substitutions x = beta*w, rho = beta*tau, beta = r^(alpha1/alpha2),
    which make the innermost tail integral a function of tau alone.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if T == 0.0:
        return np.ones_like(r), np.zeros_like(r)
    lam = params.lam
    _, _, dens, c = _uplink_tables(params)
    amps = (params.p_b / params.p_u) * c * T
    beta2 = r ** (2.0 * params.alpha1 / params.alpha2)
    inner_spec = spec.tightened()

    def outer(tau):
        tails = _tail_integrals(tau, amps, params.alpha2, inner_spec)        # (nt, 4)
        expo = -2.0 * math.pi * (tails @ dens)[:, None] * beta2[None, :]     # (nt, nr)
        expo -= lam * math.pi * beta2[None, :] * (tau ** 2)[:, None]
        return 2.0 * math.pi * lam * beta2[None, :] * tau[:, None] * np.exp(expo)

    scale = 1.0 / math.sqrt(math.pi * lam * float(np.median(beta2)))
    vals, errs = integrate_semi_infinite(outer, 0.0, spec.scaled(scale))
    return vals, errs


def laplace_ib_uplink(r: float, T: float, params: NetworkParams,
                      spec: QuadratureSpec | None = None) -> float:
    """Laplace transform of the out-of-cell BS interference at a BS.

    Includes the average over the random nearest-BS exclusion radius (with
    its density normalization), so the value lies in (0, 1] and equals 1 at
    T = 0.
    """
    if r <= 0:
        raise ValueError(f"distance must be positive, got {r!r}")
    vals, _ = _laplace_ib_uplink_vec(np.array([r]), T, params, spec or DEFAULT_SPEC)
    return float(vals[0])


# ---------------------------------------------------------------------------
# downlink Laplace transforms
# ---------------------------------------------------------------------------

def _bs_field_exponent_coeff_downlink(T: float, params: NetworkParams,
                                      spec: QuadratureSpec) -> float:
    """Coefficient k with L_{BS field}(r) = exp(-k * r^2) at a downlink user."""
    if T == 0.0:
        return 0.0
    dens, c, _, _ = _downlink_tables(params)
    a1 = params.alpha1

    def kernel(v):
        vv = v[:, None]
        return (c[None, :] * T * vv) / (c[None, :] * T + vv ** a1)

    vals, _ = integrate_semi_infinite(kernel, 1.0, spec)
    return 2.0 * math.pi * float(np.dot(dens, vals))


def _user_field_exponent_coeff_downlink(T: float, params: NetworkParams,
                                        spec: QuadratureSpec) -> float:
    """Coefficient k with L_{user field}(r) = exp(-k * r^(2*alpha1/alpha2)).

    Uplink users interfere with a downlink user from distance zero (the
    intra-cell uplink user has no exclusion region), so the unscaled kernel
    integral runs over the whole positive axis.
    """
    if T == 0.0:
        return 0.0
    _, _, dens, q = _downlink_tables(params)
    a2 = params.alpha2
    amps = (params.p_u / params.p_b) * q * T

    def kernel(w):
        ww = w[:, None]
        return (amps[None, :] * ww) / (amps[None, :] + ww ** a2)

    amax = float(np.max(amps))
    if amax == 0.0:
        return 0.0
    vals, _ = integrate_semi_infinite(kernel, 0.0, spec.scaled(max(1.0, amax ** (1.0 / a2))))
    return 2.0 * math.pi * float(np.dot(dens, vals))


def laplace_ib_downlink(r: float, T: float, params: NetworkParams,
                        spec: QuadratureSpec | None = None) -> float:
    """Laplace transform of the BS interference at a downlink user
    (interfering BSs lie beyond the serving BS at radius `r`)."""
    if r <= 0:
        raise ValueError(f"distance must be positive, got {r!r}")
    spec = spec or DEFAULT_SPEC
    coeff = _bs_field_exponent_coeff_downlink(T, params, spec.tightened())
    return float(np.exp(-coeff * r * r))


def laplace_iu_downlink(r: float, T: float, params: NetworkParams,
                        spec: QuadratureSpec | None = None) -> float:
    """Laplace transform of the uplink-user interference at a downlink user
    (no exclusion: the intra-cell uplink user may be arbitrarily close)."""
    if r <= 0:
        raise ValueError(f"distance must be positive, got {r!r}")
    spec = spec or DEFAULT_SPEC
    coeff = _user_field_exponent_coeff_downlink(T, params, spec.tightened())
    return float(np.exp(-coeff * r ** (2.0 * params.alpha1 / params.alpha2)))


# ---------------------------------------------------------------------------
# outage probabilities
# ---------------------------------------------------------------------------

def _clip_probability(value: float, error: float, what: str) -> float:
    slack = max(10.0 * error, 1e-9)
    if not (-slack <= value <= 1.0 + slack):
        raise ArithmeticError(f"{what} = {value!r} falls outside [0, 1] beyond quadrature slack")
    return min(1.0, max(0.0, value))


def _outage_uplink_value(T: float, params: NetworkParams, suppression: bool,
                         spec: QuadratureSpec) -> tuple[float, float]:
    if T == 0.0:
        return 0.0, 0.0
    lam, mu = params.lam, params.mu
    g_served = params.bs_pattern().g * params.user_pattern().g
    iu_coeff = _user_field_exponent_coeff_uplink(T, params, spec.tightened())
    ib_spec = spec.tightened()
    # beyond this radius the serving-distance density underflows; skipping it
    # also keeps r^alpha finite on the mapped-to-infinity nodes
    r_cut = math.sqrt(750.0 / (lam * math.pi))

    def integrand(r):
        out = np.zeros_like(r)
        live = r < r_cut
        if not np.any(live):
            return out
        rl = r[live]
        expo = -lam * math.pi * rl * rl
        if params.sigma_n2 > 0.0:
            expo = expo - params.sigma_n2 * mu * T * rl ** params.alpha1 / (params.p_u * g_served)
        li = _laplace_li_uplink_core(rl, T, params, suppression)
        iu = np.exp(-iu_coeff * rl * rl)
        ib, _ = _laplace_ib_uplink_vec(rl, T, params, ib_spec)
        out[live] = 2.0 * math.pi * lam * rl * np.exp(expo) * li * iu * ib
        return out

    coverage, err = integrate_semi_infinite(
        integrand, 0.0, spec.scaled(1.0 / math.sqrt(math.pi * lam)))
    return _clip_probability(1.0 - coverage, err, "uplink outage"), err


def _outage_downlink_value(T: float, params: NetworkParams,
                           spec: QuadratureSpec) -> tuple[float, float]:
    if T == 0.0:
        return 0.0, 0.0
    lam, mu = params.lam, params.mu
    g_served = params.bs_pattern().g * params.user_pattern().g
    ib_coeff = _bs_field_exponent_coeff_downlink(T, params, spec.tightened())
    iu_coeff = _user_field_exponent_coeff_downlink(T, params, spec.tightened())
    cross = 2.0 * params.alpha1 / params.alpha2

    r_cut = math.sqrt(750.0 / (lam * math.pi))

    def integrand(r):
        out = np.zeros_like(r)
        live = r < r_cut
        if not np.any(live):
            return out
        rl = r[live]
        expo = -lam * math.pi * rl * rl - ib_coeff * rl * rl - iu_coeff * rl ** cross
        if params.sigma_n2 > 0.0:
            expo = expo - params.sigma_n2 * mu * T * rl ** params.alpha1 / (params.p_b * g_served)
        out[live] = 2.0 * math.pi * lam * rl * np.exp(expo)
        return out

    coverage, err = integrate_semi_infinite(
        integrand, 0.0, spec.scaled(1.0 / math.sqrt(math.pi * lam)))
    return _clip_probability(1.0 - coverage, err, "downlink outage"), err


def outage_uplink(query: OutageQuery, spec: QuadratureSpec | None = None) -> MetricEstimate:
    """Uplink outage probability of the three-node architecture.

    Probability that log2(1 + SINR) at the serving BS falls below
    `query.rate`, averaged over the serving-user distance; the SINR
    denominator carries noise, residual loop interference, the BS field and
    the user field.
    """
    if query.link != "uplink":
        raise ValueError("outage_uplink requires an uplink query")
    spec = spec or DEFAULT_SPEC
    T = rate_threshold(query.rate)
    value, err = _outage_uplink_value(T, query.params, query.suppression, spec)
    return MetricEstimate(value=value, method="analytic", uncertainty=err,
                          metadata=_echo(query))


def outage_downlink(query: OutageQuery, spec: QuadratureSpec | None = None) -> MetricEstimate:
    """Downlink outage probability of the three-node architecture.

    The downlink user is half-duplex, so there is no loop-interference
    factor and the suppression flag is ignored.
    """
    if query.link != "downlink":
        raise ValueError("outage_downlink requires a downlink query")
    spec = spec or DEFAULT_SPEC
    T = rate_threshold(query.rate)
    value, err = _outage_downlink_value(T, query.params, spec)
    return MetricEstimate(value=value, method="analytic", uncertainty=err,
                          metadata=_echo(query))


def evaluate_outage(query: OutageQuery, spec: QuadratureSpec | None = None) -> MetricEstimate:
    """Dispatch an outage query to the matching link evaluator."""
    if query.link == "uplink":
        return outage_uplink(query, spec)
    return outage_downlink(query, spec)


def _echo(query: OutageQuery) -> dict:
    return {
        "rate": query.rate,
        "link": query.link,
        "suppression": query.suppression,
        "params": query.params,
    }


# ---------------------------------------------------------------------------
# average sum rate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SumRate:
    """Average rates in bits per channel use, uplink + downlink = total."""

    uplink: float
    downlink: float
    total: float
    uncertainty: float
    metadata: dict = field(default_factory=dict)


# Tolerances of the rate-axis integral.  Quadrature noise stays two orders
# below Monte Carlo standard errors at 1e5 trials while keeping the number
# of outage evaluations modest.
_RATE_AXIS_SPEC = QuadratureSpec(rel_tol=1e-5, abs_tol=1e-7, max_subdivisions=400)
_COVERAGE_FLOOR = 1e-4


def _ergodic_rate(coverage, spec: QuadratureSpec) -> tuple[float, float, dict]:
    """integral_0^inf coverage(t) dt with exponential-tail completion.

    `coverage(t_vec)` must be vectorized and nonincreasing.  The domain is
    truncated once coverage drops below 1e-4; the remainder is estimated by
    an exponential fit through the last doubling and both the truncation
    point and the tail estimate are reported.
    """
    t_hi = 1.0
    c_half, c_hi = None, float(coverage(np.array([t_hi]))[0])
    for _ in range(40):
        if c_hi < _COVERAGE_FLOOR:
            break
        t_hi *= 2.0
        c_half, c_hi = c_hi, float(coverage(np.array([t_hi]))[0])
    else:
        raise ArithmeticError("coverage does not decay; the rate integral diverges")
    if c_half is None:
        c_half = float(coverage(np.array([t_hi / 2.0]))[0])

    body, err = integrate_finite(coverage, 0.0, t_hi, spec)
    tail = 0.0
    if c_hi > 0.0 and c_half > c_hi:
        decay = math.log(c_half / c_hi) / (t_hi / 2.0)
        tail = c_hi / decay
    meta = {"truncated_at": t_hi, "tail_estimate": tail}
    return body + tail, err + tail, meta


def sum_rate(params: NetworkParams, suppression: bool = True,
             spec: QuadratureSpec | None = None) -> SumRate:
    """Average sum rate of the three-node network in bits per channel use.

    Each link's ergodic rate is the integral over target rates of its
    coverage probability; the total is their sum.
    """
    axis_spec = spec or _RATE_AXIS_SPEC
    inner = axis_spec.tightened()

    def coverage_uplink(t):
        return np.array([
            1.0 - _outage_uplink_value(rate_threshold(float(ti)), params, suppression, inner)[0]
            for ti in t
        ])

    def coverage_downlink(t):
        return np.array([
            1.0 - _outage_downlink_value(rate_threshold(float(ti)), params, inner)[0]
            for ti in t
        ])

    up, up_err, up_meta = _ergodic_rate(coverage_uplink, axis_spec)
    down, down_err, down_meta = _ergodic_rate(coverage_downlink, axis_spec)
    return SumRate(
        uplink=up, downlink=down, total=up + down,
        uncertainty=up_err + down_err,
        metadata={"uplink": up_meta, "downlink": down_meta, "suppression": suppression},
    )


# ---------------------------------------------------------------------------
# large-antenna-count limits
# ---------------------------------------------------------------------------

def _require_asymptotic_regime(params: NetworkParams):
    problems = []
    if params.alpha1 != 4.0 or params.alpha2 != 4.0:
        problems.append("path-loss exponents must both equal 4")
    if params.p_b != params.p_u:
        problems.append("BS and user powers must be equal")
    if params.sigma_n2 != 0.0:
        problems.append("noise must be zero (interference-limited regime)")
    if params.gamma_b != params.gamma_u:
        problems.append("side-lobe ratios must be equal")
    if problems:
        raise ValueError("asymptotic regime violated: " + "; ".join(problems))


def asymptotic_outage_uplink(rate: float, params: NetworkParams,
                             spec: QuadratureSpec | None = None) -> float:
    """Uplink outage in the limit of infinitely many antenna sectors.

    Valid under the interference-limited symmetric regime (both exponents
    4, equal powers, zero noise, common side-lobe ratio).  Only the
    away-pointing orientation survives the limit, so every interference
    kernel collapses to the side-lobe ratio; the loop-interference term
    becomes a continuous average over the antenna angle, with the same
    side-lobe to main-lobe power ratio it carries at every finite sector
    count.
    """
    _require_asymptotic_regime(params)
    spec = spec or DEFAULT_SPEC
    T = rate_threshold(rate)
    if T == 0.0:
        return 0.0
    lam, mu, gamma, sl2 = params.lam, params.mu, params.gamma_b, params.sigma_l2
    gsqt = gamma * math.sqrt(T)
    inner = spec.tightened()

    def li_factor(z):
        if sl2 == 0.0:
            return np.ones_like(z)
        coef = gamma * mu * sl2 * T * z * z

        def over_angle(theta):
            frac = np.exp(-np.cos(theta - 2.0 * math.pi / 3.0) - 0.5)
            return 1.0 / (1.0 + coef[None, :] * frac[:, None])

        vals, _ = integrate_finite(over_angle, 0.0, math.pi, inner)
        return vals / math.pi

    def bs_factor(z):
        def over_w(w):
            ang = np.arctan(z[None, :] * gsqt / w[:, None])
            return np.exp(-math.pi * lam * (w[:, None] + z[None, :] * gsqt * ang))

        vals, _ = integrate_semi_infinite(over_w, 0.0, inner.scaled(1.0 / (math.pi * lam)))
        return vals

    z_cut = 750.0 / (math.pi * lam)

    def integrand(z):
        out = np.zeros_like(z)
        live = z < z_cut
        if not np.any(live):
            return out
        zl = z[live]
        iu = np.exp(-math.pi * lam * zl * gsqt * math.atan(gsqt))
        out[live] = ((math.pi * lam) ** 2 * np.exp(-math.pi * lam * zl)
                     * li_factor(zl) * bs_factor(zl) * iu)
        return out

    coverage, err = integrate_semi_infinite(integrand, 0.0, spec.scaled(1.0 / (math.pi * lam)))
    return _clip_probability(1.0 - coverage, err, "asymptotic uplink outage")


def asymptotic_outage_downlink(rate: float, gamma: float) -> float:
    """Downlink outage in the limit of infinitely many antenna sectors.

    Closed form depending only on the target rate and the side-lobe ratio;
    the network density never enters.  Goes to zero with the side-lobe
    ratio (no multiuser interference survives perfect directionality).
    """
    if rate < 0:
        raise ValueError(f"rate must be nonnegative, got {rate!r}")
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"side-lobe ratio must lie in [0, 1], got {gamma!r}")
    gsqt = gamma * math.sqrt(rate_threshold(rate))
    return 1.0 - 1.0 / (1.0 + gsqt * (math.atan(gsqt) + math.pi / 2.0))
