"""Independent Monte Carlo simulator of the marked point-process model.

Per trial the simulator realizes one snapshot of the network seen by a
typical receiver: serving-link distance, interferer fields with orientation
marks and Rayleigh fading, residual loop interference, then the SINR.
Outage and sum-rate estimators aggregate trials with standard errors.

Reproducibility contract: trial ``i`` of a run draws from a counter-based
stream that is a pure function of ``(seed, i, link lane)``
(`trial_rng` builds it), so results are byte-identical across reruns and
independent of any batching or execution order.  Within a trial the draw
order is fixed and interferer fields are drawn shell by shell starting at
the default window radius: enlarging the window only appends draws, it
never changes the ones already made, which makes window-enlargement
comparisons true truncation checks under common random numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .analytic import MetricEstimate
from .model import NetworkParams, li_angle_model, passive_suppression_fraction

ARCHITECTURES = ("three-node", "two-node")
NEAREST_BS_MODES = ("beyond-nearest", "all-other")
_LANE = {"uplink": 0, "downlink": 1}


def default_window_radius(lam: float) -> float:
    """Sampling-disk radius 20/sqrt(pi*lam).

    At path-loss exponent 4 the mean interference arriving from beyond this
    radius is orders of magnitude below Monte Carlo noise (the
    window-sufficiency test exercises exactly this).
    """
    if lam <= 0:
        raise ValueError("density must be positive")
    return 20.0 / math.sqrt(math.pi * lam)


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo controls.

    `window_radius = None` resolves to `default_window_radius(params.lam)`
    at run time.  `nearest_bs_mode` selects how same-kind interferers are
    excluded around the receiver: 'beyond-nearest' draws the
    nearest-neighbor radius and keeps interferers outside it (the reading
    used by the analytic engine), 'all-other' lets every other node of the
    process interfere.
    """

    trials: int = 100_000
    seed: int = 1
    window_radius: float | None = None
    arch: str = "three-node"
    suppression: bool = True
    nearest_bs_mode: str = "beyond-nearest"

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError(f"SimConfig.trials must be >= 1, got {self.trials!r}")
        if self.seed < 0:
            raise ValueError("SimConfig.seed must be a nonnegative integer")
        if self.window_radius is not None and not self.window_radius > 0:
            raise ValueError("SimConfig.window_radius must be positive")
        if self.arch not in ARCHITECTURES:
            raise ValueError(f"SimConfig.arch must be one of {ARCHITECTURES}")
        if self.nearest_bs_mode not in NEAREST_BS_MODES:
            raise ValueError(f"SimConfig.nearest_bs_mode must be one of {NEAREST_BS_MODES}")

    def resolve_window(self, params: NetworkParams) -> float:
        return self.window_radius if self.window_radius is not None else default_window_radius(params.lam)


@dataclass(frozen=True)
class TrialFixture:
    """Deterministic overrides for single-trial tests.

    Any field left as None is drawn randomly; interferer lists are
    ``(distance, case, fading)`` triples with Table-case ``case`` in 1..4.
    Fixtures replace draws outright, so fixed and random components may be
    mixed, but stream alignment with purely random trials is not preserved.
    """

    nearest_distance: float | None = None
    exclusion_distance: float | None = None
    desired_fading: float | None = None
    li_angle: float | None = None
    li_fading: float | None = None
    user_interferers: Sequence[tuple[float, int, float]] | None = None
    bs_interferers: Sequence[tuple[float, int, float]] | None = None


# ---------------------------------------------------------------------------
# elementary sampling operations
# ---------------------------------------------------------------------------

def sample_nearest_distance(lam: float, u) -> float:
    """Inverse-CDF draw of the nearest-neighbor distance of a density-`lam`
    process: r = sqrt(-ln(u) / (pi*lam)) for a uniform(0,1) variate `u`."""
    if lam <= 0:
        raise ValueError("density must be positive")
    ua = np.asarray(u, dtype=float)
    if np.any(ua <= 0.0) or np.any(ua >= 1.0):
        raise ValueError("uniform variate must lie strictly inside (0, 1)")
    r = np.sqrt(-np.log(ua) / (math.pi * lam))
    return float(r) if np.ndim(u) == 0 else r


def sample_ppp(density: float, window_radius: float, rng: np.random.Generator) -> np.ndarray:
    """One realization of a homogeneous Poisson process on a disk.

    Returns an (n, 2) array of coordinates; n is Poisson with mean
    density * pi * window_radius^2 and locations are uniform on the disk.
    """
    if density < 0:
        raise ValueError("density must be nonnegative")
    if window_radius <= 0:
        raise ValueError("window radius must be positive")
    n = rng.poisson(density * math.pi * window_radius ** 2)
    if n == 0:
        return np.empty((0, 2))
    radius = window_radius * np.sqrt(rng.random(n))
    angle = 2.0 * math.pi * rng.random(n)
    return np.column_stack([radius * np.cos(angle), radius * np.sin(angle)])


def draw_li_term(params: NetworkParams, suppression: bool, rng: np.random.Generator,
                 size: int | None = None):
    """Residual loop-interference power draw(s) at a full-duplex BS.

    The angle between the BS's chains is uniform on the sector grid and the
    loop fading is exponential with mean sigma_l2; see the suppression
    semantics in `fdcell.analytic`.  With `size` an array of independent
    draws is returned.
    """
    n = 1 if size is None else int(size)
    idx = rng.integers(params.m_b, size=n)
    h_l = rng.standard_exponential(n) * params.sigma_l2
    pat = params.bs_pattern()
    if suppression:
        angles = np.asarray(li_angle_model(params.m_b).angles)
        theta = angles[idx]
        lobe = np.where(theta == 0.0, pat.g * pat.g, pat.g * pat.h)
        frac = np.where(theta == 0.0, 1.0, passive_suppression_fraction(theta))
        out = params.p_b * lobe * frac * h_l
    else:
        out = params.p_b * pat.g * pat.g * h_l
    return float(out[0]) if size is None else out


def trial_rng(seed: int, trial: int, link: str = "uplink") -> np.random.Generator:
    """Counter-based stream for one trial: a pure function of
    (seed, trial, link)."""
    return np.random.Generator(np.random.Philox(key=_stream_key(seed, trial, _LANE[link])))


def _stream_key(seed: int, trial: int, lane: int) -> int:
    # low 64 bits: seed; high 64 bits: trial and link lane
    return ((int(trial) << 1 | lane) << 64) | (int(seed) & 0xFFFFFFFFFFFFFFFF)


class _StreamPool:
    """Re-keys a single counter-based generator per trial.

    Bit-for-bit equivalent to constructing ``trial_rng(seed, i, link)``
    fresh each trial (asserted in the test-suite) at a fraction of the
    cost.
    """

    def __init__(self):
        self._bg = np.random.Philox(key=0)
        self.generator = np.random.Generator(self._bg)
        self._state = self._bg.state
        self._key = self._state["state"]["key"]
        self._counter = self._state["state"]["counter"]

    def rekey(self, seed: int, trial: int, lane: int) -> np.random.Generator:
        key = _stream_key(seed, trial, lane)
        self._key[0] = key & 0xFFFFFFFFFFFFFFFF
        self._key[1] = key >> 64
        self._counter[:] = 0
        self._state["buffer_pos"] = 4
        self._state["has_uint32"] = 0
        self._state["uinteger"] = 0
        self._bg.state = self._state
        return self.generator


# ---------------------------------------------------------------------------
# per-trial machinery
# ---------------------------------------------------------------------------

class _FieldPlan:
    """Precomputed constants of one interferer field (marking view)."""

    __slots__ = ("case_cum", "gains", "alpha", "power", "density")

    def __init__(self, params: NetworkParams, rx: str, tx: str, alpha: float, power: float):
        table = params.thinning(rx, tx)
        self.case_cum = np.cumsum(table.case_probabilities())[:-1]
        self.gains = np.asarray(table.gains)
        self.alpha = alpha
        self.power = power
        self.density = params.lam


class _Plan:
    """All per-run constants shared by every trial."""

    def __init__(self, params: NetworkParams, sim: SimConfig):
        self.params = params
        self.sim = sim
        self.window = sim.resolve_window(params)
        self.shell_base = default_window_radius(params.lam)
        bs, user = params.bs_pattern(), params.user_pattern()
        self.g_served = bs.g * user.g
        self.li_gain_aligned = bs.g * bs.g            # at the BS
        self.li_gain_user_aligned = user.g * user.g   # at the user (two-node)
        angles = np.asarray(li_angle_model(params.m_b).angles)
        self.li_lobe = np.where(angles == 0.0, bs.g * bs.g, bs.g * bs.h)
        self.li_frac = np.where(angles == 0.0, 1.0,
                                passive_suppression_fraction(angles))
        self.uplink_users = _FieldPlan(params, "b", "u", params.alpha1, params.p_u)
        self.uplink_bss = _FieldPlan(params, "b", "b", params.alpha2, params.p_b)
        self.downlink_bss = _FieldPlan(params, "u", "b", params.alpha1, params.p_b)
        self.downlink_users = _FieldPlan(params, "u", "u", params.alpha2, params.p_u)

    def shells(self, exclusion: float) -> list[tuple[float, float]]:
        """Annuli (squared radii) covering (exclusion, window].

        The first shell ends at the default window radius and each further
        shell doubles it, so draws for a smaller window are a prefix of the
        draws for a larger one.  Shells fully inside the exclusion are
        dropped and partially covered ones are clipped.
        """
        out = []
        first_hi = min(self.window, self.shell_base)
        if first_hi > exclusion:
            out.append((exclusion * exclusion, first_hi * first_hi))
        lo = self.shell_base
        while lo < self.window:
            hi = min(self.window, 2.0 * lo)
            lo_eff = max(lo, exclusion)
            if hi > lo_eff:
                out.append((lo_eff * lo_eff, hi * hi))
            lo = hi
        return out


def _survival_to_distance(lam: float, u: float) -> float:
    # nearest-neighbor draw from the survival side; u in [0, 1) maps to
    # r in [0, inf) without boundary trouble
    return math.sqrt(-math.log1p(-u) / (math.pi * lam))


def _one_shell(fp: _FieldPlan, rng: np.random.Generator, r2lo: float, r2hi: float,
               mu: float) -> float:
    n = rng.poisson(fp.density * math.pi * (r2hi - r2lo))
    if n == 0:
        return 0.0
    d2 = r2lo + rng.random(n) * (r2hi - r2lo)
    case = np.searchsorted(fp.case_cum, rng.random(n))
    fad = rng.standard_exponential(n)
    if fp.alpha == 4.0:
        path = 1.0 / (d2 * d2)
    else:
        path = d2 ** (-0.5 * fp.alpha)
    return fp.power * float(np.dot(fp.gains[case], fad * path)) / mu


def _field_from_fixture(fp: _FieldPlan, interferers: Iterable[tuple[float, int, float]]) -> float:
    total = 0.0
    for distance, case, fading in interferers:
        if not 1 <= case <= 4:
            raise ValueError(f"interferer case must be in 1..4, got {case!r}")
        total += fp.power * fp.gains[case - 1] * fading * distance ** (-fp.alpha)
    return total


def _interleaved_fields(plan: _Plan, rng, fixture: TrialFixture | None,
                        first: tuple[_FieldPlan, float, str],
                        second: tuple[_FieldPlan, float, str], mu: float) -> tuple[float, float]:
    """Draw two interferer fields interleaved shell by shell.

    The interleaving (field A shell k, field B shell k, then k+1) keeps the
    draws of every window a prefix of the draws of any larger window.
    Fixture-provided fields consume no stream values.
    """
    fixed = {
        "user": None if fixture is None else fixture.user_interferers,
        "bs": None if fixture is None else fixture.bs_interferers,
    }
    totals = {}
    live = []
    for fp, exclusion, kind in (first, second):
        if fixed[kind] is not None:
            totals[kind] = _field_from_fixture(fp, fixed[kind])
        else:
            totals[kind] = 0.0
            live.append((fp, plan.shells(exclusion), kind))
    depth = max((len(shells) for _, shells, _ in live), default=0)
    for k in range(depth):
        for fp, shells, kind in live:
            if k < len(shells):
                totals[kind] += _one_shell(fp, rng, *shells[k], mu=mu)
    return totals[first[2]], totals[second[2]]


def _uplink_sinr(plan: _Plan, rng, fixture: TrialFixture | None, two_node: bool) -> float:
    """One uplink SINR realization at a typical BS.

    Draw order (fixed): serving distance, nearest-BS exclusion (mode
    dependent), loop angle index, loop fading, desired fading, then the
    user and BS fields shell-interleaved.  The two-node variant consumes
    the identical stream but its loop term is always boresight-aligned.
    """
    params, sim = plan.params, plan.sim
    fx = fixture

    r = fx.nearest_distance if fx and fx.nearest_distance is not None else \
        _survival_to_distance(params.lam, rng.random())
    if r >= plan.window:
        raise ValueError(
            f"window radius {plan.window!r} cannot hold the serving link at distance {r!r}")
    if sim.nearest_bs_mode == "beyond-nearest":
        rho = fx.exclusion_distance if fx and fx.exclusion_distance is not None else \
            _survival_to_distance(params.lam, rng.random())
    else:
        rho = 0.0

    if fx and fx.li_angle is not None:
        angle_idx = None
        angle = fx.li_angle
    else:
        angle_idx = int(rng.integers(params.m_b))
        angle = None
    h_l = fx.li_fading if fx and fx.li_fading is not None else \
        rng.standard_exponential() * params.sigma_l2
    h = fx.desired_fading if fx and fx.desired_fading is not None else \
        rng.standard_exponential() / params.mu

    i_user, i_bs = _interleaved_fields(
        plan, rng, fixture,
        (plan.uplink_users, r, "user"), (plan.uplink_bss, rho, "bs"), params.mu)

    if two_node or not sim.suppression:
        i_l = params.p_b * plan.li_gain_aligned * h_l
    elif angle_idx is not None:
        i_l = params.p_b * plan.li_lobe[angle_idx] * plan.li_frac[angle_idx] * h_l
    else:
        pat = params.bs_pattern()
        if angle == 0.0:
            i_l = params.p_b * pat.g * pat.g * h_l
        else:
            i_l = params.p_b * pat.g * pat.h * passive_suppression_fraction(angle) * h_l

    signal = params.p_u * plan.g_served * h * r ** (-params.alpha1)
    denom = params.sigma_n2 + i_l + i_user + i_bs
    return signal / denom if denom > 0.0 else math.inf


def _downlink_sinr(plan: _Plan, rng, fixture: TrialFixture | None, two_node: bool) -> float:
    """One downlink SINR realization at a typical user.

    Three-node: the user is half-duplex (no loop term) and uplink users
    interfere from distance zero (intra-cell uplink user included).
    Two-node: the user is itself full-duplex, so it carries an aligned loop
    term and only out-of-cell users interfere (beyond the nearest-other-user
    radius, drawn like the BS exclusion).
    """
    params, sim = plan.params, plan.sim
    fx = fixture

    r = fx.nearest_distance if fx and fx.nearest_distance is not None else \
        _survival_to_distance(params.lam, rng.random())
    if r >= plan.window:
        raise ValueError(
            f"window radius {plan.window!r} cannot hold the serving link at distance {r!r}")

    user_exclusion = 0.0
    if two_node:
        if sim.nearest_bs_mode == "beyond-nearest":
            user_exclusion = fx.exclusion_distance if fx and fx.exclusion_distance is not None \
                else _survival_to_distance(params.lam, rng.random())
        h_l = fx.li_fading if fx and fx.li_fading is not None else \
            rng.standard_exponential() * params.sigma_l2
    h = fx.desired_fading if fx and fx.desired_fading is not None else \
        rng.standard_exponential() / params.mu

    i_bs, i_user = _interleaved_fields(
        plan, rng, fixture,
        (plan.downlink_bss, r, "bs"), (plan.downlink_users, user_exclusion, "user"), params.mu)

    i_l = params.p_u * plan.li_gain_user_aligned * h_l if two_node else 0.0
    signal = params.p_b * plan.g_served * h * r ** (-params.alpha1)
    denom = params.sigma_n2 + i_l + i_user + i_bs
    return signal / denom if denom > 0.0 else math.inf


def uplink_sinr_trial(params: NetworkParams, sim: SimConfig,
                      fixture: TrialFixture | None = None,
                      rng: np.random.Generator | None = None) -> float:
    """One three-node uplink SINR realization (see `_uplink_sinr`)."""
    plan = _Plan(params, sim)
    return _uplink_sinr(plan, _require_rng(rng, fixture), fixture, two_node=False)


def downlink_sinr_trial(params: NetworkParams, sim: SimConfig,
                        fixture: TrialFixture | None = None,
                        rng: np.random.Generator | None = None) -> float:
    """One three-node downlink SINR realization (see `_downlink_sinr`)."""
    plan = _Plan(params, sim)
    return _downlink_sinr(plan, _require_rng(rng, fixture), fixture, two_node=False)


def two_node_sinr_trial(params: NetworkParams, sim: SimConfig,
                        fixture: TrialFixture | None = None,
                        rng: np.random.Generator | None = None,
                        link: str = "uplink") -> float:
    """One two-node (bidirectional full-duplex) SINR realization.

    Both ends carry an unsuppressable boresight-aligned loop term at their
    own transmit power, and both interferer processes contribute at both
    ends.
    """
    if link not in _LANE:
        raise ValueError(f"link must be one of {tuple(_LANE)}, got {link!r}")
    plan = _Plan(params, sim)
    rng = _require_rng(rng, fixture)
    if link == "uplink":
        return _uplink_sinr(plan, rng, fixture, two_node=True)
    return _downlink_sinr(plan, rng, fixture, two_node=True)


def _require_rng(rng, fixture):
    if rng is None:
        if fixture is None:
            raise ValueError("a generator is required when no fixture is given")
        # fully fixed trials never touch the stream; a throwaway suffices
        return np.random.Generator(np.random.Philox(key=0))
    return rng


# ---------------------------------------------------------------------------
# estimators
# ---------------------------------------------------------------------------

def sinr_samples(params: NetworkParams, sim: SimConfig, link: str = "uplink") -> np.ndarray:
    """All per-trial SINRs of a run, in trial order.

    This is the estimator workhorse: outage at any set of target rates can
    be read off one sample array, and reruns with the same seed reproduce
    it byte for byte.
    """
    if link not in _LANE:
        raise ValueError(f"link must be one of {tuple(_LANE)}, got {link!r}")
    plan = _Plan(params, sim)
    lane = _LANE[link]
    two_node = sim.arch == "two-node"
    pool = _StreamPool()
    out = np.empty(sim.trials)
    draw = _uplink_sinr if link == "uplink" else _downlink_sinr
    for i in range(sim.trials):
        rng = pool.rekey(sim.seed, i, lane)
        out[i] = draw(plan, rng, None, two_node)
    return out


def estimate_outage(params: NetworkParams, sim: SimConfig, link: str,
                    rate: float) -> MetricEstimate:
    """Empirical outage probability: the fraction of trials whose rate
    log2(1 + SINR) falls below `rate`, with binomial standard error."""
    if rate < 0:
        raise ValueError(f"rate must be nonnegative, got {rate!r}")
    samples = sinr_samples(params, sim, link)
    return outage_from_samples(samples, rate, metadata={
        "arch": sim.arch, "link": link, "seed": sim.seed, "trials": sim.trials,
        "suppression": sim.suppression, "nearest_bs_mode": sim.nearest_bs_mode,
        "params": params,
    })


def outage_from_samples(samples: np.ndarray, rate: float,
                        metadata: dict | None = None) -> MetricEstimate:
    """Outage estimate from a precomputed SINR sample array."""
    n = samples.shape[0]
    threshold = math.expm1(rate * math.log(2.0))
    p = float(np.count_nonzero(samples < threshold)) / n
    stderr = math.sqrt(p * (1.0 - p) / n)
    md = dict(metadata or {})
    md["rate"] = rate
    return MetricEstimate(value=p, method="montecarlo", uncertainty=stderr, metadata=md)


def estimate_sum_rate(params: NetworkParams, sim: SimConfig) -> MetricEstimate:
    """Empirical average sum rate (bits per channel use).

    Uplink and downlink trials are paired by index but draw from disjoint
    lanes; the per-trial statistic is log2(1+SINR_up) + log2(1+SINR_down)
    and the reported uncertainty is the standard error of its mean.
    """
    up = np.log2(1.0 + sinr_samples(params, sim, "uplink"))
    down = np.log2(1.0 + sinr_samples(params, sim, "downlink"))
    per_trial = up + down
    n = per_trial.shape[0]
    value = float(np.mean(per_trial))
    stderr = float(np.std(per_trial, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return MetricEstimate(
        value=value, method="montecarlo", uncertainty=stderr,
        metadata={
            "arch": sim.arch, "seed": sim.seed, "trials": sim.trials,
            "uplink_rate": float(np.mean(up)), "downlink_rate": float(np.mean(down)),
            "suppression": sim.suppression, "nearest_bs_mode": sim.nearest_bs_mode,
            "params": params,
        })
