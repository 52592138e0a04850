"""Behavioral, social and combined trust metrics.

Behavioral trust is a Beta-evidence opinion ``<b, d, u>`` built from
forwarding observations. Social trust mixes profile similarity (IPS) with
wall-post interaction frequency. Combined trust fuses both, either as the
MAP estimate of a Beta-Bernoulli model whose prior comes from social trust,
or through the bootstrap/refresh recursion.

All functions are pure; state objects are frozen dataclasses and every
update returns a new value.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

from .errors import ConfigError, DomainError, UndefinedTrustError

PRIOR_FLOOR = 1.0
DEFAULT_FEATURES = ("activities", "interests", "gender", "affiliations")
SECONDS_PER_DAY = 86400.0


# --------------------------------------------------------------------------
# Beta evidence and behavioral opinions
# --------------------------------------------------------------------------

def beta_uncertainty(alpha: float, beta: float) -> float:
    """Return ``12 * Var(Beta(alpha, beta))``.

    Both parameters must be at least 1, in which case the result lies in
    [0, 1] and equals 1 only for the uniform Beta(1, 1).
    """
    if not (alpha >= PRIOR_FLOOR and beta >= PRIOR_FLOOR):
        raise DomainError(
            f"Beta parameters must be >= {PRIOR_FLOOR}, got ({alpha}, {beta})")
    s = alpha + beta
    return 12.0 * alpha * beta / (s * s * (s + 1.0))


@dataclass(frozen=True)
class TrustOpinion:
    belief: float
    disbelief: float
    uncertainty: float


class ChannelAdjustment(NamedTuple):
    alpha: float
    beta: float
    clamped: bool


def adjust_for_channel_loss(alpha0: float, beta0: float, plr: float) -> ChannelAdjustment:
    """Shift ``plr * (alpha0 + beta0)`` of negative evidence to positive.

    Drops explained by genuine channel loss should not count against the
    forwarder. ``beta`` is clamped at the prior floor; ``clamped`` reports
    whether that happened.
    """
    if alpha0 < 0 or beta0 < 0:
        raise DomainError("evidence counts must be nonnegative")
    if not 0.0 <= plr < 1.0:
        raise DomainError(f"plr must lie in [0, 1), got {plr}")
    shift = plr * (alpha0 + beta0)
    alpha1 = alpha0 + shift
    beta1 = beta0 - shift
    clamped = beta1 < PRIOR_FLOOR
    if clamped:
        beta1 = PRIOR_FLOOR
    return ChannelAdjustment(float(alpha1), float(beta1), clamped)


@dataclass(frozen=True)
class EvidenceRecord:
    """Forwarding evidence one node holds about another.

    ``raw_alpha``/``raw_beta`` count observed good/bad forwarding events.
    The Beta parameters ``alpha``/``beta`` start from the uniform prior
    (1, 1) and then receive the channel-loss correction for ``plr``.
    """

    raw_alpha: int = 0
    raw_beta: int = 0
    plr: float = 0.0
    alpha: float = field(init=False)
    beta: float = field(init=False)
    clamped: bool = field(init=False)

    def __post_init__(self):
        if self.raw_alpha < 0 or self.raw_beta < 0:
            raise DomainError("raw evidence counts must be nonnegative")
        adj = adjust_for_channel_loss(
            self.raw_alpha + PRIOR_FLOOR, self.raw_beta + PRIOR_FLOOR, self.plr)
        object.__setattr__(self, "alpha", adj.alpha)
        object.__setattr__(self, "beta", adj.beta)
        object.__setattr__(self, "clamped", adj.clamped)

    @property
    def observations(self) -> int:
        return self.raw_alpha + self.raw_beta


def record_observation(ev: EvidenceRecord, positive: bool) -> EvidenceRecord:
    """Return ``ev`` with one more positive or negative observation."""
    if positive:
        return EvidenceRecord(ev.raw_alpha + 1, ev.raw_beta, ev.plr)
    return EvidenceRecord(ev.raw_alpha, ev.raw_beta + 1, ev.plr)


def opinion_parts(alpha: float, beta: float) -> TrustOpinion:
    u = beta_uncertainty(alpha, beta)
    s = alpha + beta
    return TrustOpinion(alpha * (1.0 - u) / s, beta * (1.0 - u) / s, u)


def opinion_from_evidence(ev: EvidenceRecord) -> TrustOpinion:
    """Belief/disbelief/uncertainty triplet for an evidence record.

    ``belief`` is the behavioral trust value used by the rest of the
    package.
    """
    return opinion_parts(ev.alpha, ev.beta)


def behavioral_trust(ev: EvidenceRecord) -> float:
    return opinion_from_evidence(ev).belief


# --------------------------------------------------------------------------
# Inter-profile similarity
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ProfileSimilarityEvidence:
    alpha_s: int
    beta_s: int
    per_feature_scores: tuple[tuple[str, float], ...]
    missing: tuple[str, ...] = ()


def _tokens(value) -> set[str]:
    if value is None:
        return set()
    if isinstance(value, str):
        value = value.split()
    return {tok.lower() for item in value for tok in str(item).split()}


def feature_similarity(feature: str, a, b) -> float:
    """Token-overlap score of one profile feature.

    Jaccard index of the lowercased token sets; ``gender`` scores 1 on an
    exact match and 0 otherwise. Empty features score 0.
    """
    ta, tb = _tokens(a), _tokens(b)
    if not ta or not tb:
        return 0.0
    if feature == "gender":
        return 1.0 if ta == tb else 0.0
    return len(ta & tb) / len(ta | tb)


def ips_trust(profile_a: Mapping[str, object], profile_b: Mapping[str, object],
              features: Sequence[str] = DEFAULT_FEATURES,
              threshold: float = 0.5) -> tuple[ProfileSimilarityEvidence, float]:
    """Profile-similarity trust of one user in another.

    Each feature whose score exceeds ``threshold`` adds positive evidence,
    the others negative evidence. The trust value is the Beta mean of
    ``Beta(alpha_s + 1, beta_s + 1)`` discounted by its uncertainty.
    """
    scores = []
    missing = []
    alpha_s = beta_s = 0
    for feat in features:
        va, vb = profile_a.get(feat), profile_b.get(feat)
        if not _tokens(va) or not _tokens(vb):
            missing.append(feat)
        score = feature_similarity(feat, va, vb)
        scores.append((feat, score))
        if score > threshold:
            alpha_s += 1
        else:
            beta_s += 1
    ev = ProfileSimilarityEvidence(alpha_s, beta_s, tuple(scores), tuple(missing))
    return ev, opinion_parts(alpha_s + PRIOR_FLOOR, beta_s + PRIOR_FLOOR).belief


# --------------------------------------------------------------------------
# Wall-post interaction trust
# --------------------------------------------------------------------------

@dataclass
class InteractionLedger:
    """Timestamped wall-post counts.

    ``events[(i, j)]`` holds the sorted timestamps of posts made by ``i``
    on ``j``'s wall; ``contacts[i]`` is the contact count ``C`` of ``i``.
    Counts "up to time t" include posts stamped exactly at ``t``.
    """

    events: dict = field(default_factory=dict)
    contacts: dict = field(default_factory=dict)
    decay_rate: float = 1.0
    _by_poster: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.decay_rate <= 0:
            raise DomainError("decay_rate must be positive")
        self._reindex()

    def _reindex(self):
        by_poster = {}
        for (i, j), times in self.events.items():
            times.sort()
            by_poster.setdefault(i, []).extend(times)
        for times in by_poster.values():
            times.sort()
        self._by_poster = by_poster

    def add(self, poster, owner, timestamp: float):
        bisect.insort(self.events.setdefault((poster, owner), []), timestamp)
        bisect.insort(self._by_poster.setdefault(poster, []), timestamp)

    def count(self, i, j, t: float | None = None) -> int:
        """N_{i,j}(t): posts by ``i`` on ``j``'s wall up to ``t``."""
        times = self.events.get((i, j), ())
        return len(times) if t is None else bisect.bisect_right(times, t)

    def total(self, i, t: float | None = None) -> int:
        """N_i(t): all posts by ``i`` up to ``t``."""
        times = self._by_poster.get(i, ())
        return len(times) if t is None else bisect.bisect_right(times, t)

    @property
    def posts(self) -> dict:
        return {k: len(v) for k, v in self.events.items()}

    @property
    def totals(self) -> dict:
        return {k: len(v) for k, v in self._by_poster.items()}

    def posters(self):
        return sorted(self._by_poster)


def wallpost_trust(ledger: InteractionLedger, i, j, t: float | None = None,
                   a: float | None = None) -> float:
    """``1 - exp(-a * x)`` with ``x = N_ij / (N_i / C)``.

    ``x`` compares how often ``i`` posts on ``j``'s wall against ``i``'s
    average posting rate per contact. Without history (``N_i = 0``) or
    contacts (``C = 0``) the trust is 0.
    """
    a = ledger.decay_rate if a is None else a
    if a <= 0:
        raise DomainError("decay constant a must be positive")
    n_i = ledger.total(i, t)
    c = ledger.contacts.get(i, 0)
    if n_i <= 0 or c <= 0:
        return 0.0
    x = ledger.count(i, j, t) * c / n_i
    return -math.expm1(-a * x)


@dataclass(frozen=True)
class SocialTrustState:
    ips_trust: float
    wallpost_trust: float
    eta: float
    social_trust: float


def social_trust(ips: float, wallpost: float, eta: float) -> float:
    """Convex mix ``eta * W + (1 - eta) * I``."""
    for name, v in (("I", ips), ("W", wallpost), ("eta", eta)):
        if not 0.0 <= v <= 1.0:
            raise DomainError(f"{name} must lie in [0, 1], got {v}")
    return eta * wallpost + (1.0 - eta) * ips


def eta_schedule(t: float, activity: float, t_ramp: float = 90 * SECONDS_PER_DAY,
                 activity_ref: float = 50.0) -> float:
    """Weight of interaction trust against profile similarity.

    ``min(1, (t / t_ramp) * min(1, activity / activity_ref))``: zero at
    bootstrap, growing with elapsed time and posting activity, saturating
    at 1. ``t`` is in seconds since the ledger origin.
    """
    if t < 0:
        raise DomainError("t must be nonnegative")
    if t_ramp <= 0 or activity_ref <= 0:
        raise DomainError("t_ramp and activity_ref must be positive")
    return min(1.0, (t / t_ramp) * min(1.0, max(activity, 0.0) / activity_ref))


def social_state(ips: float, wallpost: float, eta: float) -> SocialTrustState:
    return SocialTrustState(ips, wallpost, eta, social_trust(ips, wallpost, eta))


# --------------------------------------------------------------------------
# Combined trust: MAP estimate with a social prior
# --------------------------------------------------------------------------

def map_combined_trust(r: int, n: int, prior_alpha: float, prior_beta: float) -> float:
    """Posterior mode ``(r + alpha - 1) / (n + alpha + beta - 2)``."""
    if not 0 <= r <= n:
        raise DomainError(f"need 0 <= r <= n, got r={r}, n={n}")
    if prior_alpha < PRIOR_FLOOR or prior_beta < PRIOR_FLOOR:
        raise DomainError("prior parameters must be >= 1")
    den = n + prior_alpha + prior_beta - 2.0
    if den <= 0:
        raise UndefinedTrustError("no prior pseudo-counts and no observations")
    return (r + prior_alpha - 1.0) / den


def prior_from_social(s: float, strength: float = 10.0) -> tuple[float, float]:
    """Beta prior whose mode is ``s`` and whose pseudo-count total is ``strength``."""
    if not 0.0 <= s <= 1.0:
        raise DomainError(f"social trust must lie in [0, 1], got {s}")
    if strength < 0:
        raise DomainError("prior strength must be nonnegative")
    return 1.0 + s * strength, 1.0 + (1.0 - s) * strength


def incremental_trust_update(t_n: float, n: int, n_prime: float, positive: bool) -> float:
    """Fold one observation into MAP trust without keeping ``r``."""
    w = n + n_prime
    if positive:
        return (t_n * w + 1.0) / (w + 1.0)
    return t_n * w / (w + 1.0)


def trust_mse(n: int, n_prime: float, t_star: float, t_prime: float) -> float:
    """Mean-square error of the MAP trust after ``n`` Bernoulli(t_star) draws.

    ``(n t*(1-t*) + n'^2 (t* - t')^2) / (n + n')^2``: binomial variance
    plus the squared bias contributed by the prior mode ``t'``.
    """
    if n < 0 or n_prime < 0:
        raise DomainError("n and n_prime must be nonnegative")
    if n + n_prime <= 0:
        raise DomainError("n + n_prime must be positive")
    w = n + n_prime
    return (n * t_star * (1.0 - t_star) + n_prime ** 2 * (t_star - t_prime) ** 2) / (w * w)


@dataclass(frozen=True)
class CombinedTrustState:
    """MAP trust one node holds about another."""

    n: int = 0
    positives: int = 0
    prior_alpha: float = 1.0
    prior_beta: float = 1.0

    def __post_init__(self):
        if not 0 <= self.positives <= self.n:
            raise DomainError("need 0 <= positives <= n")
        if self.prior_alpha < PRIOR_FLOOR or self.prior_beta < PRIOR_FLOOR:
            raise DomainError("prior parameters must be >= 1")

    @classmethod
    def from_social(cls, s: float, strength: float = 10.0) -> "CombinedTrustState":
        a, b = prior_from_social(s, strength)
        return cls(0, 0, a, b)

    @property
    def n_prime(self) -> float:
        return self.prior_alpha + self.prior_beta - 2.0

    @property
    def prior_mode(self) -> float | None:
        if self.n_prime <= 0:
            return None
        return (self.prior_alpha - 1.0) / self.n_prime

    @property
    def defined(self) -> bool:
        return self.n + self.n_prime > 0

    @property
    def value(self) -> float:
        return map_combined_trust(self.positives, self.n, self.prior_alpha, self.prior_beta)

    def observe(self, positive: bool) -> "CombinedTrustState":
        return CombinedTrustState(self.n + 1, self.positives + int(bool(positive)),
                                  self.prior_alpha, self.prior_beta)


# --------------------------------------------------------------------------
# Combined trust: bootstrap recursion
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BootstrapParams:
    epsilon: float = 0.7
    zeta: float = 0.1
    rho: float = 0.5

    def __post_init__(self):
        for name in ("epsilon", "zeta", "rho"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")
        if self.epsilon < self.zeta:
            raise ConfigError("epsilon must be >= zeta so the trust weight stays nonnegative")


def bootstrap_init(s0: float) -> float:
    if not 0.0 <= s0 <= 1.0:
        raise DomainError(f"social trust must lie in [0, 1], got {s0}")
    return float(s0)


def bootstrap_update(t: float, b_hat: float, params: BootstrapParams) -> float:
    """One step of the behavioral update with the low-behavior penalty.

    The weight on the current trust drops from ``epsilon`` to
    ``epsilon - zeta`` while behavioral trust is strictly below 1/2.
    """
    if params.epsilon < params.zeta:
        raise ConfigError("epsilon must be >= zeta")
    penalty = params.zeta if b_hat < 0.5 else 0.0
    return (params.epsilon - penalty) * t + (1.0 - params.epsilon) * b_hat


def social_refresh(t: float, s: float, rho: float) -> float:
    if not 0.0 <= rho <= 1.0:
        raise DomainError("rho must lie in [0, 1]")
    return rho * t + (1.0 - rho) * s
