"""Wall-post and profile ingestion, monthly trust series, synthetic ledgers.

File formats
------------
Wall posts, one per line: ``owner poster timestamp content_length``.
Contacts, one per line: ``user count``.
Profiles, blocks opened by ``user <id>`` followed by ``activities:``,
``interests:``, ``affiliations:`` and ``gender:`` lines.
``#`` starts a comment in all three.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, TextIO

import numpy as np

from .errors import FormatError, IngestError
from .trust import (SECONDS_PER_DAY, InteractionLedger, eta_schedule, ips_trust,
                    social_trust, wallpost_trust)

MONTH_SECONDS = 30 * SECONDS_PER_DAY
PROFILE_SECTIONS = ("activities", "interests", "affiliations", "gender")


@dataclass(frozen=True)
class WallPostRecord:
    owner: str
    poster: str
    timestamp: int
    content_length: int = 0

    def __post_init__(self):
        if not self.owner or not self.poster:
            raise FormatError("user ids must be nonempty")
        if self.timestamp < 0:
            raise FormatError("timestamp must be >= 0")
        if self.content_length < 0:
            raise FormatError("content_length must be >= 0")


@dataclass
class WallPostParse:
    """Parsed records plus ``(line, message)`` for every rejected line."""

    records: list = field(default_factory=list)
    errors: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


def _content(raw: str) -> str:
    return raw.split("#", 1)[0].strip()


def parse_wallposts(stream: TextIO | Iterable[str]) -> WallPostParse:
    """Read wall posts; malformed lines are reported and skipped."""
    out = WallPostParse()
    for lineno, raw in enumerate(stream, 1):
        line = _content(raw)
        if not line:
            continue
        tok = line.split()
        if len(tok) != 4:
            out.errors.append((lineno, f"expected 4 fields, got {len(tok)}"))
            continue
        try:
            ts = int(tok[2])
        except ValueError:
            out.errors.append((lineno, f"non-numeric timestamp {tok[2]!r}"))
            continue
        try:
            length = int(tok[3])
        except ValueError:
            out.errors.append((lineno, f"non-numeric content length {tok[3]!r}"))
            continue
        try:
            out.records.append(WallPostRecord(tok[0], tok[1], ts, length))
        except FormatError as exc:
            out.errors.append((lineno, str(exc)))
    return out


def format_wallposts(records: Iterable[WallPostRecord]) -> str:
    return "".join(f"{r.owner} {r.poster} {r.timestamp} {r.content_length}\n" for r in records)


def parse_contacts(stream: TextIO | Iterable[str]) -> dict:
    """``user count`` lines into a dict; any malformed line is fatal."""
    out = {}
    for lineno, raw in enumerate(stream, 1):
        line = _content(raw)
        if not line:
            continue
        tok = line.split()
        if len(tok) != 2:
            raise FormatError(f"expected 2 fields, got {len(tok)}", lineno)
        try:
            count = int(tok[1])
        except ValueError:
            raise FormatError(f"non-integer contact count {tok[1]!r}", lineno) from None
        if count < 0:
            raise FormatError("contact count must be >= 0", lineno)
        if tok[0] in out:
            raise FormatError(f"duplicate user {tok[0]!r}", lineno)
        out[tok[0]] = count
    return out


def format_contacts(contacts: Mapping[str, int]) -> str:
    return "".join(f"{u} {contacts[u]}\n" for u in sorted(contacts))


def build_ledger(records: Iterable[WallPostRecord], contact_counts: Mapping[str, int] | None = None,
                 decay_rate: float = 1.0) -> InteractionLedger:
    """Fold records into an :class:`InteractionLedger`.

    Without ``contact_counts`` every poster's ``C`` falls back to its number
    of distinct wall partners.

    Raises
    ------
    IngestError
        If ``contact_counts`` is given but lacks, or has a nonpositive
        count for, a user who posted.
    """
    events = {}
    partners = {}
    for r in records:
        events.setdefault((r.poster, r.owner), []).append(float(r.timestamp))
        partners.setdefault(r.poster, set()).add(r.owner)
    if contact_counts is None:
        contacts = {u: len(p) for u, p in partners.items()}
    else:
        contacts = dict(contact_counts)
        for u in sorted(partners):
            if contacts.get(u, 0) <= 0:
                raise IngestError(f"no positive contact count for poster {u!r}")
    return InteractionLedger(events, contacts, decay_rate)


def ledger_origin(ledger: InteractionLedger) -> float | None:
    starts = [times[0] for times in ledger.events.values() if times]
    return min(starts) if starts else None


def ledger_end(ledger: InteractionLedger) -> float | None:
    ends = [times[-1] for times in ledger.events.values() if times]
    return max(ends) if ends else None


def trust_timeseries(ledger: InteractionLedger, i, j, a: float | None = None,
                     months: int | None = None, origin: float | None = None) -> list:
    """Cumulative ``W_ij`` at the end of each 30-day bucket.

    Returns ``[(month, W), ...]`` for months ``1..months``; bucket ``m``
    ends at ``origin + m * 30 days``. ``origin`` defaults to the earliest
    post in the ledger and ``months`` to the number of buckets spanned.
    """
    if origin is None:
        origin = ledger_origin(ledger)
        if origin is None:
            return [(m, 0.0) for m in range(1, (months or 0) + 1)]
    if months is None:
        end = ledger_end(ledger)
        months = max(1, math.floor((end - origin) / MONTH_SECONDS) + 1)
    return [(m, wallpost_trust(ledger, i, j, origin + m * MONTH_SECONDS, a))
            for m in range(1, months + 1)]


def social_series(ledger: InteractionLedger, i, j, ips: float = 0.0, a: float | None = None,
                  months: int | None = None, origin: float | None = None) -> list:
    """Monthly rows ``(month, N_ij, N_i, W, eta, S)`` mixing in profile trust ``ips``."""
    if origin is None:
        origin = ledger_origin(ledger) or 0.0
    rows = []
    for m, w in trust_timeseries(ledger, i, j, a, months, origin):
        t_end = origin + m * MONTH_SECONDS
        eta = eta_schedule(m * MONTH_SECONDS, ledger.total(i, t_end))
        rows.append((m, ledger.count(i, j, t_end), ledger.total(i, t_end), w, eta,
                     social_trust(ips, w, eta)))
    return rows


# --------------------------------------------------------------------------
# Profiles
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ProfileRecord:
    user: str
    activities: tuple = ()
    interests: tuple = ()
    affiliations: tuple = ()
    gender: str = ""

    @property
    def missing(self) -> tuple:
        return tuple(s for s in PROFILE_SECTIONS if not getattr(self, s))

    def as_profile(self) -> dict:
        return {s: getattr(self, s) for s in PROFILE_SECTIONS}


_SPLIT = re.compile(r"[,\s]+")


def _split_tokens(text: str) -> tuple:
    return tuple(t for t in _SPLIT.split(text.lower()) if t)


def parse_profiles(stream: TextIO | Iterable[str]) -> list:
    """Read ``user`` blocks; tokens are lowercased, missing sections empty."""
    records = []
    seen = set()
    current = None

    def flush():
        if current is not None:
            records.append(ProfileRecord(current["user"],
                                         *(current.get(s, ()) for s in PROFILE_SECTIONS[:3]),
                                         " ".join(current.get("gender", ()))))

    for lineno, raw in enumerate(stream, 1):
        line = _content(raw)
        if not line:
            continue
        head = line.split(None, 1)
        if head[0] == "user":
            if len(head) != 2 or len(head[1].split()) != 1:
                raise FormatError("user line needs exactly one id", lineno)
            flush()
            uid = head[1].strip()
            if uid in seen:
                raise FormatError(f"duplicate user block {uid!r}", lineno)
            seen.add(uid)
            current = {"user": uid}
            continue
        key, sep, value = line.partition(":")
        key = key.strip().lower()
        if not sep or key not in PROFILE_SECTIONS:
            raise FormatError(f"unrecognized line {line!r}", lineno)
        if current is None:
            raise FormatError("section before any user line", lineno)
        if key in current:
            raise FormatError(f"repeated section {key!r} for user {current['user']!r}", lineno)
        current[key] = _split_tokens(value)
    flush()
    return records


def format_profiles(records: Iterable[ProfileRecord]) -> str:
    out = []
    for r in records:
        out.append(f"user {r.user}")
        for s in PROFILE_SECTIONS[:3]:
            out.append(f"{s}: " + ", ".join(getattr(r, s)))
        out.append(f"gender: {r.gender}")
        out.append("")
    return "\n".join(out)


def profile_trust(profiles: Mapping[str, ProfileRecord] | Sequence[ProfileRecord], i, j,
                  threshold: float = 0.5) -> float:
    """IPS trust of user ``i`` in user ``j``."""
    if not isinstance(profiles, Mapping):
        profiles = {p.user: p for p in profiles}
    _, value = ips_trust(profiles[i].as_profile(), profiles[j].as_profile(), threshold=threshold)
    return value


# --------------------------------------------------------------------------
# Synthetic ledgers
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SyntheticLedgerConfig:
    """Posting model for a synthetic wall-post dataset.

    Every user ``u{k}`` posts a Poisson(``rate``) number of times per month.
    A fraction ``concentration`` of posts lands on the favourite partner
    ``u{k+1}``; the rest is spread uniformly over the other users.
    """

    users: int = 20
    months: int = 6
    rate: float = 20.0
    concentration: float = 0.8
    contacts: int = 20
    seed: int = 0
    origin: int = 1_190_000_000

    def __post_init__(self):
        if self.users < 2:
            raise FormatError("need at least two users")
        if self.months < 1 or self.rate < 0 or self.contacts < 1:
            raise FormatError("months and contacts must be >= 1 and rate >= 0")
        if not 0.0 <= self.concentration <= 1.0:
            raise FormatError("concentration must lie in [0, 1]")


def generate_wallposts(cfg: SyntheticLedgerConfig) -> tuple:
    """Return ``(records, contacts)`` sorted by timestamp."""
    rng = np.random.default_rng(cfg.seed)
    names = [f"u{k}" for k in range(cfg.users)]
    records = []
    for k, poster in enumerate(names):
        fav = names[(k + 1) % cfg.users]
        others = [u for u in names if u not in (poster, fav)]
        for m in range(cfg.months):
            n = int(rng.poisson(cfg.rate))
            offs = np.sort(rng.uniform(0.0, MONTH_SECONDS, size=n))
            on_fav = rng.random(n) < cfg.concentration
            picks = rng.integers(0, max(len(others), 1), size=n)
            for off, hit, pick in zip(offs, on_fav, picks):
                owner = fav if hit or not others else others[pick]
                ts = cfg.origin + int(m * MONTH_SECONDS + off)
                records.append(WallPostRecord(owner, poster, ts, int(rng.integers(1, 200))))
    records.sort(key=lambda r: (r.timestamp, r.poster, r.owner))
    return records, {u: cfg.contacts for u in names}
