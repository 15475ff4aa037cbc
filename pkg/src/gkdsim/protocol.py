"""KGC and group-member state machines for the five-step key distribution.

The run is: a registered initiator asks the KGC for a key over a roster of
t >= 2 members; the KGC echoes the roster; each member broadcasts a fresh
challenge; the KGC draws a group key, masks it per member with a share
derived from that member's long-term key and the challenge vector, tags the
whole thing with a hash, and broadcasts (tag, nonce, masked shares); each
member unmasks its share and accepts iff the recomputed tag matches.

The share formula is intentionally one function used by both sides:

    ring variant:   share = <power_vector(x, t),            (r_0, r_1..r_t)>
    field variant:  share = <power_vector(x + H(x|r_i|r_0), t), (r_0, r_1..r_t)>

where x is the member's long-term key and r_i its own challenge.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping

from .algebra import DomainContext, SeededRng, Variant, inner_product, power_vector, sample_element
from .codec import (
    DEFAULT_HASH,
    DEFAULT_ID_WIDTH,
    AuthInput,
    HashConfig,
    compute_auth,
    encode_element,
    hash_to_element,
)
from .errors import (
    DuplicateMember,
    IncompleteChallenges,
    MalformedBroadcast,
    NotInRoster,
    UnknownMember,
)

TAG_MISMATCH = "tag_mismatch"


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PartyIdentity:
    """A registered user: opaque identifier plus the long-term key shared with the KGC."""

    user_id: bytes
    secret_key: int


@dataclass(frozen=True)
class GroupRoster:
    """Ordered member list for one session; position in this tuple is the
    index used by every formula, so the order is fixed once at announcement."""

    members: tuple[bytes, ...]

    def __post_init__(self):
        if len(self.members) < 2:
            raise ValueError("a session needs at least two members")
        if len(set(self.members)) != len(self.members):
            raise DuplicateMember("roster contains a duplicate id")

    @property
    def size(self) -> int:
        return len(self.members)

    def index_of(self, user_id: bytes) -> int:
        try:
            return self.members.index(user_id)
        except ValueError:
            raise NotInRoster(f"{user_id!r} is not a roster member") from None


@dataclass(frozen=True)
class ChallengeSet:
    """The KGC nonce plus one challenge per roster position."""

    r0: int
    challenges: tuple[int, ...]

    @property
    def nonces(self) -> tuple[int, ...]:
        return (self.r0, *self.challenges)


# --- messages ---

@dataclass(frozen=True)
class Request:
    """Initiator's step-1 ask: the ordered id list."""

    members: tuple[bytes, ...]


@dataclass(frozen=True)
class Announcement:
    """KGC's step-2 echo of the roster; fixes the canonical order."""

    members: tuple[bytes, ...]


@dataclass(frozen=True)
class ChallengeMessage:
    """One member's step-3 challenge, public to everybody."""

    sender: bytes
    value: int


@dataclass(frozen=True)
class KgcBroadcast:
    """Step-4 payload: tag, KGC nonce, and one masked share per member."""

    auth: bytes
    r0: int
    masked_shares: tuple[int, ...]


class OutcomeStatus(Enum):
    ACCEPTED = "accepted"
    REJECTED = "rejected"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class SessionOutcome:
    status: OutcomeStatus
    key: int | None = None
    reason: str | None = None

    @classmethod
    def accepted(cls, key: int) -> "SessionOutcome":
        return cls(OutcomeStatus.ACCEPTED, key=key)

    @classmethod
    def rejected(cls, reason: str) -> "SessionOutcome":
        return cls(OutcomeStatus.REJECTED, reason=reason)

    @classmethod
    def timeout(cls) -> "SessionOutcome":
        return cls(OutcomeStatus.TIMEOUT, reason="no broadcast received")


# ---------------------------------------------------------------------------
# shared formulas
# ---------------------------------------------------------------------------

def compute_share(
    secret_key: int,
    nonces: tuple[int, ...],
    roster_index: int,
    variant: Variant,
    ctx: DomainContext,
    hash_cfg: HashConfig = DEFAULT_HASH,
) -> int:
    """The masking share for the member at roster_index (0-based).

    nonces is the full (t+1)-tuple (r_0, r_1, ..., r_t). The same function
    runs on the KGC and on every member, which is what makes unmasking work.
    """
    t = len(nonces) - 1
    x = ctx.reduce(secret_key)
    if variant is Variant.FIELD:
        own_challenge = ctx.reduce(nonces[roster_index + 1])
        material = (
            encode_element(x, ctx)
            + encode_element(own_challenge, ctx)
            + encode_element(ctx.reduce(nonces[0]), ctx)
        )
        x = ctx.add(x, hash_to_element(material, ctx, hash_cfg))
    return inner_product(power_vector(x, t, ctx), nonces, ctx)


def kgc_distribute(
    roster: GroupRoster,
    registered_keys: Mapping[bytes, int],
    challenges: Mapping[bytes, int],
    rng: SeededRng,
    variant: Variant,
    ctx: DomainContext,
    hash_cfg: HashConfig = DEFAULT_HASH,
    id_width: int = DEFAULT_ID_WIDTH,
    group_key: int | None = None,
    nonce: int | None = None,
) -> tuple[KgcBroadcast, int]:
    """Steps 4a-4d: draw key and nonce, mask per member, tag, broadcast.

    Returns (broadcast, group_key). The group key is returned only so tests
    and the insider (who can derive it anyway) have ground truth; it is never
    part of the wire message. group_key/nonce may be forced for fixtures.
    """
    for m in roster.members:
        if m not in registered_keys:
            raise UnknownMember(f"no registered key for {m!r}")
    missing = [m for m in roster.members if m not in challenges]
    if missing:
        raise IncompleteChallenges(f"missing challenges from {missing!r}")

    s = sample_element(rng, ctx) if group_key is None else ctx.reduce(group_key)
    r0 = sample_element(rng, ctx) if nonce is None else ctx.reduce(nonce)
    cs = ChallengeSet(r0, tuple(ctx.reduce(challenges[m]) for m in roster.members))

    shares = tuple(
        ctx.sub(s, compute_share(registered_keys[m], cs.nonces, i, variant, ctx, hash_cfg))
        for i, m in enumerate(roster.members)
    )
    auth = compute_auth(
        AuthInput(s, roster.members, cs.nonces, shares), ctx, hash_cfg, id_width
    )
    return KgcBroadcast(auth=auth, r0=r0, masked_shares=shares), s


def user_process_broadcast(
    identity: PartyIdentity,
    roster: GroupRoster,
    challenges: Mapping[bytes, int],
    bcast: KgcBroadcast,
    variant: Variant,
    ctx: DomainContext,
    hash_cfg: HashConfig = DEFAULT_HASH,
    id_width: int = DEFAULT_ID_WIDTH,
) -> SessionOutcome:
    """Step 5: unmask the candidate key and accept iff the recomputed tag matches.

    The tag is recomputed over the values as received, so any single-field
    tampering that leaves the tag untouched lands in REJECTED.
    """
    index = roster.index_of(identity.user_id)
    if len(bcast.masked_shares) != roster.size:
        raise MalformedBroadcast(
            f"{len(bcast.masked_shares)} shares for a roster of {roster.size}"
        )
    missing = [m for m in roster.members if m not in challenges]
    if missing:
        raise IncompleteChallenges(f"missing challenges from {missing!r}")

    nonces = (bcast.r0, *(challenges[m] for m in roster.members))
    share = compute_share(identity.secret_key, nonces, index, variant, ctx, hash_cfg)
    candidate = ctx.add(bcast.masked_shares[index], share)
    expected = compute_auth(
        AuthInput(candidate, roster.members, nonces, bcast.masked_shares),
        ctx,
        hash_cfg,
        id_width,
    )
    if expected != bcast.auth:
        return SessionOutcome.rejected(TAG_MISMATCH)
    return SessionOutcome.accepted(candidate)


# ---------------------------------------------------------------------------
# state machines
# ---------------------------------------------------------------------------

class KeyGenerationCentre:
    """The trusted party: key registry plus per-session challenge collection."""

    def __init__(
        self,
        ctx: DomainContext,
        variant: Variant,
        hash_cfg: HashConfig = DEFAULT_HASH,
        id_width: int = DEFAULT_ID_WIDTH,
    ):
        self.ctx = ctx
        self.variant = variant
        self.hash_cfg = hash_cfg
        self.id_width = id_width
        self._keys: dict[bytes, int] = {}
        self.roster: GroupRoster | None = None
        self._challenges: dict[bytes, int] = {}

    def register(self, identity: PartyIdentity) -> None:
        if identity.user_id in self._keys:
            raise DuplicateMember(f"{identity.user_id!r} already registered")
        self._keys[identity.user_id] = self.ctx.reduce(identity.secret_key)

    def announce(self, member_ids: tuple[bytes, ...]) -> Announcement:
        """Step 2: validate the requested roster and echo it in request order."""
        roster = GroupRoster(tuple(member_ids))
        for m in roster.members:
            if m not in self._keys:
                raise UnknownMember(f"{m!r} is not registered")
        self.roster = roster
        self._challenges = {}
        return Announcement(members=roster.members)

    def receive_challenge(self, msg: ChallengeMessage) -> None:
        if self.roster is None:
            raise NotInRoster("no session announced")
        if msg.sender not in self.roster.members:
            raise NotInRoster(f"{msg.sender!r} is not in the current roster")
        # no origin authentication: any challenge labeled with a roster id counts
        self._challenges[msg.sender] = self.ctx.reduce(msg.value)

    def distribute(
        self,
        rng: SeededRng,
        group_key: int | None = None,
        nonce: int | None = None,
    ) -> tuple[KgcBroadcast, int]:
        if self.roster is None:
            raise IncompleteChallenges("no session announced")
        return kgc_distribute(
            self.roster,
            self._keys,
            self._challenges,
            rng,
            self.variant,
            self.ctx,
            self.hash_cfg,
            self.id_width,
            group_key=group_key,
            nonce=nonce,
        )


class GroupMember:
    """One user's view of a session.

    Holds only its own identity; there is deliberately no way to reach any
    other member's long-term key from here.
    """

    def __init__(
        self,
        identity: PartyIdentity,
        ctx: DomainContext,
        variant: Variant,
        hash_cfg: HashConfig = DEFAULT_HASH,
        id_width: int = DEFAULT_ID_WIDTH,
    ):
        self.identity = identity
        self.ctx = ctx
        self.variant = variant
        self.hash_cfg = hash_cfg
        self.id_width = id_width
        self.roster: GroupRoster | None = None
        self.observed_challenges: dict[bytes, int] = {}
        self.pending_broadcast: KgcBroadcast | None = None

    def receive_announcement(self, ann: Announcement) -> None:
        """Adopt the announced roster; resets all per-session state (freshness)."""
        roster = GroupRoster(ann.members)
        roster.index_of(self.identity.user_id)
        self.roster = roster
        self.observed_challenges = {}
        self.pending_broadcast = None

    def issue_challenge(self, rng: SeededRng) -> ChallengeMessage:
        if self.roster is None:
            raise NotInRoster("no announcement seen")
        value = sample_element(rng, self.ctx)
        self.observed_challenges[self.identity.user_id] = value
        return ChallengeMessage(sender=self.identity.user_id, value=value)

    def observe_challenge(self, msg: ChallengeMessage) -> None:
        """Record a challenge seen on the public channel."""
        if self.roster is not None and msg.sender in self.roster.members:
            self.observed_challenges[msg.sender] = self.ctx.reduce(msg.value)

    def receive_broadcast(self, bcast: KgcBroadcast) -> None:
        self.pending_broadcast = bcast

    def finalize(self) -> SessionOutcome:
        """Process whatever arrived; TIMEOUT when the broadcast never did."""
        if self.roster is None or self.pending_broadcast is None:
            return SessionOutcome.timeout()
        return user_process_broadcast(
            self.identity,
            self.roster,
            self.observed_challenges,
            self.pending_broadcast,
            self.variant,
            self.ctx,
            self.hash_cfg,
            self.id_width,
        )
