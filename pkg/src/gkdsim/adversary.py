"""Channel control and the insider key-forgery strategy.

An insider who is a legitimate roster member can unmask the group key from
its own share, exactly like step 5. If it also controls the link from the
KGC to one victim, it can hand that victim a key of its own choosing: shift
the victim's masked share by (target - key) and recompute the tag over the
substituted values. The tag binds the broadcast to nothing but its own
contents, so the victim verifies and accepts. Everything else on the wire is
reused byte for byte, and no key other than the attacker's own is needed,
which is why the identical strategy works in both variants.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping

from .algebra import DomainContext, SeededRng, Variant, sample_element
from .codec import DEFAULT_HASH, DEFAULT_ID_WIDTH, AuthInput, HashConfig, compute_auth
from .errors import AttackerIsVictim, IncompleteChallenges, IndexOutOfRoster, MalformedBroadcast
from .protocol import GroupRoster, KgcBroadcast, PartyIdentity, compute_share


class ActionKind(Enum):
    DELIVER = "deliver"
    DROP = "drop"
    REPLACE = "replace"


@dataclass(frozen=True)
class ChannelAction:
    """What an interceptor does with one message on one link."""

    kind: ActionKind
    message: object | None = None

    @classmethod
    def deliver(cls) -> "ChannelAction":
        return cls(ActionKind.DELIVER)

    @classmethod
    def drop(cls) -> "ChannelAction":
        return cls(ActionKind.DROP)

    @classmethod
    def replace(cls, message: object) -> "ChannelAction":
        if message is None:
            raise ValueError("replacement message required")
        return cls(ActionKind.REPLACE, message=message)


@dataclass(frozen=True)
class InsiderContext:
    """Attack parameters: who attacks, who is fooled, what key gets planted.

    target_key None means "pick one at attack time, different from the real key".
    """

    attacker: PartyIdentity
    victim_index: int
    target_key: int | None = None


def insider_recover_key(
    attacker: PartyIdentity,
    roster: GroupRoster,
    challenges: Mapping[bytes, int],
    bcast: KgcBroadcast,
    variant: Variant,
    ctx: DomainContext,
    hash_cfg: HashConfig = DEFAULT_HASH,
) -> int:
    """Unmask the group key from the attacker's own share, exactly like step 5."""
    index = roster.index_of(attacker.user_id)
    if len(bcast.masked_shares) != roster.size:
        raise MalformedBroadcast(
            f"{len(bcast.masked_shares)} shares for a roster of {roster.size}"
        )
    missing = [m for m in roster.members if m not in challenges]
    if missing:
        raise IncompleteChallenges(f"missing challenges from {missing!r}")
    nonces = (bcast.r0, *(challenges[m] for m in roster.members))
    share = compute_share(attacker.secret_key, nonces, index, variant, ctx, hash_cfg)
    return ctx.add(bcast.masked_shares[index], share)


def forge_broadcast(
    victim_index: int,
    target_key: int,
    recovered_key: int,
    honest: KgcBroadcast,
    roster: GroupRoster,
    challenges: Mapping[bytes, int],
    ctx: DomainContext,
    hash_cfg: HashConfig = DEFAULT_HASH,
    id_width: int = DEFAULT_ID_WIDTH,
) -> KgcBroadcast:
    """The forgery: shift the victim's share, retag, reuse everything else.

    Exactly two fields differ from the honest broadcast: the victim's masked
    share and the tag. With target_key == recovered_key the output degenerates
    to the honest message.
    """
    if not 0 <= victim_index < roster.size:
        raise IndexOutOfRoster(f"victim index {victim_index} outside roster of {roster.size}")
    missing = [m for m in roster.members if m not in challenges]
    if missing:
        raise IncompleteChallenges(f"missing challenges from {missing!r}")
    target = ctx.reduce(target_key)
    shifted = ctx.add(ctx.sub(honest.masked_shares[victim_index], recovered_key), target)
    shares = (
        honest.masked_shares[:victim_index]
        + (shifted,)
        + honest.masked_shares[victim_index + 1 :]
    )
    nonces = (honest.r0, *(challenges[m] for m in roster.members))
    auth = compute_auth(AuthInput(target, roster.members, nonces, shares), ctx, hash_cfg, id_width)
    return KgcBroadcast(auth=auth, r0=honest.r0, masked_shares=shares)


# ---------------------------------------------------------------------------
# interceptors
# ---------------------------------------------------------------------------

class Interceptor:
    """Contract a channel controller implements.

    observe() sees every public message (the adversary watches the broadcast
    medium); intercept() is consulted only for messages on links the
    interceptor was registered on, one message at a time.
    """

    def observe(self, sender: bytes, receivers: tuple[bytes, ...], message: object) -> None:
        pass

    def intercept(self, sender: bytes, receiver: bytes, message: object) -> ChannelAction:
        return ChannelAction.deliver()


class InsiderInterceptor(Interceptor):
    """The concrete insider strategy, to be registered on the KGC->victim link.

    Passes everything through untouched except the final key broadcast headed
    to the victim, which it replaces with the forgery. Keeps the recovered
    and planted keys as ground truth for transcripts.
    """

    def __init__(
        self,
        ictx: InsiderContext,
        roster: GroupRoster,
        variant: Variant,
        ctx: DomainContext,
        hash_cfg: HashConfig = DEFAULT_HASH,
        id_width: int = DEFAULT_ID_WIDTH,
        rng: SeededRng | None = None,
    ):
        if not 0 <= ictx.victim_index < roster.size:
            raise IndexOutOfRoster(
                f"victim index {ictx.victim_index} outside roster of {roster.size}"
            )
        if roster.members[ictx.victim_index] == ictx.attacker.user_id:
            raise AttackerIsVictim("attacker and victim must be distinct members")
        roster.index_of(ictx.attacker.user_id)
        if ictx.target_key is None and rng is None:
            raise ValueError("a random target key needs an rng")
        self.ictx = ictx
        self.roster = roster
        self.variant = variant
        self.ctx = ctx
        self.hash_cfg = hash_cfg
        self.id_width = id_width
        self.rng = rng
        self.victim_id = roster.members[ictx.victim_index]
        self.challenges: dict[bytes, int] = {}
        self.recovered_key: int | None = None
        self.forged_key: int | None = None

    def observe(self, sender: bytes, receivers: tuple[bytes, ...], message: object) -> None:
        from .protocol import ChallengeMessage  # cycle-free local import

        if isinstance(message, ChallengeMessage) and message.sender in self.roster.members:
            self.challenges[message.sender] = self.ctx.reduce(message.value)

    def intercept(self, sender: bytes, receiver: bytes, message: object) -> ChannelAction:
        if not isinstance(message, KgcBroadcast) or receiver != self.victim_id:
            return ChannelAction.deliver()
        recovered = insider_recover_key(
            self.ictx.attacker,
            self.roster,
            self.challenges,
            message,
            self.variant,
            self.ctx,
            self.hash_cfg,
        )
        target = self.ictx.target_key
        if target is None:
            target = sample_element(self.rng, self.ctx)
            while target == recovered:
                target = sample_element(self.rng, self.ctx)
        else:
            target = self.ctx.reduce(target)
        forged = forge_broadcast(
            self.ictx.victim_index,
            target,
            recovered,
            message,
            self.roster,
            self.challenges,
            self.ctx,
            self.hash_cfg,
            self.id_width,
        )
        self.recovered_key = recovered
        self.forged_key = target
        return ChannelAction.replace(forged)


class BroadcastSuppressor(Interceptor):
    """Drop the key broadcast instead of forging: suppression, not impersonation.

    The victim then produces no outcome at all (timeout), which is what
    distinguishes simple denial of service from the forgery above.
    """

    def __init__(self, victim_id: bytes):
        self.victim_id = victim_id
        self.dropped = 0

    def intercept(self, sender: bytes, receiver: bytes, message: object) -> ChannelAction:
        if isinstance(message, KgcBroadcast) and receiver == self.victim_id:
            self.dropped += 1
            return ChannelAction.drop()
        return ChannelAction.deliver()


def insider_strategy(
    ictx: InsiderContext,
    roster: GroupRoster,
    variant: Variant,
    ctx: DomainContext,
    hash_cfg: HashConfig = DEFAULT_HASH,
    id_width: int = DEFAULT_ID_WIDTH,
    rng: SeededRng | None = None,
) -> InsiderInterceptor:
    """Build the interceptor for the KGC->victim link; validates the attack setup."""
    return InsiderInterceptor(ictx, roster, variant, ctx, hash_cfg, id_width, rng)
