"""Master-key recovery, one-time-pad broadcast and permutation locks"""

import logging
from typing import Iterable, List, Optional

import numpy as np

from .errors import (
    EmptyTree,
    InvalidLength,
    LengthMismatch,
    MissingParticipant,
    NotPrimary,
    AlreadyLocked,
    AlreadyDisclosed,
)
from .keytree import HierarchyTree
from .models import AgentId, Contribution, ControlledState, Key, Permutation


logger = logging.getLogger(__name__)


def agent_contribution(tree: HierarchyTree, agent: AgentId) -> Contribution:
    """The value an agent supplies during recovery

    A locked agent only knows its own share until the boss discloses the
    permutation; after that it supplies the permuted share instead.
    """
    value = tree.residual_key(agent)
    lock = tree.locks.get(agent)
    if lock is not None and lock.disclosed:
        share = tree.node(agent).share_key
        value = value ^ share ^ lock.permutation.apply(share)
    return Contribution(agent=agent, value=value)


def recover_master(tree: HierarchyTree, participants: Iterable[AgentId]) -> Key:
    present = set(participants)
    for agent in present:
        tree.node(agent)

    required = tree.required_agents()
    if not required:
        raise EmptyTree("no primary agents hold a share of the master key")
    for agent in required:
        if agent not in present:
            raise MissingParticipant(agent)

    return collusion_xor([agent_contribution(tree, agent) for agent in required])


def collusion_xor(contributions: List[Contribution]) -> Key:
    """Raw XOR of whatever a group of agents can pool, with no structural checks"""
    if not contributions:
        raise InvalidLength("collusion needs at least one contribution")
    result = contributions[0].value
    for contribution in contributions[1:]:
        result = result ^ contribution.value
    return result


def broadcast_message(tree: HierarchyTree, message: Key) -> Key:
    """One-time-pad a message under K_M; the returned S_A is public"""
    if len(message) != tree.key_length:
        raise LengthMismatch(f"message has {len(message)} bits, tree keys have {tree.key_length}")
    if not tree.primary_agents():
        raise EmptyTree("cannot broadcast before any primary agent has joined")
    return tree.master_key ^ message


def recover_message(s_a: Key, recovered_master: Key) -> Key:
    return s_a ^ recovered_master


def lock_agent(
    tree: HierarchyTree,
    agent: AgentId,
    rng: np.random.Generator,
    permutation: Optional[Permutation] = None
) -> ControlledState:
    """Swap a primary agent's term in K_M for its randomly permuted key

    Several agents may be locked at once; each lock is independent.
    """
    with tree.mutex:
        tree.node(agent)
        if agent == tree.boss or tree.parent(agent) != tree.boss:
            raise NotPrimary(f"{agent!r} is not a primary agent")
        if agent in tree.locks:
            raise AlreadyLocked(f"{agent!r} is already locked")

        if permutation is None:
            permutation = Permutation.random(tree.key_length, rng)
        elif len(permutation) != tree.key_length:
            raise LengthMismatch(f"permutation has {len(permutation)} positions, keys have {tree.key_length}")

        before = tree.master_contribution(agent)
        lock = ControlledState(agent, permutation, tree.mutex)
        tree.locks[agent] = lock
        tree.master_key = tree.master_key ^ before ^ tree.master_contribution(agent)

        logger.info(f"{agent} locked (identity permutation: {permutation.is_identity()})")
        return lock


def disclose(lock: ControlledState) -> Permutation:
    with lock.mutex:
        if lock.disclosed:
            raise AlreadyDisclosed(f"lock on {lock.locked_agent!r} was already disclosed")
        lock.disclosed = True
    logger.info(f"lock on {lock.locked_agent} disclosed")
    return lock.permutation
