"""Hierarchy of agents linked by sub-protocol keys

The boss (root) holds a master key equal to the XOR of the keys she shares
with her primary agents. Every boss keeps a copy of each subordinate's key,
which is what makes joins, revocations and promotions cheap: they only ever
XOR a single key in or out.
"""

import copy
import logging
import threading
from typing import Dict, List, Optional, Any, Tuple

import networkx as nx
import numpy as np

from .errors import (
    InvalidLength,
    DuplicateAgent,
    UnknownAgent,
    UnknownBoss,
    CannotRevokeRoot,
    LevelMismatch,
    NotAChild,
)
from .models import (
    AgentId,
    AgentNode,
    ControlledState,
    Key,
    SessionResult,
    SubprotocolKind,
    xor_all,
)
from .subprotocol import establish_key


logger = logging.getLogger(__name__)


class HierarchyTree:
    """Single-rooted agent tree with per-edge shared keys"""

    def __init__(self, boss: AgentId, key_length: int):
        if key_length < 1:
            raise InvalidLength(f"key length must be at least 1, got {key_length}")
        self.boss = boss
        self.key_length = key_length
        self.master_key = Key.zeros(key_length)
        self.locks: Dict[AgentId, ControlledState] = {}
        self._graph = nx.DiGraph()
        self._graph.add_node(boss, node=AgentNode(agent_id=boss, level=0))
        self._mutex = threading.RLock()

    # -- structure ---------------------------------------------------------

    def __contains__(self, agent: AgentId) -> bool:
        return agent in self._graph

    def __len__(self) -> int:
        return self._graph.number_of_nodes()

    @property
    def root(self) -> AgentNode:
        return self._graph.nodes[self.boss]['node']

    @property
    def mutex(self) -> threading.RLock:
        return self._mutex

    def node(self, agent: AgentId) -> AgentNode:
        if agent not in self._graph:
            raise UnknownAgent(f"unknown agent {agent!r}")
        return self._graph.nodes[agent]['node']

    def parent(self, agent: AgentId) -> Optional[AgentId]:
        self.node(agent)
        parents = list(self._graph.predecessors(agent))
        return parents[0] if parents else None

    def children(self, agent: AgentId) -> List[AgentId]:
        self.node(agent)
        return sorted(self._graph.successors(agent))

    def primary_agents(self) -> List[AgentId]:
        return self.children(self.boss)

    def agents(self) -> List[AgentId]:
        """Every member except the boss, breadth first with sorted siblings"""
        order = []
        queue = self.primary_agents()
        while queue:
            agent = queue.pop(0)
            order.append(agent)
            queue.extend(self.children(agent))
        return order

    def subtree(self, agent: AgentId) -> List[AgentId]:
        self.node(agent)
        return sorted(nx.descendants(self._graph, agent))

    # -- key algebra -------------------------------------------------------

    def master_contribution(self, primary: AgentId) -> Key:
        """What the boss XORed into K_M for this primary (permuted when locked)"""
        key = self.root.subordinate_keys[primary]
        lock = self.locks.get(primary)
        if lock is not None:
            key = lock.boss_permutation().apply(key)
        return key

    def expected_master_key(self) -> Key:
        return xor_all((self.master_contribution(a) for a in self.primary_agents()), self.key_length)

    def residual_key(self, agent: AgentId) -> Key:
        """share_key XOR the boss-side copies of every included sub-agent"""
        node = self.node(agent)
        if agent == self.boss:
            raise LevelMismatch("the boss has no share key")
        return node.share_key ^ xor_all(
            (node.subordinate_keys[s] for s in sorted(node.included_subordinates)),
            self.key_length,
        )

    def required_agents(self) -> List[AgentId]:
        """Primary agents plus, recursively, every sub-agent its boss includes"""
        order = []
        queue = self.primary_agents()
        while queue:
            agent = queue.pop(0)
            order.append(agent)
            queue.extend(sorted(self.node(agent).included_subordinates))
        return order

    def fingerprint(self) -> str:
        return self.master_key.fingerprint()

    # -- membership --------------------------------------------------------

    def join_primary(self, new_agent: AgentId, kind: SubprotocolKind,
                     rng: np.random.Generator) -> SessionResult:
        with self._mutex:
            return self._join(self.boss, new_agent, kind, rng)

    def join_secondary(self, boss: AgentId, new_agent: AgentId, kind: SubprotocolKind,
                       rng: np.random.Generator) -> SessionResult:
        """Recruit under an agent; K_M is untouched, the split stays inside the boss's share"""
        with self._mutex:
            if boss not in self._graph:
                raise UnknownBoss(f"unknown boss {boss!r}")
            return self._join(boss, new_agent, kind, rng)

    def _join(self, boss: AgentId, new_agent: AgentId, kind: SubprotocolKind,
              rng: np.random.Generator) -> SessionResult:
        if new_agent in self._graph:
            raise DuplicateAgent(f"agent {new_agent!r} is already in the tree")

        result = establish_key(kind, self.key_length, rng)
        result.raise_for_abort()

        boss_node = self.node(boss)
        boss_node.subordinate_keys[new_agent] = result.key_initiator
        boss_node.included_subordinates.add(new_agent)
        node = AgentNode(agent_id=new_agent, level=boss_node.level + 1, share_key=result.key_responder)
        self._graph.add_node(new_agent, node=node)
        self._graph.add_edge(boss, new_agent)

        if boss == self.boss:
            self.master_key = self.master_key ^ result.key_initiator

        logger.info(f"{new_agent} joined under {boss} at level {node.level} via {result.protocol}")
        return result

    def revoke(self, agent: AgentId) -> List[AgentId]:
        """Remove an agent; its immediate boss XORs the held copy back out

        The whole subtree is detached and the detached descendants are returned.
        """
        with self._mutex:
            if agent == self.boss:
                raise CannotRevokeRoot("the boss cannot be revoked")
            self.node(agent)
            boss = self.parent(agent)
            boss_node = self.node(boss)

            if boss == self.boss:
                self.master_key = self.master_key ^ self.master_contribution(agent)

            del boss_node.subordinate_keys[agent]
            boss_node.included_subordinates.discard(agent)

            detached = self.subtree(agent)
            for member in [agent] + detached:
                self.locks.pop(member, None)
            self._graph.remove_nodes_from([agent] + detached)

            logger.info(f"{agent} revoked by {boss}; detached {len(detached)} sub-agents")
            return detached

    def promote(self, agent: AgentId, new_boss: AgentId, kind: SubprotocolKind,
                rng: np.random.Generator) -> SessionResult:
        """Resign then rejoin one level up with a fresh key; atomic on abort"""
        with self._mutex:
            node = self.node(agent)
            boss_node = self.node(new_boss)
            if agent == new_boss or node.level < 2 or boss_node.level != node.level - 2:
                raise LevelMismatch(
                    f"cannot promote {agent!r} (level {node.level}) under "
                    f"{new_boss!r} (level {boss_node.level})"
                )

            snapshot = self._snapshot()
            self.revoke(agent)
            try:
                return self._join(new_boss, agent, kind, rng)
            except Exception:
                self._restore(snapshot)
                logger.warning(f"promotion of {agent} rolled back")
                raise

    def set_inclusion(self, boss: AgentId, child: AgentId, included: bool) -> None:
        with self._mutex:
            boss_node = self.node(boss)
            self.node(child)
            if self.parent(child) != boss:
                raise NotAChild(f"{child!r} is not a sub-agent of {boss!r}")
            if included:
                boss_node.included_subordinates.add(child)
            else:
                boss_node.included_subordinates.discard(child)

    # -- snapshots and checks ----------------------------------------------

    def _snapshot(self) -> Tuple[nx.DiGraph, Key, Dict[AgentId, ControlledState]]:
        # lock states are shared, not copied; callers keep references to them
        return copy.deepcopy(self._graph), self.master_key, dict(self.locks)

    def _restore(self, snapshot: Tuple[nx.DiGraph, Key, Dict[AgentId, ControlledState]]) -> None:
        self._graph, self.master_key, self.locks = snapshot

    def invariant_violations(self) -> List[str]:
        """Empty when every structural and key invariant holds"""
        problems = []
        if not nx.is_arborescence(self._graph):
            problems.append("tree is not a single-rooted arborescence")
        if self.master_key != self.expected_master_key():
            problems.append("master key differs from XOR of primary contributions")

        for agent in self._graph.nodes:
            node = self.node(agent)
            children = set(self._graph.successors(agent))
            boss = self.parent(agent)
            if boss is not None:
                if node.level != self.node(boss).level + 1:
                    problems.append(f"{agent}: level {node.level} under level {self.node(boss).level}")
                if node.share_key is None or len(node.share_key) != self.key_length:
                    problems.append(f"{agent}: share key missing or wrong length")
            if set(node.subordinate_keys) != children:
                problems.append(f"{agent}: held copies do not match children")
            if not node.included_subordinates <= children:
                problems.append(f"{agent}: includes non-children")

        primaries = set(self.primary_agents())
        for agent in self.locks:
            if agent not in primaries:
                problems.append(f"lock on {agent} which is not a primary agent")
        return problems

    def to_dict(self) -> Dict[str, Any]:
        nodes = []
        for agent in [self.boss] + self.agents():
            entry = self.node(agent).to_dict()
            entry['boss'] = self.parent(agent)
            nodes.append(entry)
        return {
            'boss': self.boss,
            'key_length': self.key_length,
            'master_key': str(self.master_key),
            'nodes': nodes,
            'locks': {a: s.disclosed for a, s in sorted(self.locks.items())},
        }


def new_tree(boss: AgentId, n: int) -> HierarchyTree:
    return HierarchyTree(boss, n)
