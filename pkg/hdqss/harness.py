"""Deterministic execution of scenarios against a fresh hierarchy"""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from . import analysis, sharing
from .config import SimulationConfig
from .errors import (
    ConfigError,
    HdqssError,
    NotLocked,
    NothingToRecover,
    SessionAborted,
)
from .keytree import HierarchyTree
from .models import ControlledState, EfficiencyReport, Key, SessionResult
from .scenario import (
    AuditCollusion, AuditLock, Broadcast, Collude, Disclose, EmitTable, Eta1, Eta2,
    JoinPrimary, JoinSecondary, Lock, MeasuredEta1, Promote, Recover, RecoverMessage,
    Residual, Revoke, Scenario, ScenarioEvent, SetInclusion,
)


logger = logging.getLogger(__name__)

BOSS = 'Alice'

Outcome = Tuple[str, Dict[str, str]]


@dataclass
class TranscriptEntry:
    index: int
    line: int
    event: str
    outcome: str
    public_data: Dict[str, str]
    tree_fingerprint: str

    def public_text(self) -> str:
        return ';'.join(f"{k}={v}" for k, v in sorted(self.public_data.items()))


@dataclass
class Transcript:
    seed: int
    key_length: int
    qber_threshold: float
    entries: List[TranscriptEntry] = field(default_factory=list)
    tables: List[List[EfficiencyReport]] = field(default_factory=list)
    final_tree: Dict[str, Any] = field(default_factory=dict)

    @property
    def unexpected_errors(self) -> List[TranscriptEntry]:
        return [e for e in self.entries if e.outcome.startswith('error:unexpected')]

    def outcomes(self) -> List[str]:
        return [e.outcome for e in self.entries]


def _session_data(result: SessionResult) -> Dict[str, str]:
    return {
        'protocol': result.protocol,
        'qber': f"{result.qber:.6f}",
        'qubits_sent': str(result.qubits_sent),
        'sifted_bits': str(result.sifted_bits),
        'check_bits': str(result.check_bits_used),
        'key_mismatches': str(result.key_mismatches),
    }


class ScenarioRunner:
    """Holds the tree and the public/secret bookkeeping of one run"""

    def __init__(self, seed: int, config: SimulationConfig):
        self.config = config
        self.rng = np.random.default_rng(seed)
        self.tree = HierarchyTree(BOSS, config.key_bits)
        self.edge_sessions: Dict[str, SessionResult] = {}
        self.pending_locks: List[ControlledState] = []
        self.last_s_a: Optional[Key] = None
        self.last_recovered: Optional[Key] = None
        self.transcript = Transcript(seed=seed, key_length=config.key_bits,
                                     qber_threshold=config.qber_threshold)
        self._handlers: Dict[type, Callable[[Any], Outcome]] = {
            JoinPrimary: self._join_primary,
            JoinSecondary: self._join_secondary,
            Revoke: self._revoke,
            Promote: self._promote,
            SetInclusion: self._set_inclusion,
            Residual: self._residual,
            Lock: self._lock,
            Disclose: self._disclose,
            Broadcast: self._broadcast,
            Recover: self._recover,
            RecoverMessage: self._recover_message,
            Collude: self._collude,
            AuditCollusion: self._audit_collusion,
            AuditLock: self._audit_lock,
            Eta1: self._eta1,
            Eta2: self._eta2,
            MeasuredEta1: self._measured_eta1,
            EmitTable: self._emit_table,
        }

    def execute(self, index: int, line: int, event: ScenarioEvent) -> TranscriptEntry:
        try:
            outcome, public = self._handlers[type(event)](event)
        except SessionAborted as e:
            outcome, public = f"aborted:{e.reason}", _session_data(e.result)
        except HdqssError as e:
            outcome, public = f"error:{e.code}", {}
            logger.debug(f"event {index} ({event.render()}) failed: {e}")
        except Exception as e:
            outcome, public = f"error:unexpected:{type(e).__name__}", {}
            logger.error(f"event {index} ({event.render()}) raised unexpectedly: {e}")

        entry = TranscriptEntry(
            index=index,
            line=line,
            event=event.render(),
            outcome=outcome,
            public_data=public,
            tree_fingerprint=self.tree.fingerprint(),
        )
        self.transcript.entries.append(entry)
        return entry

    # -- membership -------------------------------------------------------

    def _join_primary(self, event: JoinPrimary) -> Outcome:
        kind = event.subprotocol.build(self.config)
        result = self.tree.join_primary(event.agent, kind, self.rng)
        self.edge_sessions[event.agent] = result
        return 'ok', _session_data(result)

    def _join_secondary(self, event: JoinSecondary) -> Outcome:
        kind = event.subprotocol.build(self.config)
        if event.boss == self.tree.boss:
            result = self.tree.join_primary(event.agent, kind, self.rng)
        else:
            result = self.tree.join_secondary(event.boss, event.agent, kind, self.rng)
        self.edge_sessions[event.agent] = result
        return 'ok', _session_data(result)

    def _forget(self, agents: List[str]) -> None:
        for agent in agents:
            self.edge_sessions.pop(agent, None)
        self.pending_locks = [lock for lock in self.pending_locks if lock.locked_agent in self.tree.locks]

    def _revoke(self, event: Revoke) -> Outcome:
        detached = self.tree.revoke(event.agent)
        self._forget([event.agent] + detached)
        return 'ok', {'detached': ','.join(detached)}

    def _promote(self, event: Promote) -> Outcome:
        kind = event.subprotocol.build(self.config)
        detached = self.tree.subtree(event.agent)
        result = self.tree.promote(event.agent, event.new_boss, kind, self.rng)
        self._forget(detached)
        self.edge_sessions[event.agent] = result
        data = _session_data(result)
        data['level'] = str(self.tree.node(event.agent).level)
        data['detached'] = ','.join(detached)
        return 'ok', data

    def _set_inclusion(self, event: SetInclusion) -> Outcome:
        self.tree.set_inclusion(event.boss, event.child, event.included)
        return 'ok', {'included': str(event.included).lower()}

    def _residual(self, event: Residual) -> Outcome:
        return 'ok', {'residual_fingerprint': self.tree.residual_key(event.agent).fingerprint()}

    # -- sharing ----------------------------------------------------------

    def _lock(self, event: Lock) -> Outcome:
        lock = sharing.lock_agent(self.tree, event.agent, self.rng)
        self.pending_locks.append(lock)
        return 'ok', {'identity': str(lock.boss_permutation().is_identity()).lower()}

    def _disclose(self, event: Disclose) -> Outcome:
        if event.agent is not None:
            self.tree.node(event.agent)
            lock = self.tree.locks.get(event.agent)
            if lock is None:
                raise NotLocked(f"{event.agent!r} is not locked")
        else:
            undisclosed = [lock for lock in self.pending_locks if not lock.disclosed]
            if not undisclosed:
                raise NotLocked("no pending lock to disclose")
            lock = undisclosed[-1]
        permutation = sharing.disclose(lock)
        return 'ok', {
            'agent': lock.locked_agent,
            'permutation': ','.join(str(i) for i in permutation.mapping),
        }

    def _broadcast(self, event: Broadcast) -> Outcome:
        message = Key.from_hex(event.message_hex, self.tree.key_length)
        self.last_s_a = sharing.broadcast_message(self.tree, message)
        return 'ok', {'s_a': self.last_s_a.to_hex()}

    def _recover(self, event: Recover) -> Outcome:
        recovered = sharing.recover_master(self.tree, event.participants)
        self.last_recovered = recovered
        return 'ok', {
            'recovered_fingerprint': recovered.fingerprint(),
            'matches_commitment': str(recovered.fingerprint() == self.tree.fingerprint()).lower(),
        }

    def _recover_message(self, event: RecoverMessage) -> Outcome:
        if self.last_s_a is None or self.last_recovered is None:
            raise NothingToRecover("recover_message needs a prior broadcast and recover")
        message = sharing.recover_message(self.last_s_a, self.last_recovered)
        return 'ok', {'message': message.to_hex()}

    def _collude(self, event: Collude) -> Outcome:
        pooled = sharing.collusion_xor([sharing.agent_contribution(self.tree, a) for a in event.agents])
        return 'ok', {'matches_master': str(pooled == self.tree.master_key).lower()}

    # -- analysis ---------------------------------------------------------

    def _audit_collusion(self, event: AuditCollusion) -> Outcome:
        report = analysis.audit_collusion(event.n_bits, event.primaries)
        return 'ok', {
            'passed': str(report.passed).lower(),
            'subsets': str(len(report.fractions)),
            'expected_fraction': str(report.expected),
            'assignments': str(report.assignments),
        }

    def _audit_lock(self, event: AuditLock) -> Outcome:
        report = analysis.audit_permutation_lock(event.n_bits)
        return 'ok', {
            'passed': str(report.passed).lower(),
            'cases': str(report.cases),
            'fixed_pairs': str(report.fixed_pairs),
        }

    def _eta1(self, event: Eta1) -> Outcome:
        value = analysis.eta1(event.protocol, event.m)
        return 'ok', {'eta1': str(value), 'percent': analysis.format_percent(value)}

    def _eta2(self, event: Eta2) -> Outcome:
        value = analysis.eta2_proposed(event.m)
        return 'ok', {'eta2': str(value), 'percent': analysis.format_percent(value)}

    def _measured_eta1(self, event: MeasuredEta1) -> Outcome:
        sessions = [self.edge_sessions[a] for a in self.tree.primary_agents() if a in self.edge_sessions]
        value = analysis.measured_eta1(sessions, self.tree.key_length)
        return 'ok', {'measured_eta1': str(value), 'sessions': str(len(sessions))}

    def _emit_table(self, event: EmitTable) -> Outcome:
        reports = analysis.comparison_table(event.m_values)
        self.transcript.tables.append(reports)
        return 'ok', {'rows': str(len(reports))}


def run_scenario(scenario: Scenario, seed: int, config: Optional[SimulationConfig] = None) -> Transcript:
    """Execute every event in file order; protocol failures become outcomes"""
    config = (config or SimulationConfig(seed=seed)).validate()
    if not 0 <= seed < 2 ** 64:
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed}")

    runner = ScenarioRunner(seed, config)
    for index, (line, event) in enumerate(zip(scenario.line_numbers, scenario.events), start=1):
        runner.execute(index, line, event)

    runner.transcript.final_tree = runner.tree.to_dict()
    logger.info(f"scenario finished: {len(scenario)} events, "
                f"{len(runner.transcript.unexpected_errors)} unexpected errors")
    return runner.transcript
