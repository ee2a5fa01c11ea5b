"""Efficiency metrics, protocol comparison tables and enumeration audits"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from decimal import Decimal, ROUND_HALF_UP
from fractions import Fraction
from itertools import combinations, permutations
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from .errors import (
    BoundsExceeded,
    InvalidLength,
    InvalidPartyCount,
    NoSessions,
    SessionAborted,
)
from .keytree import HierarchyTree
from .models import (
    AuditReport,
    ChannelModel,
    EfficiencyReport,
    EveModel,
    IdealOracle,
    Key,
    Permutation,
    Protocol,
    SessionResult,
)
from .sharing import disclose, lock_agent, recover_master
from .subprotocol import DEFAULT_QBER_THRESHOLD, run_bb84


logger = logging.getLogger(__name__)

PROTOCOL_ORDER = [Protocol.HSU, Protocol.JIA, Protocol.LIAO, Protocol.PROPOSED]

# Qualitative rows of the comparison table
ENTANGLEMENT_REQUIREMENT = {
    Protocol.HSU: "Essential as uses Bell state",
    Protocol.JIA: "Essential as uses cluster state",
    Protocol.LIAO: "Essential as uses GHZ state",
    Protocol.PROPOSED: "Not essential as it can be implemented using single qubit state",
}

FEATURES = {
    Protocol.HSU: "Only dynamic",
    Protocol.JIA: "Only dynamic",
    Protocol.LIAO: "Only dynamic",
    Protocol.PROPOSED: "Dynamic and hierarchical; any QKD/QKA/DSQC/QSDC sub-protocol; agents can be promoted",
}

CLOSED_FORMS = {
    Protocol.HSU: "1/(2m)",
    Protocol.JIA: "1/(4m-2)",
    Protocol.LIAO: "1/(2m-1)",
    Protocol.PROPOSED: "1/(2m-2)",
}

MAX_AUDIT_BITS = 4
MAX_AUDIT_PRIMARIES = 4
MAX_LOCK_AUDIT_BITS = 5


def _check_party_count(m: int) -> None:
    if m < 2:
        raise InvalidPartyCount(f"m counts the boss plus at least one agent, got {m}")


def eta1(protocol: Protocol, m: int) -> Fraction:
    """Qubit efficiency c/q for an m-party scheme"""
    _check_party_count(m)
    if protocol is Protocol.HSU:
        return Fraction(1, 2 * m)
    if protocol is Protocol.JIA:
        return Fraction(1, 4 * m - 2)
    if protocol is Protocol.LIAO:
        return Fraction(1, 2 * m - 1)
    if protocol is Protocol.PROPOSED:
        return Fraction(1, 2 * m - 2)
    raise ValueError(f"Unknown protocol: {protocol}")


def eta2_proposed(m: int) -> Fraction:
    """c/(q+b) with q = 2(m-1) qubits and b = m-2 helper bits to the recovering agent"""
    _check_party_count(m)
    return Fraction(1, 3 * m - 4)


def efficiency_report(protocol: Protocol, m: int) -> EfficiencyReport:
    e1 = eta1(protocol, m)
    c, q = e1.numerator, e1.denominator
    if protocol is Protocol.PROPOSED:
        return EfficiencyReport(protocol=protocol, m=m, eta1=e1, c=c, q=q,
                                eta2=eta2_proposed(m), b=m - 2)
    return EfficiencyReport(protocol=protocol, m=m, eta1=e1, c=c, q=q)


def comparison_table(m_values: Sequence[int]) -> List[EfficiencyReport]:
    for m in m_values:
        _check_party_count(m)
    return [efficiency_report(p, m) for m in m_values for p in PROTOCOL_ORDER]


def format_percent(value: Fraction) -> str:
    """Two decimals, half-up, trailing zeros dropped: 16.67%, 10%, 0.51%"""
    percent = Decimal(value.numerator) * 100 / Decimal(value.denominator)
    text = f"{percent.quantize(Decimal('0.01'), rounding=ROUND_HALF_UP):f}"
    if '.' in text:
        text = text.rstrip('0').rstrip('.')
    return f"{text}%"


def comparison_frame(reports: List[EfficiencyReport]) -> pd.DataFrame:
    """One row per (m, protocol); every cell is text so CSV output is exact"""
    rows = []
    for r in reports:
        rows.append({
            'm': str(r.m),
            'protocol': r.protocol.value,
            'eta1': str(r.eta1),
            'eta1_percent': format_percent(r.eta1),
            'eta2': str(r.eta2) if r.eta2 is not None else '',
            'eta2_percent': format_percent(r.eta2) if r.eta2 is not None else '',
            'c': str(r.c),
            'q': str(r.q),
            'b': str(r.b) if r.b is not None else '',
        })
    columns = ['m', 'protocol', 'eta1', 'eta1_percent', 'eta2', 'eta2_percent', 'c', 'q', 'b']
    return pd.DataFrame(rows, columns=columns)


def comparison_matrix_frame(m_values: Sequence[int], include_features: bool = True) -> pd.DataFrame:
    """One row per measure, one column per protocol"""
    m_values = list(dict.fromkeys(m_values))
    frame = comparison_frame(comparison_table(m_values))
    pivot = frame.pivot(index='m', columns='protocol', values='eta1_percent')
    pivot = pivot.reindex(index=[str(m) for m in m_values], columns=[p.value for p in PROTOCOL_ORDER])

    rows = [{'measure': 'eta1 (m-party)', **{p.value: CLOSED_FORMS[p] for p in PROTOCOL_ORDER}}]
    for m in pivot.index:
        rows.append({'measure': f"eta1 ({m}-party)", **pivot.loc[m].to_dict()})
    if include_features:
        rows.append({'measure': 'Entanglement', **{p.value: ENTANGLEMENT_REQUIREMENT[p] for p in PROTOCOL_ORDER}})
        rows.append({'measure': 'Features', **{p.value: FEATURES[p] for p in PROTOCOL_ORDER}})
    return pd.DataFrame(rows, columns=['measure'] + [p.value for p in PROTOCOL_ORDER])


def measured_eta1(session_results: List[SessionResult], secret_bits: int) -> Fraction:
    """Realized efficiency: secret bits over every qubit actually transmitted"""
    if not session_results:
        raise NoSessions("no sessions to aggregate")
    for result in session_results:
        if result.aborted:
            raise SessionAborted(result)
    return Fraction(secret_bits, sum(r.qubits_sent for r in session_results))


def binomial_band(p: float, trials: int, k: float = 3.0) -> Tuple[float, float]:
    sigma = math.sqrt(p * (1 - p) / trials)
    return p - k * sigma, p + k * sigma


def abort_probability(check_bits: int, error_rate: float,
                      qber_threshold: float = DEFAULT_QBER_THRESHOLD) -> float:
    """P(more than threshold * check_bits of the check bits disagree)"""
    tolerated = math.floor(qber_threshold * check_bits)
    return float(stats.binom.sf(tolerated, check_bits, error_rate))


def qber_statistics(results: List[SessionResult]) -> Dict[str, Any]:
    if not results:
        raise NoSessions("no sessions to summarize")

    qbers = [r.qber for r in results if not math.isnan(r.qber)]
    checked = sum(r.check_bits_used for r in results)
    qubits = sum(r.qubits_sent for r in results)
    sifted = sum(r.sifted_bits for r in results)

    return {
        'sessions': len(results),
        'aborted': sum(1 for r in results if r.aborted),
        'mean_qber': float(np.mean(qbers)) if qbers else float('nan'),
        'pooled_qber': sum(r.qber * r.check_bits_used for r in results if r.check_bits_used) / checked if checked else float('nan'),
        'check_bits': checked,
        'qubits_sent': qubits,
        'sifted_bits': sifted,
        'sift_rate': sifted / qubits if qubits else 0.0,
        'sift_band': binomial_band(0.5, qubits) if qubits else (0.0, 1.0),
        'key_mismatches': sum(r.key_mismatches for r in results),
    }


@dataclass(frozen=True)
class DecayPoint:
    check_bits: int
    trials: int
    accepted: int
    binomial_acceptance: float

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.trials


def _decay_sweep(check_bits: int, trials: int, seed: np.random.SeedSequence,
                 qber_threshold: float) -> DecayPoint:
    rng = np.random.default_rng(seed)
    channel = ChannelModel(eve=EveModel.INTERCEPT_RESEND_RANDOM)
    accepted = 0
    for _ in range(trials):
        if not run_bb84(check_bits, channel, qber_threshold, rng).aborted:
            accepted += 1
    return DecayPoint(
        check_bits=check_bits,
        trials=trials,
        accepted=accepted,
        binomial_acceptance=1.0 - abort_probability(check_bits, 0.25, qber_threshold),
    )


def detection_decay(
    check_bit_counts: Sequence[int],
    trials: int,
    seed: int,
    qber_threshold: float = DEFAULT_QBER_THRESHOLD,
    max_workers: int = 4
) -> List[DecayPoint]:
    """Monte Carlo of how often intercept-resend slips past the QBER check

    A BB84 run for an x-bit key checks exactly x sifted bits. Each count gets
    its own child seed, so results do not depend on scheduling.
    """
    if trials < 1:
        raise BoundsExceeded(f"decay sweep needs at least one trial, got {trials}")
    for x in check_bit_counts:
        if x < 1:
            raise InvalidLength(f"check-bit count must be at least 1, got {x}")

    seeds = np.random.SeedSequence(seed).spawn(len(check_bit_counts))
    points: Dict[int, DecayPoint] = {}

    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        future_to_index = {
            executor.submit(_decay_sweep, x, trials, s, qber_threshold): i
            for i, (x, s) in enumerate(zip(check_bit_counts, seeds))
        }
        for future in as_completed(future_to_index):
            index = future_to_index[future]
            points[index] = future.result()
            logger.debug(f"decay sweep x={points[index].check_bits} done: "
                         f"{points[index].accepted}/{trials} accepted")

    return [points[i] for i in range(len(check_bit_counts))]


def audit_collusion(n_bits: int, num_primaries: int) -> AuditReport:
    """Exhaustively check that no proper subset of primaries learns anything about K_M"""
    if not 1 <= n_bits <= MAX_AUDIT_BITS or not 1 <= num_primaries <= MAX_AUDIT_PRIMARIES:
        raise BoundsExceeded(
            f"audit supports 1..{MAX_AUDIT_BITS} bits and 1..{MAX_AUDIT_PRIMARIES} primaries, "
            f"got {n_bits} bits and {num_primaries} primaries"
        )

    total = 1 << (n_bits * num_primaries)
    mask = (1 << n_bits) - 1
    assignments = np.arange(total, dtype=np.int64)
    keys = np.stack([(assignments >> (i * n_bits)) & mask for i in range(num_primaries)], axis=1)
    master = np.bitwise_xor.reduce(keys, axis=1)

    report = AuditReport(
        n_bits=n_bits,
        num_primaries=num_primaries,
        assignments=total,
        expected=Fraction(1, 1 << n_bits),
    )
    for size in range(1, num_primaries):
        for subset in combinations(range(num_primaries), size):
            pooled = np.bitwise_xor.reduce(keys[:, list(subset)], axis=1)
            report.fractions[subset] = Fraction(int(np.count_nonzero(pooled == master)), total)
    return report


def cycle_count(permutation: Permutation) -> int:
    seen = set()
    cycles = 0
    for start in range(len(permutation)):
        if start in seen:
            continue
        cycles += 1
        position = start
        while position not in seen:
            seen.add(position)
            position = permutation.mapping[position]
    return cycles


@dataclass
class LockAuditReport:
    n_bits: int
    cases: int = 0
    fixed_pairs: int = 0
    expected_fixed_pairs: int = 0
    pre_disclosure_matches: int = 0
    post_disclosure_matches: int = 0
    mismatches: List[Tuple[Tuple[int, ...], str]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (
            not self.mismatches
            and self.fixed_pairs == self.expected_fixed_pairs
            and self.pre_disclosure_matches == self.fixed_pairs
            and self.post_disclosure_matches == self.cases
        )


def audit_permutation_lock(n_bits: int) -> LockAuditReport:
    """Run lock/recover/disclose/recover over every key and every permutation

    Pre-disclosure recovery must hit K_M exactly when the permutation fixes
    the locked key; the fixed-pair count is cross-checked against the
    cycle-structure count sum(2^cycles).
    """
    if not 1 <= n_bits <= MAX_LOCK_AUDIT_BITS:
        raise BoundsExceeded(f"lock audit supports 1..{MAX_LOCK_AUDIT_BITS} bits, got {n_bits}")

    rng = np.random.default_rng(0)
    bob_key = Key.random(n_bits, rng)
    charlie_key = Key.random(n_bits, rng)
    report = LockAuditReport(n_bits=n_bits)

    for mapping in permutations(range(n_bits)):
        permutation = Permutation(mapping)
        report.expected_fixed_pairs += 2 ** cycle_count(permutation)
        for value in range(1 << n_bits):
            david_key = Key.from_int(value, n_bits)
            tree = HierarchyTree('Alice', n_bits)
            tree.join_primary('Bob', IdealOracle(bob_key), rng)
            tree.join_primary('Charlie', IdealOracle(charlie_key), rng)
            tree.join_primary('David', IdealOracle(david_key), rng)

            lock = lock_agent(tree, 'David', rng, permutation=permutation)
            everyone = tree.required_agents()
            fixed = permutation.fixes(david_key)
            pre = recover_master(tree, everyone) == tree.master_key
            disclose(lock)
            post = recover_master(tree, everyone) == tree.master_key

            report.cases += 1
            report.fixed_pairs += fixed
            report.pre_disclosure_matches += pre
            report.post_disclosure_matches += post
            if pre != fixed:
                report.mismatches.append((mapping, str(david_key)))
    return report
