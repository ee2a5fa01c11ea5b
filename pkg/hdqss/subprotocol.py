"""Two-party key establishment: simulated BB84 and an ideal oracle

Every edge of the hierarchy is created by one of these sub-protocols. Both
implementations return a SessionResult; an abort is reported in the result
rather than raised so callers can decide whether it is fatal.
"""

import logging
from typing import Optional

import numpy as np

from .errors import InvalidLength, LengthMismatch, InvalidChannelModel
from .models import (
    Key,
    ChannelModel,
    SessionResult,
    SubprotocolKind,
    BB84Protocol,
    IdealOracle,
)
from .quantum_sim import prepare_batch, transmit_batch, measure_batch


logger = logging.getLogger(__name__)

QBER_EXCEEDED = 'QberExceeded'
INSUFFICIENT_ROUNDS = 'InsufficientRounds'

DEFAULT_QBER_THRESHOLD = 0.11
DEFAULT_ROUND_FACTOR = 64
ROUND_CAP_SLACK = 1024


def default_round_cap(n: int, factor: int = DEFAULT_ROUND_FACTOR) -> int:
    return factor * n + ROUND_CAP_SLACK


def establish_key(kind: SubprotocolKind, n: int, rng: np.random.Generator) -> SessionResult:
    """Run the configured sub-protocol for an n-bit key"""
    if n < 1:
        raise InvalidLength(f"key length must be at least 1, got {n}")

    if isinstance(kind, IdealOracle):
        return run_oracle(n, rng, fixed_key=kind.fixed_key)
    if isinstance(kind, BB84Protocol):
        return run_bb84(n, kind.channel, kind.qber_threshold, rng, max_rounds=kind.max_rounds)
    raise TypeError(f"Unknown sub-protocol: {kind!r}")


def run_oracle(n: int, rng: np.random.Generator, fixed_key: Optional[Key] = None) -> SessionResult:
    """Trusted exchange; qubit accounting follows the ideal 2 qubits per key bit"""
    key = fixed_key if fixed_key is not None else Key.random(n, rng)
    if len(key) != n:
        raise LengthMismatch(f"oracle key has {len(key)} bits, expected {n}")

    return SessionResult(
        protocol='oracle',
        key_initiator=key,
        key_responder=key,
        qber=0.0,
        qubits_sent=2 * n,
        check_bits_used=n,
        sifted_bits=2 * n,
    )


def run_bb84(
    n: int,
    channel: ChannelModel,
    qber_threshold: float,
    rng: np.random.Generator,
    max_rounds: Optional[int] = None
) -> SessionResult:
    """Prepare-and-measure BB84 until 2n sifted bits exist, check half, keep n"""
    if n < 1:
        raise InvalidLength(f"key length must be at least 1, got {n}")
    if not 0.0 <= qber_threshold <= 1.0:
        raise InvalidChannelModel(f"qber_threshold must be in [0, 1], got {qber_threshold}")

    target = 2 * n
    cap = max_rounds if max_rounds is not None else default_round_cap(n)
    block = 4 * n + 32

    sender_chunks = []
    receiver_chunks = []
    rounds = 0
    sifted = 0

    while sifted < target and rounds < cap:
        size = min(block, cap - rounds)
        bits = rng.integers(0, 2, size=size, dtype=np.uint8)
        bases = rng.integers(0, 2, size=size, dtype=np.uint8)

        received = transmit_batch(prepare_batch(bits, bases), channel, rng)
        receiver_bases = rng.integers(0, 2, size=size, dtype=np.uint8)
        outcomes = measure_batch(received, receiver_bases, rng)

        # Public basis comparison over the authenticated classical channel
        matched = np.flatnonzero(bases == receiver_bases)
        needed = target - sifted
        if len(matched) >= needed:
            matched = matched[:needed]
            used = int(matched[-1]) + 1
        else:
            used = size

        rounds += used
        sifted += len(matched)
        sender_chunks.append(bits[matched])
        receiver_chunks.append(outcomes[matched])

    if sifted < target:
        logger.warning(f"BB84 hit the round cap ({cap}) with {sifted}/{target} sifted bits")
        return SessionResult(
            protocol='bb84',
            key_initiator=None,
            key_responder=None,
            qber=float('nan'),
            qubits_sent=rounds,
            check_bits_used=0,
            sifted_bits=sifted,
            aborted=True,
            abort_reason=INSUFFICIENT_ROUNDS,
        )

    sender = np.concatenate(sender_chunks)
    receiver = np.concatenate(receiver_chunks)

    check_count = sifted // 2
    check_mask = np.zeros(sifted, dtype=bool)
    check_mask[rng.choice(sifted, size=check_count, replace=False)] = True

    errors = int(np.count_nonzero(sender[check_mask] != receiver[check_mask]))
    qber = errors / check_count

    if qber > qber_threshold:
        logger.warning(f"BB84 aborted: qber {qber:.4f} > threshold {qber_threshold} ({channel.describe()})")
        return SessionResult(
            protocol='bb84',
            key_initiator=None,
            key_responder=None,
            qber=qber,
            qubits_sent=rounds,
            check_bits_used=check_count,
            sifted_bits=sifted,
            aborted=True,
            abort_reason=QBER_EXCEEDED,
        )

    key_sender = sender[~check_mask][:n]
    key_receiver = receiver[~check_mask][:n]
    mismatches = int(np.count_nonzero(key_sender != key_receiver))
    if mismatches:
        logger.debug(f"BB84 accepted with {mismatches} residual key mismatches (qber {qber:.4f})")

    return SessionResult(
        protocol='bb84',
        key_initiator=Key.from_bits(key_sender.tolist()),
        key_responder=Key.from_bits(key_receiver.tolist()),
        qber=qber,
        qubits_sent=rounds,
        check_bits_used=check_count,
        sifted_bits=sifted,
        key_mismatches=mismatches,
    )
