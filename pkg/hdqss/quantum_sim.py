"""Idealized single-qubit preparation, channel and measurement for BB84

Only the four BB84 states occur, so a qubit is fully described by its
preparation basis and encoded bit. Scalar operations mirror the protocol
description; the batch variants apply the same rules to numpy arrays so a
BB84 session can push thousands of qubits through the channel at once.
"""

from dataclasses import dataclass

import numpy as np

from .models import Basis, QubitSymbol, ChannelModel, EveModel


def prepare(bit: int, basis: Basis) -> QubitSymbol:
    if bit not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {bit!r}")
    return QubitSymbol(basis=basis, bit=bit)


def measure(q: QubitSymbol, basis: Basis, rng: np.random.Generator) -> int:
    """Matched basis returns the encoded bit; conjugate basis is a fair coin"""
    if basis is q.basis:
        return q.bit
    return int(rng.integers(0, 2))


def transmit(q: QubitSymbol, model: ChannelModel, rng: np.random.Generator) -> QubitSymbol:
    """Send one qubit through the channel: Eve stage first, then bit-flip noise"""
    if model.eve is EveModel.INTERCEPT_RESEND_RANDOM:
        eve_basis = Basis.from_code(rng.integers(0, 2))
        q = prepare(measure(q, eve_basis, rng), eve_basis)
    elif model.eve is EveModel.INTERCEPT_RESEND_FIXED:
        q = prepare(measure(q, model.eve_basis, rng), model.eve_basis)

    if model.flip_probability > 0.0 and rng.random() < model.flip_probability:
        q = prepare(1 - q.bit, q.basis)
    return q


@dataclass
class QubitBatch:
    """Many qubits at once: bases hold 0 (Z) / 1 (X), bits hold 0 / 1"""
    bases: np.ndarray
    bits: np.ndarray

    def __len__(self) -> int:
        return len(self.bits)


def prepare_batch(bits: np.ndarray, bases: np.ndarray) -> QubitBatch:
    return QubitBatch(bases=np.asarray(bases, dtype=np.uint8), bits=np.asarray(bits, dtype=np.uint8))


def measure_batch(batch: QubitBatch, bases: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    coins = rng.integers(0, 2, size=len(batch), dtype=np.uint8)
    return np.where(np.asarray(bases) == batch.bases, batch.bits, coins).astype(np.uint8)


def transmit_batch(batch: QubitBatch, model: ChannelModel, rng: np.random.Generator) -> QubitBatch:
    size = len(batch)
    # Every draw happens unconditionally so the stream layout only depends on size.
    eve_bases = rng.integers(0, 2, size=size, dtype=np.uint8)
    eve_coins = rng.integers(0, 2, size=size, dtype=np.uint8)
    flips = rng.random(size) < model.flip_probability

    bases, bits = batch.bases, batch.bits
    if model.eve is not EveModel.NONE:
        if model.eve is EveModel.INTERCEPT_RESEND_FIXED:
            eve_bases = np.full(size, model.eve_basis.code, dtype=np.uint8)
        bits = np.where(eve_bases == bases, bits, eve_coins).astype(np.uint8)
        bases = eve_bases

    bits = (bits ^ flips.astype(np.uint8)).astype(np.uint8)
    return QubitBatch(bases=bases, bits=bits)
