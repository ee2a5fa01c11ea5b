"""Data models for HDQSS simulation"""

import re
import threading
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Optional, Dict, Any, List, Tuple, Set, Iterable, Union

import numpy as np

from .errors import (
    InvalidLength,
    LengthMismatch,
    InvalidChannelModel,
    SessionAborted,
    PermutationWithheld,
)


AgentId = str

FNV_OFFSET_BASIS = 0xcbf29ce484222325
FNV_PRIME = 0x100000001b3

HEX_DIGITS = re.compile(r"[0-9a-fA-F]+")


def fnv1a_64(data: bytes) -> int:
    value = FNV_OFFSET_BASIS
    for byte in data:
        value ^= byte
        value = (value * FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return value


@dataclass(frozen=True)
class Key:
    """Fixed-length bit string; bits are stored most significant first"""
    bits: Tuple[int, ...]

    def __post_init__(self):
        if len(self.bits) == 0:
            raise InvalidLength("key length must be at least 1")
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError(f"key bits must be 0 or 1: {self.bits!r}")

    @classmethod
    def zeros(cls, n: int) -> 'Key':
        if n < 1:
            raise InvalidLength(f"key length must be at least 1, got {n}")
        return cls((0,) * n)

    @classmethod
    def from_bits(cls, bits: Union[str, Iterable[int]]) -> 'Key':
        if isinstance(bits, str):
            if set(bits) - {'0', '1'}:
                raise ValueError(f"not a binary string: {bits!r}")
            return cls(tuple(int(b) for b in bits))
        return cls(tuple(int(b) for b in bits))

    @classmethod
    def from_int(cls, value: int, n: int) -> 'Key':
        if n < 1:
            raise InvalidLength(f"key length must be at least 1, got {n}")
        if value < 0 or value >= 1 << n:
            raise LengthMismatch(f"value {value} does not fit in {n} bits")
        return cls(tuple((value >> (n - 1 - i)) & 1 for i in range(n)))

    @classmethod
    def from_hex(cls, text: str, n: int) -> 'Key':
        digits = (n + 3) // 4
        if len(text) != digits:
            raise LengthMismatch(f"expected {digits} hex digits for {n} bits, got {len(text)}")
        if not HEX_DIGITS.fullmatch(text):
            raise ValueError(f"not a hex string: {text!r}")
        return cls.from_int(int(text, 16), n)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> 'Key':
        if n < 1:
            raise InvalidLength(f"key length must be at least 1, got {n}")
        return cls(tuple(int(b) for b in rng.integers(0, 2, size=n)))

    def __len__(self) -> int:
        return len(self.bits)

    def __xor__(self, other: 'Key') -> 'Key':
        if len(other) != len(self):
            raise LengthMismatch(f"cannot XOR keys of length {len(self)} and {len(other)}")
        return Key(tuple(a ^ b for a, b in zip(self.bits, other.bits)))

    def flip(self, position: int) -> 'Key':
        bits = list(self.bits)
        bits[position] ^= 1
        return Key(tuple(bits))

    def is_zero(self) -> bool:
        return not any(self.bits)

    def to_int(self) -> int:
        value = 0
        for b in self.bits:
            value = (value << 1) | b
        return value

    def to_hex(self) -> str:
        return f"{self.to_int():0{(len(self) + 3) // 4}x}"

    def to_bytes(self) -> bytes:
        return self.to_int().to_bytes((len(self) + 7) // 8, 'big')

    def fingerprint(self) -> str:
        """Non-secret, test-only commitment: 16 hex digits of FNV-1a 64"""
        return f"{fnv1a_64(self.to_bytes()):016x}"

    def __str__(self) -> str:
        return ''.join(str(b) for b in self.bits)


def xor_all(keys: Iterable[Key], n: int) -> Key:
    """XOR of every key; the empty XOR is the zero key of length n"""
    result = Key.zeros(n)
    for key in keys:
        result = result ^ key
    return result


class Basis(Enum):
    Z = "Z"  # computational
    X = "X"  # diagonal

    @property
    def code(self) -> int:
        return 0 if self is Basis.Z else 1

    @classmethod
    def from_code(cls, code: int) -> 'Basis':
        return cls.Z if int(code) == 0 else cls.X

    @property
    def conjugate(self) -> 'Basis':
        return Basis.X if self is Basis.Z else Basis.Z


@dataclass(frozen=True)
class QubitSymbol:
    """One of the four BB84 states"""
    basis: Basis
    bit: int


class EveModel(Enum):
    NONE = "none"
    INTERCEPT_RESEND_RANDOM = "intercept-resend-random"
    INTERCEPT_RESEND_FIXED = "intercept-resend-fixed"


@dataclass(frozen=True)
class ChannelModel:
    eve: EveModel = EveModel.NONE
    flip_probability: float = 0.0
    eve_basis: Optional[Basis] = None

    def __post_init__(self):
        if not 0.0 <= self.flip_probability <= 1.0:
            raise InvalidChannelModel(f"flip_probability must be in [0, 1], got {self.flip_probability}")
        if self.eve is EveModel.INTERCEPT_RESEND_FIXED and self.eve_basis is None:
            raise InvalidChannelModel("fixed-basis intercept-resend needs eve_basis")
        if self.eve is not EveModel.INTERCEPT_RESEND_FIXED and self.eve_basis is not None:
            raise InvalidChannelModel(f"eve_basis is only meaningful for fixed-basis Eve, not {self.eve.value}")

    def describe(self) -> str:
        eve = self.eve.value
        if self.eve_basis is not None:
            eve = f"{eve}({self.eve_basis.value})"
        return f"eve={eve} noise={self.flip_probability:g}"


@dataclass(frozen=True)
class BB84Protocol:
    channel: ChannelModel = field(default_factory=ChannelModel)
    qber_threshold: float = 0.11
    max_rounds: Optional[int] = None

    def __post_init__(self):
        if not 0.0 <= self.qber_threshold <= 1.0:
            raise InvalidChannelModel(f"qber_threshold must be in [0, 1], got {self.qber_threshold}")

    @property
    def name(self) -> str:
        return 'bb84'


@dataclass(frozen=True)
class IdealOracle:
    """Trusted key exchange; with fixed_key set it hands out exactly that key"""
    fixed_key: Optional[Key] = None

    @property
    def name(self) -> str:
        return 'oracle'


SubprotocolKind = Union[BB84Protocol, IdealOracle]


@dataclass
class SessionResult:
    """Outcome of one two-party key establishment"""
    protocol: str
    key_initiator: Optional[Key]
    key_responder: Optional[Key]
    qber: float
    qubits_sent: int
    check_bits_used: int
    sifted_bits: int = 0
    key_mismatches: int = 0
    aborted: bool = False
    abort_reason: Optional[str] = None

    @property
    def sift_rate(self) -> float:
        return self.sifted_bits / self.qubits_sent if self.qubits_sent else 0.0

    def raise_for_abort(self) -> None:
        if self.aborted:
            raise SessionAborted(self)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'protocol': self.protocol,
            'qber': self.qber,
            'qubits_sent': self.qubits_sent,
            'check_bits_used': self.check_bits_used,
            'sifted_bits': self.sifted_bits,
            'key_mismatches': self.key_mismatches,
            'aborted': self.aborted,
            'abort_reason': self.abort_reason or '',
        }


@dataclass
class AgentNode:
    """A member of the hierarchy; the root (boss) has no share_key"""
    agent_id: AgentId
    level: int
    share_key: Optional[Key] = None
    subordinate_keys: Dict[AgentId, Key] = field(default_factory=dict)
    included_subordinates: Set[AgentId] = field(default_factory=set)
    display_name: Optional[str] = None

    def __post_init__(self):
        if self.display_name is None:
            self.display_name = self.agent_id

    def to_dict(self) -> Dict[str, Any]:
        return {
            'agent_id': self.agent_id,
            'display_name': self.display_name,
            'level': self.level,
            'share_key': str(self.share_key) if self.share_key else None,
            'subordinate_keys': {k: str(v) for k, v in sorted(self.subordinate_keys.items())},
            'included_subordinates': sorted(self.included_subordinates),
        }


@dataclass(frozen=True)
class Contribution:
    agent: AgentId
    value: Key


@dataclass(frozen=True)
class Permutation:
    """Bijection on bit positions: bit i of the input lands at position mapping[i]"""
    mapping: Tuple[int, ...]

    def __post_init__(self):
        if sorted(self.mapping) != list(range(len(self.mapping))):
            raise ValueError(f"not a bijection on 0..{len(self.mapping) - 1}: {self.mapping!r}")

    @classmethod
    def identity(cls, n: int) -> 'Permutation':
        return cls(tuple(range(n)))

    @classmethod
    def reverse(cls, n: int) -> 'Permutation':
        return cls(tuple(range(n - 1, -1, -1)))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> 'Permutation':
        return cls(tuple(int(i) for i in rng.permutation(n)))

    def __len__(self) -> int:
        return len(self.mapping)

    def apply(self, key: Key) -> Key:
        if len(key) != len(self):
            raise LengthMismatch(f"permutation on {len(self)} positions applied to {len(key)}-bit key")
        out = [0] * len(key)
        for source, target in enumerate(self.mapping):
            out[target] = key.bits[source]
        return Key(tuple(out))

    def fixes(self, key: Key) -> bool:
        return self.apply(key) == key

    def is_identity(self) -> bool:
        return all(i == t for i, t in enumerate(self.mapping))


class ControlledState:
    """Boss-side record of a permutation lock on one primary agent"""

    def __init__(self, locked_agent: AgentId, permutation: Permutation,
                 mutex: Optional[threading.RLock] = None):
        self.locked_agent = locked_agent
        self._permutation = permutation
        self.disclosed = False
        # shared with the owning tree
        self.mutex = mutex if mutex is not None else threading.RLock()

    @property
    def permutation(self) -> Permutation:
        if not self.disclosed:
            raise PermutationWithheld(f"lock on {self.locked_agent!r} has not been disclosed")
        return self._permutation

    def boss_permutation(self) -> Permutation:
        return self._permutation

    def __repr__(self) -> str:
        return f"ControlledState(locked_agent={self.locked_agent!r}, disclosed={self.disclosed})"


class Protocol(Enum):
    HSU = "Hsu"
    JIA = "Jia"
    LIAO = "Liao"
    PROPOSED = "Proposed"


@dataclass(frozen=True)
class EfficiencyReport:
    protocol: Protocol
    m: int
    eta1: Fraction
    c: int
    q: int
    eta2: Optional[Fraction] = None
    b: Optional[int] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'protocol': self.protocol.value,
            'm': self.m,
            'eta1': self.eta1,
            'eta2': self.eta2,
            'c': self.c,
            'q': self.q,
            'b': self.b,
        }


@dataclass
class AuditReport:
    """Result of the exhaustive collusion enumeration"""
    n_bits: int
    num_primaries: int
    assignments: int
    expected: Fraction
    fractions: Dict[Tuple[int, ...], Fraction] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(f == self.expected for f in self.fractions.values())

    def failing_subsets(self) -> List[Tuple[int, ...]]:
        return [s for s, f in self.fractions.items() if f != self.expected]
