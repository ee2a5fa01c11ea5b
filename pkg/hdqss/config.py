"""Run configuration; built from CLI flags only so runs stay reproducible"""

from dataclasses import dataclass

from .errors import ConfigError
from .subprotocol import DEFAULT_QBER_THRESHOLD, DEFAULT_ROUND_FACTOR, default_round_cap


MAX_SEED = 2 ** 64
FORMATS = ('text', 'csv')


@dataclass(frozen=True)
class SimulationConfig:
    seed: int = 0
    key_bits: int = 128
    qber_threshold: float = DEFAULT_QBER_THRESHOLD
    max_rounds_factor: int = DEFAULT_ROUND_FACTOR
    output_format: str = 'text'

    def validate(self) -> 'SimulationConfig':
        if not 0 <= self.seed < MAX_SEED:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.key_bits < 1:
            raise ConfigError(f"key bits must be at least 1, got {self.key_bits}")
        if not 0.0 <= self.qber_threshold <= 1.0:
            raise ConfigError(f"qber threshold must be in [0, 1], got {self.qber_threshold}")
        if self.max_rounds_factor < 2:
            raise ConfigError(f"round factor must be at least 2, got {self.max_rounds_factor}")
        if self.output_format not in FORMATS:
            raise ConfigError(f"format must be one of {', '.join(FORMATS)}, got {self.output_format!r}")
        return self

    @property
    def max_rounds(self) -> int:
        return default_round_cap(self.key_bits, self.max_rounds_factor)
