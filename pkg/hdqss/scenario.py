"""Line-oriented scenario scripts

One event per line: `<directive> <args...>`. Blank lines and `#` comments are
ignored; directives are case-sensitive. See README for the full grammar.
"""

from dataclasses import dataclass, field
from typing import Callable, ClassVar, Dict, List, Optional, Tuple, Union

from .config import SimulationConfig
from .errors import ParseError
from .models import (
    BB84Protocol,
    Basis,
    ChannelModel,
    EveModel,
    HEX_DIGITS,
    IdealOracle,
    Key,
    Protocol,
    SubprotocolKind,
)


EVE_CHOICES = {
    'none': (EveModel.NONE, None),
    'random': (EveModel.INTERCEPT_RESEND_RANDOM, None),
    'fixed-z': (EveModel.INTERCEPT_RESEND_FIXED, Basis.Z),
    'fixed-x': (EveModel.INTERCEPT_RESEND_FIXED, Basis.X),
}

SUBPROTOCOL_OPTIONS = {
    'oracle': {'key'},
    'bb84': {'eve', 'noise', 'threshold', 'rounds'},
}


@dataclass(frozen=True)
class SubprotocolSpec:
    """A sub-protocol as written in a script; resolved against the run config"""
    name: str
    options: Tuple[Tuple[str, str], ...] = ()

    def option(self, key: str) -> Optional[str]:
        return dict(self.options).get(key)

    def build(self, config: SimulationConfig) -> SubprotocolKind:
        if self.name == 'oracle':
            fixed = self.option('key')
            return IdealOracle(fixed_key=Key.from_bits(fixed) if fixed else None)

        eve, eve_basis = EVE_CHOICES[self.option('eve') or 'none']
        noise = float(self.option('noise') or 0.0)
        threshold = self.option('threshold')
        rounds = self.option('rounds')
        return BB84Protocol(
            channel=ChannelModel(eve=eve, flip_probability=noise, eve_basis=eve_basis),
            qber_threshold=float(threshold) if threshold is not None else config.qber_threshold,
            max_rounds=int(rounds) if rounds is not None else config.max_rounds,
        )

    def render(self) -> str:
        return ' '.join([self.name] + [f"{k}={v}" for k, v in self.options])


@dataclass(frozen=True)
class JoinPrimary:
    directive: ClassVar[str] = 'join_primary'
    agent: str
    subprotocol: SubprotocolSpec

    def render(self) -> str:
        return f"{self.directive} {self.agent} {self.subprotocol.render()}"


@dataclass(frozen=True)
class JoinSecondary:
    directive: ClassVar[str] = 'join_secondary'
    boss: str
    agent: str
    subprotocol: SubprotocolSpec

    def render(self) -> str:
        return f"{self.directive} {self.boss} {self.agent} {self.subprotocol.render()}"


@dataclass(frozen=True)
class Revoke:
    directive: ClassVar[str] = 'revoke'
    agent: str

    def render(self) -> str:
        return f"{self.directive} {self.agent}"


@dataclass(frozen=True)
class Promote:
    directive: ClassVar[str] = 'promote'
    agent: str
    new_boss: str
    subprotocol: SubprotocolSpec

    def render(self) -> str:
        return f"{self.directive} {self.agent} {self.new_boss} {self.subprotocol.render()}"


@dataclass(frozen=True)
class SetInclusion:
    directive: ClassVar[str] = 'set_inclusion'
    boss: str
    child: str
    included: bool

    def render(self) -> str:
        return f"{self.directive} {self.boss} {self.child} {'on' if self.included else 'off'}"


@dataclass(frozen=True)
class Residual:
    directive: ClassVar[str] = 'residual'
    agent: str

    def render(self) -> str:
        return f"{self.directive} {self.agent}"


@dataclass(frozen=True)
class Lock:
    directive: ClassVar[str] = 'lock'
    agent: str

    def render(self) -> str:
        return f"{self.directive} {self.agent}"


@dataclass(frozen=True)
class Disclose:
    directive: ClassVar[str] = 'disclose'
    agent: Optional[str] = None

    def render(self) -> str:
        return f"{self.directive} {self.agent}" if self.agent else self.directive


@dataclass(frozen=True)
class Broadcast:
    directive: ClassVar[str] = 'broadcast'
    message_hex: str

    def render(self) -> str:
        return f"{self.directive} {self.message_hex}"


@dataclass(frozen=True)
class Recover:
    directive: ClassVar[str] = 'recover'
    participants: Tuple[str, ...]

    def render(self) -> str:
        return ' '.join((self.directive,) + self.participants)


@dataclass(frozen=True)
class RecoverMessage:
    directive: ClassVar[str] = 'recover_message'

    def render(self) -> str:
        return self.directive


@dataclass(frozen=True)
class Collude:
    directive: ClassVar[str] = 'collude'
    agents: Tuple[str, ...]

    def render(self) -> str:
        return ' '.join((self.directive,) + self.agents)


@dataclass(frozen=True)
class AuditCollusion:
    directive: ClassVar[str] = 'audit_collusion'
    n_bits: int
    primaries: int

    def render(self) -> str:
        return f"{self.directive} {self.n_bits} {self.primaries}"


@dataclass(frozen=True)
class AuditLock:
    directive: ClassVar[str] = 'audit_lock'
    n_bits: int

    def render(self) -> str:
        return f"{self.directive} {self.n_bits}"


@dataclass(frozen=True)
class Eta1:
    directive: ClassVar[str] = 'eta1'
    protocol: Protocol
    m: int

    def render(self) -> str:
        return f"{self.directive} {self.protocol.value} {self.m}"


@dataclass(frozen=True)
class Eta2:
    directive: ClassVar[str] = 'eta2'
    m: int

    def render(self) -> str:
        return f"{self.directive} {self.m}"


@dataclass(frozen=True)
class MeasuredEta1:
    directive: ClassVar[str] = 'measured_eta1'

    def render(self) -> str:
        return self.directive


@dataclass(frozen=True)
class EmitTable:
    directive: ClassVar[str] = 'emit_table'
    m_values: Tuple[int, ...]

    def render(self) -> str:
        return ' '.join([self.directive] + [str(m) for m in self.m_values])


ScenarioEvent = Union[
    JoinPrimary, JoinSecondary, Revoke, Promote, SetInclusion, Residual, Lock, Disclose,
    Broadcast, Recover, RecoverMessage, Collude, AuditCollusion, AuditLock, Eta1, Eta2,
    MeasuredEta1, EmitTable,
]


@dataclass
class Scenario:
    events: List[ScenarioEvent] = field(default_factory=list)
    line_numbers: List[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.events)


# -- parsing -----------------------------------------------------------------

def _expect(args: List[str], line: int, directive: str, count: int) -> None:
    if len(args) != count:
        raise ParseError(line, f"{directive} takes {count} argument(s), got {len(args)}")


def _int(token: str, line: int, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise ParseError(line, f"{what} must be an integer, got {token!r}") from None


def _probability(token: str, line: int, what: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(line, f"{what} must be a number, got {token!r}") from None
    if not 0.0 <= value <= 1.0:
        raise ParseError(line, f"{what} must be in [0, 1], got {token}")
    return value


def parse_subprotocol(tokens: List[str], line: int) -> SubprotocolSpec:
    if not tokens:
        raise ParseError(line, "missing sub-protocol (oracle or bb84)")
    name, raw_options = tokens[0], tokens[1:]
    if name not in SUBPROTOCOL_OPTIONS:
        raise ParseError(line, f"unknown sub-protocol {name!r}")

    options = []
    for token in raw_options:
        key, sep, value = token.partition('=')
        if not sep or not value:
            raise ParseError(line, f"sub-protocol option must look like key=value, got {token!r}")
        if key not in SUBPROTOCOL_OPTIONS[name]:
            raise ParseError(line, f"{name} does not take option {key!r}")
        if key == 'key' and set(value) - {'0', '1'}:
            raise ParseError(line, f"oracle key must be binary, got {value!r}")
        if key == 'eve' and value not in EVE_CHOICES:
            raise ParseError(line, f"eve must be one of {', '.join(EVE_CHOICES)}, got {value!r}")
        if key in ('noise', 'threshold'):
            _probability(value, line, key)
        if key == 'rounds' and _int(value, line, key) < 1:
            raise ParseError(line, f"rounds must be positive, got {value}")
        options.append((key, value))
    return SubprotocolSpec(name=name, options=tuple(options))


def _parse_join_primary(args: List[str], line: int) -> ScenarioEvent:
    if len(args) < 2:
        raise ParseError(line, "join_primary needs <agent> <subprotocol>")
    return JoinPrimary(agent=args[0], subprotocol=parse_subprotocol(args[1:], line))


def _parse_join_secondary(args: List[str], line: int) -> ScenarioEvent:
    if len(args) < 3:
        raise ParseError(line, "join_secondary needs <boss> <agent> <subprotocol>")
    return JoinSecondary(boss=args[0], agent=args[1], subprotocol=parse_subprotocol(args[2:], line))


def _parse_promote(args: List[str], line: int) -> ScenarioEvent:
    if len(args) < 3:
        raise ParseError(line, "promote needs <agent> <new_boss> <subprotocol>")
    return Promote(agent=args[0], new_boss=args[1], subprotocol=parse_subprotocol(args[2:], line))


def _parse_set_inclusion(args: List[str], line: int) -> ScenarioEvent:
    _expect(args, line, 'set_inclusion', 3)
    flags = {'on': True, 'true': True, 'off': False, 'false': False}
    if args[2] not in flags:
        raise ParseError(line, f"inclusion flag must be on/off, got {args[2]!r}")
    return SetInclusion(boss=args[0], child=args[1], included=flags[args[2]])


def _parse_disclose(args: List[str], line: int) -> ScenarioEvent:
    if len(args) > 1:
        raise ParseError(line, "disclose takes at most one agent")
    return Disclose(agent=args[0] if args else None)


def _parse_broadcast(args: List[str], line: int) -> ScenarioEvent:
    _expect(args, line, 'broadcast', 1)
    if not HEX_DIGITS.fullmatch(args[0]):
        raise ParseError(line, f"message must be hex digits, got {args[0]!r}")
    return Broadcast(message_hex=args[0].lower())


def _parse_recover(args: List[str], line: int) -> ScenarioEvent:
    if len(set(args)) != len(args):
        raise ParseError(line, "recover lists an agent twice")
    return Recover(participants=tuple(args))


def _parse_collude(args: List[str], line: int) -> ScenarioEvent:
    if not args:
        raise ParseError(line, "collude needs at least one agent")
    return Collude(agents=tuple(args))


def _parse_eta1(args: List[str], line: int) -> ScenarioEvent:
    _expect(args, line, 'eta1', 2)
    try:
        protocol = Protocol(args[0])
    except ValueError:
        names = ', '.join(p.value for p in Protocol)
        raise ParseError(line, f"protocol must be one of {names}, got {args[0]!r}") from None
    return Eta1(protocol=protocol, m=_int(args[1], line, 'm'))


def _parse_eta2(args: List[str], line: int) -> ScenarioEvent:
    _expect(args, line, 'eta2', 1)
    return Eta2(m=_int(args[0], line, 'm'))


def _parse_audit_collusion(args: List[str], line: int) -> ScenarioEvent:
    _expect(args, line, 'audit_collusion', 2)
    return AuditCollusion(n_bits=_int(args[0], line, 'n_bits'), primaries=_int(args[1], line, 'primaries'))


def _parse_audit_lock(args: List[str], line: int) -> ScenarioEvent:
    _expect(args, line, 'audit_lock', 1)
    return AuditLock(n_bits=_int(args[0], line, 'n_bits'))


def _parse_emit_table(args: List[str], line: int) -> ScenarioEvent:
    if not args:
        raise ParseError(line, "emit_table needs at least one m")
    return EmitTable(m_values=tuple(_int(a, line, 'm') for a in args))


def _single(cls, directive: str) -> Callable[[List[str], int], ScenarioEvent]:
    def parse(args: List[str], line: int) -> ScenarioEvent:
        _expect(args, line, directive, 1)
        return cls(args[0])
    return parse


def _nullary(cls, directive: str) -> Callable[[List[str], int], ScenarioEvent]:
    def parse(args: List[str], line: int) -> ScenarioEvent:
        _expect(args, line, directive, 0)
        return cls()
    return parse


PARSERS: Dict[str, Callable[[List[str], int], ScenarioEvent]] = {
    'join_primary': _parse_join_primary,
    'join_secondary': _parse_join_secondary,
    'revoke': _single(Revoke, 'revoke'),
    'promote': _parse_promote,
    'set_inclusion': _parse_set_inclusion,
    'residual': _single(Residual, 'residual'),
    'lock': _single(Lock, 'lock'),
    'disclose': _parse_disclose,
    'broadcast': _parse_broadcast,
    'recover': _parse_recover,
    'recover_message': _nullary(RecoverMessage, 'recover_message'),
    'collude': _parse_collude,
    'audit_collusion': _parse_audit_collusion,
    'audit_lock': _parse_audit_lock,
    'eta1': _parse_eta1,
    'eta2': _parse_eta2,
    'measured_eta1': _nullary(MeasuredEta1, 'measured_eta1'),
    'emit_table': _parse_emit_table,
}

# Which library operation each directive drives
DIRECTIVE_OPERATIONS = {
    'join_primary': 'keytree.HierarchyTree.join_primary',
    'join_secondary': 'keytree.HierarchyTree.join_secondary',
    'revoke': 'keytree.HierarchyTree.revoke',
    'promote': 'keytree.HierarchyTree.promote',
    'set_inclusion': 'keytree.HierarchyTree.set_inclusion',
    'residual': 'keytree.HierarchyTree.residual_key',
    'lock': 'sharing.lock_agent',
    'disclose': 'sharing.disclose',
    'broadcast': 'sharing.broadcast_message',
    'recover': 'sharing.recover_master',
    'recover_message': 'sharing.recover_message',
    'collude': 'sharing.collusion_xor',
    'audit_collusion': 'analysis.audit_collusion',
    'audit_lock': 'analysis.audit_permutation_lock',
    'eta1': 'analysis.eta1',
    'eta2': 'analysis.eta2_proposed',
    'measured_eta1': 'analysis.measured_eta1',
    'emit_table': 'analysis.comparison_table',
}


def parse_scenario(text: str) -> Scenario:
    scenario = Scenario()
    for number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split('#', 1)[0].strip()
        if not content:
            continue
        directive, *args = content.split()
        parser = PARSERS.get(directive)
        if parser is None:
            raise ParseError(number, f"unknown directive {directive!r}")
        scenario.events.append(parser(args, number))
        scenario.line_numbers.append(number)
    return scenario
