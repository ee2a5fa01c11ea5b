"""HDQSS - Hierarchical dynamic quantum secret sharing simulator"""

from .models import (
    Key,
    Basis,
    ChannelModel,
    EveModel,
    BB84Protocol,
    IdealOracle,
    SessionResult,
    Permutation,
    ControlledState,
    Protocol,
)
from .errors import HdqssError
from .subprotocol import establish_key
from .keytree import HierarchyTree
from .sharing import recover_master, broadcast_message, recover_message, lock_agent, disclose
from .analysis import eta1, eta2_proposed, comparison_table, audit_collusion
from .scenario import parse_scenario
from .harness import run_scenario
from .report import emit_report
from .storage import TranscriptStorage

__version__ = "0.1.0"

__all__ = [
    'Key',
    'Basis',
    'ChannelModel',
    'EveModel',
    'BB84Protocol',
    'IdealOracle',
    'SessionResult',
    'Permutation',
    'ControlledState',
    'Protocol',
    'HdqssError',
    'establish_key',
    'HierarchyTree',
    'recover_master',
    'broadcast_message',
    'recover_message',
    'lock_agent',
    'disclose',
    'eta1',
    'eta2_proposed',
    'comparison_table',
    'audit_collusion',
    'parse_scenario',
    'run_scenario',
    'emit_report',
    'TranscriptStorage',
]
