from pathlib import Path

import pytest

from hdqss.config import SimulationConfig
from hdqss.errors import ParseError
from hdqss.models import BB84Protocol, Basis, EveModel, IdealOracle, Protocol
from hdqss.scenario import (
    DIRECTIVE_OPERATIONS,
    PARSERS,
    Broadcast,
    Disclose,
    EmitTable,
    Eta1,
    JoinPrimary,
    JoinSecondary,
    Recover,
    SetInclusion,
    parse_scenario,
    parse_subprotocol,
)


SCENARIOS = Path(__file__).parent / 'fixtures' / 'scenarios'


class TestParseScenario:
    def test_sample_script(self):
        """コメント・空行を無視し行番号を保持する"""
        text = (
            "# sample\n"
            "join_primary Bob oracle\n"
            "\n"
            "join_primary Charlie bb84 eve=random   # trailing comment\n"
            "join_secondary Bob Dave oracle key=1010\n"
            "set_inclusion Bob Dave off\n"
            "lock Bob\n"
            "disclose\n"
            "broadcast DEADbeef\n"
            "recover Bob Charlie\n"
            "recover_message\n"
            "emit_table 3 50\n"
        )
        scenario = parse_scenario(text)
        assert len(scenario) == 10
        assert scenario.line_numbers == [2, 4, 5, 6, 7, 8, 9, 10, 11, 12]
        assert scenario.events[0] == JoinPrimary('Bob', parse_subprotocol(['oracle'], 2))
        assert isinstance(scenario.events[2], JoinSecondary)
        assert scenario.events[3] == SetInclusion('Bob', 'Dave', False)
        assert scenario.events[5] == Disclose()
        assert scenario.events[6] == Broadcast('deadbeef')
        assert scenario.events[7] == Recover(('Bob', 'Charlie'))
        assert scenario.events[9] == EmitTable((3, 50))

    def test_render_round_trips(self):
        text = "join_secondary Bob Dave bb84 eve=fixed-x noise=0.01\n"
        event = parse_scenario(text).events[0]
        assert event.render() == text.strip()
        assert parse_scenario(event.render()).events[0] == event

    def test_unknown_directive_reports_line(self):
        with pytest.raises(ParseError) as excinfo:
            parse_scenario("join_primary Bob oracle\n\nfrobnicate Bob\n")
        assert excinfo.value.line == 3
        assert str(excinfo.value).startswith('line 3:')

    def test_directives_are_case_sensitive(self):
        with pytest.raises(ParseError):
            parse_scenario("JOIN_PRIMARY Bob oracle\n")

    @pytest.mark.parametrize('line', [
        'join_primary Bob',
        'join_primary Bob e91',
        'join_primary Bob oracle key=102',
        'join_primary Bob bb84 eve=sometimes',
        'join_primary Bob bb84 noise=1.5',
        'join_primary Bob bb84 rounds=0',
        'join_primary Bob oracle noise=0.1',
        'join_primary Bob bb84 noise',
        'revoke',
        'set_inclusion Bob Dave maybe',
        'broadcast xyz',
        'broadcast 0x1f',
        'broadcast 1_f',
        'broadcast +f',
        'recover Bob Bob',
        'collude',
        'eta1 Nobody 3',
        'eta1 Hsu three',
        'eta2',
        'audit_collusion 2',
        'disclose Bob Charlie',
        'measured_eta1 now',
        'emit_table',
    ])
    def test_malformed_lines(self, line):
        with pytest.raises(ParseError):
            parse_scenario(line)

    def test_empty_recover_is_allowed(self):
        assert parse_scenario("recover\n").events[0] == Recover(())

    def test_eta1_protocol(self):
        assert parse_scenario("eta1 Proposed 4").events[0] == Eta1(Protocol.PROPOSED, 4)

    def test_every_directive_maps_to_an_operation(self):
        assert set(PARSERS) == set(DIRECTIVE_OPERATIONS)

    def test_fixtures_parse(self):
        paths = sorted(SCENARIOS.glob('*.scn'))
        assert len(paths) >= 5
        for path in paths:
            assert len(parse_scenario(path.read_text(encoding='utf-8'))) > 0


class TestSubprotocolSpec:
    def test_bb84_defaults_follow_config(self):
        spec = parse_subprotocol(['bb84'], 1)
        kind = spec.build(SimulationConfig(key_bits=16, qber_threshold=0.05))
        assert isinstance(kind, BB84Protocol)
        assert kind.qber_threshold == 0.05
        assert kind.max_rounds == 64 * 16 + 1024
        assert kind.channel.eve is EveModel.NONE

    def test_bb84_options_override(self):
        spec = parse_subprotocol(['bb84', 'eve=fixed-z', 'noise=0.02', 'threshold=0.2', 'rounds=500'], 1)
        kind = spec.build(SimulationConfig())
        assert kind.channel.eve is EveModel.INTERCEPT_RESEND_FIXED
        assert kind.channel.eve_basis is Basis.Z
        assert kind.channel.flip_probability == 0.02
        assert kind.qber_threshold == 0.2
        assert kind.max_rounds == 500

    def test_oracle_fixed_key(self):
        kind = parse_subprotocol(['oracle', 'key=0110'], 1).build(SimulationConfig())
        assert isinstance(kind, IdealOracle)
        assert str(kind.fixed_key) == '0110'
