import io
import tempfile
from pathlib import Path

import pytest

from hdqss.cli import main


SCENARIOS = Path(__file__).parent / 'fixtures' / 'scenarios'
FIXTURES = Path(__file__).parent / 'fixtures'


class TestRunCommand:
    def test_run_fixture(self, capsys):
        main(['run', '--scenario', str(SCENARIOS / 'recover_message.scn'), '--seed', '1'])
        out = capsys.readouterr().out
        assert out.startswith('# seed=1 key_bits=128 qber_threshold=0.11')
        assert 'matches_commitment=true' in out

    @pytest.mark.parametrize('fmt, suffix', [('text', 'txt'), ('csv', 'csv')])
    def test_golden_transcript(self, fmt, suffix, capsys):
        main(['run', '--scenario', str(FIXTURES / 'golden' / 'hierarchy4.scn'),
              '--seed', '7', '--key-bits', '4', '--format', fmt])
        expected = (FIXTURES / 'golden' / f'hierarchy4.{suffix}').read_text(encoding='utf-8')
        assert capsys.readouterr().out == expected

    def test_eve_abort_exits_zero(self, capsys):
        """盗聴による中断は正常終了（exit 0）"""
        main(['run', '--scenario', str(SCENARIOS / 'eve_abort.scn'), '--seed', '9', '--format', 'csv'])
        assert 'aborted:QberExceeded' in capsys.readouterr().out

    def test_reads_standard_input(self, capsys, monkeypatch):
        monkeypatch.setattr('sys.stdin', io.StringIO("eta2 3\n"))
        main(['run', '--key-bits', '16'])
        out = capsys.readouterr().out
        assert 'key_bits=16' in out
        assert 'eta2=1/5' in out

    def test_parse_error_exits_one(self, capsys, monkeypatch):
        monkeypatch.setattr('sys.stdin', io.StringIO("join_primary Bob oracle\nfly Bob\n"))
        with pytest.raises(SystemExit) as excinfo:
            main(['run'])
        assert excinfo.value.code == 1
        assert 'line 2' in capsys.readouterr().err

    def test_config_error_exits_one(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(['run', '--scenario', str(SCENARIOS / 'lock.scn'), '--seed', '-5'])
        assert excinfo.value.code == 1

    def test_missing_scenario_file(self):
        with pytest.raises(SystemExit) as excinfo:
            main(['run', '--scenario', '/nonexistent/path.scn'])
        assert excinfo.value.code == 1

    def test_unexpected_error_exits_one(self, mocker):
        mocker.patch('hdqss.harness.sharing.recover_master', side_effect=RuntimeError('boom'))
        with pytest.raises(SystemExit) as excinfo:
            main(['run', '--scenario', str(SCENARIOS / 'recover_message.scn')])
        assert excinfo.value.code == 1

    def test_out_writes_file(self, capsys):
        with tempfile.TemporaryDirectory() as tmpdir:
            out_path = Path(tmpdir) / 'transcript.csv'
            main(['run', '--scenario', str(SCENARIOS / 'hierarchy.scn'), '--format', 'csv', '--out', str(out_path)])
            assert out_path.read_text(encoding='utf-8') == capsys.readouterr().out


class TestOtherCommands:
    def test_table_csv(self, capsys):
        main(['table', '--format', 'csv'])
        assert capsys.readouterr().out == (FIXTURES / 'comparison_table.csv').read_text(encoding='utf-8')

    def test_table_out_dir(self, capsys):
        with tempfile.TemporaryDirectory() as tmpdir:
            main(['table', '--m', '4', '--out', tmpdir])
            assert (Path(tmpdir) / 'comparison_table.csv').exists()
            assert 'Generated:' in capsys.readouterr().out

    def test_audit_passes(self, capsys):
        main(['audit', '--bits', '2', '--primaries', '3', '--lock-bits', '3'])
        out = capsys.readouterr().out
        assert out.count('Result: PASS') == 2

    def test_audit_bounds(self):
        with pytest.raises(SystemExit):
            main(['audit', '--bits', '9'])

    def test_decay(self, capsys):
        main(['decay', '--check-bits', '8', '--check-bits', '16', '--trials', '200', '--seed', '1'])
        lines = capsys.readouterr().out.splitlines()
        assert len(lines) == 3
        assert lines[1].split()[0] == '8'

    def test_table_repeated_m(self, capsys):
        main(['table', '--m', '3', '--m', '3', '--m', '50'])
        out = capsys.readouterr().out
        assert out.count('eta1 (3-party)') == 1
        assert 'eta1 (50-party)' in out

    def test_table_bad_m_exits_one(self, capsys):
        """不正なパーティ数はトレースバックではなくエラー終了"""
        with pytest.raises(SystemExit) as excinfo:
            main(['table', '--m', '1'])
        assert excinfo.value.code == 1
        assert capsys.readouterr().err.startswith('Error:')

    @pytest.mark.parametrize('argv', [
        ['decay', '--check-bits', '8', '--trials', '0'],
        ['decay', '--check-bits', '0', '--trials', '10'],
        ['decay', '--check-bits', '8', '--trials', '10', '--seed', '-1'],
        ['decay', '--check-bits', '8', '--trials', '10', '--qber-threshold', '1.5'],
    ])
    def test_decay_bad_arguments_exit_one(self, argv, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(argv)
        assert excinfo.value.code == 1
        assert capsys.readouterr().err.startswith('Error:')

    def test_no_command_prints_help(self):
        with pytest.raises(SystemExit) as excinfo:
            main([])
        assert excinfo.value.code == 1
