import json
import logging

import pytest

from shg_spectral.cli import EXIT_INPUT, EXIT_NUMERICAL, EXIT_OK, cmd_vacuum_table, main
from shg_spectral.utils.json_utils import divisor_to_dict
from shg_spectral.utils.utility_classes import DivisorEntry, SpectralDivisor


def test_vacuum_table_rows():
    rows = cmd_vacuum_table(2)
    assert [row[0] for row in rows] == [-2, -1, 0, 1, 2]
    k0 = rows[2]
    assert k0[1] == -1.0 and k0[3] is None
    assert rows[3][1] == pytest.approx(155.90, abs=0.01)
    assert rows[3][3] == pytest.approx(155.91, abs=0.01)

def test_vacuum_table_command(tmp_path):
    code = main(['--out', str(tmp_path), '--deterministic', 'vacuum-table', '--K', '3'])
    assert code == EXIT_OK
    lines = tmp_path.joinpath('vacuum-table', 'vacuum_table.csv').read_text().splitlines()
    assert lines[0] == 'k,lambda_k0,mu_k0,asymptote'
    assert len(lines) == 8
    assert lines[4].startswith('0,-1,1,')

def test_deterministic_output_is_byte_stable(tmp_path):
    main(['--out', str(tmp_path / 'a'), '--deterministic', 'vacuum-table', '--K', '4'])
    main(['--out', str(tmp_path / 'b'), '--deterministic', 'vacuum-table', '--K', '4'])
    first = tmp_path.joinpath('a', 'vacuum-table', 'vacuum_table.csv').read_bytes()
    second = tmp_path.joinpath('b', 'vacuum-table', 'vacuum_table.csv').read_bytes()
    assert first == second

def test_missing_input_file(tmp_path):
    code = main(['--out', str(tmp_path), '--deterministic', 'reconstruct', '--divisor', str(tmp_path / 'missing.json')])
    assert code == EXIT_INPUT

def test_malformed_config(tmp_path):
    bad = tmp_path / 'config.json'
    bad.write_text('{"rtol": -1}')
    assert main(['--config', str(bad), '--out', str(tmp_path), 'vacuum-table']) == EXIT_INPUT

def test_numerical_failure_writes_report(tmp_path):
    # Two entries at the same point: the reconstruction needs curve data it does not have
    D = SpectralDivisor((DivisorEntry(-1, 0.01, -1.0), DivisorEntry(0, -1.0, 1.0, 2)), 1)
    path = tmp_path / 'divisor.json'
    path.write_text(json.dumps(divisor_to_dict(D)))
    code = main(['--out', str(tmp_path), '--deterministic', 'reconstruct', '--divisor', str(path)])
    assert code == EXIT_NUMERICAL
    failure = json.loads(tmp_path.joinpath('reconstruct', 'failure.json').read_text())
    assert failure['error'] == 'NotTameError'
    assert failure['command'] == 'reconstruct'

def test_monodromy_command_on_vacuum(tmp_path):
    code = main(['--out', str(tmp_path), '--deterministic', 'monodromy', '--lambda', '1', '0', '--lambda', '-1', '0'])
    assert code == EXIT_OK
    records = json.loads(tmp_path.joinpath('monodromy', 'monodromy.json').read_text())
    assert len(records) == 2
    assert records[1]['M'][0][0] == pytest.approx(1.0, abs=1e-9)
    assert records[0]['det_err'] < 1e-9

def test_unknown_command_exits():
    with pytest.raises(SystemExit):
        main(['no-such-command'])

def test_effective_config_is_saved(tmp_path):
    main(['--out', str(tmp_path), '--deterministic', '--threads', '2', 'vacuum-table', '--K', '1'])
    saved = json.loads(tmp_path.joinpath('vacuum-table', 'run_config.json').read_text())
    assert saved['threads'] == 2
    assert saved['deterministic'] is True

def test_verbose_flag_only_raises_package_loggers(tmp_path):
    package = logging.getLogger('shg_spectral')
    try:
        assert main(['--out', str(tmp_path), '--deterministic', '-v', 'vacuum-table', '--K', '1']) == EXIT_OK
        assert package.level == logging.DEBUG
        assert logging.getLogger().level == logging.WARNING
        assert logging.getLogger('scipy').getEffectiveLevel() == logging.WARNING
    finally:
        package.setLevel(logging.NOTSET)

@pytest.mark.slow
def test_divisor_command_at_default_radius(tmp_path):
    assert main(['--out', str(tmp_path), '--deterministic', 'divisor']) == EXIT_OK
    data = json.loads(tmp_path.joinpath('divisor', 'divisor.json').read_text())
    assert data['K'] == 8
    assert len(data['entries']) == 17
