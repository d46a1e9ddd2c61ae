import pytest

from shg_spectral.run_config import ENV_PREFIX, RunConfig, env_overrides, load_run_config


def test_defaults_are_valid():
    config = RunConfig()
    assert config.K >= config.K_align
    assert config['rtol'] == config.rtol
    assert config.get('missing', 3) == 3

def test_invalid_tolerance_is_rejected():
    with pytest.raises(ValueError):
        RunConfig(rtol=0.0)
    with pytest.raises(ValueError):
        RunConfig(threads=0)
    with pytest.raises(ValueError):
        RunConfig(det_tol=0.0)
    with pytest.raises(ValueError):
        RunConfig(det_refinements=-1)

def test_alignment_radius_is_clamped():
    assert RunConfig(K=3, K_align=6).K_align == 3

def test_environment_overrides():
    environ = {f'{ENV_PREFIX}THREADS': '4', f'{ENV_PREFIX}DETERMINISTIC': 'true', 'UNRELATED': 'x'}
    overrides = env_overrides(environ)
    assert overrides['threads'] == 4
    assert overrides['deterministic'] is True

def test_precedence_file_env_cli(tmp_path):
    file = tmp_path / 'config.json'
    file.write_text('{"threads": 2, "seed": 5, "not_a_field": 1}')
    config = load_run_config(file, environ={f'{ENV_PREFIX}THREADS': '3'}, threads=None, seed=9)
    assert config.threads == 3
    assert config.seed == 9

def test_updated_ignores_none():
    config = RunConfig().updated(K=12, seed=None)
    assert config.K == 12 and config.seed == 0
