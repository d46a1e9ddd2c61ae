import json

import numpy as np
import pytest

from shg_spectral.potential import cosine_potential
from shg_spectral.utils.json_utils import (
    branch_points_from_dict, branch_points_to_dict, divisor_from_dict, divisor_to_dict, dumps_exact, format_float,
    load_config_file, monodromy_record, potential_from_dict, potential_to_dict, save_config_file)
from shg_spectral.utils.utility_classes import BranchPair, BranchPointSet, DivisorEntry, Matrix2C, SpectralDivisor


def test_format_float_is_exact():
    value = 0.1 + 0.2
    assert float(format_float(value)) == value

def test_dumps_exact_handles_numpy_and_nan():
    text = dumps_exact({'a': np.float64(1 / 3), 'b': float('nan'), 'c': [1, 2.5], 'd': np.int64(4)})
    data = json.loads(text)
    assert data['a'] == 1 / 3
    assert data['b'] is None
    assert data['c'] == [1, 2.5]
    assert data['d'] == 4

def test_potential_json_layout():
    p = cosine_potential(0.3)
    data = potential_to_dict(p)
    assert data['J'] == 1
    assert data['u'][0] == [-1, 0.15, 0.0]
    assert np.array_equal(potential_from_dict(data).u_hat, p.u_hat)

def test_malformed_potential():
    with pytest.raises(ValueError):
        potential_from_dict({'u': [[1, 'x']]})

def test_divisor_and_branch_points_json():
    D = SpectralDivisor((DivisorEntry(1, 150 + 1j, -1.0), DivisorEntry(0, -1.0, 1.0)), 1)
    back = divisor_from_dict(json.loads(dumps_exact(divisor_to_dict(D))))
    assert back.entry(1).lam == 150 + 1j
    assert [e.k for e in back] == [0, 1]
    B = BranchPointSet((BranchPair(0, -1.1, -0.9), BranchPair(1, 150.0, 150.0, True)), 1)
    assert branch_points_from_dict(branch_points_to_dict(B)).pair(1).double
    with pytest.raises(ValueError):
        divisor_from_dict({'entries': []})

def test_monodromy_record():
    record = monodromy_record(2j, Matrix2C(1, 2, 0, 1))
    assert record['lambda'] == [0.0, 2.0]
    assert record['M'][1] == [2.0, 0.0]
    assert record['det_err'] == 0.0

def test_config_file_round_trip(tmp_path):
    entry = DivisorEntry(2, 600 + 0.5j, -1.0 + 0j)
    matrix = Matrix2C(1 + 0j, 2j, 0j, 1 + 0j)
    path = tmp_path / 'saved.json'
    save_config_file(path, {'entry': entry, 'matrix': matrix, 'K': 4, 'out': tmp_path})
    data = load_config_file(path)
    assert data['entry'] == entry
    assert data['matrix'] == matrix
    assert data['K'] == 4
    assert data['out'] == str(tmp_path)

def test_missing_config_files(tmp_path):
    assert load_config_file('no_such_config_name') is None
    with pytest.raises(FileNotFoundError):
        load_config_file(tmp_path / 'missing.json')
