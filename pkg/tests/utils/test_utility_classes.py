import numpy as np
import pytest

from shg_spectral.monodromy import lambda_k0
from shg_spectral.utils.utility_classes import BranchPair, BranchPointSet, DivisorEntry, Matrix2C, SpectralDivisor
from shg_spectral.utils.utils import create_date_savedir, ordered_map, relative_error


def test_matrix_algebra():
    M = Matrix2C(2, 1, 1, 1)
    assert M.det == 1
    assert M.trace == 3
    assert np.allclose((M @ M.inverse()).as_array(), np.eye(2))
    assert M['b'] == 1

def test_divisor_entry_validation():
    with pytest.raises(ValueError):
        DivisorEntry(0, 0.0, 1.0)
    with pytest.raises(ValueError):
        DivisorEntry(0, 1.0, 0.0)

def test_divisor_vacuum_tail():
    D = SpectralDivisor((DivisorEntry(1, 150.0, -1.0), DivisorEntry(-1, 0.01, -1.0)), 1)
    assert [e.k for e in D] == [-1, 1]
    assert D.entry(3).lam == pytest.approx(lambda_k0(3))
    assert D.entry(3).mu == -1
    with pytest.raises(KeyError):
        D.entry(0)
    assert len(D.restrict([1])) == 1

def test_branch_pair_lookup():
    B = BranchPointSet((BranchPair(1, 150.0, 152.0), BranchPair(-1, 0.01, 0.02)), 1)
    assert list(B.labels) == [-1, 1]
    assert B.pair(1).width == pytest.approx(2.0)
    with pytest.raises(KeyError):
        B.pair(2)

def test_ordered_map_keeps_order():
    assert ordered_map(lambda x: x * x, range(10), threads=3) == [x * x for x in range(10)]

def test_undated_savedir(tmp_path):
    path = create_date_savedir(tmp_path, 'run', dated=False)
    assert path == tmp_path / 'run' and path.is_dir()

def test_relative_error():
    assert relative_error([2.0], [1.0])[0] == pytest.approx(1.0)
