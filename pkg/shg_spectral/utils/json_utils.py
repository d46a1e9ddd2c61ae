from __future__ import annotations # Enable type annotation to be stored as string
import json
import logging
import math
from dataclasses import asdict
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np

from shg_spectral import CONFIG_DIR
from shg_spectral.utils.utility_classes import BranchPair, BranchPointSet, DivisorEntry, Matrix2C, SpectralDivisor

if TYPE_CHECKING:
    from shg_spectral.potential import PeriodicPotential

logger = logging.getLogger(__name__)


def _complex_pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]

def _pair_complex(pair: list[float] | tuple[float, float]) -> complex:
    if len(pair) != 2:
        raise ValueError(f"Complex numbers are stored as [re, im], got {pair}")
    return complex(float(pair[0]), float(pair[1]))

def encode_dataclass(obj: Any) -> Any:
    """Encode a dataclass object into a dictionary with the __class__ attribute to be able to decode it later.

    Complex numbers and numpy scalars/arrays are converted to [re, im] pairs and lists.
    If the object is naturally JSON serializable (e.g. dict, list, str, int, float, bool, or None),
    it is returned without modification.
    """

    if isinstance(obj, (dict, list, str, int, float, bool, type(None))):
        return obj
    if isinstance(obj, (complex, np.complexfloating)):
        return _complex_pair(complex(obj))
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [encode_dataclass(v) for v in obj.tolist()]
    if isinstance(obj, Path):
        return str(obj)
    if hasattr(obj, '__dataclass_fields__'):
        data = {k: encode_dataclass(v) for k, v in asdict(obj).items() if not k.startswith('_')}
        data["__class__"] = obj.__class__.__name__
        return data
    raise TypeError(f"Object of type {obj.__class__.__name__} is not JSON serializable")

# Custom decoder function
def decode_dataclass(data: dict) -> Matrix2C | DivisorEntry | BranchPair | dict:
    """Decode a dictionary into a dataclass object."""

    if "__class__" in data:
        cls_name = data.pop("__class__")

        if cls_name == "Matrix2C":
            return Matrix2C(*(_pair_complex(data[key]) for key in ('a', 'b', 'c', 'd')))
        elif cls_name == "DivisorEntry":
            return DivisorEntry(int(data['k']), _pair_complex(data['lam']), _pair_complex(data['mu']), int(data.get('mult', 1)))
        elif cls_name == "BranchPair":
            return BranchPair(int(data['k']), _pair_complex(data['kappa1']), _pair_complex(data['kappa2']), bool(data.get('double', False)))
    return data

def load_config_file(file: Path | str) -> dict[str, Any] | None:
    """
    Load a JSON configuration file.

    Args:
        file (Path | str): Path to the JSON file, or a name matched against the files of CONFIG_DIR.

    Returns:
        dict[str, Any] | None: The decoded content. Returns None if the file is not found.
    """
    if isinstance(file, Path):
        file_path = file
        if not file_path.exists():
            logger.error(f"Config file {file_path} does not exist.")
            raise FileNotFoundError(f"Config file {file_path} does not exist.")
    elif isinstance(file, str):
        found_file = None
        if CONFIG_DIR.is_dir():
            for f in sorted(CONFIG_DIR.iterdir()):
                if f.match(f"*{file}*.json"):
                    found_file = f
                    break
        if found_file is None:
            logger.warning(f"No file matching '{file}' found in {CONFIG_DIR}.")
            return None
        file_path = found_file
    else:
        raise TypeError("file must be a Path or str")

    with open(file_path) as f:
        data = json.load(f, object_hook=decode_dataclass)
    if data is not None and not isinstance(data, dict):
        raise ValueError(f"Config file {file_path} must contain a JSON object.")
    return data

def save_config_file(file_path: Path, data: dict[str, Any]) -> None:
    """
    Save a dictionary to a JSON file, encoding dataclass objects as needed.
    """
    with open(file_path, "w") as outfile:
        json.dump(data, outfile, default=encode_dataclass, indent=4)

def format_float(value: float) -> str:
    """17 significant digits, enough for an exact round trip of a double."""
    return format(value, '.17g')

def dumps_exact(obj: Any, indent: int = 2) -> str:
    """
    Serialize to JSON text with every float written with 17 significant digits.
    Dataclasses, complex numbers and numpy values go through encode_dataclass. Non-finite floats become null.
    """

    def _encode(value: Any, level: int) -> str:
        pad = ' ' * (indent * (level + 1))
        end_pad = ' ' * (indent * level)
        if isinstance(value, bool) or value is None:
            return json.dumps(value)
        if isinstance(value, (int, np.integer)):
            return str(int(value))
        if isinstance(value, (float, np.floating)):
            value = float(value)
            return format_float(value) if math.isfinite(value) else 'null'
        if isinstance(value, str):
            return json.dumps(value)
        if isinstance(value, dict):
            if not value:
                return '{}'
            items = [f'{pad}{json.dumps(str(k))}: {_encode(v, level + 1)}' for k, v in value.items()]
            return '{\n' + ',\n'.join(items) + f'\n{end_pad}}}'
        if isinstance(value, (list, tuple)):
            if not value:
                return '[]'
            if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in value):
                return '[' + ', '.join(_encode(v, level + 1) for v in value) + ']'
            items = [f'{pad}{_encode(v, level + 1)}' for v in value]
            return '[\n' + ',\n'.join(items) + f'\n{end_pad}]'
        return _encode(encode_dataclass(value), level)

    return _encode(obj, 0) + '\n'

def potential_to_dict(p: PeriodicPotential) -> dict[str, Any]:
    """Potential JSON: {"J": int, "u": [[j, re, im], ...], "uy": [[j, re, im], ...]}."""
    return {
        'J': p.J,
        'u': [[j, float(z.real), float(z.imag)] for j, z in sorted(p.coeff_u.items())],
        'uy': [[j, float(z.real), float(z.imag)] for j, z in sorted(p.coeff_uy.items())]}

def potential_from_dict(data: dict[str, Any]) -> PeriodicPotential:
    # Import here to avoid circular imports
    from shg_spectral.potential import make_potential

    try:
        coeff_u = {int(j): complex(re, im) for j, re, im in data.get('u', [])}
        coeff_uy = {int(j): complex(re, im) for j, re, im in data.get('uy', [])}
    except (TypeError, ValueError) as err:
        logger.error(f"Malformed potential JSON: {err}")
        raise ValueError(f"Malformed potential JSON, expected [[j, re, im], ...] lists: {err}") from err
    J = data.get('J')
    return make_potential(coeff_u, coeff_uy, J=int(J) if J is not None else None)

def divisor_to_dict(D: SpectralDivisor) -> dict[str, Any]:
    """Divisor JSON: {"K": int, "entries": [{"k", "lambda": [re, im], "mu": [re, im], "mult"}]}."""
    return {
        'K': D.K,
        'entries': [{'k': e.k, 'lambda': _complex_pair(e.lam), 'mu': _complex_pair(e.mu), 'mult': e.mult} for e in D.entries]}

def divisor_from_dict(data: dict[str, Any]) -> SpectralDivisor:
    try:
        entries = tuple(DivisorEntry(int(e['k']), _pair_complex(e['lambda']), _pair_complex(e['mu']), int(e.get('mult', 1))) for e in data['entries'])
        return SpectralDivisor(entries, int(data['K']))
    except (KeyError, TypeError) as err:
        logger.error(f"Malformed divisor JSON: {err}")
        raise ValueError(f"Malformed divisor JSON: {err}") from err

def branch_points_to_dict(B: BranchPointSet) -> dict[str, Any]:
    return {
        'K': B.K,
        'pairs': [{'k': p.k, 'kappa1': _complex_pair(p.kappa1), 'kappa2': _complex_pair(p.kappa2), 'double': p.double} for p in B.pairs]}

def branch_points_from_dict(data: dict[str, Any]) -> BranchPointSet:
    try:
        pairs = tuple(BranchPair(int(p['k']), _pair_complex(p['kappa1']), _pair_complex(p['kappa2']), bool(p.get('double', False))) for p in data['pairs'])
        return BranchPointSet(pairs, int(data['K']))
    except (KeyError, TypeError) as err:
        logger.error(f"Malformed branch-point JSON: {err}")
        raise ValueError(f"Malformed branch-point JSON: {err}") from err

def monodromy_record(lam: complex, M: Matrix2C) -> dict[str, Any]:
    """Monodromy record JSON: {"lambda": [re, im], "M": [[re, im] x 4], "det_err": float}."""
    return {
        'lambda': _complex_pair(lam),
        'M': [_complex_pair(M.a), _complex_pair(M.b), _complex_pair(M.c), _complex_pair(M.d)],
        'det_err': float(abs(M.det - 1))}

def read_json(path: Path) -> dict[str, Any]:
    with open(path) as f:
        return json.load(f)
