"""Serializers for converting model arrays and reports to JSON-safe dicts.

Model coefficients are numpy arrays, which aren't JSON-serializable. Floats
go through `float()` so `json` writes them with `repr` and they read back
bit-exact.
"""

import hashlib
import json

import numpy as np


def _arr(v) -> list:
    """Flatten a numpy array (row-major) to a plain Python list of floats."""
    return [float(x) for x in np.asarray(v, dtype=np.float64).ravel()]


def serialize_array(a) -> dict:
    a = np.asarray(a, dtype=np.float64)
    return {'shape': list(a.shape), 'data': _arr(a)}


def deserialize_array(entry: dict) -> np.ndarray:
    """Rebuild an array from {'shape', 'data'}; raises ValueError if they disagree."""
    shape = tuple(int(s) for s in entry['shape'])
    data = np.asarray(entry['data'], dtype=np.float64)
    if data.ndim != 1 or data.size != int(np.prod(shape)):
        raise ValueError(f"Array data has {data.size} values, shape {shape} needs {int(np.prod(shape))}")
    return data.reshape(shape)


def coefficient_digest(arrays: dict) -> str:
    """SHA-256 over the arrays' little-endian float64 bytes, in name order."""
    h = hashlib.sha256()
    for name in sorted(arrays):
        a = np.ascontiguousarray(arrays[name], dtype='<f8')
        h.update(name.encode('utf-8'))
        h.update(str(a.shape).encode('utf-8'))
        h.update(a.tobytes())
    return h.hexdigest()


def config_digest(config: dict) -> str:
    text = json.dumps(sanitize(config), sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(text.encode('utf-8')).hexdigest()


def sanitize(obj):
    """Recursively convert numpy types to plain Python types for JSON."""
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, dict):
        return {str(k): sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize(x) for x in obj]
    return obj
