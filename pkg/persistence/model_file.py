"""JSON model files for all three predictor families.

Layout:
    format_version   int
    kind             nn | linear_no_intercept | linear_with_intercept
    block            {N, n, m, q}
    K                number of modes
    arrays           {name: {shape, data}}, data row-major
    degenerate_rows  {mode: [rows]} (linear_no_intercept only)
    provenance       {seed, config_digest, coefficient_digest, created}

`created` is taken from SOURCE_DATE_EPOCH when set and is left out entirely
with timestamp=False, so two seeded runs can write identical files.
"""

import json
import logging
import math
import os
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Optional

from persistence.export import OutputBatch, atomic_write
from persistence.serializers import (coefficient_digest, config_digest, deserialize_array,
                                     sanitize, serialize_array)
from prediction.errors import ModelFileError
from prediction.types import (BlockSpec, MODEL_KINDS, NNModel, LinearNoIntercept,
                              LinearWithIntercept)

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1

_ARRAY_NAMES = {
    'nn': ('W1', 'b1', 'W2', 'b2', 'W3', 'b3', 'W4', 'b4'),
    'linear_no_intercept': ('A',),
    'linear_with_intercept': ('Gamma', 'beta'),
}


@dataclass
class Provenance:
    seed: Optional[int] = None
    config_digest: Optional[str] = None
    coefficient_digest: Optional[str] = None
    created: Optional[str] = None


def _created_stamp() -> str:
    epoch = os.environ.get('SOURCE_DATE_EPOCH')
    when = (datetime.fromtimestamp(int(epoch), tz=timezone.utc) if epoch
            else datetime.now(timezone.utc))
    return when.strftime('%Y-%m-%dT%H:%M:%SZ')


def model_document(model, seed: Optional[int] = None, config: Optional[dict] = None,
                   timestamp: bool = True) -> dict:
    arrays = model.arrays()
    provenance = {
        'seed': seed,
        'config_digest': config_digest(config) if config is not None else None,
        'coefficient_digest': coefficient_digest(arrays),
    }
    if timestamp:
        provenance['created'] = _created_stamp()
    doc = {
        'format_version': FORMAT_VERSION,
        'kind': model.kind,
        'block': model.spec.to_dict(),
        'K': model.K,
        'arrays': {name: serialize_array(a) for name, a in arrays.items()},
        'provenance': provenance,
    }
    if model.kind == 'linear_no_intercept':
        doc['degenerate_rows'] = {str(k): list(rows) for k, rows in sorted(model.degenerate_rows.items())}
    return doc


def save_model(model, path: str, seed: Optional[int] = None, config: Optional[dict] = None,
               timestamp: bool = True, batch: Optional[OutputBatch] = None):
    doc = model_document(model, seed=seed, config=config, timestamp=timestamp)
    with atomic_write(path, batch=batch) as f:
        json.dump(sanitize(doc), f, indent=1, sort_keys=True)
        f.write('\n')
    logger.info("Saved %s model (N=%d, K=%d) to %s", model.kind, model.spec.N, model.K, path)


def _require(doc: dict, key: str, path: str):
    if key not in doc:
        raise ModelFileError(f"{path}: missing '{key}'")
    return doc[key]


def _require_object(doc: dict, key: str, path: str) -> dict:
    value = _require(doc, key, path)
    if not isinstance(value, dict):
        raise ModelFileError(f"{path}: '{key}' must be an object, got {type(value).__name__}")
    return value


def _build(kind: str, spec: BlockSpec, arrays: dict, doc: dict):
    if kind == 'nn':
        return NNModel(spec, **arrays)
    if kind == 'linear_with_intercept':
        return LinearWithIntercept(spec, arrays['Gamma'], arrays['beta'])
    rows_by_mode = doc.get('degenerate_rows') or {}
    if not isinstance(rows_by_mode, dict):
        raise ValueError('degenerate_rows must be an object mapping modes to row lists')
    try:
        degenerate = {int(k): [int(r) for r in rows] for k, rows in rows_by_mode.items()}
    except TypeError as e:
        raise ValueError(f"bad degenerate_rows entry ({e})") from e
    return LinearNoIntercept(spec, arrays['A'], degenerate)


def _read_document(path: str) -> dict:
    try:
        with open(path, encoding='utf-8') as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise ModelFileError(f"{path}: not valid JSON ({e})") from e
    if not isinstance(doc, dict):
        raise ModelFileError(f"{path}: top level must be an object")
    return doc


def _provenance_section(doc: dict, path: str) -> dict:
    p = doc.get('provenance', {})
    if p is None:
        return {}
    if not isinstance(p, dict):
        raise ModelFileError(f"{path}: 'provenance' must be an object, got {type(p).__name__}")
    return p


def load_model(path: str, expected_kind: Optional[str] = None):
    """Read and validate a model file.

    Raises ModelFileError on anything malformed: bad JSON, unknown kind,
    inconsistent block geometry, shape/data mismatch, non-finite values,
    a coefficient digest that does not match, or a kind other than
    `expected_kind`.
    """
    doc = _read_document(path)
    version = _require(doc, 'format_version', path)
    if version != FORMAT_VERSION:
        raise ModelFileError(f"{path}: unsupported format_version {version} (expected {FORMAT_VERSION})")
    kind = _require(doc, 'kind', path)
    if kind not in MODEL_KINDS:
        raise ModelFileError(f"{path}: unknown model kind '{kind}' (must be one of {MODEL_KINDS})")
    if expected_kind is not None and kind != expected_kind:
        raise ModelFileError(f"{path}: expected a {expected_kind} model, found {kind}")

    block = _require_object(doc, 'block', path)
    try:
        spec = BlockSpec(int(block['N']))
    except (KeyError, TypeError, ValueError) as e:
        raise ModelFileError(f"{path}: bad block description {block!r} ({e})") from e
    if {k: block.get(k) for k in ('N', 'n', 'm', 'q')} != spec.to_dict():
        raise ModelFileError(f"{path}: block {block} inconsistent with N={spec.N} ({spec.to_dict()})")

    entries = _require_object(doc, 'arrays', path)
    arrays = {}
    for name in _ARRAY_NAMES[kind]:
        if name not in entries:
            raise ModelFileError(f"{path}: {kind} model is missing array '{name}'")
        try:
            arrays[name] = deserialize_array(entries[name])
        except (KeyError, TypeError, ValueError) as e:
            raise ModelFileError(f"{path}: array '{name}' is malformed ({e})") from e
        if not all(math.isfinite(v) for v in arrays[name].ravel()):
            raise ModelFileError(f"{path}: array '{name}' contains non-finite values")

    try:
        model = _build(kind, spec, arrays, doc)
    except ValueError as e:
        raise ModelFileError(f"{path}: {e}") from e
    if model.K != _require(doc, 'K', path):
        raise ModelFileError(f"{path}: K={doc['K']} but arrays hold {model.K} modes")

    stored = _provenance_section(doc, path).get('coefficient_digest')
    if stored is not None and stored != coefficient_digest(model.arrays()):
        raise ModelFileError(f"{path}: coefficient digest mismatch, file is corrupt")
    logger.debug("Loaded %s model (N=%d, K=%d) from %s", kind, spec.N, model.K, path)
    return model


def load_provenance(path: str) -> Provenance:
    """Provenance block of a model file; a missing or null block gives empty fields."""
    p = _provenance_section(_read_document(path), path)
    return Provenance(p.get('seed'), p.get('config_digest'), p.get('coefficient_digest'), p.get('created'))
