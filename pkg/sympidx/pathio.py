"""Canonical JSON documents for matrices, paths, loops, holonomies and reports.

Every document carries `schema_version` and `kind`. Serialization sorts keys, uses no whitespace and
writes floats in shortest round-trip form, so equal objects produce identical bytes.
"""

import hashlib
import json

import numpy as np

from sympidx.config import get_float
from sympidx.errors import DocumentError, InputError
from sympidx.indices import IndexReport, SymplecticPath
from sympidx.maslov import CoisotropicLoop, HolonomyPath
from sympidx.sympcore import Subspace, SymplecticMatrix, validate_symplectic

SCHEMA_VERSION = '1'


def canonical_dumps(doc: dict) -> bytes:
    try:
        text = json.dumps(doc, sort_keys=True, separators=(',', ':'), ensure_ascii=False, allow_nan=False)
    except ValueError as exc:
        raise DocumentError(f"document contains a non-finite number: {exc}") from None
    return text.encode('utf-8')


def content_hash(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _envelope(kind: str, **body) -> dict:
    return {'schema_version': SCHEMA_VERSION, 'kind': kind, **body}


def _load(data: bytes | str, kind: str) -> dict:
    try:
        doc = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise DocumentError(f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise DocumentError("document must be a JSON object")
    version = doc.get('schema_version')
    if version != SCHEMA_VERSION:
        raise DocumentError(f"unsupported schema_version {version!r}, expected {SCHEMA_VERSION!r}")
    if doc.get('kind') != kind:
        raise DocumentError(f"expected a '{kind}' document, got kind {doc.get('kind')!r}")
    return doc


def _field(doc: dict, name: str, types):
    if name not in doc:
        raise DocumentError(f"missing field '{name}'")
    value = doc[name]
    if isinstance(value, bool) or not isinstance(value, types):
        raise DocumentError(f"field '{name}' has the wrong type")
    return value


def _array(value, name: str, shape: tuple) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise DocumentError(f"field '{name}' is not a numeric array") from None
    if arr.size == 0 and 0 in shape:
        return arr.reshape(shape)
    if arr.shape != shape:
        raise DocumentError(f"field '{name}' has shape {arr.shape}, expected {shape}")
    if not np.all(np.isfinite(arr)):
        raise DocumentError(f"field '{name}' contains non-finite entries")
    return arr


def _half_dim(doc: dict) -> int:
    n = _field(doc, 'half_dim', int)
    if n < 1:
        raise DocumentError(f"half_dim must be at least 1, got {n}")
    return n


def _times(doc: dict) -> np.ndarray:
    times = _array(_field(doc, 'times', list), 'times', (len(doc['times']),))
    for i in range(1, times.size):
        if times[i] <= times[i - 1]:
            raise DocumentError(f"times not strictly increasing at index {i}")
    return times


# --- Matrix ---

def write_matrix(matrix: SymplecticMatrix) -> bytes:
    return canonical_dumps(_envelope('matrix', half_dim=matrix.half_dim, entries=matrix.entries.tolist()))


def read_matrix(data: bytes | str) -> SymplecticMatrix:
    doc = _load(data, 'matrix')
    n = _half_dim(doc)
    entries = _array(_field(doc, 'entries', list), 'entries', (2 * n, 2 * n))
    try:
        return validate_symplectic(entries, get_float('load_tol'))
    except InputError as exc:
        raise DocumentError(str(exc)) from exc


# --- Path ---

def write_path(path: SymplecticPath) -> bytes:
    return canonical_dumps(_envelope(
        'path', half_dim=path.half_dim, times=path.times.tolist(),
        frames=path.frames.tolist(), metadata=path.metadata))


def read_path(data: bytes | str) -> SymplecticPath:
    doc = _load(data, 'path')
    n = _half_dim(doc)
    times = _times(doc)
    frames = _array(_field(doc, 'frames', list), 'frames', (times.size, 2 * n, 2 * n))
    metadata = doc.get('metadata', {})
    if not isinstance(metadata, dict):
        raise DocumentError("field 'metadata' must be an object")
    try:
        return SymplecticPath.from_frames(times, frames, metadata=metadata, tol=get_float('load_tol'))
    except InputError as exc:
        raise DocumentError(str(exc)) from exc


# --- Loop ---

def write_loop(loop: CoisotropicLoop) -> bytes:
    return canonical_dumps(_envelope(
        'loop', half_dim=loop.half_dim, codim=loop.codim, times=loop.times.tolist(),
        subspaces=[s.basis.tolist() for s in loop.subspaces], oriented=loop.oriented,
        metadata=loop.metadata))


def read_loop(data: bytes | str) -> CoisotropicLoop:
    doc = _load(data, 'loop')
    n = _half_dim(doc)
    codim = _field(doc, 'codim', int)
    if not 0 <= codim <= n:
        raise DocumentError(f"codim must lie in 0..{n}, got {codim}")
    times = _times(doc)
    bases = _field(doc, 'subspaces', list)
    if len(bases) != times.size:
        raise DocumentError(f"{len(bases)} subspaces for {times.size} sample times")
    oriented = doc.get('oriented')
    if oriented is not None and not isinstance(oriented, bool):
        raise DocumentError("field 'oriented' must be a boolean")
    try:
        subspaces = [Subspace.from_basis(_array(b, f'subspaces[{i}]', (2 * n, 2 * n - codim)))
                     for i, b in enumerate(bases)]
        return CoisotropicLoop.from_subspaces(times, subspaces, oriented=oriented,
                                              metadata=doc.get('metadata') or {})
    except InputError as exc:
        raise DocumentError(str(exc)) from exc


# --- Holonomy ---

def write_holonomy(holonomy: HolonomyPath) -> bytes:
    return canonical_dumps(_envelope(
        'holonomy', quotient_dim=holonomy.quotient_dim, times=holonomy.times.tolist(),
        maps=holonomy.maps.tolist(), metadata=holonomy.metadata))


def read_holonomy(data: bytes | str) -> HolonomyPath:
    doc = _load(data, 'holonomy')
    dim = _field(doc, 'quotient_dim', int)
    if dim < 0 or dim % 2:
        raise DocumentError(f"quotient_dim must be a non-negative even integer, got {dim}")
    times = _times(doc)
    maps = _array(_field(doc, 'maps', list), 'maps', (times.size, dim, dim))
    try:
        return HolonomyPath.from_maps(times, maps, metadata=doc.get('metadata') or {},
                                      tol=get_float('load_tol'))
    except InputError as exc:
        raise DocumentError(str(exc)) from exc


# --- Report ---

def write_report(report: IndexReport, **extra) -> bytes:
    return canonical_dumps(_envelope('report', **report.to_dict(), **extra))


def read_report(data: bytes | str) -> IndexReport:
    doc = _load(data, 'report')
    return IndexReport(
        value=_field(doc, 'value', (int, float)),
        max_phase_step=float(_field(doc, 'max_phase_step', (int, float))),
        refinement_depth=_field(doc, 'refinement_depth', int),
        oracle_residual=doc.get('oracle_residual'),
    )
