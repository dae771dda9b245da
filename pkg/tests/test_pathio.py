"""Tests for the canonical JSON documents."""

import sys
import os
import json

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

import numpy as np
import pytest

from sympidx.errors import DocumentError
from sympidx.flows import EllipsoidSpec, ellipsoid_path
from sympidx.indices import IndexReport, SymplecticPath, mean_index
from sympidx.maslov import HolonomyPath, constant_loop, model_coisotropic
from sympidx.pathio import (
    canonical_dumps, content_hash, read_holonomy, read_loop, read_matrix, read_path, read_report,
    write_holonomy, write_loop, write_matrix, write_path, write_report,
)
from sympidx.sampling import random_symplectic, rng_for, rotation_block
from sympidx.sympcore import Subspace, validate_symplectic


def _path_doc(times, frames, **extra) -> bytes:
    doc = {'schema_version': '1', 'kind': 'path', 'half_dim': 1, 'times': times, 'frames': frames}
    doc.update(extra)
    return json.dumps(doc).encode()


def test_identity_path_document():
    doc = _path_doc([0.0, 1.0], [[[1, 0], [0, 1]], [[1, 0], [0, 1]]])
    path = read_path(doc)
    assert np.array_equal(path.frames, np.array([np.eye(2), np.eye(2)]))
    assert mean_index(path).value == 0.0


def test_path_rewrite_is_byte_identical():
    path = ellipsoid_path(EllipsoidSpec(lambdas=(1.0, 2.0, 3.0), orbit_index=1), 512)
    first = write_path(path)
    reloaded = read_path(first)
    assert write_path(reloaded) == first
    assert mean_index(reloaded).value == pytest.approx(-12.0, abs=1e-6)


def test_path_document_errors():
    identity = [[1, 0], [0, 1]]
    with pytest.raises(DocumentError, match='times not strictly increasing at index 2'):
        read_path(_path_doc([0.0, 0.5, 0.5, 1.0], [identity] * 4))
    with pytest.raises(DocumentError, match='frame 1 is not symplectic'):
        read_path(_path_doc([0.0, 1.0], [identity, [[2, 0], [0, 2]]]))
    with pytest.raises(DocumentError, match='shape'):
        read_path(_path_doc([0.0, 1.0], [identity]))
    with pytest.raises(DocumentError, match="missing field 'frames'"):
        read_path(json.dumps({'schema_version': '1', 'kind': 'path', 'half_dim': 1, 'times': [0.0, 1.0]}))


def test_envelope_errors():
    with pytest.raises(DocumentError, match='not valid JSON'):
        read_path(b'{"schema_version": ')
    with pytest.raises(DocumentError, match='schema_version'):
        read_path(_path_doc([0.0, 1.0], [[[1, 0], [0, 1]]] * 2, schema_version='2'))
    with pytest.raises(DocumentError, match="expected a 'matrix' document"):
        read_matrix(_path_doc([0.0, 1.0], [[[1, 0], [0, 1]]] * 2))
    with pytest.raises(DocumentError) as exc:
        read_path(b'[]')
    assert exc.value.exit_code == 2


def test_non_finite_values_are_rejected():
    with pytest.raises(DocumentError):
        canonical_dumps({'value': float('nan')})


def test_matrix_document():
    matrix = validate_symplectic(random_symplectic(rng_for(3), 2))
    first = write_matrix(matrix)
    assert write_matrix(read_matrix(first)) == first
    with pytest.raises(DocumentError, match='not symplectic'):
        read_matrix(json.dumps({'schema_version': '1', 'kind': 'matrix', 'half_dim': 1,
                                'entries': [[2, 0], [0, 2]]}))


def test_loop_and_holonomy_documents():
    loop = constant_loop(Subspace.from_basis(model_coisotropic(2, 1)), 9)
    holonomy = HolonomyPath.from_maps(loop.times, [rotation_block(0.1 * i) for i in range(9)])
    loop_doc, holonomy_doc = write_loop(loop), write_holonomy(holonomy)
    assert write_loop(read_loop(loop_doc)) == loop_doc
    assert write_holonomy(read_holonomy(holonomy_doc)) == holonomy_doc
    assert read_loop(loop_doc).codim == 1
    assert read_holonomy(holonomy_doc).quotient_dim == 2


def test_holonomy_quotient_dim_must_be_even():
    doc = {'schema_version': '1', 'kind': 'holonomy', 'quotient_dim': 3, 'times': [0.0, 1.0], 'maps': []}
    with pytest.raises(DocumentError, match='even'):
        read_holonomy(json.dumps(doc))


def test_report_document():
    report = IndexReport(value=-12.0, max_phase_step=0.25, refinement_depth=1)
    data = write_report(report, command='mean-index')
    assert read_report(data) == report
    assert json.loads(data)['command'] == 'mean-index'


def test_canonical_form_and_hash():
    data = canonical_dumps({'b': 1, 'a': [1.5, 2]})
    assert data == b'{"a":[1.5,2],"b":1}'
    assert content_hash(data) == content_hash(canonical_dumps({'a': [1.5, 2], 'b': 1}))
    assert len(content_hash(data)) == 64


def test_written_path_uses_times_and_metadata():
    path = SymplecticPath.from_frames([0.0, 1.0], [np.eye(2), np.eye(2)], metadata={'source': 'test'})
    doc = json.loads(write_path(path))
    assert doc['kind'] == 'path'
    assert doc['times'] == [0.0, 1.0]
    assert doc['metadata'] == {'source': 'test'}
