import json
import math

import numpy as np
import pytest

from blockspec import make_explicit, make_fixture, point_spectrum
from blockspec.io import FamilyFileError, dumps, family_from_dict, family_to_dict, load_family, to_jsonable


def test_explicit_document():
    doc = {"kind": "explicit", "blocks": [[[[1, 0], [0, 0]], [[0, 0], [2, 0]]], [[3]]], "measure": "counting"}
    fam = family_from_dict(doc)
    assert fam.size == 2
    assert np.array_equal(fam.blocks[0].data, np.diag([1, 2]))
    assert fam.blocks[1].data[0, 0] == 3


def test_round_trip_explicit():
    rng = np.random.default_rng(0)
    fam = make_explicit([rng.random((2, 2)) + 1j * rng.random((2, 2)), [[1j]]], measure=(0.5, 2.0))
    back = family_from_dict(json.loads(json.dumps(family_to_dict(fam))))
    assert all(np.array_equal(a.data, b.data) for a, b in zip(fam.blocks, back.blocks))
    assert back.measure == fam.measure


def test_flags_round_trip():
    fam = make_fixture("nilpotent2", alpha=(1, 2))
    back = family_from_dict(family_to_dict(fam))
    assert [b.nilpotency_order for b in back.blocks] == [2, 2]


def test_generator_document_with_tail_override():
    doc = {"kind": "generator", "name": "harmonic_diag", "params": {}, "tail": {"N0": 3, "upper": "1/n"}}
    fam = family_from_dict(doc)
    assert fam.tail.start == 3
    assert fam.tail.singular.text == "1/n"  # kept from the fixture
    assert fam.block(4).data[0, 0] == 0.25


def test_generator_params():
    fam = family_from_dict({"kind": "generator", "name": "volterra", "params": {"alpha": [1, 2], "nq": 8}})
    assert fam.size == 2 and fam.blocks[0].dim == 8


@pytest.mark.parametrize("doc, position", [
    ([], "$"),
    ({"kind": "other"}, "$.kind"),
    ({"kind": "explicit"}, "$.blocks"),
    ({"kind": "explicit", "blocks": [[[1, 2]]]}, "$.blocks[0]"),
    ({"kind": "explicit", "blocks": [[[1]], [["x"]]]}, "$.blocks[1][0][0]"),
    ({"kind": "explicit", "blocks": [[[[1, 2, 3]]]]}, "$.blocks[0][0][0]"),
    ({"kind": "explicit", "blocks": [[[1]]], "measure": [0]}, "$.measure"),
    ({"kind": "explicit", "blocks": [[[1]]], "flags": [{"bogus": 1}]}, "$.flags[0]"),
    ({"kind": "generator", "name": "nope"}, "$.name"),
    ({"kind": "generator", "name": "volterra", "params": {"nq": 3}}, "$.name"),
    ({"kind": "generator", "name": "volterra", "params": {"bad": 3}}, "$.params"),
    ({"kind": "generator", "name": "harmonic_diag", "tail": {"upper": "n"}}, "$.tail"),
    ({"kind": "generator", "name": "harmonic_diag", "tail": {"upper": "1/"}}, "$.tail"),
    ({"kind": "generator", "name": "harmonic_diag", "tail": {"what": 1}}, "$.tail"),
])
def test_errors_carry_position(doc, position):
    with pytest.raises(FamilyFileError) as info:
        family_from_dict(doc)
    assert info.value.position == position


def test_json_syntax_error_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"kind": "explicit",\n "blocks": [[[1]],]}')
    with pytest.raises(FamilyFileError) as info:
        load_family(str(path))
    assert info.value.position.startswith("line 2 column")


def test_digest_depends_on_bytes(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    a.write_text('{"kind": "explicit", "blocks": [[[1]]]}')
    b.write_text('{"kind": "explicit", "blocks": [[[1]]]} ')
    assert load_family(str(a))[1] != load_family(str(b))[1]
    assert load_family(str(a))[1] == load_family(str(a))[1]


def test_to_jsonable():
    rep = point_spectrum(make_explicit([[[1j]], [[2]]]), 2)
    data = to_jsonable(rep)
    assert data["eigenvalues"][0] == {"value": [0.0, 1.0], "sources": [[1, 1]]}
    assert "raw" not in data
    assert to_jsonable([math.inf, -math.inf, math.nan]) == ["inf", "-inf", "nan"]
    assert to_jsonable(np.float64(0.1)) == 0.1
    assert to_jsonable(np.int64(3)) == 3
    assert json.loads(dumps({"x": complex(1, -2)})) == {"x": [1.0, -2.0]}
