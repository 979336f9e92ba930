import json

import numpy as np
import pytest

import locp
from locp.errors import ParseError
from locp.gen import dominated_pair_instance, module_pair_instance, \
    schur_instance
from locp.serialize import (decode_instance, decode_matrix, decode_rep,
                            dumps, encode_instance, encode_matrix,
                            encode_rep, load_instance, write_json)


def test_matrix_round_trip(rng):
    m = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
    back = decode_matrix(encode_matrix(m))
    assert np.array_equal(back, m)   # json floats round-trip exactly


def test_decode_matrix_real_shorthand():
    assert np.array_equal(decode_matrix([[1, 2], [3, 4]]),
                          np.array([[1, 2], [3, 4]], dtype=complex))


def test_decode_matrix_malformed():
    with pytest.raises(ParseError):
        decode_matrix([[[1, 2, 3]]])
    with pytest.raises(ParseError):
        decode_matrix("nope")


def test_instance_round_trip():
    inst = dominated_pair_instance(3)
    data = encode_instance(inst)
    back = decode_instance(json.loads(dumps(data)))
    assert set(back.maps) == {"phi", "psi"}
    for name in ("phi", "psi"):
        assert np.allclose(back.maps[name].img_mats,
                           inst.maps[name].img_mats, atol=1e-14)
    assert np.allclose(back.ground_truth["t"], inst.ground_truth["t"],
                       atol=0)
    # structure constants are recomputed, not stored
    assert "mult" not in dumps(data)


def test_module_instance_round_trip():
    inst = module_pair_instance(5)
    back = decode_instance(encode_instance(inst))
    assert set(back.inducing_maps) == {"Phi", "Psi"}
    phi1 = back.inducing_maps["Phi"]
    assert locp.verify_phi_map(phi1).passed
    assert np.allclose(phi1.img_mats, inst.inducing_maps["Phi"].img_mats,
                       atol=1e-14)


def test_unresolved_reference_is_parse_error():
    inst = schur_instance(2)
    data = encode_instance(inst)
    data["maps"]["schur"]["source"] = "missing"
    with pytest.raises(ParseError):
        decode_instance(data)


def test_load_instance_missing_file():
    with pytest.raises(ParseError):
        load_instance("/nonexistent/path.json")


def test_tolerance_overrides():
    inst = schur_instance(2)
    data = encode_instance(inst)
    back = decode_instance(data, overrides={"eq": 1e-6})
    assert back.tolerances.eq == 1e-6
    assert back.tolerances.psd == inst.tolerances.psd


def test_rep_round_trip(tmp_path):
    inst = dominated_pair_instance(9)
    rep = locp.dilate_minimal(inst.maps["phi"])
    data = json.loads(dumps(encode_rep(rep)))
    back = decode_rep(data, inst.maps["phi"])
    assert back.dil_dim == rep.dil_dim
    assert np.allclose(back.v_embed, rep.v_embed, atol=0)
    # certificates re-verify on load
    assert locp.verify_minimality(back).passed


def test_write_json_atomic(tmp_path):
    path = tmp_path / "out.json"
    write_json(str(path), {"a": 1.5})
    assert json.loads(path.read_text()) == {"a": 1.5}
    assert list(tmp_path.iterdir()) == [path]
