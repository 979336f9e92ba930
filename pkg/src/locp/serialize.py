"""JSON encoding of instances and certificates.

Conventions: a complex scalar is a two-element array [re, im]; a matrix
is a row-major array of rows of such pairs.  Operator matrices are
serialized in ambient coordinates and re-validated (and re-canonicalized
against their flags) on load.  Structure constants and tensors are never
serialized; they are recomputed from the basis to avoid stale data.

An instance file is a single JSON object with named tables::

    {"flags": {...}, "algebras": {...}, "maps": {...},
     "modules": {...}, "inducing_maps": {...},
     "tolerances": {...}, "ground_truth": {...}}

where cross-references are by name within the same file.
"""
from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .algebra import LocalAlgebra, algebra_from_basis
from .config import Tolerances, default_tolerances
from .cpmaps import LocalCPMap, make_map
from .errors import LocpError, ParseError
from .flags import BlockOp, Flag, check_block_op, make_flag
from .hilbert_module import (CPInducingMap, HilbertModule, build_module,
                             make_inducing)
from .radon_nikodym import RNCertificate
from .stinespring import StinespringRep

__all__ = [
    "Instance", "encode_matrix", "decode_matrix", "encode_flag",
    "decode_flag", "encode_instance", "decode_instance", "load_instance",
    "encode_rep", "decode_rep", "encode_rn_certificate", "write_json",
    "dumps",
]


def encode_matrix(m: np.ndarray) -> list:
    m = np.asarray(m)
    return [[[float(np.real(x)), float(np.imag(x))] for x in row]
            for row in m]


def decode_matrix(data) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"malformed matrix: {exc}")
    if arr.ndim == 2:   # allow a real matrix shorthand
        return arr.astype(np.complex128)
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise ParseError(f"malformed matrix of shape {arr.shape}")
    return (arr[..., 0] + 1j * arr[..., 1]).astype(np.complex128)


def encode_flag(f: Flag) -> dict:
    out = {"ambient": f.ambient, "dims": list(f.dims)}
    if f.frame is not None:
        out["frame"] = encode_matrix(f.frame)
    return out


def decode_flag(data, tols: Tolerances) -> Flag:
    try:
        ambient = data["ambient"]
        dims = data["dims"]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed flag: {exc}")
    frame = decode_matrix(data["frame"]) if "frame" in data else None
    return make_flag(ambient, dims, frame, tols=tols)


@dataclass
class Instance:
    flags: dict[str, Flag] = field(default_factory=dict)
    algebras: dict[str, LocalAlgebra] = field(default_factory=dict)
    maps: dict[str, LocalCPMap] = field(default_factory=dict)
    modules: dict[str, HilbertModule] = field(default_factory=dict)
    inducing_maps: dict[str, CPInducingMap] = field(default_factory=dict)
    tolerances: Tolerances = field(default_factory=default_tolerances)
    ground_truth: dict = field(default_factory=dict)

    # reverse-lookup helpers used by the encoder
    def _name_of(self, table: dict, obj) -> str:
        for name, candidate in table.items():
            if candidate is obj:
                return name
        raise LocpError("object is not part of this instance")


def encode_instance(inst: Instance) -> dict:
    out: dict = {
        "flags": {n: encode_flag(f) for n, f in inst.flags.items()},
        "tolerances": {
            "tau_eq": inst.tolerances.eq,
            "tau_psd": inst.tolerances.psd,
            "tau_rank": inst.tolerances.rank,
            "tau_roundtrip": inst.tolerances.roundtrip,
        },
    }
    if inst.algebras:
        out["algebras"] = {
            n: {"domain": inst._name_of(inst.flags, a.domain),
                "basis": [encode_matrix(b.ambient_matrix()) for b in a.basis]}
            for n, a in inst.algebras.items()}
    if inst.maps:
        out["maps"] = {
            n: {"source": inst._name_of(inst.algebras, m.source),
                "target": inst._name_of(inst.flags, m.target_flag),
                "images": [encode_matrix(im.ambient_matrix())
                           for im in m.images],
                "witness": list(m.witness)}
            for n, m in inst.maps.items()}
    if inst.modules:
        out["modules"] = {
            n: {"algebra": inst._name_of(inst.algebras, mod.algebra),
                "carrier": inst._name_of(inst.flags, mod.carrier_flag),
                "basis": [encode_matrix(b.ambient_matrix())
                          for b in mod.basis]}
            for n, mod in inst.modules.items()}
    if inst.inducing_maps:
        out["inducing_maps"] = {
            n: {"module": inst._name_of(inst.modules, c.module),
                "phi": inst._name_of(inst.maps, c.phi),
                "target_dst": inst._name_of(inst.flags, c.target_dst_flag),
                "images": [encode_matrix(im.ambient_matrix())
                           for im in c.images]}
            for n, c in inst.inducing_maps.items()}
    if inst.ground_truth:
        out["ground_truth"] = {k: encode_matrix(v)
                               for k, v in inst.ground_truth.items()}
    return out


def _ref(table: dict, name, what: str):
    if not isinstance(name, str) or name not in table:
        raise ParseError(f"unresolved {what} reference {name!r}")
    return table[name]


def decode_instance(data: dict, overrides: dict | None = None) -> Instance:
    """Rebuild an instance; structural problems raise ParseError,
    mathematical validation failures raise the specific LocpError.

    overrides (keys eq/psd/rank/roundtrip) take precedence over the
    file's tolerance table.
    """
    if not isinstance(data, dict):
        raise ParseError("instance file must contain a JSON object")
    tdata = data.get("tolerances", {})
    base = default_tolerances()
    tols = Tolerances(
        eq=float(tdata.get("tau_eq", base.eq)),
        psd=float(tdata.get("tau_psd", base.psd)),
        rank=float(tdata.get("tau_rank", base.rank)),
        roundtrip=float(tdata.get("tau_roundtrip", base.roundtrip)),
    ).with_overrides(**(overrides or {}))
    inst = Instance(tolerances=tols)
    for name, fdata in data.get("flags", {}).items():
        inst.flags[name] = decode_flag(fdata, tols)
    for name, adata in data.get("algebras", {}).items():
        domain = _ref(inst.flags, adata.get("domain"), "flag")
        basis = [decode_matrix(b) for b in adata.get("basis", [])]
        inst.algebras[name] = algebra_from_basis(domain, basis, tols=tols)
    for name, mdata in data.get("maps", {}).items():
        source = _ref(inst.algebras, mdata.get("source"), "algebra")
        target = _ref(inst.flags, mdata.get("target"), "flag")
        images = [decode_matrix(im) for im in mdata.get("images", [])]
        witness = mdata.get("witness")
        inst.maps[name] = make_map(source, target, images, witness, tols=tols)
    for name, mdata in data.get("modules", {}).items():
        alg = _ref(inst.algebras, mdata.get("algebra"), "algebra")
        carrier = _ref(inst.flags, mdata.get("carrier"), "flag")
        basis = [decode_matrix(b) for b in mdata.get("basis", [])]
        inst.modules[name] = build_module(alg, carrier, basis, tols=tols)
    for name, cdata in data.get("inducing_maps", {}).items():
        module = _ref(inst.modules, cdata.get("module"), "module")
        phi = _ref(inst.maps, cdata.get("phi"), "map")
        dst = _ref(inst.flags, cdata.get("target_dst"), "flag")
        images = [decode_matrix(im) for im in cdata.get("images", [])]
        inst.inducing_maps[name] = make_inducing(module, phi, dst, images,
                                                 tols=tols)
    for key, mat in data.get("ground_truth", {}).items():
        inst.ground_truth[key] = decode_matrix(mat)
    return inst


def load_instance(path: str, overrides: dict | None = None) -> Instance:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON in {path}: {exc}")
    return decode_instance(data, overrides=overrides)


def encode_rep(rep: StinespringRep) -> dict:
    return {
        "dil_dim": rep.dil_dim,
        "q": encode_matrix(rep.q_factor),
        "pi": [encode_matrix(p) for p in rep.pi_mats],
        "v": encode_matrix(rep.v_embed),
        "dil_flag": encode_flag(rep.dil_flag),
    }


def decode_rep(data: dict, map_ref: LocalCPMap) -> StinespringRep:
    try:
        r = int(data["dil_dim"])
        fdata = data["dil_flag"]
        dil_flag = Flag(int(fdata["ambient"]),
                        tuple(int(k) for k in fdata["dims"]), None)
        q = decode_matrix(data["q"])
        pi = np.stack([decode_matrix(p) for p in data["pi"]]) if data["pi"] \
            else np.zeros((0, r, r), dtype=np.complex128)
        v = decode_matrix(data["v"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed dilation record: {exc}")
    return StinespringRep(map_ref, r, q, pi, v, dil_flag)


def encode_rn_certificate(cert: RNCertificate) -> dict:
    out = cert.to_dict()
    out["t"] = encode_matrix(cert.t_matrix)
    if cert.s_matrix is not None:
        out["s"] = encode_matrix(cert.s_matrix)
    return out


def _json_default(o):
    if isinstance(o, (np.bool_,)):
        return bool(o)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    raise TypeError(f"not JSON-serializable: {type(o).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True,
                      default=_json_default) + "\n"


def write_json(path: str, obj) -> None:
    """Atomic write (temp file + rename) of a JSON-encodable object."""
    text = dumps(obj)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
