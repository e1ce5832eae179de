"""Network parameters and the checkpoint container.

Checkpoint byte layout (all integers little-endian)::

    offset 0   8 bytes   magic b"PREMTNMT"
    offset 8   uint32    format version (1)
    offset 12  uint32    header length L
    offset 16  L bytes   UTF-8 JSON header (sorted keys)
    then       tensors, in header["tensors"] order, each raw float64 '<f8'
               in C order with the listed shape

The header records the dimensions, iteration, optimizer step, optional
dev score, both vocabularies and, per tensor, name, shape and section
(``params``, ``adam_m`` or ``adam_v``).
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

MAGIC = b"PREMTNMT"
VERSION = 1


@dataclass(frozen=True)
class Dims:
    src_vocab: int
    tgt_vocab: int
    embed_dim: int = 32
    hidden_dim: int = 64
    att_dim: int = 0   # 0 means "same as hidden_dim"

    @property
    def attention(self) -> int:
        return self.att_dim or self.hidden_dim


def tensor_shapes(d: Dims) -> dict:
    E, H, A = d.embed_dim, d.hidden_dim, d.attention
    return {
        "src_emb": (d.src_vocab, E),
        "tgt_emb": (d.tgt_vocab, E),
        "enc_fw_W": (E, 3 * H), "enc_fw_U": (H, 3 * H), "enc_fw_b": (3 * H,),
        "enc_bw_W": (E, 3 * H), "enc_bw_U": (H, 3 * H), "enc_bw_b": (3 * H,),
        "init_W": (H, H), "init_b": (H,),
        "att_Ws": (H, A), "att_Uh": (2 * H, A), "att_v": (A,),
        "dec_W": (E + 2 * H, 3 * H), "dec_U": (H, 3 * H), "dec_b": (3 * H,),
        "out_W": (3 * H + E, d.tgt_vocab), "out_b": (d.tgt_vocab,),
    }


class Seq2SeqParams:
    """Every encoder and decoder weight (attention included) as float64 arrays."""

    def __init__(self, dims: Dims, tensors: dict):
        shapes = tensor_shapes(dims)
        if set(tensors) != set(shapes):
            raise ValueError(f"tensor names mismatch: {sorted(set(tensors) ^ set(shapes))}")
        self.dims = dims
        self.tensors = {}
        for name, shape in shapes.items():
            arr = np.asarray(tensors[name], dtype=np.float64)
            if arr.shape != shape:
                raise ValueError(f"{name}: expected shape {shape}, got {arr.shape}")
            self.tensors[name] = arr

    @classmethod
    def initialize(cls, dims: Dims, rng: np.random.Generator) -> "Seq2SeqParams":
        tensors = {}
        for name, shape in tensor_shapes(dims).items():
            if name.endswith("_b"):
                tensors[name] = np.zeros(shape)
            else:
                scale = 0.1 if len(shape) == 1 or name.endswith("emb") else min(0.1, shape[0] ** -0.5)
                tensors[name] = rng.normal(0.0, scale, size=shape)
        return cls(dims, tensors)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def __iter__(self):
        return iter(self.tensors)

    def items(self):
        return self.tensors.items()

    def copy(self) -> "Seq2SeqParams":
        return Seq2SeqParams(self.dims, {k: v.copy() for k, v in self.tensors.items()})

    def all_finite(self) -> bool:
        return all(np.isfinite(v).all() for v in self.tensors.values())

    def num_parameters(self) -> int:
        return sum(v.size for v in self.tensors.values())


@dataclass
class AdamState:
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    @classmethod
    def zeros_like(cls, params: Seq2SeqParams) -> "AdamState":
        return cls(0, {k: np.zeros_like(a) for k, a in params.items()},
                   {k: np.zeros_like(a) for k, a in params.items()})

    def copy(self) -> "AdamState":
        return AdamState(self.step, {k: a.copy() for k, a in self.m.items()},
                         {k: a.copy() for k, a in self.v.items()})


@dataclass
class Checkpoint:
    params: Seq2SeqParams
    iteration: int
    optimizer: AdamState | None = None
    dev_score: float | None = None
    src_vocab: tuple = ()
    tgt_vocab: tuple = ()

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> "Checkpoint":
        return cls.from_bytes(Path(path).read_bytes())

    def to_bytes(self) -> bytes:
        entries, blobs = [], []
        sections = [("params", self.params.tensors)]
        if self.optimizer is not None:
            sections += [("adam_m", self.optimizer.m), ("adam_v", self.optimizer.v)]
        for section, tensors in sections:
            for name in tensor_shapes(self.params.dims):
                arr = np.ascontiguousarray(tensors[name], dtype="<f8")
                entries.append({"name": name, "section": section, "shape": list(arr.shape)})
                blobs.append(arr.tobytes(order="C"))
        header = {
            "dims": asdict(self.params.dims),
            "iteration": self.iteration,
            "adam_step": None if self.optimizer is None else self.optimizer.step,
            "dev_score": self.dev_score,
            "src_vocab": list(self.src_vocab),
            "tgt_vocab": list(self.tgt_vocab),
            "tensors": entries,
        }
        raw = json.dumps(header, sort_keys=True, ensure_ascii=False).encode("utf-8")
        return MAGIC + struct.pack("<II", VERSION, len(raw)) + raw + b"".join(blobs)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Checkpoint":
        if data[:8] != MAGIC:
            raise ValueError("not a premt NMT checkpoint")
        version, hlen = struct.unpack("<II", data[8:16])
        if version != VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        header = json.loads(data[16:16 + hlen].decode("utf-8"))
        offset = 16 + hlen
        sections = {"params": {}, "adam_m": {}, "adam_v": {}}
        for entry in header["tensors"]:
            shape = tuple(entry["shape"])
            n = int(np.prod(shape)) if shape else 1
            arr = np.frombuffer(data, dtype="<f8", count=n, offset=offset).reshape(shape)
            sections[entry["section"]][entry["name"]] = arr.astype(np.float64)
            offset += 8 * n
        if offset != len(data):
            raise ValueError("trailing bytes in checkpoint")
        dims = Dims(**header["dims"])
        opt = None
        if header["adam_step"] is not None:
            opt = AdamState(header["adam_step"], sections["adam_m"], sections["adam_v"])
        return cls(Seq2SeqParams(dims, sections["params"]), header["iteration"], opt,
                   header["dev_score"], tuple(header["src_vocab"]), tuple(header["tgt_vocab"]))
