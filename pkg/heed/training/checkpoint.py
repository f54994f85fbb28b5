# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""
Checkpoint container.

A single file: a fixed header (magic, format version, body length, CityHash64 of
the body) followed by a msgpack body with sorted keys. Parameters are stored as
raw little-endian buffers with their dtype and shape, so save -> load -> save is
byte-identical.
"""

import struct
from dataclasses import dataclass
from dataclasses import field
from typing import Any
from typing import Dict
from typing import List

import numpy
import ormsgpack
import torch
from cityhash import CityHash64

from heed.exceptions import CorruptCheckpointError

MAGIC: bytes = b"HEEDCKPT"
FORMAT_VERSION: int = 1
HEADER = struct.Struct("<8sHQQ")


def _pack_array(array: numpy.ndarray) -> Dict[str, Any]:
    array = numpy.ascontiguousarray(array)
    return {"dtype": array.dtype.str, "shape": list(array.shape), "data": array.tobytes()}


def _unpack_array(document: Dict[str, Any]) -> numpy.ndarray:
    flat = numpy.frombuffer(document["data"], dtype=numpy.dtype(document["dtype"]))
    return flat.reshape(tuple(document["shape"])).copy()


@dataclass
class Checkpoint:
    kind: str
    config: Dict[str, Any]
    epoch: int = 0
    variant: str = ""
    history: List[Dict[str, Any]] = field(default_factory=list)
    state: Dict[str, Dict[str, numpy.ndarray]] = field(default_factory=dict)
    extra: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_modules(cls, kind: str, config: Dict[str, Any], modules: Dict[str, torch.nn.Module], **kwargs):
        state = {
            name: {key: value.detach().cpu().numpy().copy() for key, value in module.state_dict().items()}
            for name, module in modules.items()
            if module is not None
        }
        return cls(kind=kind, config=config, state=state, **kwargs)

    def load_into(self, name: str, module: torch.nn.Module):
        module.load_state_dict(
            {key: torch.from_numpy(value.copy()) for key, value in self.state[name].items()}
        )

    def to_bytes(self) -> bytes:
        body = ormsgpack.packb(
            {
                "kind": self.kind,
                "config": self.config,
                "epoch": self.epoch,
                "variant": self.variant,
                "history": self.history,
                "state": {
                    name: {key: _pack_array(value) for key, value in params.items()}
                    for name, params in self.state.items()
                },
                "extra": self.extra,
            },
            option=ormsgpack.OPT_SORT_KEYS,
        )
        return HEADER.pack(MAGIC, FORMAT_VERSION, len(body), CityHash64(body)) + body

    @classmethod
    def from_bytes(cls, data: bytes, path: str = "<bytes>") -> "Checkpoint":
        if len(data) < HEADER.size:
            raise CorruptCheckpointError(path, "truncated header")
        magic, version, length, checksum = HEADER.unpack_from(data)
        if magic != MAGIC:
            raise CorruptCheckpointError(path, "not a checkpoint file")
        if version != FORMAT_VERSION:
            raise CorruptCheckpointError(path, f"format version {version}, expected {FORMAT_VERSION}")
        body = data[HEADER.size :]
        if len(body) != length or CityHash64(body) != checksum:
            raise CorruptCheckpointError(path, "checksum mismatch")
        document = ormsgpack.unpackb(body)
        return cls(
            kind=document["kind"],
            config=document["config"],
            epoch=document["epoch"],
            variant=document["variant"],
            history=document["history"],
            state={
                name: {key: _unpack_array(value) for key, value in params.items()}
                for name, params in document["state"].items()
            },
            extra=document["extra"],
        )

    @property
    def checksum(self) -> str:
        return f"{HEADER.unpack_from(self.to_bytes())[3]:016x}"

    def save(self, path: str):
        with open(path, "wb") as handle:
            handle.write(self.to_bytes())

    @classmethod
    def load(cls, path: str) -> "Checkpoint":
        try:
            with open(path, "rb") as handle:
                return cls.from_bytes(handle.read(), path)
        except FileNotFoundError as err:
            raise CorruptCheckpointError(path, "file not found") from err
