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
Demonstration corpus: generation, persistence and batching.

Layout of a dataset directory:

    manifest.json               schema version, catalog, vocabulary, demo index, checksums
    demos/000000/
        frame_0000.png ...      rendered frames, 8-bit RGB
        trajectory.jsonl        header line (command, scene seed), then {"t", "joints"} per frame
        masks.bin               msgpack, bit-packed target masks (oracle only)
        attention.bin           msgpack, teacher attention maps, T x k float32 (optional)

The manifest has no timestamps, so building twice with the same config and seed
gives byte-identical manifests.
"""

import os
from dataclasses import dataclass
from dataclasses import field
from itertools import count
from typing import Any
from typing import Dict
from typing import Iterator
from typing import List
from typing import Optional

import numpy
import orjson
import ormsgpack

from heed.config import RunConfig
from heed.config import SceneConfig
from heed.corpus.vocabulary import Command
from heed.corpus.vocabulary import Vocabulary
from heed.corpus.vocabulary import grammar_sample
from heed.exceptions import CorruptDatasetError
from heed.exceptions import DatasetVersionError
from heed.exceptions import InfeasibleTaskError
from heed.exceptions import OverDenseSceneError
from heed.logging import get_logger
from heed.sim.catalog import Catalog
from heed.sim.episode import Demonstration
from heed.sim.episode import scripted_expert
from heed.sim.render import load_png
from heed.sim.render import quantize
from heed.sim.render import save_png
from heed.sim.scene import make_scene
from heed.tools import content_hash
from heed.tools import derive_seed
from heed.tools import lru_cache_with_expiry
from heed.tools import retry

DATASET_VERSION: int = 1
MANIFEST: str = "manifest.json"
SPLITS = ("train", "validation")

logger = get_logger()


def _dump(document: Any) -> bytes:
    return orjson.dumps(document, option=orjson.OPT_SORT_KEYS | orjson.OPT_INDENT_2)


def _pack_masks(masks: numpy.ndarray) -> bytes:
    masks = numpy.asarray(masks, dtype=bool)
    return ormsgpack.packb(
        {"shape": list(masks.shape), "bits": numpy.packbits(masks.reshape(-1)).tobytes()}
    )


def _unpack_masks(blob: bytes) -> numpy.ndarray:
    document = ormsgpack.unpackb(blob)
    shape = tuple(document["shape"])
    bits = numpy.frombuffer(document["bits"], dtype=numpy.uint8)
    return numpy.unpackbits(bits, count=int(numpy.prod(shape))).astype(bool).reshape(shape)


def _pack_maps(maps: numpy.ndarray) -> bytes:
    maps = numpy.ascontiguousarray(maps, dtype=numpy.float32)
    return ormsgpack.packb({"shape": list(maps.shape), "data": maps.tobytes()})


def _unpack_maps(blob: bytes) -> numpy.ndarray:
    document = ormsgpack.unpackb(blob)
    data = numpy.frombuffer(document["data"], dtype=numpy.float32)
    return data.reshape(tuple(document["shape"])).copy()


def _read(path: str) -> bytes:
    with open(path, "rb") as handle:
        return handle.read()


def _write(path: str, data: bytes):
    with open(path, "wb") as handle:
        handle.write(data)


FRAME_CACHE_DEMOS: int = 128


@lru_cache_with_expiry(max_size=FRAME_CACHE_DEMOS)
def _read_frames(directory: str, length: int, checksum: str) -> numpy.ndarray:
    """uint8 frames of one demonstration, cached by the checksum the manifest records."""
    return numpy.stack(
        [quantize(load_png(os.path.join(directory, f"frame_{t:04d}.png"))) for t in range(length)]
    )


@dataclass
class Batch:
    """
    A batch of demonstrations as padded sequences. Step t pairs frame t with the
    current joints t and the next-step target joints t+1; `valid` marks real steps.
    """

    indices: List[int]
    frames: numpy.ndarray  # B x T x H x W x 3 float32
    joints: numpy.ndarray  # B x T x J
    targets: numpy.ndarray  # B x T x J
    valid: numpy.ndarray  # B x T bool
    shape_onehot: numpy.ndarray  # B x n
    color_onehot: numpy.ndarray  # B x m
    word_sets: numpy.ndarray  # B x |V|
    commands: List[Command]
    attention: Optional[numpy.ndarray] = None  # B x T x k


@dataclass
class FrameBatch:
    """Single frames with their commands, for the attention teacher."""

    keys: List[tuple]
    frames: numpy.ndarray  # B x H x W x 3 float32
    tokens: List[tuple]
    word_sets: numpy.ndarray
    shape_ids: numpy.ndarray
    color_ids: numpy.ndarray


@dataclass
class DatasetHandle:
    path: str
    manifest: Dict[str, Any]
    catalog: Catalog = field(init=False)
    vocabulary: Vocabulary = field(init=False)
    scene_config: SceneConfig = field(init=False)

    def __post_init__(self):
        self.catalog = Catalog(**self.manifest["catalog"])
        self.vocabulary = Vocabulary(words=tuple(self.manifest["vocabulary"]))
        self.scene_config = SceneConfig.from_dict(self.manifest["scene"])

    @property
    def demos(self) -> List[Dict[str, Any]]:
        return self.manifest["demos"]

    def __len__(self) -> int:
        return len(self.demos)

    def split(self, name: str) -> List[int]:
        return [entry["index"] for entry in self.demos if entry["split"] == name]

    def directory(self, index: int) -> str:
        return os.path.join(self.path, self.demos[index]["dir"])

    def command(self, index: int) -> Command:
        return Command.from_dict(self.demos[index]["command"], self.catalog, self.vocabulary)

    def frames(self, index: int) -> numpy.ndarray:
        """T x H x W x 3 uint8."""
        demo = self.demos[index]
        return _read_frames(self.directory(index), demo["length"], demo["checksums"]["frames"])

    def joints(self, index: int) -> numpy.ndarray:
        lines = _read(os.path.join(self.directory(index), "trajectory.jsonl")).splitlines()
        return numpy.array([orjson.loads(line)["joints"] for line in lines[1:]])

    def masks(self, index: int) -> numpy.ndarray:
        return _unpack_masks(_read(os.path.join(self.directory(index), "masks.bin")))

    @property
    def has_attention(self) -> bool:
        return self.manifest.get("attention") is not None

    def attention(self, index: int) -> numpy.ndarray:
        if not self.has_attention:
            raise CorruptDatasetError(self.path, "no teacher attention maps have been attached")
        return _unpack_maps(_read(os.path.join(self.directory(index), "attention.bin")))

    def demonstration(self, index: int) -> Demonstration:
        return Demonstration(
            command=self.command(index),
            frames=self.frames(index).astype(numpy.float32) / numpy.float32(255),
            joints=self.joints(index),
            scene_seed=self.demos[index]["scene_seed"],
            masks=self.masks(index),
        )

    def attach_attention(self, maps: Dict[int, numpy.ndarray], grid: int):
        """Persist one T x k map array per demonstration and record them in the manifest."""
        for index, entry in enumerate(self.demos):
            blob = _pack_maps(maps[index])
            _write(os.path.join(self.directory(index), "attention.bin"), blob)
            entry["checksums"]["attention"] = content_hash(blob)
        self.manifest["attention"] = {"grid": grid, "k": grid * grid, "layout": "T x k float32"}
        _write(os.path.join(self.path, MANIFEST), _dump(self.manifest))
        logger.info({"attached": "attention", "demos": len(self.demos), "grid": grid})

    @property
    def checksum(self) -> str:
        return content_hash(_dump(self.manifest))


def _demo_checksums(directory: str, length: int) -> Dict[str, str]:
    frames = b"".join(
        _read(os.path.join(directory, f"frame_{t:04d}.png")) for t in range(length)
    )
    return {
        "frames": content_hash(frames),
        "trajectory": content_hash(_read(os.path.join(directory, "trajectory.jsonl"))),
        "masks": content_hash(_read(os.path.join(directory, "masks.bin"))),
    }


def write_demonstration(directory: str, demo: Demonstration) -> Dict[str, str]:
    os.makedirs(directory, exist_ok=True)
    for t, frame in enumerate(demo.frames):
        save_png(frame, os.path.join(directory, f"frame_{t:04d}.png"))
    header = {"command": demo.command.to_dict(), "scene_seed": demo.scene_seed}
    lines = [orjson.dumps(header)]
    lines.extend(orjson.dumps({"t": t, "joints": j.tolist()}) for t, j in enumerate(demo.joints))
    _write(os.path.join(directory, "trajectory.jsonl"), b"\n".join(lines) + b"\n")
    _write(os.path.join(directory, "masks.bin"), _pack_masks(demo.masks))
    return _demo_checksums(directory, len(demo.frames))


def assign_splits(scene_seeds: List[int], fraction: float, seed: int) -> List[str]:
    """
    Rank demonstrations by a hash of their scene seed; the first `fraction` of the
    ranking is validation. Seeds are unique per demonstration, so the splits are
    disjoint by scene seed.
    """
    ranking = sorted(range(len(scene_seeds)), key=lambda i: derive_seed(seed, "split", scene_seeds[i]))
    held_out = set(ranking[: int(round(fraction * len(scene_seeds)))])
    return ["validation" if i in held_out else "train" for i in range(len(scene_seeds))]


def record_demonstration(
    config: RunConfig, catalog: Catalog, vocabulary: Vocabulary, verb: str, pair, seed: int
) -> Demonstration:
    """Sample scenes for one (verb, object) demonstration until the expert succeeds."""
    shape_id, color_id = catalog.shape_id(pair[0]), catalog.color_id(pair[1])
    attempts = count()

    def _report(err: Exception, tries: int):
        logger.debug({"resample": verb, "object": pair, "attempt": tries, "reason": str(err)})

    @retry(
        max_tries=config.corpus.resample_attempts,
        retry_exceptions=(OverDenseSceneError, InfeasibleTaskError),
        callback=_report,
    )
    def _attempt() -> Demonstration:
        scene_seed = derive_seed(seed, next(attempts))
        scene = make_scene(config.scene, scene_seed, required=[(shape_id, color_id)])
        command = grammar_sample(scene.objects[0], verb, scene_seed, catalog, vocabulary)
        return scripted_expert(scene, command)

    return _attempt()


def build_dataset(config: RunConfig, seed: int, out: str) -> DatasetHandle:
    """
    Generate `demos_per_pair` expert demonstrations for every (task, object) pair
    and persist them under `out`.
    """
    catalog = Catalog.from_config(config.scene)
    vocabulary = Vocabulary.from_catalog(catalog)
    os.makedirs(os.path.join(out, "demos"), exist_ok=True)

    entries: List[Dict[str, Any]] = []
    for verb in config.corpus.tasks:
        for pair in config.corpus.objects:
            for i in range(config.corpus.demos_per_pair):
                demo_seed = derive_seed(seed, verb, pair[0], pair[1], i)
                demo = record_demonstration(config, catalog, vocabulary, verb, pair, demo_seed)
                index = len(entries)
                relative = os.path.join("demos", f"{index:06d}")
                checksums = write_demonstration(os.path.join(out, relative), demo)
                entries.append(
                    {
                        "index": index,
                        "dir": relative,
                        "command": demo.command.to_dict(),
                        "scene_seed": demo.scene_seed,
                        "length": len(demo),
                        "checksums": checksums,
                    }
                )
            logger.info({"generated": verb, "object": pair, "demos": config.corpus.demos_per_pair})

    splits = assign_splits(
        [e["scene_seed"] for e in entries], config.corpus.validation_fraction, seed
    )
    for entry, split in zip(entries, splits):
        entry["split"] = split

    manifest = {
        "schema_version": DATASET_VERSION,
        "seed": seed,
        "catalog": catalog.to_dict(),
        "vocabulary": list(vocabulary.words),
        "scene": config.scene.to_dict(),
        "corpus": config.corpus.to_dict(),
        "demos": entries,
        "attention": None,
    }
    _write(os.path.join(out, MANIFEST), _dump(manifest))
    return DatasetHandle(path=out, manifest=manifest)


def load_dataset(path: str, verify: bool = True) -> DatasetHandle:
    manifest_path = os.path.join(path, MANIFEST)
    if not os.path.exists(manifest_path):
        raise CorruptDatasetError(path, "no manifest")
    try:
        manifest = orjson.loads(_read(manifest_path))
    except orjson.JSONDecodeError as err:
        raise CorruptDatasetError(path, f"manifest is not valid JSON ({err})") from err
    if manifest.get("schema_version") != DATASET_VERSION:
        raise DatasetVersionError(manifest.get("schema_version"), DATASET_VERSION)

    handle = DatasetHandle(path=path, manifest=manifest)
    if verify:
        for entry in handle.demos:
            directory = handle.directory(entry["index"])
            try:
                found = _demo_checksums(directory, entry["length"])
                if handle.has_attention:
                    found["attention"] = content_hash(
                        _read(os.path.join(directory, "attention.bin"))
                    )
            except FileNotFoundError as err:
                raise CorruptDatasetError(path, f"missing file `{err.filename}`") from err
            for name, expected in entry["checksums"].items():
                if found.get(name) != expected:
                    raise CorruptDatasetError(path, f"checksum mismatch on {entry['dir']}/{name}")
    return handle


def batch_count(items: int, batch_size: int) -> int:
    return -(-items // batch_size)


def collate(handle: DatasetHandle, indices: List[int]) -> Batch:
    """Pad a set of demonstrations to the longest one (less its final frame)."""
    steps = max(handle.demos[i]["length"] for i in indices) - 1
    size = handle.scene_config.image_size
    joint_count = len(handle.scene_config.link_lengths) + 1
    b = len(indices)
    frames = numpy.zeros((b, steps, size, size, 3), dtype=numpy.float32)
    joints = numpy.zeros((b, steps, joint_count), dtype=numpy.float32)
    targets = numpy.zeros_like(joints)
    valid = numpy.zeros((b, steps), dtype=bool)
    attention = None
    if handle.has_attention:
        k = handle.manifest["attention"]["k"]
        attention = numpy.full((b, steps, k), 1.0 / k, dtype=numpy.float32)

    commands = [handle.command(i) for i in indices]
    for row, index in enumerate(indices):
        length = handle.demos[index]["length"] - 1
        frames[row, :length] = handle.frames(index)[:length] / numpy.float32(255)
        trajectory = handle.joints(index)
        joints[row, :length] = trajectory[:-1]
        targets[row, :length] = trajectory[1:]
        valid[row, :length] = True
        if attention is not None:
            attention[row, :length] = handle.attention(index)[:length]

    return Batch(
        indices=list(indices),
        frames=frames,
        joints=joints,
        targets=targets,
        valid=valid,
        shape_onehot=numpy.stack([c.shape_onehot for c in commands]),
        color_onehot=numpy.stack([c.color_onehot for c in commands]),
        word_sets=numpy.stack([c.word_set for c in commands]),
        commands=commands,
        attention=attention,
    )


def iterate(
    handle: DatasetHandle,
    split: str,
    batch_size: int,
    seed: int,
    only: Optional[List[int]] = None,
) -> Iterator[Batch]:
    """
    Batches of whole demonstrations in a seeded permutation of the split. `only`
    restricts the split to a subset of demonstration indices.
    """
    indices = handle.split(split)
    if only is not None:
        keep = set(only)
        indices = [i for i in indices if i in keep]
    order = numpy.random.default_rng(seed).permutation(len(indices))
    for start in range(0, len(indices), batch_size):
        yield collate(handle, [indices[i] for i in order[start : start + batch_size]])


def iterate_frames(
    handle: DatasetHandle, split: str, batch_size: int, seed: int
) -> Iterator[FrameBatch]:
    """Batches of single (frame, command) pairs in a seeded permutation of the split."""
    keys = [(i, t) for i in handle.split(split) for t in range(handle.demos[i]["length"])]
    order = numpy.random.default_rng(seed).permutation(len(keys))
    commands: Dict[int, Command] = {}
    for start in range(0, len(keys), batch_size):
        chunk = [keys[i] for i in order[start : start + batch_size]]
        for index, _ in chunk:
            if index not in commands:
                commands[index] = handle.command(index)
        yield FrameBatch(
            keys=chunk,
            frames=numpy.stack([handle.frames(i)[t] for i, t in chunk]).astype(numpy.float32)
            / numpy.float32(255),
            tokens=[commands[i].text for i, _ in chunk],
            word_sets=numpy.stack([commands[i].word_set for i, _ in chunk]),
            shape_ids=numpy.array([commands[i].shape_id for i, _ in chunk]),
            color_ids=numpy.array([commands[i].color_id for i, _ in chunk]),
        )
