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
Run configuration.

One JSON document configures every stage:

    {
        "schema_version": 1,
        "seed": 0,
        "scene": {...}, "corpus": {...}, "teacher": {...}, "vision": {...},
        "motor": {...}, "train": {...}, "eval": {...}
    }

Each section is a dataclass. Missing keys take the field default, unknown keys are
rejected, and values are type checked and then checked against the expectations
declared in the field metadata.
"""

from collections import defaultdict
from dataclasses import asdict
from dataclasses import dataclass
from dataclasses import field
from dataclasses import fields
from dataclasses import is_dataclass
from typing import Any
from typing import Dict
from typing import List
from typing import MutableMapping
from typing import Type

import orjson
from data_expectations import Behaviors
from data_expectations import Expectation
from data_expectations import Expectations
from data_expectations import evaluate_record

from heed.exceptions import ConfigValidationError
from heed.exceptions import SchemaVersionError

SCHEMA_VERSION: int = 1

SHAPES: List[str] = ["bowl", "plate", "ring", "box", "towel", "dumbbell"]
COLORS: List[str] = ["red", "blue", "white", "black"]
TASKS: List[str] = ["pick_up", "push_left"]
SPRITES: List[str] = ["hand", "gorilla", "blob"]


def between(minimum, maximum) -> Dict:
    return {
        "expectation": Behaviors.EXPECT_COLUMN_VALUES_TO_BE_BETWEEN,
        "config": {"minimum": minimum, "maximum": maximum},
    }


def more_than(threshold) -> Dict:
    return {
        "expectation": Behaviors.EXPECT_COLUMN_VALUES_TO_BE_MORE_THAN,
        "config": {"threshold": threshold},
    }


def one_of(*symbols) -> Dict:
    return {
        "expectation": Behaviors.EXPECT_COLUMN_VALUES_TO_BE_IN_SET,
        "config": {"symbols": list(symbols)},
    }


def setting(default, *expectations, factory: bool = False):
    """A config field with a default and zero or more value expectations."""
    metadata = {"expectations": list(expectations)}
    if factory:
        return field(default_factory=default, metadata=metadata)
    return field(default=default, metadata=metadata)


class ConfigSection:
    """
    Mixin for section dataclasses, in the way a schema validates a record: first
    excess keys, then types, then expectations, collecting every failure before
    raising.
    """

    section_name: str = "section"

    @classmethod
    def from_dict(cls: Type["ConfigSection"], data: MutableMapping) -> "ConfigSection":
        if data is None:
            data = {}
        if not isinstance(data, MutableMapping):
            raise ConfigValidationError(cls.section_name, {"Not a Mapping": [cls.section_name]})

        known = {f.name: f for f in fields(cls)}  # type:ignore
        errors: Dict[str, list] = defaultdict(list)

        for key in data:
            if key not in known:
                errors["Unknown Key"].append(key)

        values: Dict[str, Any] = {}
        for name, spec in known.items():
            if name not in data:
                continue
            value = data[name]
            default = spec.default_factory() if callable(spec.default_factory) else spec.default

            if isinstance(default, ConfigSection):
                values[name] = type(default).from_dict(value)
                continue

            value = cls._coerce(value, default)
            if value is None:
                errors["Incorrect Type"].append((name, data[name]))
                continue

            for declared in spec.metadata.get("expectations", []):
                expectation = Expectation(
                    expectation=declared["expectation"], column=name, config=declared["config"]
                )
                candidates = value if isinstance(value, list) else [value]
                if not all(
                    evaluate_record(Expectations([expectation]), {name: v}, suppress_errors=True)
                    for v in candidates
                ):
                    errors["Failed Expectation"].append((name, data[name]))

            values[name] = value

        if errors:
            raise ConfigValidationError(cls.section_name, dict(errors))
        return cls(**values)  # type:ignore

    @staticmethod
    def _coerce(value, default):
        """Return the value in the default's type, or None if it can't be."""
        if isinstance(default, bool):
            return value if isinstance(value, bool) else None
        if isinstance(default, int):
            return value if isinstance(value, int) and not isinstance(value, bool) else None
        if isinstance(default, float):
            if isinstance(value, (int, float)) and not isinstance(value, bool):
                return float(value)
            return None
        if isinstance(default, str):
            return value if isinstance(value, str) else None
        if isinstance(default, list):
            return list(value) if isinstance(value, (list, tuple)) else None
        return value

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)  # type:ignore


@dataclass
class SceneConfig(ConfigSection):
    section_name = "scene"

    image_size: int = setting(64, between(8, 512))
    workspace: float = setting(10.0, more_than(0))
    shapes: List[str] = setting(lambda: list(SHAPES), one_of(*SHAPES), factory=True)
    colors: List[str] = setting(lambda: list(COLORS), one_of(*COLORS), factory=True)
    objects_per_scene: int = setting(2, between(0, 64))
    object_size: float = setting(0.8, more_than(0))
    link_lengths: List[float] = setting(lambda: [4.0, 3.0, 1.5], more_than(0), factory=True)
    joint_rate_limit: float = setting(0.15, more_than(0))
    gripper_rate_limit: float = setting(0.25, more_than(0))
    grasp_radius: float = setting(0.5, more_than(0))
    placement_attempts: int = setting(200, between(1, 100000))
    control_rate_hz: float = setting(10.0, more_than(0))
    h_lift: float = setting(2.0, more_than(0))
    d_push: float = setting(2.5, more_than(0))
    approach_radius: float = setting(2.5, more_than(0))
    shove_band: List[float] = setting(lambda: [2.0, 4.0], more_than(0), factory=True)
    strip_delay: int = setting(1, between(0, 100))


@dataclass
class CorpusConfig(ConfigSection):
    section_name = "corpus"

    tasks: List[str] = setting(lambda: list(TASKS), one_of(*TASKS), factory=True)
    # [shape, color] pairs; each is commanded with every task
    objects: List[list] = setting(
        lambda: [["bowl", "red"], ["plate", "blue"], ["ring", "white"], ["box", "black"]],
        factory=True,
    )
    demos_per_pair: int = setting(150, between(0, 100000))
    validation_fraction: float = setting(0.1, between(0.0, 0.9))
    resample_attempts: int = setting(20, between(1, 1000))


@dataclass
class TeacherConfig(ConfigSection):
    section_name = "teacher"

    d_x: int = setting(32, more_than(0))
    d_h: int = setting(64, more_than(0))
    max_len: int = setting(12, more_than(0))
    cell: str = setting("lstm", one_of("lstm", "gru"))
    trunk: str = setting("compact", one_of("compact", "vgg19"))
    d_phi: int = setting(64, more_than(0))
    d_psi: int = setting(64, more_than(0))
    grid: int = setting(8, between(1, 64))
    tau_hidden: int = setting(128, more_than(0))
    loss: str = setting("bce", one_of("bce", "literal"))
    learning_rate: float = setting(1e-3, more_than(0))
    epochs: int = setting(30, between(0, 10000))
    batch_size: int = setting(32, more_than(0))


@dataclass
class VisionConfig(ConfigSection):
    section_name = "vision"

    d_z: int = setting(128, more_than(0))
    channels: int = setting(32, more_than(0))
    feature_matching: str = setting("batch", one_of("batch", "pair"))


@dataclass
class MotorConfig(ConfigSection):
    section_name = "motor"

    hidden: int = setting(128, more_than(0))
    components: int = setting(8, more_than(0))
    deterministic: bool = setting(False)


@dataclass
class LossWeights(ConfigSection):
    section_name = "train.weights"

    prior: float = setting(1.0, between(0.0, 1e6))
    gd: float = setting(1.0, between(0.0, 1e6))
    fea: float = setting(1.0, between(0.0, 1e6))
    rec: float = setting(1.0, between(0.0, 1e6))
    attention: float = setting(1.0, between(0.0, 1e6))
    cycle: float = setting(0.0, between(0.0, 1e6))
    d: float = setting(1.0, between(0.0, 1e6))
    motor: float = setting(1.0, between(0.0, 1e6))


@dataclass
class TrainConfig(ConfigSection):
    section_name = "train"

    model_variant: str = setting("tfa_full", one_of("tfa_full", "baseline_no_tfa"))
    epochs: int = setting(20, between(0, 10000))
    batch_size: int = setting(32, more_than(0))
    learning_rate: float = setting(2e-4, more_than(0))
    finetune_epochs: int = setting(5, between(0, 10000))
    finetune_learning_rate: float = setting(1e-3, more_than(0))
    weights: LossWeights = setting(LossWeights, factory=True)


@dataclass
class EvalConfig(ConfigSection):
    section_name = "eval"

    trials_per_cell: int = setting(10, between(0, 100000))
    sprites: List[str] = setting(lambda: list(SPRITES), one_of(*SPRITES), factory=True)
    sprite_speed: float = setting(0.3, more_than(0))
    sprite_attempts: int = setting(20, between(1, 1000))
    panel_frames: int = setting(6, more_than(0))


@dataclass
class RunConfig:
    seed: int = 0
    scene: SceneConfig = field(default_factory=SceneConfig)
    corpus: CorpusConfig = field(default_factory=CorpusConfig)
    teacher: TeacherConfig = field(default_factory=TeacherConfig)
    vision: VisionConfig = field(default_factory=VisionConfig)
    motor: MotorConfig = field(default_factory=MotorConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    schema_version: int = SCHEMA_VERSION

    @classmethod
    def from_dict(cls, data: MutableMapping) -> "RunConfig":
        if not isinstance(data, MutableMapping):
            raise ConfigValidationError("root", {"Not a Mapping": ["root"]})
        version = data.get("schema_version")
        if version != SCHEMA_VERSION:
            raise SchemaVersionError(version, SCHEMA_VERSION)

        sections = {
            f.name: f.default_factory for f in fields(cls) if callable(f.default_factory)
        }
        unknown = set(data) - set(sections) - {"schema_version", "seed"}
        if unknown:
            raise ConfigValidationError("root", {"Unknown Key": sorted(unknown)})
        seed = data.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
            raise ConfigValidationError("root", {"Incorrect Type": [("seed", seed)]})

        parsed = {
            name: factory().from_dict(data.get(name, {})) for name, factory in sections.items()
        }
        config = cls(seed=seed, **parsed)
        config.check_consistency()
        return config

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path, "rb") as handle:
            try:
                data = orjson.loads(handle.read())
            except orjson.JSONDecodeError as err:
                raise ConfigValidationError("root", {"Invalid JSON": [str(err)]}) from err
        return cls.from_dict(data)

    def check_consistency(self):
        errors: Dict[str, list] = defaultdict(list)
        if self.scene.image_size % self.teacher.grid:
            errors["Grid Does Not Divide Image"].append(("teacher.grid", self.teacher.grid))
        ratio = self.scene.image_size // max(self.teacher.grid, 1)
        if ratio & (ratio - 1):
            errors["Image To Grid Ratio Not A Power Of Two"].append(("teacher.grid", ratio))
        if self.scene.image_size % 8:
            # the vision net downsamples three times
            errors["Image Size Not A Multiple Of 8"].append(("scene.image_size", self.scene.image_size))
        if len(self.scene.link_lengths) != 3:
            errors["Arm Needs Three Links"].append(("scene.link_lengths", self.scene.link_lengths))
        low, high = (list(self.scene.shove_band) + [0, 0])[:2]
        if len(self.scene.shove_band) != 2 or low > high:
            errors["Invalid Band"].append(("scene.shove_band", self.scene.shove_band))
        for pair in self.corpus.objects:
            if (
                not isinstance(pair, list)
                or len(pair) != 2
                or pair[0] not in self.scene.shapes
                or pair[1] not in self.scene.colors
            ):
                errors["Object Not In Catalog"].append(("corpus.objects", pair))
        if errors:
            raise ConfigValidationError("root", dict(errors))

    def to_dict(self) -> Dict[str, Any]:
        result: Dict[str, Any] = {"schema_version": self.schema_version, "seed": self.seed}
        for f in fields(self):
            value = getattr(self, f.name)
            if is_dataclass(value):
                result[f.name] = value.to_dict()
        return result

    def to_json(self) -> bytes:
        return orjson.dumps(self.to_dict(), option=orjson.OPT_SORT_KEYS | orjson.OPT_INDENT_2)
