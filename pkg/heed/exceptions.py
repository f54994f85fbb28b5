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

from typing import Any
from typing import Dict
from typing import Optional


class HeedError(Exception):
    pass


class MissingDependencyError(HeedError):
    def __init__(self, dependency):
        self.dependency = dependency
        message = (
            f"No module named '{dependency}' can be found, "
            "please install or include in requirements.txt"
        )
        super().__init__(message)


# ---------------------------------------------------------------------------------
# configuration


class ConfigError(HeedError):
    pass


class ConfigValidationError(ConfigError):
    def __init__(self, section: str, errors: dict):
        truncated_text = lambda text: (
            f"{text[:16]}... [{len(text) - 16} more]" if len(text) > 16 else text
        )

        self.section = section
        self.errors = errors

        message = f"Configuration section `{section}` did not pass validation checks; "
        for err, detail in errors.items():
            message += f"\n{err}: "
            message += ", ".join(
                f"`{d}`" if isinstance(d, str) else f"`{d[0]}` value `{truncated_text(str(d[1]))}`"
                for d in detail
            )

        super().__init__(message)


class SchemaVersionError(ConfigError):
    def __init__(self, found: Any, expected: int):
        self.found = found
        self.expected = expected
        super().__init__(f"Schema version `{found}` is not supported, expected `{expected}`.")


# ---------------------------------------------------------------------------------
# simulator


class SimulationError(HeedError):
    pass


class OverDenseSceneError(SimulationError):
    def __init__(self, placed: int, requested: int, attempts: int):
        self.placed = placed
        self.requested = requested
        self.attempts = attempts
        super().__init__(
            f"Only {placed} of {requested} objects could be placed without overlap "
            f"after {attempts} attempts, the scene is too dense."
        )


class InfeasibleTaskError(SimulationError):
    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(f"Task cannot be executed in this scene - {reason}")


class DisturbanceNotApplicableError(SimulationError):
    def __init__(self, mode: str, reason: str):
        self.mode = mode
        self.reason = reason
        super().__init__(f"Disturbance `{mode}` is not applicable - {reason}")


class OcclusionError(SimulationError):
    def __init__(self, sprite: str, step: int):
        self.sprite = sprite
        self.step = step
        super().__init__(
            f"Distractor `{sprite}` covers the target object's centre at step {step}, resample it."
        )


# ---------------------------------------------------------------------------------
# data


class DataError(HeedError):
    pass


class CorruptDatasetError(DataError):
    def __init__(self, path: str, detail: str):
        self.path = path
        self.detail = detail
        super().__init__(f"Dataset at `{path}` failed checksum validation - {detail}")


class DatasetVersionError(DataError):
    def __init__(self, found: Any, expected: int):
        self.found = found
        self.expected = expected
        super().__init__(f"Dataset schema version `{found}` is not supported, expected `{expected}`.")


class CorruptCheckpointError(DataError):
    def __init__(self, path: str, detail: str):
        self.path = path
        self.detail = detail
        super().__init__(f"Checkpoint `{path}` is unreadable - {detail}")


class EmptySentenceError(DataError):
    def __init__(self):
        super().__init__("Cannot encode a sentence with no tokens.")


class MalformedOneHotError(DataError):
    def __init__(self, bits_set: int):
        self.bits_set = bits_set
        super().__init__(f"A one-hot token must have exactly one bit set, found {bits_set}.")


# ---------------------------------------------------------------------------------
# models and training


class ModelError(HeedError):
    pass


class ShapeError(ModelError):
    def __init__(self, name: str, expected: Any, found: Any):
        self.name = name
        self.expected = expected
        self.found = found
        super().__init__(f"`{name}` has shape {found}, expected {expected}.")


class NumericError(ModelError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"`{name}` contains non-finite values.")


class CompatibilityError(ModelError):
    def __init__(self, detail: str):
        self.detail = detail
        super().__init__(f"Checkpoint is not compatible with this scene - {detail}")


class TrainingFailureError(HeedError):
    def __init__(
        self,
        stage: str,
        epoch: int,
        batch: Any,
        losses: Dict[str, float],
        diagnostic: Optional[str] = None,
    ):
        self.stage = stage
        self.epoch = epoch
        self.batch = batch
        self.losses = losses
        self.diagnostic = diagnostic
        message = (
            f"Training stage `{stage}` diverged in epoch {epoch} on batch `{batch}`; "
            + ", ".join(f"{k}={v}" for k, v in losses.items())
        )
        if diagnostic:
            message += f" (diagnostic checkpoint written to `{diagnostic}`)"
        super().__init__(message)
