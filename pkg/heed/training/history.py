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

"""Loss bookkeeping for training runs."""

import math
from collections import defaultdict
from dataclasses import dataclass
from dataclasses import field
from typing import Any
from typing import Dict
from typing import List

import pyarrow
import pyarrow.csv

from heed.logging import get_logger

logger = get_logger()


class RunningMeans:
    """Accumulates per-batch loss components, weighted by batch size."""

    def __init__(self):
        self._sums: Dict[str, float] = defaultdict(float)
        self._count = 0

    def add(self, losses: Dict[str, float], weight: int = 1):
        for name, value in losses.items():
            self._sums[name] += value * weight
        self._count += weight

    def means(self) -> Dict[str, float]:
        if self._count == 0:
            return {}
        return {name: total / self._count for name, total in sorted(self._sums.items())}


@dataclass
class LossHistory:
    stage: str
    records: List[Dict[str, Any]] = field(default_factory=list)

    def record(self, epoch: int, split: str, means: Dict[str, float]):
        entry = {"stage": self.stage, "epoch": epoch, "split": split, **means}
        self.records.append(entry)
        logger.info(entry)

    def last(self, split: str) -> Dict[str, Any]:
        matches = [r for r in self.records if r["split"] == split]
        return matches[-1] if matches else {}

    def to_table(self) -> pyarrow.Table:
        columns: List[str] = []
        for record in self.records:
            columns.extend(key for key in record if key not in columns)
        return pyarrow.Table.from_pydict(
            {key: [record.get(key) for record in self.records] for key in columns}
        )

    def to_csv(self, path: str):
        pyarrow.csv.write_csv(self.to_table(), path)


def all_finite(losses: Dict[str, float]) -> bool:
    return all(math.isfinite(v) for v in losses.values())
