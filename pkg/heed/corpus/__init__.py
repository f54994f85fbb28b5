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

"""Command grammar, vocabulary and the demonstration corpus."""

from heed.corpus.dataset import Batch
from heed.corpus.dataset import DatasetHandle
from heed.corpus.dataset import FrameBatch
from heed.corpus.dataset import build_dataset
from heed.corpus.dataset import iterate
from heed.corpus.dataset import iterate_frames
from heed.corpus.dataset import load_dataset
from heed.corpus.vocabulary import Command
from heed.corpus.vocabulary import Vocabulary
from heed.corpus.vocabulary import grammar_sample
from heed.corpus.vocabulary import make_command
from heed.sim.episode import Demonstration

__all__ = (
    "Batch",
    "Command",
    "DatasetHandle",
    "Demonstration",
    "FrameBatch",
    "Vocabulary",
    "build_dataset",
    "grammar_sample",
    "iterate",
    "iterate_frames",
    "load_dataset",
    "make_command",
)
