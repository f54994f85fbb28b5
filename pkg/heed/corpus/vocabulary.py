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
Command grammar and vocabulary.

Commands are produced from a small template grammar, three phrasings per verb, so
the vocabulary is closed: every token the grammar can produce is in it.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Dict
from typing import List
from typing import Sequence
from typing import Tuple

import numpy

from heed.exceptions import EmptySentenceError
from heed.sim.catalog import Catalog

TEMPLATES: Dict[str, Tuple[str, ...]] = {
    "pick_up": (
        "pick up the {color} {shape}",
        "grab the {color} {shape}",
        "lift the {color} {shape}",
    ),
    "push_left": (
        "push the {color} {shape} to the left",
        "slide the {color} {shape} to the left",
        "move the {color} {shape} left",
    ),
}


def tokenize(text: str) -> Tuple[str, ...]:
    return tuple(token.strip(".,!?") for token in text.lower().split() if token.strip(".,!?"))


@dataclass(frozen=True)
class Vocabulary:
    words: Tuple[str, ...]

    @classmethod
    def from_catalog(cls, catalog: Catalog) -> "Vocabulary":
        tokens = set()
        for templates in TEMPLATES.values():
            for template in templates:
                for shape in catalog.shapes:
                    for color in catalog.colors:
                        tokens.update(tokenize(template.format(color=color, shape=shape)))
        return cls(words=tuple(sorted(tokens)))

    @cached_property
    def _index(self) -> Dict[str, int]:
        return {word: i for i, word in enumerate(self.words)}

    @property
    def size(self) -> int:
        return len(self.words)

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self._index

    def index(self, word: str) -> int:
        return self._index[word]

    def ids(self, tokens: Sequence[str]) -> List[int]:
        return [self._index[token] for token in tokens]

    def one_hots(self, tokens: Sequence[str]) -> numpy.ndarray:
        """L x |V| matrix of token indicators."""
        if not tokens:
            raise EmptySentenceError()
        matrix = numpy.zeros((len(tokens), self.size), dtype=numpy.float32)
        matrix[numpy.arange(len(tokens)), self.ids(tokens)] = 1.0
        return matrix

    def word_set(self, tokens: Sequence[str]) -> numpy.ndarray:
        indicator = numpy.zeros(self.size, dtype=numpy.float32)
        indicator[self.ids(tokens)] = 1.0
        return indicator


@dataclass(frozen=True, eq=False)
class Command:
    text: Tuple[str, ...]
    verb: str
    shape_id: int
    color_id: int
    shape_onehot: numpy.ndarray
    color_onehot: numpy.ndarray
    word_set: numpy.ndarray

    @property
    def sentence(self) -> str:
        return " ".join(self.text)

    def to_dict(self) -> dict:
        return {
            "text": self.sentence,
            "verb": self.verb,
            "shape_id": self.shape_id,
            "color_id": self.color_id,
        }

    @classmethod
    def from_dict(cls, data: dict, catalog: Catalog, vocabulary: Vocabulary) -> "Command":
        return make_command(
            data["text"], data["verb"], data["shape_id"], data["color_id"], catalog, vocabulary
        )


def make_command(
    text: str, verb: str, shape_id: int, color_id: int, catalog: Catalog, vocabulary: Vocabulary
) -> Command:
    tokens = tokenize(text)
    if not tokens:
        raise EmptySentenceError()
    shape_onehot = numpy.zeros(catalog.n, dtype=numpy.float32)
    shape_onehot[shape_id] = 1.0
    color_onehot = numpy.zeros(catalog.m, dtype=numpy.float32)
    color_onehot[color_id] = 1.0
    return Command(
        text=tokens,
        verb=verb,
        shape_id=shape_id,
        color_id=color_id,
        shape_onehot=shape_onehot,
        color_onehot=color_onehot,
        word_set=vocabulary.word_set(tokens),
    )


def grammar_sample(
    target, verb: str, seed: int, catalog: Catalog, vocabulary: Vocabulary
) -> Command:
    """
    A command naming `target` (anything with shape_id and color_id). The phrasing
    is template `seed % 3` of the verb, template 0 being the canonical one.
    """
    templates = TEMPLATES[verb]
    template = templates[seed % len(templates)]
    text = template.format(
        color=catalog.colors[target.color_id], shape=catalog.shapes[target.shape_id]
    )
    return make_command(text, verb, target.shape_id, target.color_id, catalog, vocabulary)
