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
Sentence encoder: word one-hots are embedded by a learned matrix and fed through a
gated recurrent cell; the sentence encoding u is the last hidden state.
"""

from typing import List
from typing import Sequence
from typing import Tuple

import torch
from torch import nn
from torch.nn.utils.rnn import pack_padded_sequence

from heed.exceptions import EmptySentenceError
from heed.exceptions import MalformedOneHotError
from heed.logging import get_logger

logger = get_logger()

CELLS = {"lstm": nn.LSTM, "gru": nn.GRU}


def check_onehot(onehot: torch.Tensor):
    bits = (onehot != 0).sum(dim=-1)
    valid = (bits == 1) & ((onehot == 0) | (onehot == 1)).all(dim=-1)
    if not bool(valid.all()):
        raise MalformedOneHotError(int(bits[~valid].reshape(-1)[0]))


class TextEncoder(nn.Module):
    def __init__(self, vocabulary_size: int, d_x: int, d_h: int, max_len: int, cell: str = "lstm"):
        super().__init__()
        self.vocabulary_size = vocabulary_size
        self.d_x = d_x
        self.d_h = d_h
        self.max_len = max_len
        self.cell_type = cell
        self.W_omega = nn.Parameter(torch.randn(vocabulary_size, d_x) * 0.1)
        self.cell = CELLS[cell](d_x, d_h, batch_first=True)

    def embed(self, onehot: torch.Tensor) -> torch.Tensor:
        """w = x W_omega for one-hot rows x (any leading shape)."""
        check_onehot(onehot)
        return onehot.to(self.W_omega.dtype) @ self.W_omega

    def _truncate(self, onehots: torch.Tensor, lengths: torch.Tensor):
        longest = int(lengths.max())
        if longest > self.max_len:
            logger.warning({"truncated_sentence": longest, "max_len": self.max_len})
            onehots = onehots[:, : self.max_len]
            lengths = lengths.clamp(max=self.max_len)
        return onehots, lengths

    def forward(self, onehots: torch.Tensor, lengths: torch.Tensor) -> torch.Tensor:
        """
        onehots: B x L x |V| right-padded with zero rows; lengths: B.
        Returns u, B x d_h.
        """
        lengths = torch.as_tensor(lengths, dtype=torch.long).cpu()
        if onehots.shape[1] == 0 or bool((lengths < 1).any()):
            raise EmptySentenceError()
        onehots, lengths = self._truncate(onehots, lengths)

        positions = torch.arange(onehots.shape[1]).unsqueeze(0)
        real = positions < lengths.unsqueeze(1)
        check_onehot(onehots[real])
        embedded = onehots.to(self.W_omega.dtype) @ self.W_omega  # padding rows embed to zero

        packed = pack_padded_sequence(embedded, lengths, batch_first=True, enforce_sorted=False)
        _, state = self.cell(packed)
        hidden = state[0] if isinstance(state, tuple) else state
        return hidden[-1]

    def encode_sentence(self, onehots: torch.Tensor) -> torch.Tensor:
        """L x |V| one-hots of one sentence to its d_h encoding."""
        if onehots.ndim != 2 or onehots.shape[0] == 0:
            raise EmptySentenceError()
        return self(onehots.unsqueeze(0), torch.tensor([onehots.shape[0]]))[0]


def pad_sentences(
    sentences: Sequence[Sequence[str]], vocabulary, dtype=torch.float32
) -> Tuple[torch.Tensor, torch.Tensor]:
    """Token sentences to a right-padded B x L x |V| one-hot tensor and lengths."""
    if any(len(s) == 0 for s in sentences):
        raise EmptySentenceError()
    lengths: List[int] = [len(s) for s in sentences]
    onehots = torch.zeros(len(sentences), max(lengths, default=0), vocabulary.size, dtype=dtype)
    for row, sentence in enumerate(sentences):
        onehots[row, torch.arange(len(sentence)), vocabulary.ids(sentence)] = 1.0
    return onehots, torch.tensor(lengths, dtype=torch.long)
