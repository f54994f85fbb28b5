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

"""Networks: the sentence encoder, the attention teacher, the vision net and the motor net."""

from heed.models.motor import MixtureParams
from heed.models.motor import MotorNet
from heed.models.motor import mdn_loss
from heed.models.motor import mdn_sample
from heed.models.policy import VisuomotorPolicy
from heed.models.teacher import AttentionHead
from heed.models.teacher import AttentionTeacher
from heed.models.text_encoder import TextEncoder
from heed.models.vision import VisionNet

__all__ = (
    "AttentionHead",
    "AttentionTeacher",
    "MixtureParams",
    "MotorNet",
    "TextEncoder",
    "VisionNet",
    "VisuomotorPolicy",
    "mdn_loss",
    "mdn_sample",
)
