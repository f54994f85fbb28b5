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

from heed.training.checkpoint import Checkpoint
from heed.training.history import LossHistory
from heed.training.policy_training import finetune_motor
from heed.training.policy_training import load_policies
from heed.training.policy_training import train_baseline
from heed.training.policy_training import train_end_to_end
from heed.training.teacher_training import load_teacher
from heed.training.teacher_training import precompute_attention
from heed.training.teacher_training import teacher_checkpoint
from heed.training.teacher_training import train_teacher
