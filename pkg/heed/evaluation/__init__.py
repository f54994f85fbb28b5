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

from heed.evaluation.attention import TeacherReport
from heed.evaluation.attention import evaluate_teacher
from heed.evaluation.gorilla import LeakageReport
from heed.evaluation.gorilla import gorilla_analysis
from heed.evaluation.harness import SUITES
from heed.evaluation.harness import DisturbanceSpec
from heed.evaluation.harness import SuiteReport
from heed.evaluation.harness import TrialRecord
from heed.evaluation.harness import run_policy_episode
from heed.evaluation.harness import run_suite
from heed.evaluation.policies import PolicyAgent
