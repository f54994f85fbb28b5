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

from .create_logger import get_logger
from .create_logger import set_log_name
from .levels import LEVELS
from .levels import LEVELS_TO_STRING

__all__ = ("get_logger", "set_log_name", "LEVELS", "LEVELS_TO_STRING")
