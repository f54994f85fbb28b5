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
Adds named levels to the logging module, with dict messages rendered as JSON.

Based on: https://stackoverflow.com/a/35804945
"""

import atexit
import logging
from typing import Dict

import orjson

logging_seen_warnings: Dict[int, int] = {}


def report_suppressions(message):
    from heed.logging import get_logger

    count = logging_seen_warnings.get(hash(message))

    if count:
        get_logger().warning(f'The following message was suppressed {count} time(s) - "{message}"')


def serialize_message(message) -> str:
    if isinstance(message, dict):
        try:
            message = orjson.dumps(message, option=orjson.OPT_SERIALIZE_NUMPY)
        except TypeError:
            message = str(message)
    if isinstance(message, bytes):
        message = message.decode()
    return message


def add_logging_level(level_name: str, level_num: int, method_name: str = None):
    """
    Add a level to `logging` and to the current logger class.

    `level_name` becomes an attribute of `logging` with the value `level_num`, and
    `method_name` (default `level_name.lower()`) becomes a method on both. Calling
    this for an existing level replaces its method, which is how the standard
    levels get the dict-to-JSON behaviour.

    Example:
        add_logging_level("AUDIT", 80)
        get_logger().audit({"event": "checkpoint", "path": "run/policy.ckpt"})
    """
    if not method_name:
        method_name = level_name.lower()

    def log_for_level(self, message, *args, **kwargs):
        if not self.isEnabledFor(level_num):
            return
        message = serialize_message(message)
        if level_num == logging.WARNING:
            hashed = hash(message)
            if hashed in logging_seen_warnings:
                logging_seen_warnings[hashed] += 1
                return
            logging_seen_warnings[hashed] = 0
            atexit.register(report_suppressions, message)

        self._log(level_num, message, args, **kwargs)

    def log_to_root(message, *args, **kwargs):
        logging.log(level_num, serialize_message(message), *args, **kwargs)

    logging.addLevelName(level_num, level_name)
    setattr(logging, level_name, level_num)
    setattr(logging.getLoggerClass(), method_name, log_for_level)
    setattr(logging, method_name, log_to_root)
