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

import hashlib
import logging
import os
import re
from typing import Dict

import orjson

from heed.display import colorizer

# values under keys matching these are replaced with a short hash
KEYS_TO_SANITIZE = [
    r"password$",
    r"pwd$",
    r".*_secret$",
    r".*_key$",
    r"_token$",
    r"credentials",
]
COMPILED_KEYS_TO_SANITIZE = [
    re.compile(expression, re.IGNORECASE) for expression in KEYS_TO_SANITIZE
]

COLOR_EXCHANGES = {
    " ALERT    ": "\001BOLD_REDm ALERT    \001OFFm",
    " ERROR    ": "\001REDm ERROR    \001OFFm",
    " DEBUG    ": "\001GREENm DEBUG    \001OFFm",
    " AUDIT    ": "\001YELLOWm AUDIT    \001OFFm",
    " WARNING  ": "\001BOLD_REDm WARNING  \001OFFm",
    " INFO     ": "\001BOLD_WHITEm INFO     \001OFFm",
}

FLOAT_RE = re.compile(r"^-?\d+\.\d+(e-?\d+)?$")
QUOTES_OR_BACKTICKS_RE = re.compile(r"(['`])(.*?)\1")


class LogFormatter(logging.Formatter):
    def __init__(self, orig_formatter, suppress_color: bool = False):
        """
        Wraps a formatter so dict (JSON) messages have sensitive values redacted and
        loss values shortened, and so the line is colourised when the terminal
        supports it.

        Redacted values are shown as the first 8 hex characters of their SHA256,
        which lets a value be traced across records without being disclosed.
        """
        self.orig_formatter = orig_formatter
        self.suppress_color = suppress_color

    def format(self, record):
        try:
            msg = self.orig_formatter.format(record)
        except Exception:
            msg = str(record.msg)
        return self.sanitize_record(msg)

    def _can_colorize(self) -> bool:
        if self.suppress_color:
            return False
        colorterm = os.environ.get("COLORTERM", "").lower()
        term = os.environ.get("TERM", "").lower()
        return "yes" in colorterm or "true" in colorterm or "256" in term

    def color_code(self, record: str) -> str:
        for k, v in COLOR_EXCHANGES.items():
            if k in record:
                return record.replace(k, v)
        return record

    def __getattr__(self, attr):
        return getattr(self.orig_formatter, attr)

    @staticmethod
    def hash_it(value_to_hash: str) -> str:
        return hashlib.sha256(value_to_hash.encode()).hexdigest()[:8]

    def clean_record(self, dirty_record: Dict) -> Dict:
        """
        Redact sensitive keys and round long floats (loss values) to 6 significant
        figures, recursing into nested dicts.
        """
        clean = {}
        for key, value in dirty_record.items():
            if isinstance(value, dict):
                value = self.clean_record(value)
            elif any(regex.match(key) for regex in COMPILED_KEYS_TO_SANITIZE):
                value = f"<redacted:{self.hash_it(str(value))}>"
            elif isinstance(value, float):
                value = float(f"{value:.6g}")
            clean[key] = value
        return clean

    def sanitize_record(self, record: str) -> str:
        record = self.color_code(record)
        parts = record.split("|")
        message = parts.pop()

        try:
            dirty_record = orjson.loads(message.strip())
            if not isinstance(dirty_record, dict):
                raise ValueError("not a record")
            clean = orjson.dumps(self.clean_record(dirty_record)).decode()
            clean = re.sub(r'"([^"]*)":', "\001KEYm\\1\001OFFm:", clean)
            parts.append(" " + clean)
        except ValueError:
            message = QUOTES_OR_BACKTICKS_RE.sub(r"\1\001YELLOWm\2\001OFFm\1", message)
            parts.append(" " + message.strip())

        return colorizer("|".join(parts), self._can_colorize())
