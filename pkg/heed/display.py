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
Terminal and text rendering for reports and log lines.

Colour markers are written as \\001NAMEm and exchanged for ANSI codes (or removed)
by `colorizer`, so the same table text can go to a terminal or to a report file.
"""

import math
from typing import List
from typing import Optional

import numpy

COLORS = {
    "\001OFFm": "\033[0m",
    "\001PUNCm": "\033[38;5;102m",
    "\001HEADm": "\033[1m",
    "\001VARCHARm": "\033[38;2;255;171;82m",  # orange
    "\001CONSTm": "\033[38;2;139;233;253m\033[3m",  # cyan, italic
    "\001NULLm": "\033[38;2;98;114;164m\033[3m",  # grey, italic
    "\001TYPEm": "\033[38;2;98;114;164m",  # grey
    "\001VALUEm": "\033[38;2;139;233;253m",  # cyan
    "\001FLOATm": "\033[38;2;255;121;198m",  # pink
    "\001INTEGERm": "\033[38;2;189;147;249m",  # purple
    "\001DATEm": "\033[38;2;80;250;123m",  # green
    "\001TIMEm": "\033[38;2;26;185;67m",
    "\001KEYm": "\033[38;2;189;147;249m",  # purple
    "\001REDm": "\033[38;5;203m",
    "\001GREENm": "\033[38;2;80;250;123m",
    "\001YELLOWm": "\033[38;5;228m",
    "\001PURPLEm": "\033[38;2;189;147;249m",
    "\001CYANm": "\033[38;2;139;233;253m",
    "\001WHITEm": "\033[0;37m",
    "\001PINKm": "\033[38;2;255;121;198m",
    "\001BOLD_REDm": "\033[1;31m",
    "\001BOLD_CYANm": "\033[1;36m",
    "\001BOLD_WHITEm": "\033[1;37m",
}


def colorizer(record, can_colorize=True):
    record = str(record).replace(r"\u0001", "\x01")
    for k, v in COLORS.items():
        record = record.replace(k, v if can_colorize else "")
    return record


def format_value(value, width: int) -> str:
    if isinstance(value, numpy.generic):
        value = value.item()
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "\001NULLm" + "-".rjust(width)[:width] + "\001OFFm"
    if isinstance(value, bool):
        # bool is a subclass of int, test it first
        return "\001CONSTm" + str(value).rjust(width)[:width] + "\001OFFm"
    if isinstance(value, int):
        return "\001INTEGERm" + str(value).rjust(width)[:width] + "\001OFFm"
    if isinstance(value, float):
        return "\001FLOATm" + f"{value:.1f}".rjust(width)[:width] + "\001OFFm"
    return "\001VARCHARm" + str(value).ljust(width)[:width] + "\001OFFm"


def data_width(values) -> int:
    widths = [
        len(f"{v:.1f}") if isinstance(v, (float, numpy.floating)) else len(str(v)) for v in values
    ]
    return max(widths, default=0)


def ascii_table(
    frame,
    title: Optional[str] = None,
    max_column_width: int = 30,
    colorize: bool = False,
    footer: Optional[List[str]] = None,
) -> str:
    """
    Render a pandas DataFrame as a boxed text table.

    Parameters:
        frame: pandas.DataFrame
            The rows to render; the index is not shown.
        title: str (optional)
            A line printed above the table.
        max_column_width: int
            Values wider than this are truncated.
        colorize: bool
            Exchange colour markers for ANSI codes, otherwise strip them.
        footer: list of str (optional)
            Lines printed below the table.

    Returns:
        string
    """
    columns = [str(c) for c in frame.columns]
    col_width = [
        min(max(len(name), data_width(frame[col].tolist())), max_column_width)
        for name, col in zip(columns, frame.columns)
    ]

    lines = []
    if title:
        lines.append(f"\001HEADm{title}\001OFFm")
    lines.append("┌─" + "─┬─".join("─" * w for w in col_width) + "─┐")
    lines.append(
        "│ "
        + " │ ".join("\001HEADm" + c.center(w)[:w] + "\001OFFm" for c, w in zip(columns, col_width))
        + " │"
    )
    lines.append("╞═" + "═╪═".join("═" * w for w in col_width) + "═╡")
    for row in frame.itertuples(index=False):
        lines.append("│ " + " │ ".join(format_value(v, w) for v, w in zip(row, col_width)) + " │")
    lines.append("└─" + "─┴─".join("─" * w for w in col_width) + "─┘")
    for line in footer or []:
        lines.append(line)

    return colorizer("\n".join(lines), colorize)
