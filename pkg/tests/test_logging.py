import os
import sys

sys.path.insert(1, os.path.join(sys.path[0], ".."))

import logging as stdlib_logging

import orjson

from heed import logging
from heed.logging.levels import LEVELS
from heed.logging.log_formatter import LogFormatter


def test_logger():
    logger = logging.get_logger()

    logger.error("An Error Occurred")
    logger.audit({"run_manifest": "out/run.json", "stage": "evaluate"})


def test_logger_is_shared():
    assert logging.get_logger() is logging.get_logger()


def test_extra_levels():
    logger = logging.get_logger()
    assert hasattr(logger, "audit")
    assert hasattr(logger, "alert")
    assert stdlib_logging.getLevelName(LEVELS.AUDIT) == "AUDIT"
    assert LEVELS.ALERT > LEVELS.AUDIT > LEVELS.ERROR


def test_set_log_name():
    logging.set_log_name("HEED-TEST")
    try:
        assert logging.get_logger().name == "HEED-TEST"
    finally:
        logging.set_log_name("HEED")
    assert logging.get_logger().name == "HEED"


def test_formatter_redacts_secrets():
    formatter = LogFormatter(stdlib_logging.Formatter("%(message)s"), suppress_color=True)
    record = stdlib_logging.LogRecord(
        "HEED", 20, __file__, 1, orjson.dumps({"api_key": "hunter2", "loss": 0.123456789}).decode(), None, None
    )
    line = formatter.format(record)
    assert "hunter2" not in line
    assert "redacted" in line
    assert "0.123457" in line


def test_formatter_plain_text():
    formatter = LogFormatter(stdlib_logging.Formatter("%(message)s"), suppress_color=True)
    record = stdlib_logging.LogRecord("HEED", 30, __file__, 1, "sentence `truncated`", None, None)
    assert "truncated" in formatter.format(record)


if __name__ == "__main__":  # pragma: no cover
    from tests import run_tests

    run_tests()
