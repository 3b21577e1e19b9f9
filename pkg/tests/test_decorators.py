import logging

import pytest

from randcorr_hub.core.exceptions import InvalidParameterError
from randcorr_hub.core.statekit import ghz
from randcorr_hub.decorators import log_action


@log_action(action_name="SUMMARY", verbose=True)
def summarize(state, seed=None):
    return {"C": 4.0}


@log_action(action_name="FAILING")
def failing(state):
    raise InvalidParameterError("n", 0, "нужна хотя бы одна частица")


def test_log_action_records_context(caplog):
    with caplog.at_level(logging.INFO, logger="randcorr"):
        assert summarize(ghz(3), seed=3) == {"C": 4.0}
    message = caplog.records[-1].getMessage()
    assert "SUMMARY" in message
    assert "parties=3" in message
    assert "seed=3" in message
    assert "C=4.0" in message
    assert "result=OK" in message


def test_log_action_reraises_and_logs_error(caplog):
    with caplog.at_level(logging.INFO, logger="randcorr"):
        with pytest.raises(InvalidParameterError):
            failing(ghz(3))
    record = caplog.records[-1]
    assert record.levelno == logging.ERROR
    assert "error_type='InvalidParameterError'" in record.getMessage()
