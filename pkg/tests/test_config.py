import logging

import pytest

from pydbqubit import config as config_mod


def test_env_flag_truthy_and_falsey(monkeypatch: pytest.MonkeyPatch):
    for val in ["1", "true", "TRUE", "yes", "on"]:
        monkeypatch.setenv("PYDBQUBIT_TEST_FLAG", val)
        assert config_mod._env_flag("PYDBQUBIT_TEST_FLAG") is True

    for val in ["0", "false", "False", "no", "off", ""]:
        monkeypatch.setenv("PYDBQUBIT_TEST_FLAG", val)
        assert config_mod._env_flag("PYDBQUBIT_TEST_FLAG") is False

    monkeypatch.delenv("PYDBQUBIT_TEST_FLAG", raising=False)
    assert config_mod._env_flag("PYDBQUBIT_TEST_FLAG", default=True) is True
    assert config_mod._env_flag("PYDBQUBIT_TEST_FLAG", default=False) is False


def test_env_log_level(monkeypatch: pytest.MonkeyPatch):
    monkeypatch.setenv("PYDBQUBIT_TEST_LEVEL", "debug")
    assert config_mod._env_log_level("PYDBQUBIT_TEST_LEVEL") == logging.DEBUG

    monkeypatch.setenv("PYDBQUBIT_TEST_LEVEL", "15")
    assert config_mod._env_log_level("PYDBQUBIT_TEST_LEVEL") == 15

    monkeypatch.setenv("PYDBQUBIT_TEST_LEVEL", "chatty")
    assert config_mod._env_log_level("PYDBQUBIT_TEST_LEVEL") == logging.WARNING

    monkeypatch.delenv("PYDBQUBIT_TEST_LEVEL", raising=False)
    assert config_mod._env_log_level("PYDBQUBIT_TEST_LEVEL", default=logging.INFO) == logging.INFO
