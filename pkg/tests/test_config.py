import sys

import pytest

from config import MIN_PYTHON, PROBLEM_PRESETS, require_python


@pytest.mark.parametrize('version', [(3, 10, 14), (3, 9, 0), (2, 7, 18)])
def test_old_interpreters_refused(version):
    with pytest.raises(RuntimeError, match='needs Python >= 3.11'):
        require_python(version)


def test_running_interpreter_accepted():
    assert MIN_PYTHON == (3, 11)
    require_python(sys.version_info)
    require_python((3, 11, 0))
    require_python((4, 0, 0))


def test_time_delay_preset_draws_normal_entries():
    assert PROBLEM_PRESETS['time_delay']['params']['entries'] == 'normal'
