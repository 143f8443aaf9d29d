import pytest

import acceptance_log


@pytest.fixture
def toy_files(tmp_path):
    (tmp_path / "train.txt").write_text("a\tr\tb\nb\tr\tc\n", encoding="utf-8")
    (tmp_path / "valid.txt").write_text("", encoding="utf-8")
    (tmp_path / "test.txt").write_text("", encoding="utf-8")
    return tmp_path


def pytest_terminal_summary(terminalreporter):
    if acceptance_log.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_log.RESULTS:
            terminalreporter.write_line(line)
