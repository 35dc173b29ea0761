import time

import pytest

_REPORT = pytest.StashKey[dict]()


class Recorder:
    def __init__(self, store):
        self.store = store

    def __call__(self, cid, ok, detail="", started=None, budget=None, elapsed=None):
        """Record a PASS/FAIL line for acceptance criterion ``cid``."""
        tail = ""
        if started is not None or elapsed is not None:
            took = elapsed if elapsed is not None else time.perf_counter() - started
            tail = f" [{took:.1f} s" + (f" / budget {budget:g} s]" if budget else "]")
        self.store[cid] = f"{cid:<4} {'PASS' if ok else 'FAIL'}  {detail}{tail}"
        return ok


@pytest.fixture(scope="session")
def record(request):
    return Recorder(request.config.stash.setdefault(_REPORT, {}))


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_REPORT, None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(lines, key=lambda c: (int("".join(ch for ch in c if ch.isdigit())), c)):
        terminalreporter.write_line(lines[cid])
