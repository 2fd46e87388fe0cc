import contextlib
import time
import types

import numpy as np
import pytest

from s3sim.double import prepare_s3_patch, projector_suite


@pytest.fixture(scope="session")
def minimal_patch():
    """2x3 layout, qubit window (0, 2), qutrit window (1, 2); logical |0, 0>."""
    st, lay, ctl = prepare_s3_patch(2, 3, (1, 2), np.random.default_rng(11))
    return st, lay, ctl, projector_suite(lay, ctl)


@pytest.fixture(scope="session")
def chain_patch():
    """One-row chain whose Ã vertices (2..5, 0) are v1..v4."""
    st, lay, ctl = prepare_s3_patch(1, 6, (1, 5), np.random.default_rng(5))
    return st, lay, ctl, projector_suite(lay, ctl)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# --- acceptance reporting -----------------------------------------------------------------
ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    return request.config.stash.setdefault(ACCEPTANCE, [])


@pytest.fixture
def criterion(acceptance_log):
    """``with criterion(n, title) as c:`` records PASS/FAIL and wall time; set ``c.note``."""

    @contextlib.contextmanager
    def run(number, title):
        box = types.SimpleNamespace(note="")
        t0 = time.perf_counter()
        try:
            yield box
        except BaseException as exc:
            dt = time.perf_counter() - t0
            msg = (str(exc).splitlines() or [type(exc).__name__])[0][:160]
            acceptance_log.append((number, title, False, dt, msg))
            print(f"criterion {number}: FAIL {title} ({dt:.1f}s): {msg}")
            raise
        dt = time.perf_counter() - t0
        acceptance_log.append((number, title, True, dt, box.note))
        print(f"criterion {number}: PASS {title} ({dt:.1f}s)")

    return run


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    parts = config.stash.get(ACCEPTANCE, [])
    if not parts:
        return
    by_id: dict = {}
    for number, title, ok, seconds, note in parts:
        by_id.setdefault((number, title), []).append((ok, seconds, note))
    terminalreporter.section("acceptance criteria")
    for (number, title), rows in sorted(by_id.items()):
        ok = all(r[0] for r in rows)
        seconds = sum(r[1] for r in rows)
        notes = "; ".join(r[2] for r in rows if r[2])
        terminalreporter.write_line(
            f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title} ({seconds:.1f}s)"
            + (f"  [{notes}]" if notes else ""))
