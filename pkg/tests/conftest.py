from __future__ import annotations

import os
import time
import sys

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, os.path.dirname(__file__))

from fracdual import ClosedFormFn  # noqa: E402

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

coef = st.floats(-3.0, 3.0, allow_nan=False).map(lambda v: round(v, 3))

closed_forms = st.one_of(
    coef.map(ClosedFormFn.const),
    st.lists(coef, min_size=1, max_size=5).map(lambda c: ClosedFormFn.poly(*c)),
    st.builds(ClosedFormFn.power, st.floats(-0.9, 4.0).map(lambda v: round(v, 2)), st.booleans()),
    st.floats(-2.0, 2.0).map(lambda v: ClosedFormFn.exp(round(v, 3))),
    st.builds(ClosedFormFn.sin, st.floats(-4.0, 4.0), st.floats(-1.0, 1.0)),
    st.builds(ClosedFormFn.cos, st.floats(-4.0, 4.0), st.floats(-1.0, 1.0)),
)

fractional_orders = st.sampled_from([0.1, 0.25, 0.3, 0.5, 0.6, 0.75, 0.9])

intervals = st.tuples(st.floats(-2.0, 1.0), st.floats(0.25, 2.5)).map(
    lambda t: (round(t[0], 3), round(t[0], 3) + round(t[1], 3))
)


SUITE_LIMIT_S = 60.0
_session_start = time.perf_counter()


def _acceptance_lines(terminalreporter) -> list[tuple[str, str, str]]:
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when != "call":
                continue
            props = dict(rep.user_properties)
            if "criterion" in props:
                lines.append((props["criterion"], "PASS" if outcome == "passed" else "FAIL", props.get("detail", "")))
    return sorted(lines, key=lambda item: int(item[0].split()[0]))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = _acceptance_lines(terminalreporter)
    if not lines:
        return
    elapsed = time.perf_counter() - _session_start
    terminalreporter.section("acceptance criteria")
    for name, verdict, detail in lines:
        if name.startswith("8 ") and elapsed >= SUITE_LIMIT_S:
            verdict = "FAIL"
        terminalreporter.write_line(f"{verdict} criterion {name}: {detail}")
    verdict = "PASS" if elapsed < SUITE_LIMIT_S else "FAIL"
    terminalreporter.write_line(f"{verdict} criterion 8 runtime: session {elapsed:.1f} s (limit {SUITE_LIMIT_S:.0f} s)")


def pytest_sessionfinish(session, exitstatus):
    if exitstatus == 0 and time.perf_counter() - _session_start >= SUITE_LIMIT_S:
        session.exitstatus = 1
