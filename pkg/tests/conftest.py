import hypothesis
import numpy as np
import pytest

from pyramid_sim.config import ScenarioConfig
from pyramid_sim.harness import simulate
from pyramid_sim.world import build_world

hypothesis.settings.register_profile("default", max_examples=60, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile("default")

SMALL = dict(n=64, num_landmarks=4, horizon_hours=240.0, learning_hours=168.0,
             replication_degrees=(4,), num_owners=4)


@pytest.fixture
def small_cfg():
    return ScenarioConfig(**SMALL)


@pytest.fixture
def small_world(small_cfg):
    return build_world(small_cfg, seed=3)


@pytest.fixture(scope="session")
def small_run():
    return simulate(ScenarioConfig(**SMALL), 1)


@pytest.fixture(scope="session")
def desk_world():
    """Desk-scale world after the learning phase, before any placement."""
    from pyramid_sim.harness import learn

    world = build_world(ScenarioConfig(n=512, horizon_hours=720.0, replication_degrees=(14,)), seed=5)
    learn(world)
    return world


# -- acceptance reporting --------------------------------------------------

_CRITERIA: dict[int, tuple[str, str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or report.when != "call":
        return
    number, title = mark.args
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    _CRITERIA[number] = (title, "PASS" if report.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, verdict, detail = _CRITERIA[number]
        line = f"criterion {number}: {verdict}  {title}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
