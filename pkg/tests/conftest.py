import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from spectator import config, pipeline  # noqa: E402

SEED = 0
ALL_PROFILES = ("N0", "N1", "N2", "N3", "N4", "N5")

# criterion number -> (passed, detail), filled in by test_acceptance
ACCEPTANCE = {}


class DeskRun:
    """Desk-scale models trained once per session and shared by every scenario."""

    def __init__(self, workdir):
        self.cfg = config.load(desk=True)
        self.workdir = Path(workdir)
        self.models, self.histories, self.seconds = {}, {}, {}
        self.scenarios = {}

    def model(self, profile):
        if profile not in self.models:
            t = time.perf_counter()
            self.models[profile], self.histories[profile] = pipeline.cached_model(
                self.cfg, profile, SEED, self.workdir)
            self.seconds[profile] = time.perf_counter() - t
        return self.models[profile]

    def scenario(self, key):
        key = str(key)
        if key not in self.scenarios:
            for k in self.cfg.scenario(key).profiles:
                self.model(k)
            t = time.perf_counter()
            res = pipeline.run_scenario(self.cfg, key, SEED, self.workdir)
            self.scenarios[key] = (res, time.perf_counter() - t)
        return self.scenarios[key]


@pytest.fixture(scope="session")
def desk(tmp_path_factory):
    return DeskRun(tmp_path_factory.mktemp("desk"))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
