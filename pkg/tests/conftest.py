from __future__ import annotations

import numpy as np
import pytest

from depthcal.geometry import Pose, Quaternion, rotation_distance

# One line per acceptance check, replayed after the test summary so the
# verdicts are visible even with output capture on.
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def criterion():
    def record(name: str, passed: bool, detail: str) -> None:
        line = f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance checks")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_quaternion(rng: np.random.Generator) -> Quaternion:
    v = rng.normal(size=4)
    return Quaternion.from_array(v / np.linalg.norm(v))


def random_pose(rng: np.random.Generator, t_scale: float = 1.0) -> Pose:
    return Pose(random_quaternion(rng), rng.uniform(-t_scale, t_scale, size=3))


def assert_pose_close(a: Pose, b: Pose, atol_t: float = 1e-9, atol_r: float = 1e-9):
    dt = float(np.linalg.norm(a.translation - b.translation))
    dr = rotation_distance(a.rotation, b.rotation)
    assert dt <= atol_t, f"translation differs by {dt:.3e} m (allowed {atol_t:.1e})"
    assert dr <= atol_r, f"rotation differs by {dr:.3e} rad (allowed {atol_r:.1e})"
