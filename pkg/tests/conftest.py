import numpy as np
import pytest

# (dominant color, fraction of near-black pixels); the black-sample distance only
# sees the near-black bin, so shots must differ in how dark they are
SHOT_STYLES = [
    ((200, 40, 40), 0.10),
    ((40, 170, 70), 0.40),
    ((50, 70, 210), 0.70),
]


def make_shot_video(frames_per_shot=60, size=16, shots=SHOT_STYLES, seed=0):
    rng = np.random.default_rng(seed)
    n_pix = size * size
    video = []
    for color, dark in shots:
        for _ in range(frames_per_shot):
            frame = np.empty((n_pix, 3), dtype=np.int64)
            frame[:] = color
            frame += rng.integers(-8, 9, size=frame.shape)
            n_dark = int(round(dark * n_pix)) + int(rng.integers(-2, 3))
            frame[rng.permutation(n_pix)[:n_dark]] = rng.integers(0, 32, size=(n_dark, 3))
            video.append(np.clip(frame, 0, 255).astype(np.uint8).reshape(size, size, 3))
    return video


def smooth_keyframe(k, size=64):
    """Distinct shaded color fields, one per k in 0..3."""
    yy, xx = np.mgrid[0:size, 0:size] / (size - 1)
    base = np.array([(200, 40, 40), (40, 160, 60), (50, 70, 200), (220, 200, 50)][k], float)
    shade = 0.35 + 0.65 * ((xx + yy) / 2 if k % 2 == 0 else 1 - xx)
    return np.clip(base * shade[..., None], 0, 255).astype(np.uint8)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def record_criterion(number, title, ok, detail=""):
    line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}" + (f": {detail}" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
