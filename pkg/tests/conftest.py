import io
from pathlib import Path

import numpy as np
import pytest
from PIL import Image
from scipy import ndimage

DATA = Path(__file__).parent / "data"
NATURAL = ("astronaut", "chelsea", "coffee", "rocket", "immunohistochemistry")

NOISE_LEVELS = (4, 8, 16, 32, 64)
BLUR_LEVELS = (0.5, 1.0, 2.0, 3.0, 5.0)
JPEG_LEVELS = (90, 70, 50, 30, 10)


def synthetic_image(rng, h=96, w=128):
    """Smooth color field + hard-edged shapes + fine texture, in [0, 255]."""
    field = np.stack(
        [ndimage.gaussian_filter(rng.normal(size=(h, w)), 10) for _ in range(3)], axis=-1
    )
    field = (field - field.min()) / (np.ptp(field) + 1e-12) * 160 + 40
    yy, xx = np.mgrid[:h, :w]
    for _ in range(4):
        cy, cx, r = rng.uniform(0, h), rng.uniform(0, w), rng.uniform(6, 24)
        mask = (yy - cy) ** 2 + (xx - cx) ** 2 < r * r
        field[mask] = rng.uniform(0, 255, 3)
    texture = ndimage.gaussian_filter(rng.normal(size=(h, w, 3)), (1, 1, 0)) * 25
    return np.clip(field + texture, 0, 255).round()


def add_noise(img, sigma, seed=0):
    noise = np.random.default_rng(seed).normal(size=img.shape)
    return np.clip(img + sigma * noise, 0, 255)


def blur(img, sigma):
    return ndimage.gaussian_filter(img, (sigma, sigma, 0), mode="reflect")


def jpeg(img, quality):
    buf = io.BytesIO()
    Image.fromarray(np.clip(img, 0, 255).round().astype(np.uint8)).save(buf, "JPEG", quality=quality)
    buf.seek(0)
    return np.asarray(Image.open(buf).convert("RGB"), dtype=np.float64)


def ladders(ref):
    return {
        "noise": [add_noise(ref, s) for s in NOISE_LEVELS],
        "blur": [blur(ref, s) for s in BLUR_LEVELS],
        "jpeg": [jpeg(ref, q) for q in JPEG_LEVELS],
    }


def load_natural(name):
    return np.asarray(Image.open(DATA / f"{name}.png").convert("RGB"), dtype=np.float64)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def natural_images():
    return {n: load_natural(n) for n in NATURAL}


ACCEPTANCE = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = {}


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, {})
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(lines):
        terminalreporter.write_line(lines[key])
