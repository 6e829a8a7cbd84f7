import random

import pytest


def pytest_runtest_makereport(item, call):
    # lets the acceptance suite print one PASS/FAIL line per criterion
    if call.when == "call":
        item.rep_failed = call.excinfo is not None

from smartdoor.model import GrayImage, SystemConfig


def make_image(width, height, pixels):
    return GrayImage(width, height, tuple(pixels))


def uniform_image(width=16, height=16, value=7):
    return make_image(width, height, [value] * (width * height))


def block_frame(width=16, height=16, background=10, block=None,
                left=4, top=4, size=6):
    """Dark frame with a textured bright block: the stand-in for a face.

    The block has internal structure so the recognition service can
    re-detect inside the cropped region.
    """
    if block is None:
        block = [150 + ((x * 7 + y * 13) % 80)
                 for y in range(size) for x in range(size)]
    pixels = [background] * (width * height)
    for y in range(size):
        for x in range(size):
            pixels[(top + y) * width + (left + x)] = block[y * size + x]
    return make_image(width, height, pixels)


def face_frame(seed=0, width=16, height=16):
    """Deterministic pseudo-face; different seeds give dissimilar patterns."""
    rng = random.Random(seed)
    size = 6
    block = [120 + rng.randrange(0, 120) for _ in range(size * size)]
    return block_frame(width, height, block=block)


def random_image(rng, width=32, height=32, lo=0, hi=255):
    return make_image(width, height,
                      [rng.randint(lo, hi) for _ in range(width * height)])


@pytest.fixture
def config(tmp_path):
    return SystemConfig(
        admin_token="hunter2",
        recognition_endpoint="http://127.0.0.1:1",  # overridden by harnesses
        person_group_id="home",
        api_key="sesame",
        relock_timeout=5.0,
        solenoid_latency=50,
    )
