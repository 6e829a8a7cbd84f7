"""Frame decoding, face detection, cropping and descriptor extraction.

The detector is deliberately simple and exactly specified: threshold the
image at mean + 0.5*stddev (population), take 4-connected components of
the foreground mask, return the bounding box of the largest one. All
threshold comparisons are done in exact integer arithmetic so results are
bit-identical across platforms.
"""

from __future__ import annotations

import math
import re
from typing import Optional

from .errors import InvalidImage, NoFaceFound
from .model import DESCRIPTOR_LEN, FaceBox, FaceDescriptor, GrayImage

RESIZE_DIM = 16


# --- PGM codec -------------------------------------------------------------

_WS = b" \t\r\n"


def _pgm_tokens(data: bytes, count: int, start: int) -> tuple[list[int], int]:
    """Read `count` whitespace-separated decimal tokens, skipping comments."""
    tokens: list[int] = []
    i = start
    n = len(data)
    while len(tokens) < count:
        while i < n and data[i:i + 1] in (b" ", b"\t", b"\r", b"\n"):
            i += 1
        if i < n and data[i:i + 1] == b"#":
            while i < n and data[i:i + 1] != b"\n":
                i += 1
            continue
        j = i
        while j < n and data[j:j + 1] not in (b" ", b"\t", b"\r", b"\n", b"#"):
            j += 1
        if j == i:
            raise InvalidImage("truncated header or pixel data")
        tok = data[i:j]
        if not tok.isdigit():
            raise InvalidImage(f"non-numeric token {tok!r}")
        tokens.append(int(tok))
        i = j
    return tokens, i


def decode_pgm(data: bytes) -> GrayImage:
    """Decode binary (P5) or plain (P2) PGM with maxval <= 255."""
    if not data:
        raise InvalidImage("empty input")
    magic = data[:2]
    if magic not in (b"P5", b"P2"):
        raise InvalidImage("unsupported magic")
    (width, height, maxval), pos = _pgm_tokens(data, 3, 2)
    if width <= 0 or height <= 0:
        raise InvalidImage("zero dimensions")
    if maxval <= 0 or maxval > 255:
        raise InvalidImage("maxval out of range")
    count = width * height
    if magic == b"P5":
        # exactly one whitespace byte separates maxval from raster
        if pos >= len(data) or data[pos:pos + 1] not in (b" ", b"\t", b"\r", b"\n"):
            raise InvalidImage("missing raster separator")
        raster = data[pos + 1:pos + 1 + count]
        if len(raster) < count:
            raise InvalidImage("truncated raster")
        pixels = tuple(raster)
    else:
        values, _ = _pgm_tokens(data, count, pos)
        pixels = tuple(values)
    for p in pixels:
        if p > maxval:
            raise InvalidImage(f"sample {p} exceeds maxval {maxval}")
    return GrayImage(width, height, pixels)


def encode_pgm(image: GrayImage) -> bytes:
    header = f"P5\n{image.width} {image.height}\n255\n".encode("ascii")
    return header + bytes(image.pixels)


# --- Integral image ----------------------------------------------------------

class IntegralImage:
    """(W+1)x(H+1) summed-area table; rectangle sums in 4 lookups."""

    def __init__(self, image: GrayImage):
        w, h = image.width, image.height
        self.width = w
        self.height = h
        table = [0] * ((w + 1) * (h + 1))
        stride = w + 1
        px = image.pixels
        for y in range(h):
            row_sum = 0
            base = y * w
            for x in range(w):
                row_sum += px[base + x]
                table[(y + 1) * stride + (x + 1)] = table[y * stride + (x + 1)] + row_sum
        self._table = table
        self._stride = stride

    def at(self, x: int, y: int) -> int:
        """Sum of all pixels with column < x and row < y."""
        return self._table[y * self._stride + x]

    def rect_sum(self, left: int, top: int, width: int, height: int) -> int:
        t, s = self._table, self._stride
        x0, y0, x1, y1 = left, top, left + width, top + height
        return t[y1 * s + x1] - t[y0 * s + x1] - t[y1 * s + x0] + t[y0 * s + x0]


def integral(image: GrayImage) -> IntegralImage:
    return IntegralImage(image)


# --- Detection ----------------------------------------------------------------

def _foreground_mask(image: GrayImage) -> list[bool]:
    """Pixels strictly above mean + 0.5*population stddev, exact arithmetic.

    p > S/n + sqrt(n*S2 - S^2)/(2n)  <=>  2(n*p - S) > sqrt(D), D = n*S2 - S^2
    with both sides non-negative, so squares compare exactly in integers.
    """
    n = image.width * image.height
    s = sum(image.pixels)
    s2 = sum(p * p for p in image.pixels)
    d = n * s2 - s * s
    mask = []
    for p in image.pixels:
        lhs = n * p - s
        mask.append(lhs > 0 and 4 * lhs * lhs > d)
    return mask


def detect_face(image: GrayImage, min_area_fraction: float) -> FaceBox:
    """Bounding box of the largest 4-connected foreground component.

    Ties on pixel count break toward the smaller (top, left) bounding box.
    """
    if image.width < 4 or image.height < 4:
        raise InvalidImage("image smaller than 4x4")
    w, h = image.width, image.height
    mask = _foreground_mask(image)
    seen = [False] * (w * h)
    best: Optional[tuple[int, int, int, FaceBox]] = None
    for start in range(w * h):
        if not mask[start] or seen[start]:
            continue
        stack = [start]
        seen[start] = True
        count = 0
        min_x = min_y = w + h
        max_x = max_y = -1
        while stack:
            idx = stack.pop()
            count += 1
            y, x = divmod(idx, w)
            min_x, max_x = min(min_x, x), max(max_x, x)
            min_y, max_y = min(min_y, y), max(max_y, y)
            for nx, ny in ((x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)):
                if 0 <= nx < w and 0 <= ny < h:
                    nidx = ny * w + nx
                    if mask[nidx] and not seen[nidx]:
                        seen[nidx] = True
                        stack.append(nidx)
        box = FaceBox(min_x, min_y, max_x - min_x + 1, max_y - min_y + 1)
        key = (-count, box.top, box.left)
        if best is None or key < best[:3]:
            best = (-count, box.top, box.left, box)
    if best is None:
        raise NoFaceFound("foreground mask is empty")
    if -best[0] < min_area_fraction * w * h:
        raise NoFaceFound("largest component below area floor")
    return best[3]


def crop(image: GrayImage, box: FaceBox) -> GrayImage:
    box.check_within(image)
    px = image.pixels
    out = []
    for y in range(box.top, box.top + box.height):
        base = y * image.width
        out.extend(px[base + box.left:base + box.left + box.width])
    return GrayImage(box.width, box.height, tuple(out))


# --- Resampling and descriptor --------------------------------------------------

def resize_16(image: GrayImage) -> list[float]:
    """Box-filter resample to 16x16, row-major floats.

    Cell (i,j) averages source pixels over [j*W/16,(j+1)*W/16) x
    [i*H/16,(i+1)*H/16) with fractional coverage weights. Cell boundaries
    are dyadic (division by 16), so they are exact in binary floating point.
    """
    w, h = image.width, image.height
    px = image.pixels
    out = [0.0] * (RESIZE_DIM * RESIZE_DIM)
    for i in range(RESIZE_DIM):
        y0 = i * h / RESIZE_DIM
        y1 = (i + 1) * h / RESIZE_DIM
        ys = range(int(math.floor(y0)), int(math.ceil(y1)))
        for j in range(RESIZE_DIM):
            x0 = j * w / RESIZE_DIM
            x1 = (j + 1) * w / RESIZE_DIM
            total = 0.0
            for y in ys:
                wy = min(y + 1, y1) - max(y, y0)
                if wy <= 0:
                    continue
                base = y * w
                for x in range(int(math.floor(x0)), int(math.ceil(x1))):
                    wx = min(x + 1, x1) - max(x, x0)
                    if wx <= 0:
                        continue
                    total += wy * wx * px[base + x]
            out[i * RESIZE_DIM + j] = total / ((x1 - x0) * (y1 - y0))
    return out


DEGENERATE_NORM_FLOOR = 1e-12


def extract_descriptor(face: GrayImage) -> FaceDescriptor:
    """Mean-centered, L2-normalized 16x16 resample of the crop.

    Uniform crops have zero variance and map to the all-zero degenerate
    descriptor.
    """
    cells = resize_16(face)
    mean = math.fsum(cells) / DESCRIPTOR_LEN
    centered = [c - mean for c in cells]
    norm = math.sqrt(math.fsum(c * c for c in centered))
    if norm < DEGENERATE_NORM_FLOOR:
        return FaceDescriptor(tuple([0.0] * DESCRIPTOR_LEN))
    return FaceDescriptor(tuple(c / norm for c in centered))
