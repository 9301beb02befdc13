"""Regenerates tests/data/*.pgm from scikit-image sample images.

Each natural image is a 256x256 crop at native resolution, which keeps the
test suite fast without changing local image statistics. The synthetic image
mixes oriented sinusoids at several angles.
"""
import pathlib

import numpy as np
from skimage import color, data

OUT = pathlib.Path(__file__).resolve().parent.parent / "tests" / "data"


def to_u8(a):
    return np.clip(np.round(a), 0, 255).astype(np.uint8)


def crop(a, size=256):
    a = a.astype(np.float64)
    r0 = (a.shape[0] - size) // 2
    c0 = (a.shape[1] - size) // 2
    return a[r0:r0 + size, c0:c0 + size]


def save(name, img):
    img = to_u8(img)
    h, w = img.shape
    (OUT / f"{name}.pgm").write_bytes(f"P5\n{w} {h}\n255\n".encode() + img.tobytes())


def directional(size=256):
    y, x = np.mgrid[0:size, 0:size].astype(np.float64)
    img = np.zeros((size, size))
    q = size // 2
    for (r0, c0), deg, period in [((0, 0), 30, 7.0), ((0, q), 60, 5.0), ((q, 0), 120, 9.0), ((q, q), 150, 6.0)]:
        t = np.deg2rad(deg)
        u = x * np.cos(t) + y * np.sin(t)
        img[r0:r0 + q, c0:c0 + q] = (128 + 90 * np.sin(2 * np.pi * u / period))[r0:r0 + q, c0:c0 + q]
    return img


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    save("camera", crop(data.camera()))
    save("astronaut", crop(color.rgb2gray(data.astronaut()) * 255.0))
    save("brick", crop(data.brick()))
    save("directional", directional())


if __name__ == "__main__":
    main()
