#!/usr/bin/env python3
"""Write stand-ins for the six standard test images as 8-bit PGM/PPM.

The classic files are not redistributable here, so public-domain images
bundled with scikit-image are resized (short side 128) and center-cropped to
128x128 under the canonical names. Any user-supplied set with the same names
can replace them.
"""
import argparse
import pathlib

import numpy as np
from PIL import Image
from skimage import data

SOURCES = {
    "cameraman": (data.camera, "L"),
    "house": (data.rocket, "L"),
    "lena": (data.astronaut, "L"),
    "boat": (lambda: data.stereo_motorcycle()[0], "L"),
    "house_c": (data.rocket, "RGB"),
    "peppers": (data.coffee, "RGB"),
}


def square(img: Image.Image, size: int) -> Image.Image:
    w, h = img.size
    scale = size / min(w, h)
    img = img.resize((max(size, round(w * scale)), max(size, round(h * scale))), Image.LANCZOS)
    w, h = img.size
    left, top = (w - size) // 2, (h - size) // 2
    return img.crop((left, top, left + size, top + size))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=pathlib.Path(__file__).resolve().parent.parent / "data")
    ap.add_argument("--size", type=int, default=128)
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, (load, mode) in SOURCES.items():
        img = square(Image.fromarray(np.asarray(load())).convert(mode), args.size)
        ext = "pgm" if mode == "L" else "ppm"
        img.save(out / f"{name}.{ext}")
        print(out / f"{name}.{ext}")


if __name__ == "__main__":
    main()
