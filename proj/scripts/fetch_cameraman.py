#!/usr/bin/env python3
"""Fetch the classic 256x256 Cameraman test image and write it as a binary PGM.

The image is not redistributed with this repository. scikit-image shipped it
(as a 512x512 upsampled copy) up to release 0.17.2; this script downloads that
wheel through pip, extracts camera.png and keeps every second row and column.

Usage: fetch_cameraman.py OUTPUT_DIR
"""
import io
import pathlib
import subprocess
import sys
import tempfile
import zipfile

WHEEL_SPEC = "scikit-image==0.17.2"
MEMBER = "skimage/data/camera.png"


def write_pgm(path, rows):
    height, width = len(rows), len(rows[0])
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (width, height))
        for row in rows:
            f.write(bytes(row))


def main():
    if len(sys.argv) != 2:
        print(__doc__, file=sys.stderr)
        return 1
    out_dir = pathlib.Path(sys.argv[1])
    out_dir.mkdir(parents=True, exist_ok=True)
    target = out_dir / "cameraman.pgm"
    if target.exists():
        return 0

    with tempfile.TemporaryDirectory() as tmp:
        cmd = [sys.executable, "-m", "pip", "download", WHEEL_SPEC, "--no-deps",
               "--disable-pip-version-check", "--only-binary=:all:", "--python-version", "3.8",
               "--platform", "manylinux1_x86_64", "-d", tmp, "-q"]
        subprocess.run(cmd, check=True)
        wheel = next(pathlib.Path(tmp).glob("scikit_image-*.whl"))
        png = zipfile.ZipFile(wheel).read(MEMBER)

    from PIL import Image  # Pillow ships with most scientific Python installs

    img = Image.open(io.BytesIO(png)).convert("L")
    if img.size != (512, 512):
        print("unexpected camera.png size %s" % (img.size,), file=sys.stderr)
        return 2
    px = img.load()
    rows = [[px[c, r] for c in range(0, 512, 2)] for r in range(0, 512, 2)]
    write_pgm(target, rows)
    print("wrote %s" % target)
    return 0


if __name__ == "__main__":
    sys.exit(main())
