"""Tiny JPEG encoder/decoder CLI standing in for an installed system codec.

usage: pil_jpeg.py enc IN.ppm OUT.jpg QUALITY
       pil_jpeg.py dec IN.jpg OUT.ppm
"""

import sys

from PIL import Image


def main(argv):
    if argv[0] == "enc":
        Image.open(argv[1]).convert("RGB").save(argv[2], format="JPEG", quality=int(argv[3]))
    elif argv[0] == "dec":
        Image.open(argv[1]).convert("RGB").save(argv[2], format="PPM")
    else:
        print(f"unknown mode {argv[0]}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
