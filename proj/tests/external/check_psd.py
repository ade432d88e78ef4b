"""Opens PSD files written by lcm with psd-tools and Pillow.

Checks layer names and order, per-layer pixels against reference PNGs, the
flattened image, and that the CLI export matches the library export.
"""

import json
import sys
from pathlib import Path

import numpy as np
from PIL import Image
from psd_tools import PSDImage


def fail(msg):
    print("FAIL:", msg)
    sys.exit(1)


def main(fixture_dir):
    d = Path(fixture_dir)
    expected = json.loads((d / "expected_layers.json").read_text())
    psd = PSDImage.open(d / "layers.psd")

    if (psd.width, psd.height) != (32, 32):
        fail(f"canvas {psd.width}x{psd.height}")
    if psd.depth != 8 or psd.channels != 4:
        fail(f"depth {psd.depth} channels {psd.channels}")

    layers = list(psd)
    names = [layer.name for layer in layers]
    want = [e["name"] for e in expected]
    if names != want:
        fail(f"layer names {names} != {want}")

    for layer, e in zip(layers, expected):
        ref = np.asarray(Image.open(d / e["png"]).convert("RGBA"))
        canvas = np.zeros_like(ref)
        x0, y0, x1, y1 = layer.bbox
        if x1 > x0 and y1 > y0:
            img = np.asarray(layer.topil().convert("RGBA"))
            canvas[y0:y1, x0:x1] = img
        # Only pixels with coverage carry meaningful color.
        covered = ref[..., 3] > 0
        if not np.array_equal(canvas[covered], ref[covered]):
            fail(f"layer {layer.name}: pixels differ")
        if np.any(canvas[~covered][..., 3]):
            fail(f"layer {layer.name}: alpha outside its footprint")

    merged = np.asarray(Image.open(d / "layers.psd").convert("RGBA"))
    if merged.shape != (32, 32, 4):
        fail(f"Pillow merged shape {merged.shape}")
    if not np.any(merged[..., 3]):
        fail("Pillow merged image is fully transparent")

    cli = d / "tri3.psd"
    if cli.exists() and cli.read_bytes() != (d / "layers.psd").read_bytes():
        fail("CLI export differs from library export")

    print(f"PASS: {len(layers)} layers read by psd-tools; merged image read by Pillow")


if __name__ == "__main__":
    main(sys.argv[1])
