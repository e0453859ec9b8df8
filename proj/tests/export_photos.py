# Copyright 2026 The ZED Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Exports a small natural-photo corpus as PPM crops plus manifests.

Tiles scikit-image's bundled photographs into fixed-size crops: one set of
sources for training, a disjoint set for held-out scoring. Each output
directory gets a `manifest.csv` (header `path,label,generator,group`) with
every crop labeled `real` and grouped by source photograph.
"""

import argparse
import os

import numpy as np
import skimage.data

TRAIN_SOURCES = [
    "astronaut",
    "camera",
    "coffee",
    "moon",
    "hubble_deep_field",
    "immunohistochemistry",
    "coins",
    "brick",
    "grass",
    "gravel",
]

HELDOUT_SOURCES = [
    "cat",
    "chelsea",
    "rocket",
    "stereo_motorcycle",
]


def load_rgb(name):
    img = getattr(skimage.data, name)()
    if isinstance(img, tuple):  # stereo pairs: keep the left view
        img = img[0]
    img = np.asarray(img)
    if img.dtype != np.uint8:
        raise ValueError(f"{name}: expected uint8, got {img.dtype}")
    if img.ndim == 2:
        img = np.stack([img] * 3, axis=-1)
    return np.ascontiguousarray(img[:, :, :3])


def save_ppm(path, img):
    h, w, _ = img.shape
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        f.write(img.tobytes())


def export(sources, out_dir, crop, stride):
    os.makedirs(out_dir, exist_ok=True)
    rows = []
    for name in sources:
        img = load_rgb(name)
        h, w, _ = img.shape
        if h < crop or w < crop:
            raise ValueError(f"{name}: {w}x{h} is smaller than the crop")
        for i, y in enumerate(range(0, h - crop + 1, stride)):
            for j, x in enumerate(range(0, w - crop + 1, stride)):
                fname = f"{name}_{i:02d}_{j:02d}.ppm"
                save_ppm(os.path.join(out_dir, fname),
                         img[y:y + crop, x:x + crop])
                rows.append(f"{fname},real,,{name}")
    with open(os.path.join(out_dir, "manifest.csv"), "w") as f:
        f.write("path,label,generator,group\n")
        f.write("".join(r + "\n" for r in rows))
    return len(rows)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="photos", help="output directory")
    ap.add_argument("--crop", type=int, default=128, help="crop side")
    ap.add_argument("--stride", type=int, default=64, help="tiling stride")
    args = ap.parse_args()

    n_train = export(TRAIN_SOURCES, os.path.join(args.out, "train"),
                     args.crop, args.stride)
    n_held = export(HELDOUT_SOURCES, os.path.join(args.out, "heldout"),
                    args.crop, args.stride)
    print(f"wrote {n_train} training crops and {n_held} held-out crops "
          f"under {args.out}")


if __name__ == "__main__":
    main()
