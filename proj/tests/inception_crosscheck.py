#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
# Copyright (C) 2026 The sigan-el Authors
"""Compares the C++ InceptionV3 features and FID against torchvision.

Seeded random weights are exported, the command-line tool scores two fixture
folders with --dump-features, and the same images go through torchvision.
Exits 77 when torch is unavailable.
"""
import argparse
import json
import os
import pathlib
import shutil
import subprocess
import sys

try:
    import numpy as np
    import scipy.linalg
    import torch
    import torch.nn.functional as F
    import torchvision  # noqa: F401
    from PIL import Image
except ImportError as exc:
    print(f"skipping: {exc}")
    sys.exit(77)

ROOT = pathlib.Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "scripts"))
import export_inception_weights  # noqa: E402

FEATURE_TOL = 1e-3
FID_TOL = 1e-3


def load_images(folder, size=256):
    batch = []
    for path in sorted(pathlib.Path(folder).glob("*.png")):
        raw = np.asarray(Image.open(path).convert("L"), dtype=np.float64)
        t = torch.from_numpy(raw)[None, None]
        if raw.shape != (size, size):
            t = F.interpolate(t, size=(size, size), mode="bilinear", align_corners=False)
        batch.append(2.0 * (t / 255.0) - 1.0)
    x = torch.cat(batch).float()
    x = F.interpolate(x, size=(299, 299), mode="bilinear", align_corners=False)
    return x.repeat(1, 3, 1, 1)


def fid(a, b):
    mu_a, mu_b = a.mean(0), b.mean(0)
    sa, sb = np.cov(a, rowvar=False), np.cov(b, rowvar=False)
    root = scipy.linalg.sqrtm(sa @ sb).real
    return float(((mu_a - mu_b) ** 2).sum() + np.trace(sa + sb - 2 * root))


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--cli", required=True)
    p.add_argument("--fixture", required=True)
    p.add_argument("--work", required=True, type=pathlib.Path)
    args = p.parse_args()

    shutil.rmtree(args.work, ignore_errors=True)
    args.work.mkdir(parents=True)
    subprocess.run([args.fixture, str(args.work / "data"), "64", "5", "1", "3"], check=True)
    model, source = export_inception_weights.build_model(random_init=True, seed=4)
    export_inception_weights.export(model, args.work / "cache" / "inception_v3", source)

    env = dict(os.environ, SIGAN_CACHE=str(args.work / "cache"))
    real = args.work / "data" / "train" / "defect_free"
    fake = args.work / "data" / "train" / "crack"
    out = subprocess.run([args.cli, "--log-level", "warn", "evaluate-fid", "--real", str(real), "--fake",
                          str(fake), "--extractor", "inception_v3", "--dump-features", "--out",
                          str(args.work / "fid")], env=env, check=True, capture_output=True, text=True)
    result = json.loads(out.stdout)

    model.fc = torch.nn.Identity()
    with torch.no_grad():
        ref_real = model(load_images(real)).double().numpy()
        ref_fake = model(load_images(fake)).double().numpy()
    got_real = np.loadtxt(args.work / "fid" / "real_features.csv", delimiter=",")
    got_fake = np.loadtxt(args.work / "fid" / "fake_features.csv", delimiter=",")

    failures = []
    for label, got, ref in (("real", got_real, ref_real), ("fake", got_fake, ref_fake)):
        if got.shape != ref.shape:
            failures.append(f"{label}: shape {got.shape} vs {ref.shape}")
            continue
        rel = np.abs(got - ref).max() / max(np.abs(ref).max(), 1e-12)
        print(f"{label} features: max relative deviation {rel:.2e}")
        if rel > FEATURE_TOL:
            failures.append(f"{label} features deviate by {rel:.2e}")
    ref_score = fid(ref_real, ref_fake)
    score = result["score"]
    print(f"fid: sigan {score:.4f}, torch reference {ref_score:.4f}")
    if abs(score - ref_score) > FID_TOL * max(1.0, abs(ref_score)):
        failures.append(f"fid {score} vs {ref_score}")
    for f in failures:
        print("FAIL:", f)
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
