#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
# Copyright (C) 2026 The sigan-el Authors
"""Writes torchvision InceptionV3 weights in the sigan tensor-directory format.

Every array becomes a raw little-endian float32 file plus an entry in
metadata.json. The auxiliary head and the classifier are skipped.
"""
import argparse
import json
import os
import pathlib
import sys

import numpy as np


def default_out():
    cache = os.environ.get("SIGAN_CACHE")
    if not cache:
        cache = str(pathlib.Path.home() / ".cache" / "sigan")
    return pathlib.Path(cache) / "inception_v3"


def build_model(random_init, seed):
    import torch
    import torchvision

    if not random_init:
        weights = torchvision.models.Inception_V3_Weights.IMAGENET1K_V1
        model = torchvision.models.inception_v3(weights=weights)
        source = "torchvision IMAGENET1K_V1"
    else:
        torch.manual_seed(seed)
        model = torchvision.models.inception_v3(weights=None, aux_logits=False, init_weights=False)
        with torch.no_grad():
            for name, module in model.named_modules():
                if isinstance(module, torch.nn.Conv2d):
                    torch.nn.init.kaiming_normal_(module.weight, nonlinearity="relu")
                elif isinstance(module, torch.nn.BatchNorm2d):
                    module.weight.uniform_(0.5, 1.5)
                    module.bias.uniform_(-0.1, 0.1)
                    module.running_mean.uniform_(-0.1, 0.1)
                    module.running_var.uniform_(0.5, 1.5)
        source = f"random init, seed {seed}"
    model.eval()
    return model, source


def export(model, out, source):
    out = pathlib.Path(out)
    out.mkdir(parents=True, exist_ok=True)
    table = []
    for name, tensor in model.state_dict().items():
        if name.startswith(("AuxLogits.", "fc.")) or name.endswith("num_batches_tracked"):
            continue
        array = tensor.detach().cpu().numpy().astype("<f4")
        shape = list(array.shape) if array.ndim == 4 else [array.size, 1, 1, 1]
        file = name.replace("/", "_") + ".bin"
        array.tofile(out / file)
        table.append({"name": name, "file": file, "shape": shape})
    meta = {"kind": "inception_v3", "source": source, "dtype": "float32", "byte_order": "little",
            "tensors": table}
    (out / "metadata.json").write_text(json.dumps(meta, indent=2) + "\n")
    return len(table)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", type=pathlib.Path, default=default_out())
    p.add_argument("--random-init", action="store_true",
                   help="export seeded random weights instead of the pretrained ones")
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    model, source = build_model(args.random_init, args.seed)
    n = export(model, args.out, source)
    print(f"wrote {n} arrays to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
