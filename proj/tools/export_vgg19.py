# Copyright 2026 The lanhdr Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Exports ImageNet VGG-19 convolution weights (through relu4_4) for the perceptual loss.

The output is a TorchScript archive with a `features` submodule whose children are numbered
like torchvision's `vgg19().features`, plus `mean` and `std` buffers. That is the layout
lanhdr::load_vgg19_features reads.

    python tools/export_vgg19.py weights/vgg19_features.pt
"""

import argparse
import pathlib

import torch
import torchvision

RELU4_4 = 26  # index of relu4_4 in torchvision's vgg19().features


class Features(torch.nn.Module):
    def __init__(self, features):
        super().__init__()
        self.features = features
        self.register_buffer("mean", torch.tensor([0.485, 0.456, 0.406]).view(1, 3, 1, 1))
        self.register_buffer("std", torch.tensor([0.229, 0.224, 0.225]).view(1, 3, 1, 1))

    def forward(self, x):
        return self.features((x - self.mean) / self.std)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("out", type=pathlib.Path)
    parser.add_argument("--random-init", action="store_true",
                        help="skip the ImageNet download (layout checks only)")
    args = parser.parse_args()

    weights = None if args.random_init else torchvision.models.VGG19_Weights.IMAGENET1K_V1
    vgg = torchvision.models.vgg19(weights=weights)
    features = vgg.features[: RELU4_4 + 1].eval()
    for p in features.parameters():
        p.requires_grad_(False)
    module = torch.jit.script(Features(features))
    args.out.parent.mkdir(parents=True, exist_ok=True)
    module.save(str(args.out))
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
