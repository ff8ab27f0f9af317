# Copyright 2026 mcmr contributors
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

"""The U-net de-aliasing reconstructor.

Layer table for depth D, base channels C and c_l = C * 2^l:

    encoder l = 0..D-1:  conv3x3 (in -> c_l), ReLU, conv3x3 (c_l -> c_l), ReLU, maxpool 2x2
                         in = in_channels for l = 0, else c_{l-1}
    bottleneck:          conv3x3 (c_{D-1} -> c_D), ReLU, conv3x3 (c_D -> c_D), ReLU
    decoder l = D-1..0:  nearest x2, conv3x3 (c_{l+1} -> c_l), ReLU,
                         concat skip (2 c_l), conv3x3 (2 c_l -> c_l), ReLU,
                         conv3x3 (c_l -> c_l), ReLU
    output:              conv1x1 (c_0 -> 1), linear, plus the first input channel
                         when residual, in which case its weights start at zero

Every convolution has a bias.  A k x k convolution from i to o channels
holds o * i * k * k + o parameters.
"""

from dataclasses import asdict, dataclass
import json
import logging
import os
import numpy as np
import torch
from torch import nn
import torch.nn.functional as F
from .errors import CorruptCheckpointError, InvalidInputError, ShapeError


log = logging.getLogger(__name__)


@dataclass(frozen=True)
class NetConfig:
    depth: int = 3
    base_channels: int = 16
    in_channels: int = 2
    seed: int = 0
    residual: bool = False

    def validate(self):
        if self.depth < 1:
            raise InvalidInputError(f'depth must be >= 1, got {self.depth}')
        if self.base_channels < 1:
            raise InvalidInputError(f'base_channels must be >= 1, got {self.base_channels}')
        if self.in_channels not in (1, 2):
            raise InvalidInputError(f'in_channels must be 1 or 2, got {self.in_channels}')
        return self


def _conv_block(in_channels, out_channels):
    return nn.Sequential(
        nn.Conv2d(in_channels, out_channels, kernel_size=3, padding=1),
        nn.ReLU(),
        nn.Conv2d(out_channels, out_channels, kernel_size=3, padding=1),
        nn.ReLU(),
    )


class _Up(nn.Module):

    def __init__(self, in_channels, out_channels):
        super().__init__()
        self.conv = nn.Conv2d(in_channels, out_channels, kernel_size=3, padding=1)
        self.block = _conv_block(2 * out_channels, out_channels)

    def forward(self, x, skip):
        x = F.interpolate(x, scale_factor=2, mode='nearest')
        x = F.relu(self.conv(x))
        return self.block(torch.cat([x, skip], dim=1))


class UNet(nn.Module):
    """The reconstructor holding its :class:`NetConfig`."""

    def __init__(self, config: NetConfig):
        super().__init__()
        self.config = config.validate()
        c = [config.base_channels * 2 ** level for level in range(config.depth + 1)]
        self.down = nn.ModuleList()
        in_channels = config.in_channels
        for level in range(config.depth):
            self.down.append(_conv_block(in_channels, c[level]))
            in_channels = c[level]
        self.bottleneck = _conv_block(c[config.depth - 1], c[config.depth])
        self.up = nn.ModuleList([_Up(c[level + 1], c[level]) for level in reversed(range(config.depth))])
        self.out = nn.Conv2d(c[0], 1, kernel_size=1)

    def forward(self, x):
        """Reconstruct (N, in_channels, H, W) inputs into (N, H, W) images."""
        check_input(self.config, x)
        skips = []
        y = x
        for block in self.down:
            y = block(y)
            skips.append(y)
            y = F.max_pool2d(y, 2)
        y = self.bottleneck(y)
        for up, skip in zip(self.up, reversed(skips)):
            y = up(y, skip)
        y = self.out(y)[:, 0]
        if self.config.residual:
            y = y + x[:, 0]
        return y


def check_input(config: NetConfig, x):
    if x.dim() != 4:
        raise ShapeError(f'expected (N, C, H, W) input, got shape {tuple(x.shape)}')
    n, c, h, w = x.shape
    if c != config.in_channels:
        raise ShapeError(f'expected {config.in_channels} channels, got {c}')
    k = 2 ** config.depth
    if h % k or w % k:
        raise ShapeError(f'H, W must be divisible by {k}, got {h}x{w}')


def init(config: NetConfig) -> UNet:
    """Construct a :class:`UNet` with deterministic He fan-in initialization.

    With residual=True the output convolution starts at zero.
    """
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(int(config.seed))
        net = UNet(config)
        for m in net.modules():
            if isinstance(m, nn.Conv2d):
                nn.init.kaiming_normal_(m.weight, mode='fan_in', nonlinearity='relu')
                nn.init.zeros_(m.bias)
        if config.residual:
            # starts as the identity on the zero-filled input
            nn.init.zeros_(net.out.weight)
    return net


def count_parameters(net: nn.Module):
    return sum(p.numel() for p in net.parameters())


def forward(net: UNet, x):
    """Run the reconstructor on a channel stack.

    :param net: The reconstructor.
    :param x: The (N, C, H, W) or (C, H, W) input.
    :return: The (N, H, W) or (H, W) output.
    """
    x = torch.as_tensor(x)
    squeeze = x.dim() == 3
    if squeeze:
        x = x.unsqueeze(0)
    y = net(x)
    return y[0] if squeeze else y


def _blob_path(path):
    return os.fspath(path) + '.bin'


def save(net: UNet, path):
    """Save to path (JSON manifest) and path + '.bin' (float32 LE tensors).

    Offsets and lengths count elements; tensors are concatenated in
    manifest order.
    """
    tensors = []
    blobs = []
    offset = 0
    for name, value in net.state_dict().items():
        v = value.detach().cpu().numpy().astype('<f4').ravel()
        tensors.append({'name': name, 'shape': list(value.shape), 'offset': offset, 'len': int(v.size)})
        blobs.append(v)
        offset += v.size
    manifest = {'config': asdict(net.config), 'tensors': tensors}
    with open(path, 'wt', encoding='utf-8') as f:
        f.write(json.dumps(manifest))
    with open(_blob_path(path), 'wb') as f:
        for v in blobs:
            f.write(v.tobytes())


def load(path) -> UNet:
    """Load a :class:`UNet` written by :func:`save`."""
    try:
        with open(path, 'rt', encoding='utf-8') as f:
            manifest = json.load(f)
        config = NetConfig(**manifest['config']).validate()
        tensors = manifest['tensors']
        if not isinstance(tensors, list) or not all(isinstance(t, dict) for t in tensors):
            raise TypeError('tensors must be a list of objects')
    except (json.JSONDecodeError, KeyError, TypeError, InvalidInputError) as ex:
        raise CorruptCheckpointError(f'invalid checkpoint manifest {path}: {ex}')
    with open(_blob_path(path), 'rb') as f:
        blob = np.frombuffer(f.read(), dtype=np.uint8)
    if blob.size % 4:
        raise CorruptCheckpointError('checkpoint blob is not a float32 array')
    values = blob.view('<f4')
    net = UNet(config)
    expected = net.state_dict()
    names = [t.get('name') for t in tensors]
    if names != list(expected.keys()):
        raise CorruptCheckpointError('checkpoint tensor names do not match the config')
    state = {}
    offset_next = 0
    for t in tensors:
        try:
            name, shape, offset, length = t['name'], tuple(t['shape']), int(t['offset']), int(t['len'])
        except (KeyError, TypeError, ValueError) as ex:
            raise CorruptCheckpointError(f'invalid tensor entry {t.get("name")}: {ex}')
        if shape != tuple(expected[name].shape) or length != int(np.prod(shape)) or offset != offset_next:
            raise CorruptCheckpointError(f'tensor {name} shape/offset mismatch')
        if offset + length > values.size:
            raise CorruptCheckpointError(f'checkpoint blob truncated at {name}')
        v = values[offset:offset + length].astype(np.float32).reshape(shape)
        if not np.all(np.isfinite(v)):
            raise CorruptCheckpointError(f'non-finite values in {name}')
        state[name] = torch.from_numpy(v.copy())
        offset_next = offset + length
    if offset_next != values.size:
        raise CorruptCheckpointError('checkpoint blob has trailing data')
    net.load_state_dict(state)
    return net
