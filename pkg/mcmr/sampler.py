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

"""The trainable acquisition model.

A free logit per phase-encode line passes through a large-slope
sigmoid to give the soft mask used during training.  An L1 penalty on
the soft mask pushes lines toward zero.  After training the top-budget
lines form the binary mask.
"""

import json
import logging
import os
import numpy as np
import torch
from torch import nn
from .errors import CorruptCheckpointError, InvalidInputError, ShapeError
from .forward_model import zero_filled_recon
from .mask_zoo.line_mask import check_budget, top_budget


DEFAULT_SLOPE = 10.0
DEFAULT_SPARSITY_COEFF = 0.01
INIT_RANGE = 0.01
log = logging.getLogger(__name__)


class Sampler(nn.Module):
    """The per-line acquisition parameters.

    :param n: The number of phase-encode lines.
    :param slope: The sigmoid steepness s > 0.
    :param sparsity_coeff: The L1 coefficient lambda >= 0.
    :param seed: The seed for the uniform [-0.01, 0.01] logit initialization.
    """

    def __init__(self, n, slope=DEFAULT_SLOPE, sparsity_coeff=DEFAULT_SPARSITY_COEFF, seed=0):
        super().__init__()
        n = int(n)
        if n < 1:
            raise InvalidInputError(f'n must be >= 1, got {n}')
        if not np.isfinite(slope) or slope <= 0:
            raise InvalidInputError(f'slope must be > 0, got {slope}')
        if not np.isfinite(sparsity_coeff) or sparsity_coeff < 0:
            raise InvalidInputError(f'sparsity_coeff must be >= 0, got {sparsity_coeff}')
        self.slope = float(slope)
        self.sparsity_coeff = float(sparsity_coeff)
        g = torch.Generator().manual_seed(int(seed))
        w = (torch.rand(n, generator=g, dtype=torch.float64) * 2 - 1) * INIT_RANGE
        self.logits = nn.Parameter(w.to(torch.float32))

    @property
    def n(self):
        return self.logits.shape[0]

    def forward(self):
        return soft_mask(self)

    def save(self, path):
        """Save to path (JSON header) and path + '.bin' (float32 LE logits)."""
        header = {'n': self.n, 'slope': self.slope, 'lambda': self.sparsity_coeff}
        with open(path, 'wt', encoding='utf-8') as f:
            f.write(json.dumps(header))
        blob = self.logits.detach().cpu().numpy().astype('<f4')
        with open(_blob_path(path), 'wb') as f:
            f.write(blob.tobytes())


def _blob_path(path):
    return os.fspath(path) + '.bin'


def load_sampler(path) -> Sampler:
    """Load a :class:`Sampler` written by :meth:`Sampler.save`."""
    try:
        with open(path, 'rt', encoding='utf-8') as f:
            header = json.load(f)
        n, slope, lam = int(header['n']), float(header['slope']), float(header['lambda'])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as ex:
        raise CorruptCheckpointError(f'invalid sampler header {path}: {ex}')
    with open(_blob_path(path), 'rb') as f:
        blob = f.read()
    if len(blob) != 4 * n:
        raise CorruptCheckpointError(f'sampler blob has {len(blob)} bytes, expected {4 * n}')
    try:
        sampler = Sampler(n, slope, lam)
    except InvalidInputError as ex:
        raise CorruptCheckpointError(str(ex))
    w = np.frombuffer(blob, dtype='<f4').astype(np.float32)
    if not np.all(np.isfinite(w)):
        raise CorruptCheckpointError('non-finite sampler logits')
    with torch.no_grad():
        sampler.logits.copy_(torch.from_numpy(w))
    return sampler


def soft_mask(params: Sampler):
    """The per-line probabilities p_i = sigmoid(s * w_i)."""
    return torch.sigmoid(params.slope * params.logits)


def sparsity_penalty(p, lam):
    """The mean-normalized L1 penalty lambda * mean(p)."""
    p = torch.as_tensor(p)
    return lam * p.mean()


def acquire_soft(img_t2, p):
    """The soft-masked zero-filled image, differentiable in p.

    :param img_t2: The real (..., H, W) target-contrast image.
    :param p: The length-H soft mask.
    :return: The (..., H, W) magnitude image.
    """
    img_t2 = torch.as_tensor(img_t2)
    if img_t2.dim() < 2 or img_t2.shape[-2] != torch.as_tensor(p).shape[0]:
        raise ShapeError(f'soft mask length does not match image shape {tuple(img_t2.shape)}')
    return zero_filled_recon(img_t2, p)


def extract_mask(params: Sampler, budget):
    """The top-budget binary mask of the trained sampler.

    Ranks by the logits: the sigmoid is strictly increasing for s > 0, so
    this equals ranking :func:`soft_mask` while avoiding the ties that
    float saturation introduces at large slope.
    """
    w = params.logits.detach().cpu().numpy().astype(np.float64)
    check_budget(len(w), budget)
    return top_budget(w, budget)


def effective_rate(p, threshold=0.5):
    """The fraction of lines with probability above threshold."""
    if not 0 < threshold < 1:
        raise InvalidInputError(f'threshold {threshold} not in (0, 1)')
    p = np.asarray(torch.as_tensor(p).detach().cpu().numpy())
    return float(np.count_nonzero(p > threshold)) / len(p)
