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

"""Baseline Cartesian line masks."""

import numpy as np
from .interface import MaskGeneratorInterface
from .line_mask import LineMask, check_budget
from ..errors import InvalidBudgetError, InvalidSigmaError


KINDS = ['lowres', 'equidistant', 'gaussian']


def _round_half_up(x):
    return int(np.floor(x + 0.5))


def _center_block(n, count):
    start = n // 2 - count // 2  # even count: extra line below DC
    return np.arange(start, start + count)


def lowres_mask(n, budget):
    """Sample the budget lines centered on DC.

    :param n: The total number of lines.
    :param budget: The number of lines.
    :return: The :class:`LineMask`.
    """
    n, budget = check_budget(n, budget)
    return LineMask(n, tuple(_center_block(n, budget)))


def equidistant_mask(n, budget, center_fraction=2 / 3):
    """Sample a centered block plus equally spaced peripheral lines.

    round(center_fraction * budget) lines form the centered block.  The
    rest are spread evenly over the sorted unsampled lines, including
    both ends when more than one remains.

    :param n: The total number of lines.
    :param budget: The number of lines.
    :param center_fraction: The fraction of the budget in the center block.
    :return: The :class:`LineMask`.
    """
    n, budget = check_budget(n, budget)
    center_fraction = float(center_fraction)
    if not 0 < center_fraction <= 1:
        raise InvalidBudgetError(f'center_fraction {center_fraction} not in (0, 1]')
    c = min(budget, _round_half_up(center_fraction * budget))
    center = _center_block(n, c)
    p = budget - c
    if p == 0:
        return LineMask(n, tuple(center))
    complement = np.setdiff1d(np.arange(n), center)
    length = len(complement)
    if p == 1:
        positions = [(length - 1) // 2]
    else:
        positions = [_round_half_up(j * (length - 1) / (p - 1)) for j in range(p)]
    lines = np.concatenate([center, complement[positions]])
    return LineMask(n, tuple(np.sort(lines)))


def gaussian_mask(n, budget, sigma=None, seed=0):
    """Sample lines from a Gaussian density centered on DC.

    The DC line is always sampled.  The other budget - 1 lines are drawn
    sequentially without replacement with weights
    exp(-(i - n // 2)^2 / (2 sigma^2)), implemented as the equivalent
    Gumbel top-k draw so that far lines never underflow to zero weight.

    :param n: The total number of lines.
    :param budget: The number of lines.
    :param sigma: The density width in lines, default n / 6.
    :param seed: The generator seed.
    :return: The :class:`LineMask`.
    """
    n, budget = check_budget(n, budget)
    sigma = n / 6 if sigma is None else float(sigma)
    if not np.isfinite(sigma) or sigma <= 0:
        raise InvalidSigmaError(f'sigma must be > 0, got {sigma}')
    dc = n // 2
    candidates = np.delete(np.arange(n), dc)
    log_w = -((candidates - dc) ** 2) / (2.0 * sigma * sigma)
    rng = np.random.default_rng(int(seed))
    keys = log_w + rng.gumbel(size=len(candidates))
    chosen = candidates[np.argsort(-keys, kind='stable')[:budget - 1]]
    return LineMask(n, tuple(np.sort(np.concatenate([[dc], chosen]))))


class LowResolutionMask(MaskGeneratorInterface):

    @property
    def name(self):
        return 'lowres'

    def generate(self, n, budget):
        return lowres_mask(n, budget)


class EquidistantMask(MaskGeneratorInterface):

    def __init__(self, center_fraction=2 / 3):
        self._center_fraction = center_fraction

    @property
    def name(self):
        return 'equidistant'

    def generate(self, n, budget):
        return equidistant_mask(n, budget, self._center_fraction)


class GaussianMask(MaskGeneratorInterface):

    def __init__(self, sigma=None, seed=0):
        self._sigma = sigma
        self._seed = seed

    @property
    def name(self):
        return 'gaussian'

    def generate(self, n, budget):
        return gaussian_mask(n, budget, self._sigma, self._seed)


def generator_factory(kind, center_fraction=2 / 3, sigma=None, seed=0):
    """Construct the generator for a kind in :data:`KINDS`."""
    if kind == 'lowres':
        return LowResolutionMask()
    elif kind == 'equidistant':
        return EquidistantMask(center_fraction)
    elif kind == 'gaussian':
        return GaussianMask(sigma, seed)
    raise ValueError(f'unsupported mask kind {kind}')
