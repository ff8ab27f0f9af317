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

"""The binary line mask type, its file format and top-budget selection."""

from dataclasses import dataclass
import json
import numpy as np
from ..errors import CorruptFileError, InvalidBudgetError, InvalidMaskError


def check_budget(n, budget):
    n, budget = int(n), int(budget)
    if n < 1:
        raise InvalidBudgetError(f'n_lines must be >= 1, got {n}')
    if budget < 1 or budget > n:
        raise InvalidBudgetError(f'budget {budget} not in [1, {n}]')
    return n, budget


@dataclass(frozen=True)
class LineMask:
    """The set of sampled phase-encode lines.

    :param n_lines: The total number of lines.
    :param indices: The strictly increasing sampled line indices.
    """
    n_lines: int
    indices: tuple

    def __post_init__(self):
        indices = tuple(int(i) for i in self.indices)
        object.__setattr__(self, 'indices', indices)
        if self.n_lines < 1:
            raise InvalidMaskError(f'n_lines must be >= 1, got {self.n_lines}')
        if not len(indices):
            raise InvalidMaskError('mask is empty')
        if any(b <= a for a, b in zip(indices[:-1], indices[1:])):
            raise InvalidMaskError('indices must be strictly increasing')
        if indices[0] < 0 or indices[-1] >= self.n_lines:
            raise InvalidMaskError(f'indices out of range [0, {self.n_lines})')

    @property
    def budget(self):
        return len(self.indices)

    @property
    def acceleration(self):
        return acceleration(self.n_lines, self.budget)

    def to_array(self, dtype=np.float32):
        """The length n_lines 0/1 vector."""
        m = np.zeros(self.n_lines, dtype=dtype)
        m[list(self.indices)] = 1
        return m

    def to_image(self, width):
        """The n_lines x width image with sampled rows set to 1."""
        return np.repeat(self.to_array()[:, np.newaxis], int(width), axis=1)

    def to_dict(self):
        return {'n_lines': self.n_lines, 'budget': self.budget, 'indices': list(self.indices)}

    @staticmethod
    def from_dict(d):
        try:
            n_lines = d['n_lines']
            budget = d['budget']
            indices = d['indices']
        except (KeyError, TypeError):
            raise InvalidMaskError('mask requires n_lines, budget and indices')
        if not isinstance(indices, list):
            raise InvalidMaskError('mask indices must be a list')
        if not all(isinstance(x, int) and not isinstance(x, bool) for x in [n_lines, budget, *indices]):
            raise InvalidMaskError('mask fields must be integers')
        if len(set(indices)) != len(indices):
            raise InvalidMaskError('duplicate mask indices')
        if len(indices) != budget:
            raise InvalidMaskError(f'budget {budget} != {len(indices)} indices')
        if list(indices) != sorted(indices):
            raise InvalidMaskError('mask indices must be sorted')
        return LineMask(n_lines, tuple(indices))


def write_mask(path, mask: LineMask):
    with open(path, 'wt', encoding='utf-8') as f:
        f.write(json.dumps(mask.to_dict()))


def read_mask(path) -> LineMask:
    with open(path, 'rt', encoding='utf-8') as f:
        try:
            d = json.load(f)
        except json.JSONDecodeError as ex:
            raise CorruptFileError(f'invalid mask file {path}: {ex}')
    try:
        return LineMask.from_dict(d)
    except InvalidMaskError as ex:
        raise CorruptFileError(f'invalid mask file {path}: {ex}')


def acceleration(n, budget):
    """The acceleration factor R = n / budget."""
    if int(budget) <= 0:
        raise InvalidBudgetError(f'budget must be > 0, got {budget}')
    return n / budget


def top_budget(scores, budget):
    """Select the budget highest scores.

    Ties go to the line closer to DC (index n // 2), then the lower index.

    :param scores: The length-n score vector.
    :param budget: The number of lines to keep.
    :return: The :class:`LineMask`.
    """
    scores = np.asarray(scores, dtype=np.float64)
    n, budget = check_budget(len(scores), budget)
    idx = np.arange(n)
    order = np.lexsort((idx, np.abs(idx - n // 2), -scores))
    return LineMask(n, tuple(np.sort(order[:budget])))


def mask_from_probabilities(p, budget):
    """Binarize per-line probabilities into the top-budget mask.

    :param p: The length-n probabilities in [0, 1].
    :param budget: The number of lines to keep.
    :return: The :class:`LineMask`.
    """
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1:
        raise InvalidMaskError(f'probabilities must be 1D, got shape {p.shape}')
    if not np.all(np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
        raise InvalidMaskError('probabilities must be in [0, 1]')
    return top_budget(p, budget)
