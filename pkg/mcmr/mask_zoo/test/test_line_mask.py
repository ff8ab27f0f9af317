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

from ..line_mask import LineMask, acceleration, mask_from_probabilities, read_mask, write_mask
from ...errors import CorruptFileError, InvalidBudgetError, InvalidMaskError
import itertools
import json
import numpy as np
import os
import tempfile
import unittest


def best_support(p, budget):
    best = None
    for support in itertools.combinations(range(len(p)), budget):
        value = sum(p[i] for i in support)
        if best is None or value > best[0]:
            best = (value, support)
    return best[1]


class TestMaskFromProbabilities(unittest.TestCase):

    def test_tie_break(self):
        self.assertEqual((1, 2), mask_from_probabilities([0.1, 0.9, 0.5, 0.5], 2).indices)

    def test_tie_toward_dc_then_lower(self):
        # DC index 2, lines 1 and 3 are equally far
        self.assertEqual((1, 2), mask_from_probabilities([0.5, 0.5, 0.5, 0.5], 2).indices)

    def test_uniform_exhaustion(self):
        self.assertEqual(tuple(range(7)), mask_from_probabilities(np.full(7, 0.3), 7).indices)

    def test_exhaustive_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            n = int(rng.integers(1, 13))
            budget = int(rng.integers(1, n + 1))
            p = rng.random(n)
            self.assertEqual(best_support(p, budget), mask_from_probabilities(p, budget).indices)

    def test_monotone_invariance(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            p = rng.random(32)
            m = mask_from_probabilities(p, 9)
            self.assertEqual(m, mask_from_probabilities(p ** 3, 9))
            self.assertEqual(m, mask_from_probabilities(np.sqrt(p) * 0.5, 9))

    def test_invalid(self):
        with self.assertRaises(InvalidBudgetError):
            mask_from_probabilities([0.5, 0.5], 3)
        with self.assertRaises(InvalidMaskError):
            mask_from_probabilities([0.5, 1.5], 1)


class TestLineMask(unittest.TestCase):

    def test_acceleration(self):
        self.assertAlmostEqual(240 / 22, acceleration(240, 22), delta=1e-9)
        self.assertAlmostEqual(10.909090909, acceleration(240, 22), delta=1e-9)
        self.assertEqual(1.0, acceleration(240, 240))
        self.assertEqual(10.0, acceleration(240, 24))
        with self.assertRaises(InvalidBudgetError):
            acceleration(240, 0)

    def test_invalid(self):
        with self.assertRaises(InvalidMaskError):
            LineMask(8, (3, 3))
        with self.assertRaises(InvalidMaskError):
            LineMask(8, (5, 2))
        with self.assertRaises(InvalidMaskError):
            LineMask(8, (2, 8))
        with self.assertRaises(InvalidMaskError):
            LineMask(8, ())

    def test_arrays(self):
        m = LineMask(6, (1, 4))
        np.testing.assert_array_equal([0, 1, 0, 0, 1, 0], m.to_array())
        img = m.to_image(3)
        self.assertEqual((6, 3), img.shape)
        np.testing.assert_array_equal([1, 1, 1], img[4])

    def test_file_format(self):
        with tempfile.TemporaryDirectory() as d:
            path = os.path.join(d, 'mask.json')
            m = LineMask(240, tuple(range(109, 131)))
            write_mask(path, m)
            with open(path, 'rt', encoding='utf-8') as f:
                d_json = json.load(f)
            self.assertEqual({'n_lines': 240, 'budget': 22, 'indices': list(range(109, 131))}, d_json)
            self.assertEqual(m, read_mask(path))

    def test_reader_rejects(self):
        bad = [
            {'n_lines': 8, 'budget': 2, 'indices': [1, 1]},
            {'n_lines': 8, 'budget': 2, 'indices': [1, 8]},
            {'n_lines': 8, 'budget': 3, 'indices': [1, 2]},
            {'n_lines': 8, 'indices': [1, 2]},
            {'n_lines': 8, 'budget': 1, 'indices': 4},
            {'n_lines': 8, 'budget': 2, 'indices': '12'},
            {'n_lines': '8', 'budget': 1, 'indices': [4]},
            [1, 2],
            5,
        ]
        with tempfile.TemporaryDirectory() as d:
            path = os.path.join(d, 'mask.json')
            for obj in bad:
                with open(path, 'wt', encoding='utf-8') as f:
                    json.dump(obj, f)
                with self.assertRaises(CorruptFileError):
                    read_mask(path)
            with open(path, 'wt', encoding='utf-8') as f:
                f.write('{not json')
            with self.assertRaises(CorruptFileError):
                read_mask(path)
