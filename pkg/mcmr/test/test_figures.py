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

from ..datasets import generate_phantom_pair
from ..errors import InvalidInputError
from ..figures import COLUMNS, export_figures
from ..mask_zoo import lowres_mask
from ..metrics import read_pgm
from ..recon_net import NetConfig, init
import numpy as np
import os
import tempfile
import unittest


class TestFigures(unittest.TestCase):

    def test_export(self):
        net = init(NetConfig(depth=2, base_channels=4, in_channels=2))
        mask = lowres_mask(32, 8)
        pairs = [generate_phantom_pair(32, 32, seed) for seed in range(2)]
        with tempfile.TemporaryDirectory() as d:
            report = export_figures(net, mask, pairs, d)
            self.assertEqual(2, len(report.per_slice))
            for pair in pairs:
                for name in COLUMNS + ['zero_filled_error']:
                    self.assertTrue(os.path.isfile(os.path.join(d, f'{pair.id}_{name}.pgm')), name)
            self.assertTrue(os.path.isfile(os.path.join(d, 'panel.png')))
            self.assertTrue(os.path.isfile(os.path.join(d, 'metrics.csv')))
            m = read_pgm(os.path.join(d, f'{pairs[0].id}_mask.pgm'))
            np.testing.assert_array_equal(np.ones(8), m[12:20].min(axis=1))
            np.testing.assert_array_equal(np.zeros(12), m[:12].max(axis=1))
            gt = read_pgm(os.path.join(d, f'{pairs[0].id}_ground_truth.pgm'))
            np.testing.assert_allclose(pairs[0].t2, gt, atol=1 / 65535)

    def test_empty(self):
        net = init(NetConfig(depth=1, base_channels=2, in_channels=2))
        with tempfile.TemporaryDirectory() as d:
            with self.assertRaises(InvalidInputError):
                export_figures(net, lowres_mask(32, 8), [], d)
