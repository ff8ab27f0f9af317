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

from ..errors import CorruptCheckpointError, InvalidInputError, ShapeError
from ..sampler import Sampler, acquire_soft, effective_rate, extract_mask, load_sampler, soft_mask, \
    sparsity_penalty
from ..mask_zoo.test.test_line_mask import best_support
import numpy as np
import os
import tempfile
import torch
import unittest


def sampler_with(logits, slope=10.0, sparsity_coeff=0.01, dtype=torch.float64):
    s = Sampler(len(logits), slope, sparsity_coeff).to(dtype)
    with torch.no_grad():
        s.logits.copy_(torch.as_tensor(np.asarray(logits), dtype=dtype))
    return s


class TestSampler(unittest.TestCase):

    def test_init(self):
        a = Sampler(64, seed=3)
        b = Sampler(64, seed=3)
        torch.testing.assert_close(a.logits, b.logits, rtol=0, atol=0)
        self.assertLessEqual(float(a.logits.abs().max()), 0.01)
        self.assertFalse(torch.equal(a.logits, Sampler(64, seed=4).logits))

    def test_invalid(self):
        with self.assertRaises(InvalidInputError):
            Sampler(8, slope=0.0)
        with self.assertRaises(InvalidInputError):
            Sampler(8, sparsity_coeff=-1.0)

    def test_soft_mask_zero(self):
        p = soft_mask(sampler_with(np.zeros(8)))
        np.testing.assert_allclose(p.detach().numpy(), 0.5)

    def test_soft_mask_saturation(self):
        p = soft_mask(sampler_with([0.1, -0.1, 0.1], slope=1000.0)).detach().numpy()
        np.testing.assert_allclose(p, [1.0, 0.0, 1.0], atol=1e-8)

    def test_soft_mask_value(self):
        p = soft_mask(sampler_with([0.2], slope=5.0, dtype=torch.float32))
        self.assertAlmostEqual(0.7310585786, float(p[0]), delta=1e-6)

    def test_soft_mask_derivative(self):
        s = sampler_with(np.linspace(-0.3, 0.3, 7), slope=4.0)
        p = soft_mask(s)
        p.sum().backward()
        expected = 4.0 * p.detach() * (1 - p.detach())
        torch.testing.assert_close(s.logits.grad, expected)

    def test_soft_mask_open_interval(self):
        p = soft_mask(sampler_with(np.linspace(-2, 2, 33), slope=10.0)).detach().numpy()
        self.assertTrue(np.all((p > 0) & (p < 1)))

    def test_sparsity_penalty(self):
        half = torch.full((10, ), 0.5, dtype=torch.float64)
        self.assertAlmostEqual(0.01, float(sparsity_penalty(half, 0.02)), places=12)
        self.assertEqual(0.0, float(sparsity_penalty(torch.full((10, ), 0.5), 0.0)))
        p = torch.tensor([0.1, 0.2, 0.3, 0.4], dtype=torch.float64)
        self.assertAlmostEqual(0.25, float(sparsity_penalty(p, 1.0)), places=12)

    def test_acquire_near_identity(self):
        x = np.random.default_rng(0).random((8, 8))
        y = acquire_soft(x, torch.full((8, ), 1 - 1e-9, dtype=torch.float64)).numpy()
        self.assertLess(np.max(np.abs(y - x)), 1e-6)

    def test_acquire_uniform_half(self):
        x = np.random.default_rng(1).random((8, 6))
        y = acquire_soft(x, torch.full((8, ), 0.5, dtype=torch.float64)).numpy()
        self.assertLess(np.max(np.abs(y - 0.5 * x)), 1e-6)

    def test_acquire_shape(self):
        with self.assertRaises(ShapeError):
            acquire_soft(np.ones((8, 8)), torch.full((6, ), 0.5))

    def test_gradient_finite_difference(self):
        rng = np.random.default_rng(2)
        h = 1e-4
        for case in range(20):
            height = 8 if case < 10 else 16
            x = torch.from_numpy(rng.random((height, 8)))
            s = sampler_with(rng.uniform(-0.2, 0.2, height), slope=10.0, sparsity_coeff=0.05)

            def objective():
                p = soft_mask(s)
                return acquire_soft(x, p).sum() + sparsity_penalty(p, s.sparsity_coeff)

            objective().backward()
            grad = s.logits.grad.clone()
            fd = torch.zeros_like(grad)
            with torch.no_grad():
                for i in range(height):
                    w = s.logits[i].item()
                    s.logits[i] = w + h
                    f_plus = objective().item()
                    s.logits[i] = w - h
                    f_minus = objective().item()
                    s.logits[i] = w
                    fd[i] = (f_plus - f_minus) / (2 * h)
            rel = float(torch.linalg.norm(grad - fd) / torch.linalg.norm(fd))
            self.assertLess(rel, 1e-3)

    def test_gradcheck(self):
        x = torch.from_numpy(np.random.default_rng(3).random((8, 8)))
        w = torch.from_numpy(np.random.default_rng(4).uniform(-0.2, 0.2, 8)).requires_grad_(True)
        self.assertTrue(torch.autograd.gradcheck(lambda w_: acquire_soft(x, torch.sigmoid(10.0 * w_)), (w, )))

    def test_extract_positive_support(self):
        w = -np.ones(12)
        w[[1, 5, 9, 10]] = 0.5
        m = extract_mask(sampler_with(w, slope=1000.0), 4)
        self.assertEqual((1, 5, 9, 10), m.indices)

    def test_extract_reparameterization(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            w = rng.normal(size=24)
            m = extract_mask(sampler_with(w), 7)
            self.assertEqual(m, extract_mask(sampler_with(2 * w + 0.3), 7))
            self.assertEqual(m, extract_mask(sampler_with(w ** 3), 7))
            for slope in [0.1, 1.0, 1000.0]:
                self.assertEqual(m, extract_mask(sampler_with(w, slope=slope), 7))

    def test_extract_oracle(self):
        rng = np.random.default_rng(6)
        for _ in range(10):
            s = sampler_with(rng.normal(size=12), slope=2.0)
            p = soft_mask(s).detach().numpy()
            self.assertEqual(best_support(p, 4), extract_mask(s, 4).indices)

    def test_effective_rate(self):
        self.assertEqual(1.0, effective_rate(torch.full((5, ), 0.9)))
        self.assertEqual(0.0, effective_rate(torch.full((5, ), 0.1)))
        self.assertEqual(0.5, effective_rate(torch.tensor([0.9, 0.4, 0.6, 0.2])))
        with self.assertRaises(InvalidInputError):
            effective_rate(torch.tensor([0.5]), threshold=1.0)

    def test_save_load(self):
        s = Sampler(40, slope=7.5, sparsity_coeff=0.02, seed=9)
        with torch.no_grad():
            s.logits.mul_(37.0)
        with tempfile.TemporaryDirectory() as d:
            path = os.path.join(d, 'sampler.json')
            s.save(path)
            r = load_sampler(path)
            self.assertEqual(7.5, r.slope)
            self.assertEqual(0.02, r.sparsity_coeff)
            self.assertTrue(torch.equal(s.logits, r.logits))
            with open(path + '.bin', 'rb') as f:
                blob = f.read()
            with open(path + '.bin', 'wb') as f:
                f.write(blob[:-4])
            with self.assertRaises(CorruptCheckpointError):
                load_sampler(path)
