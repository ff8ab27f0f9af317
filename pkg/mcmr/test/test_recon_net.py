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

from ..errors import CorruptCheckpointError, ShapeError
from ..recon_net import NetConfig, UNet, count_parameters, forward, init, load, save
from ..training import mae_loss
import json
import os
import tempfile
import torch
import unittest


def directional_check(net, x, loss_fn, names, seed, eps=1e-6):
    """Compare the analytic and central difference directional derivative."""
    g = torch.Generator().manual_seed(seed)
    params = {k: v.detach() for k, v in net.named_parameters()}
    direction = {k: (torch.randn(v.shape, generator=g, dtype=v.dtype) if k in names else torch.zeros_like(v))
                 for k, v in params.items()}
    net.zero_grad()
    loss_fn(net(x)).backward()
    analytic = sum(float((p.grad * direction[k]).sum()) for k, p in net.named_parameters())

    def at(scale):
        shifted = {k: v + scale * direction[k] for k, v in params.items()}
        with torch.no_grad():
            return float(loss_fn(torch.func.functional_call(net, shifted, (x, ))))

    numeric = (at(eps) - at(-eps)) / (2 * eps)
    return analytic, numeric


class TestReconNet(unittest.TestCase):

    def test_init_deterministic(self):
        config = NetConfig(depth=2, base_channels=4, in_channels=2, seed=5)
        a = init(config).state_dict()
        b = init(config).state_dict()
        for k in a:
            self.assertTrue(torch.equal(a[k], b[k]))
        c = init(NetConfig(depth=2, base_channels=4, in_channels=2, seed=6)).state_dict()
        self.assertFalse(all(torch.equal(a[k], c[k]) for k in a))

    def test_init_does_not_touch_global_rng(self):
        torch.manual_seed(123)
        expected = torch.rand(3)
        torch.manual_seed(123)
        init(NetConfig(depth=1, base_channels=2))
        self.assertTrue(torch.equal(expected, torch.rand(3)))

    def test_parameter_count(self):
        # encoder 2624 + 13888 + 55424, bottleneck 221440,
        # decoder 184512 + 46176 + 11568, output 17
        net = init(NetConfig(depth=3, base_channels=16, in_channels=2))
        self.assertEqual(535649, count_parameters(net))

    def test_parameter_count_grows(self):
        for depth in [1, 2, 3]:
            for base in [1, 4, 8]:
                small = count_parameters(UNet(NetConfig(depth, base, 1)))
                large = count_parameters(UNet(NetConfig(depth, 2 * base, 1)))
                self.assertGreater(large, small)

    def test_zero_weights(self):
        net = init(NetConfig(depth=2, base_channels=4, in_channels=2))
        with torch.no_grad():
            for p in net.parameters():
                p.zero_()
        x = torch.rand((2, 2, 16, 16))
        self.assertEqual(0.0, float(forward(net, x).abs().max()))

    def test_output_shape(self):
        net = init(NetConfig(depth=3, base_channels=4, in_channels=2))
        for size in [32, 64]:
            y = forward(net, torch.rand((3, 2, size, size)))
            self.assertEqual((3, size, size), tuple(y.shape))
        y = forward(net, torch.rand((2, 32, 32)))
        self.assertEqual((32, 32), tuple(y.shape))

    def test_deterministic_forward(self):
        net = init(NetConfig(depth=2, base_channels=4, in_channels=1))
        x = torch.rand((2, 1, 16, 16))
        self.assertTrue(torch.equal(forward(net, x), forward(net, x)))

    def test_shape_errors(self):
        net = init(NetConfig(depth=3, base_channels=2, in_channels=2))
        with self.assertRaises(ShapeError):
            forward(net, torch.rand((1, 1, 32, 32)))
        with self.assertRaises(ShapeError):
            forward(net, torch.rand((1, 2, 36, 32)))
        with self.assertRaises(ShapeError):
            forward(net, torch.rand((32, 32)))

    def test_residual(self):
        net = init(NetConfig(depth=1, base_channels=2, in_channels=2, residual=True))
        with torch.no_grad():
            for p in net.parameters():
                p.zero_()
        x = torch.rand((1, 2, 8, 8))
        self.assertTrue(torch.equal(x[:, 0], forward(net, x)))

    def test_residual_init_is_identity(self):
        net = init(NetConfig(depth=2, base_channels=4, in_channels=2, residual=True))
        self.assertEqual(0.0, float(net.out.weight.abs().max()))
        x = torch.rand((2, 2, 16, 16))
        self.assertTrue(torch.equal(x[:, 0], forward(net, x)))
        plain = init(NetConfig(depth=2, base_channels=4, in_channels=2, residual=False))
        self.assertGreater(float(plain.out.weight.abs().max()), 0.0)

    def test_jacobian_vector(self):
        net = init(NetConfig(depth=2, base_channels=4, in_channels=2, seed=1)).double()
        x = torch.rand((2, 2, 16, 16), generator=torch.Generator().manual_seed(0), dtype=torch.float64)
        names = [k for k, _ in net.named_parameters()]
        analytic, numeric = directional_check(net, x, lambda y: y.sum(), names, seed=2)
        self.assertLess(abs(analytic - numeric), 1e-3 * max(1.0, abs(numeric)))

    def test_mae_gradient_per_group(self):
        g = torch.Generator().manual_seed(10)
        names = [k for k, _ in UNet(NetConfig(depth=2, base_channels=4, in_channels=2)).named_parameters()]
        self.assertEqual(26, len(names))
        for case, name in enumerate(names):
            net = init(NetConfig(depth=2, base_channels=4, in_channels=2, seed=case)).double()
            x = torch.rand((1, 2, 16, 16), generator=g, dtype=torch.float64)
            target = torch.rand((1, 16, 16), generator=g, dtype=torch.float64)
            analytic, numeric = directional_check(net, x, lambda y: mae_loss(y, target), [name], seed=case)
            self.assertLess(abs(analytic - numeric), 1e-3 * max(1e-3, abs(numeric)), name)

    def test_save_load(self):
        net = init(NetConfig(depth=2, base_channels=4, in_channels=2, seed=3, residual=True))
        with tempfile.TemporaryDirectory() as d:
            path = os.path.join(d, 'net.json')
            save(net, path)
            r = load(path)
            self.assertEqual(net.config, r.config)
            a, b = net.state_dict(), r.state_dict()
            self.assertEqual(list(a.keys()), list(b.keys()))
            for k in a:
                self.assertTrue(torch.equal(a[k], b[k]))
            with open(path, 'rt', encoding='utf-8') as f:
                manifest = json.load(f)
            self.assertEqual(0, manifest['tensors'][0]['offset'])
            total = sum(t['len'] for t in manifest['tensors'])
            self.assertEqual(4 * total, os.path.getsize(path + '.bin'))

    def test_load_truncated(self):
        net = init(NetConfig(depth=1, base_channels=2, in_channels=1))
        with tempfile.TemporaryDirectory() as d:
            path = os.path.join(d, 'net.json')
            save(net, path)
            with open(path + '.bin', 'rb') as f:
                blob = f.read()
            with open(path + '.bin', 'wb') as f:
                f.write(blob[:-8])
            with self.assertRaises(CorruptCheckpointError):
                load(path)

    def test_load_shape_mismatch(self):
        net = init(NetConfig(depth=1, base_channels=2, in_channels=1))
        with tempfile.TemporaryDirectory() as d:
            path = os.path.join(d, 'net.json')
            save(net, path)
            with open(path, 'rt', encoding='utf-8') as f:
                manifest = json.load(f)
            manifest['tensors'][0]['shape'] = [3, 1, 3, 3]
            with open(path, 'wt', encoding='utf-8') as f:
                json.dump(manifest, f)
            with self.assertRaises(CorruptCheckpointError):
                load(path)
            manifest['tensors'][0]['shape'] = [2, 1, 3, 3]
            manifest['config']['base_channels'] = 4
            with open(path, 'wt', encoding='utf-8') as f:
                json.dump(manifest, f)
            with self.assertRaises(CorruptCheckpointError):
                load(path)

    def test_load_malformed_entries(self):
        net = init(NetConfig(depth=1, base_channels=2, in_channels=1))
        edits = [
            lambda m: m['tensors'][0].pop('shape'),
            lambda m: m['tensors'][1].pop('offset'),
            lambda m: m['tensors'][2].update({'len': 'many'}),
            lambda m: m['tensors'][0].update({'shape': 7}),
            lambda m: m.update({'tensors': {'a': 1}}),
            lambda m: m.update({'tensors': [1, 2]}),
        ]
        with tempfile.TemporaryDirectory() as d:
            path = os.path.join(d, 'net.json')
            for edit in edits:
                save(net, path)
                with open(path, 'rt', encoding='utf-8') as f:
                    manifest = json.load(f)
                edit(manifest)
                with open(path, 'wt', encoding='utf-8') as f:
                    json.dump(manifest, f)
                with self.assertRaises(CorruptCheckpointError):
                    load(path)
