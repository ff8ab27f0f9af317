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

"""Two-stage training, evaluation and the mask comparison study.

Stage 1 jointly trains the :class:`Sampler` and a reconstructor on
soft-masked inputs, then extracts the binary mask.  Stage 2 trains a
fresh reconstructor with that fixed mask, with the fully-sampled T1
reference concatenated as a second input channel.
"""

from dataclasses import dataclass, field, fields, replace
import logging
import math
import time
import numpy as np
import torch
from . import recon_net
from .errors import DivergedTrainingError, InvalidInputError, ShapeError
from .forward_model import zero_filled_recon
from .mask_zoo.line_mask import LineMask, check_budget
from .metrics import EvalReport, format_db, score_slice
from .sampler import Sampler, acquire_soft, extract_mask, soft_mask, sparsity_penalty


EVAL_BATCH_SIZE = 16
CSV_COLUMNS = 'step,phase,loss_total,loss_mae,loss_sparsity,val_psnr,val_ssim'
log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 5e-4
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    batch_size: int = 4
    steps: int = 500
    seed: int = 0
    budget: int = 6
    sparsity_coeff: float = 0.01
    slope: float = 10.0
    multi_contrast: bool = True
    depth: int = 3
    base_channels: int = 16
    residual: bool = False

    def validate(self):
        if not (self.learning_rate > 0 and math.isfinite(self.learning_rate)):
            raise InvalidInputError(f'learning_rate must be > 0, got {self.learning_rate}')
        if self.batch_size < 1:
            raise InvalidInputError(f'batch_size must be >= 1, got {self.batch_size}')
        if self.steps < 0:
            raise InvalidInputError(f'steps must be >= 0, got {self.steps}')
        if not 0 <= self.adam_beta1 < 1 or not 0 <= self.adam_beta2 < 1 or self.adam_eps <= 0:
            raise InvalidInputError('invalid Adam parameters')
        if self.budget < 1:
            raise InvalidInputError(f'budget must be >= 1, got {self.budget}')
        if self.slope <= 0 or self.sparsity_coeff < 0:
            raise InvalidInputError('slope must be > 0 and sparsity_coeff >= 0')
        return self

    @property
    def in_channels(self):
        return 2 if self.multi_contrast else 1

    def net_config(self):
        return recon_net.NetConfig(self.depth, self.base_channels, self.in_channels, self.seed, self.residual)

    @staticmethod
    def field_names():
        return [f.name for f in fields(TrainConfig)]


@dataclass
class LogEntry:
    step: int
    phase: str
    loss_total: float = None
    loss_mae: float = None
    loss_sparsity: float = None
    val_mae: float = None
    val_psnr: float = None
    val_ssim: float = None


@dataclass
class TrainLog:
    """Training history.

    Step entries have phase 'train'; per-epoch validation entries have
    phase 'val'.  wall_clock_s is excluded from the CSV.
    """
    entries: list = field(default_factory=list)
    final_mask: LineMask = None
    wall_clock_s: float = 0.0

    def train_losses(self):
        return [e.loss_total for e in self.entries if e.phase == 'train']

    def validations(self):
        return [e for e in self.entries if e.phase == 'val']

    def to_csv(self, path):
        def fmt(v):
            if v is None:
                return ''
            return format_db(v) if math.isinf(v) else f'{v:.9g}'

        with open(path, 'wt', encoding='utf-8', newline='\n') as f:
            f.write(CSV_COLUMNS + '\n')
            for e in self.entries:
                values = [e.loss_total, e.loss_mae, e.loss_sparsity, e.val_psnr, e.val_ssim]
                f.write(f'{e.step},{e.phase},' + ','.join(fmt(v) for v in values) + '\n')


def mae_loss(pred, target):
    """Mean absolute error over all pixels."""
    pred = torch.as_tensor(pred)
    target = torch.as_tensor(target)
    if pred.shape != target.shape:
        raise ShapeError(f'shape mismatch {tuple(pred.shape)} != {tuple(target.shape)}')
    return torch.mean(torch.abs(pred - target))


def make_optimizer(params, config: TrainConfig):
    """The Adam optimizer holding the moment state for params."""
    return torch.optim.Adam(params, lr=config.learning_rate,
                            betas=(config.adam_beta1, config.adam_beta2), eps=config.adam_eps)


def adam_step(params, grads, optimizer, step=None):
    """Apply one bias-corrected Adam update.

    :param params: The list of parameter tensors.
    :param grads: The gradients matching params.
    :param optimizer: The optimizer from :func:`make_optimizer`.
    :param step: The step number, reported on divergence.
    :raise DivergedTrainingError: On any non-finite gradient.
    """
    params = list(params)
    grads = list(grads)
    if len(params) != len(grads):
        raise ShapeError(f'{len(params)} params but {len(grads)} grads')
    for p, g in zip(params, grads):
        if g is None:
            continue
        if g.shape != p.shape:
            raise ShapeError(f'gradient shape {tuple(g.shape)} != {tuple(p.shape)}')
        if not bool(torch.isfinite(g).all()):
            last = None if step is None else step - 1
            raise DivergedTrainingError(f'non-finite gradient at step {step}', last)
        p.grad = g
    optimizer.step()


def batch_order(n, batch_size, seed, epoch):
    """The index batches for one epoch, a pure function of (seed, epoch)."""
    order = np.random.default_rng([int(seed), int(epoch)]).permutation(int(n))
    return [order[i:i + batch_size] for i in range(0, n, batch_size)]


def _check_pairs(pairs, name, height=None):
    if not len(pairs):
        raise InvalidInputError(f'{name} set is empty')
    shape = pairs[0].shape
    if any(p.shape != shape for p in pairs):
        raise ShapeError(f'{name} slices do not share one shape')
    if height is not None and shape[0] != height:
        raise ShapeError(f'mask has {height} lines but {name} slices have {shape[0]} rows')
    return shape


def stack_pairs(pairs):
    t1 = torch.from_numpy(np.stack([p.t1 for p in pairs]).astype(np.float32))
    t2 = torch.from_numpy(np.stack([p.t2 for p in pairs]).astype(np.float32))
    return t1, t2


def _inputs(zero_filled, t1, multi_contrast):
    if multi_contrast:
        return torch.stack([zero_filled, t1], dim=1)
    return zero_filled.unsqueeze(1)


def reconstruct(net, zero_filled, t1, multi_contrast):
    """Run net over (N, H, W) zero-filled images in batches, returning numpy."""
    training = net.training
    net.eval()
    out = []
    with torch.no_grad():
        for i in range(0, len(zero_filled), EVAL_BATCH_SIZE):
            x = _inputs(zero_filled[i:i + EVAL_BATCH_SIZE], t1[i:i + EVAL_BATCH_SIZE], multi_contrast)
            out.append(net(x))
    net.train(training)
    return torch.cat(out).numpy()


def _score(ids, recon, t2):
    scores = [score_slice(i, r, t) for i, r, t in zip(ids, recon, t2.numpy())]
    return (float(np.mean([s.mae for s in scores])),
            float(np.mean([s.psnr_db for s in scores])),
            float(np.mean([s.ssim for s in scores])))


def _validate(log_, step, net, zero_filled, t1, t2, ids, multi_contrast):
    if not len(ids):
        return
    val_mae, val_psnr, val_ssim = _score(ids, reconstruct(net, zero_filled, t1, multi_contrast), t2)
    log_.entries.append(LogEntry(step, 'val', val_mae=val_mae, val_psnr=val_psnr, val_ssim=val_ssim))
    log.info('step %d: val mae=%.5f psnr=%s ssim=%.4f', step, val_mae, format_db(val_psnr), val_ssim)


def _check_loss(loss, step, last_finite):
    if not math.isfinite(loss):
        raise DivergedTrainingError(f'non-finite loss at step {step}, last finite step {last_finite}',
                                    last_finite)


def train_stage1(dataset, config: TrainConfig):
    """Jointly train the sampler and a reconstructor.

    :param dataset: The :class:`mcmr.datasets.PairSplits`.
    :param config: The :class:`TrainConfig`.
    :return: (sampler, net, train_log).  train_log.final_mask holds the
        extracted top-budget mask.
    """
    config.validate()
    t_start = time.perf_counter()
    height, _ = _check_pairs(dataset.train, 'train')
    check_budget(height, config.budget)
    if dataset.val:
        _check_pairs(dataset.val, 'val', height)
    net_config = config.net_config()
    recon_net.check_input(net_config, torch.zeros((1, net_config.in_channels) + dataset.train[0].shape))
    sampler = Sampler(height, config.slope, config.sparsity_coeff, config.seed)
    net = recon_net.init(net_config)
    params = list(sampler.parameters()) + list(net.parameters())
    optimizer = make_optimizer(params, config)
    t1, t2 = stack_pairs(dataset.train)
    val_t1, val_t2 = stack_pairs(dataset.val) if dataset.val else (None, None)
    val_ids = [p.id for p in dataset.val]
    train_log = TrainLog()
    step = 0
    last_finite = None
    epoch = 0
    while step < config.steps:
        for idx in batch_order(len(dataset.train), config.batch_size, config.seed, epoch):
            if step >= config.steps:
                break
            batch = torch.from_numpy(idx)
            step += 1
            p = soft_mask(sampler)
            target = t2[batch]
            pred = net(_inputs(acquire_soft(target, p), t1[batch], config.multi_contrast))
            loss_mae = mae_loss(pred, target)
            loss_sparsity = sparsity_penalty(p, config.sparsity_coeff)
            loss = loss_mae + loss_sparsity
            entry = LogEntry(step, 'train', loss_mae=loss_mae.item(), loss_sparsity=loss_sparsity.item())
            entry.loss_total = entry.loss_mae + entry.loss_sparsity
            _check_loss(entry.loss_total, step, last_finite)
            optimizer.zero_grad()
            loss.backward()
            adam_step(params, [x.grad for x in params], optimizer, step)
            last_finite = step
            train_log.entries.append(entry)
            log.debug('stage1 step %d: loss=%.6f mae=%.6f sparsity=%.6f',
                      step, entry.loss_total, entry.loss_mae, entry.loss_sparsity)
        epoch += 1
        if dataset.val:
            with torch.no_grad():
                val_zf = acquire_soft(val_t2, soft_mask(sampler))
            _validate(train_log, step, net, val_zf, val_t1, val_t2, val_ids, config.multi_contrast)
    train_log.final_mask = extract_mask(sampler, config.budget)
    train_log.wall_clock_s = time.perf_counter() - t_start
    log.info('stage1 done: %d steps in %.1f s, mask %s', step, train_log.wall_clock_s,
             list(train_log.final_mask.indices))
    return sampler, net, train_log


def train_stage2(dataset, mask: LineMask, config: TrainConfig, init_net=None):
    """Train the reconstructor with a fixed line mask.

    :param dataset: The :class:`mcmr.datasets.PairSplits`.
    :param mask: The :class:`LineMask` with n_lines = H.
    :param config: The :class:`TrainConfig`.
    :param init_net: Optional weights to start from (warm start).  The
        default is a fresh initialization.
    :return: (net, train_log).
    """
    config.validate()
    t_start = time.perf_counter()
    _check_pairs(dataset.train, 'train', mask.n_lines)
    if dataset.val:
        _check_pairs(dataset.val, 'val', mask.n_lines)
    net_config = config.net_config()
    if init_net is not None:
        if init_net.config.in_channels != net_config.in_channels:
            raise ShapeError('warm start network has a different input channel count')
        net = recon_net.UNet(init_net.config)
        net.load_state_dict(init_net.state_dict())
    else:
        net = recon_net.init(net_config)
    recon_net.check_input(net.config, torch.zeros((1, net.config.in_channels) + dataset.train[0].shape))
    params = list(net.parameters())
    optimizer = make_optimizer(params, config)
    m = mask.to_array()
    t1, t2 = stack_pairs(dataset.train)
    zero_filled = zero_filled_recon(t2, m).to(torch.float32)
    if dataset.val:
        val_t1, val_t2 = stack_pairs(dataset.val)
        val_zf = zero_filled_recon(val_t2, m).to(torch.float32)
    val_ids = [p.id for p in dataset.val]
    train_log = TrainLog(final_mask=mask)
    step = 0
    last_finite = None
    epoch = 0
    while step < config.steps:
        for idx in batch_order(len(dataset.train), config.batch_size, config.seed, epoch):
            if step >= config.steps:
                break
            batch = torch.from_numpy(idx)
            step += 1
            pred = net(_inputs(zero_filled[batch], t1[batch], config.multi_contrast))
            loss = mae_loss(pred, t2[batch])
            entry = LogEntry(step, 'train', loss_total=loss.item(), loss_mae=loss.item())
            _check_loss(entry.loss_total, step, last_finite)
            optimizer.zero_grad()
            loss.backward()
            adam_step(params, [x.grad for x in params], optimizer, step)
            last_finite = step
            train_log.entries.append(entry)
            log.debug('stage2 step %d: loss=%.6f', step, entry.loss_total)
        epoch += 1
        if dataset.val:
            _validate(train_log, step, net, val_zf, val_t1, val_t2, val_ids, config.multi_contrast)
    train_log.wall_clock_s = time.perf_counter() - t_start
    log.info('stage2 done: %d steps in %.1f s', step, train_log.wall_clock_s)
    return net, train_log


def evaluate(net, mask: LineMask, test_set, multi_contrast=None):
    """Reconstruct the test slices under mask and score them.

    :param net: The trained reconstructor.
    :param mask: The :class:`LineMask`.
    :param test_set: The list of :class:`mcmr.datasets.SlicePair`.
    :param multi_contrast: Feed T1 as a second channel, default from the
        network input channel count.
    :return: The :class:`EvalReport`.
    """
    if not len(test_set):
        raise InvalidInputError('test set is empty')
    _check_pairs(test_set, 'test', mask.n_lines)
    if multi_contrast is None:
        multi_contrast = net.config.in_channels == 2
    if (2 if multi_contrast else 1) != net.config.in_channels:
        raise ShapeError('multi_contrast does not match the network input channels')
    t1, t2 = stack_pairs(test_set)
    zero_filled = zero_filled_recon(t2, mask.to_array()).to(torch.float32)
    recon = reconstruct(net, zero_filled, t1, multi_contrast)
    scores = [score_slice(p.id, r, p.t2) for p, r in zip(test_set, recon)]
    return EvalReport(scores, mask.to_dict(), mask.acceleration)


@dataclass
class ComparisonRow:
    mask: str
    mode: str
    acceleration: float
    mean_mae: float
    mean_psnr_db: float
    mean_ssim: float


def compare_masks(dataset, masks, config: TrainConfig, modes=('single', 'multi')):
    """Train and evaluate stage 2 for every mask in each contrast mode.

    :param dataset: The :class:`mcmr.datasets.PairSplits`.
    :param masks: The dict of name to :class:`LineMask`.
    :param config: The shared :class:`TrainConfig`; multi_contrast is
        replaced per mode.
    :return: The list of :class:`ComparisonRow`.
    """
    rows = []
    for name, mask in masks.items():
        for mode in modes:
            cfg = replace(config, multi_contrast=(mode == 'multi'))
            net, _ = train_stage2(dataset, mask, cfg)
            report = evaluate(net, mask, dataset.test, cfg.multi_contrast)
            rows.append(ComparisonRow(name, mode, mask.acceleration, report.mean_mae,
                                      report.mean_psnr_db, report.mean_ssim))
            log.info('compare %s/%s: psnr=%s ssim=%.4f', name, mode, format_db(report.mean_psnr_db),
                     report.mean_ssim)
    return rows


def write_comparison_csv(path, rows):
    with open(path, 'wt', encoding='utf-8', newline='\n') as f:
        f.write('mask,mode,acceleration,mean_mae,mean_psnr_db,mean_ssim\n')
        for r in rows:
            f.write(f'{r.mask},{r.mode},{r.acceleration:.6f},{r.mean_mae:.6f},'
                    f'{format_db(r.mean_psnr_db)},{r.mean_ssim:.6f}\n')
