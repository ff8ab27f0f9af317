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

"""Command-line driver for the sampling + reconstruction pipeline.

Subcommands: synth, make-mask, train-acq, extract-mask, train-recon,
eval, export-figures, compare.  Use "--help" on any subcommand for its
flags.  Training subcommands read an optional JSON "--config" file;
flags given on the command line take precedence over file values.

Exit codes:

    0  success
    1  other error
    2  usage error (unknown flag or subcommand)
    3  invalid configuration
    4  file system / IO failure
    5  corrupt input file or checkpoint
    6  diverged training

Set the MCMR_LOG_LEVEL environment variable (DEBUG, INFO, WARNING, ERROR)
to change the log verbosity.
"""

import argparse
import json
import logging
import os
import sys
from . import recon_net
from .config import RunConfig
from .datasets import generate_dataset, load_split, load_splits, read_manifest
from .errors import EXIT_ERROR, EXIT_IO, EXIT_OK, EXIT_USAGE, ConfigError, McmrError
from .figures import export_figures
from .mask_zoo import KINDS, generator_factory, read_mask, write_mask
from .sampler import extract_mask, load_sampler
from .training import TrainConfig, compare_masks, evaluate, train_stage1, train_stage2, \
    write_comparison_csv


LOG_LEVEL_ENV = 'MCMR_LOG_LEVEL'
log = logging.getLogger(__name__)

_TRAIN_HELP = {
    'learning_rate': 'The Adam learning rate.',
    'adam_beta1': 'The Adam first moment decay.',
    'adam_beta2': 'The Adam second moment decay.',
    'adam_eps': 'The Adam epsilon.',
    'batch_size': 'The number of slices per step.',
    'steps': 'The number of optimizer steps.',
    'seed': 'The seed for initialization and batch order.',
    'budget': 'The number of phase-encode lines to sample.',
    'sparsity_coeff': 'The L1 sparsity coefficient (lambda).',
    'slope': 'The sampler sigmoid slope.',
    'depth': 'The U-net depth.',
    'base_channels': 'The U-net channels at full resolution.',
}


def _positive_int(string):
    value = int(string)
    if value < 1:
        raise argparse.ArgumentTypeError('%r must be >= 1' % (string, ))
    return value


def _bool(string):
    s = str(string).lower()
    if s in ('1', 'true', 'yes', 'on'):
        return True
    if s in ('0', 'false', 'no', 'off'):
        return False
    raise argparse.ArgumentTypeError('%r is not a boolean' % (string, ))


def _add_run_args(p, paths):
    """Add --config and the RunConfig flags, which only override when given."""
    defaults = RunConfig()
    p.add_argument('--config', '-c',
                   help='The JSON run configuration file.')
    for name, text in paths.items():
        p.add_argument('--' + name.replace('_', '-'),
                       dest=name,
                       default=argparse.SUPPRESS,
                       help=text)
    for name, text in _TRAIN_HELP.items():
        default = getattr(defaults, name)
        p.add_argument('--' + name.replace('_', '-'),
                       dest=name,
                       type=type(default),
                       default=argparse.SUPPRESS,
                       help=f'{text}  (default: {default})')
    p.add_argument('--multi-contrast',
                   dest='multi_contrast',
                   type=_bool,
                   default=argparse.SUPPRESS,
                   help=f'Concatenate the T1 reference to the network input.  '
                        f'(default: {defaults.multi_contrast})')
    p.add_argument('--single-contrast',
                   dest='multi_contrast',
                   action='store_false',
                   default=argparse.SUPPRESS,
                   help='Shorthand for "--multi-contrast false".')
    p.add_argument('--residual',
                   type=_bool,
                   default=argparse.SUPPRESS,
                   help=f'Add the zero-filled input to the network output.  (default: {defaults.residual})')


def get_parser():
    p = argparse.ArgumentParser(
        prog='mcmr',
        description='Joint optimization of a Cartesian sampling mask and a multi-contrast reconstructor.',
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    sub = p.add_subparsers(dest='command', metavar='command')
    sub.required = True

    s = sub.add_parser('synth', help='Generate a synthetic paired-contrast dataset.',
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    s.add_argument('--out', '-o', required=True,
                   help='The output directory for pair files and manifest.json.')
    s.add_argument('--pairs', type=_positive_int, default=300,
                   help='The number of slice pairs.')
    s.add_argument('--size', type=_positive_int, default=64,
                   help='The image height and width in pixels.')
    s.add_argument('--seed', type=int, default=0,
                   help='The generation and split seed.')
    s.set_defaults(func=_on_synth)

    s = sub.add_parser('make-mask', help='Generate a baseline line mask.',
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    s.add_argument('--kind', choices=KINDS, default='lowres',
                   help='The mask family.')
    s.add_argument('--n', type=_positive_int, default=64,
                   help='The number of phase-encode lines.')
    s.add_argument('--budget', type=_positive_int, default=6,
                   help='The number of sampled lines.')
    s.add_argument('--center-fraction', type=float, default=2 / 3,
                   help='The budget fraction in the center block (equidistant).')
    s.add_argument('--sigma', type=float,
                   help='The density width in lines (gaussian), default n / 6.')
    s.add_argument('--seed', type=int, default=0,
                   help='The generator seed (gaussian).')
    s.add_argument('--out', '-o', required=True,
                   help='The output mask JSON file.')
    s.set_defaults(func=_on_make_mask)

    s = sub.add_parser('train-acq', help='Stage 1: train the sampler with a reconstructor.')
    _add_run_args(s, {
        'data': 'The dataset manifest.json path.',
        'out': 'The output directory.',
    })
    s.set_defaults(func=_on_train_acq)

    s = sub.add_parser('extract-mask', help='Binarize a trained sampler into a line mask.',
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    s.add_argument('--sampler', required=True,
                   help='The sampler checkpoint written by train-acq.')
    s.add_argument('--budget', type=_positive_int, default=RunConfig().budget,
                   help='The number of sampled lines.')
    s.add_argument('--out', '-o', required=True,
                   help='The output mask JSON file.')
    s.set_defaults(func=_on_extract_mask)

    s = sub.add_parser('train-recon', help='Stage 2: train the reconstructor for a fixed mask.')
    _add_run_args(s, {
        'data': 'The dataset manifest.json path.',
        'out': 'The output directory.',
        'warm_start': 'Start from this network checkpoint instead of a fresh initialization.',
    })
    s.add_argument('--mask', required=True,
                   help='The mask JSON file.')
    s.set_defaults(func=_on_train_recon)

    for name, fn, text in [('eval', _on_eval, 'Evaluate a reconstructor on a dataset split.'),
                           ('export-figures', _on_export_figures, 'Export mask, recon and error map images.')]:
        s = sub.add_parser(name, help=text, formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        s.add_argument('--data', required=True,
                       help='The dataset manifest.json path.')
        s.add_argument('--mask', required=True,
                       help='The mask JSON file.')
        s.add_argument('--weights', required=True,
                       help='The network checkpoint written by train-recon.')
        s.add_argument('--split', choices=['train', 'val', 'test'], default='test',
                       help='The dataset split.')
        s.add_argument('--out', '-o', required=True,
                       help='The output CSV file (eval) or directory (export-figures).')
        if name == 'export-figures':
            s.add_argument('--count', type=_positive_int, default=4,
                           help='The number of slices to export.')
            s.add_argument('--show', action='store_true',
                           help='Display the panel.')
        s.set_defaults(func=fn)

    s = sub.add_parser('compare', help='Train and evaluate every mask in single and multi contrast mode.')
    _add_run_args(s, {
        'data': 'The dataset manifest.json path.',
        'out': 'The output directory.',
    })
    s.add_argument('--mask', action='append', default=[], metavar='NAME=PATH',
                   help='A named mask file.  Repeat for more masks.  '
                        'The lowres, equidistant and gaussian baselines for the budget are always included.')
    s.set_defaults(func=_on_compare)
    return p


def _run_config(args):
    overrides = {k: getattr(args, k) for k in RunConfig.keys() if hasattr(args, k)}
    config = RunConfig.load(args.config, overrides)
    if not config.data:
        raise ConfigError('the dataset manifest is required, use --data or the "data" key')
    if not config.out:
        raise ConfigError('the output directory is required, use --out or the "out" key')
    os.makedirs(config.out, exist_ok=True)
    return config


def _write_summary(path, config: RunConfig, train_log, extra=None):
    d = {
        'config': json.loads(config.to_json()),
        'final_mask': None if train_log.final_mask is None else train_log.final_mask.to_dict(),
        'steps': len(train_log.train_losses()),
        'wall_clock_s': train_log.wall_clock_s,
    }
    d.update(extra or {})
    with open(path, 'wt', encoding='utf-8') as f:
        f.write(json.dumps(d, indent=2))


def _on_synth(args):
    path = generate_dataset(args.out, args.pairs, args.size, args.seed)
    print(f'Wrote {args.pairs} pairs and {path}')
    return EXIT_OK


def _on_make_mask(args):
    generator = generator_factory(args.kind, args.center_fraction, args.sigma, args.seed)
    mask = generator(args.n, args.budget)
    write_mask(args.out, mask)
    print(f'{generator.name}: {mask.budget} of {mask.n_lines} lines, R={mask.acceleration:.3f}')
    return EXIT_OK


def _on_train_acq(args):
    config = _run_config(args)
    splits = load_splits(read_manifest(config.data))
    sampler, net, train_log = train_stage1(splits, config.train_config())
    sampler.save(os.path.join(config.out, 'sampler.json'))
    recon_net.save(net, os.path.join(config.out, 'stage1_net.json'))
    write_mask(os.path.join(config.out, 'stage1_mask.json'), train_log.final_mask)
    train_log.to_csv(os.path.join(config.out, 'stage1_log.csv'))
    _write_summary(os.path.join(config.out, 'stage1_summary.json'), config, train_log)
    print(f'Learned mask: {list(train_log.final_mask.indices)}')
    return EXIT_OK


def _on_extract_mask(args):
    sampler = load_sampler(args.sampler)
    mask = extract_mask(sampler, args.budget)
    write_mask(args.out, mask)
    print(f'{mask.budget} of {mask.n_lines} lines: {list(mask.indices)}')
    return EXIT_OK


def _on_train_recon(args):
    config = _run_config(args)
    mask = read_mask(args.mask)
    splits = load_splits(read_manifest(config.data))
    init_net = recon_net.load(config.warm_start) if config.warm_start else None
    net, train_log = train_stage2(splits, mask, config.train_config(), init_net=init_net)
    recon_net.save(net, os.path.join(config.out, 'recon_net.json'))
    train_log.to_csv(os.path.join(config.out, 'stage2_log.csv'))
    _write_summary(os.path.join(config.out, 'stage2_summary.json'), config, train_log)
    val = train_log.validations()
    if val:
        print(f'Validation: mae={val[-1].val_mae:.5f}, psnr={val[-1].val_psnr:.2f} dB, ssim={val[-1].val_ssim:.4f}')
    return EXIT_OK


def _on_eval(args):
    mask = read_mask(args.mask)
    pairs = load_split(read_manifest(args.data), args.split)
    net = recon_net.load(args.weights)
    report = evaluate(net, mask, pairs)
    report.to_csv(args.out)
    print(f'{len(pairs)} slices: mae={report.mean_mae:.5f}, psnr={report.mean_psnr_db:.2f} dB, '
          f'ssim={report.mean_ssim:.4f}, R={report.acceleration:.3f}')
    return EXIT_OK


def _on_export_figures(args):
    mask = read_mask(args.mask)
    pairs = load_split(read_manifest(args.data), args.split)[:args.count]
    net = recon_net.load(args.weights)
    export_figures(net, mask, pairs, args.out, show=args.show)
    print(f'Exported {len(pairs)} slices to {args.out}')
    return EXIT_OK


def _on_compare(args):
    config = _run_config(args)
    splits = load_splits(read_manifest(config.data))
    n = splits.train[0].shape[0] if splits.train else 0
    masks = {kind: generator_factory(kind, seed=config.seed)(n, config.budget) for kind in KINDS}
    for entry in args.mask:
        name, sep, path = entry.partition('=')
        if not sep or not name:
            raise ConfigError(f'invalid --mask {entry!r}, expected NAME=PATH')
        masks[name] = read_mask(path)
    rows = compare_masks(splits, masks, config.train_config())
    path = os.path.join(config.out, 'comparison.csv')
    write_comparison_csv(path, rows)
    for r in rows:
        print(f'{r.mask:>12s} {r.mode:>6s}: psnr={r.mean_psnr_db:.2f} dB, ssim={r.mean_ssim:.4f}')
    return EXIT_OK


def _logging_config():
    level = os.environ.get(LOG_LEVEL_ENV, 'WARNING').upper()
    logging.basicConfig(
        format='%(asctime)s %(levelname)-8s %(name)s %(message)s',
        level=getattr(logging, level, logging.WARNING))


def run(args=None):
    """Run the command line.

    :param args: The argument list, default sys.argv[1:].
    :return: The process exit code.
    """
    parser = get_parser()
    try:
        args = parser.parse_args(args=args)
    except SystemExit as ex:
        return EXIT_OK if ex.code in (0, None) else EXIT_USAGE
    _logging_config()
    try:
        return args.func(args)
    except McmrError as ex:
        log.debug('while running %s', args.command, exc_info=True)
        print(f'{args.command}: {ex}', file=sys.stderr)
        return ex.exit_code
    except OSError as ex:
        log.debug('while running %s', args.command, exc_info=True)
        print(f'{args.command}: {ex}', file=sys.stderr)
        return EXIT_IO
    except ValueError as ex:
        print(f'{args.command}: {ex}', file=sys.stderr)
        return EXIT_ERROR


if __name__ == '__main__':
    sys.exit(run())
