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

"""Export the mask / zero-filled / reconstruction / error map panel."""

import logging
import os
import matplotlib.pyplot as plt
import numpy as np
import torch
from .errors import InvalidInputError
from .forward_model import zero_filled_recon
from .metrics import EvalReport, error_map, score_slice, write_pgm
from .training import reconstruct, stack_pairs


COLUMNS = ['mask', 'zero_filled', 'recon', 'ground_truth', 'error']
log = logging.getLogger(__name__)


def export_figures(net, mask, pairs, out_dir, multi_contrast=None, show=None):
    """Write PGM images, a metrics CSV and panel.png for pairs.

    For each pair, writes {id}_{column}.pgm for every entry of
    :data:`COLUMNS` plus {id}_zero_filled_error.pgm.

    :param net: The trained reconstructor.
    :param mask: The :class:`LineMask`.
    :param pairs: The list of :class:`SlicePair` to render.
    :param out_dir: The output directory.
    :param multi_contrast: Feed T1, default from the network.
    :param show: Display the panel interactively.
    :return: The :class:`EvalReport` for pairs.
    """
    if not len(pairs):
        raise InvalidInputError('no slices to export')
    os.makedirs(out_dir, exist_ok=True)
    if multi_contrast is None:
        multi_contrast = net.config.in_channels == 2
    t1, t2 = stack_pairs(pairs)
    zero_filled = zero_filled_recon(t2, mask.to_array()).to(torch.float32)
    recon = reconstruct(net, zero_filled, t1, multi_contrast)
    zero_filled = zero_filled.numpy()
    width = pairs[0].shape[1]
    mask_img = mask.to_image(width)
    scores = []
    rows = []
    for pair, zf, r in zip(pairs, zero_filled, recon):
        images = {
            'mask': mask_img,
            'zero_filled': zf,
            'recon': r,
            'ground_truth': pair.t2,
            'error': error_map(r, pair.t2),
        }
        for name, img in images.items():
            write_pgm(os.path.join(out_dir, f'{pair.id}_{name}.pgm'), img)
        write_pgm(os.path.join(out_dir, f'{pair.id}_zero_filled_error.pgm'), error_map(zf, pair.t2))
        scores.append(score_slice(pair.id, r, pair.t2))
        rows.append(images)
    report = EvalReport(scores, mask.to_dict(), mask.acceleration)
    report.to_csv(os.path.join(out_dir, 'metrics.csv'))
    _plot_panel(rows, [p.id for p in pairs], os.path.join(out_dir, 'panel.png'), show)
    log.info('exported %d slices to %s', len(pairs), out_dir)
    return report


def _plot_panel(rows, ids, path, show):
    f = plt.figure(figsize=(2 * len(COLUMNS), 2 * len(rows)))
    for row, (images, slice_id) in enumerate(zip(rows, ids)):
        for col, name in enumerate(COLUMNS):
            ax = f.add_subplot(len(rows), len(COLUMNS), row * len(COLUMNS) + col + 1)
            ax.imshow(np.clip(images[name], 0.0, 1.0), cmap='gray', vmin=0.0, vmax=1.0)
            ax.set_xticks([])
            ax.set_yticks([])
            if row == 0:
                ax.set_title(name)
            if col == 0:
                ax.set_ylabel(slice_id)
    f.savefig(path, metadata={'Software': None})
    if show:
        plt.show()
    plt.close(f)
