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

"""Image quality metrics and the evaluation report."""

from dataclasses import dataclass, field
import math
import numpy as np
from skimage.metrics import structural_similarity
from .errors import InvalidInputError, ShapeError


SSIM_WIN_SIZE = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
PGM_MAXVAL = 65535


def _as_pair(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ShapeError(f'shape mismatch {x.shape} != {y.shape}')
    return x, y


def mae(x, y):
    """Mean absolute error."""
    x, y = _as_pair(x, y)
    return float(np.mean(np.abs(x - y)))


def mse(x, y):
    x, y = _as_pair(x, y)
    return float(np.mean((x - y) ** 2))


def psnr(x, y, data_range=1.0):
    """Peak signal-to-noise ratio in dB, math.inf when the images match."""
    if data_range <= 0:
        raise InvalidInputError(f'data_range must be > 0, got {data_range}')
    err = mse(x, y)
    if err == 0:
        return math.inf
    return 10.0 * math.log10(data_range ** 2 / err)


def ssim(x, y, data_range=1.0):
    """Structural similarity with an 11 x 11 Gaussian window, sigma 1.5.

    Uses population statistics and averages the SSIM map over the pixels
    where the window fits entirely (a 5 pixel border is cropped).
    """
    x, y = _as_pair(x, y)
    if x.ndim != 2 or min(x.shape) < SSIM_WIN_SIZE:
        raise InvalidInputError(f'ssim requires a 2D image of at least {SSIM_WIN_SIZE}x{SSIM_WIN_SIZE}')
    return float(structural_similarity(
        x, y,
        data_range=data_range,
        gaussian_weights=True,
        sigma=SSIM_SIGMA,
        use_sample_covariance=False,
        K1=SSIM_K1,
        K2=SSIM_K2))


def error_map(x, y):
    """Per-pixel |x - y|."""
    x, y = _as_pair(x, y)
    return np.abs(x - y)


def format_db(value):
    return 'inf' if math.isinf(value) else f'{value:.6f}'


@dataclass
class SliceScore:
    slice_id: str
    mae: float
    psnr_db: float
    ssim: float


@dataclass
class EvalReport:
    """Per-slice scores with their means and the mask used.

    :param per_slice: The list of :class:`SliceScore`.
    :param mask: The mask descriptor dict (n_lines, budget, indices).
    :param acceleration: The mask acceleration factor.
    """
    per_slice: list
    mask: dict = field(default_factory=dict)
    acceleration: float = 1.0

    @property
    def mean_mae(self):
        return float(np.mean([s.mae for s in self.per_slice]))

    @property
    def mean_psnr_db(self):
        return float(np.mean([s.psnr_db for s in self.per_slice]))

    @property
    def mean_ssim(self):
        return float(np.mean([s.ssim for s in self.per_slice]))

    def to_csv(self, path):
        """Write slice_id,mae,psnr_db,ssim rows and a final MEAN row."""
        with open(path, 'wt', encoding='utf-8', newline='\n') as f:
            f.write('slice_id,mae,psnr_db,ssim\n')
            for s in self.per_slice:
                f.write(f'{s.slice_id},{s.mae:.6f},{format_db(s.psnr_db)},{s.ssim:.6f}\n')
            f.write(f'MEAN,{self.mean_mae:.6f},{format_db(self.mean_psnr_db)},{self.mean_ssim:.6f}\n')


def score_slice(slice_id, recon, target, data_range=1.0):
    return SliceScore(str(slice_id), mae(recon, target), psnr(recon, target, data_range),
                      ssim(recon, target, data_range))


def write_pgm(path, img):
    """Write a [0, 1] image as a 16-bit binary PGM (P5)."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ShapeError(f'PGM requires a 2D image, got shape {img.shape}')
    h, w = img.shape
    v = np.round(np.clip(img, 0.0, 1.0) * PGM_MAXVAL).astype('>u2')
    with open(path, 'wb') as f:
        f.write(f'P5\n{w} {h}\n{PGM_MAXVAL}\n'.encode('ascii'))
        f.write(v.tobytes())


def read_pgm(path):
    """Read a 16-bit binary PGM written by :func:`write_pgm` into [0, 1]."""
    with open(path, 'rb') as f:
        data = f.read()
    parts = data.split(b'\n', 3)
    if len(parts) != 4 or parts[0] != b'P5':
        raise InvalidInputError(f'not a binary PGM: {path}')
    w, h = [int(x) for x in parts[1].split()]
    maxval = int(parts[2])
    v = np.frombuffer(parts[3], dtype='>u2', count=w * h)
    return v.reshape((h, w)).astype(np.float64) / maxval
