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

"""Cartesian k-space acquisition model.

Images are real (..., H, W) arrays.  k-space is a complex (..., H, W)
tensor with the DC coefficient at row H // 2, column W // 2.  Rows are
phase-encode lines, so a line mask is a length-H vector applied along
dimension -2.  Both transform directions use orthonormal scaling so
Parseval holds exactly.

All functions accept numpy arrays or torch tensors and return torch
tensors.  float64 / complex128 inputs stay in double precision.
"""

import numpy as np
import torch
from .errors import InvalidInputError, InvalidMaskError, ShapeError


_DIMS = (-2, -1)


def _as_tensor(x):
    if isinstance(x, torch.Tensor):
        return x
    return torch.as_tensor(np.asarray(x))


def _check_image_dims(x):
    if x.dim() < 2:
        raise ShapeError(f'expected (..., H, W), got shape {tuple(x.shape)}')
    h, w = x.shape[-2:]
    if h < 2 or w < 2:
        raise ShapeError(f'H and W must be >= 2, got {h}x{w}')


def _check_finite(x):
    if not bool(torch.isfinite(x).all()):
        raise InvalidInputError('non-finite values in input')


def fft2_centered(img):
    """Compute the DC-centered orthonormal 2D spectrum.

    :param img: The real (..., H, W) image.
    :return: The complex (..., H, W) k-space tensor.
    """
    x = _as_tensor(img)
    _check_image_dims(x)
    _check_finite(x)
    if not torch.is_complex(x):
        x = x.to(torch.complex128 if x.dtype == torch.float64 else torch.complex64)
    k = torch.fft.fft2(x, norm='ortho')
    return torch.fft.fftshift(k, dim=_DIMS)


def ifft2_centered(k):
    """Invert :func:`fft2_centered`.

    :param k: The complex (..., H, W) k-space tensor.
    :return: The complex (..., H, W) image.  Use .real / .imag for the
        planes or :func:`magnitude_image` for the magnitude.
    """
    k = _as_tensor(k)
    _check_image_dims(k)
    _check_finite(k)
    return torch.fft.ifft2(torch.fft.ifftshift(k, dim=_DIMS), norm='ortho')


def magnitude_image(x):
    """Per-pixel sqrt(re^2 + im^2)."""
    return torch.abs(_as_tensor(x))


def kspace_planes(k):
    """Split complex k-space into its (real_plane, imag_plane) pair."""
    k = _as_tensor(k)
    return k.real, k.imag


def apply_line_mask(k, m):
    """Scale each phase-encode line (row) of k-space.

    :param k: The complex (..., H, W) k-space tensor.
    :param m: The length-H mask with values in [0, 1].  Binary masks
        retain or zero lines; soft masks keep gradients.
    :return: The masked k-space.
    """
    k = _as_tensor(k)
    m = _as_tensor(m)
    _check_image_dims(k)
    if m.dim() != 1 or m.shape[0] != k.shape[-2]:
        raise ShapeError(f'mask shape {tuple(m.shape)} does not match {k.shape[-2]} lines')
    with torch.no_grad():
        if not bool(torch.isfinite(m).all()) or bool((m < 0).any()) or bool((m > 1).any()):
            raise InvalidMaskError('mask values must be in [0, 1]')
    m = m.to(k.real.dtype)
    return k * m.unsqueeze(-1)


def zero_filled_recon(img, m):
    """Simulate a line-masked acquisition and its zero-filled magnitude image.

    :param img: The real (..., H, W) fully-sampled image.
    :param m: The length-H line mask, binary or soft.
    :return: The real (..., H, W) zero-filled magnitude image.
    """
    k = apply_line_mask(fft2_centered(img), m)
    return magnitude_image(ifft2_centered(k))
