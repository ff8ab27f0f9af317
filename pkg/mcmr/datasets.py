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

"""Paired T1/T2 slices: synthetic phantoms, the pair file format and splits.

Pair file layout, little-endian:

    offset  size      field
    0       4         magic "MCMR"
    4       2         u16 version = 1
    6       4         u32 H
    10      4         u32 W
    14      2         u16 n_contrasts = 2
    16      4*H*W     float32 T1, row-major
    ...     4*H*W     float32 T2, row-major
"""

from dataclasses import dataclass, field
import json
import logging
import os
import struct
import numpy as np
from skimage.draw import ellipse
from .errors import CorruptFileError, InvalidInputError, ShapeError


MAGIC = b'MCMR'
VERSION = 1
N_CONTRASTS = 2
HEADER = struct.Struct('<4sHIIH')
MANIFEST_VERSION = 1
PAIR_EXT = '.mcmr'
ELLIPSE_COUNT = (5, 12)
BIAS_AMPLITUDE = 0.05
NOISE_SIGMA = 0.01
TISSUE_RANGE = (0.2, 1.0)
DESK_SPLIT = (200, 40, 60)
DESK_FRACTIONS = tuple(x / sum(DESK_SPLIT) for x in DESK_SPLIT)
log = logging.getLogger(__name__)


@dataclass
class SlicePair:
    """A reference (T1-like) and target (T2-like) slice of one anatomy."""
    t1: np.ndarray
    t2: np.ndarray
    id: str = ''

    def __post_init__(self):
        self.t1 = np.asarray(self.t1, dtype=np.float32)
        self.t2 = np.asarray(self.t2, dtype=np.float32)
        if self.t1.ndim != 2 or self.t1.shape != self.t2.shape:
            raise ShapeError(f'contrast shapes differ: {self.t1.shape} != {self.t2.shape}')

    @property
    def shape(self):
        return self.t1.shape


def normalize(img):
    """Clamp negatives to 0 and scale the maximum to 1."""
    img = np.asarray(img, dtype=np.float64)
    if not np.all(np.isfinite(img)):
        raise InvalidInputError('non-finite values in image')
    img = np.maximum(img, 0.0)
    v_max = img.max() if img.size else 0.0
    if v_max == 0:
        return np.zeros_like(img)
    return img / v_max


def _bias_field(rng, yy, xx):
    # linear + quadratic terms, scaled so the peak deviation is the amplitude
    terms = np.stack([xx, yy, xx * yy, xx * xx, yy * yy])
    coeffs = rng.uniform(-1.0, 1.0, size=len(terms))
    b = np.tensordot(coeffs, terms, axes=1)
    peak = np.max(np.abs(b))
    amplitude = rng.uniform(0.0, BIAS_AMPLITUDE)
    if peak > 0:
        b *= amplitude / peak
    return 1.0 + b


def generate_phantom_pair(height, width, seed, pair_id=None):
    """Generate a paired-contrast ellipse phantom.

    The first ellipse is the head outline.  Up to 11 more ellipses paint
    tissue labels inside it.  Each contrast maps labels to intensities
    through its own random lookup, then gets its own smooth bias field
    and Gaussian noise before per-slice normalization.

    :param height: The image height, >= 32 and divisible by 8.
    :param width: The image width, >= 32 and divisible by 8.
    :param seed: The generator seed.
    :param pair_id: The pair identifier, default derived from seed.
    :return: The :class:`SlicePair`.
    """
    height, width = int(height), int(width)
    for dim in (height, width):
        if dim < 32 or dim % 8:
            raise InvalidInputError(f'phantom dimensions must be >= 32 and divisible by 8, got {height}x{width}')
    rng = np.random.default_rng(int(seed))
    labels = np.zeros((height, width), dtype=np.int32)
    count = int(rng.integers(ELLIPSE_COUNT[0], ELLIPSE_COUNT[1] + 1))
    cy, cx = height / 2, width / 2
    head_ry = rng.uniform(0.75, 0.9) * height / 2
    head_rx = rng.uniform(0.65, 0.85) * width / 2
    rr, cc = ellipse(cy, cx, head_ry, head_rx, shape=labels.shape, rotation=rng.uniform(-0.2, 0.2))
    labels[rr, cc] = 1
    for label in range(2, count + 1):
        ry = rng.uniform(0.1, 0.4) * head_ry
        rx = rng.uniform(0.1, 0.4) * head_rx
        y0 = cy + rng.uniform(-0.5, 0.5) * head_ry
        x0 = cx + rng.uniform(-0.5, 0.5) * head_rx
        rr, cc = ellipse(y0, x0, ry, rx, shape=labels.shape, rotation=rng.uniform(-np.pi, np.pi))
        inside = labels[rr, cc] > 0
        labels[rr[inside], cc[inside]] = label

    yy, xx = np.meshgrid(np.linspace(-1.0, 1.0, height), np.linspace(-1.0, 1.0, width), indexing='ij')
    images = []
    for _ in range(N_CONTRASTS):
        lookup = np.concatenate([[0.0], rng.uniform(*TISSUE_RANGE, size=count)])
        img = lookup[labels] * _bias_field(rng, yy, xx)
        img = img + rng.normal(0.0, NOISE_SIGMA, size=img.shape)
        images.append(normalize(img).astype(np.float32))
    if pair_id is None:
        pair_id = f'pair_{int(seed):05d}'
    return SlicePair(images[0], images[1], pair_id)


def write_pair(path, pair: SlicePair):
    h, w = pair.shape
    with open(path, 'wb') as f:
        f.write(HEADER.pack(MAGIC, VERSION, h, w, N_CONTRASTS))
        f.write(pair.t1.astype('<f4').tobytes())
        f.write(pair.t2.astype('<f4').tobytes())


def read_pair(path, pair_id=None) -> SlicePair:
    with open(path, 'rb') as f:
        data = f.read()
    if len(data) < HEADER.size:
        raise CorruptFileError(f'{path}: truncated header')
    magic, version, h, w, n_contrasts = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CorruptFileError(f'{path}: bad magic {magic!r}')
    if version != VERSION:
        raise CorruptFileError(f'{path}: unsupported version {version}')
    if n_contrasts != N_CONTRASTS or h < 1 or w < 1:
        raise CorruptFileError(f'{path}: invalid shape {h}x{w}x{n_contrasts}')
    expected = HEADER.size + N_CONTRASTS * 4 * h * w
    if len(data) != expected:
        raise CorruptFileError(f'{path}: size {len(data)} != expected {expected}')
    v = np.frombuffer(data, dtype='<f4', offset=HEADER.size).astype(np.float32)
    v = v.reshape((N_CONTRASTS, h, w))
    if pair_id is None:
        pair_id = os.path.splitext(os.path.basename(path))[0]
    return SlicePair(v[0].copy(), v[1].copy(), pair_id)


@dataclass
class DatasetManifest:
    """The on-disk dataset description.

    Paths are relative to the manifest directory when written by
    :func:`generate_dataset`.
    """
    height: int
    width: int
    train: list = field(default_factory=list)
    val: list = field(default_factory=list)
    test: list = field(default_factory=list)
    generation: dict = field(default_factory=dict)
    version: int = MANIFEST_VERSION
    root: str = ''

    def __post_init__(self):
        sets = [set(self.train), set(self.val), set(self.test)]
        if any(len(s) != len(x) for s, x in zip(sets, [self.train, self.val, self.test])):
            raise InvalidInputError('duplicate entries within a split')
        if (sets[0] & sets[1]) or (sets[0] & sets[2]) or (sets[1] & sets[2]):
            raise InvalidInputError('splits are not disjoint')

    def to_dict(self):
        return {
            'version': self.version,
            'H': self.height,
            'W': self.width,
            'train': list(self.train),
            'val': list(self.val),
            'test': list(self.test),
            'generation': dict(self.generation),
        }

    def path(self, entry):
        return os.path.join(self.root, entry)


def split(ids, fractions, seed):
    """Randomly partition ids into train / val / test.

    :param ids: The sequence of identifiers.
    :param fractions: The (train, val, test) fractions, summing to <= 1.
    :param seed: The shuffle seed.
    :return: The :class:`DatasetManifest` with the id lists (H = W = 0).
    """
    ids = list(ids)
    fractions = [float(f) for f in fractions]
    if len(fractions) != 3 or any(f < 0 for f in fractions) or sum(fractions) > 1 + 1e-9:
        raise InvalidInputError(f'invalid split fractions {fractions}')
    n = len(ids)
    sizes = [int(round(f * n)) for f in fractions]
    if sum(fractions) >= 1 - 1e-9:
        sizes[2] = n - sizes[0] - sizes[1]
    sizes[2] = min(sizes[2], n - sizes[0] - sizes[1])
    order = np.random.default_rng(int(seed)).permutation(n)
    shuffled = [ids[i] for i in order]
    a, b = sizes[0], sizes[0] + sizes[1]
    return DatasetManifest(0, 0, shuffled[:a], shuffled[a:b], shuffled[b:b + sizes[2]],
                           generation={'split_seed': int(seed), 'fractions': fractions})


def write_manifest(path, manifest: DatasetManifest):
    with open(path, 'wt', encoding='utf-8') as f:
        f.write(json.dumps(manifest.to_dict(), indent=2))


def read_manifest(path) -> DatasetManifest:
    """Read and validate a manifest; every referenced file must parse."""
    try:
        with open(path, 'rt', encoding='utf-8') as f:
            d = json.load(f)
        manifest = DatasetManifest(int(d['H']), int(d['W']), list(d['train']), list(d['val']),
                                   list(d['test']), dict(d.get('generation', {})), int(d['version']),
                                   root=os.path.dirname(os.path.abspath(path)))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as ex:
        raise CorruptFileError(f'invalid manifest {path}: {ex}')
    if manifest.version != MANIFEST_VERSION:
        raise CorruptFileError(f'unsupported manifest version {manifest.version}')
    for entry in manifest.train + manifest.val + manifest.test:
        if not os.path.isfile(manifest.path(entry)):
            raise CorruptFileError(f'manifest references missing file {entry}')
    return manifest


def load_split(manifest: DatasetManifest, name):
    """Load the list of :class:`SlicePair` for split name in train, val, test."""
    if name not in ('train', 'val', 'test'):
        raise ValueError(f'unsupported split {name}')
    pairs = []
    for entry in getattr(manifest, name):
        pair = read_pair(manifest.path(entry))
        if pair.shape != (manifest.height, manifest.width):
            raise CorruptFileError(f'{entry}: shape {pair.shape} does not match manifest')
        pairs.append(pair)
    return pairs


def generate_dataset(out_dir, pairs, size, seed, fractions=DESK_FRACTIONS):
    """Write synthetic pair files and their manifest.

    Pair i uses phantom seed (seed * 1_000_003 + i) so datasets with
    different seeds do not share phantoms.

    :return: The path to manifest.json.
    """
    os.makedirs(out_dir, exist_ok=True)
    names = []
    for i in range(int(pairs)):
        pair = generate_phantom_pair(size, size, int(seed) * 1_000_003 + i, pair_id=f'pair_{i:05d}')
        name = pair.id + PAIR_EXT
        write_pair(os.path.join(out_dir, name), pair)
        names.append(name)
    log.info('wrote %d pairs to %s', len(names), out_dir)
    manifest = split(names, fractions, seed)
    manifest.height = manifest.width = int(size)
    manifest.generation.update({
        'seed': int(seed),
        'pairs': int(pairs),
        'size': int(size),
        'ellipse_count': list(ELLIPSE_COUNT),
        'bias_amplitude': BIAS_AMPLITUDE,
        'noise_sigma': NOISE_SIGMA,
    })
    path = os.path.join(out_dir, 'manifest.json')
    write_manifest(path, manifest)
    return path


@dataclass
class PairSplits:
    """The train / val / test lists of :class:`SlicePair`."""
    train: list
    val: list = field(default_factory=list)
    test: list = field(default_factory=list)


def load_splits(manifest: DatasetManifest) -> PairSplits:
    return PairSplits(*[load_split(manifest, name) for name in ('train', 'val', 'test')])
