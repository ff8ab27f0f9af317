#!/usr/bin/env python3
# -*- coding: utf-8 -*-

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

"""Run the multi-contrast sampling and reconstruction pipeline.

Desk-scale example, from the repository root:

    python3 bin/mcmr_pipeline.py synth --out data --pairs 300 --size 64 --seed 0
    python3 bin/mcmr_pipeline.py train-acq --config configs/desk_scale.json --out runs/acq
    python3 bin/mcmr_pipeline.py extract-mask --sampler runs/acq/sampler.json --budget 6 --out runs/learned.json
    python3 bin/mcmr_pipeline.py train-recon --config configs/desk_scale.json --mask runs/learned.json --out runs/recon
    python3 bin/mcmr_pipeline.py eval --data data/manifest.json --mask runs/learned.json \
        --weights runs/recon/recon_net.json --out runs/report.csv
    python3 bin/mcmr_pipeline.py export-figures --data data/manifest.json --mask runs/learned.json \
        --weights runs/recon/recon_net.json --out runs/figures

Use "--help" with any command for the full list of flags.
"""

import os
import sys


# Force mcmr package to be in Python import path
PROJECT_PATH = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.append(PROJECT_PATH)
from mcmr.cli import run


if __name__ == '__main__':
    sys.exit(run())
