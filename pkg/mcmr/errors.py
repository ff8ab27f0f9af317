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

"""Exceptions raised by the mcmr package.

Most errors also derive from :class:`ValueError` so callers that only
care about bad arguments can catch the builtin.
"""


class McmrError(Exception):
    """Base class for all mcmr errors."""
    exit_code = 1


class InvalidInputError(McmrError, ValueError):
    """Input values are not finite, empty, or otherwise unusable."""


class ShapeError(McmrError, ValueError):
    """Array shapes do not agree."""


class InvalidMaskError(McmrError, ValueError):
    """A sampling mask value or index is out of range."""


class InvalidBudgetError(McmrError, ValueError):
    """A line budget is outside [1, n_lines]."""


class InvalidSigmaError(McmrError, ValueError):
    """A Gaussian mask width is not positive."""


class ConfigError(McmrError, ValueError):
    """A run configuration is invalid or has unknown keys."""
    exit_code = 3


class CorruptFileError(McmrError):
    """A pair, mask or manifest file does not parse."""
    exit_code = 5


class CorruptCheckpointError(CorruptFileError):
    """A checkpoint manifest does not match its blob."""


class DivergedTrainingError(McmrError):
    """Training produced a non-finite loss or gradient.

    :param message: The user-meaningful description.
    :param last_finite_step: The last step with a finite loss, or None.
    """
    exit_code = 6

    def __init__(self, message, last_finite_step=None):
        super().__init__(message)
        self.last_finite_step = last_finite_step


EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_CONFIG = ConfigError.exit_code
EXIT_IO = 4
EXIT_CORRUPT = CorruptFileError.exit_code
EXIT_DIVERGED = DivergedTrainingError.exit_code
