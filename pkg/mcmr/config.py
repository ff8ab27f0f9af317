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

"""The run configuration shared by the command-line subcommands."""

from dataclasses import asdict, dataclass, fields
import json
from .errors import ConfigError, InvalidInputError
from .training import TrainConfig


@dataclass(frozen=True)
class RunConfig(TrainConfig):
    """Every training, network and sampler hyperparameter plus paths.

    :param data: The dataset manifest path.
    :param out: The output directory.
    :param warm_start: The stage-1 network checkpoint used to start stage 2.
    """
    data: str = ''
    out: str = ''
    warm_start: str = ''

    @staticmethod
    def keys():
        return [f.name for f in fields(RunConfig)]

    def train_config(self) -> TrainConfig:
        d = asdict(self)
        return TrainConfig(**{k: d[k] for k in TrainConfig.field_names()})

    @staticmethod
    def from_dict(d, overrides=None):
        """Construct and validate from a dict, rejecting unknown keys.

        :param d: The config file values.
        :param overrides: Values that take precedence over d.
        """
        if not isinstance(d, dict):
            raise ConfigError('config must be a JSON object')
        merged = {**d, **(overrides or {})}
        unknown = sorted(set(merged) - set(RunConfig.keys()))
        if unknown:
            raise ConfigError(f'unknown config keys: {", ".join(unknown)}')
        types = {f.name: f.type for f in fields(RunConfig)}
        values = {}
        for key, value in merged.items():
            values[key] = _coerce(key, value, types[key])
        config = RunConfig(**values)
        try:
            config.validate()
        except InvalidInputError as ex:
            raise ConfigError(str(ex))
        return config

    @staticmethod
    def load(path, overrides=None):
        if path is None:
            return RunConfig.from_dict({}, overrides)
        with open(path, 'rt', encoding='utf-8') as f:
            try:
                d = json.load(f)
            except json.JSONDecodeError as ex:
                raise ConfigError(f'invalid config file {path}: {ex}')
        return RunConfig.from_dict(d, overrides)

    def to_json(self):
        return json.dumps(asdict(self), indent=2)


def _coerce(key, value, type_):
    type_name = type_ if isinstance(type_, str) else type_.__name__
    if type_name == 'bool':
        if isinstance(value, bool):
            return value
        raise ConfigError(f'{key} must be a boolean, got {value!r}')
    if type_name == 'int':
        if isinstance(value, int) and not isinstance(value, bool):
            return value
        raise ConfigError(f'{key} must be an integer, got {value!r}')
    if type_name == 'float':
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        raise ConfigError(f'{key} must be a number, got {value!r}')
    if isinstance(value, str):
        return value
    raise ConfigError(f'{key} must be a string, got {value!r}')
