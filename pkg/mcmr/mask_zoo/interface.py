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

import abc


class MaskGeneratorInterface(metaclass=abc.ABCMeta):

    @property
    @abc.abstractmethod
    def name(self):
        return '__interface__'

    @abc.abstractmethod
    def generate(self, n, budget):
        """Generate a line mask.

        :param n: The total number of phase-encode lines.
        :param budget: The number of lines to sample.
        :return: The :class:`LineMask`.
        """
        raise NotImplementedError()

    def __call__(self, n, budget):
        return self.generate(n, budget)
