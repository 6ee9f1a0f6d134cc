# python/nebula/__init__.py

# Copyright 2026  The Nebula Authors

# See COPYING at the top of the tree for authorship details
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#  http://www.apache.org/licenses/LICENSE-2.0
#
# THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
# KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
# WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
# MERCHANTABLITY OR NON-INFRINGEMENT.
# See the Apache 2 License for the specific language governing permissions and
# limitations under the License.

"""F0 and voicing estimation with mixture models trained on synthetic data."""

from ._nebula import (
    FormatError,
    InvalidArgument,
    IoError,
    Model,
    ModelError,
    NebulaError,
    evaluate,
    filterbank,
    load_wav,
    snr_if,
)

__all__ = [
    "FormatError",
    "InvalidArgument",
    "IoError",
    "Model",
    "ModelError",
    "NebulaError",
    "evaluate",
    "filterbank",
    "load_wav",
    "snr_if",
]
