# Copyright 2026 The LQR Lab Authors. All Rights Reserved.
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
"""LQR speech-quality metrics from residual vector quantization."""

from lqrlab._core import (
    LqrError,
    Model,
    degrade,
    encode,
    kmeans,
    load_wav,
    pearson,
    quantize,
    read_ltnt,
    report_from_sigmas,
    resample,
    run_cli,
    score,
    score_clip,
    snr_baseline,
    spearman,
    train,
    write_ltnt,
    write_wav,
)

__all__ = [
    "LqrError",
    "Model",
    "degrade",
    "encode",
    "kmeans",
    "load_wav",
    "pearson",
    "quantize",
    "read_ltnt",
    "report_from_sigmas",
    "resample",
    "run_cli",
    "score",
    "score_clip",
    "snr_baseline",
    "spearman",
    "train",
    "write_ltnt",
    "write_wav",
]
