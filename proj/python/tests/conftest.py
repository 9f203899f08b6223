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

import wave

import numpy as np
import pytest


def vowel(seconds, rate, seed):
    """Harmonic tone with a moving spectral envelope and syllable-rate AM."""
    rng = np.random.default_rng(seed)
    t = np.arange(int(seconds * rate)) / rate
    f0 = 110 + 40 * rng.random() + 15 * np.sin(2 * np.pi * 0.7 * t)
    phase = 2 * np.pi * np.cumsum(f0) / rate
    formant = 700 + 400 * np.sin(2 * np.pi * 0.5 * t + rng.random() * 6)
    x = np.zeros_like(t)
    for h in range(1, 30):
        freq = h * f0
        gain = 1.0 / (1.0 + ((freq - formant) / 200.0) ** 2) / h ** 0.5
        x += gain * np.sin(h * phase) * (freq < rate / 2)
    x *= 0.625 + 0.375 * np.sin(2 * np.pi * 4 * t)
    return 0.5 * x / np.max(np.abs(x))


def write_pcm16(path, samples, rate):
    data = np.clip(np.round(samples * 32767), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(rate)
        w.writeframes(data.tobytes())


@pytest.fixture
def corpus_dir(tmp_path):
    for i in range(3):
        write_pcm16(tmp_path / f"clean{i}.wav", vowel(1.0, 16000, i), 16000)
    (tmp_path / "train.csv").write_text("path\n" + "".join(f"clean{i}.wav\n" for i in range(3)))
    return tmp_path
