import numpy as np
import pytest

import cv2
from scipy.io import wavfile


def write_video(path, n_frames, size=(256, 192), fps=25.0, moving=True):
    writer = cv2.VideoWriter(str(path), cv2.VideoWriter_fourcc(*"MJPG"), fps, size)
    assert writer.isOpened()
    w, h = size
    rng = np.random.default_rng(0)
    texture = rng.integers(0, 255, size=(h, w, 3), dtype=np.uint8)
    for i in range(n_frames):
        if moving:
            frame = np.roll(texture, shift=3 * i, axis=1)
            cv2.circle(frame, (int(w / 2 + 40 * np.sin(i / 8)), h // 2), 25,
                       (255, 255, 255), -1)
        else:
            frame = texture.copy()
        writer.write(frame)
    writer.release()
    return path


def write_tone_wav(path, seconds, rate=16000, silent=False):
    t = np.arange(int(seconds * rate)) / rate
    if silent:
        signal = np.zeros_like(t)
    else:
        signal = (
            0.5 * np.sin(2 * np.pi * 220 * t)
            + 0.3 * np.sin(2 * np.pi * (440 + 30 * np.sin(2 * np.pi * 0.5 * t)) * t)
        )
        signal *= 0.5 + 0.5 * np.sin(2 * np.pi * 0.25 * t) ** 2  # slow loudness drift
        rng = np.random.default_rng(1)
        signal += 0.02 * rng.standard_normal(t.shape)
    wavfile.write(str(path), rate, (signal * 32000).astype(np.int16))
    return path


@pytest.fixture(scope="session")
def media_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("media")


@pytest.fixture(scope="session")
def ten_second_video(media_dir):
    return write_video(media_dir / "clip10s.avi", 250)


@pytest.fixture(scope="session")
def ten_second_wav(media_dir):
    return write_tone_wav(media_dir / "clip10s.wav", 10.0)


@pytest.fixture(scope="session")
def static_video(media_dir):
    return write_video(media_dir / "static.avi", 50, moving=False)


@pytest.fixture(scope="session")
def silent_wav(media_dir):
    return write_tone_wav(media_dir / "silent.wav", 2.0, silent=True)
