import numpy as np
import pytest
from scipy.special import softmax

from src.io_formats.tensor_file import write_tensor

MANIFEST_HEADER = "video,index,feature_path,probmap_path,label_path,pixel_path,split\n"


def write_dataset(root, n_videos=3, frames_per_video=6, K=3, H=4, W=4, d=4, seed=0,
                  with_probmaps=True, skip_probmap=None):
    """Write a small TNSR dataset plus manifest under ``root``; return the manifest path.

    Video 0 is tagged labeled, the last video test, the rest pool.
    """
    rng = np.random.default_rng(seed)
    tensors = root / "tensors"
    tensors.mkdir(parents=True, exist_ok=True)
    lines = [MANIFEST_HEADER]
    for video in range(n_videos):
        split = "labeled" if video == 0 else "test" if video == n_videos - 1 else "pool"
        for index in range(frames_per_video):
            stem = f"tensors/{video}_{index}"
            write_tensor(root / f"{stem}_feature.tnsr", rng.normal(size=d) + 2.0)
            write_tensor(root / f"{stem}_label.tnsr", rng.integers(K, size=(H, W)).astype(np.uint16))
            write_tensor(root / f"{stem}_pixels.tnsr", rng.random((3, H, W)))
            probmap = ""
            if with_probmaps and (video, index) != skip_probmap:
                write_tensor(root / f"{stem}_probmap.tnsr", softmax(rng.normal(size=(K, H, W)), axis=0))
                probmap = f"{stem}_probmap.tnsr"
            lines.append(f"{video},{index},{stem}_feature.tnsr,{probmap},{stem}_label.tnsr,"
                         f"{stem}_pixels.tnsr,{split}\n")
    manifest = root / "manifest.csv"
    manifest.write_text("".join(lines), encoding="utf-8")
    return manifest


@pytest.fixture
def dataset(tmp_path):
    return write_dataset(tmp_path / "data")


@pytest.fixture
def make_dataset(tmp_path):
    def factory(**kwargs):
        return write_dataset(tmp_path / "data", **kwargs)
    return factory
