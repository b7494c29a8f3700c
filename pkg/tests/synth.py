"""Shared test fixtures: a seeded separable 2-class 8x8 blob dataset and the
small conv net + solver that learn it."""

import numpy as np

from convkit.datastore import Dataset

TRAIN_NET = """\
name: "blobnet"
layer {
  name: "samples"
  type: "Data"
  top: "data"
  top: "label"
  data_param {
    source: "dataset"
    batch_size: 16
  }
}
layer {
  name: "conv1"
  type: "Convolution"
  bottom: "data"
  top: "conv1"
  convolution_param {
    num_output: 4
    kernel_size: 3
    stride: 1
    pad: 1
  }
}
layer {
  name: "relu1"
  type: "ReLU"
  bottom: "conv1"
  top: "relu1"
}
layer {
  name: "pool1"
  type: "Pooling"
  bottom: "relu1"
  top: "pool1"
  pooling_param {
    pool: MAX
    kernel_size: 2
    stride: 2
  }
}
layer {
  name: "ip1"
  type: "InnerProduct"
  bottom: "pool1"
  top: "ip1"
  inner_product_param {
    num_output: 2
  }
}
layer {
  name: "loss"
  type: "SoftmaxWithLoss"
  bottom: "ip1"
  bottom: "label"
  top: "loss"
}
layer {
  name: "acc"
  type: "Accuracy"
  bottom: "ip1"
  bottom: "label"
  top: "acc"
}
"""

SOLVER = """\
base_lr: 0.05
momentum: 0.9
weight_decay: 0.0005
lr_policy: "fixed"
max_epochs: 20
batch_size: 16
seed: 42
"""


def make_blob_dataset(n=200, seed=7, size=8):
    """Two classes of bright Gaussian bumps: top-left vs bottom-right, plus
    mild noise.  Linearly separable for any sane feature extractor."""
    rng = np.random.default_rng(seed)
    samples = []
    yy, xx = np.mgrid[0:size, 0:size]
    for i in range(n):
        label = i % 2
        center = (size * 0.25, size * 0.25) if label == 0 else (size * 0.7, size * 0.7)
        cy = center[0] + rng.uniform(-0.75, 0.75)
        cx = center[1] + rng.uniform(-0.75, 0.75)
        bump = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / 2.0)
        img = np.clip(bump + rng.normal(0, 0.08, (size, size)), 0.0, 1.0)
        samples.append((img[None, None], label))
    return Dataset(samples, ["northwest", "southeast"], f"synthetic:blobs(seed={seed})", f"synth-{seed}-{n}")


def write_blob_csv(path, n=200, seed=7, size=8):
    from convkit.datastore import export_text

    dataset = make_blob_dataset(n=n, seed=seed, size=size)
    export_text(dataset, path)
    return dataset
