"""Tubal-algebra data augmentation: T-product operators, an adaptive
augmentation layer with exact gradients, a small numpy classifier stack,
and an experiment harness."""

from .augment import PRESETS, TAdafParams, augment_backward, augment_forward, combine
from .data import (CIFAR_MEANS, CIFAR_STDS, Dataset, load_cifar, normalize,
                   subset, synth_dataset)
from .errors import (ConfigError, FormatError, ShapeError, SpectrumError,
                     StateError)
from .harness import ExperimentConfig, TrainReport, train
from .metrics import accuracy_floor, min_available_epochs, param_accounting
from .network import (AdamState, adam_step, build_lenet, build_mlp, lr_at,
                      softmax_xent)
from .spectral import fft, fft_tubes, ifft, ifft_tubes
from .tensor3 import bcirc, bcirc_inv, fold, frontal_slice, hadamard, permute, unfold
from .tprod import (block_diagonalize, facewise, identity_tensor, tprod_circsum,
                    tprod_fft, tprod_naive, ttranspose)

__version__ = "0.1.0"
