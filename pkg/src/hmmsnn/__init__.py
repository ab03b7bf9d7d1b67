"""
Hybrid classifier for segmented sequences: a left-to-right HMM whose
states emit through spiking winner-take-all networks trained with STDP.
"""

from hmmsnn.errors import DegenerateComponentError, FormatError, HmmSnnError, InvalidInputError
from hmmsnn.hmm import HMMModel, SegmentedObservation, classify, log_prob
from hmmsnn.segmentation import SegmentBoundaries, auto_segment
from hmmsnn.spikes import SpikeRaster, encode_poisson, epsp_matrix
from hmmsnn.training import EvalReport, TrainConfig, evaluate, train_models
from hmmsnn.wta import WTANetwork

__version__ = "0.1.0"

__all__ = [
    "DegenerateComponentError",
    "EvalReport",
    "FormatError",
    "HMMModel",
    "HmmSnnError",
    "InvalidInputError",
    "SegmentBoundaries",
    "SegmentedObservation",
    "SpikeRaster",
    "TrainConfig",
    "WTANetwork",
    "auto_segment",
    "classify",
    "encode_poisson",
    "epsp_matrix",
    "evaluate",
    "log_prob",
    "train_models",
]
