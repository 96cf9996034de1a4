"""Multimodal valence/arousal prediction from RGB, optical-flow, and audio
feature streams: quantized classification, continuous-curve reconstruction,
and a leave-one-out evaluation harness."""

from .dataio import (
    ALL_MODALITIES,
    AnnotationTrack,
    ClipDataset,
    ClipManifest,
    FeatureWindow,
    Modality,
    ModalityStream,
    NormalizationStats,
    align_clip,
    apply_minmax,
    apply_minmax_clip,
    fit_minmax,
    load_dataset,
    read_annotations,
    read_feature_file,
    read_manifest,
    write_annotations,
    write_feature_file,
    write_manifest,
)
from .evaluation import EvalReport, FoldResult, run_loocv
from .labeling import (
    Dimension,
    EmotionLabel,
    ReconstructionConfig,
    bin_center,
    moving_average,
    quantize,
    reconstruct_continuous,
    savitzky_golay,
)
from .models import (
    FcFusionParams,
    LstmCellParams,
    LstmFusionParams,
    LstmState,
    fc_forward,
    fuse,
    init_fc_params,
    init_lstm_params,
    load_checkpoint,
    lstm_cell_step,
    lstm_forward,
    predict_class,
    save_checkpoint,
)
from .nn import DenseLayerParams, SgdConfig, cross_entropy_loss, dense_forward, relu, sgd_step, softmax_temperature
from .synthdata import SynthSpec, generate
from .training import TrainConfig, TrainReport, make_batches, train

__version__ = "0.1.0"
