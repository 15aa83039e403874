"""Gas-leak video segmentation library.

Prompt-guided vision-language fusion over a three-scale feature pyramid,
inter-frame correlation volumes with granular spatial refinement, an FPN
decoder, morphological post-processing, and a J/F evaluation harness with
k-fold / few-shot split construction and a synthetic clip generator.
"""

from .config import ConfigError, RunConfig, load_config
from .data import (Clip, Dataset, DatasetSplit, Fold, Frame, IngestionError,
                   fewshot_split, ingest_dataset, kfold_split, load_split,
                   make_clips, natural_key, save_split)
from .decoder import FpnDecoder, MaskLogits
from .encoders import (DEFAULT_PROMPTS, PromptSet, TextEncoder, VisionEncoder,
                       load_vocab, register_external_encoder, tokenize)
from .fusion import FusionBlock, FusionModule, stack_pyramids, vlf_bypass
from .inference import evaluate_model, evaluate_predictions, infer, sweep_kernel, write_report
from .layers import Adam, CheckpointError, load_checkpoint, save_checkpoint
from .losses import LossBreakdown, boundary_weight_map, loss, loss_gradcheck, segmentation_loss
from .metrics import (EvalReport, FrameResult, aggregate, boundary_f,
                      fold_weighted_average, jaccard)
from .model import SegmentationModel
from .motion import (CorrelationVolume, GroupMixer, MotionBlock, MotionModule,
                     aggregate_cv, correlation_volume, gsa)
from .postprocess import binarize, dilate, erode, opening
from .synth import SynthSpec, synth_generate
from .training import TrainingError, TrainResult, train

__version__ = "0.1.0"
