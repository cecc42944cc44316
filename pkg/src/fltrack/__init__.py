"""Visual tracking with online-learned patch features.

Patches from the target neighbourhood are encoded against a learned
dictionary, max-pooled over a spatial pyramid and scored by a closed-form
least-squares SVM inside a tracking-by-detection loop.
"""

from .dictlearn import Dictionary, OdlState, UpdatePolicy, basis_weights, init_dictionary, odl_step, should_update
from .encode import CodeMatrix, EncoderSpec, encode
from .lasso import LassoProblem, lasso_solve, lasso_solve_batch
from .lssvm import LinearModel, Reservoir, predict, train
from .metrics import EvalReport, cle, evaluate, vor
from .patchgrid import PatchGridSpec, PatchMatrix, contrast_normalize, extract_patches
from .pyrpool import PyramidSpec, pyramid_max_pool
from .seqio import BoundingBox, GrayFrame, Sequence, load_sequence, parse_truth_line, synth_sequence
from .tracker import TrackerConfig, detect, gather_training_samples, sample_candidates, track_sequence

__version__ = "0.1.0"
