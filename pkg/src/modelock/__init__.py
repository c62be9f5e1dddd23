"""Mode-locked wave filters, synthetic symmetry-axis scenes, axis detection and
mode-locking pattern analysis."""

from .errors import (
    AxisOutOfBoundsError,
    DegenerateFilterError,
    DegenerateInputError,
    DegenerateProfileError,
    EmptyBankError,
    FilterTooLargeError,
    InvalidArgumentError,
    MissingPredictionError,
    ModeLockError,
    ShapeMismatchError,
)
from .wave_core import (
    ModeLockedBank,
    PulseMetrics,
    SampledWaveform,
    Wave,
    eval_wave,
    make_bank,
    pulse_metrics,
    sample_superposition,
    superpose,
)
from .filter_bank import FilterSpec, OrientedFilter, make_filter, make_filter_bank
from .conv_engine import as_image, bank_response, correlate, correlate_direct, correlate_fft
from .scene_gen import DatasetManifest, RectScene, gen_dataset, gen_scene, load_manifest
from .axis_detector import DetectorConfig, dataset_defaults, detect, nms, thin
from .skeleton_metrics import EvalReport, batch_eval, default_tolerance, f_measure, miou
from .pattern_analyzer import (
    AxisHypothesis,
    ModeLockReport,
    analyze_map,
    extract_profile,
    modelock_score,
    null_calibration,
)

__version__ = "0.1.0"
