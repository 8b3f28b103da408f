"""stripefit: detect striped self-organisation in crossing flows.

Fits oriented periodic waveforms (2D sinusoid and square wave) to
group-labelled trajectory data with derivative-free optimizers, and
compares the fitting strategies statistically. See the README for the CLI
walkthrough.
"""

__version__ = "0.1.0"

from ._kernels import backend as kernel_backend  # noqa: F401
from .errors import StripefitError  # noqa: F401
from .model import (Frame, TrackSample, Trial, TrialSet, crossing_window,  # noqa: F401
                    estimate_bisector, frame_at, parse_trials,
                    rotate_to_bisector, serialize_trials)
from .optim import Bounds, OptimResult, SASchedule  # noqa: F401
from .patternfit import (ALL_STRATEGIES, FitConfig, FitResult, Strategy,  # noqa: F401
                         StrategyTable, fit_frame, fit_trial, run_batch)
from .stats import (bisector_normal_test, one_sample_ttest, one_way_anova,  # noqa: F401
                    reg_inc_beta, strategy_comparison)
from .synth import StripeSpec, generate_crossing_trial, generate_striped_frame  # noqa: F401
from .waveform import (WaveKind, WaveParams, canonicalize, eval_wave,  # noqa: F401
                       objective, rotated_coord)
