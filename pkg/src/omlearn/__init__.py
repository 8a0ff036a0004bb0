"""Online meta-learning in the non-convex setting, measured by sliding-window local regret."""

from .adapter import (
    AdapterConfig,
    MetaGradientOracle,
    adapt,
    meta_constants,
    meta_grad,
    meta_loss,
)
from .analysis import (
    BoundInputs,
    RegretLedger,
    check_lemma2,
    check_lemma3,
    check_lemma4,
    theorem1_C,
    theorem1_bound,
)
from .baselines import BaselineConfig, TrainFromScratch, TrainOnEverything, run_baseline
from .exceptions import DomainWarning, InputError, NumericError, ParameterError, StateError
from .learner import OnlineMetaLearner
from .optimizer import AdaGradNorm
from .smoothing import WindowBuffer
from .tasks import (
    GradientOracle,
    LossConstants,
    TaskSpec,
    constants_of,
    make_stream,
    make_task,
    true_grad,
    true_hvp,
    true_loss,
)

__version__ = "0.1.0"
