"""Distributed-parameter hysteresis operators and adaptive control.

The package layers are, bottom up: play kernels (`kernels`), the
quaternary threshold-triangle mesh and parameter fields (`mesh`),
vectorized operator banks with their adjoints (`operator`), a
predictor-corrector integrator for history-dependent right-hand sides
(`integrator`, `benchmarks`), wing-section plant models and transforms
(`plants`), and the identification / sliding-control drivers
(`adaptive`).  `config` and `cli` wrap everything into reproducible
experiments.
"""

from .errors import (
    ConfigInvalid,
    HystrlError,
    LevelMismatch,
    LevelTooDeep,
    NaNDetected,
    NonMonotoneGamma,
    NonMonotoneTime,
    NotHurwitz,
    RunDiverged,
    SingularSystem,
    StartupUnderflow,
    TimeOutOfRange,
)
from .kernels import PiecewiseLinearInput, RidgeFunction, play_eval, play_init, play_step
from .mesh import (
    DistributedParameter,
    MeshLevel,
    TriDomain,
    approx_seminorm,
    p_dot,
    p_norm,
    project_analytic,
    prolong,
    refine,
    restrict,
)
from .operator import Mixer, OperatorBank, OperatorMatrix, Scalarizer, rate_experiment
from .integrator import HistoryRHS, PCScheme, Trajectory, integrate
from .benchmarks import order_check
from .plants import (
    AeroChannel,
    FirstOrderPlant,
    LinearCore,
    RoboticForm,
    RoboticPlant,
    WingParams,
    contraction_horizon,
    regulator_transform,
    tracking_transform,
    wing_model,
)
from .adaptive import (
    closed_loop,
    estimator_rhs,
    identify,
    lyapunov_solve,
    multisine,
    sliding_control,
)

__version__ = "0.1.0"
