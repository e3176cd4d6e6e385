"""Inverse-model feedforward for Hammerstein motion systems, learned from norm-optimal ILC."""

__version__ = "0.1.0"

from .errors import (ConfigurationError, DegenerateBasisError, DomainError, ExcitationError,
                     HammerffError, MalformedSystemError, NonFiniteCostError,
                     SingularNormalMatrixError, StabilityError)
from .lifted_lti import (TransferFunction, impulse_response, lift, process_sensitivity,
                         sensitivity, simulate)
from .plant import PlantConfig, SaturationModel, TrialRecord, make_noise, run_trial, saturate
from .trajectory import QuinticSpec, ReferenceSet, concat_references, quintic
from .ilc import NoilcLearner, basis_matrix, bfilc_update, noilc_train, noilc_update
from .ident import (FeedforwardParams, IdDataset, build_training_dataset, fit_classical,
                    fit_proposed, wiener_ff)
from .pso import OptimResult, SwarmConfig, minimize

__all__ = [
    "ConfigurationError", "DegenerateBasisError", "DomainError", "ExcitationError",
    "HammerffError", "MalformedSystemError", "NonFiniteCostError", "SingularNormalMatrixError",
    "StabilityError", "TransferFunction", "impulse_response", "lift", "process_sensitivity",
    "sensitivity", "simulate", "PlantConfig", "SaturationModel", "TrialRecord", "make_noise",
    "run_trial", "saturate", "QuinticSpec", "ReferenceSet", "concat_references", "quintic",
    "NoilcLearner", "basis_matrix", "bfilc_update", "noilc_train", "noilc_update",
    "FeedforwardParams", "IdDataset", "build_training_dataset", "fit_classical", "fit_proposed",
    "wiener_ff", "OptimResult", "SwarmConfig", "minimize",
]
