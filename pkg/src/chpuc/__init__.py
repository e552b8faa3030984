"""Unit commitment for coupled electric transmission and district heating systems."""
from chpuc.builder import BuildOptions, build_uc_model
from chpuc.instance import (Instance, ValidatedInstance, bundled_instance, load_instance,
                            scale_wind, validate_instance)
from chpuc.scenario import CaseConfig, standard_cases, run_case, run_suite
from chpuc.schedule import Schedule, extract_schedule
from chpuc.solver import solve_milp

__version__ = "0.1.0"

__all__ = [
    "BuildOptions", "CaseConfig", "Instance", "Schedule", "ValidatedInstance", "build_uc_model",
    "bundled_instance", "extract_schedule", "load_instance", "standard_cases", "run_case",
    "run_suite", "scale_wind", "solve_milp", "validate_instance",
]
