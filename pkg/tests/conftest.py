import pytest

from infoloss.config import load_config_file, preset_path

PRESET_NAMES = [
    "identity",
    "ex1_fold_square",
    "ex2_square_gaussian",
    "ex3_exp_sawtooth",
    "ex4_polar_unitdisc",
    "ex5_radius_only",
    "ex6_m0",
    "ex6_m1",
    "ex6_m2",
    "quantizer_uniform",
    "limiter_gaussian",
]

FINITE_PRESETS = ["identity", "ex1_fold_square", "ex2_square_gaussian",
                  "ex3_exp_sawtooth", "ex4_polar_unitdisc",
                  "ex6_m0", "ex6_m1", "ex6_m2"]


@pytest.fixture(scope="session")
def setups():
    return {name: load_config_file(preset_path(name)) for name in PRESET_NAMES}
