# app/experiments package: experiment configuration and CLI runners
from app.experiments.config import ExperimentConfig, dump_config, load_config, resolve_config  # noqa: F401
from app.experiments.runners import COMMANDS  # noqa: F401
