from .advantages import compute_advantages
from .buffer import EpisodeStat, RolloutBuffer
from .evaluate import ScriptedPolicy, UniformRandomPolicy, evaluate, run_episode
from .metrics import METRIC_COLUMNS, EventLog, MetricsWriter, read_metrics_csv
from .rollout import RolloutWorker, collect_rollouts
from .trainer import Trainer, TrainerConfig
from .update import a2c_sync_update, composite_loss, minibatch_views, ppo_update

__all__ = [
    "METRIC_COLUMNS", "EpisodeStat", "EventLog", "MetricsWriter", "RolloutBuffer",
    "RolloutWorker", "ScriptedPolicy", "Trainer", "TrainerConfig",
    "UniformRandomPolicy", "a2c_sync_update", "collect_rollouts", "composite_loss",
    "compute_advantages", "evaluate", "minibatch_views", "ppo_update",
    "read_metrics_csv", "run_episode",
]
