from .load_data_node import load_data_node
from .pretrain_node import pretrain_node
from .benign_tune_node import benign_tune_node
from .attack_node import attack_node
from .evaluate_node import evaluate_node
from .write_artifacts_node import write_artifacts_node

__all__ = [
    "load_data_node",
    "pretrain_node",
    "benign_tune_node",
    "attack_node",
    "evaluate_node",
    "write_artifacts_node",
]
