from .baseline import LstmConfig, init_lstm_params, lstm_forward, lstm_predict
from .evaluate import Report, evaluate
from .graph import EdgeKind, GraphBatch, GraphError, GraphInstance, NodeKind, batch_graphs, build_graph
from .model import Normalization, PigConfig, init_pig_params, pig_forward, pig_loss, pig_predict
from .train import DivergenceError, History, train, train_lstm

__all__ = [
    "LstmConfig", "init_lstm_params", "lstm_forward", "lstm_predict", "Report", "evaluate",
    "EdgeKind", "GraphBatch", "GraphError", "GraphInstance", "NodeKind", "batch_graphs", "build_graph",
    "Normalization", "PigConfig", "init_pig_params", "pig_forward", "pig_loss", "pig_predict",
    "DivergenceError", "History", "train", "train_lstm",
]
