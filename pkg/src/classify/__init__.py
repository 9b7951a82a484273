"""Time-attention LSTM classifier (CN vs AD)."""
from .ta_lstm import ClassifierOutput, READOUTS, init_ta_lstm, ta_lstm_forward, classifier_loss
from .trainer import Classifier, ClassifierResult, cohort_inputs, train_classifier

__all__ = [
    "ClassifierOutput",
    "READOUTS",
    "init_ta_lstm",
    "ta_lstm_forward",
    "classifier_loss",
    "Classifier",
    "ClassifierResult",
    "cohort_inputs",
    "train_classifier",
]
