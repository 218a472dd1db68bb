"""Hand-gesture classification from wearable IMU recordings.

Pipeline: protocol segmentation -> ten time-domain features per channel ->
PCA -> sigmoid DNN, with kNN and linear SVM baselines.
"""
from .baselines import KnnModel, SvmModel, knn_predict, svm_predict, svm_train
from .dnn import DnnModel, Hyper, TrainTrace, backprop, cost, forward, predict, sigmoid, train
from .errors import ImuGestError
from .evaluation import EvalReport, evaluate, split_stratified, sweep_features, sweep_iterations
from .features import FeatureMatrix, FeatureVector, extract_features
from .pca import PcaModel, fit_pca, transform
from .pipeline import ClassifierConfig, Pipeline, fit_pipeline, load_pipeline, save_pipeline
from .signal_io import Protocol, Recording, Segment, load_recording, segment_recording
from .synth import SynthSpec, generate_recording

__version__ = "0.1.0"

__all__ = [
    "ClassifierConfig", "DnnModel", "EvalReport", "FeatureMatrix", "FeatureVector", "Hyper", "ImuGestError",
    "KnnModel", "PcaModel", "Pipeline", "Protocol", "Recording", "Segment", "SvmModel", "SynthSpec",
    "TrainTrace", "backprop", "cost", "evaluate", "extract_features", "fit_pca", "fit_pipeline", "forward",
    "generate_recording", "knn_predict", "load_pipeline", "load_recording", "predict", "save_pipeline", "segment_recording",
    "sigmoid", "split_stratified", "svm_predict", "svm_train", "sweep_features",
    "sweep_iterations", "train", "transform",
]
