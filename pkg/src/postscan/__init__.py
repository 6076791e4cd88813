"""postscan: caption social-media images, fuse with post text, and flag
concerning posts with from-scratch Naive Bayes classifiers."""

__version__ = "1.0.0"

from .corpus import BENIGN, CONCERNING, Category, CaptionedImage, LabeledText
from .errors import DataError, PostscanError, UsageError
from .images import ImageBuffer
from .nbayes import NbModel, Prediction, predict, predict_batch, train
from .pipeline import PipelineConfig, Post, Verdict, batch_classify, classify_post

__all__ = [
    "BENIGN",
    "CONCERNING",
    "CaptionedImage",
    "Category",
    "DataError",
    "ImageBuffer",
    "LabeledText",
    "NbModel",
    "PipelineConfig",
    "Post",
    "PostscanError",
    "Prediction",
    "UsageError",
    "Verdict",
    "batch_classify",
    "classify_post",
    "predict",
    "predict_batch",
    "train",
]
