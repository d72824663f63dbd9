"""forensiris: a forensic iris recognition workbench.

Library, CLI and HTTP service covering segmentation, rubber-sheet
normalization, three iris-code encoders, rotation-compensated fractional
Hamming matching with similarity heatmaps, image-quality metrics, score-set
evaluation (d', EER, AUC, FTM, PMI slices), demographic statistics and PAD
operating points.
"""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    Circle,
    ComparisonRecord,
    EvaluationSummary,
    IrisImage,
    IrisTemplate,
    MatchResult,
    PadSummary,
    PolarIris,
    QualityRecord,
    SampleMetadata,
    Segmentation,
    TestResult,
)
