"""Graph knowledge distillation: GCN/SGC teachers distilled into PLP, FT and CPF students."""

from ._core import (
    Graph,
    ParseError,
    Split,
    StudentParams,
    TrainingDiverged,
    __version__,
    accuracy,
    label_propagation,
    largest_connected_component,
    load_bundle,
    make_split,
    make_synthetic_graph,
    rank_interpretability,
    relative_improvement,
    student_forward,
    train_student,
    train_teacher,
    write_bundle,
)

__all__ = [
    "Graph",
    "ParseError",
    "Split",
    "StudentParams",
    "TrainingDiverged",
    "__version__",
    "accuracy",
    "label_propagation",
    "largest_connected_component",
    "load_bundle",
    "make_split",
    "make_synthetic_graph",
    "rank_interpretability",
    "relative_improvement",
    "student_forward",
    "train_student",
    "train_teacher",
    "write_bundle",
]
