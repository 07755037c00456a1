"""Rater-corrected hypothesis tests for crowdsourced perceptual annotations."""

from percept._core import (
    Dataset,
    PairedSample,
    PerceptError,
    __version__,
    apply_filter_pipeline,
    generate_synthetic_dataset,
    p_value,
    paired_test,
    parse_annotations,
    read_paired_sample_csv,
    render_battery_table,
    run_battery,
    sample_pairs,
    simulate,
    student_t_cdf,
    verify_sample,
    write_annotations_csv,
    write_paired_sample_csv,
)

__all__ = [
    "Dataset",
    "PairedSample",
    "PerceptError",
    "__version__",
    "apply_filter_pipeline",
    "generate_synthetic_dataset",
    "p_value",
    "paired_test",
    "parse_annotations",
    "read_paired_sample_csv",
    "render_battery_table",
    "run_battery",
    "sample_pairs",
    "simulate",
    "student_t_cdf",
    "verify_sample",
    "write_annotations_csv",
    "write_paired_sample_csv",
]
