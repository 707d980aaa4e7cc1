"""Robustness benchmark harness, statistics and report artifacts."""
from .harness import (DEFAULT_METHODS, NEGATIVE, PROTOCOLS, BaselineMethod, CellSummary,
                      EvalConfig, EvalReport, FeatureMethod, Sample, get_method, load_corpus,
                      register_method, run_eval, summarize)
from .report import (CSV_COLUMNS, bar_chart_svg, box_plot_svg, emit_report, results_csv,
                     summary_json, summary_table)
from .stats import (TwoSample, cohens_d, coefficient_of_variation, compare, normal_p, welch_t,
                    wilson_interval)

__all__ = [
    "BaselineMethod", "CSV_COLUMNS", "CellSummary", "DEFAULT_METHODS", "EvalConfig", "EvalReport",
    "FeatureMethod", "NEGATIVE", "PROTOCOLS", "Sample", "TwoSample", "bar_chart_svg",
    "box_plot_svg", "cohens_d", "coefficient_of_variation", "compare", "emit_report",
    "get_method", "load_corpus", "normal_p", "register_method", "results_csv", "run_eval",
    "summarize", "summary_json", "summary_table", "welch_t", "wilson_interval",
]
