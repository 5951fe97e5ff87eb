//! Campaign orchestration, result persistence and the benchmarking metrics.

pub mod benchmark;
pub mod campaign;
pub mod results;

pub use benchmark::{
    anchor_points, complexity_correlation, composite_metric, generalization_metric, gs_weighted_metric,
    resilience_metric, resilience_neighborhood, AnchorPoints, CompositeWeights, DEFAULT_RESILIENCE_POINTS,
    DEFAULT_RESILIENCE_SIGMA, GS_BASELINE_FLOOR,
};
pub use campaign::{
    design_items, evaluate_item, hash_file, image_seed, load_images, run_fm_comparison, run_fmh_campaign,
    run_items, run_points, write_index_report, CampaignConfig, CampaignResult, EvalSettings, FileHash,
    FmComparison, FmComparisonConfig, FmIterationStats, RunManifest, WorkItem, DESIGN_FILE, MANIFEST_FILE,
    RESULTS_FILE,
};
pub use results::{MeanMetrics, Metric, ResultRow, ResultTable, RESULTS_HEADER};
