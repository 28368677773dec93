#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "passnet/features.hpp"
#include "passnet/ingest.hpp"
#include "passnet/models.hpp"

namespace passnet {

enum class InputFormat { Canonical, Wyscout };

struct PipelineConfig {
    /// Canonical: one events CSV and one matches CSV. Wyscout: comma-separated
    /// lists of event and match JSON files.
    std::string events;
    std::string matches;
    InputFormat format = InputFormat::Canonical;
    std::filesystem::path output = "passnet-out";

    std::size_t window = 5;
    std::size_t min_history = 5;
    bool venue_conditioned = true;
    Granularity granularity = Granularity::Halves;
    FeatureMode mode = FeatureMode::Mixed;
    TargetKind target = TargetKind::Binary;
    ModelFamily family = ModelFamily::RandomForest;
    std::uint64_t seed = 42;
    std::size_t tune_budget = 10;
    std::size_t folds = 10;
    double test_fraction = 0.3;
    std::size_t k_min = 2;
    std::size_t k_max = 7;
    std::size_t pca_components = 2;
    /// Clustering rows: one per team-match network, or one mean per team-season.
    bool cluster_team_seasons = false;
    std::size_t top_n = 20;
    std::size_t importance_repeats = 10;
    std::size_t shap_rows = 20;
    std::size_t shap_background = 5;
    std::size_t shap_samples = 64;
    Competition correlate_league = Competition::PremierLeague;

    /// Every key except `output`, sorted; the basis of the config hash.
    std::map<std::string, std::string> echo() const;
    std::string hash() const;
};

/// Reads `key = value` lines; `#` starts a comment. Relative input paths are
/// resolved against the config file's directory. Throws ConfigError.
PipelineConfig load_config(const std::filesystem::path& path);
void apply_setting(PipelineConfig& config, const std::string& key, const std::string& value);

enum class Stage {
    Ingest,
    BuildNets,
    Metrics,
    Features,
    Train,
    Evaluate,
    Cluster,
    Importance,
    Simulate,
    Correlate,
    Report,
};

std::string_view to_string(Stage stage);
Stage parse_stage(std::string_view text);
const std::vector<Stage>& all_stages();

struct StageOutcome {
    bool up_to_date = false;
    std::vector<std::filesystem::path> artifacts;
};

/// Runs one stage, reading upstream artifacts from the output directory.
/// A stage whose inputs, configuration and outputs are unchanged since its
/// last run is skipped. Throws MissingArtifact naming the stage to run.
StageOutcome run_stage(Stage stage, const PipelineConfig& config);

using StageObserver = std::function<void(Stage, const StageOutcome&)>;

/// ingest, build-nets, metrics, cluster and correlate; then features, train,
/// evaluate and importance for each feature mode; then simulate and report.
void run_all(PipelineConfig config, const StageObserver& observer = {});

/// Holds `<output>/.lock` for its lifetime; throws ConfigError if present.
class PipelineLock {
public:
    explicit PipelineLock(const std::filesystem::path& output);
    ~PipelineLock();
    PipelineLock(const PipelineLock&) = delete;
    PipelineLock& operator=(const PipelineLock&) = delete;

private:
    std::filesystem::path path_;
};

/// Directory name for the feature table and model of the current settings.
std::string run_tag(const PipelineConfig& config);

}  // namespace passnet
