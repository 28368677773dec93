#include "passnet/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

#include "passnet/error.hpp"
#include "passnet/evaluation.hpp"
#include "passnet/explain.hpp"
#include "passnet/io_util.hpp"
#include "passnet/league.hpp"
#include "passnet/netmetrics.hpp"
#include "passnet/network.hpp"
#include "passnet/parallel.hpp"
#include "passnet/random.hpp"
#include "passnet/tuning.hpp"
#include "passnet/unsupervised.hpp"
#include "passnet/wyscout.hpp"

namespace passnet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::size_t parse_count(const std::string& key, const std::string& value) {
    try {
        const long long v = io::parse_int(value, key);
        if (v < 0) throw Error(ErrorKind::ConfigError, "");
        return static_cast<std::size_t>(v);
    } catch (const Error&) {
        throw Error(ErrorKind::ConfigError, fmt::format("{} must be a non-negative integer, got '{}'", key, value));
    }
}

bool parse_flag(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw Error(ErrorKind::ConfigError, fmt::format("{} must be true or false, got '{}'", key, value));
}

template <typename F>
auto parse_enum(const std::string& key, const std::string& value, F parse) {
    try {
        return parse(value);
    } catch (const Error&) {
        throw Error(ErrorKind::ConfigError, fmt::format("bad value '{}' for {}", value, key));
    }
}

// ---- stage bookkeeping -------------------------------------------------

std::string producer_hint(Stage stage) { return fmt::format("run `passnet-lab {}` first", to_string(stage)); }

// Tracks one stage run: declared inputs, written outputs and the manifest
// that makes an unchanged re-run a no-op.
class StageRun {
public:
    StageRun(Stage stage, const PipelineConfig& config, fs::path dir)
        : stage_(stage), config_(config), dir_(std::move(dir)) {}

    // Reads an upstream artifact (path relative to the output directory).
    std::string input(const fs::path& rel, Stage producer) {
        const fs::path full = config_.output / rel;
        if (!fs::exists(full)) {
            throw Error(ErrorKind::MissingArtifact,
                        fmt::format("{} not found; {}", rel.generic_string(), producer_hint(producer)));
        }
        std::string text = io::read_file(full);
        inputs_[rel.generic_string()] = io::sha256_hex(text);
        return text;
    }

    // Reads a source file named in the configuration.
    std::string source(const std::string& label, const fs::path& path) {
        if (!fs::exists(path)) {
            throw Error(ErrorKind::ConfigError, fmt::format("{} file {} does not exist", label, path.string()));
        }
        std::string text = io::read_file(path);
        inputs_["source:" + label] = io::sha256_hex(text);
        return text;
    }

    // Hash-only dependency, for inputs the stage reads lazily.
    void depend(const fs::path& rel, Stage producer) { (void)input(rel, producer); }

    bool up_to_date() const {
        const fs::path manifest = dir_ / "manifest.json";
        if (!fs::exists(manifest)) return false;
        json doc;
        try {
            doc = json::parse(io::read_file(manifest));
        } catch (const json::exception&) {
            return false;
        }
        if (doc.value("config_hash", "") != config_.hash()) return false;
        if (doc.value("inputs", json::object()) != json(inputs_)) return false;
        const json outputs = doc.value("outputs", json::object());
        for (auto it = outputs.begin(); it != outputs.end(); ++it) {
            const fs::path full = config_.output / it.key();
            if (!fs::exists(full) || io::sha256_hex(io::read_file(full)) != it.value().get<std::string>()) {
                return false;
            }
        }
        return true;
    }

    void write(const std::string& name, const std::string& contents) {
        const fs::path full = dir_ / name;
        io::write_file(full, contents);
        const std::string rel = fs::relative(full, config_.output).generic_string();
        outputs_[rel] = io::sha256_hex(contents);

        json meta = {{"artifact", rel},
                     {"stage", std::string(to_string(stage_))},
                     {"config_hash", config_.hash()},
                     {"seed", config_.seed},
                     {"config", config_.echo()},
                     {"inputs", inputs_}};
        const std::string meta_text = meta.dump(2) + "\n";
        io::write_file(full.string() + ".meta.json", meta_text);
        outputs_[rel + ".meta.json"] = io::sha256_hex(meta_text);
    }

    StageOutcome finish() {
        json manifest = {{"stage", std::string(to_string(stage_))},
                         {"config_hash", config_.hash()},
                         {"inputs", inputs_},
                         {"outputs", outputs_}};
        io::write_file(dir_ / "manifest.json", manifest.dump(2) + "\n");
        StageOutcome out;
        for (const auto& [rel, hash] : outputs_) out.artifacts.push_back(config_.output / rel);
        return out;
    }

    StageOutcome skipped() const {
        StageOutcome out;
        out.up_to_date = true;
        return out;
    }

private:
    Stage stage_;
    const PipelineConfig& config_;
    fs::path dir_;
    std::map<std::string, std::string> inputs_;
    std::map<std::string, std::string> outputs_;
};

std::string json_text(const json& doc) { return doc.dump(2) + "\n"; }

std::string feature_tag(const PipelineConfig& c, TargetKind target) {
    return fmt::format("{}-{}-{}", to_string(c.mode), to_string(c.granularity), to_string(target));
}

// ---- shared loaders ----------------------------------------------------

std::vector<MatchRecord> load_ingested_matches(StageRun& run) {
    return load_matches(run.input("ingest/matches.csv", Stage::Ingest)).matches;
}

MetricsStore load_metrics_store(StageRun& run) {
    MetricsStore store;
    for (auto& row : read_metrics_csv(run.input("metrics/metrics.csv", Stage::Metrics))) {
        store[{row.match_id, row.team_id, row.segment}] = std::move(row.values);
    }
    return store;
}

FeatureTable rebuild_table(StageRun& run, const PipelineConfig& c, TargetKind target) {
    const auto matches = load_ingested_matches(run);
    const MetricsStore metrics = load_metrics_store(run);
    const StatsStore stats = read_stats_csv(run.input("nets/stats.csv", Stage::BuildNets));
    TableOptions options;
    options.mode = c.mode;
    options.granularity = c.granularity;
    options.target = target;
    options.venue_conditioned = c.venue_conditioned;
    options.window = c.window;
    options.min_history = c.min_history;
    return build_table(matches, metrics, stats, options);
}

Split partition(const LabeledData& data, const PipelineConfig& c) {
    return stratified_split(data.y, c.test_fraction, derive_seed(c.seed, 100));
}

LabeledData load_table(StageRun& run, const PipelineConfig& c) {
    const std::string tag = feature_tag(c, c.target);
    return read_table_csv(run.input(fs::path("features") / tag / "table.csv", Stage::Features)).data;
}

TrainedModel load_model(StageRun& run, const PipelineConfig& c) {
    return model_from_json(
        json::parse(run.input(fs::path("train") / run_tag(c) / "model.json", Stage::Train)));
}

// ---- stages --------------------------------------------------------------

StageOutcome stage_ingest(const PipelineConfig& c) {
    StageRun run(Stage::Ingest, c, c.output / "ingest");
    std::vector<Event> events;
    LoadedMatches loaded;
    if (c.format == InputFormat::Canonical) {
        events = parse_event_log(run.source("events", c.events), EventFormat::CanonicalCsv);
        loaded = load_matches(run.source("matches", c.matches));
    } else {
        std::size_t i = 0;
        for (const auto& path : io::split(c.matches, ',')) {
            auto converted = wyscout::parse_matches(run.source(fmt::format("matches{}", i++), trim(path)));
            for (auto& m : converted.loaded.matches) loaded.matches.push_back(std::move(m));
            for (auto& d : converted.loaded.rejected) loaded.rejected.push_back(std::move(d));
            for (auto& e : converted.substitutions) events.push_back(std::move(e));
        }
        i = 0;
        for (const auto& path : io::split(c.events, ',')) {
            auto parsed = wyscout::parse_events(run.source(fmt::format("events{}", i++), trim(path)));
            for (auto& e : parsed) events.push_back(std::move(e));
        }
        std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
            return std::tie(a.match_id, a.period, a.second) < std::tie(b.match_id, b.period, b.second);
        });
    }
    if (run.up_to_date()) return run.skipped();

    std::size_t draws = 0;
    for (const auto& m : loaded.matches) draws += outcome_of(m) == Outcome::Draw ? 1 : 0;
    std::string rejected = "match_id,reason\n";
    for (const auto& d : loaded.rejected) rejected += fmt::format("{},{}\n", d.match_id, d.reason);

    run.write("events.csv", write_canonical_events(events));
    run.write("matches.csv", write_matches(loaded.matches));
    run.write("rejected.csv", rejected);
    run.write("summary.json", json_text({{"events", events.size()},
                                         {"matches", loaded.matches.size()},
                                         {"rejected", loaded.rejected.size()},
                                         {"draws", draws},
                                         {"decisive", loaded.matches.size() - draws}}));
    return run.finish();
}

StageOutcome stage_build_nets(const PipelineConfig& c) {
    StageRun run(Stage::BuildNets, c, c.output / "nets");
    const auto events = parse_canonical_events(run.input("ingest/events.csv", Stage::Ingest));
    const auto matches = load_ingested_matches(run);
    if (run.up_to_date()) return run.skipped();

    std::map<std::string, std::vector<Event>> by_match;
    for (const auto& e : events) by_match[e.match_id].push_back(e);

    struct MatchOutput {
        std::vector<std::string> lines;
        std::vector<std::pair<std::string, MatchStats>> stats;
        std::string diagnostic;
    };
    std::vector<MatchOutput> outputs(matches.size());
    static const std::vector<Event> kNoEvents;
    parallel_for(matches.size(), [&](std::size_t i) {
        const MatchRecord& m = matches[i];
        const auto it = by_match.find(m.match_id);
        const std::vector<Event>& match_events = it == by_match.end() ? kNoEvents : it->second;
        MatchOutput& out = outputs[i];
        try {
            for (const auto& team : {m.home_team_id, m.away_team_id}) {
                for (const Segment s : {Segment::Full, Segment::FirstHalf, Segment::SecondHalf}) {
                    out.lines.push_back(to_json(build_passing_network(match_events, m, team, s)).dump());
                }
                out.stats.emplace_back(team, compute_match_stats(match_events, m, team));
            }
        } catch (const Error& err) {
            if (err.kind() != ErrorKind::UnresolvableSubstitution) throw;
            out = MatchOutput{{}, {}, fmt::format("{},{}", m.match_id, err.what())};
        }
    });

    std::string networks;
    StatsStore stats;
    std::string skipped = "match_id,reason\n";
    std::size_t skipped_count = 0;
    for (std::size_t i = 0; i < matches.size(); ++i) {
        if (!outputs[i].diagnostic.empty()) {
            skipped += outputs[i].diagnostic + "\n";
            ++skipped_count;
            continue;
        }
        for (const auto& line : outputs[i].lines) networks += line + "\n";
        for (auto& [team, s] : outputs[i].stats) stats[{matches[i].match_id, team}] = s;
    }
    run.write("networks.jsonl", networks);
    run.write("stats.csv", write_stats_csv(stats));
    run.write("skipped.csv", skipped);
    run.write("summary.json",
              json_text({{"matches", matches.size() - skipped_count}, {"skipped", skipped_count}}));
    return run.finish();
}

StageOutcome stage_metrics(const PipelineConfig& c) {
    StageRun run(Stage::Metrics, c, c.output / "metrics");
    const std::string text = run.input("nets/networks.jsonl", Stage::BuildNets);
    if (run.up_to_date()) return run.skipped();

    const auto lines = io::lines(text);
    std::vector<MetricsRow> rows(lines.size());
    std::vector<char> keep(lines.size(), 0);
    parallel_for(lines.size(), [&](std::size_t i) {
        if (lines[i].empty()) return;
        const PassingNetwork net = network_from_json(json::parse(lines[i]));
        rows[i] = {net.match_id, net.team_id, net.segment, aggregate(net).values()};
        keep[i] = 1;
    });
    std::vector<MetricsRow> kept;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (keep[i]) kept.push_back(std::move(rows[i]));
    }
    run.write("metrics.csv", write_metrics_csv(kept));
    return run.finish();
}

StageOutcome stage_features(const PipelineConfig& c) {
    StageRun run(Stage::Features, c, c.output / "features" / feature_tag(c, c.target));
    const FeatureTable table = rebuild_table(run, c, c.target);
    if (run.up_to_date()) return run.skipped();

    json per_league = json::object();
    for (const auto& row : table.rows) {
        auto& slot = per_league[std::string(to_string(row.competition))];
        slot = slot.is_null() ? 1 : slot.get<int>() + 1;
    }
    run.write("table.csv", write_table_csv(table));
    run.write("summary.json", json_text({{"rows", table.rows.size()},
                                         {"features", table.feature_names.size()},
                                         {"skipped_insufficient_history", table.skipped.insufficient_history},
                                         {"skipped_missing_values", table.skipped.missing_values},
                                         {"draws_excluded", table.skipped.draws_excluded},
                                         {"rows_per_league", per_league}}));
    return run.finish();
}

StageOutcome stage_train(const PipelineConfig& c) {
    StageRun run(Stage::Train, c, c.output / "train" / run_tag(c));
    const LabeledData data = load_table(run, c);
    if (run.up_to_date()) return run.skipped();

    const Split split = partition(data, c);
    const LabeledData train_part = data.subset(split.train);
    ModelSpec spec;
    json tuning = json::object();
    if (c.tune_budget > 0) {
        const TuneResult tuned = tune(c.family, train_part, c.tune_budget, derive_seed(c.seed, 101), c.folds);
        spec = tuned.best;
        json candidates = json::array();
        for (const auto& cand : tuned.candidates) {
            candidates.push_back({{"hyperparameters", cand.spec.hyperparameters},
                                  {"score", cand.score ? json(*cand.score) : json(nullptr)},
                                  {"diagnostic", cand.diagnostic}});
        }
        tuning = {{"best_score", tuned.best_score},
                  {"best", spec.hyperparameters},
                  {"folds", c.folds},
                  {"candidates", candidates}};
    } else {
        spec.family = c.family;
        spec.seed = derive_seed(c.seed, 102);
    }
    const TrainedModel model = train(spec, train_part);
    run.write("model.json", json_text(to_json(model)));
    run.write("tuning.json", json_text(tuning));
    run.write("split.json", json_text({{"train", split.train}, {"test", split.test}}));
    return run.finish();
}

StageOutcome stage_evaluate(const PipelineConfig& c) {
    StageRun run(Stage::Evaluate, c, c.output / "evaluate" / run_tag(c));
    const LabeledData data = load_table(run, c);
    const TrainedModel model = load_model(run, c);
    if (run.up_to_date()) return run.skipped();

    const Split split = partition(data, c);
    const LabeledData test_part = data.subset(split.test);
    const bool binary = model.classes == std::vector<int>{0, 1};
    const EvaluationReport report = evaluate(predict_proba(model, test_part), test_part.y, model.classes,
                                             binary ? Averaging::BinaryPositive : Averaging::Macro);
    json doc = to_json(report);
    doc["mode"] = std::string(to_string(c.mode));
    doc["granularity"] = std::string(to_string(c.granularity));
    doc["target"] = std::string(to_string(c.target));
    doc["model"] = std::string(to_string(c.family));
    doc["test_rows"] = test_part.rows();
    run.write("report.json", json_text(doc));
    if (binary) {
        run.write("roc.csv", curve_csv(report.roc, "fpr", "tpr"));
        run.write("pr.csv", curve_csv(report.pr, "recall", "precision"));
    }
    return run.finish();
}

StageOutcome stage_cluster(const PipelineConfig& c) {
    StageRun run(Stage::Cluster, c, c.output / "cluster");
    const auto matches = load_ingested_matches(run);
    const auto rows = read_metrics_csv(run.input("metrics/metrics.csv", Stage::Metrics));
    if (run.up_to_date()) return run.skipped();

    std::map<std::string, Competition> competition_of;
    for (const auto& m : matches) competition_of[m.match_id] = m.competition;
    std::vector<const MetricsRow*> complete;
    for (const auto& r : rows) {
        if (r.segment != Segment::Full || !competition_of.count(r.match_id)) continue;
        if (std::all_of(r.values.begin(), r.values.end(), [](const auto& v) { return v.has_value(); })) {
            complete.push_back(&r);
        }
    }
    // One point per network, or per team averaged over its season.
    std::vector<std::vector<double>> points;
    std::vector<int> labels;
    if (c.cluster_team_seasons) {
        std::map<std::string, std::pair<std::vector<double>, std::size_t>> sums;
        std::map<std::string, int> league_of;
        for (const MetricsRow* r : complete) {
            auto& [sum, count] = sums[r->team_id];
            sum.resize(r->values.size(), 0.0);
            for (std::size_t j = 0; j < r->values.size(); ++j) sum[j] += *r->values[j];
            ++count;
            league_of[r->team_id] = static_cast<int>(competition_of[r->match_id]);
        }
        for (auto& [team, acc] : sums) {
            for (double& v : acc.first) v /= static_cast<double>(acc.second);
            points.push_back(acc.first);
            labels.push_back(league_of[team]);
        }
    } else {
        for (const MetricsRow* r : complete) {
            std::vector<double> point;
            for (const auto& v : r->values) point.push_back(*v);
            points.push_back(std::move(point));
            labels.push_back(static_cast<int>(competition_of[r->match_id]));
        }
    }
    if (points.size() < 3) throw Error(ErrorKind::TooFewRows, "too few complete metric rows to cluster");
    Eigen::MatrixXd data(static_cast<Eigen::Index>(points.size()), static_cast<Eigen::Index>(points.front().size()));
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t j = 0; j < points[i].size(); ++j) {
            data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = points[i][j];
        }
    }
    std::vector<std::size_t> ks;
    for (std::size_t k = c.k_min; k <= c.k_max; ++k) ks.push_back(k);
    const std::vector<ClusterScan> scans = {
        elbow_scan(data, labels, ks, derive_seed(c.seed, 200), false, c.pca_components),
        elbow_scan(data, labels, ks, derive_seed(c.seed, 201), true, c.pca_components)};
    run.write("scan.csv", scan_csv(scans));
    run.write("pca.csv", pca_csv(pca(data)));
    return run.finish();
}

StageOutcome stage_importance(const PipelineConfig& c) {
    StageRun run(Stage::Importance, c, c.output / "importance" / run_tag(c));
    const LabeledData data = load_table(run, c);
    const TrainedModel model = load_model(run, c);
    if (run.up_to_date()) return run.skipped();

    const Split split = partition(data, c);
    const LabeledData test_part = data.subset(split.test);
    const LabeledData train_part = data.subset(split.train);
    const ImportanceReport importance =
        permutation_importance(model, test_part, c.importance_repeats, derive_seed(c.seed, 300));
    run.write("permutation.csv", importance_csv(importance, c.top_n));

    // Explained rows: the first test rows; background: a seeded draw of training rows.
    const std::size_t n_rows = std::min(c.shap_rows, test_part.rows());
    std::vector<std::size_t> order(train_part.rows());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(c.seed, 301));
    rng.shuffle(std::span<std::size_t>(order));
    order.resize(std::min(c.shap_background, order.size()));
    std::sort(order.begin(), order.end());
    const LabeledData background = train_part.subset(order);
    std::vector<std::string> row_ids;
    for (std::size_t i = 0; i < n_rows; ++i) row_ids.push_back(std::to_string(split.test[i]));

    ShapleyOptions options;
    options.mode = ShapleyMode::MonteCarlo;
    options.samples = c.shap_samples;
    options.seed = derive_seed(c.seed, 302);
    const ShapleyMatrix shap = shapley_values(class_one_scorer(model), data.feature_names,
                                              test_part.x.topRows(static_cast<Eigen::Index>(n_rows)),
                                              background.x, options);
    run.write("shap.csv", shapley_csv(shap, row_ids));
    run.write("shap_summary.json", json_text(to_json(shap_summary(shap), shap.base_value, c.top_n)));
    return run.finish();
}

StageOutcome stage_simulate(const PipelineConfig& c) {
    StageRun run(Stage::Simulate, c,
                 c.output / "simulate" /
                     fmt::format("{}-{}-{}", to_string(c.mode), to_string(c.granularity), to_string(c.family)));
    const FeatureTable table = rebuild_table(run, c, TargetKind::Ternary);
    if (run.up_to_date()) return run.skipped();

    std::vector<Competition> targets;
    for (const Competition league : kDomesticLeagues) {
        if (std::any_of(table.rows.begin(), table.rows.end(),
                        [&](const FeatureRow& r) { return r.competition == league; })) {
            targets.push_back(league);
        }
    }
    std::vector<SimulationResult> results(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) {
        ModelSpec spec;
        spec.family = c.family;
        spec.seed = derive_seed(c.seed, 400 + i);
        results[i] = simulate_league(targets[i], table, spec);
    }
    std::vector<StandingsTable> tables;
    json comparison = json::object();
    for (const auto& r : results) {
        tables.push_back(r.real);
        tables.push_back(r.simulated);
        json entry = to_json(r.comparison);
        entry["matches"] = r.matches;
        entry["training_rows"] = r.training_rows;
        comparison[std::string(to_string(r.league))] = entry;
    }
    run.write("standings.csv", standings_csv(tables));
    run.write("comparison.json", json_text(comparison));
    return run.finish();
}

StageOutcome stage_correlate(const PipelineConfig& c) {
    const std::string league(to_string(c.correlate_league));
    StageRun run(Stage::Correlate, c, c.output / "correlate");
    const auto matches = load_ingested_matches(run);
    const auto rows = read_metrics_csv(run.input("metrics/metrics.csv", Stage::Metrics));
    if (run.up_to_date()) return run.skipped();

    std::vector<MatchResult> results;
    std::set<std::string> league_matches;
    for (const auto& m : matches) {
        if (m.competition != c.correlate_league) continue;
        results.push_back({m.home_team_id, m.away_team_id, outcome_of(m)});
        league_matches.insert(m.match_id);
    }
    if (results.empty()) throw Error(ErrorKind::UnknownLeague, fmt::format("no {} matches ingested", league));
    const StandingsTable standings = standings_from_outcomes(league, results, Provenance::Real);
    std::vector<MetricsRow> selected;
    for (const auto& r : rows) {
        if (r.segment == Segment::Full && league_matches.count(r.match_id)) selected.push_back(r);
    }
    const auto correlations = metric_rank_correlations(selected, NetworkMetrics::column_names(), standings);
    run.write(league + ".csv", correlation_csv(correlations));
    run.write(league + "_standings.csv", standings_csv({standings}));
    return run.finish();
}

StageOutcome stage_report(const PipelineConfig& c) {
    StageRun run(Stage::Report, c, c.output / "report" / run_tag(c));
    std::string comparison = "mode,granularity,target,model,accuracy,precision,recall,f1,auc\n";
    for (const FeatureMode mode : {FeatureMode::Nets, FeatureMode::Stats, FeatureMode::Mixed}) {
        PipelineConfig variant = c;
        variant.mode = mode;
        const fs::path rel = fs::path("evaluate") / run_tag(variant) / "report.json";
        if (!fs::exists(c.output / rel)) {
            throw Error(ErrorKind::MissingArtifact,
                        fmt::format("{} not found; run `passnet-lab evaluate --mode {}` first",
                                    rel.generic_string(), to_string(mode)));
        }
        const json doc = json::parse(run.input(rel, Stage::Evaluate));
        const auto num = [&](const char* key) {
            return doc.contains(key) && doc[key].is_number() ? io::format_double(doc[key].get<double>())
                                                             : std::string();
        };
        comparison += fmt::format("{},{},{},{},{},{},{},{},{}\n", to_string(mode), to_string(c.granularity),
                                  to_string(c.target), to_string(c.family), num("accuracy"), num("precision"),
                                  num("recall"), num("f1"), num("auc"));
    }
    const FeatureTable table = rebuild_table(run, c, c.target);
    if (run.up_to_date()) return run.skipped();

    EvaluationPlan plan;
    plan.family = c.family;
    plan.seed = derive_seed(c.seed, 500);
    plan.test_fraction = c.test_fraction;
    plan.tune_budget = c.tune_budget;
    plan.folds = c.folds;
    run.write("comparison.csv", comparison);
    run.write("per_league.csv", league_evaluation_csv(per_league_evaluation(table, plan)));
    return run.finish();
}

}  // namespace

std::map<std::string, std::string> PipelineConfig::echo() const {
    return {
        {"events", events},
        {"matches", matches},
        {"format", format == InputFormat::Canonical ? "canonical" : "wyscout"},
        {"window", std::to_string(window)},
        {"min_history", std::to_string(min_history)},
        {"venue_conditioned", venue_conditioned ? "true" : "false"},
        {"granularity", std::string(to_string(granularity))},
        {"mode", std::string(to_string(mode))},
        {"target", std::string(to_string(target))},
        {"model", std::string(to_string(family))},
        {"seed", std::to_string(seed)},
        {"tune_budget", std::to_string(tune_budget)},
        {"folds", std::to_string(folds)},
        {"test_fraction", io::format_double(test_fraction)},
        {"k_min", std::to_string(k_min)},
        {"k_max", std::to_string(k_max)},
        {"pca_components", std::to_string(pca_components)},
        {"cluster_rows", cluster_team_seasons ? "teams" : "matches"},
        {"top_n", std::to_string(top_n)},
        {"importance_repeats", std::to_string(importance_repeats)},
        {"shap_rows", std::to_string(shap_rows)},
        {"shap_background", std::to_string(shap_background)},
        {"shap_samples", std::to_string(shap_samples)},
        {"correlate_league", std::string(to_string(correlate_league))},
    };
}

std::string PipelineConfig::hash() const {
    std::string text;
    for (const auto& [k, v] : echo()) text += k + "=" + v + "\n";
    return io::sha256_hex(text);
}

void apply_setting(PipelineConfig& c, const std::string& key, const std::string& value) {
    if (key == "events") c.events = value;
    else if (key == "matches") c.matches = value;
    else if (key == "output") c.output = value;
    else if (key == "format") {
        if (value == "canonical") c.format = InputFormat::Canonical;
        else if (value == "wyscout") c.format = InputFormat::Wyscout;
        else throw Error(ErrorKind::ConfigError, fmt::format("bad value '{}' for format", value));
    }
    else if (key == "window") c.window = parse_count(key, value);
    else if (key == "min_history") c.min_history = parse_count(key, value);
    else if (key == "venue_conditioned") c.venue_conditioned = parse_flag(key, value);
    else if (key == "granularity") c.granularity = parse_enum(key, value, parse_granularity);
    else if (key == "mode") c.mode = parse_enum(key, value, parse_feature_mode);
    else if (key == "target") c.target = parse_enum(key, value, parse_target_kind);
    else if (key == "model") c.family = parse_enum(key, value, parse_model_family);
    else if (key == "seed") c.seed = parse_count(key, value);
    else if (key == "tune_budget") c.tune_budget = parse_count(key, value);
    else if (key == "folds") c.folds = parse_count(key, value);
    else if (key == "test_fraction") {
        try {
            c.test_fraction = io::parse_double(value, key);
        } catch (const Error&) {
            throw Error(ErrorKind::ConfigError, fmt::format("bad value '{}' for test_fraction", value));
        }
        if (!(c.test_fraction > 0.0 && c.test_fraction < 1.0)) {
            throw Error(ErrorKind::ConfigError, "test_fraction must lie in (0, 1)");
        }
    }
    else if (key == "k_range") {
        const auto dots = value.find("..");
        if (dots == std::string::npos) throw Error(ErrorKind::ConfigError, "k_range must look like 2..7");
        c.k_min = parse_count(key, value.substr(0, dots));
        c.k_max = parse_count(key, value.substr(dots + 2));
        if (c.k_min < 1 || c.k_max < c.k_min) throw Error(ErrorKind::ConfigError, "k_range is empty");
    }
    else if (key == "pca_components") c.pca_components = parse_count(key, value);
    else if (key == "cluster_rows") {
        if (value != "matches" && value != "teams") {
            throw Error(ErrorKind::ConfigError, fmt::format("cluster_rows must be matches or teams, got '{}'", value));
        }
        c.cluster_team_seasons = value == "teams";
    }
    else if (key == "top_n") c.top_n = parse_count(key, value);
    else if (key == "importance_repeats") c.importance_repeats = parse_count(key, value);
    else if (key == "shap_rows") c.shap_rows = parse_count(key, value);
    else if (key == "shap_background") c.shap_background = parse_count(key, value);
    else if (key == "shap_samples") c.shap_samples = parse_count(key, value);
    else if (key == "correlate_league") c.correlate_league = parse_enum(key, value, parse_competition);
    else throw Error(ErrorKind::ConfigError, fmt::format("unknown config key '{}'", key));
}

PipelineConfig load_config(const fs::path& path) {
    if (!fs::exists(path)) throw Error(ErrorKind::ConfigError, fmt::format("config {} not found", path.string()));
    PipelineConfig config;
    const fs::path base = path.parent_path();
    std::size_t line_no = 0;
    for (const auto& raw : io::lines(io::read_file(path))) {
        ++line_no;
        std::string line = raw.substr(0, raw.find('#'));
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorKind::ConfigError, fmt::format("{}:{}: expected key = value", path.string(), line_no));
        }
        apply_setting(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    // Relative paths are taken from the config file's directory.
    const auto resolve = [&](const std::string& list) {
        std::vector<std::string> parts;
        for (const auto& p : io::split(list, ',')) {
            const fs::path item = trim(p);
            parts.push_back(item.is_absolute() || item.empty() ? item.string() : (base / item).lexically_normal().string());
        }
        return fmt::format("{}", fmt::join(parts, ","));
    };
    if (config.events.empty() || config.matches.empty()) {
        throw Error(ErrorKind::ConfigError, "config must set events and matches");
    }
    config.events = resolve(config.events);
    config.matches = resolve(config.matches);
    if (config.output.is_relative()) config.output = (base / config.output).lexically_normal();
    return config;
}

std::string_view to_string(Stage stage) {
    switch (stage) {
        case Stage::Ingest: return "ingest";
        case Stage::BuildNets: return "build-nets";
        case Stage::Metrics: return "metrics";
        case Stage::Features: return "features";
        case Stage::Train: return "train";
        case Stage::Evaluate: return "evaluate";
        case Stage::Cluster: return "cluster";
        case Stage::Importance: return "importance";
        case Stage::Simulate: return "simulate";
        case Stage::Correlate: return "correlate";
        case Stage::Report: return "report";
    }
    return "?";
}

const std::vector<Stage>& all_stages() {
    static const std::vector<Stage> stages = {Stage::Ingest,   Stage::BuildNets,  Stage::Metrics,
                                              Stage::Features, Stage::Train,      Stage::Evaluate,
                                              Stage::Cluster,  Stage::Importance, Stage::Simulate,
                                              Stage::Correlate, Stage::Report};
    return stages;
}

Stage parse_stage(std::string_view text) {
    for (const Stage s : all_stages()) {
        if (to_string(s) == text) return s;
    }
    throw Error(ErrorKind::ConfigError, fmt::format("unknown stage '{}'", text));
}

std::string run_tag(const PipelineConfig& c) {
    return fmt::format("{}-{}", feature_tag(c, c.target), to_string(c.family));
}

StageOutcome run_stage(Stage stage, const PipelineConfig& config) {
    switch (stage) {
        case Stage::Ingest: return stage_ingest(config);
        case Stage::BuildNets: return stage_build_nets(config);
        case Stage::Metrics: return stage_metrics(config);
        case Stage::Features: return stage_features(config);
        case Stage::Train: return stage_train(config);
        case Stage::Evaluate: return stage_evaluate(config);
        case Stage::Cluster: return stage_cluster(config);
        case Stage::Importance: return stage_importance(config);
        case Stage::Simulate: return stage_simulate(config);
        case Stage::Correlate: return stage_correlate(config);
        case Stage::Report: return stage_report(config);
    }
    throw Error(ErrorKind::ConfigError, "unknown stage");
}

void run_all(PipelineConfig config, const StageObserver& observer) {
    const auto run = [&](Stage s) {
        const StageOutcome outcome = run_stage(s, config);
        if (observer) observer(s, outcome);
    };
    for (const Stage s : {Stage::Ingest, Stage::BuildNets, Stage::Metrics, Stage::Cluster, Stage::Correlate}) run(s);
    const FeatureMode chosen = config.mode;
    for (const FeatureMode mode : {FeatureMode::Nets, FeatureMode::Stats, FeatureMode::Mixed}) {
        config.mode = mode;
        for (const Stage s : {Stage::Features, Stage::Train, Stage::Evaluate, Stage::Importance}) run(s);
    }
    config.mode = chosen;
    run(Stage::Simulate);
    run(Stage::Report);
}

PipelineLock::PipelineLock(const fs::path& output) : path_(output / ".lock") {
    fs::create_directories(output);
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
        if (errno == EEXIST) {
            throw Error(ErrorKind::ConfigError,
                        fmt::format("{} is locked by another run (remove {} if stale)", output.string(),
                                    path_.string()));
        }
        throw Error(ErrorKind::ConfigError, fmt::format("cannot create {}: {}", path_.string(), std::strerror(errno)));
    }
    const std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] const auto n = ::write(fd, pid.data(), pid.size());
    ::close(fd);
}

PipelineLock::~PipelineLock() {
    std::error_code ec;
    fs::remove(path_, ec);
}

}  // namespace passnet
