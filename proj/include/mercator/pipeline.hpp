#pragma once

#include "mercator/corpus.hpp"
#include "mercator/embedding.hpp"
#include "mercator/ipf.hpp"
#include "mercator/kmeans.hpp"
#include "mercator/markets.hpp"
#include "mercator/pca.hpp"
#include "mercator/zeroshot.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mercator::pipeline {

namespace fs = std::filesystem;

/// Process exit codes of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 2,
    kExitUpstream = 3,
    kExitAbstention = 4,
};

struct Flags {
    fs::path out_dir = "out";
    /// Swaps every network client for file-backed fixtures:
    ///   news/<event>.json, labels/<event>.csv, zeroshot/<event>.json,
    ///   quotes.json, series/<event>.csv
    std::optional<fs::path> fixture_dir;
    std::uint64_t seed = 42;
    /// Reference time for article ages and days to resolution; the system
    /// clock when unset.
    std::optional<Timestamp> as_of;

    std::string embed_backend = "stub";  // stub | service
    std::string embed_url = "http://127.0.0.1:8000";
    int dim = embedding::kDefaultDim;

    std::vector<std::string> providers;  // live providers; empty means all three
    std::optional<fs::path> labels;
    std::optional<fs::path> zeroshot_fixture;
    std::optional<fs::path> quotes_fixture;
    std::optional<fs::path> series;
    std::optional<double> x_hat;
    std::optional<std::size_t> zeroshot_budget;
    bool macro_only = false;
};

/// Whether a module contributed a probability, and why not if it did not.
struct ModuleStatus {
    std::optional<double> p_yes;
    std::string reason;
    nlohmann::json detail = nlohmann::json::object();

    bool present() const { return p_yes.has_value(); }
};

struct ManifestEntry {
    std::string path;
    std::string sha256;
};

struct RunManifest {
    std::string event_id;
    std::vector<std::string> steps;
    std::vector<ManifestEntry> inputs;
    std::vector<ManifestEntry> outputs;
    std::uint64_t seed = 0;
    std::string as_of;
    std::string generated_at;
};

struct Relevant {
    std::vector<corpus::Article> articles;  // kept articles, corpus order
    std::vector<embedding::Embedding> embeddings;
    std::vector<double> similarities;  // one per corpus article
    std::size_t dropped = 0;
};

/// Everything one event run needs: its config, flags, workspace directory,
/// clock, embedding backend and the manifest being accumulated.
class EventRun {
public:
    EventRun(corpus::EventSpec event, Flags flags, std::optional<fs::path> config_path = std::nullopt);

    const corpus::EventSpec& event() const { return event_; }
    const fs::path& dir() const { return dir_; }
    Timestamp as_of() const { return as_of_; }

    std::vector<corpus::Article> ingest();
    /// Loads the stored corpus (ingesting first when absent).
    std::vector<corpus::Article> corpus();
    Relevant filter(const std::vector<corpus::Article>& corpus);
    std::vector<corpus::Label> labels(const std::vector<corpus::Article>& corpus);

    ModuleStatus sna_pca(const std::vector<corpus::Article>& corpus, const Relevant& relevant,
                         const std::vector<corpus::Label>& labels);
    ModuleStatus sna_kmeans(const std::vector<corpus::Article>& corpus, const Relevant& relevant,
                            const std::vector<corpus::Label>& labels);
    ModuleStatus sna_zeroshot(const Relevant& relevant);
    ModuleStatus crowd();
    ModuleStatus calibrate();

    /// Whole chain for the event kind; writes forecast.json, summary.md and
    /// manifest.json.
    struct Result {
        std::optional<ipf::EventForecast> forecast;
        nlohmann::json record;
        RunManifest manifest;
        bool abstention_only = false;
    };
    Result forecast();

    /// Writes manifest.json from what has been recorded so far.
    RunManifest finish();

private:
    const pca::PcaClassifier* classifier() const { return classifier_.get(); }
    std::vector<embedding::Embedding> embeddings_for(const std::vector<corpus::Article>& articles);
    std::optional<fs::path> fixture(const fs::path& relative) const;
    void record_input(const fs::path& path);
    void record_output(const fs::path& path);
    double age_days(const corpus::Article& a) const;

    corpus::EventSpec event_;
    Flags flags_;
    fs::path dir_;
    Timestamp as_of_;
    std::unique_ptr<embedding::EmbedBackend> embedder_;
    std::map<std::string, Eigen::VectorXd> embedding_cache_;
    std::unique_ptr<pca::PcaClassifier> classifier_;
    RunManifest manifest_;
};

/// forecast.json content. The top level carries the combined forecast; the
/// per-module detail sits under "audit".
nlohmann::json forecast_to_json(const ipf::EventForecast& forecast);
ipf::EventForecast forecast_from_json(const nlohmann::json& j);

/// Writes forecast.json and summary.md into `dir`; returns the paths.
std::vector<fs::path> emit_report(const nlohmann::json& record, const fs::path& dir);

struct ReportRow {
    std::string event_id;
    std::string kind;
    std::optional<double> p_yes;
    std::string modules;
};

/// Forecasts every event and writes summary.md / summary.csv into
/// flags.out_dir. Returns one row per event.
std::vector<ReportRow> run_report(const std::vector<corpus::EventSpec>& events, const Flags& flags,
                                  const std::optional<fs::path>& config_path);

nlohmann::json manifest_to_json(const RunManifest& m);

/// Shortest round-trip decimal representation.
std::string format_number(double v);

std::unique_ptr<embedding::EmbedBackend> make_embedder(const Flags& flags);

}  // namespace mercator::pipeline
