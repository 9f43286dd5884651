// mercator: command-line front end for the forecasting pipeline.

#include "mercator/corpus.hpp"
#include "mercator/error.hpp"
#include "mercator/pipeline.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <optional>
#include <string>

using namespace mercator;
using pipeline::EventRun;
using pipeline::ModuleStatus;

namespace {

struct Options {
    std::string config;
    std::string event;
    std::string out = "out";
    std::uint64_t seed = 42;
    std::string fixture_dir;
    std::string as_of;
    std::string embed_backend = "stub";
    std::string embed_url = "http://127.0.0.1:8000";
    int dim = embedding::kDefaultDim;
    std::vector<std::string> providers;
    std::string labels;
    std::optional<std::size_t> budget;
    std::string fixture;
    std::string series;
    std::optional<double> x_hat;
    bool macro_only = false;
};

std::optional<std::filesystem::path> path_or_none(const std::string& s) {
    if (s.empty()) return std::nullopt;
    return std::filesystem::path(s);
}

pipeline::Flags make_flags(const Options& o, const std::string& fixture_role) {
    pipeline::Flags f;
    f.out_dir = o.out;
    f.fixture_dir = path_or_none(o.fixture_dir);
    f.seed = o.seed;
    if (!o.as_of.empty()) {
        f.as_of = o.as_of.size() == 10 ? start_of(parse_date(o.as_of)) : parse_timestamp(o.as_of);
    }
    f.embed_backend = o.embed_backend;
    f.embed_url = o.embed_url;
    f.dim = o.dim;
    f.providers = o.providers;
    f.labels = path_or_none(o.labels);
    f.series = path_or_none(o.series);
    f.x_hat = o.x_hat;
    f.zeroshot_budget = o.budget;
    f.macro_only = o.macro_only;
    // --fixture names a single file (or, for ingest, a directory) whose role
    // depends on the subcommand.
    if (!o.fixture.empty()) {
        if (fixture_role == "zeroshot") f.zeroshot_fixture = o.fixture;
        if (fixture_role == "quotes") f.quotes_fixture = o.fixture;
        if (fixture_role == "dir") f.fixture_dir = o.fixture;
    }
    return f;
}

corpus::EventSpec select_event(const Options& o) {
    if (o.config.empty()) throw ConfigError("--config is required");
    if (o.event.empty()) throw ConfigError("--event is required");
    return corpus::find_event(corpus::load_events(o.config), o.event);
}

int print_status(const std::string& module, const ModuleStatus& s) {
    nlohmann::json j = s.detail;
    j["module"] = module;
    j["p_yes"] = s.p_yes ? nlohmann::json(*s.p_yes) : nlohmann::json(nullptr);
    if (!s.reason.empty()) j["reason"] = s.reason;
    std::cout << j.dump(2) << "\n";
    return s.present() ? pipeline::kExitOk : pipeline::kExitAbstention;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mercator: ensemble probabilities for binary economic events"};
    app.require_subcommand(1);
    app.fallthrough();

    Options o;
    app.add_option("--config", o.config, "Event configuration (JSON)");
    app.add_option("--event", o.event, "Event id");
    app.add_option("--out", o.out, "Output directory")->capture_default_str();
    app.add_option("--seed", o.seed, "Seed for every stochastic component")->capture_default_str();
    app.add_option("--fixture-dir", o.fixture_dir, "Replace every network client with fixtures from this directory");
    app.add_option("--as-of", o.as_of, "Reference time (YYYY-MM-DD or ISO-8601 timestamp)");
    app.add_option("--embed-backend", o.embed_backend, "stub or service")
        ->check(CLI::IsMember({"stub", "service"}))
        ->capture_default_str();
    app.add_option("--embed-url", o.embed_url, "Embedding service base URL")->capture_default_str();
    app.add_option("--dim", o.dim, "Embedding dimension")->capture_default_str();

    Options* opts = &o;
    int code = pipeline::kExitOk;

    auto* ingest = app.add_subcommand("ingest", "Fetch and store the article corpus");
    ingest->add_option("--provider", o.providers, "newsapi, newsdata or mediacloud (repeatable)");
    ingest->add_option("--fixture", o.fixture, "Fixture directory for the news providers");

    auto* filter = app.add_subcommand("filter", "Embed the corpus and keep relevant articles");

    auto* sna = app.add_subcommand("sna", "News analysis modules");
    sna->require_subcommand(1);
    auto* sna_pca = sna->add_subcommand("pca", "PCA / Fisher classifier");
    sna_pca->add_option("--labels", o.labels, "Labels CSV (article_id,outcome)");
    auto* sna_kmeans = sna->add_subcommand("kmeans", "Two-cluster k-means");
    sna_kmeans->add_option("--labels", o.labels, "Labels CSV (article_id,outcome)");
    auto* sna_zs = sna->add_subcommand("zeroshot", "LLM zero-shot classification");
    sna_zs->add_option("--budget", o.budget, "Maximum number of articles to classify");
    sna_zs->add_option("--fixture", o.fixture, "Scripted completions (JSON)");

    auto* crowd = app.add_subcommand("crowd", "Prediction market estimate");
    crowd->add_option("--fixture", o.fixture, "Quote fixture (JSON)");

    auto* calibrate = app.add_subcommand("calibrate", "Threshold calibration of a point forecast");
    calibrate->add_option("--series", o.series, "Historical series CSV (date,value)");
    calibrate->add_option("--xhat", o.x_hat, "Point forecast supplied by an external model");

    auto* forecast = app.add_subcommand("forecast", "Run the whole chain for one event");
    forecast->add_option("--labels", o.labels, "Labels CSV (article_id,outcome)");
    forecast->add_option("--budget", o.budget, "Zero-shot budget");
    forecast->add_option("--series", o.series, "Historical series CSV (date,value)");
    forecast->add_option("--xhat", o.x_hat, "Point forecast supplied by an external model");
    forecast->add_flag("--macro-only", o.macro_only, "Use only the analyst prior");

    auto* report = app.add_subcommand("report", "Forecast every configured event and write a summary");
    report->add_flag("--macro-only", o.macro_only, "Use only the analyst prior");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : pipeline::kExitConfig;
    }

    try {
        if (report->parsed()) {
            if (o.config.empty()) throw ConfigError("--config is required");
            auto events = corpus::load_events(o.config);
            if (!o.event.empty()) events = {corpus::find_event(events, o.event)};
            const auto rows = pipeline::run_report(events, make_flags(o, ""), std::filesystem::path(o.config));
            std::cout << "event_id,kind,p_yes\n";
            for (const auto& r : rows) {
                std::cout << r.event_id << "," << r.kind << ","
                          << (r.p_yes ? pipeline::format_number(*r.p_yes) : "") << "\n";
            }
            return pipeline::kExitOk;
        }

        const corpus::EventSpec event = select_event(*opts);
        std::string role;
        if (ingest->parsed()) role = "dir";
        if (sna_zs->parsed()) role = "zeroshot";
        if (crowd->parsed()) role = "quotes";
        EventRun run(event, make_flags(o, role), std::filesystem::path(o.config));

        if (ingest->parsed()) {
            const auto articles = run.ingest();
            std::cout << "stored " << articles.size() << " articles in " << (run.dir() / "corpus.jsonl").string()
                      << "\n";
        } else if (filter->parsed()) {
            const auto articles = run.corpus();
            const auto relevant = run.filter(articles);
            std::cout << "kept " << relevant.articles.size() << " of " << articles.size() << " articles (tau "
                      << pipeline::format_number(event.relevance_tau) << ")\n";
        } else if (sna_pca->parsed() || sna_kmeans->parsed() || sna_zs->parsed()) {
            const auto articles = run.corpus();
            const auto relevant = run.filter(articles);
            if (sna_zs->parsed()) {
                code = print_status("sna.zeroshot", run.sna_zeroshot(relevant));
            } else {
                const auto labels = run.labels(articles);
                const auto pca = run.sna_pca(articles, relevant, labels);
                code = sna_pca->parsed() ? print_status("sna.pca", pca)
                                         : print_status("sna.kmeans", run.sna_kmeans(articles, relevant, labels));
            }
        } else if (crowd->parsed()) {
            code = print_status("crowd", run.crowd());
        } else if (calibrate->parsed()) {
            code = print_status("calibrate", run.calibrate());
        } else if (forecast->parsed()) {
            const auto result = run.forecast();
            nlohmann::json out = result.record;
            out.erase("audit");
            std::cout << out.dump(2) << "\n";
            return result.abstention_only ? pipeline::kExitAbstention : pipeline::kExitOk;
        }
        run.finish();
        return code;
    } catch (const NoSignal& e) {
        std::cerr << "mercator: abstained: " << e.what() << "\n";
        return pipeline::kExitAbstention;
    } catch (const UpstreamError& e) {
        std::cerr << "mercator: upstream error: " << e.what() << "\n";
        return pipeline::kExitUpstream;
    } catch (const ConfigError& e) {
        std::cerr << "mercator: config error: " << e.what() << "\n";
        return pipeline::kExitConfig;
    } catch (const DataError& e) {
        std::cerr << "mercator: data error: " << e.what() << "\n";
        return pipeline::kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "mercator: " << e.what() << "\n";
        return 1;
    }
}
