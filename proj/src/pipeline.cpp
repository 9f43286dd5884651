#include "mercator/pipeline.hpp"

#include "mercator/calibration.hpp"
#include "mercator/error.hpp"
#include "mercator/hash.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace mercator::pipeline {

using json = nlohmann::json;
using corpus::Article;
using corpus::Outcome;

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

class CsvWriter {
public:
    CsvWriter(const fs::path& path, const std::vector<std::string>& header) : out_(path, std::ios::binary) {
        if (!out_) {
            throw DataError("cannot write " + path.string());
        }
        row(header);
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            out_ << (i ? "," : "") << cells[i];
        }
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out << content;
}

// Re-raises a module failure with the module named, keeping its category.
template <typename F>
auto guarded(const std::string& module, F&& f) {
    try {
        return f();
    } catch (const CredentialError& e) {
        throw CredentialError(module + ": " + e.what());
    } catch (const UpstreamError& e) {
        throw UpstreamError(module + ": " + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(module + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError(module + ": " + e.what());
    }
}

ModuleStatus abstain(std::string reason) {
    ModuleStatus s;
    s.reason = std::move(reason);
    return s;
}

json status_json(const ModuleStatus& s) {
    json j = s.detail;
    j["status"] = s.present() ? "ok" : "abstained";
    j["p_yes"] = s.p_yes ? json(*s.p_yes) : json(nullptr);
    if (!s.reason.empty()) {
        j["reason"] = s.reason;
    }
    return j;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json weights_json(const ipf::IpfWeights& w) {
    return json{{"lstm", w.lstm}, {"sna", w.sna}, {"crowd", w.crowd}, {"macro", w.macro}};
}

ipf::IpfWeights weights_from(const json& j) {
    return {j.at("lstm").get<double>(), j.at("sna").get<double>(), j.at("crowd").get<double>(),
            j.at("macro").get<double>()};
}

std::optional<double> optional_from(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

Eigen::MatrixXd stack(const std::vector<Eigen::VectorXd>& rows) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        m.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    }
    return m;
}

// The first three entries of `order` as score columns, zero-padded when the
// model has fewer components.
std::vector<std::string> coords(const Eigen::VectorXd& scores, const std::vector<Eigen::Index>& order) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < 3; ++i) {
        out.push_back(i < order.size() ? format_number(scores[order[i]]) : "0");
    }
    return out;
}

std::vector<std::string> pc_header(const std::vector<Eigen::Index>& order) {
    std::vector<std::string> out{"article_id"};
    for (std::size_t i = 0; i < 3; ++i) {
        out.push_back(i < order.size() ? "pc" + std::to_string(order[i] + 1) : "pad" + std::to_string(i + 1));
    }
    out.push_back("label");
    return out;
}

}  // namespace

std::unique_ptr<embedding::EmbedBackend> make_embedder(const Flags& flags) {
    if (flags.embed_backend == "stub") {
        return std::make_unique<embedding::StubEmbedder>(flags.dim);
    }
    if (flags.embed_backend == "service") {
        return std::make_unique<embedding::ServiceEmbedder>(flags.embed_url, flags.dim);
    }
    throw ConfigError("unknown embedding backend '" + flags.embed_backend + "' (expected stub or service)");
}

EventRun::EventRun(corpus::EventSpec event, Flags flags, std::optional<fs::path> config_path)
    : event_(std::move(event)), flags_(std::move(flags)) {
    dir_ = flags_.out_dir / event_.id;
    fs::create_directories(dir_);
    as_of_ = flags_.as_of.value_or(std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now()));
    embedder_ = make_embedder(flags_);
    manifest_.event_id = event_.id;
    manifest_.seed = flags_.seed;
    manifest_.as_of = format_timestamp(as_of_);
    if (config_path) {
        record_input(*config_path);
    }
}

std::optional<fs::path> EventRun::fixture(const fs::path& relative) const {
    if (!flags_.fixture_dir) return std::nullopt;
    const fs::path p = *flags_.fixture_dir / relative;
    return fs::exists(p) ? std::optional<fs::path>(p) : std::nullopt;
}

void EventRun::record_input(const fs::path& path) {
    for (const auto& e : manifest_.inputs) {
        if (e.path == path.generic_string()) return;
    }
    manifest_.inputs.push_back({path.generic_string(), sha256_file(path)});
}

void EventRun::record_output(const fs::path& path) {
    const std::string rel = fs::relative(path, flags_.out_dir).generic_string();
    const std::string digest = sha256_file(path);
    for (auto& e : manifest_.outputs) {
        if (e.path == rel) {
            e.sha256 = digest;
            return;
        }
    }
    manifest_.outputs.push_back({rel, digest});
}

double EventRun::age_days(const Article& a) const { return days_between(a.published_at, as_of_); }

std::vector<Article> EventRun::ingest() {
    return guarded("ingest", [&] {
        manifest_.steps.push_back("ingest");
        std::vector<std::unique_ptr<corpus::NewsProvider>> owned;
        if (flags_.fixture_dir) {
            if (const auto p = fixture(fs::path("news") / (event_.id + ".json"))) {
                record_input(*p);
            }
            owned.push_back(corpus::make_provider({"fixture", flags_.fixture_dir->string(), "", {}}));
        } else if (!flags_.providers.empty()) {
            for (const auto& name : flags_.providers) {
                owned.push_back(corpus::make_provider(corpus::provider_from_env(name)));
            }
        } else {
            for (const char* name : {"newsapi", "newsdata", "mediacloud"}) {
                try {
                    owned.push_back(corpus::make_provider(corpus::provider_from_env(name)));
                } catch (const ConfigError&) {
                    // provider without credentials is skipped
                }
            }
        }
        std::vector<corpus::NewsProvider*> providers;
        for (auto& p : owned) providers.push_back(p.get());
        auto articles = corpus::fetch_all(event_, providers);

        corpus::CorpusStore store(dir_ / "corpus.jsonl");
        store.write(articles);
        record_output(store.path());
        return articles;
    });
}

std::vector<Article> EventRun::corpus() {
    const fs::path path = dir_ / "corpus.jsonl";
    if (!fs::exists(path)) {
        return ingest();
    }
    return guarded("ingest", [&] { return corpus::load_corpus(path); });
}

std::vector<embedding::Embedding> EventRun::embeddings_for(const std::vector<Article>& articles) {
    std::vector<Article> missing;
    for (const auto& a : articles) {
        if (!embedding_cache_.count(a.id)) missing.push_back(a);
    }
    if (!missing.empty()) {
        for (auto& e : embedding::embed_articles(missing, *embedder_)) {
            embedding_cache_[e.article_id] = std::move(e.vector);
        }
    }
    std::vector<embedding::Embedding> out;
    out.reserve(articles.size());
    for (const auto& a : articles) {
        out.push_back({a.id, embedding_cache_.at(a.id)});
    }
    return out;
}

Relevant EventRun::filter(const std::vector<Article>& corpus) {
    return guarded("filter", [&] {
        manifest_.steps.push_back("filter");
        Relevant out;
        if (!corpus.empty()) {
            const auto embeddings = embeddings_for(corpus);
            const Eigen::VectorXd event_vec = embedding::embed({event_.summary_text}, *embedder_).front();
            auto res = embedding::relevance_filter(event_vec, embeddings, event_.relevance_tau);
            std::set<std::string> kept;
            for (const auto& e : res.kept) kept.insert(e.article_id);
            for (const auto& a : corpus) {
                if (kept.count(a.id)) out.articles.push_back(a);
            }
            out.embeddings = std::move(res.kept);
            out.similarities = std::move(res.similarities);
            out.dropped = res.dropped;
        }
        {
            CsvWriter csv(dir_ / "relevance.csv", {"article_id", "similarity", "kept"});
            for (std::size_t i = 0; i < corpus.size(); ++i) {
                const double s = out.similarities[i];
                csv.row({corpus[i].id, format_number(s), s >= event_.relevance_tau ? "1" : "0"});
            }
        }
        record_output(dir_ / "relevance.csv");
        corpus::store_corpus(out.articles, dir_ / "relevant.jsonl");
        record_output(dir_ / "relevant.jsonl");
        return out;
    });
}

std::vector<corpus::Label> EventRun::labels(const std::vector<Article>& corpus) {
    return guarded("labels", [&] {
        std::optional<fs::path> source = flags_.labels;
        if (!source) source = fixture(fs::path("labels") / (event_.id + ".csv"));
        if (!source && fs::exists(dir_ / "labels.csv")) source = dir_ / "labels.csv";
        if (!source) return std::vector<corpus::Label>{};

        manifest_.steps.push_back("labels");
        record_input(*source);
        auto labels = corpus::load_labels(*source);
        corpus::check_labels(labels, corpus);
        const fs::path imported = dir_ / "labels.csv";
        if (!fs::exists(imported) || !fs::equivalent(*source, imported)) {
            corpus::store_labels(labels, imported);
        }
        record_output(imported);
        return labels;
    });
}

ModuleStatus EventRun::sna_pca(const std::vector<Article>& corpus, const Relevant& relevant,
                               const std::vector<corpus::Label>& labels) {
    return guarded("sna.pca", [&]() -> ModuleStatus {
        manifest_.steps.push_back("sna.pca");
        classifier_.reset();
        std::map<std::string, const Article*> by_id;
        for (const auto& a : corpus) by_id[a.id] = &a;

        std::vector<Article> labeled_articles;
        for (const auto& l : labels) labeled_articles.push_back(*by_id.at(l.article_id));
        const auto labeled_vecs = embeddings_for(labeled_articles);
        std::vector<pca::LabeledEmbedding> labeled;
        std::size_t n_yes = 0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            labeled.push_back({labels[i].article_id, labeled_vecs[i].vector, labels[i].outcome});
            n_yes += labels[i].outcome == Outcome::Yes;
        }
        const std::size_t n_no = labeled.size() - n_yes;
        if (labeled.size() < 3 || n_yes < 2 || n_no < 2) {
            return abstain("needs >= 3 labelled articles with >= 2 per outcome (have " + std::to_string(n_yes) +
                           " YES, " + std::to_string(n_no) + " NO)");
        }
        try {
            classifier_ = std::make_unique<pca::PcaClassifier>(labeled);
        } catch (const DataError& e) {
            return abstain(std::string("degenerate labelled set: ") + e.what());
        }
        const pca::PcaModel& model = classifier_->model();
        const pca::FisherSelection& sel = classifier_->selection();
        const pca::ExplainedVariance ev = pca::explained_variance(model);

        {
            CsvWriter csv(dir_ / "scree.csv", {"component", "ratio", "cumulative"});
            for (Eigen::Index k = 0; k < ev.ratios.size(); ++k) {
                csv.row({std::to_string(k + 1), format_number(ev.ratios[k]), format_number(ev.cumulative[k])});
            }
        }
        record_output(dir_ / "scree.csv");

        std::set<std::string> labeled_ids;
        std::map<std::string, Outcome> outcome_of;
        for (const auto& l : labels) {
            labeled_ids.insert(l.article_id);
            outcome_of[l.article_id] = l.outcome;
        }
        std::vector<Article> unlabeled;
        for (const auto& a : relevant.articles) {
            if (!labeled_ids.count(a.id)) unlabeled.push_back(a);
        }

        std::vector<Eigen::Index> by_variance;
        std::vector<Eigen::Index> by_fisher;
        for (Eigen::Index k = 0; k < model.rank(); ++k) {
            by_variance.push_back(k);
            by_fisher.push_back(k);
        }
        std::stable_sort(by_fisher.begin(), by_fisher.end(), [&](Eigen::Index a, Eigen::Index b) {
            return sel.fisher_scores[a] > sel.fisher_scores[b];
        });
        {
            CsvWriter var_csv(dir_ / "projection_top_variance.csv", pc_header(by_variance));
            CsvWriter fisher_csv(dir_ / "projection_top_fisher.csv", pc_header(by_fisher));
            auto emit = [&](const std::vector<Article>& set, bool with_labels) {
                const auto vecs = embeddings_for(set);
                for (std::size_t i = 0; i < set.size(); ++i) {
                    const Eigen::VectorXd s = pca::project(model, vecs[i].vector);
                    const std::string label = with_labels ? corpus::to_string(outcome_of.at(set[i].id)) : "UNLABELED";
                    auto row = coords(s, by_variance);
                    row.insert(row.begin(), set[i].id);
                    row.push_back(label);
                    var_csv.row(row);
                    row = coords(s, by_fisher);
                    row.insert(row.begin(), set[i].id);
                    row.push_back(label);
                    fisher_csv.row(row);
                }
            };
            emit(labeled_articles, true);
            emit(unlabeled, false);
        }
        record_output(dir_ / "projection_top_variance.csv");
        record_output(dir_ / "projection_top_fisher.csv");

        std::vector<pca::ArticleScore> scores;
        const auto unlabeled_vecs = embeddings_for(unlabeled);
        for (std::size_t i = 0; i < unlabeled.size(); ++i) {
            scores.push_back(classifier_->score(unlabeled[i].id, unlabeled_vecs[i].vector, age_days(unlabeled[i])));
        }
        {
            CsvWriter csv(dir_ / "article_probs.csv", {"article_id", "p_yes", "weight"});
            for (const auto& s : scores) {
                csv.row({s.article_id, format_number(s.p_yes), format_number(s.recency_weight)});
            }
        }
        record_output(dir_ / "article_probs.csv");

        json fisher_top = json::array();
        for (std::size_t i = 0; i < std::min<std::size_t>(3, by_fisher.size()); ++i) {
            fisher_top.push_back(by_fisher[i] + 1);
        }
        ModuleStatus status;
        status.detail = {{"n_labeled", labeled.size()},
                         {"n_scored", scores.size()},
                         {"rank", model.rank()},
                         {"n95", ev.n_retained},
                         {"k_star", sel.k_star + 1},
                         {"top_fisher_components", fisher_top},
                         {"tau_pca", sel.tau_pca},
                         {"n_top_features", sel.top_features.size()}};
        try {
            status.p_yes = pca::aggregate_pca(scores).yes;
        } catch (const NoSignal& e) {
            status.reason = e.what();
        }
        return status;
    });
}

ModuleStatus EventRun::sna_kmeans(const std::vector<Article>& corpus, const Relevant& relevant,
                                  const std::vector<corpus::Label>& labels) {
    return guarded("sna.kmeans", [&]() -> ModuleStatus {
        manifest_.steps.push_back("sna.kmeans");
        std::vector<Article> members = relevant.articles;
        std::set<std::string> in_set;
        for (const auto& a : members) in_set.insert(a.id);
        std::map<std::string, Outcome> outcome_of;
        for (const auto& l : labels) outcome_of[l.article_id] = l.outcome;
        for (const auto& a : corpus) {
            if (outcome_of.count(a.id) && !in_set.count(a.id)) {
                members.push_back(a);
                in_set.insert(a.id);
            }
        }
        if (members.size() < 2) {
            return abstain("needs at least 2 articles to cluster");
        }
        std::vector<Eigen::VectorXd> rows;
        for (auto& e : embeddings_for(members)) rows.push_back(std::move(e.vector));
        const Eigen::MatrixXd data = stack(rows);

        const kmeans::KMeansModel model = kmeans::fit_kmeans(data, flags_.seed);
        std::vector<kmeans::Seed> seeds;
        for (std::size_t i = 0; i < members.size(); ++i) {
            if (const auto it = outcome_of.find(members[i].id); it != outcome_of.end()) {
                seeds.push_back({i, it->second});
            }
        }
        const pca::FisherSelection* selection = classifier_ ? &classifier_->selection() : nullptr;
        if (seeds.empty() && selection == nullptr) {
            return abstain("no labelled seeds or PCA selection to name the YES cluster");
        }
        const kmeans::OutcomeMap map = kmeans::map_clusters_to_outcomes(model, seeds, selection);

        const auto dist = kmeans::distances_to_centroid(model, data);
        std::vector<double> w_dist;
        std::vector<double> w_time;
        for (std::size_t i = 0; i < members.size(); ++i) {
            const auto w = kmeans::article_weight(dist[i], age_days(members[i]));
            w_dist.push_back(w.dist);
            w_time.push_back(w.time);
        }
        const auto weights = kmeans::combine_weights(w_dist, w_time);
        const ipf::Binary p = kmeans::aggregate_kmeans(model, map, weights);

        {
            CsvWriter csv(dir_ / "kmeans_clusters.csv", {"article_id", "cluster", "w_dist", "w_time", "w"});
            for (std::size_t i = 0; i < members.size(); ++i) {
                csv.row({members[i].id, std::to_string(model.assignments[i] + 1), format_number(w_dist[i]),
                         format_number(w_time[i]), format_number(weights[i])});
            }
        }
        record_output(dir_ / "kmeans_clusters.csv");
        {
            CsvWriter csv(dir_ / "kmeans_scatter.csv", {"article_id", "x", "y", "cluster", "outcome"});
            std::optional<pca::PcaModel> view;
            try {
                view = pca::fit_basis(data);
            } catch (const DataError&) {
                // all points identical: nothing to spread out
            }
            for (std::size_t i = 0; i < members.size(); ++i) {
                double x = 0.0;
                double y = 0.0;
                if (view) {
                    const Eigen::VectorXd s = pca::project(*view, rows[i]);
                    x = s.size() > 0 ? s[0] : 0.0;
                    y = s.size() > 1 ? s[1] : 0.0;
                }
                const int cluster = model.assignments[i];
                csv.row({members[i].id, format_number(x), format_number(y), std::to_string(cluster + 1),
                         cluster == map.yes_cluster ? "YES" : "NO"});
            }
        }
        record_output(dir_ / "kmeans_scatter.csv");

        ModuleStatus status;
        status.p_yes = p.yes;
        status.detail = {{"n_articles", members.size()},
                         {"n_seeds", seeds.size()},
                         {"yes_cluster", map.yes_cluster + 1},
                         {"evidence", map.evidence},
                         {"iterations", model.iterations},
                         {"converged", model.converged}};
        return status;
    });
}

ModuleStatus EventRun::sna_zeroshot(const Relevant& relevant) {
    return guarded("sna.zeroshot", [&]() -> ModuleStatus {
        manifest_.steps.push_back("sna.zeroshot");
        if (relevant.articles.empty()) {
            return abstain("no relevant articles");
        }
        std::optional<fs::path> script = flags_.zeroshot_fixture;
        if (!script) script = fixture(fs::path("zeroshot") / (event_.id + ".json"));

        std::unique_ptr<zeroshot::ChatClient> client;
        if (script) {
            record_input(*script);
            client = std::make_unique<zeroshot::FixtureChatClient>(*script);
        } else if (flags_.fixture_dir) {
            return abstain("no scripted completions in fixture directory");
        } else {
            try {
                client = std::make_unique<zeroshot::HttpChatClient>(zeroshot::chat_client_from_env());
            } catch (const ConfigError& e) {
                return abstain(e.what());
            }
        }
        zeroshot::BatchOptions options;
        options.budget = flags_.zeroshot_budget.value_or(event_.zeroshot_budget);
        const auto batch = zeroshot::classify_batch(*client, event_, relevant.articles, options);
        {
            CsvWriter csv(dir_ / "zeroshot_verdicts.csv", {"article_id", "verdict", "attempts"});
            for (const auto& v : batch.verdicts) {
                csv.row({v.article_id, zeroshot::to_string(v.value), std::to_string(v.attempts)});
            }
        }
        record_output(dir_ / "zeroshot_verdicts.csv");

        std::size_t yes = 0;
        std::size_t no = 0;
        for (const auto& v : batch.verdicts) {
            yes += v.value == zeroshot::VerdictValue::Yes;
            no += v.value == zeroshot::VerdictValue::No;
        }
        ModuleStatus status;
        status.detail = {{"n_yes", yes},
                         {"n_no", no},
                         {"n_malformed", batch.verdicts.size() - yes - no},
                         {"calls", batch.calls},
                         {"budget", options.budget},
                         {"errors", batch.errors}};
        try {
            status.p_yes = zeroshot::ratio(batch.verdicts).yes;
        } catch (const NoSignal& e) {
            status.reason = e.what();
        }
        return status;
    });
}

ModuleStatus EventRun::crowd() {
    return guarded("crowd", [&]() -> ModuleStatus {
        manifest_.steps.push_back("crowd");
        if (!event_.market && event_.proxies.empty()) {
            return abstain("no prediction market configured");
        }
        std::optional<fs::path> quotes = flags_.quotes_fixture;
        if (!quotes) quotes = fixture("quotes.json");
        std::unique_ptr<markets::QuoteSource> source;
        if (quotes) {
            record_input(*quotes);
            source = std::make_unique<markets::FixtureQuoteSource>(*quotes);
        } else if (flags_.fixture_dir) {
            return abstain("no quote fixture in fixture directory");
        } else {
            const char* url = std::getenv("MERCATOR_POLYMARKET_URL");
            source = std::make_unique<markets::PolymarketQuoteSource>(
                url && *url ? url : "https://gamma-api.polymarket.com", as_of_);
        }
        const markets::CrowdEstimate est = markets::estimate_crowd(event_.market, event_.proxies, *source, as_of_);

        std::map<std::string, double> weight_of;
        for (const auto& p : event_.proxies) weight_of[p.market_id] += p.weight;
        json quotes_json = json::array();
        {
            CsvWriter csv(dir_ / "crowd_quotes.csv", {"market_id", "p_yes", "volume", "resolution_date", "weight"});
            for (const auto& q : est.quotes) {
                const double w = event_.market ? 1.0 : weight_of[q.market_id];
                csv.row({q.market_id, format_number(q.p_yes), format_number(q.volume), format_date(q.resolution_date),
                         format_number(w)});
                quotes_json.push_back({{"market_id", q.market_id},
                                       {"p_yes", q.p_yes},
                                       {"volume", q.volume},
                                       {"resolution_date", format_date(q.resolution_date)},
                                       {"weight", w}});
            }
        }
        record_output(dir_ / "crowd_quotes.csv");

        ModuleStatus status;
        status.p_yes = est.p_final;
        status.detail = {{"mode", event_.market ? "direct" : "inferred"},
                         {"omega", est.omega},
                         {"p_inferred", est.p_inferred},
                         {"p_adjusted", est.p_adjusted},
                         {"days_to_resolution", est.days_to_resolution},
                         {"decay_factor", est.decay_factor},
                         {"p_final", est.p_final},
                         {"markets", quotes_json}};
        return status;
    });
}

ModuleStatus EventRun::calibrate() {
    return guarded("calibrate", [&]() -> ModuleStatus {
        manifest_.steps.push_back("calibrate");
        if (!event_.threshold) {
            return abstain("event has no threshold");
        }
        calibration::PointForecast forecast;
        std::string source;
        if (flags_.x_hat || event_.calibration.x_hat) {
            forecast = {flags_.x_hat ? *flags_.x_hat : *event_.calibration.x_hat, event_.calibration.scale};
            source = flags_.x_hat ? "command line" : "event config";
        } else {
            std::optional<fs::path> series_path = flags_.series;
            if (!series_path) series_path = fixture(fs::path("series") / (event_.id + ".csv"));
            if (!series_path) {
                return abstain("no point forecast or series supplied");
            }
            record_input(*series_path);
            const auto series = calibration::load_series(*series_path);
            if (series.size() < 3) {
                return abstain("series has fewer than 3 observations");
            }
            std::vector<double> values;
            for (const auto& p : series) values.push_back(p.value);
            const double span_days = (series.back().date - series.front().date).count();
            const double step_days = span_days / static_cast<double>(series.size() - 1);
            const double ahead_days = (event_.resolution_date - series.back().date).count();
            forecast = calibration::baseline_forecast(values, std::max(0.0, ahead_days / step_days));
            source = "linear trend over " + series_path->filename().string();
        }
        ModuleStatus status;
        status.p_yes = calibration::calibrate(forecast, *event_.threshold, event_.calibration.k);
        status.detail = {{"x_hat", forecast.x_hat},
                         {"scale", forecast.scale},
                         {"k", event_.calibration.k},
                         {"threshold", event_.threshold->value},
                         {"direction", calibration::to_string(event_.threshold->direction)},
                         {"source", source}};
        return status;
    });
}

EventRun::Result EventRun::forecast() {
    ModuleStatus lstm = abstain("not run");
    ModuleStatus sna = abstain("not run");
    ModuleStatus crowd_status = abstain("not run");
    json sna_detail = json::object();

    if (flags_.macro_only) {
        lstm = abstain("disabled for macro-only run");
        sna = abstain("disabled for macro-only run");
        crowd_status = abstain("disabled for macro-only run");
    } else {
        if (event_.kind == corpus::EventKind::Discrete) {
            lstm = abstain("point-forecast calibration applies to continuous events only");
            const auto articles = ingest();
            const Relevant relevant = filter(articles);
            const auto labelled = labels(articles);
            const ModuleStatus p = sna_pca(articles, relevant, labelled);
            const ModuleStatus k = sna_kmeans(articles, relevant, labelled);
            const ModuleStatus z = sna_zeroshot(relevant);
            sna_detail["relevance"] = {{"tau", event_.relevance_tau},
                                       {"n_fetched", articles.size()},
                                       {"n_kept", relevant.articles.size()},
                                       {"n_dropped", relevant.dropped}};
            sna_detail["pca"] = status_json(p);
            sna_detail["kmeans"] = status_json(k);
            sna_detail["zeroshot"] = status_json(z);
            sna_detail["weights"] = {{"alpha", event_.sna_weights.alpha},
                                     {"beta", event_.sna_weights.beta},
                                     {"gamma", event_.sna_weights.gamma}};
            try {
                const ipf::SnaResult r = ipf::combine_sna(p.p_yes, k.p_yes, z.p_yes, event_.sna_weights);
                sna.p_yes = r.p.yes;
                sna.reason.clear();
                sna_detail["effective_weights"] = {
                    {"alpha", r.effective.alpha}, {"beta", r.effective.beta}, {"gamma", r.effective.gamma}};
            } catch (const NoSignal& e) {
                sna.reason = e.what();
            }
        } else {
            sna = abstain("news analysis applies to discrete events only");
            lstm = calibrate();
        }
        crowd_status = crowd();
    }
    sna.detail = sna_detail;

    ModuleStatus macro;
    macro.p_yes = event_.macro_p_yes;
    macro.detail = {{"source", "analyst"}};

    Result result;
    const ipf::ModuleProbabilities modules{lstm.p_yes, sna.p_yes, crowd_status.p_yes, macro.p_yes};
    json record;
    try {
        result.forecast = ipf::combine_ipf(event_.id, modules, event_.ipf_weights);
        record = forecast_to_json(*result.forecast);
    } catch (const NoSignal& e) {
        record = {{"event_id", event_.id},
                  {"modules",
                   {{"lstm", optional_json(lstm.p_yes)},
                    {"sna", optional_json(sna.p_yes)},
                    {"crowd", optional_json(crowd_status.p_yes)},
                    {"macro", optional_json(macro.p_yes)}}},
                  {"weights", weights_json(event_.ipf_weights)},
                  {"p_yes", nullptr},
                  {"p_no", nullptr},
                  {"notes", json::array({e.what()})}};
    }
    // "Abstention-only": no computed module (as opposed to the analyst
    // prior) contributed with positive weight.
    const auto contributes = [](const ModuleStatus& s, double w) { return s.present() && w > 0.0; };
    result.abstention_only = !result.forecast || !(contributes(lstm, event_.ipf_weights.lstm) ||
                                                   contributes(sna, event_.ipf_weights.sna) ||
                                                   contributes(crowd_status, event_.ipf_weights.crowd));

    record["statement"] = event_.statement;
    record["kind"] = corpus::to_string(event_.kind);
    record["as_of"] = format_timestamp(as_of_);
    record["resolution_date"] = format_date(event_.resolution_date);
    record["abstention_only"] = result.abstention_only;
    record["audit"] = {{"lstm", status_json(lstm)},
                       {"sna", status_json(sna)},
                       {"crowd", status_json(crowd_status)},
                       {"macro", status_json(macro)}};
    manifest_.steps.push_back("forecast");
    for (const auto& p : emit_report(record, dir_)) {
        record_output(p);
    }
    result.record = std::move(record);
    result.manifest = finish();
    return result;
}

RunManifest EventRun::finish() {
    manifest_.generated_at =
        format_timestamp(std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now()));
    write_text(dir_ / "manifest.json", manifest_to_json(manifest_).dump(2) + "\n");
    return manifest_;
}

json manifest_to_json(const RunManifest& m) {
    json inputs = json::array();
    for (const auto& e : m.inputs) inputs.push_back({{"path", e.path}, {"sha256", e.sha256}});
    json outputs = json::array();
    for (const auto& e : m.outputs) outputs.push_back({{"path", e.path}, {"sha256", e.sha256}});
    return {{"event_id", m.event_id}, {"steps", m.steps},        {"inputs", inputs},           {"outputs", outputs},
            {"seed", m.seed},         {"as_of", m.as_of},        {"generated_at", m.generated_at}};
}

json forecast_to_json(const ipf::EventForecast& f) {
    return {{"event_id", f.event_id},
            {"modules",
             {{"lstm", optional_json(f.modules.lstm)},
              {"sna", optional_json(f.modules.sna)},
              {"crowd", optional_json(f.modules.crowd)},
              {"macro", optional_json(f.modules.macro)}}},
            {"weights", weights_json(f.weights)},
            {"effective_weights", weights_json(f.effective)},
            {"p_yes", f.p_yes},
            {"p_no", f.p_no},
            {"notes", f.notes}};
}

ipf::EventForecast forecast_from_json(const json& j) {
    try {
        ipf::EventForecast f;
        f.event_id = j.at("event_id").get<std::string>();
        const json& m = j.at("modules");
        f.modules = {optional_from(m, "lstm"), optional_from(m, "sna"), optional_from(m, "crowd"),
                     optional_from(m, "macro")};
        f.weights = weights_from(j.at("weights"));
        f.effective = weights_from(j.at("effective_weights"));
        f.p_yes = j.at("p_yes").get<double>();
        f.p_no = j.at("p_no").get<double>();
        f.notes = j.value("notes", std::vector<std::string>{});
        return f;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed forecast record: ") + e.what());
    }
}

std::vector<fs::path> emit_report(const json& record, const fs::path& dir) {
    fs::create_directories(dir);
    const fs::path forecast_path = dir / "forecast.json";
    write_text(forecast_path, record.dump(2) + "\n");

    std::ostringstream md;
    md << "# Forecast: " << record.at("event_id").get<std::string>() << "\n\n";
    md << record.value("statement", "") << "\n\n";
    md << "As of " << record.value("as_of", "") << " (" << record.value("kind", "") << " event)\n\n";
    md << "| Module | Status | P(YES) | Weight | Effective weight |\n";
    md << "|---|---|---|---|---|\n";
    const json& weights = record.at("weights");
    const json effective = record.value("effective_weights", json::object());
    for (const char* module : {"lstm", "sna", "crowd", "macro"}) {
        const json& m = record.at("modules").at(module);
        const json audit = record.contains("audit") ? record.at("audit").at(module) : json::object();
        const std::string status = m.is_null() ? "abstained" : "ok";
        md << "| " << module << " | " << status;
        if (m.is_null() && audit.contains("reason")) {
            md << " (" << audit.at("reason").get<std::string>() << ")";
        }
        md << " | " << (m.is_null() ? "-" : format_number(m.get<double>())) << " | "
           << format_number(weights.at(module).get<double>()) << " | "
           << (effective.contains(module) ? format_number(effective.at(module).get<double>()) : "-") << " |\n";
    }
    md << "\n";
    if (record.at("p_yes").is_null()) {
        md << "**No module produced a signal.**\n";
    } else {
        md << "**P(YES) = " << format_number(record.at("p_yes").get<double>())
           << ", P(NO) = " << format_number(record.at("p_no").get<double>()) << "**\n";
    }
    const fs::path summary_path = dir / "summary.md";
    write_text(summary_path, md.str());
    return {forecast_path, summary_path};
}

std::vector<ReportRow> run_report(const std::vector<corpus::EventSpec>& events, const Flags& flags,
                                  const std::optional<fs::path>& config_path) {
    std::vector<ReportRow> rows;
    for (const auto& e : events) {
        EventRun run(e, flags, config_path);
        const auto result = run.forecast();
        std::string modules;
        for (const char* m : {"lstm", "sna", "crowd", "macro"}) {
            if (!result.record.at("modules").at(m).is_null()) {
                modules += (modules.empty() ? "" : "+") + std::string(m);
            }
        }
        rows.push_back({e.id, corpus::to_string(e.kind),
                        result.forecast ? std::optional<double>(result.forecast->p_yes) : std::nullopt, modules});
    }

    std::ostringstream md;
    md << "# Forecast summary\n\n| Event | Kind | P(YES) | P(NO) | Modules |\n|---|---|---|---|---|\n";
    std::ostringstream csv;
    csv << "event_id,kind,p_yes,p_no,modules\n";
    for (const auto& r : rows) {
        const std::string yes = r.p_yes ? format_number(*r.p_yes) : "";
        const std::string no = r.p_yes ? format_number(1.0 - *r.p_yes) : "";
        md << "| " << r.event_id << " | " << r.kind << " | " << (yes.empty() ? "-" : yes) << " | "
           << (no.empty() ? "-" : no) << " | " << r.modules << " |\n";
        csv << r.event_id << "," << r.kind << "," << yes << "," << no << "," << r.modules << "\n";
    }
    fs::create_directories(flags.out_dir);
    write_text(flags.out_dir / "summary.md", md.str());
    write_text(flags.out_dir / "summary.csv", csv.str());
    return rows;
}

}  // namespace mercator::pipeline
