#include "mercator/corpus.hpp"

#include "mercator/error.hpp"
#include "mercator/hash.hpp"
#include "mercator/text.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <map>
#include <unordered_set>

namespace mercator::corpus {

using json = nlohmann::json;

namespace {

json to_json(const Article& a) {
    return json{{"id", a.id},       {"source", a.source},
                {"title", a.title}, {"body", a.body},
                {"published_at", format_timestamp(a.published_at)},
                {"url", a.url},     {"event_id", a.event_id}};
}

Article from_json(const json& j) {
    Article a;
    a.id = j.at("id").get<std::string>();
    a.source = j.at("source").get<std::string>();
    a.title = j.at("title").get<std::string>();
    a.body = j.at("body").get<std::string>();
    a.published_at = parse_timestamp(j.at("published_at").get<std::string>());
    a.url = j.at("url").get<std::string>();
    a.event_id = j.at("event_id").get<std::string>();
    return a;
}

void write_atomically(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw DataError("cannot write " + tmp.string());
        }
        out << content;
        if (!out) {
            throw DataError("write failed for " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace

std::string article_id(const std::string& url, const std::string& title) {
    return sha256_hex(url + '\x1f' + title);
}

Article make_article(std::string source, std::string title, std::string body, Timestamp published_at,
                     std::string url, std::string event_id) {
    Article a;
    a.id = article_id(url, title);
    a.source = std::move(source);
    a.title = std::move(title);
    a.body = std::move(body);
    a.published_at = published_at;
    a.url = std::move(url);
    a.event_id = std::move(event_id);
    return a;
}

std::vector<Article> dedupe(const std::vector<Article>& articles) {
    std::unordered_set<std::string> seen;
    std::vector<Article> out;
    for (const auto& a : articles) {
        if (seen.insert(a.id).second) {
            out.push_back(a);
        }
    }
    return out;
}

bool admissible(const EventSpec& event, const Article& article) {
    using namespace std::chrono;
    const Timestamp lo = start_of(event.window.start) - days{1};
    const Timestamp hi = start_of(event.window.end + days{1}) + days{1};
    if (article.published_at < lo || article.published_at >= hi) {
        return false;
    }
    const auto tokens = text::tokenize(article.title + "\n" + article.body);
    return std::any_of(event.keywords.begin(), event.keywords.end(),
                       [&](const std::string& k) { return text::contains_keyword(tokens, k); });
}

std::vector<Article> fetch_articles(const EventSpec& event, NewsProvider& provider) {
    std::vector<Article> out;
    for (auto& a : provider.query(event, event.article_cap)) {
        if (out.size() >= event.article_cap) {
            break;
        }
        a.event_id = event.id;
        if (a.id.empty()) {
            a.id = article_id(a.url, a.title);
        }
        if (admissible(event, a)) {
            out.push_back(std::move(a));
        }
    }
    return out;
}

std::vector<Article> fetch_all(const EventSpec& event, const std::vector<NewsProvider*>& providers) {
    std::vector<std::future<std::vector<Article>>> pending;
    for (NewsProvider* p : providers) {
        pending.push_back(std::async(std::launch::async, [&event, p] { return fetch_articles(event, *p); }));
    }
    std::vector<Article> all;
    for (auto& f : pending) {
        auto batch = f.get();
        all.insert(all.end(), std::make_move_iterator(batch.begin()), std::make_move_iterator(batch.end()));
    }
    return dedupe(all);
}

void store_corpus(const std::vector<Article>& articles, const std::filesystem::path& path) {
    std::string content;
    for (const auto& a : articles) {
        content += to_json(a).dump();
        content += '\n';
    }
    write_atomically(path, content);
}

std::vector<Article> load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open corpus " + path.string());
    }
    std::vector<Article> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        try {
            out.push_back(from_json(json::parse(line)));
        } catch (const std::exception& e) {
            throw DataError(path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

void CorpusStore::write(const std::vector<Article>& articles) {
    std::lock_guard lock(write_mutex_);
    store_corpus(articles, path_);
}

std::vector<Article> CorpusStore::read() const { return load_corpus(path_); }

std::vector<Label> load_labels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open labels file " + path.string());
    }
    std::vector<Label> out;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string row = text::trim(line);
        if (row.empty() || (line_no == 1 && row.rfind("article_id", 0) == 0)) {
            continue;
        }
        const auto comma = row.find(',');
        if (comma == std::string::npos) {
            throw DataError(path.string() + ": line " + std::to_string(line_no) + ": expected article_id,outcome");
        }
        Label l;
        l.article_id = text::trim(row.substr(0, comma));
        std::string outcome = text::trim(row.substr(comma + 1));
        std::transform(outcome.begin(), outcome.end(), outcome.begin(),
                       [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
        if (outcome == "YES") {
            l.outcome = Outcome::Yes;
        } else if (outcome == "NO") {
            l.outcome = Outcome::No;
        } else {
            throw DataError(path.string() + ": line " + std::to_string(line_no) + ": outcome must be YES or NO");
        }
        if (!seen.insert(l.article_id).second) {
            throw DataError(path.string() + ": line " + std::to_string(line_no) + ": duplicate label for " +
                            l.article_id);
        }
        out.push_back(std::move(l));
    }
    return out;
}

void store_labels(const std::vector<Label>& labels, const std::filesystem::path& path) {
    std::string content = "article_id,outcome\n";
    for (const auto& l : labels) {
        content += l.article_id + "," + to_string(l.outcome) + "\n";
    }
    write_atomically(path, content);
}

void check_labels(const std::vector<Label>& labels, const std::vector<Article>& articles) {
    std::unordered_set<std::string> ids;
    for (const auto& a : articles) {
        ids.insert(a.id);
    }
    std::unordered_set<std::string> seen;
    for (const auto& l : labels) {
        if (!ids.count(l.article_id)) {
            throw DataError("label references unknown article " + l.article_id);
        }
        if (!seen.insert(l.article_id).second) {
            throw DataError("more than one label for article " + l.article_id);
        }
    }
}

}  // namespace mercator::corpus
