#include "mercator/zeroshot.hpp"

#include "mercator/error.hpp"
#include "mercator/text.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <future>

namespace mercator::zeroshot {

using json = nlohmann::json;

std::string build_prompt(const corpus::EventSpec& event, const corpus::Article& article) {
    const std::string article_text = article.body.empty() ? article.title : article.title + "\n\n" + article.body;
    const auto event_at = kPromptTemplate.find(kEventPlaceholder);
    const auto article_at = kPromptTemplate.find(kArticlePlaceholder);
    std::string out;
    out.reserve(kPromptTemplate.size() + event.statement.size() + article_text.size());
    out.append(kPromptTemplate.substr(0, event_at));
    out.append(event.statement);
    out.append(kPromptTemplate.substr(event_at + kEventPlaceholder.size(),
                                      article_at - event_at - kEventPlaceholder.size()));
    out.append(article_text);
    out.append(kPromptTemplate.substr(article_at + kArticlePlaceholder.size()));
    return out;
}

VerdictValue parse_verdict(std::string_view completion) {
    const std::string t = text::trim(completion);
    if (t == "{{YES}}") return VerdictValue::Yes;
    if (t == "{{NO}}") return VerdictValue::No;
    return VerdictValue::Malformed;
}

std::string render(VerdictValue v) {
    switch (v) {
        case VerdictValue::Yes: return "{{YES}}";
        case VerdictValue::No: return "{{NO}}";
        case VerdictValue::Malformed: break;
    }
    return {};
}

const char* to_string(VerdictValue v) {
    switch (v) {
        case VerdictValue::Yes: return "YES";
        case VerdictValue::No: return "NO";
        case VerdictValue::Malformed: break;
    }
    return "MALFORMED";
}

HttpChatClient::HttpChatClient(std::string base_url, std::string api_key, std::string model, http::RetryPolicy retry)
    : client_(std::move(base_url), retry), api_key_(std::move(api_key)), model_(std::move(model)) {}

std::string HttpChatClient::complete(const ChatCall& call) {
    const json request{{"model", model_},
                       {"messages", json::array({json{{"role", "user"}, {"content", call.prompt}}})},
                       {"temperature", 0}};
    http::Headers headers;
    if (!api_key_.empty()) {
        headers.emplace("Authorization", "Bearer " + api_key_);
    }
    const auto res = client_.post_json("/chat/completions", request.dump(), headers);
    if (res.status == 401 || res.status == 403) {
        throw CredentialError("chat completion endpoint rejected credentials (HTTP " + std::to_string(res.status) + ")");
    }
    if (res.status != 200) {
        throw UpstreamError("chat completion endpoint: HTTP " + std::to_string(res.status));
    }
    try {
        const json doc = json::parse(res.body);
        return doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
        // An unparseable envelope is treated as a malformed completion.
        return {};
    }
}

HttpChatClient chat_client_from_env() {
    const char* url = std::getenv("MERCATOR_LLM_URL");
    const char* key = std::getenv("MERCATOR_LLM_KEY");
    const char* model = std::getenv("MERCATOR_LLM_MODEL");
    if (!key || !*key) {
        throw ConfigError("zero-shot: credential missing, set MERCATOR_LLM_KEY");
    }
    return HttpChatClient(url && *url ? url : "https://api.openai.com/v1", key, model && *model ? model : "gpt-4o");
}

FixtureChatClient::FixtureChatClient(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open zero-shot fixture " + path.string());
    }
    try {
        const json doc = json::parse(in);
        if (doc.contains("default") && !doc.at("default").is_null()) {
            fallback_ = doc.at("default").get<std::string>();
        }
        const json responses = doc.value("responses", json::object());
        for (const auto& [id, value] : responses.items()) {
            responses_[id] = value.is_string() ? std::vector<std::string>{value.get<std::string>()}
                                               : value.get<std::vector<std::string>>();
        }
    } catch (const json::exception& e) {
        throw DataError("malformed zero-shot fixture " + path.string() + ": " + e.what());
    }
}

FixtureChatClient::FixtureChatClient(std::map<std::string, std::vector<std::string>> responses,
                                     std::optional<std::string> fallback)
    : responses_(std::move(responses)), fallback_(std::move(fallback)) {}

std::string FixtureChatClient::complete(const ChatCall& call) {
    ++calls_;
    std::lock_guard lock(mutex_);
    const auto it = responses_.find(call.article_id);
    if (it == responses_.end() || it->second.empty()) {
        if (fallback_) {
            return *fallback_;
        }
        throw UpstreamError("no scripted completion for article " + call.article_id);
    }
    std::size_t& pos = cursor_[call.article_id];
    const std::string& out = it->second[std::min(pos, it->second.size() - 1)];
    ++pos;
    return out;
}

namespace {

struct Outcome {
    std::optional<Verdict> verdict;
    std::string error;
    std::size_t calls = 0;
};

Outcome classify_one(ChatClient& client, const corpus::EventSpec& event, const corpus::Article& article,
                     int max_attempts) {
    Outcome out;
    const ChatCall call{article.id, build_prompt(event, article)};
    Verdict v{article.id, VerdictValue::Malformed, 0};
    try {
        while (v.attempts < max_attempts) {
            ++v.attempts;
            ++out.calls;
            v.value = parse_verdict(client.complete(call));
            if (v.value != VerdictValue::Malformed) {
                break;
            }
        }
        out.verdict = v;
    } catch (const CredentialError&) {
        throw;
    } catch (const UpstreamError& e) {
        out.error = article.id + ": " + e.what();
    }
    return out;
}

}  // namespace

BatchResult classify_batch(ChatClient& client, const corpus::EventSpec& event,
                           const std::vector<corpus::Article>& articles, const BatchOptions& options) {
    if (options.budget < 1) {
        throw ConfigError("zero-shot budget must be at least 1");
    }
    std::vector<const corpus::Article*> order;
    order.reserve(articles.size());
    for (const auto& a : articles) {
        order.push_back(&a);
    }
    std::sort(order.begin(), order.end(), [](const corpus::Article* a, const corpus::Article* b) {
        if (a->published_at != b->published_at) return a->published_at > b->published_at;
        return a->id < b->id;
    });
    if (order.size() > options.budget) {
        order.resize(options.budget);
    }

    const int attempts = std::max(1, options.max_attempts);
    std::vector<Outcome> outcomes(order.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next++; i < order.size(); i = next++) {
            outcomes[i] = classify_one(client, event, *order[i], attempts);
        }
    };
    std::vector<std::future<void>> workers;
    const std::size_t n_workers = std::min(std::max<std::size_t>(options.parallelism, 1), order.size());
    for (std::size_t w = 0; w < n_workers; ++w) {
        workers.push_back(std::async(std::launch::async, worker));
    }
    for (auto& w : workers) {
        w.get();
    }

    BatchResult result;
    for (auto& o : outcomes) {
        result.calls += o.calls;
        if (o.verdict) {
            result.verdicts.push_back(std::move(*o.verdict));
        } else {
            result.errors.push_back(std::move(o.error));
        }
    }
    std::sort(result.verdicts.begin(), result.verdicts.end(),
              [](const Verdict& a, const Verdict& b) { return a.article_id < b.article_id; });
    std::sort(result.errors.begin(), result.errors.end());
    return result;
}

ipf::Binary ratio(std::span<const Verdict> verdicts) {
    std::size_t yes = 0;
    std::size_t valid = 0;
    for (const auto& v : verdicts) {
        if (v.value == VerdictValue::Malformed) continue;
        ++valid;
        if (v.value == VerdictValue::Yes) ++yes;
    }
    if (valid == 0) {
        throw NoSignal("zero-shot produced no valid verdicts");
    }
    return ipf::make_binary(static_cast<double>(yes) / static_cast<double>(valid));
}

}  // namespace mercator::zeroshot
