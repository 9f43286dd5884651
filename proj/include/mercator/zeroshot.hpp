#pragma once

#include "mercator/corpus.hpp"
#include "mercator/http.hpp"
#include "mercator/ipf.hpp"

#include <atomic>
#include <filesystem>
#include <map>
#include <optional>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mercator::zeroshot {

// clang-format off
inline constexpr std::string_view kPromptTemplate = R"PROMPT(You are a specialized classification agent.

Your task is to analyze news articles and determine whether each one indicates a "YES" or "NO" outcome for a specific binary event.

Objective: Semantically analyze the news article using your full understanding of language and context. Determine which outcome cluster the article aligns with: YES or NO. Base your decision solely on the article content and its relevance to the event.

Output Format (Strict): Respond with only one of the following, using ALL CAPS with double curly braces: {{YES}} {{NO}}

You must not provide any explanation, commentary, or additional text. Event Context: The binary event is: {{binary_event}}

Classify the Following News Article: {{news_article}}

Enforcement Reminder: Do not explain your choice. Do not output anything except {{YES}} or {{NO}}.)PROMPT";
// clang-format on

inline constexpr std::string_view kEventPlaceholder = "{{binary_event}}";
inline constexpr std::string_view kArticlePlaceholder = "{{news_article}}";

enum class VerdictValue { Yes, No, Malformed };

struct Verdict {
    std::string article_id;
    VerdictValue value = VerdictValue::Malformed;
    int attempts = 0;
};

/// The classification prompt with the event statement and the article
/// (title, blank line, body) substituted. Nothing else is touched, so
/// placeholder-like text inside the article is left alone.
std::string build_prompt(const corpus::EventSpec& event, const corpus::Article& article);

/// "{{YES}}" / "{{NO}}" after trimming surrounding whitespace; anything
/// else is Malformed.
VerdictValue parse_verdict(std::string_view completion);

/// Canonical completion text for Yes and No; empty for Malformed.
std::string render(VerdictValue v);

struct ChatCall {
    std::string article_id;
    std::string prompt;
};

class ChatClient {
public:
    virtual ~ChatClient() = default;
    /// Returns the completion text. Throws UpstreamError when the endpoint
    /// cannot be reached.
    virtual std::string complete(const ChatCall& call) = 0;
};

/// OpenAI-style chat completion: POST {base}/chat/completions with
/// {model, messages: [{role, content}], temperature: 0}.
class HttpChatClient final : public ChatClient {
public:
    HttpChatClient(std::string base_url, std::string api_key, std::string model, http::RetryPolicy retry = {});
    std::string complete(const ChatCall& call) override;

private:
    http::Client client_;
    std::string api_key_;
    std::string model_;
};

/// Reads MERCATOR_LLM_URL (default https://api.openai.com/v1),
/// MERCATOR_LLM_KEY (required) and MERCATOR_LLM_MODEL (default gpt-4o).
HttpChatClient chat_client_from_env();

/// Scripted completions from a JSON file:
///   {"default": "{{NO}}", "responses": {"<article_id>": ["first", "second"]}}
/// A string in place of the list is used for every attempt. Successive
/// calls for one article walk the list and then repeat its last entry.
/// An article with no script and no default fails like an unreachable
/// endpoint.
class FixtureChatClient final : public ChatClient {
public:
    explicit FixtureChatClient(const std::filesystem::path& path);
    FixtureChatClient(std::map<std::string, std::vector<std::string>> responses, std::optional<std::string> fallback);

    std::string complete(const ChatCall& call) override;
    std::size_t calls() const { return calls_.load(); }

private:
    std::map<std::string, std::vector<std::string>> responses_;
    std::optional<std::string> fallback_;
    std::map<std::string, std::size_t> cursor_;
    std::mutex mutex_;
    std::atomic<std::size_t> calls_{0};
};

struct BatchOptions {
    std::size_t budget = corpus::kDefaultZeroShotBudget;
    int max_attempts = 2;  // a Malformed verdict is retried once
    std::size_t parallelism = 4;
};

struct BatchResult {
    std::vector<Verdict> verdicts;  // sorted by article_id
    std::size_t calls = 0;
    std::vector<std::string> errors;
};

/// Classifies at most `budget` articles, most recent first (ties by id).
/// Endpoint failures are collected into `errors`; the affected articles get
/// no verdict.
BatchResult classify_batch(ChatClient& client, const corpus::EventSpec& event,
                           const std::vector<corpus::Article>& articles, const BatchOptions& options = {});

/// Yes / (Yes + No), Malformed excluded from both. Throws NoSignal when no
/// valid verdict exists.
ipf::Binary ratio(std::span<const Verdict> verdicts);

const char* to_string(VerdictValue v);

}  // namespace mercator::zeroshot
