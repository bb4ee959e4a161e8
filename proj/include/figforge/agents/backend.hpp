#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace figforge::agents {

/// A rendering of a canvas handed to vision-capable backends. The key is
/// the SHA-256 of the canonical DrawIO XML; replay backends match on it
/// instead of on the rendering bytes.
struct Attachment {
  std::string key;
  std::string xml;
  std::string svg;
};

struct ChatRequest {
  std::string role;           // agent role, e.g. "parser"
  std::string system_prompt;
  std::string user_content;   // JSON document with a "task" member
  std::vector<Attachment> attachments;
};

/// Stable request identity: SHA-256 (hex) of the compact JSON
/// {"attachments":[keys...],"role":...,"system":...,"user":...}.
std::string request_key(const ChatRequest& request);

/// Chat-completion contract shared by all agent roles. Implementations must
/// accept concurrent complete() calls. Failures surface as kBackendFailure
/// (or kFixtureMissing for replay backends).
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
  virtual std::string model() const = 0;
  virtual std::chrono::seconds timeout() const { return std::chrono::seconds(60); }
};

/// OpenAI-compatible chat completions endpoint.
class RemoteBackend final : public ChatBackend {
 public:
  RemoteBackend(std::string endpoint, std::string model, std::string api_key,
                std::chrono::seconds timeout);
  std::string complete(const ChatRequest& request) override;
  std::string model() const override { return model_; }
  std::chrono::seconds timeout() const override { return timeout_; }

 private:
  std::string endpoint_;
  std::string model_;
  std::string api_key_;
  std::chrono::seconds timeout_;
};

/// One line of a transcript file (JSON Lines, "*.jsonl"):
///   {"key": <request_key>, "role": ..., "task": ..., "response": <text>}
/// or, to inject a failure for that request,
///   {"key": ..., "role": ..., "task": ..., "error": <message>}
struct TranscriptRecord {
  std::string key;
  std::string role;
  std::string task;
  std::optional<std::string> response;
  std::optional<std::string> error;
};

nlohmann::json to_json(const TranscriptRecord& record);
TranscriptRecord transcript_record_from_json(const nlohmann::json& json);

/// Replays transcripts. Every "*.jsonl" file of each directory is loaded in
/// name order; later directories override earlier ones key by key, which is
/// how fault-injection overlays work. Unknown requests raise kFixtureMissing
/// naming the key; "error" records raise kBackendFailure.
class ScriptedBackend final : public ChatBackend {
 public:
  explicit ScriptedBackend(const std::vector<std::filesystem::path>& directories);
  std::string complete(const ChatRequest& request) override;
  std::string model() const override { return "scripted"; }
  std::size_t size() const { return records_.size(); }

 private:
  std::map<std::string, TranscriptRecord> records_;
};

/// Forwards to another backend and appends every exchange to a transcript
/// file, once per distinct key. Backend failures are recorded as "error"
/// records and rethrown.
class RecordingBackend final : public ChatBackend {
 public:
  RecordingBackend(ChatBackend& inner, std::filesystem::path transcript);
  std::string complete(const ChatRequest& request) override;
  std::string model() const override { return inner_.model(); }
  std::size_t recorded() const;

 private:
  ChatBackend& inner_;
  std::filesystem::path transcript_;
  mutable std::mutex mutex_;
  std::map<std::string, bool> seen_;
};

}  // namespace figforge::agents
