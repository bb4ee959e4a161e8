#include "figforge/agents/backend.hpp"

#include <algorithm>
#include <fstream>

#include "figforge/error.hpp"
#include "figforge/util/http.hpp"
#include "figforge/util/text.hpp"

namespace figforge::agents {

using nlohmann::json;

namespace {

std::string task_of(const ChatRequest& request) {
  try {
    json user = json::parse(request.user_content);
    if (user.is_object() && user.contains("task") && user.at("task").is_string()) {
      return user.at("task").get<std::string>();
    }
  } catch (const json::exception&) {
  }
  return "";
}

}  // namespace

std::string request_key(const ChatRequest& request) {
  json keys = json::array();
  for (const auto& a : request.attachments) keys.push_back(a.key);
  json canonical = {{"attachments", keys},
                    {"role", request.role},
                    {"system", request.system_prompt},
                    {"user", request.user_content}};
  return util::sha256_hex(canonical.dump(-1, ' ', false, json::error_handler_t::replace));
}

RemoteBackend::RemoteBackend(std::string endpoint, std::string model, std::string api_key,
                             std::chrono::seconds timeout)
    : endpoint_(std::move(endpoint)),
      model_(std::move(model)),
      api_key_(std::move(api_key)),
      timeout_(timeout) {}

std::string RemoteBackend::complete(const ChatRequest& request) {
  json parts = json::array();
  parts.push_back({{"type", "text"}, {"text", request.user_content}});
  for (const auto& a : request.attachments) {
    parts.push_back({{"type", "text"}, {"text", "Current canvas as DrawIO XML:\n" + a.xml}});
    parts.push_back({{"type", "text"}, {"text", "Current canvas rendered as SVG:\n" + a.svg}});
  }
  json body = {{"model", model_},
               {"temperature", 0},
               {"response_format", {{"type", "json_object"}}},
               {"messages",
                {{{"role", "system"}, {"content", request.system_prompt}},
                 {{"role", "user"}, {"content", parts}}}}};
  json response = util::post_json(endpoint_, "/chat/completions", api_key_, body, timeout_);
  try {
    return response.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kBackendFailure,
                std::string("chat response lacks choices[0].message.content: ") + e.what());
  }
}

json to_json(const TranscriptRecord& record) {
  json j = {{"key", record.key}, {"role", record.role}, {"task", record.task}};
  if (record.error) {
    j["error"] = *record.error;
  } else {
    j["response"] = record.response.value_or("");
  }
  return j;
}

TranscriptRecord transcript_record_from_json(const json& j) {
  TranscriptRecord r;
  r.key = j.at("key").get<std::string>();
  r.role = j.value("role", "");
  r.task = j.value("task", "");
  if (j.contains("error")) r.error = j.at("error").get<std::string>();
  if (j.contains("response")) r.response = j.at("response").get<std::string>();
  if (r.error.has_value() == r.response.has_value()) {
    throw Error(ErrorKind::kCorruptFile,
                "transcript record " + r.key + " needs exactly one of response/error");
  }
  return r;
}

ScriptedBackend::ScriptedBackend(const std::vector<std::filesystem::path>& directories) {
  for (const auto& dir : directories) {
    if (!std::filesystem::is_directory(dir)) {
      throw Error(ErrorKind::kIo, "fixture directory " + dir.string() + " does not exist");
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      std::ifstream in(file);
      std::string line;
      std::size_t line_no = 0;
      while (std::getline(in, line)) {
        ++line_no;
        if (util::trim(line).empty()) continue;
        try {
          TranscriptRecord r = transcript_record_from_json(json::parse(line));
          records_[r.key] = std::move(r);
        } catch (const json::exception& e) {
          throw Error(ErrorKind::kCorruptFile, file.string() + ":" + std::to_string(line_no) +
                                                   ": " + e.what());
        }
      }
    }
  }
}

std::string ScriptedBackend::complete(const ChatRequest& request) {
  const std::string key = request_key(request);
  auto it = records_.find(key);
  if (it == records_.end()) {
    throw Error(ErrorKind::kFixtureMissing, "no recorded response for " + request.role + "/" +
                                                task_of(request) + " request " + key);
  }
  if (it->second.error) {
    throw Error(ErrorKind::kBackendFailure, "injected failure: " + *it->second.error);
  }
  return *it->second.response;
}

RecordingBackend::RecordingBackend(ChatBackend& inner, std::filesystem::path transcript)
    : inner_(inner), transcript_(std::move(transcript)) {
  if (transcript_.has_parent_path()) std::filesystem::create_directories(transcript_.parent_path());
}

std::string RecordingBackend::complete(const ChatRequest& request) {
  const std::string key = request_key(request);
  TranscriptRecord r{key, request.role, task_of(request), std::nullopt, std::nullopt};
  std::optional<Error> failure;
  try {
    r.response = inner_.complete(request);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kBackendFailure) throw;
    r.error = e.what();
    failure = e;
  }
  {
    std::lock_guard lock(mutex_);
    if (seen_.emplace(key, true).second) {
      std::ofstream out(transcript_, std::ios::app);
      out << to_json(r).dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
      if (!out) throw Error(ErrorKind::kIo, "cannot append to " + transcript_.string());
    }
  }
  if (failure) throw *failure;
  return *r.response;
}

std::size_t RecordingBackend::recorded() const {
  std::lock_guard lock(mutex_);
  return seen_.size();
}

}  // namespace figforge::agents
