#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "figforge/util/http.hpp"

#include <httplib.h>

#include "figforge/error.hpp"

namespace figforge::util {

nlohmann::json post_json(const std::string& base_url, const std::string& path,
                         const std::string& api_key, const nlohmann::json& body,
                         std::chrono::seconds timeout) {
  auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorKind::kBackendFailure, "endpoint '" + base_url + "' has no scheme");
  }
  auto path_start = base_url.find('/', scheme_end + 3);
  std::string origin = base_url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

  httplib::Client client(origin);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers headers;
  if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
  auto res = client.Post(prefix + path, headers, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorKind::kBackendFailure,
                "request to " + origin + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorKind::kBackendFailure, "endpoint answered HTTP " +
                                                std::to_string(res->status) + ": " +
                                                res->body.substr(0, 200));
  }
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kBackendFailure, std::string("response is not JSON: ") + e.what());
  }
}

}  // namespace figforge::util
