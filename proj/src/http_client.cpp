#include "http_client.hpp"

#include <httplib.h>

#include "careermatch/error.hpp"

namespace careermatch::detail {

std::string post_json(const std::string& endpoint, const std::string& path, const std::string& body,
                      double timeout_seconds) {
  std::string origin = endpoint;
  std::string base;
  auto scheme = endpoint.find("://");
  if (scheme == std::string::npos || endpoint.compare(0, scheme, "http") != 0) {
    throw ProtocolError("unsupported endpoint '" + endpoint + "' (expected http://host:port)");
  }
  auto slash = endpoint.find('/', scheme + 3);
  if (slash != std::string::npos) {
    origin = endpoint.substr(0, slash);
    base = endpoint.substr(slash);
    while (!base.empty() && base.back() == '/') base.pop_back();
  }
  const std::string url = origin + base + path;

  httplib::Client client(origin);
  auto secs = static_cast<time_t>(timeout_seconds);
  auto usecs = static_cast<time_t>((timeout_seconds - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  auto res = client.Post(base + path, body, "application/json");
  if (!res) {
    throw ProtocolError("POST " + url + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw ProtocolError("POST " + url + " returned HTTP " + std::to_string(res->status));
  }
  return res->body;
}

}  // namespace careermatch::detail
