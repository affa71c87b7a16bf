#pragma once

#include <string>

namespace careermatch::detail {

/// POSTs a JSON body to `endpoint` + `path` and returns the response body.
/// `endpoint` is "http://host[:port][/base]". Transport failures and non-2xx
/// statuses raise ProtocolError naming the URL.
std::string post_json(const std::string& endpoint, const std::string& path, const std::string& body,
                      double timeout_seconds);

}  // namespace careermatch::detail
