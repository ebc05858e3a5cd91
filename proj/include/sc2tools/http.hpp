#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace sc2tools::http {

struct Url {
  std::string origin;  ///< "http://host:port"
  std::string path;    ///< "/..." including any query
};

/// Errors: InvalidValue.
Url split_url(std::string_view url);

/// GETs `url` and streams the body into `dest` (truncated first). Redirects
/// are followed. Errors: FetchFailed(url) on transport errors or non-2xx.
void download(const std::string& url, const std::filesystem::path& dest);

}  // namespace sc2tools::http
