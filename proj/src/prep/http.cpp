#include "sc2tools/http.hpp"

#include <httplib.h>

#include <fstream>

#include "sc2tools/error.hpp"

namespace sc2tools::http {

Url split_url(std::string_view url) {
  const auto scheme = url.find("://");
  if (scheme == std::string_view::npos || scheme == 0) throw Error(Errc::InvalidValue, std::string(url), "no scheme");
  const auto slash = url.find('/', scheme + 3);
  Url out;
  out.origin = std::string(url.substr(0, slash));
  out.path = slash == std::string_view::npos ? "/" : std::string(url.substr(slash));
  if (out.origin.size() == scheme + 3) throw Error(Errc::InvalidValue, std::string(url), "no host");
  return out;
}

void download(const std::string& url, const std::filesystem::path& dest) {
  const Url parts = split_url(url);
  httplib::Client client(parts.origin);
  if (!client.is_valid()) throw Error(Errc::FetchFailed, url, "unsupported URL scheme");
  client.set_follow_location(true);
  client.set_connection_timeout(10);
  client.set_read_timeout(60);

  std::ofstream out(dest, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::OutputNotWritable, dest.string());
  int status = 0;
  const auto res = client.Get(
      parts.path,
      [&](const httplib::Response& r) {
        status = r.status;
        return r.status >= 200 && r.status < 300;
      },
      [&](const char* data, std::size_t n) {
        out.write(data, static_cast<std::streamsize>(n));
        return static_cast<bool>(out);
      });
  out.close();
  if (status != 0 && (status < 200 || status >= 300)) {
    throw Error(Errc::FetchFailed, url, "HTTP " + std::to_string(status));
  }
  if (!res) throw Error(Errc::FetchFailed, url, httplib::to_string(res.error()));
  if (!out) throw Error(Errc::OutputNotWritable, dest.string());
}

}  // namespace sc2tools::http
