#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "rhocal/app/fetch.hpp"

#include "rhocal/core.hpp"

#include <httplib.h>

namespace rhocal::app {

std::string expand_url(const std::string& url_template, const std::string& asset) {
  std::string out = url_template;
  for (const std::string token : {"{symbol}", "{asset}"}) {
    for (auto pos = out.find(token); pos != std::string::npos; pos = out.find(token, pos + asset.size())) {
      out.replace(pos, token.size(), asset);
    }
  }
  return out;
}

std::string http_get(const std::string& url, int timeout_seconds) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorKind::BadConfig, "URL without scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  const std::string origin = url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

  httplib::Client client(origin);
  client.set_connection_timeout(timeout_seconds, 0);
  client.set_read_timeout(timeout_seconds, 0);
  client.set_follow_location(true);
  const auto res = client.Get(path);
  if (!res) {
    throw Error(ErrorKind::IngestError, "fetch failed for " + url + ": " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorKind::IngestError, "fetch of " + url + " returned HTTP " + std::to_string(res->status));
  }
  return res->body;
}

}  // namespace rhocal::app
