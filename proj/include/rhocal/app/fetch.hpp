#pragma once

#include <string>

namespace rhocal::app {

/// GET `url` (http or https). Throws IngestError on transport failure or a
/// non-200 status, naming the URL.
std::string http_get(const std::string& url, int timeout_seconds = 30);

/// Replaces every "{symbol}" (or "{asset}") in `url_template`.
std::string expand_url(const std::string& url_template, const std::string& asset);

}  // namespace rhocal::app
