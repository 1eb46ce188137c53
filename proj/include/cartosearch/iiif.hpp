#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace cartosearch {

struct Url {
  std::string scheme;  // "http" | "https"
  std::string host;
  int port = 0;
  std::string path_and_query;  // always starts with '/'

  /// "scheme://host:port", suitable for an HTTP client base.
  std::string origin() const;
  std::string to_string() const;
};

/// Parses absolute http(s) URLs. nullopt for anything else.
std::optional<Url> parse_url(std::string_view text);

/// The identifier component of an IIIF Image API URL: the path segment that
/// precedes {region}/{size}/{rotation}/{quality}.{format} when those are
/// present, otherwise the last path segment. Percent-escapes are decoded.
std::string iiif_id_from_url(std::string_view iiif_url);

/// Width-constrained IIIF request: {base}/{identifier}/full/{width},/0/default.jpg.
/// An existing image-request suffix on iiif_url is replaced.
std::string iiif_request_url(std::string_view iiif_url, int width_px);

/// Drops trailing segment suffixes (letters followed by digits, e.g.
/// "cs000150") from a dot-separated ID while more than two components remain.
/// Idempotent; IDs with no such suffix come back unchanged.
std::string derive_resource_id(std::string_view iiif_id);

/// Replaces every character outside [A-Za-z0-9._-] with '_'.
std::string sanitize_filename(std::string_view id);

inline constexpr std::string_view kDefaultResourceBase = "https://www.loc.gov/resource/";

/// resource_base + derive_resource_id(iiif_id_from_url(iiif_url)) + "/".
std::string resource_url_for(std::string_view iiif_url,
                             std::string_view resource_base = kDefaultResourceBase);

}  // namespace cartosearch
