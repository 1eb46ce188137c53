#include "cartosearch/iiif.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <vector>

namespace cartosearch {

std::string Url::origin() const {
  return scheme + "://" + host + ":" + std::to_string(port);
}

std::string Url::to_string() const {
  const bool default_port = (scheme == "http" && port == 80) || (scheme == "https" && port == 443);
  return scheme + "://" + host + (default_port ? "" : ":" + std::to_string(port)) + path_and_query;
}

std::optional<Url> parse_url(std::string_view text) {
  static const std::regex kPattern(R"(^(https?)://([^/\s:?#]+)(?::(\d{1,5}))?([^\s#]*)(?:#\S*)?$)",
                                   std::regex::icase);
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_match(text.begin(), text.end(), m, kPattern)) return std::nullopt;
  Url url;
  url.scheme = m[1].str();
  std::transform(url.scheme.begin(), url.scheme.end(), url.scheme.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  url.host = m[2].str();
  url.port = m[3].matched ? std::stoi(m[3].str()) : (url.scheme == "https" ? 443 : 80);
  if (url.port <= 0 || url.port > 65535) return std::nullopt;
  url.path_and_query = m[4].str();
  if (url.path_and_query.empty() || url.path_and_query.front() != '/') {
    url.path_and_query.insert(0, "/");
  }
  return url;
}

namespace {

std::string percent_decode(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size() &&
        std::isxdigit(static_cast<unsigned char>(s[i + 1])) &&
        std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
      out.push_back(static_cast<char>(std::stoi(std::string(s.substr(i + 1, 2)), nullptr, 16)));
      i += 2;
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

struct IiifPath {
  std::string prefix;  // everything up to and including the identifier
  std::string identifier;
};

IiifPath split_iiif(std::string_view iiif_url) {
  std::string_view s = iiif_url;
  if (const auto q = s.find_first_of("?#"); q != std::string_view::npos) s = s.substr(0, q);
  while (!s.empty() && s.back() == '/') s.remove_suffix(1);

  // Segment boundaries after the scheme separator.
  std::size_t start = 0;
  if (const auto scheme = s.find("://"); scheme != std::string_view::npos) {
    start = s.find('/', scheme + 3);
    if (start == std::string_view::npos) return {std::string(s), ""};
  }
  std::vector<std::pair<std::size_t, std::size_t>> segs;  // [begin, end)
  std::size_t pos = start;
  while (pos < s.size()) {
    if (s[pos] == '/') {
      ++pos;
      continue;
    }
    const std::size_t end = std::min(s.find('/', pos), s.size());
    segs.emplace_back(pos, end);
    pos = end;
  }
  if (segs.empty()) return {std::string(s), ""};

  auto seg = [&](std::size_t from_end) {
    const auto [b, e] = segs[segs.size() - 1 - from_end];
    return s.substr(b, e - b);
  };

  static const std::regex kQuality(R"(^[A-Za-z]+\.[A-Za-z0-9]+$)");
  static const std::regex kRotation(R"(^!?\d+(\.\d+)?$)");
  static const std::regex kSize(R"(^(full|max|\^?!?\d*,\d*|\^?pct:[\d.]+|\^?max)$)");
  static const std::regex kRegion(R"(^(full|square|\d+,\d+,\d+,\d+|pct:[\d.]+,[\d.]+,[\d.]+,[\d.]+)$)");

  std::size_t id_from_end = 0;
  if (segs.size() >= 5) {
    const std::string quality(seg(0)), rotation(seg(1)), size(seg(2)), region(seg(3));
    if (std::regex_match(quality, kQuality) && std::regex_match(rotation, kRotation) &&
        std::regex_match(size, kSize) && std::regex_match(region, kRegion)) {
      id_from_end = 4;
    }
  }
  if (id_from_end == 0 && segs.size() >= 2 && seg(0) == "info.json") id_from_end = 1;

  const auto [b, e] = segs[segs.size() - 1 - id_from_end];
  return {std::string(s.substr(0, e)), percent_decode(s.substr(b, e - b))};
}

bool is_segment_suffix(std::string_view component) {
  static const std::regex kSuffix(R"(^[A-Za-z]+[0-9]+$)");
  return std::regex_match(component.begin(), component.end(), kSuffix);
}

}  // namespace

std::string iiif_id_from_url(std::string_view iiif_url) { return split_iiif(iiif_url).identifier; }

std::string iiif_request_url(std::string_view iiif_url, int width_px) {
  return split_iiif(iiif_url).prefix + "/full/" + std::to_string(width_px) + ",/0/default.jpg";
}

std::string derive_resource_id(std::string_view iiif_id) {
  std::vector<std::string_view> parts;
  std::size_t pos = 0;
  while (true) {
    const std::size_t dot = iiif_id.find('.', pos);
    parts.push_back(iiif_id.substr(pos, dot == std::string_view::npos ? dot : dot - pos));
    if (dot == std::string_view::npos) break;
    pos = dot + 1;
  }
  while (parts.size() > 2 && is_segment_suffix(parts.back())) parts.pop_back();

  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out.push_back('.');
    out.append(parts[i]);
  }
  return out;
}

std::string sanitize_filename(std::string_view id) {
  std::string out(id);
  for (char& c : out) {
    const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-';
    if (!keep) c = '_';
  }
  // "." and ".." are not usable file names.
  if (out == "." || out == "..") out.assign(out.size(), '_');
  return out;
}

std::string resource_url_for(std::string_view iiif_url, std::string_view resource_base) {
  return std::string(resource_base) + derive_resource_id(iiif_id_from_url(iiif_url)) + "/";
}

}  // namespace cartosearch
