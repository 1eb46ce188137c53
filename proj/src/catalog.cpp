#include "cartosearch/catalog.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "cartosearch/error.hpp"
#include "cartosearch/iiif.hpp"

namespace cartosearch {

namespace {

std::string lower_trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  // Strip a UTF-8 BOM on the first header cell.
  if (s.rfind("\xef\xbb\xbf", 0) == 0) s.erase(0, 3);
  return s;
}

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

const std::map<std::string, std::string>& column_aliases() {
  static const std::map<std::string, std::string> aliases = {
      {"resource_url", "resource_url"},     {"resource", "resource_url"},
      {"resource_link", "resource_url"},    {"iiif_url", "iiif_url"},
      {"iiif", "iiif_url"},                 {"image_url", "iiif_url"},
      {"iiif_image_url", "iiif_url"},       {"file_size", "file_size"},
      {"size", "file_size"},                {"collection_context", "collection_context"},
      {"context", "collection_context"},    {"partof", "collection_context"},
      {"collection", "collection_context"}, {"iiif_id", "iiif_id"},
  };
  return aliases;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

CatalogReader::CatalogReader(const std::filesystem::path& path) : in_(path, std::ios::binary) {
  if (!in_) throw Error(ErrorCode::kNotFound, "catalog not found: " + path.string());
  std::vector<std::string> fields;
  if (!read_record(fields)) throw Error(ErrorCode::kSchema, "catalog has no header row");
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const std::string name = lower_trim(fields[i]);
    header_.push_back(name);
    if (auto it = column_aliases().find(name); it != column_aliases().end()) {
      columns_.try_emplace(it->second, i);
    }
  }
  for (const char* required : {"resource_url", "iiif_url"}) {
    if (!columns_.count(required)) {
      throw Error(ErrorCode::kSchema,
                  std::string("catalog header lacks required column '") + required + "'");
    }
  }
}

bool CatalogReader::read_record(std::vector<std::string>& fields) {
  fields.clear();
  if (in_.peek() == std::char_traits<char>::eof()) return false;

  std::string field;
  bool quoted = false;
  bool any = false;
  char c;
  while (in_.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in_.peek() == '"') {
          in_.get(c);
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      break;
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  if (!any) return false;
  fields.push_back(std::move(field));
  return true;
}

std::optional<CatalogEntry> CatalogReader::next() {
  std::vector<std::string> fields;
  while (true) {
    if (!read_record(fields)) return std::nullopt;
    // Skip blank lines entirely; they are not rows.
    if (!(fields.size() == 1 && trim(fields[0]).empty())) break;
  }

  CatalogEntry entry;
  entry.row_number = ++rows_read_;
  auto field = [&](const char* name) -> std::string {
    auto it = columns_.find(name);
    if (it == columns_.end() || it->second >= fields.size()) return {};
    return trim(fields[it->second]);
  };

  CatalogRow row;
  row.resource_url = field("resource_url");
  row.iiif_url = field("iiif_url");
  row.collection_context = field("collection_context");
  entry.iiif_url = row.iiif_url;

  if (fields.size() != header_.size()) {
    entry.error = "expected " + std::to_string(header_.size()) + " fields, found " +
                  std::to_string(fields.size());
    return entry;
  }
  if (row.iiif_url.empty()) {
    entry.error = "empty IIIF URL";
    return entry;
  }
  if (!parse_url(row.iiif_url)) {
    entry.error = "IIIF URL is not a valid http(s) URL";
    return entry;
  }
  if (const std::string size = field("file_size"); !size.empty()) {
    std::uint64_t value = 0;
    const auto [ptr, ec] = std::from_chars(size.data(), size.data() + size.size(), value);
    if (ec != std::errc() || ptr != size.data() + size.size()) {
      entry.error = "file_size is not a non-negative integer";
      return entry;
    }
    row.file_size = value;
  }
  row.iiif_id = field("iiif_id");
  if (row.iiif_id.empty()) row.iiif_id = iiif_id_from_url(row.iiif_url);
  if (row.iiif_id.empty()) {
    entry.error = "cannot derive an IIIF identifier from the URL";
    return entry;
  }
  entry.row = std::move(row);
  return entry;
}

std::vector<CatalogEntry> read_catalog(const std::filesystem::path& path) {
  CatalogReader reader(path);
  std::vector<CatalogEntry> out;
  while (auto entry = reader.next()) out.push_back(std::move(*entry));
  return out;
}

void write_catalog(const std::filesystem::path& path, const std::vector<CatalogRow>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kWrite, "cannot write catalog: " + path.string());
  out << "resource_url,iiif_url,file_size,collection_context\n";
  for (const auto& row : rows) {
    out << csv_escape(row.resource_url) << ',' << csv_escape(row.iiif_url) << ','
        << (row.file_size ? std::to_string(*row.file_size) : std::string()) << ','
        << csv_escape(row.collection_context) << '\n';
  }
  if (!out) throw Error(ErrorCode::kWrite, "failed writing catalog: " + path.string());
}

}  // namespace cartosearch
