#include "cartosearch/caption.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "cartosearch/error.hpp"

namespace cartosearch {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }
bool is_ascii_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_ascii_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_ascii_lower(char c) { return c >= 'a' && c <= 'z'; }
bool is_high(char c) { return static_cast<unsigned char>(c) >= 0x80; }

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool contains_ci(std::string_view haystack, std::string_view needle) {
  return ascii_lower(haystack).find(ascii_lower(needle)) != std::string::npos;
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending = false;
  for (char c : s) {
    if (is_space(c)) {
      pending = !out.empty();
      continue;
    }
    if (pending) out.push_back(' ');
    pending = false;
    out.push_back(c);
  }
  return out;
}

void strip_trailing(std::string& s, std::string_view chars) {
  while (!s.empty() && (is_space(s.back()) || chars.find(s.back()) != std::string_view::npos)) s.pop_back();
}

// Decodes UTF-8; malformed sequences become U+FFFD.
std::vector<char32_t> decode_utf8(std::string_view s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      len = 1;
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0 && b0 >= 0xC2) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0 && b0 <= 0xF4) {
      len = 4;
      cp = b0 & 0x07;
    }
    bool ok = len > 0 && i + len <= s.size();
    for (std::size_t j = 1; ok && j < len; ++j) {
      const auto b = static_cast<unsigned char>(s[i + j]);
      if ((b & 0xC0) != 0x80) ok = false;
      cp = (cp << 6) | (b & 0x3F);
    }
    if (ok && ((len == 3 && cp < 0x800) || (len == 4 && (cp < 0x10000 || cp > 0x10FFFF)) ||
               (cp >= 0xD800 && cp <= 0xDFFF))) {
      ok = false;
    }
    if (!ok) {
      out.push_back(U'\uFFFD');
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

// Word = maximal run of ASCII letters and UTF-8 multibyte sequences.
bool is_word_byte(char c) { return is_ascii_alpha(c) || is_high(c); }

// "C3 80".."C3 9E" (minus the multiplication sign) are Latin-1 capitals.
bool latin1_upper_at(std::string_view w, std::size_t i) {
  if (i + 1 >= w.size() || static_cast<unsigned char>(w[i]) != 0xC3) return false;
  const auto b = static_cast<unsigned char>(w[i + 1]);
  return b >= 0x80 && b <= 0x9E && b != 0x97;
}
bool latin1_lower_at(std::string_view w, std::size_t i) {
  if (i + 1 >= w.size() || static_cast<unsigned char>(w[i]) != 0xC3) return false;
  const auto b = static_cast<unsigned char>(w[i + 1]);
  return b >= 0x9F && b <= 0xBF && b != 0xB7;
}

bool is_roman_numeral(std::string_view w) {
  return std::all_of(w.begin(), w.end(), [](char c) { return c == 'I' || c == 'V' || c == 'X'; });
}

// Capitalizes an all-caps word in place; other words are untouched.
void soften_caps(std::string& w) {
  std::size_t letters = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (is_ascii_lower(w[i]) || latin1_lower_at(w, i)) return;
    if (is_ascii_upper(w[i])) ++letters;
    if (latin1_upper_at(w, i)) {
      ++letters;
      ++i;
    }
  }
  if (letters < 2 || is_roman_numeral(w)) return;
  bool first = true;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (is_ascii_upper(w[i])) {
      if (!first) w[i] = static_cast<char>(w[i] + ('a' - 'A'));
      first = false;
    } else if (latin1_upper_at(w, i)) {
      if (!first) w[i + 1] = static_cast<char>(static_cast<unsigned char>(w[i + 1]) + 0x20);
      first = false;
      ++i;
    } else if (is_high(w[i])) {
      first = false;
    }
  }
}

void upper_first_letter(std::string& s) {
  for (char& c : s) {
    if (is_word_byte(c)) {
      if (is_ascii_lower(c)) c = static_cast<char>(c - ('a' - 'A'));
      return;
    }
  }
}

std::string title_case_words(std::string s) {
  bool start = true;
  for (char& c : s) {
    if (start && is_ascii_lower(c)) c = static_cast<char>(c - ('a' - 'A'));
    start = c == ' ';
  }
  return s;
}

std::string without_terminal_period(std::string s) {
  strip_trailing(s, ".");
  return s;
}

std::vector<std::string> string_list(const nlohmann::json& v) {
  std::vector<std::string> out;
  if (v.is_string()) {
    out.push_back(v.get<std::string>());
  } else if (v.is_array()) {
    for (const auto& e : v) {
      if (e.is_string()) out.push_back(e.get<std::string>());
    }
  }
  return out;
}

std::string join_terms(const std::vector<std::string>& terms) {
  std::string out;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (i > 0) out += i + 1 == terms.size() ? " and " : ", ";
    out += terms[i];
  }
  return out;
}

std::string word_key(std::string_view token) {
  std::string key;
  for (char c : token) {
    if (std::isalnum(static_cast<unsigned char>(c)) || is_high(c)) {
      key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return key;
}

std::string remove_control_chars(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto b = static_cast<unsigned char>(s[i]);
    if (b < 0x20 || b == 0x7F) {
      out.push_back(' ');
    } else if (b == 0xC2 && i + 1 < s.size() && static_cast<unsigned char>(s[i + 1]) >= 0x80 &&
               static_cast<unsigned char>(s[i + 1]) <= 0x9F) {
      out.push_back(' ');  // C1 control
      ++i;
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

std::string collapse_repeated_words(std::string_view s) {
  std::vector<std::string> kept;
  std::size_t i = 0;
  while (i < s.size()) {
    const std::size_t end = std::min(s.find(' ', i), s.size());
    std::string token(s.substr(i, end - i));
    i = end + 1;
    if (token.empty()) continue;
    // A repeat only counts when nothing separates the two words; "Texas,
    // Texas" is a list, "the the" is a stutter.
    if (!kept.empty() && !std::ispunct(static_cast<unsigned char>(kept.back().back()))) {
      const std::string key = word_key(token);
      if (!key.empty() && key == word_key(kept.back())) {
        std::size_t p = token.size();
        while (p > 0 && std::ispunct(static_cast<unsigned char>(token[p - 1]))) --p;
        kept.back() += token.substr(p);
        continue;
      }
    }
    kept.push_back(std::move(token));
  }
  std::string out;
  for (const auto& t : kept) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

// Latin letters: ASCII, Latin-1 supplement and Latin Extended-A/B.
bool is_latin_letter(char32_t cp) {
  if (cp < 0x80) return (cp >= 'A' && cp <= 'Z') || (cp >= 'a' && cp <= 'z');
  if (cp >= 0xC0 && cp <= 0xFF) return cp != 0xD7 && cp != 0xF7;
  return cp >= 0x100 && cp <= 0x24F;
}

// Letters of other scripts; punctuation, symbol and private-use blocks excluded.
bool is_non_latin_letter(char32_t cp) {
  if (cp < 0x370) return false;
  if (cp >= 0x2000 && cp <= 0x2BFF) return false;  // punctuation, symbols, arrows
  if (cp >= 0x3000 && cp <= 0x303F) return false;  // CJK punctuation
  if (cp >= 0xE000 && cp <= 0xF8FF) return false;  // private use
  if (cp >= 0xFE00 && cp <= 0xFE6F) return false;  // variation selectors, small forms
  if (cp >= 0xFF00 && cp <= 0xFF20) return false;  // full-width punctuation
  if (cp >= 0xFFF0 && cp <= 0xFFFF) return false;  // specials, U+FFFD
  return true;
}

constexpr std::array<char32_t, 9> kCartographicPunctuation = {
    U'\u2032', U'\u2033', U'\u2013', U'\u2014', U'\u2018', U'\u2019', U'\u201C', U'\u201D', U'\u2026'};

bool is_plain_char(char32_t cp) {
  if (cp >= 0x20 && cp <= 0x7E) return true;
  if (cp >= 0xA0 && cp <= 0xFF) return true;
  return std::find(kCartographicPunctuation.begin(), kCartographicPunctuation.end(), cp) !=
         kCartographicPunctuation.end();
}

constexpr std::array<std::string_view, 26> kStopWords = {
    "the",   "and",  "for",  "with", "from", "into",    "map",  "maps", "located",
    "its",   "are",  "was",  "were", "has",  "have",    "this", "that", "also",
    "not",   "but",  "all",  "any",  "one",  "per",     "than", "been"};

bool language_changes(const std::vector<char32_t>& cps, std::size_t min_run) {
  bool seen_latin = false;
  std::size_t run = 0;
  for (char32_t cp : cps) {
    if (is_non_latin_letter(cp)) {
      if (seen_latin && ++run >= min_run) return true;
      continue;
    }
    run = 0;
    if (is_latin_letter(cp)) seen_latin = true;
  }
  return false;
}

}  // namespace

CaptionSource caption_source_from_item(const nlohmann::json& item, std::string resource_id) {
  CaptionSource src;
  src.resource_id = std::move(resource_id);
  if (!item.is_object()) return src;
  for (const auto& [key, value] : item.items()) {
    if (key == "title") {
      if (value.is_string()) src.title = value.get<std::string>();
    } else if (key == "location") {
      src.locations = string_list(value);
    } else if (key == "notes") {
      src.notes = string_list(value);
    } else if (key == "date") {
      if (value.is_string()) src.date = value.get<std::string>();
    } else {
      src.extra.emplace(key, value);
    }
  }
  return src;
}

std::string smooth_text(std::string_view raw) {
  std::string s = collapse_whitespace(raw);
  strip_trailing(s, ":;,/");

  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (!is_word_byte(s[i])) {
      out.push_back(s[i++]);
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && is_word_byte(s[j])) ++j;
    std::string word = s.substr(i, j - i);
    soften_caps(word);
    out += word;
    i = j;
  }
  upper_first_letter(out);
  return out;
}

bool is_catalogue_note(std::string_view note) {
  const std::string lower = ascii_lower(note);
  return lower.find("available") != std::string::npos || lower.find("lc copy") != std::string::npos ||
         lower.find("http") != std::string::npos || lower.find("www.") != std::string::npos;
}

CaptionParts caption_parts(const CaptionSource& src) {
  CaptionParts parts;
  parts.title = without_terminal_period(smooth_text(src.title));
  if (parts.title.empty()) {
    throw Error(ErrorCode::kMissingTitle, "item " + src.resource_id + " has no title");
  }

  for (const auto& raw : src.locations) {
    std::string term = title_case_words(without_terminal_period(smooth_text(raw)));
    if (term.empty() || contains_ci(parts.title, term)) continue;
    const bool repeated = std::any_of(parts.locations.begin(), parts.locations.end(),
                                      [&](const std::string& kept) { return contains_ci(kept, term); });
    if (!repeated) parts.locations.push_back(std::move(term));
  }

  std::size_t keep = src.notes.size() >= 2 ? src.notes.size() - 2 : 0;
  while (keep > 0 && is_catalogue_note(src.notes[keep - 1])) --keep;
  for (std::size_t i = 0; i < keep; ++i) {
    std::string note = without_terminal_period(smooth_text(src.notes[i]));
    if (!note.empty()) parts.notes.push_back(note + ".");
  }
  return parts;
}

std::string join_caption(const CaptionParts& parts) {
  std::string s = parts.title;
  if (!parts.locations.empty()) s += ", located in " + join_terms(parts.locations);
  s += ".";
  for (const auto& note : parts.notes) s += " " + note;

  s = collapse_repeated_words(collapse_whitespace(remove_control_chars(s)));
  strip_trailing(s, ".");
  s += ".";
  return s;
}

std::string build_caption(const CaptionSource& src) { return join_caption(caption_parts(src)); }

std::string_view to_string(RejectReason reason) {
  switch (reason) {
    case RejectReason::kUnresponsive:
      return "unresponsive";
    case RejectReason::kNonsensical:
      return "nonsensical";
    case RejectReason::kLanguageChange:
      return "language_change";
    case RejectReason::kNoFeatures:
      return "no_features";
  }
  return "unknown";
}

std::size_t count_content_words(std::string_view caption) {
  std::size_t count = 0;
  std::size_t i = 0;
  while (i < caption.size()) {
    if (!is_word_byte(caption[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < caption.size() && is_word_byte(caption[j])) ++j;
    const std::string word = ascii_lower(caption.substr(i, j - i));
    i = j;
    if (decode_utf8(word).size() < 3) continue;
    if (std::find(kStopWords.begin(), kStopWords.end(), word) != kStopWords.end()) continue;
    ++count;
  }
  return count;
}

QualityVerdict quality_filter(std::string_view caption, const QualityRules& rules) {
  const auto reject = [](RejectReason r) { return QualityVerdict{false, r}; };
  const auto cps = decode_utf8(caption);

  if (rules.check_language_change && language_changes(cps, rules.min_script_run)) {
    return reject(RejectReason::kLanguageChange);
  }
  if (rules.check_nonsensical && !cps.empty()) {
    const auto foreign = static_cast<double>(std::count_if(cps.begin(), cps.end(),
                                                           [](char32_t cp) { return !is_plain_char(cp); }));
    if (foreign / static_cast<double>(cps.size()) > rules.max_foreign_fraction) {
      return reject(RejectReason::kNonsensical);
    }
  }
  if (rules.check_no_features && count_content_words(caption) < rules.min_content_words) {
    return reject(RejectReason::kNoFeatures);
  }
  return {};
}

}  // namespace cartosearch
