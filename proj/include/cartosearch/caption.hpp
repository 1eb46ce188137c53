#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cartosearch {

/// Catalog metadata a caption is generated from.
struct CaptionSource {
  std::string resource_id;
  std::string title;
  std::vector<std::string> locations;
  std::vector<std::string> notes;
  std::optional<std::string> date;
  std::map<std::string, nlohmann::json> extra;
};

/// Reads title, location, notes and date from a loc.gov item document. Both
/// string and list forms are accepted for location and notes; other
/// top-level fields land in extra. A missing title yields an empty title.
CaptionSource caption_source_from_item(const nlohmann::json& item, std::string resource_id = {});

/// Normalizes a catalog fragment:
///   1. runs of whitespace collapse to one space, ends trimmed
///   2. trailing field punctuation (: ; , /) is stripped
///   3. all-caps words of two or more letters become Capitalized, except
///      Roman numerals spelled only with I, V and X
///   4. the first letter is upper-cased
/// Mixed-case words are left alone. Idempotent.
std::string smooth_text(std::string_view raw);

/// Notes are catalogue or availability data rather than visual description
/// when they mention availability, an LC copy, or a URL.
bool is_catalogue_note(std::string_view note);

/// The pieces a caption is assembled from, before joining.
struct CaptionParts {
  std::string title;                   // smoothed, no terminal period
  std::vector<std::string> locations;  // terms kept for the locative clause
  std::vector<std::string> notes;      // smoothed, each ending in '.'
};

/// Location terms contained (case-insensitively) in the title or in an
/// already kept term are skipped. The final two notes are always dropped,
/// then further trailing catalogue notes. Throws Error(kMissingTitle) when
/// the title is blank.
CaptionParts caption_parts(const CaptionSource& src);

/// "<Title>, located in A, B and C. <Note>. <Note>."
/// Control characters are removed, immediately repeated words collapse and
/// the caption ends in exactly one period.
std::string join_caption(const CaptionParts& parts);

/// join_caption(caption_parts(src)).
std::string build_caption(const CaptionSource& src);

// -- quality filter ----------------------------------------------------------

enum class RejectReason { kUnresponsive, kNonsensical, kLanguageChange, kNoFeatures };

std::string_view to_string(RejectReason reason);

struct QualityRules {
  bool check_nonsensical = true;
  bool check_language_change = true;
  bool check_no_features = true;
  /// Reject when more than this fraction of code points fall outside
  /// printable Latin-1 and cartographic punctuation.
  double max_foreign_fraction = 0.10;
  /// Length of a non-Latin letter run, after Latin text, that counts as a
  /// switch of language.
  std::size_t min_script_run = 5;
  /// Minimum number of content words (three or more letters, not a stop
  /// word).
  std::size_t min_content_words = 4;
};

struct QualityVerdict {
  bool accepted = true;
  std::optional<RejectReason> reason;
};

/// Checks in order: language change, nonsensical characters, missing
/// features. The first failing check decides the reason.
QualityVerdict quality_filter(std::string_view caption, const QualityRules& rules = {});

/// Content-word count used by the no-features rule.
std::size_t count_content_words(std::string_view caption);

}  // namespace cartosearch
