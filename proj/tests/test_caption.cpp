#include <gtest/gtest.h>

#include "cartosearch/caption.hpp"
#include "cartosearch/error.hpp"

namespace cartosearch {
namespace {

TEST(Smooth, CatalogFragments) {
  EXPECT_EQ(smooth_text("AUSTIN, TEX. :"), "Austin, Tex.");
  EXPECT_EQ(smooth_text(""), "");
  EXPECT_EQ(smooth_text("   "), "");
  EXPECT_EQ(smooth_text("  map   of\tthe  city /"), "Map of the city");
  EXPECT_EQ(smooth_text("PLATE XIV OF THE ATLAS"), "Plate XIV Of The Atlas");
  EXPECT_EQ(smooth_text("Sheet II;"), "Sheet II");
  EXPECT_EQ(smooth_text("McDonald's iPhone map"), "McDonald's iPhone map");
  EXPECT_EQ(smooth_text("A MAP"), "A Map");
  EXPECT_EQ(smooth_text("BOGOTÁ, COLOMBIA"), "Bogotá, Colombia");
}

TEST(Smooth, Idempotent) {
  for (const char* s : {"AUSTIN, TEX. :", "  map   of the CITY ;", "PLATE XIV", "a", "x,,", "ÉTATS-UNIS",
                        "Sanborn Fire Insurance Map from Austin, Travis County, Texas."}) {
    const auto once = smooth_text(s);
    EXPECT_EQ(smooth_text(once), once) << s;
  }
}

TEST(CatalogNote, Detection) {
  EXPECT_TRUE(is_catalogue_note("Available also through the Library of Congress Web site"));
  EXPECT_TRUE(is_catalogue_note("LC copy imperfect"));
  EXPECT_TRUE(is_catalogue_note("See http://hdl.loc.gov/x"));
  EXPECT_TRUE(is_catalogue_note("www.example.org"));
  EXPECT_FALSE(is_catalogue_note("Shows street names and railroads."));
}

TEST(Caption, LocationsDeduplicatedAgainstTitle) {
  CaptionSource src;
  src.title = "SANBORN FIRE INSURANCE MAP FROM AUSTIN, TRAVIS COUNTY, TEXAS.";
  src.locations = {"texas", "travis county", "austin", "united states"};
  src.notes = {"Shows building footprints", "Includes index", "Description derived from published bibliography",
               "Available also through the Library of Congress Web site as a raster image"};
  EXPECT_EQ(build_caption(src),
            "Sanborn Fire Insurance Map From Austin, Travis County, Texas, located in United States. "
            "Shows building footprints. Includes index.");
}

TEST(Caption, TermsDeduplicatedAgainstEachOther) {
  CaptionSource src;
  src.title = "Bird's eye view";
  src.locations = {"new york", "new york county", "york", "brooklyn"};
  const auto parts = caption_parts(src);
  EXPECT_EQ(parts.locations, (std::vector<std::string>{"New York", "New York County", "Brooklyn"}));
  EXPECT_EQ(join_caption(parts), "Bird's eye view, located in New York, New York County and Brooklyn.");
}

TEST(Caption, LastTwoNotesAndTrailingCatalogueNotesDropped) {
  CaptionSource src;
  src.title = "Map of the harbor";
  src.notes = {"Relief shown by hachures", "Available in color", "LC copy 2", "Oriented with north to the right",
               "Scale 1:24,000"};
  const auto parts = caption_parts(src);
  EXPECT_EQ(parts.notes, (std::vector<std::string>{"Relief shown by hachures."}));

  src.notes = {"only one"};
  EXPECT_TRUE(caption_parts(src).notes.empty());
  EXPECT_EQ(build_caption(src), "Map of the harbor.");
}

TEST(Caption, CleanupRules) {
  CaptionParts parts;
  parts.title = "Map of the the\x07 river river";
  parts.notes = {"Drawn in ink.."};
  EXPECT_EQ(join_caption(parts), "Map of the river. Drawn in ink.");

  CaptionSource src;
  src.title = "Austin, Austin County";
  EXPECT_EQ(build_caption(src), "Austin, Austin County.");
}

TEST(Caption, MissingTitleThrows) {
  CaptionSource src;
  src.title = "  ";
  try {
    build_caption(src);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingTitle);
  }
}

TEST(Caption, SourceFromItem) {
  const auto item = nlohmann::json::parse(R"({
    "title": "PLAN OF BOSTON",
    "location": "boston",
    "notes": ["Hand colored", "x", "y"],
    "date": "1850",
    "subject": ["maps"]
  })");
  const auto src = caption_source_from_item(item, "g3764b.ct000001");
  EXPECT_EQ(src.resource_id, "g3764b.ct000001");
  EXPECT_EQ(src.title, "PLAN OF BOSTON");
  EXPECT_EQ(src.locations, (std::vector<std::string>{"boston"}));
  EXPECT_EQ(src.notes.size(), 3u);
  EXPECT_EQ(src.date, "1850");
  EXPECT_TRUE(src.extra.contains("subject"));
  EXPECT_EQ(build_caption(src), "Plan Of Boston. Hand colored.");
  EXPECT_TRUE(caption_source_from_item(nlohmann::json::object()).title.empty());
}

TEST(Quality, AcceptsDescriptiveCaption) {
  const std::string caption =
      "Sanborn Fire Insurance Map From Austin, Travis County, Texas, located in United States. "
      "Shows building footprints with construction materials and street names.";
  EXPECT_GE(count_content_words(caption), 12u);
  const auto v = quality_filter(caption);
  EXPECT_TRUE(v.accepted);
  EXPECT_FALSE(v.reason.has_value());
}

TEST(Quality, RejectsGarbledText) {
  const auto v = quality_filter("Map \xEF\xBF\xBD\xEF\xBF\xBD\xEF\xBF\xBD\xEF\xBF\xBD of city streets harbor docks");
  EXPECT_FALSE(v.accepted);
  EXPECT_EQ(v.reason, RejectReason::kNonsensical);
}

TEST(Quality, RejectsLanguageChange) {
  // Latin text followed by a run of Han characters.
  const auto v = quality_filter("Map of Shanghai harbor and river \xE4\xB8\x8A\xE6\xB5\xB7\xE5\xB8\x82\xE5\x9C\xB0\xE5\x9B\xBE\xE5\x85\xA8");
  EXPECT_FALSE(v.accepted);
  EXPECT_EQ(v.reason, RejectReason::kLanguageChange);
}

TEST(Quality, AllowsLatinDiacriticsAndTypography) {
  EXPECT_TRUE(quality_filter("Carte générale du département de l'Hérault \xE2\x80\x94 routes, rivières et forêts.").accepted);
}

TEST(Quality, RejectsFeaturelessCaption) {
  const auto v = quality_filter("Map of it.");
  EXPECT_FALSE(v.accepted);
  EXPECT_EQ(v.reason, RejectReason::kNoFeatures);
  EXPECT_EQ(count_content_words("Map of the city and the river"), 2u);  // city, river
}

TEST(Quality, RulesCanBeDisabled) {
  QualityRules rules;
  rules.check_no_features = false;
  EXPECT_TRUE(quality_filter("Map.", rules).accepted);
}

TEST(Quality, ReasonNames) {
  EXPECT_EQ(to_string(RejectReason::kUnresponsive), "unresponsive");
  EXPECT_EQ(to_string(RejectReason::kNonsensical), "nonsensical");
  EXPECT_EQ(to_string(RejectReason::kLanguageChange), "language_change");
  EXPECT_EQ(to_string(RejectReason::kNoFeatures), "no_features");
}

}  // namespace
}  // namespace cartosearch
