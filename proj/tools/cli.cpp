#include "cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <csignal>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <thread>

#include "cartosearch/beto.hpp"
#include "cartosearch/bench.hpp"
#include "cartosearch/caption.hpp"
#include "cartosearch/dataset.hpp"
#include "cartosearch/error.hpp"
#include "cartosearch/fetch.hpp"
#include "cartosearch/pipeline.hpp"
#include "cartosearch/search.hpp"
#include "cartosearch/service.hpp"

namespace cartosearch::cli {

namespace {

using nlohmann::json;

// Options shared by every command that embeds text or images.
struct EmbedderOptions {
  std::size_t dim = 512;
  std::uint64_t seed = 0;
  int width = 2000;
  std::string adapter_url;

  void add_to(CLI::App& app) {
    app.add_option("--dim", dim, "Embedding dimension [env CARTOSEARCH_DIM]")
        ->envname("CARTOSEARCH_DIM")
        ->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "Test-backend seed [env CARTOSEARCH_SEED]")->envname("CARTOSEARCH_SEED");
    app.add_option("--width", width, "Image width in pixels before embedding")->check(CLI::PositiveNumber);
    app.add_option("--adapter-url", adapter_url, "External embedding endpoint [env CARTOSEARCH_ADAPTER_URL]")
        ->envname("CARTOSEARCH_ADAPTER_URL");
  }

  EmbedderConfig config() const {
    EmbedderConfig c;
    c.dim = dim;
    c.seed = seed;
    c.image_width_px = width;
    c.backend = adapter_url.empty() ? EmbedderBackend::kDeterministicTest : EmbedderBackend::kExternalAdapter;
    return c;
  }

  Embedder embedder() const {
    return Embedder(config(), adapter_url.empty() ? EmbeddingAdapter{} : make_http_adapter(adapter_url));
  }
};

struct SearchOptions {
  std::string index;
  std::size_t k = 10;
  double alpha = 0.0;
  std::string text;
  std::string image;
  EmbedderOptions embedder;
};

void add_output_option(CLI::App& app, std::string& output) {
  app.add_option("--output", output, "Result format")->check(CLI::IsMember({"table", "json"}));
}

bool is_url(const std::string& s) { return s.rfind("http://", 0) == 0 || s.rfind("https://", 0) == 0; }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Table output shows four decimals; --output json keeps full precision.
std::string number(double v) { return fmt::format("{:.4f}", v); }

json results_json(const SearchResponse& response) {
  json results = json::array();
  for (const auto& r : response.results) {
    results.push_back({{"rank", r.rank},
                       {"iiif_url", r.iiif_url},
                       {"resource_url", r.resource_url},
                       {"raw_score", r.raw_score},
                       {"softmax_score", r.softmax_score}});
  }
  json out = {{"results", results}, {"k", response.requested_k}, {"returned", response.results.size()}};
  if (response.clamped) out["warning"] = "k exceeds index size";
  return out;
}

void print_results(std::ostream& out, const SearchResponse& response, const std::string& format) {
  if (format == "json") {
    out << results_json(response).dump(2) << '\n';
    return;
  }
  out << fmt::format("{:>4}  {:<8}  {:<8}  {}\n", "rank", "score", "softmax", "iiif_url");
  for (const auto& r : response.results) {
    out << fmt::format("{:>4}  {:<8}  {:<8}  {}\n", r.rank, number(r.raw_score), number(r.softmax_score),
                       r.iiif_url);
  }
  if (response.clamped) out << "warning: k exceeds index size\n";
}

void print_kv(std::ostream& out, const json& doc, const std::string& format) {
  if (format == "json") {
    out << doc.dump(2) << '\n';
    return;
  }
  for (const auto& [key, value] : doc.items()) {
    if (value.is_array() || value.is_object()) continue;
    out << key << '=' << (value.is_string() ? value.get<std::string>() : value.dump()) << '\n';
  }
}

json stats_json(const BetoIndex& index) {
  const auto s = stats(index);
  return {{"n", s.n}, {"m", s.m}, {"bytes", s.bytes_on_disk}, {"build_duration_seconds", s.build_duration_seconds}};
}

SearchEngine open_engine(const SearchOptions& opts) {
  auto index = load_index(opts.index);
  return SearchEngine(std::move(index), opts.embedder.embedder(), std::make_shared<HttpFetcher>());
}

ImageInput image_input(const std::string& ref) {
  if (is_url(ref)) return ImageUrl{ref};
  return ImageBytes{read_file(ref)};
}

// Blocks SIGINT/SIGTERM on every thread and stops the service on receipt.
void serve_until_signalled(SearchService& service) {
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);
  service.start();
  int received = 0;
  sigwait(&signals, &received);
  spdlog::info("signal {} received, shutting down", received);
  service.stop();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Embedding search over digitized map collections", "cartosearch"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "cartosearch 1.0.0");
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off [env CARTOSEARCH_LOG_LEVEL]")
      ->envname("CARTOSEARCH_LOG_LEVEL")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));
  std::string output = "table";

  // embed
  auto* embed = app.add_subcommand("embed", "Fetch and embed catalog images into per-image records");
  std::string catalog, out_dir, variant = "stripped", report_path;
  std::size_t workers = 8;
  std::optional<std::size_t> limit;
  double rate_limit = 10.0;
  int retries = 3;
  bool no_metadata = false;
  EmbedderOptions embed_emb;
  embed->add_option("--catalog", catalog, "Catalog CSV")->required()->check(CLI::ExistingFile);
  embed->add_option("--out", out_dir, "Record directory")->required();
  embed->add_option("--workers", workers, "Concurrent rows [env CARTOSEARCH_WORKERS]")
      ->envname("CARTOSEARCH_WORKERS")
      ->check(CLI::PositiveNumber);
  embed->add_option("--variant", variant, "Record variant")->check(CLI::IsMember({"full", "stripped"}));
  embed->add_option("--limit", limit, "Stop after this many catalog rows");
  embed->add_option("--rate-limit", rate_limit, "Requests per second per host; 0 disables")
      ->check(CLI::NonNegativeNumber);
  embed->add_option("--retries", retries, "Retries for transient fetch errors")->check(CLI::NonNegativeNumber);
  embed->add_flag("--no-metadata", no_metadata, "Full variant: skip the item metadata request");
  embed->add_option("--report", report_path, "Report file (default: <out>.report.json)");
  embed_emb.add_to(*embed);
  add_output_option(*embed, output);

  // build-index
  auto* build = app.add_subcommand("build-index", "Assemble records into a BETO index, or inspect one");
  std::string records_dir, index_out, inspect;
  build->add_option("--records", records_dir, "Record directory");
  build->add_option("--out", index_out, "Index file to write");
  build->add_option("--inspect", inspect, "Print the header statistics of an existing index");
  add_output_option(*build, output);

  // search text|image|multi
  auto* search_cmd = app.add_subcommand("search", "Query an index");
  search_cmd->require_subcommand(1);
  SearchOptions sopts;
  const auto add_search_common = [&](CLI::App& sub) {
    sub.add_option("--index", sopts.index, "Index file [env CARTOSEARCH_INDEX]")
        ->envname("CARTOSEARCH_INDEX")
        ->required();
    sub.add_option("--k", sopts.k, "Number of results")->check(CLI::PositiveNumber);
    sopts.embedder.add_to(sub);
    add_output_option(sub, output);
  };
  auto* search_text = search_cmd->add_subcommand("text", "Text query");
  search_text->add_option("query", sopts.text, "Query text")->required();
  add_search_common(*search_text);
  auto* search_image = search_cmd->add_subcommand("image", "Reverse image query");
  search_image->add_option("image", sopts.image, "Image file or URL")->required();
  add_search_common(*search_image);
  auto* search_multi = search_cmd->add_subcommand("multi", "Blended text and image query");
  search_multi->add_option("--text", sopts.text, "Query text")->required();
  search_multi->add_option("--image", sopts.image, "Image file or URL")->required();
  search_multi->add_option("--alpha", sopts.alpha, "-1 image only, 1 text only")->check(CLI::Range(-1.0, 1.0));
  add_search_common(*search_multi);

  // caption
  auto* caption = app.add_subcommand("caption", "Caption one item from its metadata");
  std::string item_path;
  caption->add_option("--item", item_path, "loc.gov item JSON or a full record")
      ->required()
      ->check(CLI::ExistingFile);
  add_output_option(*caption, output);

  // dataset
  auto* dataset = app.add_subcommand("dataset", "Build a map-caption fine-tuning manifest");
  std::string ds_catalog, ds_records, ds_out, ds_regions;
  DatasetConfig ds_config;
  dataset->add_option("--catalog", ds_catalog, "Catalog CSV")->required()->check(CLI::ExistingFile);
  dataset->add_option("--records", ds_records, "Full-variant record directory")->required()->check(CLI::ExistingDirectory);
  dataset->add_option("--out", ds_out, "Manifest path (JSON lines)")->required();
  dataset->add_option("--single", ds_config.n_single_image, "Items drawn from the single-image pool");
  dataset->add_option("--sanborn", ds_config.n_sanborn, "Images drawn from the Sanborn pool");
  dataset->add_option("--coverage", ds_config.n_coverage, "Region tags to cover");
  dataset->add_option("--regions", ds_regions, "Region tag file, one per line")->check(CLI::ExistingFile);
  dataset->add_option("--seed", ds_config.seed, "Sampling seed");
  dataset->add_option("--max-segments", ds_config.max_segments_per_item, "Segment limit for the item pool; 0 lifts it");
  add_output_option(*dataset, output);

  // bench
  auto* bench = app.add_subcommand("bench", "Measure end-to-end text search latency");
  std::string bench_index;
  std::size_t synthetic = 0;
  BenchConfig bench_config;
  EmbedderOptions bench_emb;
  auto* bench_index_opt =
      bench->add_option("--index", bench_index, "Index file [env CARTOSEARCH_INDEX]")->envname("CARTOSEARCH_INDEX");
  bench->add_option("--synthetic", synthetic, "Generate a random index with this many columns")
      ->excludes(bench_index_opt);
  bench->add_option("--queries", bench_config.queries, "Number of timed queries")->check(CLI::PositiveNumber);
  bench->add_option("--k", bench_config.k, "Results per query")->check(CLI::PositiveNumber);
  bench_emb.add_to(*bench);
  add_output_option(*bench, output);

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP search service");
  ServiceConfig svc;
  std::string svc_index, svc_static;
  EmbedderOptions serve_emb;
  std::size_t timeout_s = 30;
  serve->add_option("--host", svc.host, "Bind address [env CARTOSEARCH_HOST]")->envname("CARTOSEARCH_HOST");
  serve->add_option("--port", svc.port, "Bind port [env CARTOSEARCH_PORT]")
      ->envname("CARTOSEARCH_PORT")
      ->check(CLI::Range(0, 65535));
  serve->add_option("--index", svc_index, "Index file [env CARTOSEARCH_INDEX]")
      ->envname("CARTOSEARCH_INDEX")
      ->required();
  serve->add_option("--max-k", svc.max_k, "Largest k a request may ask for [env CARTOSEARCH_MAX_K]")
      ->envname("CARTOSEARCH_MAX_K")
      ->check(CLI::PositiveNumber);
  serve->add_option("--timeout", timeout_s, "Per-request timeout in seconds")->check(CLI::PositiveNumber);
  serve->add_option("--static", svc_static, "Directory served at / [env CARTOSEARCH_STATIC_DIR]")
      ->envname("CARTOSEARCH_STATIC_DIR")
      ->check(CLI::ExistingDirectory);
  serve->add_option("--cors-origin", svc.cors_origin, "Access-Control-Allow-Origin value");
  serve_emb.add_to(*serve);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*embed) {
      PipelineOptions options;
      options.workers = workers;
      options.variant = parse_variant(variant);
      options.fetch_metadata = !no_metadata;
      options.limit = limit;
      FetchConfig fetch;
      fetch.rate_limit_per_host = rate_limit;
      fetch.max_retries = retries;
      HttpFetcher fetcher(fetch);
      const auto report = run_pipeline(catalog, out_dir, embed_emb.embedder(), fetcher, options);
      const auto doc = report.to_json();
      const std::filesystem::path dir(out_dir);
      const auto report_file = report_path.empty()
                                   ? dir.parent_path() / (dir.filename().string() + ".report.json")
                                   : std::filesystem::path(report_path);
      write_file_atomic(report_file, doc.dump(2) + "\n");
      if (output == "json") {
        out << doc.dump(2) << '\n';
      } else {
        out << "processed=" << report.processed << '\n'
            << "skipped_existing=" << report.skipped_existing << '\n'
            << "failed=" << report.failed << '\n';
        for (const auto& f : report.failures) {
          out << fmt::format("  row {}: {} ({}) {}\n", f.row_number, f.error_class, f.iiif_url, f.message);
        }
        out << "report=" << report_file.string() << '\n';
      }
      if (report.processed + report.skipped_existing == 0) {
        err << "no catalog row succeeded\n";
        return kExitFailure;
      }
      return kExitOk;
    }

    if (*build) {
      if (!inspect.empty()) {
        if (!records_dir.empty() || !index_out.empty()) {
          err << "--inspect cannot be combined with --records/--out\n";
          return kExitUsage;
        }
        print_kv(out, stats_json(load_index(inspect)), output);
        return kExitOk;
      }
      if (records_dir.empty() || index_out.empty()) {
        err << "build-index needs --records and --out (or --inspect)\n";
        return kExitUsage;
      }
      const auto index = build_beto(records_dir);
      save_index(index, index_out);
      auto doc = stats_json(index);
      doc["path"] = index_out;
      print_kv(out, doc, output);
      return kExitOk;
    }

    if (*search_cmd) {
      const auto engine = open_engine(sopts);
      SearchQuery query;
      query.k = sopts.k;
      query.alpha = sopts.alpha;
      if (*search_text) {
        query.mode = SearchMode::kText;
        query.text = sopts.text;
      } else if (*search_image) {
        query.mode = SearchMode::kImage;
        query.image = image_input(sopts.image);
      } else {
        query.mode = SearchMode::kMultimodal;
        query.text = sopts.text;
        query.image = image_input(sopts.image);
      }
      print_results(out, engine.search(query), output);
      return kExitOk;
    }

    if (*caption) {
      const auto doc = json::parse(read_file(item_path));
      // A full record nests the loc.gov item under metadata.item.
      const json* item = &doc;
      if (doc.contains("metadata") && doc["metadata"].contains("item")) item = &doc["metadata"]["item"];
      else if (doc.contains("item")) item = &doc["item"];
      const auto text = build_caption(caption_source_from_item(*item));
      const auto verdict = quality_filter(text);
      json result = {{"caption", text}, {"accepted", verdict.accepted}};
      if (verdict.reason) result["reason"] = to_string(*verdict.reason);
      if (output == "json") {
        out << result.dump(2) << '\n';
      } else {
        out << text << '\n';
        if (verdict.reason) out << "rejected: " << to_string(*verdict.reason) << '\n';
      }
      return kExitOk;
    }

    if (*dataset) {
      if (!ds_regions.empty()) ds_config.region_tags = read_region_tags(ds_regions);
      const auto result = build_dataset(ds_catalog, ds_records, ds_config);
      write_manifest(ds_out, result.pairs);
      const auto doc = result.report.to_json();
      write_file_atomic(report_path_for(ds_out), doc.dump(2) + "\n");
      if (output == "json") {
        out << doc.dump(2) << '\n';
      } else {
        out << "sampled=" << result.report.sampled << '\n' << "discarded=" << result.report.discarded << '\n';
        for (const auto& [reason, count] : doc["discarded_by_reason"].items()) {
          out << "  " << reason << '=' << count.get<std::size_t>() << '\n';
        }
        out << "final=" << result.report.final_count << '\n' << "manifest=" << ds_out << '\n';
      }
      return kExitOk;
    }

    if (*bench) {
      if (bench_index.empty() && synthetic == 0) {
        err << "bench needs --index or --synthetic N\n";
        return kExitUsage;
      }
      const auto index = synthetic > 0 ? make_synthetic_index(synthetic, bench_emb.dim, bench_emb.seed)
                                       : load_index(bench_index);
      const SearchEngine engine(index, bench_emb.embedder());
      const auto report = run_bench(engine, bench_config);
      print_kv(out, report.to_json(), output);
      return kExitOk;
    }

    if (*serve) {
      svc.index_path = svc_index;
      svc.embedder = serve_emb.config();
      svc.request_timeout = std::chrono::seconds(timeout_s);
      if (!svc_static.empty()) svc.static_dir = svc_static;
      SearchService service(svc, nullptr,
                            serve_emb.adapter_url.empty() ? EmbeddingAdapter{} : make_http_adapter(serve_emb.adapter_url));
      service.load_index_async();
      serve_until_signalled(service);
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return e.code() == ErrorCode::kConfig ? kExitUsage : kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace cartosearch::cli
