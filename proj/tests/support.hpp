#pragma once

#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <mutex>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "cartosearch/catalog.hpp"
#include "cartosearch/image.hpp"

namespace cartosearch::testing {

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "cartosearch-XXXXXX").string();
    if (::mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Raster solid(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  Raster out{w, h, {}};
  out.rgb.reserve(static_cast<std::size_t>(w) * h * 3);
  for (int i = 0; i < w * h; ++i) out.rgb.insert(out.rgb.end(), {r, g, b});
  return out;
}

/// Deterministic noise image; distinct seeds give distinct images.
inline Raster noise(int w, int h, std::uint64_t seed) {
  Raster out{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h * 3)};
  std::uint64_t x = seed * 0x9E3779B97F4A7C15ull + 1;
  for (auto& v : out.rgb) {
    x ^= x << 13;
    x ^= x >> 7;
    x ^= x << 17;
    v = static_cast<std::uint8_t>(x >> 56);
  }
  return out;
}

/// Blocks of block_px square cells in a fixed 10-colour cycle; scaling the
/// block size with the width gives the same picture at another resolution.
inline Raster blocks(int cells_x, int cells_y, int block_px) {
  Raster out{cells_x * block_px, cells_y * block_px, {}};
  out.rgb.reserve(static_cast<std::size_t>(out.width) * out.height * 3);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const int cell = (y / block_px) * cells_x + (x / block_px);
      out.rgb.insert(out.rgb.end(), {static_cast<std::uint8_t>(cell * 37 % 256),
                                     static_cast<std::uint8_t>(cell * 91 % 256),
                                     static_cast<std::uint8_t>(cell * 53 % 256)});
    }
  }
  return out;
}

inline std::string png(const Raster& r) {
  const auto bytes = encode_png(r);
  return {bytes.begin(), bytes.end()};
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& p, const std::string& data) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << data;
}

/// httplib server on an ephemeral loopback port, running on its own thread.
class FixtureServer {
 public:
  explicit FixtureServer(const std::function<void(httplib::Server&)>& setup) {
    setup(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    if (port_ <= 0) throw std::runtime_error("fixture server could not bind");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FixtureServer() {
    server_.stop();
    thread_.join();
  }

  int port() const { return port_; }
  std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

/// Stand-in for an IIIF image server plus the loc.gov item API.
///   GET /iiif/<id>/full/<w>,/0/default.jpg  -> PNG noise seeded by <id>
///   GET /resource/<id>/?fo=json            -> {"item": {...}}
/// IDs in `missing` answer 404 on both routes.
class CatalogServer {
 public:
  explicit CatalogServer(std::set<std::string> missing = {})
      : missing_(std::move(missing)), server_([this](httplib::Server& s) { routes(s); }) {}

  std::string iiif_url(const std::string& id) const {
    return server_.url("/iiif/" + id + "/full/pct:12.5/0/default.jpg");
  }
  std::string resource_url(const std::string& id) const { return server_.url("/resource/" + id + "/"); }

  CatalogRow row(const std::string& id, const std::string& context = "") const {
    return {resource_url(id), iiif_url(id), 1234, context, id};
  }

  std::size_t image_requests() const { return image_requests_.load(); }

 private:
  void routes(httplib::Server& s) {
    s.Get(R"(/iiif/([^/]+)/full/(\d+),/0/default\.jpg)", [this](const httplib::Request& req, httplib::Response& res) {
      ++image_requests_;
      const std::string id = req.matches[1];
      if (missing_.contains(id)) {
        res.status = 404;
        return;
      }
      res.set_content(png(noise(16, 12, std::hash<std::string>{}(id))), "image/png");
    });
    s.Get(R"(/resource/([^/]+)/)", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      if (missing_.contains(id) || req.get_param_value("fo") != "json") {
        res.status = 404;
        return;
      }
      const std::string item = R"({"item": {"title": "Map of )" + id +
                               R"(", "location": ["texas"], "notes": ["a", "b"]}})";
      res.set_content(item, "application/json");
    });
  }

  std::set<std::string> missing_;
  std::atomic<std::size_t> image_requests_{0};
  FixtureServer server_;
};

/// Sorted regular file names in a directory, dotfiles excluded.
inline std::vector<std::string> file_names(const std::filesystem::path& dir) {
  std::vector<std::string> out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && name.front() != '.') out.push_back(name);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace cartosearch::testing
