#pragma once

#include "thir/index.hpp"

#include <json.hpp>

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace thir {

/// Largest accepted upload.
inline constexpr std::size_t kMaxUploadBytes = 20u * 1024u * 1024u;

/// Query document shared by `POST /api/query` and `thir query --format json`.
nlohmann::json query_response(const Index& ix, const RgbImage& query, int k, bool normalize = false);
nlohmann::json stats_response(const Index& ix);
nlohmann::json entry_curves_response(const Index& ix, std::uint32_t id);

struct ServiceConfig {
  std::filesystem::path data_root;
  std::optional<std::filesystem::path> console_dir;  // static files under "/"
};

/// HTTP facade over an immutable index.
class RetrievalService {
 public:
  RetrievalService(Index index, ServiceConfig config);
  ~RetrievalService();
  RetrievalService(const RetrievalService&) = delete;
  RetrievalService& operator=(const RetrievalService&) = delete;

  /// Blocks until stop(). Returns false if the address cannot be bound.
  bool listen(const std::string& host, int port);
  /// Binds an ephemeral port and returns it (or -1); then call run().
  int bind_any_port(const std::string& host);
  bool run();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace thir
