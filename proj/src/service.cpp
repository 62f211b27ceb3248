#include "thir/service.hpp"

#include "thir/error.hpp"
#include "thir/retrieval.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>

namespace thir {

namespace {

nlohmann::json row_values(const Index& ix, std::uint32_t id) {
  const auto row = ix.descriptors.row(id);
  nlohmann::json values = nlohmann::json::array();
  for (Eigen::Index j = 0; j < row.size(); ++j) values.push_back(static_cast<long long>(row(j)));
  return values;
}

}  // namespace

nlohmann::json query_response(const Index& ix, const RgbImage& query, int k, bool normalize) {
  const auto curves = channel_curves(resize(query, ix.resize.width, ix.resize.height), ix.spec);
  const int r = ix.spec.resolution;
  TopoDescriptor desc(3 * r);
  nlohmann::json values = nlohmann::json::array();
  nlohmann::json samples = nlohmann::json::array();
  for (int c = 0; c < 3; ++c) {
    nlohmann::json channel_samples = nlohmann::json::array();
    for (int j = 0; j < r; ++j) {
      desc(c * r + j) = static_cast<float>(curves[c].counts(j));
      values.push_back(curves[c].counts(j));
      channel_samples.push_back(curves[c].samples(j));
    }
    samples.push_back(std::move(channel_samples));
  }

  QuerySpec qs;
  qs.k = k;
  qs.normalize = normalize;
  const auto hits = top_k(ix, desc, qs);

  nlohmann::json results = nlohmann::json::array();
  nlohmann::json result_curves = nlohmann::json::array();
  for (const auto& hit : hits) {
    results.push_back({{"id", hit.entry_id},
                       {"label", to_string(hit.label)},
                       {"magnification", static_cast<int>(hit.magnification)},
                       {"distance", hit.distance},
                       {"image_url", "/api/images/" + std::to_string(hit.entry_id)}});
    result_curves.push_back(row_values(ix, hit.entry_id));
  }
  return {{"k", k},
          {"results", std::move(results)},
          {"query_curves", {{"values", std::move(values)}, {"samples", std::move(samples)}}},
          {"result_curves", std::move(result_curves)}};
}

nlohmann::json stats_response(const Index& ix) {
  const auto s = stats(ix);
  return {{"entries", s.total},
          {"resolution", s.resolution},
          {"dim", s.dim},
          {"resize", {{"width", s.resize.width}, {"height", s.resize.height}}},
          {"range", to_string(ix.spec.range_policy)},
          {"labels", s.labels},
          {"magnifications", s.magnifications}};
}

nlohmann::json entry_curves_response(const Index& ix, std::uint32_t id) {
  if (id >= ix.size()) throw Error(ErrorKind::InvalidArgument, "unknown entry " + std::to_string(id));
  const auto& rec = ix.records[id];
  return {{"id", id},
          {"label", to_string(rec.label)},
          {"magnification", static_cast<int>(rec.magnification)},
          {"resolution", ix.spec.resolution},
          {"values", row_values(ix, id)}};
}

struct RetrievalService::Impl {
  Index index;
  ServiceConfig config;
  httplib::Server server;

  Impl(Index ix, ServiceConfig cfg) : index(std::move(ix)), config(std::move(cfg)) { routes(); }

  static void json_error(httplib::Response& res, int status, const std::string& error, const std::string& message) {
    res.status = status;
    res.set_content(nlohmann::json{{"error", error}, {"message", message}}.dump(), "application/json");
  }

  static std::string error_code(int status) {
    switch (status) {
      case 400: return "bad_request";
      case 404: return "not_found";
      case 413: return "payload_too_large";
      default: return status >= 500 ? "internal" : "http_" + std::to_string(status);
    }
  }

  static std::string content_type_for(const std::filesystem::path& p) {
    auto ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") return "image/png";
    if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
    return "application/octet-stream";
  }

  std::optional<std::uint32_t> entry_id(const httplib::Request& req) const {
    const auto text = req.matches[1].str();
    if (text.size() > 9) return std::nullopt;
    const auto id = static_cast<std::uint32_t>(std::stoul(text));
    if (id >= index.size()) return std::nullopt;
    return id;
  }

  void routes() {
    server.set_payload_max_length(kMaxUploadBytes);

    server.set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Origin", "*");
    });
    server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.status = 204;
    });

    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Origin", "*");
      if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
      json_error(res, res.status, error_code(res.status), httplib::status_message(res.status));
      return httplib::Server::HandlerResponse::Handled;
    });
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      std::string message = "unknown error";
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        message = e.what();
      } catch (...) {
      }
      json_error(res, 500, "internal", message);
    });

    server.Get("/api/stats", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(stats_response(index).dump(), "application/json");
    });

    server.Post("/api/query", [this](const httplib::Request& req, httplib::Response& res) {
      int k = 5;
      if (req.has_param("k")) {
        const auto text = req.get_param_value("k");
        if (text.empty() || text.size() > 6 ||
            !std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isdigit(c); }) ||
            (k = std::stoi(text)) < 1) {
          return json_error(res, 400, "bad_request", "k must be a positive integer");
        }
      }
      if (!req.has_file("image")) return json_error(res, 400, "bad_request", "multipart field 'image' is required");
      const auto& content = req.get_file_value("image").content;
      RgbImage img;
      try {
        img = decode_image(std::span(reinterpret_cast<const std::uint8_t*>(content.data()), content.size()));
      } catch (const Error& e) {
        return json_error(res, 400, "bad_request", e.what());
      }
      res.set_content(query_response(index, img, k).dump(), "application/json");
    });

    server.Get(R"(/api/images/(\d+))", [this](const httplib::Request& req, httplib::Response& res) {
      const auto id = entry_id(req);
      if (!id) return json_error(res, 404, "not_found", "no entry " + req.matches[1].str());
      const auto path = config.data_root / index.records[*id].path;
      std::ifstream in(path, std::ios::binary);
      if (!in) return json_error(res, 404, "not_found", "image file missing for entry " + std::to_string(*id));
      std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
      res.set_content(std::move(bytes), content_type_for(path));
    });

    server.Get(R"(/api/entries/(\d+)/curves)", [this](const httplib::Request& req, httplib::Response& res) {
      const auto id = entry_id(req);
      if (!id) return json_error(res, 404, "not_found", "no entry " + req.matches[1].str());
      res.set_content(entry_curves_response(index, *id).dump(), "application/json");
    });

    if (config.console_dir) server.set_mount_point("/", config.console_dir->string());
  }
};

RetrievalService::RetrievalService(Index index, ServiceConfig config)
    : impl_(std::make_unique<Impl>(std::move(index), std::move(config))) {}

RetrievalService::~RetrievalService() = default;

bool RetrievalService::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

int RetrievalService::bind_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }

bool RetrievalService::run() { return impl_->server.listen_after_bind(); }

void RetrievalService::stop() { impl_->server.stop(); }

void RetrievalService::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace thir
