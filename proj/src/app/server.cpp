#include "decompnet/app/server.hpp"

#include <atomic>

#include "decompnet/app/render.hpp"
#include "decompnet/serialize.hpp"
#include "httplib.h"
#include "json.hpp"

namespace decompnet::app {
namespace {

using json = nlohmann::json;

constexpr const char* kPlaceholder =
    "<!doctype html><html><head><meta charset=\"utf-8\"><title>decompnet</title></head>"
    "<body><p>No static bundle configured. The JSON API is under /api/.</p></body></html>";

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, json{{"error", message}});
}

std::optional<std::size_t> find_sample(const Dataset& ds, std::int64_t id) {
  for (std::size_t k = 0; k < ds.size(); ++k)
    if (ds.samples[k].id == id) return k;
  return std::nullopt;
}

json shape_json(const Dataset& ds) {
  if (!ds.image_shape) return nullptr;
  return json::array({ds.image_shape->height, ds.image_shape->width});
}

}  // namespace

struct StudioServer::Impl {
  DecomposerModel model;
  Dataset dataset;
  std::string static_dir;
  httplib::Server http;
  bool bound = false;

  void routes() {
    // SO_REUSEADDR only: the library default adds SO_REUSEPORT, which would let
    // a second server share a busy port silently.
    http.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
    });

    http.Get("/api/meta", [this](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200,
                json{{"n_branches", model.n_branches()},
                     {"d", model.dim},
                     {"image_shape", shape_json(dataset)},
                     {"n_samples", dataset.size()},
                     {"schema_version", kSchemaVersion}});
    });

    http.Get(R"(/api/sample/(-?\d+))", [this](const httplib::Request& req, httplib::Response& res) {
      std::int64_t id;
      try {
        id = std::stoll(req.matches[1]);
      } catch (const std::exception&) {
        return send_error(res, 400, "sample id is not an integer");
      }
      const auto idx = find_sample(dataset, id);
      if (!idx) return send_error(res, 404, "unknown sample id " + std::to_string(id));
      const Sample& s = dataset.samples[*idx];
      const Decomposition dec = decompose_sample(model, s.x);
      json comps = json::array();
      for (std::size_t i = 0; i < model.n_branches(); ++i) comps.push_back(dec.components.column(i));
      send_json(res, 200,
                json{{"sample", id},
                     {"original", s.x},
                     {"components", std::move(comps)},
                     {"sigma", dec.sigma},
                     {"reconstruction", dec.reconstruction},
                     {"stats", {{"mu", dataset.stats.mean}, {"s", dataset.stats.scale}}},
                     {"image_shape", shape_json(dataset)}});
    });
    http.Get(R"(/api/sample/(.*))", [](const httplib::Request&, httplib::Response& res) {
      send_error(res, 400, "sample id is not an integer");
    });

    http.Post("/api/synth", [this](const httplib::Request& req, httplib::Response& res) {
      const json body = json::parse(req.body, nullptr, false);
      if (body.is_discarded() || !body.is_object()) return send_error(res, 400, "body is not a JSON object");
      if (!body.contains("sample") || !body["sample"].is_number_integer())
        return send_error(res, 400, "'sample' must be an integer");
      if (!body.contains("sigma") || !body["sigma"].is_array())
        return send_error(res, 400, "'sigma' must be an array");
      const auto id = body["sample"].get<std::int64_t>();
      const auto idx = find_sample(dataset, id);
      if (!idx) return send_error(res, 404, "unknown sample id " + std::to_string(id));
      SigmaVector sigma;
      for (const auto& v : body["sigma"]) {
        if (!v.is_number()) return send_error(res, 400, "'sigma' entries must be numbers");
        sigma.push_back(v.get<double>());
      }
      if (sigma.size() != model.n_branches())
        return send_error(res, 400, "'sigma' must have " + std::to_string(model.n_branches()) + " entries");
      for (double v : sigma)
        if (!(v >= 0.0)) return send_error(res, 400, "'sigma' entries must be ≥ 0");
      const Decomposition dec = decompose_sample(model, dataset.samples[*idx].x);
      const Rendered r = render_synthesis(dataset, dec.components, sigma);
      send_json(res, 200, json{{"image", r.pixels}, {"scale", r.scale}, {"offset", r.offset}});
    });

    // Unmatched routes and handler failures still answer with a JSON body.
    http.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty()) send_error(res, res.status, res.status == 404 ? "not found" : "request failed");
    });
    http.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      std::string what = "internal error";
      try {
        if (ep) std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        what = e.what();
      } catch (...) {
      }
      send_error(res, 500, what);
    });

    if (!static_dir.empty() && http.set_mount_point("/", static_dir)) return;
    http.Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(kPlaceholder, "text/html");
    });
  }
};

StudioServer::StudioServer(DecomposerModel model, Dataset dataset, std::string static_dir)
    : impl_(std::make_unique<Impl>()) {
  check_model(model);
  check_dataset(dataset);
  impl_->model = std::move(model);
  impl_->dataset = std::move(dataset);
  impl_->static_dir = std::move(static_dir);
  impl_->routes();
}

StudioServer::~StudioServer() { stop(); }

bool StudioServer::bind(const std::string& host, int port) {
  impl_->bound = impl_->http.bind_to_port(host, port);
  return impl_->bound;
}

int StudioServer::bind_any(const std::string& host) {
  const int port = impl_->http.bind_to_any_port(host);
  impl_->bound = port > 0;
  return impl_->bound ? port : -1;
}

bool StudioServer::listen() {
  if (!impl_->bound) return false;
  return impl_->http.listen_after_bind();
}

void StudioServer::stop() {
  if (impl_->http.is_running()) impl_->http.stop();
}

void StudioServer::wait_until_ready() const { impl_->http.wait_until_ready(); }

}  // namespace decompnet::app
