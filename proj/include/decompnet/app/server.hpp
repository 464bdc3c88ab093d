#pragma once

#include <memory>
#include <string>

#include "decompnet/model.hpp"

namespace decompnet::app {

/// HTTP/JSON front end for the sigma-editing panel.
///   GET  /api/meta
///   GET  /api/sample/{id}
///   POST /api/synth        {"sample": id, "sigma": [N]}
///   GET  /                 static bundle from static_dir, or a placeholder page
/// Errors are {"error": "..."} with 400 (malformed) or 404 (unknown id).
class StudioServer {
 public:
  StudioServer(DecomposerModel model, Dataset dataset, std::string static_dir = {});
  ~StudioServer();
  StudioServer(const StudioServer&) = delete;
  StudioServer& operator=(const StudioServer&) = delete;

  /// Returns false when the port cannot be bound.
  bool bind(const std::string& host, int port);
  /// Binds an ephemeral port and returns it (negative on failure).
  int bind_any(const std::string& host);
  /// Blocks until stop().
  bool listen();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace decompnet::app
