#include <filesystem>
#include <thread>

#include "decompnet/app/commands.hpp"
#include "decompnet/app/render.hpp"
#include "decompnet/app/server.hpp"
#include "decompnet/branch.hpp"
#include "decompnet/data_io.hpp"
#include "decompnet/serialize.hpp"
#include "doctest.h"
#include "httplib.h"
#include "json.hpp"

using namespace decompnet;
using namespace decompnet::app;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

Dataset image_dataset() {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  std::vector<Vector> raw;
  for (int k = 0; k < 8; ++k) {
    Vector v(6 * 5);
    for (double& x : v) x = 100.0 + 20.0 * nd(rng);
    raw.push_back(v);
  }
  return standardize(raw, ImageShape{6, 5});
}

DecomposerModel small_model() {
  ModelConfig c;
  c.n_branches = 3;
  c.branch.kind = BranchKind::LinearAE;
  c.branch.code_width = 2;
  c.sweeps = 2;
  c.seed = 4;
  return init_model(c, 30);
}

// Serves on an ephemeral port for the lifetime of the object.
struct Running {
  StudioServer server;
  int port = -1;
  std::thread thread;
  Running(DecomposerModel m, Dataset d, std::string static_dir = {})
      : server(std::move(m), std::move(d), std::move(static_dir)) {
    port = server.bind_any("127.0.0.1");
    REQUIRE(port > 0);
    thread = std::thread([this] { server.listen(); });
    server.wait_until_ready();
  }
  ~Running() {
    server.stop();
    thread.join();
  }
};

}  // namespace

TEST_CASE("studio api") {
  const Dataset ds = image_dataset();
  const DecomposerModel model = small_model();
  Running r(model, ds);
  httplib::Client cli("127.0.0.1", r.port);

  auto meta = cli.Get("/api/meta");
  REQUIRE(meta);
  CHECK(meta->status == 200);
  const json m = json::parse(meta->body);
  CHECK(m["n_branches"] == 3);
  CHECK(m["d"] == 30);
  CHECK(m["image_shape"] == json::array({6, 5}));
  CHECK(m["n_samples"] == 8);
  CHECK(m["schema_version"] == kSchemaVersion);

  auto sample = cli.Get("/api/sample/2");
  REQUIRE(sample);
  CHECK(sample->status == 200);
  const json s = json::parse(sample->body);
  CHECK(s["original"].get<Vector>() == ds.samples[2].x);
  CHECK(s["stats"]["mu"].get<Vector>() == ds.stats.mean);
  CHECK(s["stats"]["s"].get<Vector>() == ds.stats.scale);
  const auto comps = s["components"].get<std::vector<Vector>>();
  const auto sigma = s["sigma"].get<Vector>();
  const auto recon = s["reconstruction"].get<Vector>();
  REQUIRE(comps.size() == 3);
  for (std::size_t p = 0; p < 30; ++p) {
    double acc = 0.0;
    for (std::size_t i = 0; i < 3; ++i) acc += sigma[i] * comps[i][p];
    CHECK(std::abs(acc - recon[p]) <= 1e-10);
  }
  // Deterministic responses.
  CHECK(cli.Get("/api/sample/2")->body == sample->body);

  CHECK(cli.Get("/api/sample/99")->status == 404);
  CHECK(json::parse(cli.Get("/api/sample/99")->body).contains("error"));
  CHECK(cli.Get("/api/sample/abc")->status == 400);
  CHECK(cli.Get("/api/nothing")->status == 404);
  CHECK(json::parse(cli.Get("/api/nothing")->body).contains("error"));

  auto post = [&](const std::string& body) { return cli.Post("/api/synth", body, "application/json"); };
  CHECK(post("not json")->status == 400);
  CHECK(post(R"({"sample": 0})")->status == 400);
  CHECK(post(R"({"sample": 0, "sigma": [1, 2]})")->status == 400);
  CHECK(post(R"({"sample": 0, "sigma": [1, -2, 1]})")->status == 400);
  CHECK(post(R"({"sample": 0, "sigma": [1, "x", 1]})")->status == 400);
  CHECK(post(R"({"sample": 42, "sigma": [1, 1, 1]})")->status == 404);
  CHECK(json::parse(post("[]")->body).contains("error"));

  auto ok = post(R"({"sample": 1, "sigma": [0.5, 1.0, 2.0]})");
  REQUIRE(ok);
  CHECK(ok->status == 200);
  const json img = json::parse(ok->body);
  CHECK(img["image"].size() == 30);

  auto root = cli.Get("/");
  REQUIRE(root);
  CHECK(root->status == 200);
  CHECK(root->body.find("<html") != std::string::npos);
}

TEST_CASE("cli synth and http synth agree") {
  const fs::path dir = fs::temp_directory_path() / "decompnet_parity";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const Dataset ds = image_dataset();
  const DecomposerModel model = small_model();
  save_dataset(ds, dir / "ds.json");
  export_model(model, dir / "m.json");

  const Vector sigma{0.25, 1.5, 0.0};
  RunConfig rc;
  rc.model = (dir / "m.json").string();
  rc.data = (dir / "ds.json").string();
  rc.out = (dir / "s.pgm").string();
  rc.id = 5;
  rc.sigma = "0.25,1.5,0";
  std::ostringstream sink;
  REQUIRE(cmd_synth(rc, sink) == 0);
  const GrayImage cli_img = load_pgm(rc.out);
  const json side = json::parse(read_text_file(dir / "s.json"));

  Running r(load_model(dir / "m.json"), load_dataset(dir / "ds.json"));
  httplib::Client cli("127.0.0.1", r.port);
  const json body{{"sample", 5}, {"sigma", sigma}};
  auto res = cli.Post("/api/synth", body.dump(), "application/json");
  REQUIRE(res);
  const json http = json::parse(res->body);
  const auto pixels = http["image"].get<std::vector<int>>();
  REQUIRE(pixels.size() == cli_img.pixels.size());
  for (std::size_t p = 0; p < pixels.size(); ++p) CHECK(pixels[p] == cli_img.pixels[p]);
  CHECK(http["scale"].get<double>() == side["render"]["synth"]["scale"].get<double>());
  CHECK(http["offset"].get<double>() == side["render"]["synth"]["offset"].get<double>());
  fs::remove_all(dir);
}

TEST_CASE("static bundle and busy port") {
  const fs::path dir = fs::temp_directory_path() / "decompnet_static";
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_text_file(dir / "index.html", "<html>studio</html>");
  Running r(small_model(), image_dataset(), dir.string());
  httplib::Client cli("127.0.0.1", r.port);
  auto res = cli.Get("/");
  REQUIRE(res);
  CHECK(res->body == "<html>studio</html>");
  CHECK(cli.Get("/api/meta")->status == 200);

  StudioServer second(small_model(), image_dataset());
  CHECK_FALSE(second.bind("127.0.0.1", r.port));

  save_dataset(image_dataset(), dir / "ds.json");
  export_model(small_model(), dir / "m.json");
  RunConfig rc;
  rc.model = (dir / "m.json").string();
  rc.data = (dir / "ds.json").string();
  rc.port = r.port;
  std::ostringstream out, err;
  CHECK(run_command([&] { return cmd_serve(rc, out); }, err) == 2);
  CHECK(err.str().rfind("error: usage: cannot bind", 0) == 0);
  fs::remove_all(dir);
}
