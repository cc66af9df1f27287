// End-to-end checks of the ssta binary: exit codes, artifact layout,
// manifest consistency and seeded reproducibility.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <vector>

#include "ssta/image_io.hpp"
#include "ssta/manifest.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kBin = SSTA_CLI_PATH;

int run(const std::string& args) {
  const std::string cmd = std::string(kBin) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<char> read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool trees_identical(const fs::path& a, const fs::path& b) {
  std::vector<fs::path> rel_a, rel_b;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) rel_a.push_back(fs::relative(e.path(), a));
  for (const auto& e : fs::recursive_directory_iterator(b))
    if (e.is_regular_file()) rel_b.push_back(fs::relative(e.path(), b));
  std::sort(rel_a.begin(), rel_a.end());
  std::sort(rel_b.begin(), rel_b.end());
  if (rel_a != rel_b) return false;
  for (const auto& rel : rel_a)
    if (read_all(a / rel) != read_all(b / rel)) return false;
  return true;
}

// Shared tiny fixture: dataset + trained model, built once per process.
struct Fixture {
  fs::path data;
  fs::path model_dir;
  fs::path model;
};

const Fixture& fixture() {
  static const Fixture fx = [] {
    Fixture f;
    f.data = fresh_dir("ssta_cli_data");
    REQUIRE(run("gen-data --seed 7 --count 80 --size 32 --classes 4 --out-dir " +
                f.data.string()) == 0);
    f.model_dir = fresh_dir("ssta_cli_model");
    REQUIRE(run("train --data-dir " + f.data.string() + " --out-dir " + f.model_dir.string() +
                " --epochs 8 --seed 5") == 0);
    f.model = f.model_dir / "weights.bin";
    return f;
  }();
  return fx;
}

}  // namespace

TEST_CASE("usage errors exit with code 1") {
  CHECK(run("") == 1);
  CHECK(run("gen-data") == 1);                       // missing --out-dir
  CHECK(run("gen-data --count 0 --out-dir /tmp/x") == 1);
  CHECK(run("frobnicate") == 1);
  CHECK(run("attack-batch --model m --data-dir d --split nope --out-dir /tmp/x") == 1);
}

TEST_CASE("missing files exit with code 2") {
  const auto dir = fresh_dir("ssta_cli_io");
  CHECK(run("train --data-dir /nonexistent --out-dir " + dir.string()) == 2);
  CHECK(run("metrics --ref /nonexistent/a.png --test /nonexistent/b.png") == 2);
  CHECK(run("attack --model /nonexistent/w.bin --input /nonexistent/i.png") == 2);
}

TEST_CASE("gen-data is reproducible byte for byte") {
  const auto a = fresh_dir("ssta_cli_gen_a");
  const auto b = fresh_dir("ssta_cli_gen_b");
  const std::string flags = "gen-data --seed 7 --count 24 --size 32 --classes 4 --out-dir ";
  REQUIRE(run(flags + a.string()) == 0);
  REQUIRE(run(flags + b.string()) == 0);
  CHECK(trees_identical(a, b));
  CHECK(fs::exists(a / "train.txt"));
  CHECK(fs::exists(a / "test.txt"));
  // 80/20 split lists
  int train_lines = 0, test_lines = 0;
  std::string line;
  std::ifstream tr(a / "train.txt");
  while (std::getline(tr, line)) ++train_lines;
  std::ifstream te(a / "test.txt");
  while (std::getline(te, line)) ++test_lines;
  CHECK(train_lines == 19);  // 24 * 4 / 5
  CHECK(test_lines == 5);
}

TEST_CASE("train writes weights and a manifest, reproducibly") {
  const Fixture& fx = fixture();
  CHECK(fs::exists(fx.model));
  const json manifest = ssta::load_and_verify_manifest((fx.model_dir / "manifest.json").string());
  CHECK(manifest.at("command") == "train");
  CHECK(manifest.at("test_accuracy").get<double>() >= 0.0);

  const auto again = fresh_dir("ssta_cli_model2");
  REQUIRE(run("train --data-dir " + fx.data.string() + " --out-dir " + again.string() +
              " --epochs 8 --seed 5") == 0);
  CHECK(read_all(fx.model) == read_all(again / "weights.bin"));
}

TEST_CASE("attack writes the artifact trio and a coherent manifest") {
  const Fixture& fx = fixture();
  const auto out = fresh_dir("ssta_cli_attack");
  const std::string input = (fx.data / "images" / "img_00070.png").string();
  REQUIRE(run("attack --model " + fx.model.string() + " --input " + input +
              " --max-iters 120 --out-dir " + out.string()) == 0);
  CHECK(fs::exists(out / "img_00070_adv.png"));
  CHECK(fs::exists(out / "img_00070_flow.sstaflo"));
  CHECK(fs::exists(out / "img_00070_diff.png"));
  const json manifest = ssta::load_and_verify_manifest((out / "manifest.json").string());
  CHECK(manifest.at("schema") == "ssta-manifest/1");
  CHECK(manifest.at("images").size() == 1);
  const json& rec = manifest.at("images").at(0);
  CHECK(rec.at("input") == "img_00070.png");
  CHECK(rec.at("metrics").contains("mse"));

  // same command, same bytes
  const auto out2 = fresh_dir("ssta_cli_attack2");
  REQUIRE(run("attack --model " + fx.model.string() + " --input " + input +
              " --max-iters 120 --out-dir " + out2.string()) == 0);
  CHECK(trees_identical(out, out2));
}

TEST_CASE("attack honors config file precedence") {
  const Fixture& fx = fixture();
  const auto out = fresh_dir("ssta_cli_cfg");
  const fs::path cfg = out / "attack.cfg";
  {
    std::ofstream f(cfg);
    f << "# comment line\n";
    f << "max_iters = 5\n";
    f << "tau_init = 200\n";
  }
  const std::string input = (fx.data / "images" / "img_00071.png").string();
  REQUIRE(run("attack --model " + fx.model.string() + " --input " + input + " --config " +
              cfg.string() + " --tau-init 240 --out-dir " + out.string()) == 0);
  const json manifest = ssta::load_and_verify_manifest((out / "manifest.json").string());
  CHECK(manifest.at("config").at("max_iters") == 5);    // from file
  CHECK(manifest.at("config").at("tau_init") == 240);   // flag wins

  std::ofstream bad(cfg);
  bad << "who_knows = 1\n";
  bad.close();
  CHECK(run("attack --model " + fx.model.string() + " --input " + input + " --config " +
            cfg.string() + " --out-dir " + out.string()) == 2);
}

TEST_CASE("attack-batch aggregates are worker-count independent") {
  const Fixture& fx = fixture();
  const auto w1 = fresh_dir("ssta_cli_batch1");
  const auto w4 = fresh_dir("ssta_cli_batch4");
  const std::string base = "attack-batch --model " + fx.model.string() + " --data-dir " +
                           fx.data.string() + " --split test --limit 6 --max-iters 60 ";
  REQUIRE(run(base + "--workers 1 --out-dir " + w1.string()) == 0);
  REQUIRE(run(base + "--workers 4 --out-dir " + w4.string()) == 0);
  CHECK(trees_identical(w1, w4));

  const json manifest = ssta::load_and_verify_manifest((w1 / "manifest.json").string());
  CHECK(manifest.at("images").size() == 6);
  for (const auto& rec : manifest.at("images")) {
    const std::string adv = rec.at("outputs").at("adv").get<std::string>();
    CHECK(fs::exists(w1 / adv));  // manifest paths are relative to the run dir
  }
}

TEST_CASE("attack-batch with the pgd baseline reports both aggregates") {
  const Fixture& fx = fixture();
  const auto out = fresh_dir("ssta_cli_batch_pgd");
  REQUIRE(run("attack-batch --model " + fx.model.string() + " --data-dir " + fx.data.string() +
              " --split test --limit 4 --max-iters 40 --baseline pgd --pgd-eps 0.0313 "
              "--no-images --out-dir " +
              out.string()) == 0);
  const json manifest = ssta::load_and_verify_manifest((out / "manifest.json").string());
  CHECK(manifest.at("aggregate").contains("metrics_mean_fooled"));
  CHECK(manifest.at("baseline").at("method") == "pgd");
  CHECK(manifest.at("baseline").at("images").size() == 4);
  CHECK(manifest.at("baseline").at("aggregate").contains("metrics_mean_fooled"));
}

TEST_CASE("saliency emits a map and nested masks") {
  const Fixture& fx = fixture();
  const auto out = fresh_dir("ssta_cli_sal");
  const std::string input = (fx.data / "images" / "img_00003.png").string();
  REQUIRE(run("saliency --input " + input + " --method ft --tau 250 --tau 150 --tau 50 "
              "--out-dir " + out.string()) == 0);
  CHECK(fs::exists(out / "map.png"));
  const ssta::Image m250 = ssta::load_image((out / "mask_tau250.png").string());
  const ssta::Image m150 = ssta::load_image((out / "mask_tau150.png").string());
  const ssta::Image m50 = ssta::load_image((out / "mask_tau50.png").string());
  // nesting: every pixel set at a high tau stays set at a lower tau
  for (int y = 0; y < m250.height; ++y)
    for (int x = 0; x < m250.width; ++x) {
      if (m250(y, x) > 0.5) CHECK(m150(y, x) > 0.5);
      if (m150(y, x) > 0.5) CHECK(m50(y, x) > 0.5);
    }

  CHECK(run("saliency --input " + input + " --method grad-cam --out-dir " + out.string()) == 1);
}

TEST_CASE("metrics prints ideal values for identical pairs") {
  const Fixture& fx = fixture();
  const auto out = fresh_dir("ssta_cli_metrics");
  const std::string input = (fx.data / "images" / "img_00001.png").string();
  const fs::path report_path = out / "report.json";
  REQUIRE(run("metrics --ref " + input + " --test " + input + " --out " + report_path.string()) ==
          0);
  std::ifstream in(report_path);
  REQUIRE(in.good());
  json report;
  in >> report;
  CHECK(report.at("metrics").at("mse") == 0.0);
  CHECK(report.at("metrics").at("psnr").is_null());
  CHECK(report.at("metrics").at("ssim") == 1.0);
}
