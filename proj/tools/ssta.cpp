// ssta: generate desk-scale data, train the classifier, run the salient
// flow attack and its additive baseline, and score the results.

#include <CLI11.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>
#include <vector>

#include "ssta/attack.hpp"
#include "ssta/dataset.hpp"
#include "ssta/flow_io.hpp"
#include "ssta/image_io.hpp"
#include "ssta/manifest.hpp"
#include "ssta/metrics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitNumeric = 3;

bool g_verbose = false;

void vlog(const std::string& msg) {
  if (g_verbose) std::cerr << "[ssta] " << msg << "\n";
}

std::string zero_pad(int value, int width) {
  std::ostringstream os;
  os.width(width);
  os.fill('0');
  os << value;
  return os.str();
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ssta::io_error("cannot create directory: " + dir.string());
}

// ---------------------------------------------------------------------------
// attack config plumbing: CLI flags > config file > defaults

struct ConfigFlags {
  ssta::AttackConfig cfg;
  std::string config_file;
  std::string saliency = "ft";
  CLI::Option* opt_saliency = nullptr;
  std::map<std::string, CLI::Option*> options;

  void attach(CLI::App* app) {
    options["tau_init"] = app->add_option("--tau-init", cfg.tau_init, "Initial saliency threshold");
    options["tau_step"] = app->add_option("--tau-step", cfg.tau_step, "Threshold decrement per stage");
    options["tau_min"] = app->add_option("--tau-min", cfg.tau_min, "Threshold floor");
    options["xi_init"] = app->add_option("--xi-init", cfg.xi_init, "Initial flow budget (pixels)");
    options["xi_growth"] = app->add_option("--xi-growth", cfg.xi_growth, "Budget growth per stage");
    options["xi_max"] = app->add_option("--xi-max", cfg.xi_max, "Budget cap (pixels)");
    options["stage_iters"] = app->add_option("--stage-iters", cfg.stage_iters, "Iterations per stage");
    options["max_iters"] = app->add_option("--max-iters", cfg.max_iters, "Total iteration cap");
    options["kappa"] = app->add_option("--kappa", cfg.kappa, "Margin constant");
    options["lr"] = app->add_option("--lr", cfg.opt.learning_rate, "AdamW learning rate");
    options["beta1"] = app->add_option("--beta1", cfg.opt.beta1, "AdamW beta1");
    options["beta2"] = app->add_option("--beta2", cfg.opt.beta2, "AdamW beta2");
    options["adam_eps"] = app->add_option("--adam-eps", cfg.opt.eps, "AdamW epsilon");
    options["weight_decay"] = app->add_option("--weight-decay", cfg.opt.weight_decay, "AdamW weight decay");
    opt_saliency = app->add_option("--saliency", saliency, "Saliency method: ft, lc or imported")
                       ->check(CLI::IsMember({"ft", "lc", "imported"}));
    app->add_option("--config", config_file, "key=value config file (flags win)");
  }

  // Applies file values where no flag was given, then resolves the method.
  ssta::AttackConfig resolve() {
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      if (!in) throw ssta::io_error("cannot open config file: " + config_file);
      std::map<std::string, std::string> kv;
      std::string line;
      int lineno = 0;
      while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
          throw ssta::format_error("config line " + std::to_string(lineno) + " is not key=value: " +
                                   config_file);
        auto strip = [](std::string s) {
          const auto b = s.find_first_not_of(" \t\r");
          const auto e = s.find_last_not_of(" \t\r");
          return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        kv[strip(line.substr(0, eq))] = strip(line.substr(eq + 1));
      }
      auto apply_int = [&](const char* key, int& slot) {
        if (options[key]->count() == 0 && kv.count(key)) slot = std::stoi(kv[key]);
      };
      auto apply_double = [&](const char* key, double& slot) {
        if (options[key]->count() == 0 && kv.count(key)) slot = std::stod(kv[key]);
      };
      apply_int("tau_init", cfg.tau_init);
      apply_int("tau_step", cfg.tau_step);
      apply_int("tau_min", cfg.tau_min);
      apply_double("xi_init", cfg.xi_init);
      apply_double("xi_growth", cfg.xi_growth);
      apply_double("xi_max", cfg.xi_max);
      apply_int("stage_iters", cfg.stage_iters);
      apply_int("max_iters", cfg.max_iters);
      apply_double("kappa", cfg.kappa);
      apply_double("lr", cfg.opt.learning_rate);
      apply_double("beta1", cfg.opt.beta1);
      apply_double("beta2", cfg.opt.beta2);
      apply_double("adam_eps", cfg.opt.eps);
      apply_double("weight_decay", cfg.opt.weight_decay);
      if (opt_saliency->count() == 0 && kv.count("saliency_method")) saliency = kv["saliency_method"];
      for (const auto& [key, value] : kv) {
        (void)value;
        static const std::set<std::string> known = {
            "tau_init", "tau_step", "tau_min", "xi_init", "xi_growth", "xi_max",
            "stage_iters", "max_iters", "kappa", "lr", "beta1", "beta2",
            "adam_eps", "weight_decay", "saliency_method"};
        if (!known.count(key))
          throw ssta::format_error("unknown config key '" + key + "' in " + config_file);
      }
    }
    if (saliency == "ft")
      cfg.saliency_method = ssta::SaliencyMethod::kFT;
    else if (saliency == "lc")
      cfg.saliency_method = ssta::SaliencyMethod::kLC;
    else
      cfg.saliency_method = ssta::SaliencyMethod::kImported;
    cfg.validate();
    return cfg;
  }
};

// ---------------------------------------------------------------------------
// dataset directory layout

struct DiskDataset {
  ssta::Dataset ds;
  std::vector<std::string> names;        // generation order
  std::vector<int> train_idx, test_idx;  // from the split lists
};

void write_dataset(const ssta::Dataset& ds, const fs::path& dir) {
  ensure_dir(dir / "images");
  ensure_dir(dir / "masks");
  std::ofstream labels(dir / "labels.txt");
  std::ofstream train_list(dir / "train.txt");
  std::ofstream test_list(dir / "test.txt");
  if (!labels || !train_list || !test_list)
    throw ssta::io_error("cannot write dataset lists under " + dir.string());
  for (int i = 0; i < ds.size(); ++i) {
    const std::string name = "img_" + zero_pad(i, 5) + ".png";
    ssta::save_image(ds.images[static_cast<std::size_t>(i)], (dir / "images" / name).string());
    ssta::Image mask_img(ds.image_size, ds.image_size, 1);
    const auto& inside = ds.object_masks[static_cast<std::size_t>(i)].inside;
    for (int y = 0; y < ds.image_size; ++y)
      for (int x = 0; x < ds.image_size; ++x) mask_img(y, x) = inside(y, x) ? 1.0 : 0.0;
    ssta::save_image(mask_img, (dir / "masks" / ("mask_" + zero_pad(i, 5) + ".png")).string());
    labels << name << " " << ds.labels[static_cast<std::size_t>(i)] << "\n";
    (i < ds.train_count() ? train_list : test_list) << name << "\n";
  }
}

DiskDataset load_dataset(const fs::path& dir) {
  DiskDataset out;
  std::ifstream labels(dir / "labels.txt");
  if (!labels) throw ssta::io_error("missing dataset labels: " + (dir / "labels.txt").string());
  std::string name;
  int label;
  int max_label = 0;
  while (labels >> name >> label) {
    const ssta::Image img = ssta::load_image((dir / "images" / name).string());
    if (!out.ds.images.empty() && !img.same_shape(out.ds.images.front()))
      throw ssta::format_error("dataset images disagree in shape: " + name);
    out.ds.images.push_back(img);
    out.ds.labels.push_back(label);
    out.names.push_back(name);
    max_label = std::max(max_label, label);
  }
  if (out.ds.images.empty()) throw ssta::format_error("dataset is empty: " + dir.string());
  out.ds.image_size = out.ds.images.front().height;
  out.ds.num_classes = std::max(max_label + 1, 2);

  std::map<std::string, int> index;
  for (int i = 0; i < static_cast<int>(out.names.size()); ++i) index[out.names[static_cast<std::size_t>(i)]] = i;
  auto read_list = [&](const char* file, std::vector<int>& slot) {
    std::ifstream in(dir / file);
    if (!in) throw ssta::io_error("missing split list: " + (dir / file).string());
    std::string n;
    while (in >> n) {
      const auto it = index.find(n);
      if (it == index.end()) throw ssta::format_error("split entry not in labels.txt: " + n);
      slot.push_back(it->second);
    }
  };
  read_list("train.txt", out.train_idx);
  read_list("test.txt", out.test_idx);
  return out;
}

// ---------------------------------------------------------------------------
// commands

int cmd_gen_data(std::uint64_t seed, int count, int size, int classes, const std::string& out_dir) {
  const fs::path dir(out_dir);
  ensure_dir(dir);
  vlog("generating " + std::to_string(count) + " images");
  const ssta::Dataset ds = ssta::generate_dataset(seed, count, size, classes);
  write_dataset(ds, dir);

  json manifest = ssta::new_manifest("gen-data");
  manifest["config"] = {{"seed", seed}, {"count", count}, {"size", size}, {"classes", classes}};
  manifest["train_count"] = ds.train_count();
  manifest["test_count"] = ds.test_count();
  ssta::write_manifest(manifest, (dir / "manifest.json").string());
  std::cout << "wrote " << ds.size() << " images to " << out_dir << "\n";
  return kExitOk;
}

int cmd_train(const std::string& data_dir, const std::string& out_dir, const ssta::TrainConfig& cfg) {
  const DiskDataset data = load_dataset(data_dir);
  ensure_dir(out_dir);
  vlog("training on " + std::to_string(data.ds.train_count()) + " images");
  const ssta::TrainOutcome outcome = ssta::train(data.ds, cfg);
  const fs::path weights = fs::path(out_dir) / "weights.bin";
  ssta::save_weights(outcome.net, weights.string());

  json manifest = ssta::new_manifest("train");
  manifest["config"] = {{"epochs", cfg.epochs},       {"lr", cfg.learning_rate},
                        {"momentum", cfg.momentum},   {"batch_size", cfg.batch_size},
                        {"seed", cfg.seed},           {"noise_aug", cfg.noise_aug},
                        {"data_dir", data_dir}};
  manifest["train_accuracy"] = outcome.train_accuracy;
  manifest["test_accuracy"] = outcome.test_accuracy;
  manifest["final_loss"] = outcome.final_loss;
  manifest["weights"] = "weights.bin";
  ssta::write_manifest(manifest, (fs::path(out_dir) / "manifest.json").string());
  std::cout << "train accuracy " << outcome.train_accuracy << ", test accuracy "
            << outcome.test_accuracy << "\n";
  return kExitOk;
}

ssta::ImageRecord record_attack(const std::string& input_name, int label,
                                const ssta::Image& x, int pred_before,
                                const ssta::AttackResult& result) {
  ssta::ImageRecord rec;
  rec.input = input_name;
  rec.label = label;
  rec.pred_before = pred_before;
  rec.pred_after = result.predicted_class;
  rec.success = result.success;
  rec.iterations = result.iterations_used;
  rec.final_tau = result.final_tau;
  rec.final_xi = result.final_xi;
  rec.mask_area_fraction = ssta::mask_area_fraction(result.mask);
  rec.metrics = ssta::metric_report(x, result.x_adv);
  return rec;
}

int cmd_attack(const std::string& model_path, const std::string& input_path, int label,
               const std::string& out_dir, ConfigFlags& flags, const std::string& mask_path,
               double amplify) {
  const ssta::AttackConfig cfg = flags.resolve();
  const ssta::Network net = ssta::load_weights(model_path);
  ssta::Image x = ssta::load_image(input_path);
  if (x.height != net.input_h || x.width != net.input_w || x.channels != net.input_c) {
    vlog("resizing input to the network's native shape");
    if (x.channels != net.input_c)
      throw ssta::format_error("input channel count does not match the model");
    x = ssta::resize_bilinear(x, net.input_h, net.input_w);
  }

  ssta::Mask imported;
  const ssta::Mask* imported_ptr = nullptr;
  if (cfg.saliency_method == ssta::SaliencyMethod::kImported) {
    if (mask_path.empty()) throw std::invalid_argument("--saliency imported requires --mask");
    imported = ssta::load_mask(mask_path, x.height, x.width);
    imported_ptr = &imported;
  }

  const Eigen::VectorXd clean_logits = ssta::forward(net, x);
  const int inferred = ssta::predicted_class(clean_logits, label);
  const int y = label >= 0 ? label : inferred;
  const int pred_before = ssta::predicted_class(clean_logits, y);

  vlog("attacking label " + std::to_string(y));
  const ssta::AttackResult result = ssta::ssta_attack(net, x, y, cfg, imported_ptr);

  ensure_dir(out_dir);
  const std::string stem = fs::path(input_path).stem().string();
  const fs::path dir(out_dir);
  const std::string adv_name = stem + "_adv.png";
  const std::string flow_name = stem + "_flow.sstaflo";
  const std::string diff_name = stem + "_diff.png";
  ssta::save_image(result.x_adv, (dir / adv_name).string());
  ssta::save_flow(result.flow, (dir / flow_name).string());
  ssta::save_image(ssta::amplify_diff(x, result.x_adv, amplify), (dir / diff_name).string());

  ssta::ImageRecord rec = record_attack(fs::path(input_path).filename().string(), y, x,
                                        pred_before, result);
  rec.outputs = {{"adv", adv_name}, {"flow", flow_name}, {"diff", diff_name}};

  json manifest = ssta::new_manifest("attack");
  manifest["config"] = ssta::config_to_json(cfg);
  manifest["amplify"] = amplify;
  manifest["images"] = json::array({ssta::image_record_to_json(rec)});
  manifest["aggregate"] = ssta::aggregate_records({rec});
  ssta::write_manifest(manifest, (dir / "manifest.json").string());

  std::cout << (result.success ? "fooled" : "not fooled") << " after " << result.iterations_used
            << " iterations (tau " << result.final_tau << ", xi " << result.final_xi << ")\n";
  return kExitOk;
}

int cmd_attack_batch(const std::string& model_path, const std::string& data_dir,
                     const std::string& split, int limit, int workers,
                     const std::string& out_dir, ConfigFlags& flags, const std::string& baseline,
                     double pgd_eps, int pgd_steps, double pgd_step_size, bool save_images) {
  const ssta::AttackConfig cfg = flags.resolve();
  if (cfg.saliency_method == ssta::SaliencyMethod::kImported)
    throw std::invalid_argument("attack-batch supports ft or lc saliency only");
  if (workers < 1) throw std::invalid_argument("--workers must be >= 1");
  const ssta::Network net = ssta::load_weights(model_path);
  const DiskDataset data = load_dataset(data_dir);

  std::vector<int> pool;
  if (split == "train")
    pool = data.train_idx;
  else if (split == "test")
    pool = data.test_idx;
  else if (split == "all") {
    pool.resize(data.names.size());
    for (int i = 0; i < static_cast<int>(pool.size()); ++i) pool[static_cast<std::size_t>(i)] = i;
  } else {
    throw std::invalid_argument("--split must be train, test or all");
  }
  if (limit > 0 && limit < static_cast<int>(pool.size()))
    pool.resize(static_cast<std::size_t>(limit));
  if (pool.empty()) throw std::invalid_argument("empty split selection");

  struct PerImage {
    ssta::AttackResult attack;
    ssta::ImageRecord record;
    ssta::ImageRecord baseline_record;
  };
  std::vector<PerImage> results(pool.size());
  const bool run_pgd = baseline == "pgd";
  if (pgd_step_size <= 0.0) pgd_step_size = pgd_eps / 8.0;

  std::atomic<std::size_t> cursor{0};
  std::atomic<bool> failed{false};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  auto work = [&](int worker_id) {
    try {
      for (;;) {
        const std::size_t slot = cursor.fetch_add(1);
        if (slot >= pool.size() || failed.load()) break;
        const int idx = pool[slot];
        const ssta::Image& x = data.ds.images[static_cast<std::size_t>(idx)];
        const int y = data.ds.labels[static_cast<std::size_t>(idx)];
        const std::string& name = data.names[static_cast<std::size_t>(idx)];
        const int pred_before = ssta::predicted_class(ssta::forward(net, x), y);
        PerImage& out = results[slot];
        out.attack = ssta::ssta_attack(net, x, y, cfg);
        out.record = record_attack(name, y, x, pred_before, out.attack);
        if (run_pgd) {
          const ssta::AttackResult pgd = ssta::pgd_baseline(net, x, y, pgd_eps, pgd_steps,
                                                            pgd_step_size);
          out.baseline_record = record_attack(name, y, x, pred_before, pgd);
        }
      }
    } catch (...) {
      errors[static_cast<std::size_t>(worker_id)] = std::current_exception();
      failed.store(true);
    }
  };
  vlog("attacking " + std::to_string(pool.size()) + " images with " + std::to_string(workers) +
       " workers");
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (int t = 0; t < workers; ++t) threads.emplace_back(work, t);
    for (auto& t : threads) t.join();
  }
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);

  ensure_dir(out_dir);
  const fs::path dir(out_dir);
  if (save_images) ensure_dir(dir / "adv");
  std::vector<ssta::ImageRecord> records;
  std::vector<ssta::ImageRecord> baseline_records;
  records.reserve(results.size());
  for (std::size_t slot = 0; slot < results.size(); ++slot) {
    PerImage& r = results[slot];
    if (save_images) {
      const std::string adv_name =
          fs::path(r.record.input).stem().string() + "_adv.png";
      ssta::save_image(r.attack.x_adv, (dir / "adv" / adv_name).string());
      r.record.outputs["adv"] = "adv/" + adv_name;
    }
    records.push_back(r.record);
    if (run_pgd) baseline_records.push_back(r.baseline_record);
  }

  json manifest = ssta::new_manifest("attack-batch");
  manifest["config"] = ssta::config_to_json(cfg);
  manifest["split"] = split;
  manifest["workers"] = workers;
  json images = json::array();
  for (const auto& rec : records) images.push_back(ssta::image_record_to_json(rec));
  manifest["images"] = images;
  manifest["aggregate"] = ssta::aggregate_records(records);
  if (run_pgd) {
    json base;
    base["method"] = "pgd";
    base["eps"] = pgd_eps;
    base["steps"] = pgd_steps;
    base["step_size"] = pgd_step_size;
    json bimages = json::array();
    for (const auto& rec : baseline_records) bimages.push_back(ssta::image_record_to_json(rec));
    base["images"] = bimages;
    base["aggregate"] = ssta::aggregate_records(baseline_records);
    manifest["baseline"] = base;
  }
  ssta::write_manifest(manifest, (dir / "manifest.json").string());

  const json& agg = manifest["aggregate"];
  std::cout << "attack success rate " << agg["attack_success_rate"] << " over " << records.size()
            << " images\n";
  if (run_pgd)
    std::cout << "pgd success rate " << manifest["baseline"]["aggregate"]["attack_success_rate"]
              << " at eps " << pgd_eps << "\n";
  return kExitOk;
}

int cmd_saliency(const std::string& input_path, const std::string& method,
                 std::vector<int> taus, const std::string& out_dir) {
  const ssta::Image img = ssta::load_image(input_path);
  ssta::SaliencyMap map;
  if (method == "ft")
    map = ssta::ft_saliency(img);
  else if (method == "lc")
    map = ssta::lc_saliency(img);
  else
    throw std::invalid_argument("--method must be ft or lc");

  ensure_dir(out_dir);
  const fs::path dir(out_dir);
  ssta::Image map_img(map.height, map.width, 1);
  map_img.planes[0] = map.scores;
  ssta::save_image(map_img, (dir / "map.png").string());

  json manifest = ssta::new_manifest("saliency");
  manifest["config"] = {{"method", method}, {"input", fs::path(input_path).filename().string()}};
  json mask_info = json::array();
  if (taus.empty()) taus.push_back(250);
  for (int tau : taus) {
    const ssta::Mask mask = ssta::threshold_mask(map, tau);
    ssta::Image mask_img(map.height, map.width, 1);
    for (int y = 0; y < map.height; ++y)
      for (int x = 0; x < map.width; ++x) mask_img(y, x) = mask.inside(y, x) ? 1.0 : 0.0;
    const std::string name = "mask_tau" + std::to_string(tau) + ".png";
    ssta::save_image(mask_img, (dir / name).string());
    mask_info.push_back({{"tau", tau},
                         {"file", name},
                         {"area_fraction", ssta::mask_area_fraction(mask)}});
  }
  manifest["map"] = "map.png";
  manifest["masks"] = mask_info;
  ssta::write_manifest(manifest, (dir / "manifest.json").string());
  std::cout << "wrote saliency map and " << taus.size() << " masks to " << out_dir << "\n";
  return kExitOk;
}

int cmd_metrics(const std::string& ref_path, const std::string& test_path,
                const std::string& out_path) {
  const ssta::Image ref = ssta::load_image(ref_path);
  const ssta::Image test = ssta::load_image(test_path);
  const ssta::MetricReport report = ssta::metric_report(ref, test);
  json j = ssta::new_manifest("metrics");
  j["ref"] = fs::path(ref_path).filename().string();
  j["test"] = fs::path(test_path).filename().string();
  j["metrics"] = ssta::metric_report_to_json(report);
  std::cout << j.dump(2) << "\n";
  if (!out_path.empty()) ssta::write_manifest(j, out_path);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"salient spatial-transform adversarial attack toolkit"};
  app.require_subcommand(1);
  app.add_flag("--verbose", g_verbose, "chatty stderr logging");

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate the synthetic shapes dataset");
  std::uint64_t gen_seed = 1;
  int gen_count = 1000, gen_size = 64, gen_classes = 4;
  std::string gen_out;
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--count", gen_count, "number of images")->check(CLI::PositiveNumber);
  gen->add_option("--size", gen_size, "image side length")->check(CLI::Range(16, 512));
  gen->add_option("--classes", gen_classes, "shape classes")->check(CLI::Range(4, 10));
  gen->add_option("--out-dir", gen_out, "output directory")->required();

  // train
  auto* tr = app.add_subcommand("train", "train the desk classifier");
  std::string tr_data, tr_out = ".";
  ssta::TrainConfig tr_cfg;
  tr->add_option("--data-dir", tr_data, "dataset directory from gen-data")->required();
  tr->add_option("--out-dir", tr_out, "output directory");
  tr->add_option("--epochs", tr_cfg.epochs, "training epochs")->check(CLI::NonNegativeNumber);
  tr->add_option("--lr", tr_cfg.learning_rate, "learning rate");
  tr->add_option("--momentum", tr_cfg.momentum, "SGD momentum");
  tr->add_option("--batch", tr_cfg.batch_size, "batch size")->check(CLI::PositiveNumber);
  tr->add_option("--seed", tr_cfg.seed, "training seed");
  tr->add_option("--noise-aug", tr_cfg.noise_aug, "uniform training-noise amplitude");

  // attack
  auto* at = app.add_subcommand("attack", "attack a single image");
  std::string at_model, at_input, at_out = ".", at_mask;
  int at_label = -1;
  double at_amplify = 30.0;
  ConfigFlags at_flags;
  at->add_option("--model", at_model, "SSTANET1 weights file")->required();
  at->add_option("--input", at_input, "image to attack")->required();
  at->add_option("--label", at_label, "true label (defaults to the prediction)");
  at->add_option("--out-dir", at_out, "output directory");
  at->add_option("--mask", at_mask, "imported mask file (with --saliency imported)");
  at->add_option("--amplify", at_amplify, "difference magnification factor");
  at_flags.attach(at);

  // attack-batch
  auto* ab = app.add_subcommand("attack-batch", "attack a dataset split");
  std::string ab_model, ab_data, ab_split = "test", ab_out = ".", ab_baseline = "none";
  int ab_limit = 0, ab_workers = 1, ab_pgd_steps = 40;
  double ab_pgd_eps = 4.0 / 255.0, ab_pgd_step = 0.0;
  bool ab_no_images = false;
  ConfigFlags ab_flags;
  ab->add_option("--model", ab_model, "SSTANET1 weights file")->required();
  ab->add_option("--data-dir", ab_data, "dataset directory")->required();
  ab->add_option("--split", ab_split, "train, test or all");
  ab->add_option("--limit", ab_limit, "attack only the first N images (0 = all)");
  ab->add_option("--workers", ab_workers, "parallel workers");
  ab->add_option("--out-dir", ab_out, "output directory");
  ab->add_option("--baseline", ab_baseline, "also run a baseline: none or pgd")
      ->check(CLI::IsMember({"none", "pgd"}));
  ab->add_option("--pgd-eps", ab_pgd_eps, "PGD intensity budget");
  ab->add_option("--pgd-steps", ab_pgd_steps, "PGD iterations");
  ab->add_option("--pgd-step-size", ab_pgd_step, "PGD step size (0 = eps/8)");
  ab->add_flag("--no-images", ab_no_images, "skip writing adversarial images");
  ab_flags.attach(ab);

  // saliency
  auto* sal = app.add_subcommand("saliency", "inspect saliency maps and masks");
  std::string sal_input, sal_method = "ft", sal_out = ".";
  std::vector<int> sal_taus;
  sal->add_option("--input", sal_input, "image file")->required();
  sal->add_option("--method", sal_method, "ft or lc");
  sal->add_option("--tau", sal_taus, "threshold list")->check(CLI::Range(0, 255));
  sal->add_option("--out-dir", sal_out, "output directory");

  // metrics
  auto* met = app.add_subcommand("metrics", "score an image pair");
  std::string met_ref, met_test, met_out;
  met->add_option("--ref", met_ref, "reference image")->required();
  met->add_option("--test", met_test, "image under test")->required();
  met->add_option("--out", met_out, "also write the report to a file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(gen_seed, gen_count, gen_size, gen_classes, gen_out);
    if (tr->parsed()) return cmd_train(tr_data, tr_out, tr_cfg);
    if (at->parsed())
      return cmd_attack(at_model, at_input, at_label, at_out, at_flags, at_mask, at_amplify);
    if (ab->parsed())
      return cmd_attack_batch(ab_model, ab_data, ab_split, ab_limit, ab_workers, ab_out, ab_flags,
                              ab_baseline, ab_pgd_eps, ab_pgd_steps, ab_pgd_step, !ab_no_images);
    if (sal->parsed()) return cmd_saliency(sal_input, sal_method, sal_taus, sal_out);
    if (met->parsed()) return cmd_metrics(met_ref, met_test, met_out);
  } catch (const ssta::io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ssta::format_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ssta::numeric_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitUsage;
}
