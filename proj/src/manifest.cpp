#include "ssta/manifest.hpp"

#include <cmath>
#include <fstream>

namespace ssta {

namespace {

std::string method_name(SaliencyMethod m) {
  switch (m) {
    case SaliencyMethod::kFT: return "ft";
    case SaliencyMethod::kLC: return "lc";
    case SaliencyMethod::kImported: return "imported";
  }
  return "ft";
}

SaliencyMethod method_from_name(const std::string& s) {
  if (s == "ft") return SaliencyMethod::kFT;
  if (s == "lc") return SaliencyMethod::kLC;
  if (s == "imported") return SaliencyMethod::kImported;
  throw format_error("unknown saliency method: " + s);
}

void put_metric(nlohmann::json& j, const char* name, const std::optional<double>& v) {
  if (!v) return;
  if (std::isinf(*v))
    j[name] = nullptr;
  else
    j[name] = *v;
}

}  // namespace

nlohmann::json config_to_json(const AttackConfig& cfg) {
  return nlohmann::json{{"tau_init", cfg.tau_init},
                        {"tau_step", cfg.tau_step},
                        {"tau_min", cfg.tau_min},
                        {"xi_init", cfg.xi_init},
                        {"xi_growth", cfg.xi_growth},
                        {"xi_max", cfg.xi_max},
                        {"stage_iters", cfg.stage_iters},
                        {"max_iters", cfg.max_iters},
                        {"kappa", cfg.kappa},
                        {"lr", cfg.opt.learning_rate},
                        {"beta1", cfg.opt.beta1},
                        {"beta2", cfg.opt.beta2},
                        {"adam_eps", cfg.opt.eps},
                        {"weight_decay", cfg.opt.weight_decay},
                        {"saliency_method", method_name(cfg.saliency_method)}};
}

AttackConfig config_from_json(const nlohmann::json& j) {
  AttackConfig cfg;
  cfg.tau_init = j.at("tau_init").get<int>();
  cfg.tau_step = j.at("tau_step").get<int>();
  cfg.tau_min = j.at("tau_min").get<int>();
  cfg.xi_init = j.at("xi_init").get<double>();
  cfg.xi_growth = j.at("xi_growth").get<double>();
  cfg.xi_max = j.at("xi_max").get<double>();
  cfg.stage_iters = j.at("stage_iters").get<int>();
  cfg.max_iters = j.at("max_iters").get<int>();
  cfg.kappa = j.at("kappa").get<double>();
  cfg.opt.learning_rate = j.at("lr").get<double>();
  cfg.opt.beta1 = j.at("beta1").get<double>();
  cfg.opt.beta2 = j.at("beta2").get<double>();
  cfg.opt.eps = j.at("adam_eps").get<double>();
  cfg.opt.weight_decay = j.at("weight_decay").get<double>();
  cfg.saliency_method = method_from_name(j.at("saliency_method").get<std::string>());
  return cfg;
}

nlohmann::json metric_report_to_json(const MetricReport& report) {
  nlohmann::json j = nlohmann::json::object();
  put_metric(j, "mse", report.mse);
  put_metric(j, "psnr", report.psnr);
  put_metric(j, "ssim", report.ssim);
  put_metric(j, "uqi", report.uqi);
  put_metric(j, "scc", report.scc);
  put_metric(j, "vifp", report.vifp);
  if (!report.unavailable.empty()) j["unavailable"] = report.unavailable;
  return j;
}

nlohmann::json image_record_to_json(const ImageRecord& rec) {
  nlohmann::json j{{"input", rec.input},
                   {"label", rec.label},
                   {"pred_before", rec.pred_before},
                   {"pred_after", rec.pred_after},
                   {"success", rec.success},
                   {"iterations", rec.iterations},
                   {"final_tau", rec.final_tau},
                   {"final_xi", rec.final_xi},
                   {"mask_area_fraction", rec.mask_area_fraction},
                   {"metrics", metric_report_to_json(rec.metrics)}};
  j["outputs"] = rec.outputs;
  return j;
}

namespace {

// Aggregate from serialized records so load_and_verify recomputes the exact
// same doubles the writer produced.
nlohmann::json aggregate_from_json_records(const nlohmann::json& records) {
  long long successes = 0;
  const char* names[] = {"mse", "psnr", "ssim", "uqi", "scc", "vifp"};
  std::map<std::string, std::pair<double, long long>> sums;
  for (const auto& rec : records) {
    if (!rec.at("success").get<bool>()) continue;
    ++successes;
    const auto& m = rec.at("metrics");
    for (const char* name : names) {
      if (!m.contains(name) || m.at(name).is_null()) continue;
      auto& [sum, count] = sums[name];
      sum += m.at(name).get<double>();
      ++count;
    }
  }
  nlohmann::json agg;
  agg["count"] = records.size();
  agg["successes"] = successes;
  agg["attack_success_rate"] =
      records.empty() ? 0.0 : static_cast<double>(successes) / static_cast<double>(records.size());
  nlohmann::json means = nlohmann::json::object();
  for (const char* name : names) {
    const auto it = sums.find(name);
    if (it == sums.end() || it->second.second == 0)
      means[name] = nullptr;
    else
      means[name] = it->second.first / static_cast<double>(it->second.second);
  }
  agg["metrics_mean_fooled"] = means;
  return agg;
}

}  // namespace

nlohmann::json aggregate_records(const std::vector<ImageRecord>& records) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& rec : records) arr.push_back(image_record_to_json(rec));
  return aggregate_from_json_records(arr);
}

nlohmann::json new_manifest(const std::string& command) {
  nlohmann::json j;
  j["schema"] = kManifestSchema;
  j["tool_version"] = kToolVersion;
  j["command"] = command;
  return j;
}

void write_manifest(const nlohmann::json& manifest, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open file for writing: " + path);
  out << manifest.dump(2) << "\n";
  if (!out) throw io_error("write failed: " + path);
}

nlohmann::json load_and_verify_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw format_error("invalid manifest JSON: " + std::string(e.what()));
  }
  if (!j.contains("schema") || j.at("schema") != kManifestSchema)
    throw format_error("unknown manifest schema: " + path);
  auto check_block = [&](const nlohmann::json& block) {
    if (!block.contains("images") || !block.contains("aggregate")) return;
    const nlohmann::json expect = aggregate_from_json_records(block.at("images"));
    if (block.at("aggregate") != expect)
      throw format_error("manifest aggregate disagrees with per-image records: " + path);
  };
  check_block(j);
  if (j.contains("baseline")) check_block(j.at("baseline"));
  return j;
}

}  // namespace ssta
