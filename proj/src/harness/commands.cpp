#include "harness/commands.hpp"

#include <openssl/evp.h>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "common/error.hpp"
#include "harness/analytics.hpp"
#include "harness/checkpoint.hpp"
#include "harness/evaluate.hpp"
#include "harness/train.hpp"
#include "metalearn/meta_step.hpp"

namespace pamela {
namespace fs = std::filesystem;

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1)
    throw IoError("sha256 failed");
  std::ostringstream out;
  for (unsigned int i = 0; i < length; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return out.str();
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

bool is_runlog(const std::string& name) { return name == "runlog.csv"; }

std::string artifact_hash(const std::string& dir, const std::string& name) {
  const std::string text = read_file((fs::path(dir) / name).string());
  return sha256_hex(is_runlog(name) ? strip_wall_clock(text) : text);
}

TrainConfig resolve(const TrainConfig& config, const CommandOptions& options) {
  TrainConfig c = config;
  if (options.seed) c.seed = *options.seed;
  c.validate();
  return c;
}

void write(const CommandOptions& options, CommandResult& result, const std::string& name, const std::string& text) {
  write_text_atomic((fs::path(options.out_dir) / name).string(), text);
  result.artifacts.push_back(name);
}

std::string checkpoint_path(const CommandOptions& options) {
  return options.checkpoint ? *options.checkpoint : (fs::path(options.out_dir) / "checkpoint.json").string();
}

void write_manifest(const std::string& command, const TrainConfig& config, const CommandOptions& options,
                    const CommandResult& result) {
  Json m;
  m["command"] = command;
  m["config_path"] = options.config_path;
  m["config"] = to_json(config);
  m["seed"] = config.seed;
  Json o;
  o["resume"] = options.resume ? Json(fs::absolute(*options.resume).string()) : Json(nullptr);
  const bool reads_checkpoint = command == "eval" || command == "analyze";
  o["checkpoint"] = reads_checkpoint ? Json(fs::absolute(checkpoint_path(options)).string()) : Json(nullptr);
  o["analyze_tasks"] = options.analyze_tasks;
  o["gradcheck_coordinates"] = options.gradcheck_coordinates;
  m["options"] = std::move(o);
  Json artifacts = Json::object();
  for (const auto& name : result.artifacts) artifacts[name] = artifact_hash(options.out_dir, name);
  m["artifacts"] = std::move(artifacts);
  m["hash_note"] = "runlog.csv is hashed without its wall_ms column";
  const std::string text = m.dump(2) + "\n";
  write_text_atomic((fs::path(options.out_dir) / "manifest.json").string(), text);
  write_text_atomic((fs::path(options.out_dir) / ("manifest_" + command + ".json")).string(), text);
}

std::string histograms_jsonl(const std::vector<Histogram>& hs) {
  std::string out;
  for (const auto& h : hs) out += to_json(h).dump() + "\n";
  return out;
}

}  // namespace

std::string sha256_file(const std::string& path) { return sha256_hex(read_file(path)); }

std::string strip_wall_clock(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  std::getline(in, line);
  const auto header_cut = line.rfind(",wall_ms");
  const bool has_wall = header_cut != std::string::npos && header_cut + 8 == line.size();
  if (!has_wall) return csv;
  out += line.substr(0, header_cut) + "\n";
  while (std::getline(in, line)) {
    const auto cut = line.rfind(',');
    out += (cut == std::string::npos ? line : line.substr(0, cut)) + "\n";
  }
  return out;
}

CommandResult run_train(const TrainConfig& raw, const CommandOptions& options) {
  const TrainConfig config = resolve(raw, options);
  std::optional<Checkpoint> resume;
  if (options.resume) resume = load_checkpoint(*options.resume);

  const std::string ckpt_path = (fs::path(options.out_dir) / "checkpoint.json").string();
  TrainOptions train_options;
  train_options.threads = options.threads;
  train_options.checkpoint_sink = [&](const Checkpoint& c) { save_checkpoint(c, ckpt_path); };
  const TrainResult trained = train(config, train_options, resume);

  CommandResult result;
  result.artifacts.push_back("checkpoint.json");
  write(options, result, "runlog.csv", trained.log.to_csv());
  if (config.histograms) write(options, result, "histograms.jsonl", histograms_jsonl(trained.histograms));
  result.summary["iterations"] = trained.checkpoint.iteration;
  if (!trained.log.rows.empty()) result.summary["final_meta_loss"] = trained.log.rows.back().meta_loss;
  result.summary["checkpoint"] = ckpt_path;
  write_manifest("train", config, options, result);
  return result;
}

CommandResult run_eval(const TrainConfig& raw, const CommandOptions& options) {
  const TrainConfig config = resolve(raw, options);
  const Checkpoint checkpoint = load_checkpoint(checkpoint_path(options));
  CommandResult result;
  Json j;
  if (config.task.type == TaskType::Sine) {
    if (checkpoint.config.task.type != TaskType::Sine) throw ValueError("eval: checkpoint was not trained on sine tasks");
    j = to_json(evaluate_regression(checkpoint, config.task.k, config.eval_tasks, config.eval_grid, config.eval_seed,
                                    options.threads));
  } else {
    Checkpoint episodes = checkpoint;
    episodes.config.task = config.task;
    episodes.config.validate();
    check_params(episodes.config.model_spec(), episodes.theta);
    j = to_json(evaluate_classification(episodes, config.eval_tasks, config.eval_seed, options.threads));
  }
  write(options, result, "eval.json", j.dump(2) + "\n");
  result.summary = j;
  write_manifest("eval", config, options, result);
  return result;
}

CommandResult run_gradcheck(const TrainConfig& raw, const CommandOptions& options) {
  const TrainConfig config = resolve(raw, options);
  GradcheckOptions go;
  go.max_coordinates = options.gradcheck_coordinates;
  go.threads = options.threads;
  const GradcheckReport report = gradcheck(config, go);
  Json j = to_json(report);
  j["tolerance"] = kGradcheckTolerance;
  j["passed"] = report.max_rel_error < kGradcheckTolerance;
  CommandResult result;
  write(options, result, "gradcheck.json", j.dump(2) + "\n");
  result.summary = j;
  write_manifest("gradcheck", config, options, result);
  return result;
}

CommandResult run_ablate(const TrainConfig& raw, const CommandOptions& options) {
  const TrainConfig config = resolve(raw, options);
  const auto rows = ablation_suite(config, options.threads);
  CommandResult result;
  write(options, result, "ablation.csv", ablation_csv(rows));
  Json table = Json::array();
  for (const auto& r : rows)
    table.push_back(
        {{"variant", r.variant.label}, {"metric", r.metric}, {"mean", r.mean}, {"ci95", r.ci95}, {"status", r.status}});
  result.summary["rows"] = std::move(table);
  write_manifest("ablate", config, options, result);
  return result;
}

CommandResult run_analyze(const TrainConfig& raw, const CommandOptions& options) {
  const TrainConfig config = resolve(raw, options);
  const Checkpoint checkpoint = load_checkpoint(checkpoint_path(options));
  CommandResult result;

  const auto stats = inner_loss_trajectory(checkpoint, options.analyze_tasks, config.eval_seed, options.threads);
  std::ostringstream traj;
  traj << "step,mean_loss,std_loss\n";
  for (std::size_t j = 0; j < stats.size(); ++j)
    traj << j << ',' << Json(stats[j].mean).dump() << ',' << Json(stats[j].std).dump() << '\n';
  write(options, result, "inner_loss_trajectory.csv", traj.str());

  // Gradient histograms at the checkpoint on one analysis meta-batch.
  std::vector<Task> tasks;
  for (int k = 0; k < checkpoint.config.meta_batch; ++k) {
    Rng rng(derive_seed(config.eval_seed, {kStreamAnalyze, 0x6869u, static_cast<std::uint64_t>(k)}));
    tasks.push_back(sample_task(checkpoint.config.task, rng));
  }
  const MetaGradient g = compute_meta_gradient(checkpoint.config.model_spec(), checkpoint.theta, checkpoint.phi, tasks,
                                               meta_gradient_options(checkpoint.config, options.threads, true));
  const auto hs = gradient_histograms(checkpoint.iteration, g.probe_inner_gradients, g.theta_grad);
  write(options, result, "gradient_histograms.jsonl", histograms_jsonl(hs));
  const auto magnitude = final_epoch_inner_gradient_magnitude(hs);
  std::ostringstream mag;
  mag << "step,mean_abs_gradient\n";
  for (std::size_t j = 0; j < magnitude.size(); ++j) mag << j + 1 << ',' << Json(magnitude[j]).dump() << '\n';
  write(options, result, "gradient_magnitude.csv", mag.str());

  Json s;
  Json mean = Json::array(), sd = Json::array();
  for (const auto& st : stats) {
    mean.push_back(st.mean);
    sd.push_back(st.std);
  }
  s["inner_loss_mean"] = std::move(mean);
  s["inner_loss_std"] = std::move(sd);
  s["mean_abs_gradient"] = magnitude;
  result.summary = std::move(s);
  write_manifest("analyze", config, options, result);
  return result;
}

ReplayResult replay_manifest(const std::string& manifest_path, const std::string& out_dir, int threads) {
  Json m;
  try {
    m = Json::parse(read_file(manifest_path));
  } catch (const Json::parse_error& e) {
    throw ValueError("manifest '" + manifest_path + "' is not valid JSON: " + e.what());
  }
  const std::string command = m.at("command").get<std::string>();
  const TrainConfig config = config_from_json(m.at("config"));
  CommandOptions options;
  options.out_dir = out_dir;
  options.threads = threads;
  options.config_path = m.value("config_path", std::string());
  const Json& o = m.at("options");
  if (!o.at("resume").is_null()) options.resume = o.at("resume").get<std::string>();
  if (!o.at("checkpoint").is_null()) options.checkpoint = o.at("checkpoint").get<std::string>();
  options.analyze_tasks = o.at("analyze_tasks").get<int>();
  options.gradcheck_coordinates = o.at("gradcheck_coordinates").get<std::size_t>();

  if (command == "train") run_train(config, options);
  else if (command == "eval") run_eval(config, options);
  else if (command == "gradcheck") run_gradcheck(config, options);
  else if (command == "ablate") run_ablate(config, options);
  else if (command == "analyze") run_analyze(config, options);
  else throw ValueError("manifest names unknown command '" + command + "'");

  ReplayResult r;
  for (const auto& [name, hash] : m.at("artifacts").items()) {
    if (artifact_hash(out_dir, name) != hash.get<std::string>()) {
      r.identical = false;
      r.mismatched.push_back(name);
    }
  }
  return r;
}

}  // namespace pamela
