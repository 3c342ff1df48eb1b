// Command-line front end. Subcommands compose the pipeline so every
// intermediate artifact is a plain file:
//   simulate    config -> episode jsonl per subject
//   track       episode jsonl -> fused per-tick csv per subject
//   experiment  config -> leave-one-subject-out comparison + artifacts
//   roc-export  recompute roc.csv files from stored scores.csv
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gaitlab/config.hpp"
#include "gaitlab/io.hpp"

namespace fs = std::filesystem;
using namespace gaitlab;

namespace {

Episode build_episode(const RunConfig& cfg, int subject_id) {
  SimConfig cs = cfg.sim;
  cs.rng_seed = derive_seed(cfg.seed, "subject", subject_id);
  Episode ep = simulate_walk(cs, subject_id);
  inject_fall_risk(ep, cs);
  label_episode(ep, cfg.geom, cfg.thresholds);
  sensorize(ep, cs);
  return ep;
}

int cmd_simulate(const RunConfig& cfg, const fs::path& out_dir) {
  for (int s = 1; s <= cfg.subjects; ++s) {
    const Episode ep = build_episode(cfg, s);
    const fs::path path = out_dir / ("subject-" + std::to_string(s) + ".episode.jsonl");
    write_episode_jsonl(path, ep);
    std::cout << path.string() << ": " << ep.frames.size() << " frames, "
              << ep.com_detections.size() << " detections\n";
  }
  return 0;
}

int cmd_track(const RunConfig& cfg, const fs::path& episodes_dir, const fs::path& out_dir) {
  std::vector<fs::path> inputs;
  if (!fs::is_directory(episodes_dir))
    throw std::runtime_error("not a directory: " + episodes_dir.string());
  for (const auto& entry : fs::directory_iterator(episodes_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > 14 && name.substr(name.size() - 14) == ".episode.jsonl")
      inputs.push_back(entry.path());
  }
  std::sort(inputs.begin(), inputs.end());
  if (inputs.empty())
    throw std::runtime_error("no .episode.jsonl files in " + episodes_dir.string());
  for (const fs::path& in : inputs) {
    const Episode ep = read_episode_jsonl(in);
    if (ep.com_detections.empty())
      throw std::runtime_error("episode has no camera detections: " + in.string());
    const SubjectTrack track = assemble_track(ep, cfg.ukf);
    std::string stem = in.filename().string();
    stem.erase(stem.size() - 14);
    const fs::path out = out_dir / (stem + ".track.csv");
    detail::write_file_atomic(out, track_csv(track));
    std::size_t updates = 0;
    for (const TickRecord& tick : track.ticks) updates += tick.from_update ? 1 : 0;
    std::cout << out.string() << ": " << track.ticks.size() << " ticks, raw rmse "
              << track.stats.raw_rmse << ", filtered rmse " << track.stats.filtered_rmse
              << ", from_update "
              << static_cast<double>(updates) / static_cast<double>(track.ticks.size())
              << '\n';
  }
  return 0;
}

// Per-fold columns plus the unweighted mean, one row per method, one block
// per metric.
std::string report_table(const ExperimentReport& rep) {
  std::size_t name_w = 6;
  for (const MethodReport& m : rep.methods) name_w = std::max(name_w, m.method.size());
  auto cell = [](double v) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%9.4f", v);
    return std::string(buf);
  };
  std::ostringstream out;
  struct Block {
    const char* title;
    double (*fold)(const FoldReport&);
    double (*mean)(const MethodReport&);
  };
  const Block blocks[] = {
      {"auc", [](const FoldReport& f) { return f.roc.auc; },
       [](const MethodReport& m) { return m.mean_auc; }},
      {"fscore", [](const FoldReport& f) { return f.metrics.fscore; },
       [](const MethodReport& m) { return m.mean_metrics.fscore; }},
      {"accuracy", [](const FoldReport& f) { return f.metrics.accuracy; },
       [](const MethodReport& m) { return m.mean_metrics.accuracy; }},
  };
  for (const Block& b : blocks) {
    out << b.title << '\n';
    out << std::string(name_w, ' ');
    for (const FoldReport& f : rep.methods.front().folds) {
      char head[16];
      std::snprintf(head, sizeof(head), "%9s", ("fold-" + std::to_string(f.test_subject)).c_str());
      out << head;
    }
    out << "     mean\n";
    for (const MethodReport& m : rep.methods) {
      out << m.method << std::string(name_w - m.method.size(), ' ');
      for (const FoldReport& f : m.folds) out << cell(b.fold(f));
      out << cell(b.mean(m)) << '\n';
    }
    out << '\n';
  }
  return out.str();
}

int cmd_experiment(const RunConfig& cfg, const fs::path& out_dir) {
  const ExperimentReport rep = run_experiment(cfg);
  const fs::path run_dir = out_dir / cfg.run_name;
  write_run_artifacts(run_dir, cfg, rep);
  const std::string table = report_table(rep);
  detail::write_file_atomic(run_dir / "table.txt", table);
  std::cout << table;
  std::cout << "run written to " << run_dir.string() << '\n';
  return 0;
}

void read_scores_csv(const fs::path& path, std::vector<double>& scores,
                     std::vector<int>& labels) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "score,label")
    throw std::runtime_error("unexpected header in " + path.string());
  scores.clear();
  labels.clear();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos)
      throw std::runtime_error("malformed row in " + path.string() + ": " + line);
    scores.push_back(detail::parse_double(path.string(), line.substr(0, comma)));
    labels.push_back(detail::parse_int(path.string(), line.substr(comma + 1)));
  }
}

int cmd_roc_export(const fs::path& run_dir) {
  if (!fs::is_directory(run_dir))
    throw std::runtime_error("not a directory: " + run_dir.string());
  int count = 0;
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& entry : fs::recursive_directory_iterator(run_dir)) {
    if (!entry.is_regular_file() || entry.path().filename() != "scores.csv") continue;
    read_scores_csv(entry.path(), scores, labels);
    const RocCurve curve = roc_auc(scores, labels);
    detail::write_file_atomic(entry.path().parent_path() / "roc.csv", roc_csv(curve));
    ++count;
  }
  if (count == 0)
    throw std::runtime_error("no scores.csv files under " + run_dir.string());
  std::cout << "rewrote " << count << " roc curve(s)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synthetic gait stability pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string episodes_dir;
  std::vector<std::string> methods;
  int window = 0;
  std::string arch;
  std::string run_dir;

  CLI::Option* seed_opts[3];
  auto add_common = [&](CLI::App* cmd, int slot) {
    cmd->add_option("--config", config_path, "key=value run config file");
    seed_opts[slot] = cmd->add_option("--seed", seed, "override the global seed");
  };

  CLI::App* sim_cmd = app.add_subcommand("simulate", "write one episode file per subject");
  add_common(sim_cmd, 0);
  sim_cmd->add_option("--out", out_dir, "output directory")->required();

  CLI::App* track_cmd =
      app.add_subcommand("track", "fuse episode files into labeled per-tick csv");
  add_common(track_cmd, 1);
  track_cmd->add_option("--episodes", episodes_dir, "directory of .episode.jsonl files")
      ->required();
  track_cmd->add_option("--out", out_dir, "output directory")->required();

  CLI::App* exp_cmd =
      app.add_subcommand("experiment", "leave-one-subject-out method comparison");
  add_common(exp_cmd, 2);
  exp_cmd->add_option("--out", out_dir, "runs directory")->capture_default_str();
  out_dir = "runs";
  CLI::Option* methods_opt =
      exp_cmd->add_option("--methods", methods, "methods to evaluate")->delimiter(',');
  CLI::Option* window_opt = exp_cmd->add_option("--window", window, "history window length")
                                ->check(CLI::IsMember({50, 100, 200}));
  CLI::Option* arch_opt =
      exp_cmd->add_option("--arch", arch, "network architecture override")
          ->check(CLI::IsMember(
              {"lstm1-256", "fc-lstm1-256", "fc-lstm2-128", "fc-lstm2-256"}));

  CLI::App* roc_cmd =
      app.add_subcommand("roc-export", "recompute roc.csv from stored scores.csv");
  roc_cmd->add_option("--run", run_dir, "run directory to scan")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*roc_cmd) return cmd_roc_export(run_dir);

    RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    const int slot = *sim_cmd ? 0 : (*track_cmd ? 1 : 2);
    if (seed_opts[slot]->count() > 0) cfg.seed = seed;
    if (*exp_cmd) {
      if (methods_opt->count() > 0) cfg.methods = methods;
      if (window_opt->count() > 0) cfg.eval.window = window;
      if (arch_opt->count() > 0) cfg.arch = arch;
      return cmd_experiment(cfg, out_dir);
    }
    if (*sim_cmd) return cmd_simulate(cfg, out_dir);
    return cmd_track(cfg, episodes_dir, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
