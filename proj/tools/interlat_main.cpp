// Command line front end: dataset generation, training, evaluation, gradient
// checking, and the ablation study. Exit codes follow the library contract
// (0 ok, 1 failed check, 2 config, 3 io, 4 numeric).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "CLI11.hpp"
#include "interlat/config.hpp"
#include "interlat/denoiser.hpp"
#include "interlat/error.hpp"
#include "interlat/gradcheck.hpp"
#include "interlat/synthdata.hpp"
#include "interlat/train.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace interlat;

namespace {

struct CliOptions {
  std::string config_path;
  std::string data_dir;
  std::string out_path;
  std::string ckpt_path;
  std::string split = "test";
  std::string only;
  uint64_t clips = 36;
  int64_t steps_override = -1;
  int64_t seed_override = -1;
  double lr_override = -1.0;
  bool resume = false;
  bool inject_bad_gradient = false;
};

TrainConfig resolve_config(const CliOptions& opt) {
  TrainConfig cfg;
  if (!opt.config_path.empty()) cfg = load_config(opt.config_path);
  if (opt.steps_override >= 0) cfg.steps = static_cast<uint64_t>(opt.steps_override);
  if (opt.seed_override >= 0) cfg.seed = static_cast<uint64_t>(opt.seed_override);
  if (opt.lr_override >= 0.0) cfg.lr = opt.lr_override;
  validate_config(cfg);
  return cfg;
}

ClipDims dims_from(const TrainConfig& cfg) {
  return ClipDims{cfg.f, cfg.h, cfg.w, cfg.d, cfg.d_face};
}

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
  out << doc.dump(2) << "\n";
  if (!out) fail(ErrorKind::IoError, "failed writing " + path.string());
}

int cmd_gen_data(const CliOptions& opt) {
  TrainConfig cfg = resolve_config(opt);
  Dataset ds = build_dataset(opt.clips, cfg.seed, dims_from(cfg), opt.out_path);
  size_t test = split_indices(ds, "test").size();
  std::printf("wrote %zu clips (%zu train, %zu test) to %s\n", ds.clips.size(),
              ds.clips.size() - test, test, opt.out_path.c_str());
  return 0;
}

int cmd_train(const CliOptions& opt) {
  TrainConfig cfg = resolve_config(opt);
  Dataset ds = load_dataset(opt.data_dir);
  ToyDenoiser model = init_denoiser(cfg);
  fs::create_directories(opt.out_path);
  fs::path ckpt = fs::path(opt.out_path) / "model.ckpt";
  size_t start = 0;
  if (opt.resume) start = load_trainer_checkpoint(ckpt.string(), cfg, model);
  AblationFlags flags = flags_from_config(cfg);
  TrainResult result = train_model(cfg, ds, model, start, flags);
  save_trainer_checkpoint(ckpt.string(), cfg, model, cfg.steps);
  save_config(cfg, (fs::path(opt.out_path) / "config.json").string());

  json history = json::array();
  for (const StepLoss& s : result.history)
    history.push_back({{"step", s.step},
                       {"diff", s.diff},
                       {"ortho", s.ortho},
                       {"total", s.total}});
  json metrics = {{"version", 1},
                  {"steps_run", result.history.size()},
                  {"start_step", start},
                  {"wall_seconds", result.wall_seconds},
                  {"config_digest", digest_hex(config_digest(cfg))},
                  {"history", history}};
  if (!result.history.empty()) {
    metrics["first_total"] = result.history.front().total;
    metrics["final_total"] = result.history.back().total;
  }
  write_json(fs::path(opt.out_path) / "metrics.json", metrics);

  if (result.history.empty()) {
    std::printf("checkpoint already at step %zu, nothing to do\n", start);
  } else {
    std::printf("trained steps %zu..%zu: total %.6f -> %.6f (%.1fs)\n", start,
                cfg.steps - 1, result.history.front().total,
                result.history.back().total, result.wall_seconds);
  }
  return 0;
}

int cmd_eval(const CliOptions& opt) {
  TrainConfig cfg = resolve_config(opt);
  Dataset ds = load_dataset(opt.data_dir);
  ToyDenoiser model = init_denoiser(cfg);
  size_t step = load_trainer_checkpoint(opt.ckpt_path, cfg, model);
  AblationFlags flags = flags_from_config(cfg);
  EvalResult res = evaluate_model(cfg, ds, model, flags, opt.split);
  double masked = masked_region_error(cfg, ds, model, flags, opt.split);
  json doc = {{"version", 1},
              {"config_digest", digest_hex(config_digest(cfg))},
              {"split", opt.split},
              {"clips", res.clips},
              {"checkpoint_step", step},
              {"psnr", res.mean_psnr},
              {"ssim", res.mean_ssim},
              {"l1", res.mean_l1},
              {"masked_region_error", masked}};
  std::printf("%s\n", doc.dump(2).c_str());
  if (!opt.out_path.empty()) write_json(opt.out_path, doc);
  return 0;
}

int cmd_gradcheck(const CliOptions& opt) {
  std::vector<GradCheckCase> cases =
      run_grad_checks(opt.only, opt.inject_bad_gradient);
  if (cases.empty())
    fail(ErrorKind::ConfigInvalid, "no gradient case matches '" + opt.only + "'");
  bool all_ok = true;
  for (const GradCheckCase& c : cases) {
    std::printf("%-24s max_rel_err=%-12.3e %s\n", c.name.c_str(), c.max_rel_err,
                c.passed ? "pass" : "FAIL");
    all_ok = all_ok && c.passed;
  }
  std::printf("%zu case(s), %s\n", cases.size(), all_ok ? "all passed" : "FAILURES");
  return all_ok ? 0 : 1;
}

int cmd_ablate(const CliOptions& opt) {
  TrainConfig cfg = resolve_config(opt);
  Dataset ds = load_dataset(opt.data_dir);
  std::vector<AblationRow> rows = run_ablations(cfg, ds);
  json table = json::array();
  std::printf("%-12s %12s %12s %14s %12s\n", "variant", "final_total",
              "final_diff", "final_ortho", "masked_err");
  for (const AblationRow& r : rows) {
    std::printf("%-12s %12.6f %12.6f %14.6e %12.6f\n", r.name.c_str(),
                r.final_total, r.final_diff, r.final_ortho, r.masked_err);
    table.push_back({{"name", r.name},
                     {"final_total", r.final_total},
                     {"final_diff", r.final_diff},
                     {"final_ortho", r.final_ortho},
                     {"masked_err", r.masked_err}});
  }
  if (!opt.out_path.empty()) {
    fs::create_directories(opt.out_path);
    json doc = {{"version", 1},
                {"config_digest", digest_hex(config_digest(cfg))},
                {"variants", table}};
    write_json(fs::path(opt.out_path) / "ablations.json", doc);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"interaction-latent toy diffusion harness"};
  app.require_subcommand(1);
  CliOptions opt;

  CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic clip dataset");
  gen->add_option("--out", opt.out_path, "output directory")->required();
  gen->add_option("--clips", opt.clips, "number of clips (>= 18)");
  gen->add_option("--config", opt.config_path, "config JSON (clip dims, seed)");
  gen->add_option("--seed", opt.seed_override, "override config seed")
      ->check(CLI::NonNegativeNumber);

  CLI::App* train = app.add_subcommand("train", "train the denoiser");
  train->add_option("--data", opt.data_dir, "dataset directory")->required();
  train->add_option("--out", opt.out_path, "run directory for checkpoint/metrics")->required();
  train->add_option("--config", opt.config_path, "config JSON");
  train->add_option("--steps", opt.steps_override, "override step budget")
      ->check(CLI::NonNegativeNumber);
  train->add_option("--seed", opt.seed_override, "override config seed")
      ->check(CLI::NonNegativeNumber);
  train->add_option("--lr", opt.lr_override, "override learning rate")
      ->check(CLI::NonNegativeNumber);
  train->add_flag("--resume", opt.resume, "continue from <out>/model.ckpt");

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--data", opt.data_dir, "dataset directory")->required();
  eval_cmd->add_option("--ckpt", opt.ckpt_path, "checkpoint file")->required();
  eval_cmd->add_option("--config", opt.config_path, "config JSON");
  eval_cmd->add_option("--split", opt.split, "dataset split (train|test)");
  eval_cmd->add_option("--out", opt.out_path, "also write the report here");

  CLI::App* grad = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  grad->add_option("--only", opt.only, "run cases whose name contains this");
  grad->add_flag("--inject-bad-gradient", opt.inject_bad_gradient,
                 "add a deliberately broken case (harness self-test)")
      ->group("");

  CLI::App* ablate = app.add_subcommand("ablate", "train all ablation variants");
  ablate->add_option("--data", opt.data_dir, "dataset directory")->required();
  ablate->add_option("--config", opt.config_path, "config JSON");
  ablate->add_option("--out", opt.out_path, "directory for ablations.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(opt);
    if (train->parsed()) return cmd_train(opt);
    if (eval_cmd->parsed()) return cmd_eval(opt);
    if (grad->parsed()) return cmd_gradcheck(opt);
    if (ablate->parsed()) return cmd_ablate(opt);
  } catch (const Error& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  }
  return 2;
}
