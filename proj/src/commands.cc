// Copyright 2026 The Flowse Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "flowse/commands.h"

#include <torch/torch.h>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <tuple>

#include "CLI11.hpp"
#include "flowse/checkpoint.h"
#include "flowse/separation.h"
#include "flowse/wav.h"

namespace flowse {

namespace fs = std::filesystem;

void UseDeterministicMath() {
  torch::set_num_threads(1);
  at::globalContext().setDeterministicAlgorithms(true, /*warn_only=*/false);
}

CorpusHandle GenerateCorpus(const RunConfig& cfg, const std::string& cache_root,
                            std::ostream* log) {
  return EnsureCorpus(cfg.corpus, cache_root, log);
}

CheckpointSet TrainFromConfig(const RunConfig& cfg, const std::string& cache_root,
                              const TrainFlags& flags, std::ostream* log) {
  const auto corpus = GenerateCorpus(cfg, cache_root, log);
  std::vector<TrainingExample> train;
  ForEachExample(corpus.dir, Split::kTrain,
                 [&](Example&& ex) { train.push_back(ToTrainingExample(ex)); });
  std::vector<EvalItem> val;
  ForEachExample(corpus.dir, Split::kVal, [&](Example&& ex) {
    if (cfg.train.val_examples == 0 || static_cast<int>(val.size()) < cfg.train.val_examples)
      val.push_back(ToEvalItem(ex));
  });
  TrainOptions opt;
  opt.output_dir = cfg.output_dir;
  opt.resume = flags.resume;
  opt.stop_after_step = flags.stop_after_step;
  opt.progress = log;
  fs::create_directories(cfg.output_dir);
  std::ofstream(fs::path(cfg.output_dir) / "run_config.json") << cfg.ToJson().dump(2) << "\n";
  return Train(train, val, cfg.train, cfg.model, opt);
}

std::vector<EvalItem> LoadEvalItems(const RunConfig& cfg, const std::string& cache_root,
                                    Split split, int limit) {
  const auto corpus = GenerateCorpus(cfg, cache_root, nullptr);
  std::vector<EvalItem> items;
  ForEachExample(corpus.dir, split, [&](Example&& ex) {
    if (limit <= 0 || static_cast<int>(items.size()) < limit) items.push_back(ToEvalItem(ex));
  });
  return items;
}

EvalSummary EvaluateItems(const Enhancer& enhancer, const std::vector<EvalItem>& items,
                          const SamplerConfig& cfg, bool estoi) {
  EvalSummary s;
  EvalOptions eo;
  eo.estoi = estoi;
  s.enhanced = Evaluate(enhancer, items, cfg, eo);
  s.noisy = EvaluateNoisy(items, estoi);
  std::vector<double> gains;
  for (size_t i = 0; i < items.size(); ++i)
    gains.push_back(s.enhanced.records[i].si_sdr - s.noisy.records[i].si_sdr);
  s.improvement = Summarize(gains);
  return s;
}

RtfReport MeasureRtf(const Enhancer& enhancer, const std::vector<EvalItem>& items,
                     const SamplerConfig& cfg, RtfOptions options) {
  std::vector<TimeSignal> inputs;
  for (const auto& item : items) inputs.push_back(item.noisy);
  return BenchmarkRtf(
      [&](const TimeSignal& y, size_t i) {
        SamplerConfig c = cfg;
        c.seed = cfg.seed + i;
        return enhancer.Enhance(y, items[i].side_info, c);
      },
      inputs, DeviceDescriptor(torch::get_num_threads()), options);
}

namespace {

nlohmann::json AggJson(const Aggregate& a) {
  if (a.n == 0) return nullptr;
  return {{"mean", a.mean}, {"std_error", a.std_error}, {"n", a.n}};
}

Split ParseSplitName(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  throw ConfigError("--split: expected train, val or test, got '" + s + "'");
}

struct SamplerFlags {
  std::optional<int> steps;
  std::optional<std::string> prior;
  std::optional<uint64_t> seed;
  std::optional<double> sigma;
  bool deterministic = false;
  bool no_ema = false;

  void Add(CLI::App* app) {
    app->add_option("--steps", steps, "Euler steps (default 1)");
    app->add_option("--prior", prior, "prior mean: predictor or zero");
    app->add_option("--seed", seed, "prior noise seed");
    app->add_option("--sigma", sigma, "prior standard deviation");
    app->add_flag("--deterministic", deterministic, "start exactly at the prior mean");
    app->add_flag("--no-ema", no_ema, "use raw instead of averaged weights");
  }
  SamplerConfig Apply(SamplerConfig cfg) const {
    if (steps) cfg.n_steps = *steps;
    if (prior) cfg.prior = ParsePriorMean(*prior);
    if (seed) cfg.seed = *seed;
    if (sigma) cfg.sigma.sigma = *sigma;
    if (deterministic) cfg.deterministic = true;
    if (no_ema) cfg.use_ema = false;
    cfg.Validate();
    return cfg;
  }
};

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::string cache_root = DefaultCacheRoot();

  void Add(CLI::App* app) {
    app->add_option("--config", config, "run config JSON");
    app->add_option("--set", overrides, "override, e.g. train.lr=1e-3")->take_all();
    app->add_option("--cache-dir", cache_root, "corpus cache root")->capture_default_str();
  }
  RunConfig Load() const { return LoadRunConfig(config, overrides); }
};

void PrintConfig(std::ostream& out, const nlohmann::json& j) {
  out << "effective config: " << j.dump() << "\n";
}

std::ofstream OpenOutput(const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  std::ofstream os(fs::path(dir) / name);
  if (!os) throw std::runtime_error((fs::path(dir) / name).string() + ": cannot open");
  return os;
}

// Formatted value, or n/a when ESTOI was skipped.
std::string EstoiCell(double v, const Aggregate& a) {
  if (a.n == 0) return "n/a";
  std::ostringstream os;
  os.flags(std::ios::fixed);
  os.precision(3);
  os << v;
  return os.str();
}

void WriteSweep(const std::string& dir, const std::string& stem,
                const std::vector<SweepPoint>& rows, std::ostream& out) {
  auto jsonl = OpenOutput(dir, stem + ".jsonl");
  auto tsv = OpenOutput(dir, stem + ".tsv");
  auto txt = OpenOutput(dir, stem + ".txt");
  tsv << "steps\tprior\tsi_sdr\tsi_sdr_se\testoi\testoi_se\tsi_sdr_improvement\tseconds\n";
  std::ostringstream table;
  table << std::fixed << std::setprecision(3);
  table << std::setw(6) << "steps" << std::setw(11) << "prior" << std::setw(16) << "SI-SDR (dB)"
        << std::setw(16) << "ESTOI" << std::setw(14) << "dSI-SDR" << std::setw(10) << "PESQ"
        << std::setw(10) << "sec" << "\n";
  for (const auto& r : rows) {
    jsonl << nlohmann::json{{"steps", r.n_steps},
                            {"prior", PriorMeanName(r.prior)},
                            {"si_sdr", AggJson(r.si_sdr)},
                            {"estoi", AggJson(r.estoi)},
                            {"si_sdr_improvement", AggJson(r.si_sdr_improvement)},
                            {"pesq", nullptr},
                            {"seconds", r.seconds}}
                 .dump()
          << "\n";
    tsv << r.n_steps << "\t" << PriorMeanName(r.prior) << "\t" << r.si_sdr.mean << "\t"
        << r.si_sdr.std_error << "\t" << EstoiCell(r.estoi.mean, r.estoi) << "\t"
        << EstoiCell(r.estoi.std_error, r.estoi) << "\t"
        << r.si_sdr_improvement.mean << "\t" << r.seconds << "\n";
    table << std::setw(6) << r.n_steps << std::setw(11) << PriorMeanName(r.prior)
          << std::setw(9) << r.si_sdr.mean << " +/-" << std::setw(6) << std::setprecision(2)
          << r.si_sdr.std_error << std::setprecision(3) << std::setw(9)
          << EstoiCell(r.estoi.mean, r.estoi) << " +/-" << std::setw(5) << std::setprecision(2)
          << EstoiCell(r.estoi.std_error, r.estoi) << std::setprecision(3) << std::setw(12) << r.si_sdr_improvement.mean << std::setw(10)
          << "n/a" << std::setw(10) << std::setprecision(1) << r.seconds << std::setprecision(3)
          << "\n";
  }
  table << "(+/- is standard error over " << (rows.empty() ? 0 : rows[0].si_sdr.n)
        << " examples)\n";
  txt << table.str();
  out << table.str();
}

int CmdGenData(const Common& c, std::ostream& out) {
  const RunConfig cfg = c.Load();
  PrintConfig(out, cfg.ToJson());
  const auto h = GenerateCorpus(cfg, c.cache_root, &out);
  out << (h.generated ? "generated " : "up to date ") << h.dir << " (" << h.rows
      << " examples)\n";
  return kExitOk;
}

int CmdTrain(const Common& c, const TrainFlags& flags, std::ostream& out) {
  const RunConfig cfg = c.Load();
  PrintConfig(out, cfg.ToJson());
  const auto res = TrainFromConfig(cfg, c.cache_root, flags, &out);
  out << "steps " << res.steps << (res.completed ? " (complete)" : " (stopped)") << "\n"
      << "best " << res.best << " val si_sdr " << res.best_val_si_sdr << "\n"
      << "last " << res.last << "\n"
      << "log " << res.log << "\n";
  return kExitOk;
}

int CmdEnhance(bool separation, const Common& c, const SamplerFlags& sf,
               const std::string& checkpoint, const std::string& in, const std::string& side,
               const std::string& out_path, bool verbose, std::ostream& out) {
  const RunConfig run = c.config.empty() && c.overrides.empty() ? RunConfig{} : c.Load();
  const SamplerConfig cfg = sf.Apply(run.sampler);
  PrintConfig(out, {{"checkpoint", checkpoint}, {"sampler", cfg.ToJson()}});
  const Enhancer enhancer = Enhancer::FromCheckpoint(checkpoint, cfg.use_ema);
  const TimeSignal y = ReadWav(in);
  const SideInfo info = ReadSideInfo(side);
  StepProbe probe;
  if (verbose)
    probe = [&](int step, double t) {
      out << "euler step " << step + 1 << "/" << cfg.n_steps << " t=" << t << "\n";
    };
  const TimeSignal x = separation ? Separate(enhancer, y, info, cfg, probe)
                                  : enhancer.Enhance(y, info, cfg, probe);
  WriteWav(out_path, x);
  out << "wrote " << out_path << " (" << x.size() << " samples)\n";
  return kExitOk;
}

int CmdEval(const Common& c, const SamplerFlags& sf, const std::string& checkpoint,
            const std::string& split_name, int limit, bool no_estoi, std::ostream& out) {
  const RunConfig run = c.Load();
  const SamplerConfig cfg = sf.Apply(run.sampler);
  const Split split = ParseSplitName(split_name);
  PrintConfig(out, {{"checkpoint", checkpoint}, {"split", split_name}, {"limit", limit},
                    {"corpus", CorpusSpecToJson(run.corpus)}, {"sampler", cfg.ToJson()},
                    {"output_dir", run.output_dir}});
  const Enhancer enhancer = Enhancer::FromCheckpoint(checkpoint, cfg.use_ema);
  const auto items = LoadEvalItems(run, c.cache_root, split, limit);
  const auto s = EvaluateItems(enhancer, items, cfg, !no_estoi);
  const std::string stem = "eval_" + split_name;
  {
    auto os = OpenOutput(run.output_dir, stem + ".jsonl");
    s.enhanced.WriteJsonl(os);
  }
  nlohmann::json summary = {{"n", s.enhanced.records.size()},
                            {"error_convention", "standard_error"},
                            {"enhanced", {{"si_sdr", AggJson(s.enhanced.SiSdrSummary())},
                                          {"estoi", AggJson(s.enhanced.EstoiSummary())},
                                          {"pesq", nullptr}}},
                            {"noisy", {{"si_sdr", AggJson(s.noisy.SiSdrSummary())},
                                       {"estoi", AggJson(s.noisy.EstoiSummary())},
                                       {"pesq", nullptr}}},
                            {"si_sdr_improvement", AggJson(s.improvement)},
                            {"sampler", cfg.ToJson()}};
  OpenOutput(run.output_dir, stem + "_summary.json") << summary.dump(2) << "\n";
  std::ostringstream table;
  table << "noisy     ";
  s.noisy.WriteTable(table);
  table << "enhanced  ";
  s.enhanced.WriteTable(table);
  table << std::fixed << std::setprecision(3) << "SI-SDR improvement " << s.improvement.mean
        << " +/- " << s.improvement.std_error << " dB\n";
  OpenOutput(run.output_dir, stem + ".txt") << table.str();
  out << table.str();
  return kExitOk;
}

int CmdAblate(const Common& c, const SamplerFlags& sf, const std::string& checkpoint,
              const std::string& which, const std::vector<int>& steps_list,
              const std::vector<std::string>& variant_ckpts, const std::string& split_name,
              int limit, bool no_estoi, std::ostream& out) {
  const RunConfig run = c.Load();
  const SamplerConfig cfg = sf.Apply(run.sampler);
  const Split split = ParseSplitName(split_name);
  PrintConfig(out, {{"checkpoint", checkpoint}, {"which", which}, {"split", split_name},
                    {"limit", limit}, {"steps_list", steps_list}, {"sampler", cfg.ToJson()},
                    {"model", run.model.ToJson()}, {"output_dir", run.output_dir}});
  EvalOptions eo;
  eo.estoi = !no_estoi;
  if (which == "steps" || which == "prior") {
    if (checkpoint.empty()) throw ConfigError("--checkpoint: required for --which " + which);
    if (steps_list.empty()) throw ConfigError("--steps-list: must not be empty");
    const Enhancer enhancer = Enhancer::FromCheckpoint(checkpoint, cfg.use_ema);
    const auto items = LoadEvalItems(run, c.cache_root, split, limit);
    const auto rows = which == "steps" ? StepsSweep(enhancer, items, steps_list, cfg, eo)
                                       : PriorAblation(enhancer, items, cfg, eo);
    WriteSweep(run.output_dir, "ablate_" + which, rows, out);
    return kExitOk;
  }
  if (which != "size") throw ConfigError("--which: expected steps, prior or size");

  std::map<std::string, std::string> ckpts;
  for (const auto& v : variant_ckpts) {
    const auto eq = v.find('=');
    if (eq == std::string::npos) throw ConfigError("--variant-checkpoint: expected name=path");
    ParseSizeVariant(v.substr(0, eq));
    ckpts[v.substr(0, eq)] = v.substr(eq + 1);
  }
  std::vector<EvalItem> items;
  if (!ckpts.empty()) items = LoadEvalItems(run, c.cache_root, split, limit);
  auto jsonl = OpenOutput(run.output_dir, "ablate_size.jsonl");
  auto tsv = OpenOutput(run.output_dir, "ablate_size.tsv");
  std::ostringstream table;
  table << std::fixed << std::setprecision(3);
  table << std::setw(8) << "variant" << std::setw(12) << "params" << std::setw(10) << "ratio"
        << std::setw(12) << "SI-SDR" << std::setw(10) << "dSI-SDR" << std::setw(10) << "RTF"
        << "\n";
  tsv << "variant\tparams\tratio_to_large\tsi_sdr\tsi_sdr_improvement\trtf\n";
  std::map<SizeVariant, int64_t> counts;
  for (auto v : {SizeVariant::kSmall, SizeVariant::kMedium, SizeVariant::kLarge}) {
    ModelConfig mc = run.model;
    const ModelConfig canon = ModelConfig::ForVariant(v, mc.base_channels);
    mc.size_variant = v;
    mc.duplicate_convs = canon.duplicate_convs;
    mc.level4_inner_blocks = canon.level4_inner_blocks;
    counts[v] = ParameterCount(*TwoStageModel(mc));
  }
  for (auto v : {SizeVariant::kSmall, SizeVariant::kMedium, SizeVariant::kLarge}) {
    const std::string name = SizeVariantName(v);
    nlohmann::json row = {{"variant", name},
                          {"params", counts[v]},
                          {"ratio_to_large", static_cast<double>(counts[v]) /
                                                 counts[SizeVariant::kLarge]},
                          {"si_sdr", nullptr},
                          {"si_sdr_improvement", nullptr},
                          {"rtf", nullptr}};
    if (ckpts.count(name)) {
      const Enhancer e = Enhancer::FromCheckpoint(ckpts[name], cfg.use_ema);
      const auto s = EvaluateItems(e, items, cfg, eo.estoi);
      row["si_sdr"] = AggJson(s.enhanced.SiSdrSummary());
      row["si_sdr_improvement"] = AggJson(s.improvement);
      std::vector<EvalItem> bench(items.begin(), items.begin() + std::min<size_t>(4, items.size()));
      row["rtf"] = MeasureRtf(e, bench, cfg, {}).median;
    }
    jsonl << row.dump() << "\n";
    auto num = [](const nlohmann::json& j) -> std::string {
      if (j.is_null()) return "n/a";
      std::ostringstream s;
      s << std::fixed << std::setprecision(3) << (j.is_object() ? j.at("mean").get<double>()
                                                                 : j.get<double>());
      return s.str();
    };
    tsv << name << "\t" << counts[v] << "\t" << row["ratio_to_large"].get<double>() << "\t"
        << num(row["si_sdr"]) << "\t" << num(row["si_sdr_improvement"]) << "\t"
        << num(row["rtf"]) << "\n";
    table << std::setw(8) << name << std::setw(12) << counts[v] << std::setw(10)
          << row["ratio_to_large"].get<double>() << std::setw(12) << num(row["si_sdr"])
          << std::setw(10) << num(row["si_sdr_improvement"]) << std::setw(10)
          << num(row["rtf"]) << "\n";
  }
  OpenOutput(run.output_dir, "ablate_size.txt") << table.str();
  out << table.str();
  return kExitOk;
}

int CmdBenchRtf(const Common& c, const SamplerFlags& sf, const std::string& checkpoint,
                int inputs, RtfOptions ro, std::ostream& out) {
  const RunConfig run = c.Load();
  const SamplerConfig cfg = sf.Apply(run.sampler);
  PrintConfig(out, {{"checkpoint", checkpoint}, {"inputs", inputs}, {"warmup", ro.warmup},
                    {"repetitions", ro.repetitions}, {"sampler", cfg.ToJson()},
                    {"output_dir", run.output_dir}});
  if (inputs < 1) throw ConfigError("--inputs: must be >= 1");
  if (ro.repetitions < 1) throw ConfigError("--reps: must be >= 1");
  const Enhancer enhancer = Enhancer::FromCheckpoint(checkpoint, cfg.use_ema);
  const auto items = LoadEvalItems(run, c.cache_root, Split::kTest, inputs);
  const auto r = MeasureRtf(enhancer, items, cfg, ro);
  nlohmann::json j = {{"rtf_median", r.median},      {"rtf_min", r.min},
                      {"rtf_max", r.max},            {"rtf_mad", r.mad},
                      {"per_repetition", r.per_repetition},
                      {"audio_seconds", r.audio_seconds},
                      {"device", r.device},          {"steps", cfg.n_steps},
                      {"model", enhancer.config().ToJson()}};
  const std::string stem = "rtf_steps" + std::to_string(cfg.n_steps);
  OpenOutput(run.output_dir, stem + ".json") << j.dump(2) << "\n";
  std::ostringstream table;
  table << std::setprecision(4) << "RTF median " << r.median << " (min " << r.min << ", max "
        << r.max << ", MAD " << r.mad << ") over " << r.per_repetition.size()
        << " repetitions, " << r.audio_seconds << " s audio, " << cfg.n_steps << " steps, "
        << r.device << "\n";
  OpenOutput(run.output_dir, stem + ".txt") << table.str();
  out << table.str();
  return kExitOk;
}

}  // namespace

int RunCommandLine(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  UseDeterministicMath();
  CLI::App app{"Flow-matching speech enhancement toolkit"};
  app.require_subcommand(1);

  Common gen_c, train_c, enh_c, sep_c, eval_c, abl_c, rtf_c;
  SamplerFlags enh_s, sep_s, eval_s, abl_s, rtf_s;
  TrainFlags train_f;
  std::string ckpt, in, side, out_path, split = "test", which;
  bool verbose = false, no_estoi = false;
  int limit = 0, inputs = 8;
  std::vector<int> steps_list{1, 2, 5, 10, 30};
  std::vector<std::string> variant_ckpts;
  RtfOptions ro;

  auto* gen = app.add_subcommand("gen-data", "materialize the corpus cache");
  gen_c.Add(gen);

  auto* train = app.add_subcommand("train", "train a two-stage model");
  train_c.Add(train);
  train->add_flag("--resume", train_f.resume, "continue from last.ckpt in output_dir");
  train->add_option("--stop-after-step", train_f.stop_after_step,
                    "checkpoint and stop after this many steps");

  for (auto [name, c, s] : {std::tuple{"enhance", &enh_c, &enh_s},
                            std::tuple{"separate", &sep_c, &sep_s}}) {
    auto* sub = app.add_subcommand(name, std::string(name) + " one WAV file");
    c->Add(sub);
    s->Add(sub);
    sub->add_option("--checkpoint", ckpt)->required();
    sub->add_option("--in", in)->required();
    sub->add_option("--side-info", side)->required();
    sub->add_option("--out", out_path)->required();
    sub->add_flag("--verbose", verbose, "log every Euler step");
  }

  auto* eval = app.add_subcommand("eval", "score a checkpoint on a corpus split");
  eval_c.Add(eval);
  eval_s.Add(eval);
  eval->add_option("--checkpoint", ckpt)->required();
  eval->add_option("--split", split)->capture_default_str();
  eval->add_option("--limit", limit, "score only the first N examples");
  eval->add_flag("--no-estoi", no_estoi);

  auto* abl = app.add_subcommand("ablate", "steps, prior or size comparison tables");
  abl_c.Add(abl);
  abl_s.Add(abl);
  abl->add_option("--checkpoint", ckpt);
  abl->add_option("--which", which)->required()->check(CLI::IsMember({"steps", "prior", "size"}));
  abl->add_option("--steps-list", steps_list)->delimiter(',');
  abl->add_option("--variant-checkpoint", variant_ckpts, "size ablation: variant=path");
  abl->add_option("--split", split)->capture_default_str();
  abl->add_option("--limit", limit);
  abl->add_flag("--no-estoi", no_estoi);

  auto* rtf = app.add_subcommand("bench-rtf", "real-time factor of a checkpoint");
  rtf_c.Add(rtf);
  rtf_s.Add(rtf);
  rtf->add_option("--checkpoint", ckpt)->required();
  rtf->add_option("--inputs", inputs, "test-split signals per repetition")->capture_default_str();
  rtf->add_option("--warmup", ro.warmup)->capture_default_str();
  rtf->add_option("--reps", ro.repetitions)->capture_default_str();

  std::vector<const char*> argv{"flowse"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (gen->parsed()) return CmdGenData(gen_c, out);
    if (train->parsed()) return CmdTrain(train_c, train_f, out);
    if (app.got_subcommand("enhance"))
      return CmdEnhance(false, enh_c, enh_s, ckpt, in, side, out_path, verbose, out);
    if (app.got_subcommand("separate"))
      return CmdEnhance(true, sep_c, sep_s, ckpt, in, side, out_path, verbose, out);
    if (eval->parsed()) return CmdEval(eval_c, eval_s, ckpt, split, limit, no_estoi, out);
    if (abl->parsed())
      return CmdAblate(abl_c, abl_s, ckpt, which, steps_list, variant_ckpts, split, limit,
                       no_estoi, out);
    if (rtf->parsed()) return CmdBenchRtf(rtf_c, rtf_s, ckpt, inputs, ro, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const TrainingDivergedError& e) {
    err << "error: " << e.what() << "; last good checkpoint: "
        << (e.last_good_checkpoint().empty() ? "none" : e.last_good_checkpoint()) << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}

}  // namespace flowse
