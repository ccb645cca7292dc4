#pragma once

// Batch command-line surface. Exit codes: 0 success, 1 runtime failure,
// 2 usage or configuration error.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "setmatch/archive.hpp"
#include "setmatch/archive_views.hpp"
#include "setmatch/cache_adapter.hpp"
#include "setmatch/crop_plan.hpp"
#include "setmatch/diagnostics.hpp"
#include "setmatch/error.hpp"
#include "setmatch/ot.hpp"
#include "setmatch/parallel.hpp"
#include "setmatch/zero_shot.hpp"

namespace setmatch::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

/// Raised for invalid user configuration; maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rounds to 9 significant digits so reports are stable text.
inline double sig9(double v) {
  if (!std::isfinite(v)) return v;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return std::strtod(buf, nullptr);
}

inline nlohmann::json scores_json(const std::map<std::string, double>& scores) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [cls, s] : scores) j[cls] = sig9(s);
  return j;
}

inline nlohmann::json result_line(const std::string& entry_id, const ClassificationResult& r) {
  return {{"entry_id", entry_id},
          {"predicted_class", r.predicted_class},
          {"scores", scores_json(r.scores)},
          {"score_kind", std::string(to_string(r.score_kind))}};
}

struct RunConfig {
  std::vector<std::string> inputs;
  std::optional<std::string> output;
  ot::SinkhornConfig sinkhorn;
  FusionConfig fusion;
  TtaConfig tta;
  std::uint64_t seed = 42;

  void validate() const {
    for (const auto& p : inputs) {
      if (!p.empty() && !std::filesystem::exists(p)) throw ConfigError("input path does not exist: " + p);
    }
    try {
      sinkhorn.validate();
      fusion.validate();
      tta.validate();
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  }
};

namespace detail {

struct Labeled {
  std::string id;
  std::string truth;
  ClassificationResult result;
};

inline void add_sinkhorn_flags(CLI::App* app, ot::SinkhornConfig& cfg) {
  app->add_option("--epsilon", cfg.epsilon, "Entropic regularization")->capture_default_str();
  app->add_option("--max-iters", cfg.max_iters, "Sinkhorn iteration budget")->capture_default_str();
  app->add_option("--marginal-tol", cfg.marginal_tol, "L-inf marginal tolerance")->capture_default_str();
}

inline EmbeddingArchive load_checked(const std::string& path) {
  std::vector<NormWarning> warnings;
  auto archive = load_archive(path, {}, &warnings);
  for (const auto& w : warnings) {
    std::cerr << "warning: " << path << ": entry '" << w.entry_id << "' has norm " << w.norm << "\n";
  }
  return archive;
}

/// Results go to --out when given (summary to `out`), otherwise the JSON
/// lines go to `out` and the summary to `err`.
class Reporter {
 public:
  Reporter(const std::optional<std::string>& path, std::ostream& out, std::ostream& err)
      : lines_(path ? file_ : out), summary_(path ? out : err) {
    if (path) {
      file_.open(*path, std::ios::trunc);
      if (!file_) throw Error(ErrorCode::IoFailure, "cannot open '" + *path + "' for writing");
    }
  }

  void line(const nlohmann::json& j) { lines_ << j.dump() << "\n"; }
  std::ostream& summary() { return summary_; }

 private:
  std::ofstream file_;
  std::ostream& lines_;
  std::ostream& summary_;
};

inline void print_accuracy(std::ostream& os, const std::string& title, const std::vector<Labeled>& rows,
                           std::size_t skipped) {
  std::size_t labeled = 0;
  std::size_t correct = 0;
  for (const auto& r : rows) {
    if (r.truth.empty()) continue;
    ++labeled;
    correct += r.result.predicted_class == r.truth;
  }
  os << title << "\n";
  os << std::left << std::setw(10) << "queries" << std::setw(10) << "labeled" << std::setw(10) << "correct"
     << "top1(%)\n";
  os << std::setw(10) << rows.size() << std::setw(10) << labeled << std::setw(10) << correct;
  if (labeled > 0) {
    os << std::fixed << std::setprecision(2) << 100.0 * static_cast<double>(correct) / static_cast<double>(labeled)
       << std::defaultfloat;
  } else {
    os << "n/a";
  }
  os << "\n";
  if (skipped > 0) os << "skipped " << skipped << " images without the required embeddings\n";
}

inline TextKind parse_text_kind(const std::string& s) {
  if (s == "combined") return TextKind::Combined;
  if (s == "descriptor") return TextKind::DescriptorOnly;
  throw ConfigError("--text-kind must be 'combined' or 'descriptor'");
}

inline DescriptorMap require_descriptors(const EmbeddingArchive& archive, TextKind kind) {
  auto sets = descriptor_sets(archive, kind);
  if (sets.empty()) throw Error(ErrorCode::EmptyClassList, "archive has no descriptor embeddings of the requested kind");
  return sets;
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  // Accept "cache build" as an alias of "cache-build" and so on.
  std::vector<std::string> args(argv, argv + argc);
  static const std::map<std::string, std::vector<std::string>> kTwoWord = {
      {"crops", {"gen"}}, {"classify", {"zeroshot", "dnd", "fewshot"}}, {"cache", {"build"}},
      {"tta", {"run"}},   {"diagnose", {"prompts"}},                   {"oracle", {"emd"}}};
  if (args.size() >= 3) {
    const auto it = kTwoWord.find(args[1]);
    if (it != kTwoWord.end() && std::find(it->second.begin(), it->second.end(), args[2]) != it->second.end()) {
      args[1] += "-" + args[2];
      args.erase(args.begin() + 2);
    }
  }

  CLI::App app{"Set-to-set image/descriptor matching with optimal transport", "setmatch"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string archive_path, prompts_path, descriptors_path, cache_path, images_path, cost_path, train_path;
  std::string text_kind = "combined", mode = "mean", descriptor_agg = "mean";
  std::string alpha_grid;
  std::optional<std::string> cache_out;
  CropPlanConfig crop_cfg;
  std::size_t cross_sources = 5;
  std::optional<double> admission;

  auto* crops = app.add_subcommand("crops-gen", "Generate seeded crop plans");
  crops->add_option("--images", images_path, "Text file with one image id per line")->required()->check(CLI::ExistingFile);
  crops->add_option("--m", crop_cfg.count, "Crops per image")->capture_default_str();
  crops->add_option("--min-scale", crop_cfg.min_scale)->capture_default_str();
  crops->add_option("--max-scale", crop_cfg.max_scale)->capture_default_str();
  crops->add_option("--aspect-min", crop_cfg.aspect_lo)->capture_default_str();
  crops->add_option("--aspect-max", crop_cfg.aspect_hi)->capture_default_str();
  crops->add_flag("--include-full-image", crop_cfg.include_full_image, "Prepend the full-image rect");

  auto* zs = app.add_subcommand("classify-zeroshot", "Label-only or descriptor-mean zero-shot classification");
  zs->add_option("--archive", archive_path, "Query archive (image entries)")->required()->check(CLI::ExistingFile);
  zs->add_option("--prompts", prompts_path, "Prompt archive (defaults to --archive)")->check(CLI::ExistingFile);
  zs->add_option("--mode", mode, "label | mean")->capture_default_str()->check(CLI::IsMember({"label", "mean"}));

  auto* dnd = app.add_subcommand("classify-dnd", "Minimum-EMD classification of crop sets");
  dnd->add_option("--archive", archive_path, "Query archive (crop entries)")->required()->check(CLI::ExistingFile);
  dnd->add_option("--descriptors", descriptors_path, "Descriptor archive (defaults to --archive)")->check(CLI::ExistingFile);
  dnd->add_option("--text-kind", text_kind, "combined | descriptor")->capture_default_str();
  detail::add_sinkhorn_flags(dnd, cfg.sinkhorn);

  auto* cb = app.add_subcommand("cache-build", "Build a local-aware cache from labeled training crops");
  cb->add_option("--train", train_path, "Training archive (labeled crop entries)")->required()->check(CLI::ExistingFile);
  cb->add_option("--prompts", prompts_path, "Descriptor-only prompt archive (defaults to --train)")->check(CLI::ExistingFile);

  auto* fs = app.add_subcommand("classify-fewshot", "Cache-fused few-shot classification");
  fs->add_option("--archive", archive_path, "Query archive (crop entries)")->required()->check(CLI::ExistingFile);
  fs->add_option("--cache", cache_path, "Cache archive from cache-build")->required()->check(CLI::ExistingFile);
  fs->add_option("--descriptors", descriptors_path, "Descriptor archive (defaults to --archive)")->check(CLI::ExistingFile);
  fs->add_option("--text-kind", text_kind, "combined | descriptor")->capture_default_str();
  fs->add_option("--alpha", cfg.fusion.alpha, "Cache weight")->capture_default_str();
  fs->add_option("--beta", cfg.fusion.beta, "Affinity sharpness")->capture_default_str();
  fs->add_option("--alpha-grid", alpha_grid, "Comma-separated alphas to search on labeled queries, e.g. 0.25,0.5,1,2,4");
  detail::add_sinkhorn_flags(fs, cfg.sinkhorn);

  auto* tta = app.add_subcommand("tta-run", "Streaming test-time adaptation");
  tta->add_option("--archive", archive_path, "Query stream archive (crop entries)")->required()->check(CLI::ExistingFile);
  tta->add_option("--prompts", prompts_path, "Descriptor-only prompt archive (defaults to --archive)")->check(CLI::ExistingFile);
  tta->add_option("--descriptors", descriptors_path, "Descriptor archive (defaults to --prompts)")->check(CLI::ExistingFile);
  tta->add_option("--text-kind", text_kind, "combined | descriptor")->capture_default_str();
  tta->add_option("--capacity", cfg.tta.capacity, "Entries per class")->capture_default_str();
  tta->add_option("--admission", admission, "Entropy threshold (default ln C)");
  tta->add_option("--temperature", cfg.tta.temperature, "Softmax temperature for the entropy")->capture_default_str();
  tta->add_option("--alpha", cfg.fusion.alpha)->capture_default_str();
  tta->add_option("--beta", cfg.fusion.beta)->capture_default_str();
  tta->add_option("--cache-out", cache_out, "Write the final cache archive here");
  detail::add_sinkhorn_flags(tta, cfg.sinkhorn);

  auto* diag = app.add_subcommand("diagnose-prompts", "Prompt-type accuracy and hybrid similarity report");
  diag->add_option("--archive", archive_path, "Archive with labeled images and prompts")->required()->check(CLI::ExistingFile);
  diag->add_option("--prompts", prompts_path, "Prompt archive (defaults to --archive)")->check(CLI::ExistingFile);
  diag->add_option("--report", cfg.output, "Report JSON path")->required();
  diag->add_option("--descriptor-agg", descriptor_agg, "mean | max")->capture_default_str()->check(CLI::IsMember({"mean", "max"}));
  diag->add_option("--cross-sources", cross_sources, "Borrowed-descriptor classes per label (0 = all)")->capture_default_str();

  auto* oracle = app.add_subcommand("oracle-emd", "Exact and Sinkhorn EMD of a JSON cost matrix");
  oracle->add_option("--cost", cost_path, "JSON cost matrix [[...], ...]")->required()->check(CLI::ExistingFile);
  detail::add_sinkhorn_flags(oracle, cfg.sinkhorn);

  for (auto* sub : {crops, zs, dnd, cb, fs, tta, oracle}) {
    sub->add_option("--out", cfg.output, "Output path (default: standard output)");
  }
  for (auto* sub : {crops, zs, dnd, cb, fs, tta, diag, oracle}) {
    sub->add_option("--seed", cfg.seed, "Seed for all randomness")->capture_default_str();
  }

  std::vector<const char*> cargs;
  for (const auto& a : args) cargs.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitConfig;
  }

  try {
    cfg.tta.admission = admission;
    cfg.inputs = {archive_path, prompts_path, descriptors_path, cache_path};
    cfg.validate();
    if (prompts_path.empty()) prompts_path = archive_path.empty() ? train_path : archive_path;
    if (descriptors_path.empty()) descriptors_path = tta->parsed() ? prompts_path : archive_path;

    if (crops->parsed()) {
      try {
        crop_cfg.validate();
      } catch (const Error& e) {
        throw ConfigError(e.what());
      }
      std::ifstream ids(images_path);
      std::vector<CropPlan> plans;
      for (std::string line; std::getline(ids, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) plans.push_back(generate_crop_plan(line, cfg.seed, crop_cfg));
      }
      const auto text = crop_plans_to_json(plans).dump(2) + "\n";
      if (cfg.output) {
        std::ofstream f(*cfg.output, std::ios::trunc);
        if (!f) throw Error(ErrorCode::IoFailure, "cannot write " + *cfg.output);
        f << text;
        out << "wrote " << plans.size() << " crop plans to " << *cfg.output << "\n";
      } else {
        out << text;
      }
      return kExitOk;
    }

    if (oracle->parsed()) {
      std::ifstream f(cost_path);
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(f);
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("cost file: ") + e.what());
      }
      const auto& rows = j.is_object() ? j.at("cost") : j;
      ot::CostMatrix cost;
      try {
        cost = ot::CostMatrix::from_rows(rows.get<std::vector<std::vector<double>>>());
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("cost file: ") + e.what());
      }
      const auto exact = ot::exact_emd(cost);
      const auto approx = ot::sinkhorn_emd(cost, ot::Marginals::uniform(cost.rows(), cost.cols()), cfg.sinkhorn);
      auto plan_json = [](const ot::TransportPlan& p) {
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t m = 0; m < p.rows; ++m) {
          nlohmann::json row = nlohmann::json::array();
          for (std::size_t n = 0; n < p.cols; ++n) row.push_back(sig9(p(m, n)));
          rows.push_back(std::move(row));
        }
        return rows;
      };
      nlohmann::json report = {
          {"value", sig9(exact.achieved_cost)},
          {"plan", plan_json(exact)},
          {"sinkhorn",
           {{"value", sig9(approx.achieved_cost)},
            {"plan", plan_json(approx)},
            {"converged", approx.status == ot::SolveStatus::Converged},
            {"iterations", approx.iterations}}}};
      const auto text = report.dump(2) + "\n";
      if (cfg.output) {
        std::ofstream(*cfg.output, std::ios::trunc) << text;
      }
      out << text;
      return kExitOk;
    }

    if (zs->parsed()) {
      const auto queries = collect_queries(detail::load_checked(archive_path));
      const auto prompts = detail::load_checked(prompts_path);
      const auto labels = label_embeddings(prompts);
      const auto sets = mode == "mean" ? detail::require_descriptors(prompts, TextKind::Combined) : DescriptorMap{};
      if (mode == "label" && labels.empty()) throw Error(ErrorCode::EmptyClassList, "archive has no label prompts");
      std::vector<const QueryImage*> usable;
      for (const auto& q : queries)
        if (q.image) usable.push_back(&q);
      std::vector<detail::Labeled> rows(usable.size());
      parallel_for(usable.size(), [&](std::size_t i) {
        const auto& q = *usable[i];
        rows[i] = {q.id, q.true_class,
                   mode == "label" ? classify_label_only(*q.image, labels) : classify_descriptor_mean(*q.image, sets)};
      });
      detail::Reporter rep(cfg.output, out, err);
      for (const auto& r : rows) rep.line(result_line(r.id, r.result));
      detail::print_accuracy(rep.summary(), "zero-shot (" + mode + ")", rows, queries.size() - usable.size());
      return kExitOk;
    }

    if (dnd->parsed() || fs->parsed()) {
      const auto kind = detail::parse_text_kind(text_kind);
      const auto queries = collect_queries(detail::load_checked(archive_path));
      const auto sets = detail::require_descriptors(detail::load_checked(descriptors_path), kind);
      std::vector<const QueryImage*> usable;
      for (const auto& q : queries)
        if (q.crops) usable.push_back(&q);
      const std::size_t skipped = queries.size() - usable.size();
      detail::Reporter rep(cfg.output, out, err);

      if (dnd->parsed()) {
        std::vector<detail::Labeled> rows(usable.size());
        parallel_for(usable.size(), [&](std::size_t i) {
          rows[i] = {usable[i]->id, usable[i]->true_class, classify_dnd(*usable[i]->crops, sets, cfg.sinkhorn)};
        });
        for (const auto& r : rows) rep.line(result_line(r.id, r.result));
        detail::print_accuracy(rep.summary(), "zero-shot (set EMD)", rows, skipped);
        return kExitOk;
      }

      const auto caches = cache_from_archive(detail::load_checked(cache_path), sets);
      std::vector<FusionParts> parts(usable.size());
      parallel_for(usable.size(), [&](std::size_t i) {
        parts[i] = fusion_parts(*usable[i]->crops, caches, sets, cfg.sinkhorn);
      });
      std::vector<double> alphas;
      if (!alpha_grid.empty()) {
        std::stringstream ss(alpha_grid);
        for (std::string tok; std::getline(ss, tok, ',');) {
          try {
            alphas.push_back(std::stod(tok));
          } catch (const std::exception&) {
            throw ConfigError("bad --alpha-grid value '" + tok + "'");
          }
          if (!(alphas.back() >= 0.0)) throw ConfigError("--alpha-grid values must be >= 0");
        }
      }
      auto fuse_all = [&](double alpha) {
        FusionConfig f = cfg.fusion;
        f.alpha = alpha;
        std::vector<detail::Labeled> rows(usable.size());
        for (std::size_t i = 0; i < usable.size(); ++i) rows[i] = {usable[i]->id, usable[i]->true_class, fuse(parts[i], f)};
        return rows;
      };
      double chosen = cfg.fusion.alpha;
      if (!alphas.empty()) {
        std::size_t best_correct = 0;
        bool first = true;
        rep.summary() << "alpha grid (beta " << cfg.fusion.beta << ")\n";
        for (double a : alphas) {
          std::size_t labeled = 0, correct = 0;
          for (const auto& r : fuse_all(a)) {
            if (r.truth.empty()) continue;
            ++labeled;
            correct += r.result.predicted_class == r.truth;
          }
          rep.summary() << "  alpha " << std::setw(8) << std::left << a << " top1(%) " << std::fixed
                        << std::setprecision(2)
                        << (labeled ? 100.0 * static_cast<double>(correct) / static_cast<double>(labeled) : 0.0)
                        << std::defaultfloat << "\n";
          if (first || correct > best_correct) {
            best_correct = correct;
            chosen = a;
            first = false;
          }
        }
        rep.summary() << "selected alpha " << chosen << "\n";
      }
      const auto rows = fuse_all(chosen);
      for (const auto& r : rows) rep.line(result_line(r.id, r.result));
      detail::print_accuracy(rep.summary(), "few-shot (cache fused)", rows, skipped);
      return kExitOk;
    }

    if (cb->parsed()) {
      if (!cfg.output) throw ConfigError("cache-build requires --out");
      const auto train_archive = detail::load_checked(train_path);
      const auto prompts = descriptor_only_prompts(detail::load_checked(prompts_path));
      if (prompts.empty()) throw Error(ErrorCode::EmptyClassList, "archive has no descriptor-only prompts");
      std::vector<TrainingExample> training;
      for (auto& q : collect_queries(train_archive)) {
        if (!q.crops) continue;
        if (q.true_class.empty()) throw Error(ErrorCode::InvalidArgument, "training image '" + q.id + "' has no class");
        training.push_back({std::move(*q.crops), q.true_class});
      }
      const auto caches = build_cache(training, prompts);
      save_archive(cache_to_archive(caches, train_archive.dim), *cfg.output);
      out << "class      entries\n";
      for (const auto& [cls, c] : caches) out << std::left << std::setw(11) << cls << c.size() << "\n";
      return kExitOk;
    }

    if (tta->parsed()) {
      const auto kind = detail::parse_text_kind(text_kind);
      const auto query_archive = detail::load_checked(archive_path);
      const auto queries = collect_queries(query_archive);
      const auto prompts = descriptor_only_prompts(detail::load_checked(prompts_path));
      const auto sets = detail::require_descriptors(detail::load_checked(descriptors_path), kind);
      auto state = empty_caches(sets);
      detail::Reporter rep(cfg.output, out, err);
      std::vector<detail::Labeled> rows;
      std::size_t skipped = 0, admitted = 0;
      for (const auto& q : queries) {
        if (!q.crops) {
          ++skipped;
          continue;
        }
        auto step = tta_step(*q.crops, state, prompts, sets, cfg.fusion, cfg.sinkhorn, cfg.tta);
        admitted += step.admitted;
        rep.line(result_line(q.id, step.result));
        rows.push_back({q.id, q.true_class, std::move(step.result)});
      }
      detail::print_accuracy(rep.summary(), "test-time adaptation", rows, skipped);
      rep.summary() << "admitted " << admitted << " of " << rows.size() << " queries\n";
      if (cache_out) save_archive(cache_to_archive(state, query_archive.dim), *cache_out);
      return kExitOk;
    }

    if (diag->parsed()) {
      const auto archive = detail::load_checked(archive_path);
      const auto suite = diagnostics::restrict_cross_sources(
          prompt_suite(prompts_path == archive_path ? archive : detail::load_checked(prompts_path)), cross_sources,
          cfg.seed);
      std::vector<diagnostics::LabeledEmbedding> tests;
      for (const auto& q : collect_queries(archive)) {
        if (q.image && !q.true_class.empty()) tests.push_back({*q.image, q.true_class});
      }
      const auto agg = descriptor_agg == "max" ? diagnostics::DescriptorAggregation::Max
                                               : diagnostics::DescriptorAggregation::Mean;
      const auto report = diagnostics::diagnose(tests, suite, agg);
      auto stats_json = [](nlohmann::json& j, const diagnostics::SimilarityStats& s) {
        j["mean_intra_sim"] = sig9(s.mean_intra);
        j["mean_cross_sim"] = sig9(s.mean_cross);
        j["delta_sim"] = sig9(s.delta_sim);
        j["delta_label_sim"] = sig9(s.delta_label_sim);
      };
      nlohmann::json j = {{"num_images", tests.size()},
                          {"acc_label_only", sig9(report.acc_label_only)},
                          {"acc_descriptor_only", sig9(report.acc_descriptor_only)},
                          {"acc_hybrid_strict", sig9(report.acc_hybrid_strict)}};
      stats_json(j, report.similarity);
      nlohmann::json per_class = nlohmann::json::object();
      for (const auto& [cls, b] : report.per_class) {
        nlohmann::json c = {{"count", b.count},
                            {"acc_label_only", sig9(b.acc_label_only)},
                            {"acc_descriptor_only", sig9(b.acc_descriptor_only)},
                            {"acc_hybrid_strict", sig9(b.acc_hybrid_strict)}};
        stats_json(c, b.similarity);
        per_class[cls] = std::move(c);
      }
      j["per_class"] = std::move(per_class);
      std::ofstream f(*cfg.output, std::ios::trunc);
      if (!f) throw Error(ErrorCode::IoFailure, "cannot write " + *cfg.output);
      f << j.dump(2) << "\n";

      out << std::fixed << std::setprecision(2);
      out << "images " << tests.size() << "\n";
      out << "label-only acc(%)       " << 100.0 * report.acc_label_only << "\n";
      out << "descriptor-only acc(%)  " << 100.0 * report.acc_descriptor_only << "\n";
      out << "hybrid strict acc(%)    " << 100.0 * report.acc_hybrid_strict << "\n";
      out << "Intra  Cross  dSim  dLabelSim\n";
      out << report.similarity.mean_intra << "  " << report.similarity.mean_cross << "  "
          << report.similarity.delta_sim << "  " << report.similarity.delta_label_sim << "\n";
      out << std::defaultfloat;
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}

}  // namespace setmatch::cli
