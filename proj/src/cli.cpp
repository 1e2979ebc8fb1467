#include "pscd/cli.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "pscd/error.hpp"
#include "pscd/evalharness.hpp"
#include "pscd/kernels.hpp"
#include "pscd/map_io.hpp"
#include "pscd/synthgen.hpp"

namespace pscd {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct StageError : Error {
  using Error::Error;
};

// Runs `fn`, prefixing any failure with the stage name.
template <class Fn>
auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name + ": " + e.what());
  }
}

std::vector<double> parse_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument("");
    } catch (const std::logic_error&) {
      throw ParameterError(flag + ": cannot parse \"" + item + "\" as a number");
    }
  }
  if (out.empty()) throw ParameterError(flag + ": empty list");
  return out;
}

json hyper_json(const SvmHyper& h) {
  return {{"c", h.c}, {"epochs", h.epochs}, {"seed", h.seed}};
}

std::string format_number(double v) {
  if (!std::isfinite(v)) return "nan";
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

// Model directory layout written by `train` and read by `detect`.
constexpr const char* kIndex = "models.json";
constexpr const char* kPartition = "partition.jsonl";

std::string region_stem(std::size_t r, const char* kind) {
  std::ostringstream os;
  os << "place_" << std::setw(5) << std::setfill('0') << r << "_" << kind;
  return os.str();
}

void write_models(const fs::path& dir, const PlaceModels& models, const json& config) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_partition(dir / kPartition, models.partition, {{"config", config}});
  json regions = json::array();
  for (std::size_t r = 0; r < models.partition.regions.size(); ++r) {
    json entry = {{"region", r}};
    if (models.anomaly[r]) {
      save_anomaly(dir / region_stem(r, "anomaly"), *models.anomaly[r]);
      entry["anomaly"] = region_stem(r, "anomaly");
    }
    if (models.nuisance[r]) {
      save_nuisance(dir / region_stem(r, "nuisance"), *models.nuisance[r]);
      entry["nuisance"] = region_stem(r, "nuisance");
    }
    entry["source"] = models.source[r] ? json(*models.source[r]) : json(nullptr);
    regions.push_back(std::move(entry));
  }
  const json index = {{"config", config},
                      {"partition", kPartition},
                      {"with_nuisance", models.with_nuisance},
                      {"untrainable_places", models.untrainable},
                      {"regions", std::move(regions)}};
  atomic_write(dir / kIndex, index.dump(2) + "\n");
}

PlaceModels read_models(const fs::path& dir) {
  std::ifstream in(dir / kIndex);
  if (!in) throw IoError("cannot open " + (dir / kIndex).string());
  PlaceModels m;
  try {
    const json index = json::parse(in);
    m.partition = load_partition(dir / index.at("partition").get<std::string>());
    m.with_nuisance = index.at("with_nuisance").get<bool>();
    m.untrainable = index.at("untrainable_places").get<std::size_t>();
    const auto n = m.partition.regions.size();
    const auto& regions = index.at("regions");
    if (regions.size() != n) throw StructureError("model index does not match partition");
    m.anomaly.resize(n);
    m.nuisance.resize(n);
    m.source.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
      const auto& e = regions[r];
      if (e.contains("anomaly")) m.anomaly[r] = load_anomaly(dir / e["anomaly"].get<std::string>());
      if (e.contains("nuisance")) {
        m.nuisance[r] = load_nuisance(dir / e["nuisance"].get<std::string>());
      }
      if (!e.at("source").is_null()) m.source[r] = e["source"].get<std::size_t>();
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("model index: ") + e.what());
  }
  return m;
}

struct Globals {
  std::uint64_t seed = 0;
  bool seed_given = false;
  int jobs = 0;
};

struct SvmFlags {
  double c = 1.0;
  int epochs = 20;

  void add(CLI::App* cmd) {
    cmd->add_option("--svm-c", c, "SVM regularization C")->capture_default_str();
    cmd->add_option("--svm-epochs", epochs, "SVM training epochs")->capture_default_str();
  }
  SvmHyper resolve(const Globals& g) const {
    SvmHyper h{c, epochs, g.seed};
    h.validate();
    return h;
  }
};

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Place-specific change detection on view-sequence maps"};
  app.fallthrough();
  app.name("pscd");
  app.require_subcommand(1);
  app.set_config("--config", "", "Read flags from a TOML/INI config file");

  Globals g;
  app.add_option("--seed", g.seed, "Seed for SVM training, random place selection and synth")
      ->each([&](const std::string&) { g.seed_given = true; });
  app.add_option("--jobs", g.jobs, "Worker threads (0 = OpenMP default)");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic benchmark");
  std::string synth_config, synth_out;
  synth->add_option("config", synth_config, "Synth config JSON")->required();
  synth->add_option("--out", synth_out, "Output directory")->required();

  // partition
  auto* part = app.add_subcommand("partition", "Split a map into place regions");
  std::string part_map, part_strategy, part_out;
  std::optional<int> part_k;
  std::optional<double> part_ts;
  part->add_option("--map", part_map, "Map manifest")->required();
  part->add_option("--strategy", part_strategy, "time | appearance")
      ->required()
      ->check(CLI::IsMember({"time", "appearance"}));
  part->add_option("--k", part_k, "Number of regions (time)");
  part->add_option("--ts", part_ts, "NBNN threshold T_s (appearance)");
  part->add_option("--out", part_out, "Partition file")->required();

  // train
  auto* train = app.add_subcommand("train", "Train per-place anomaly and nuisance models");
  std::string train_map, train_exp, train_part, train_out;
  bool train_no_nuisance = false;
  SvmFlags train_svm_flags;
  train->add_option("--map", train_map, "Map manifest")->required();
  train->add_option("--experience", train_exp, "Experience descriptor blob")->required();
  train->add_option("--partition", train_part, "Partition file")->required();
  train->add_option("--out", train_out, "Model directory")->required();
  train->add_flag("--no-nuisance", train_no_nuisance, "Skip nuisance predictors");
  train_svm_flags.add(train);

  // detect
  auto* detect = app.add_subcommand("detect", "Rank query features by change likelihood");
  std::string det_models, det_map, det_queries, det_out;
  double det_tn = 0.0, det_min_path = 400.0;
  detect->add_option("--models", det_models, "Model directory from `train`")->required();
  detect->add_option("--map", det_map, "Map manifest")->required();
  detect->add_option("--queries", det_queries, "Query manifest")->required();
  detect->add_option("--tn", det_tn, "Nuisance cut T_n in percent")->capture_default_str();
  detect->add_option("--min-path", det_min_path, "Loop-closure traveled distance, meters")
      ->capture_default_str();
  detect->add_option("--out", det_out, "Ranked output (JSON lines)")->required();

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Run the evaluation protocol");
  std::string ev_map, ev_exp, ev_queries, ev_gt, ev_part, ev_strategy, ev_out, ev_csv;
  std::string ev_tn = "0", ev_ts, ev_k, ev_select = "relevant";
  double ev_min_path = 400.0;
  std::optional<int> ev_stride;
  SvmFlags ev_svm_flags;
  eval->add_option("--map", ev_map, "Map manifest")->required();
  eval->add_option("--experience", ev_exp, "Experience descriptor blob")->required();
  eval->add_option("--queries", ev_queries, "Query manifest")->required();
  eval->add_option("--gt", ev_gt, "Ground-truth boxes")->required();
  auto* ev_part_opt = eval->add_option("--partition", ev_part, "Precomputed partition file");
  eval->add_option("--strategy", ev_strategy, "time | appearance")
      ->check(CLI::IsMember({"time", "appearance"}))
      ->excludes(ev_part_opt);
  eval->add_option("--ts", ev_ts, "T_s value(s), comma separated");
  eval->add_option("--k", ev_k, "Region count(s), comma separated");
  eval->add_option("--tn", ev_tn, "T_n value(s) in percent, comma separated")->capture_default_str();
  eval->add_option("--min-path", ev_min_path, "Loop-closure traveled distance, meters")
      ->capture_default_str();
  eval->add_option("--place-select", ev_select, "relevant | random")
      ->check(CLI::IsMember({"relevant", "random"}))
      ->capture_default_str();
  eval->add_option("--baseline-stride", ev_stride, "Also report the dense baseline at this stride");
  eval->add_option("--out", ev_out, "Report JSON")->required();
  eval->add_option("--csv", ev_csv, "Sweep CSV (default: report path with .csv)");
  ev_svm_flags.add(eval);

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (g.jobs < 0) throw ParameterError("--jobs must be >= 0");
    set_worker_count(g.jobs);

    if (*synth) {
      SynthConfig cfg = stage("reading synth config", [&] {
        std::ifstream in(synth_config);
        if (!in) throw IoError("cannot open " + synth_config);
        json j;
        try {
          j = json::parse(in);
        } catch (const json::exception& e) {
          throw ParseError(e.what());
        }
        return synth_config_from_json(j);
      });
      if (g.seed_given) cfg.seed = g.seed;
      const auto data = stage("generating", [&] { return generate(cfg); });
      stage("writing", [&] { write_synth(data, synth_out); });
      out << "wrote " << data.map.frames.size() << " map frames, " << data.queries.size()
          << " queries to " << synth_out << "\n";
      return 0;
    }

    if (*part) {
      const auto map = stage("loading map", [&] { return load_map(part_map); });
      const auto strategy = parse_strategy(part_strategy);
      PlacePartition p;
      if (strategy == PartitionStrategy::Time) {
        if (!part_k) throw ParameterError("--strategy time needs --k");
        p = stage("partitioning", [&] { return partition_time(static_cast<int>(map.size()), *part_k); });
      } else {
        if (!part_ts) throw ParameterError("--strategy appearance needs --ts");
        p = stage("partitioning", [&] { return partition_appearance(map, *part_ts); });
      }
      const json config = {{"command", "partition"},
                           {"map", part_map},
                           {"strategy", part_strategy},
                           {"param", p.param}};
      stage("writing", [&] { write_partition(part_out, p, {{"config", config}}); });
      out << p.size() << " regions\n";
      return 0;
    }

    if (*train) {
      const auto hyper = train_svm_flags.resolve(g);
      const auto map = stage("loading map", [&] { return load_map(train_map); });
      const auto exp = stage("loading experience", [&] { return load_experience(train_exp); });
      const auto p = stage("loading partition", [&] { return load_partition(train_part); });
      const auto models = stage("training", [&] {
        return train_place_models(map, exp, p, hyper, !train_no_nuisance);
      });
      const json config = {{"command", "train"},
                           {"map", train_map},
                           {"experience", train_exp},
                           {"partition", train_part},
                           {"nuisance", !train_no_nuisance},
                           {"hyper", hyper_json(hyper)}};
      stage("writing", [&] { write_models(train_out, models, config); });
      out << models.partition.size() << " places, " << models.untrainable << " untrainable\n";
      return 0;
    }

    if (*detect) {
      const auto models = stage("loading models", [&] { return read_models(det_models); });
      const auto map = stage("loading map", [&] { return load_map(det_map); });
      const auto queries = stage("loading queries", [&] { return load_map(det_queries); });
      validate_partition(models.partition, static_cast<int>(map.size()));
      nuisance_cut(det_tn, 0);
      if (det_tn > 0.0 && !models.with_nuisance) {
        throw ParameterError("--tn > 0 needs models trained with nuisance predictors");
      }
      const json config = {{"command", "detect"},
                           {"models", det_models},
                           {"map", det_map},
                           {"queries", det_queries},
                           {"tn", det_tn},
                           {"min_path", det_min_path}};
      std::string text = json{{"config", config}}.dump() + "\n";
      const CumulativePath path(map);
      stage("detecting", [&] {
        for (const auto& q : queries.frames) {
          json line;
          try {
            const int rel = find_relevant_pair(map, path, q.pose, det_min_path);
            const auto src = models.source[models.partition.region_index(rel)];
            if (!src) {
              line = {{"frame_id", q.id}, {"relevant_map_frame_id", rel}, {"ranking", json::array()},
                      {"excluded", "no trainable place"}};
            } else {
              FilterResult f;
              if (det_tn > 0.0) {
                f = filter_nuisance(*models.nuisance[*src], q.features, det_tn);
              } else {
                for (std::size_t i = 0; i < q.features.size(); ++i) f.kept.push_back(i);
              }
              line = ranking_to_json(q.id, q.features,
                                     rank_changes(*models.anomaly[*src], q.features, f.kept));
              line["relevant_map_frame_id"] = rel;
              line["place"] = *src;
              line["removed"] = f.removed;
            }
          } catch (const NoRelevantPairError& e) {
            line = {{"frame_id", q.id}, {"ranking", json::array()}, {"excluded", e.what()}};
          }
          text += line.dump() + "\n";
        }
      });
      stage("writing", [&] { atomic_write(det_out, text); });
      out << queries.frames.size() << " queries ranked\n";
      return 0;
    }

    if (*eval) {
      const auto hyper = ev_svm_flags.resolve(g);
      const auto tns = parse_list(ev_tn, "--tn");
      for (double tn : tns) nuisance_cut(tn, 0);
      const auto map = stage("loading map", [&] { return load_map(ev_map); });
      const auto exp = stage("loading experience", [&] { return load_experience(ev_exp); });
      const auto qmap = stage("loading queries", [&] { return load_map(ev_queries); });
      const auto boxes = stage("loading ground truth", [&] { return load_ground_truth(ev_gt); });
      if (qmap.descriptor_dim != map.descriptor_dim) {
        throw DimensionError("query descriptor dim " + std::to_string(qmap.descriptor_dim) +
                             " != map dim " + std::to_string(map.descriptor_dim));
      }

      std::vector<PlacePartition> partitions;
      stage("partitioning", [&] {
        if (!ev_part.empty()) {
          partitions.push_back(load_partition(ev_part));
        } else if (ev_strategy == "time") {
          if (ev_k.empty()) throw ParameterError("--strategy time needs --k");
          for (double k : parse_list(ev_k, "--k")) {
            if (k != std::floor(k)) throw ParameterError("--k must be integral");
            partitions.push_back(partition_time(static_cast<int>(map.size()), static_cast<int>(k)));
          }
        } else if (ev_strategy == "appearance") {
          if (ev_ts.empty()) throw ParameterError("--strategy appearance needs --ts");
          for (double ts : parse_list(ev_ts, "--ts")) partitions.push_back(partition_appearance(map, ts));
        } else if (!ev_stride) {
          throw ParameterError("give --partition, --strategy or --baseline-stride");
        }
      });

      PipelineOptions opts;
      opts.hyper = hyper;
      opts.min_path = ev_min_path;
      opts.selection = ev_select == "random" ? PlaceSelection::Random : PlaceSelection::Relevant;
      opts.seed = g.seed;

      json reports = json::array();
      std::vector<EvalReport> all;
      const bool any_nuisance = std::any_of(tns.begin(), tns.end(), [](double t) { return t > 0.0; });
      stage("evaluating", [&] {
        for (const auto& p : partitions) {
          const auto models = train_place_models(map, exp, p, hyper, any_nuisance);
          for (double tn : tns) {
            opts.tn = tn;
            all.push_back(evaluate_queries(map, models, qmap.frames, boxes, opts));
          }
        }
        if (ev_stride) all.push_back(baseline_dense(map, exp, qmap.frames, boxes, *ev_stride, opts));
      });

      // Job count is deliberately absent: results do not depend on it.
      const json config = {{"command", "evaluate"},
                           {"map", ev_map},
                           {"experience", ev_exp},
                           {"queries", ev_queries},
                           {"gt", ev_gt},
                           {"partition", ev_part},
                           {"strategy", ev_strategy},
                           {"ts", ev_ts},
                           {"k", ev_k},
                           {"tn", ev_tn},
                           {"min_path", ev_min_path},
                           {"place_select", ev_select},
                           {"baseline_stride", ev_stride ? json(*ev_stride) : json(nullptr)},
                           {"seed", g.seed},
                           {"hyper", hyper_json(hyper)}};
      std::string csv = "# config: " + config.dump() + "\n";
      csv += "strategy,param,tn,selection,mean_rank,place_count,untrainable_places,queries,excluded\n";
      for (const auto& r : all) {
        reports.push_back(to_json(r));
        csv += r.strategy + "," + format_number(r.strategy_param) + "," + format_number(r.tn) + "," +
               r.selection + "," + format_number(r.mean_rank) + "," + std::to_string(r.place_count) +
               "," + std::to_string(r.untrainable_places) + "," +
               std::to_string(r.per_query_ranks.size()) + "," + std::to_string(r.excluded.size()) +
               "\n";
      }
      const fs::path csv_path = ev_csv.empty() ? fs::path(ev_out).replace_extension(".csv") : fs::path(ev_csv);
      stage("writing", [&] {
        atomic_write(ev_out, json{{"config", config}, {"reports", std::move(reports)}}.dump(2) + "\n");
        atomic_write(csv_path, csv);
      });
      for (const auto& r : all) {
        out << r.strategy << " " << format_number(r.strategy_param) << " tn=" << format_number(r.tn)
            << " places=" << r.place_count << " mean_rank=" << format_number(r.mean_rank) << "\n";
      }
      return 0;
    }
  } catch (const std::exception& e) {
    err << "pscd: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace pscd
