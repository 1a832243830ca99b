// Command-line driver: corpus generation, clustering, probability and
// threshold reports, search-space measurement, cross-validation and
// synthesis.

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "isp/isp.hpp"

namespace {

using namespace isp;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::size_t> parse_sizes(const std::string& text) {
  const auto dots = text.find("..");
  try {
    std::size_t a = 0, b = 0, used = 0;
    if (dots == std::string::npos) {
      a = b = std::stoul(text, &used);
      if (used != text.size()) throw UsageError("");
    } else {
      a = std::stoul(text.substr(0, dots), &used);
      if (used != dots) throw UsageError("");
      const auto rhs = text.substr(dots + 2);
      b = std::stoul(rhs, &used);
      if (used != rhs.size()) throw UsageError("");
    }
    if (a < 1 || b < a) throw UsageError("");
    std::vector<std::size_t> out;
    for (std::size_t s = a; s <= b; ++s) out.push_back(s);
    return out;
  } catch (const std::logic_error&) {
    throw UsageError("invalid --sizes \"" + text + "\" (expected A..B)");
  } catch (const UsageError&) {
    throw UsageError("invalid --sizes \"" + text + "\" (expected A..B)");
  }
}

std::vector<double> parse_fractions(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      const double f = std::stod(item, &used);
      if (used != item.size() || !(f > 0 && f < 1)) throw std::invalid_argument("");
      out.push_back(f);
    } catch (const std::logic_error&) {
      throw UsageError("invalid fraction \"" + item + "\" (need 0 < f < 1)");
    }
  }
  if (out.empty()) throw UsageError("--fractions needs at least one value");
  return out;
}

template <typename Fn>
void emit(const std::string& path, Fn&& write) {
  std::ostringstream buf;
  write(buf);
  if (path == "-")
    std::cout << buf.str();
  else
    write_file_atomic(path, buf.str());
}

Corpus load_filtered(const std::string& path, std::size_t max_size) {
  auto filtered = filter_by_size(load_corpus(path), max_size);
  if (!filtered.dropped.empty())
    std::cerr << "isp: ignoring " << filtered.dropped.size() << " units larger than "
              << max_size << '\n';
  if (filtered.kept.empty()) throw CorpusError("no units within the size cap");
  return std::move(filtered.kept);
}

struct Common {
  std::string input;
  std::string output = "-";
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::size_t cap = 10;
  std::size_t max_size = 40;
  std::string sizes = "1..40";
  std::string mode = "sequences";
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Instruction and solution probability heuristics for inductive programming"};
  app.require_subcommand(1);
  app.fallthrough(false);

  Common c;
  auto add_io = [&](CLI::App* sub, bool input_required) {
    auto* in = sub->add_option("-i,--input", c.input, "Input file");
    if (input_required) in->required();
    sub->add_option("-o,--output", c.output, "Output file ('-' for stdout)");
  };
  auto add_threads = [&](CLI::App* sub) {
    sub->add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber);
  };

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a synthetic Zipfian corpus");
  std::size_t units = 1000, alphabet = 100, pools = 0, pool_size = 10, shared = 3;
  double exponent = 1.0;
  std::string size_dist = "uniform:1..40";
  bool dsl_corpus = false;
  gen->add_option("--units", units, "Number of program units")->check(CLI::PositiveNumber);
  gen->add_option("--alphabet", alphabet, "Alphabet size")->check(CLI::PositiveNumber);
  gen->add_option("--exponent", exponent, "Zipf exponent")->check(CLI::PositiveNumber);
  gen->add_option("--size-dist", size_dist, "fixed:N | uniform:A..B | geometric:P:A..B");
  gen->add_option("--pools", pools, "Clustered mode: number of instruction pools");
  gen->add_option("--pool-size", pool_size, "Instructions per pool")->check(CLI::PositiveNumber);
  gen->add_option("--shared", shared, "Top-ranked instructions shared by every pool");
  gen->add_flag("--dsl", dsl_corpus, "Generate runnable DSL programs instead");
  gen->add_option("--seed", c.seed, "Random seed");
  gen->add_option("-o,--output", c.output, "Output corpus (JSON Lines)");

  // cluster
  auto* cluster = app.add_subcommand("cluster", "Cluster units into instruction subsets");
  add_io(cluster, true);
  cluster->add_option("--cap", c.cap, "Subset size cap")->check(CLI::PositiveNumber);
  cluster->add_option("--max-size", c.max_size, "Ignore units larger than this");

  // probs
  auto* probs = app.add_subcommand("probs", "Instruction probability tables (CSV)");
  std::string family_path;
  add_io(probs, true);
  probs->add_option("--family", family_path, "Subset family; adds per-subset tables");
  probs->add_option("--max-size", c.max_size, "Ignore units larger than this");
  add_threads(probs);

  // thresholds
  auto* thresholds = app.add_subcommand("thresholds", "Per-size thresholds (CSV)");
  std::string ranges_path;
  add_io(thresholds, true);
  thresholds->add_option("--family", family_path, "Subset family; adds per-subset thresholds");
  thresholds->add_option("--max-size", c.max_size, "Largest size to threshold");
  thresholds->add_option("--ranges", ranges_path, "Also write possible/observed ranges here");
  add_threads(thresholds);

  // measure
  auto* measure_cmd = app.add_subcommand("measure", "Exact admissible search-space sizes (CSV)");
  std::string tables_path, thresholds_path, scope_sel = "auto";
  bool per_size = false, cumulative = false;
  add_io(measure_cmd, false);
  measure_cmd->add_option("--tables", tables_path, "Probability tables CSV");
  measure_cmd->add_option("--thresholds", thresholds_path, "Thresholds CSV");
  measure_cmd->add_option("--family", family_path, "Subset family (with -i)");
  measure_cmd->add_option("--scope", scope_sel, "auto | global | subsets | all")
      ->check(CLI::IsMember({"auto", "global", "subsets", "all"}));
  measure_cmd->add_flag("--per-size-counts", per_size,
                        "Count subset instructions only over units of each size");
  measure_cmd->add_flag("--cumulative", cumulative, "Count nodes at every depth up to the size");
  measure_cmd->add_option("--sizes", c.sizes, "Sizes A..B");
  measure_cmd->add_option("--cap", c.cap, "Baseline subset size")->check(CLI::PositiveNumber);
  measure_cmd->add_option("--mode", c.mode, "sequences | multisets")
      ->check(CLI::IsMember({"sequences", "multisets"}));
  add_threads(measure_cmd);

  // validate
  auto* validate_cmd = app.add_subcommand("validate", "Cross-validate thresholds (CSV)");
  std::string fractions = "0.001,0.01,0.05,0.25";
  std::size_t repeats = 1;
  bool train_probs = false;
  add_io(validate_cmd, true);
  validate_cmd->add_option("--fractions", fractions, "Comma-separated training fractions");
  validate_cmd->add_option("--max-size", c.max_size, "Largest size");
  validate_cmd->add_option("--seed", c.seed, "Split seed");
  validate_cmd->add_option("--repeats", repeats, "Splits per fraction")->check(CLI::PositiveNumber);
  validate_cmd->add_flag("--train-probabilities", train_probs,
                         "Derive instruction probabilities from the training part only");
  add_threads(validate_cmd);

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Synthesize a DSL program from test cases");
  std::string spec_path;
  double step = 2.0;
  std::size_t max_rounds = 0, synth_size = 6;
  bool no_prune = false;
  add_io(synth_cmd, true);
  synth_cmd->add_option("--spec", spec_path, "Test-case spec (JSON)")->required();
  synth_cmd->add_option("--family", family_path, "Subset family")->required();
  synth_cmd->add_option("--max-size", synth_size, "Largest program size")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--step", step, "Threshold widening per round (log10)")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--max-rounds", max_rounds, "Round limit (0: until the floor)");
  synth_cmd->add_flag("--no-prune", no_prune, "Disable threshold pruning");
  add_threads(synth_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    if (rc == 0) return 0;
    if (e.get_name() != "CallForHelp" && e.get_name() != "CallForAllHelp")
      std::cerr << app.help();
    return 2;
  }

  try {
    if (gen->parsed()) {
      Corpus corpus;
      const auto dist = SizeDistribution::parse(size_dist);
      if (dsl_corpus) {
        DslCorpusOptions o;
        o.num_units = units;
        o.sizes = dist;
        o.zipf_exponent = exponent;
        o.seed = c.seed;
        if (pools) o.pools = PoolLayout{pools, pool_size, shared};
        else o.pools.reset();
        corpus = generate_dsl_corpus(o);
      } else {
        ZipfCorpusOptions o;
        o.num_units = units;
        o.alphabet_size = alphabet;
        o.zipf_exponent = exponent;
        o.sizes = dist;
        o.seed = c.seed;
        if (pools) o.pools = PoolLayout{pools, pool_size, shared};
        corpus = generate_zipf_corpus(o);
      }
      emit(c.output, [&](std::ostream& out) { write_corpus(out, corpus); });
    } else if (cluster->parsed()) {
      const auto corpus = load_filtered(c.input, c.max_size);
      const auto family = cluster_subsets(corpus, c.cap);
      std::cerr << "isp: " << family.subsets.size() << " subsets, "
                << family.excluded_units.size() << " units excluded (more than " << c.cap
                << " unique instructions)\n";
      emit(c.output, [&](std::ostream& out) { write_family(out, family); });
    } else if (probs->parsed()) {
      const auto corpus = load_filtered(c.input, c.max_size);
      std::vector<ProbabilityTable> tables{global_instruction_probs(corpus)};
      if (!family_path.empty()) {
        const auto family = load_family(family_path);
        std::vector<ProbabilityTable> per(family.subsets.size());
        parallel_for(per.size(), c.threads, [&](std::size_t k) {
          per[k] = subset_instruction_probs(corpus, family.subsets[k]);
        });
        for (auto& t : per) tables.push_back(std::move(t));
      }
      emit(c.output, [&](std::ostream& out) { write_tables_csv(out, tables); });
    } else if (thresholds->parsed()) {
      const auto corpus = load_filtered(c.input, c.max_size);
      std::vector<ScopeModel> models{global_model(corpus, c.max_size)};
      std::vector<std::vector<std::string>> scope_units{{}};
      for (const auto& u : corpus.units()) scope_units[0].push_back(u.id);
      if (!family_path.empty()) {
        const auto family = load_family(family_path);
        for (auto& m : subset_models(corpus, family, c.max_size, c.threads))
          models.push_back(std::move(m));
        for (const auto& s : family.subsets) scope_units.push_back(s.covered_units);
      }
      std::vector<ThresholdTable> tts;
      for (const auto& m : models) tts.push_back(m.thresholds);
      emit(c.output, [&](std::ostream& out) { write_thresholds_csv(out, tts); });
      if (!ranges_path.empty()) {
        std::vector<std::pair<Scope, ProbabilityRange>> ranges;
        for (std::size_t k = 0; k < models.size(); ++k) {
          auto observed = observed_by_size(corpus, models[k].table, scope_units[k], c.max_size);
          for (std::size_t s = 1; s <= c.max_size; ++s) {
            std::optional<std::vector<double>> obs;
            if (observed.count(s)) obs = observed[s];
            ranges.emplace_back(models[k].table.scope(),
                                probability_range(models[k].table, s, obs));
          }
        }
        emit(ranges_path, [&](std::ostream& out) { write_ranges_csv(out, ranges); });
      }
    } else if (measure_cmd->parsed()) {
      const auto sizes = parse_sizes(c.sizes);
      std::vector<ScopeModel> models;
      if (!tables_path.empty() || !thresholds_path.empty()) {
        if (tables_path.empty() || thresholds_path.empty())
          throw UsageError("--tables and --thresholds must be given together");
        std::ifstream tin(tables_path), hin(thresholds_path);
        if (!tin) throw std::runtime_error("cannot open " + tables_path);
        if (!hin) throw std::runtime_error("cannot open " + thresholds_path);
        const auto tables = read_tables_csv(tin);
        const auto ths = read_thresholds_csv(hin);
        // auto: per-subset tables when the file has any, else the global one.
        const bool has_subsets = std::any_of(tables.begin(), tables.end(),
                                             [](const auto& t) { return !t.scope().is_global(); });
        const std::string sel = scope_sel != "auto" ? scope_sel : has_subsets ? "subsets" : "global";
        for (const auto& t : tables) {
          const bool want = sel == "all" || (sel == "global") == t.scope().is_global();
          if (!want) continue;
          ThresholdTable tt{t.scope(), {}};
          for (const auto& h : ths)
            if (h.scope == t.scope()) tt = h;
          models.push_back({t, tt});
        }
      } else {
        if (c.input.empty()) throw UsageError("measure needs -i or --tables/--thresholds");
        const std::size_t largest = sizes.back();
        const auto corpus = load_corpus(c.input);
        const bool want_subsets = scope_sel == "subsets" || scope_sel == "all" ||
                                  (scope_sel == "auto" && !family_path.empty());
        const bool want_global = scope_sel == "global" || scope_sel == "all" ||
                                 (scope_sel == "auto" && family_path.empty());
        if (want_global) models.push_back(global_model(corpus, largest));
        if (want_subsets) {
          if (family_path.empty()) throw UsageError("--scope subsets needs --family");
          const auto family = load_family(family_path);
          auto per = per_size ? subset_models_per_size(corpus, family, largest, c.threads)
                              : subset_models(corpus, family, largest, c.threads);
          for (auto& m : per) models.push_back(std::move(m));
        }
      }
      MeasureOptions mo;
      mo.is_cap = c.cap;
      mo.mode = parse_counting_mode(c.mode);
      mo.threads = c.threads;
      mo.cumulative = cumulative;
      const auto result = measure(models, sizes, mo);
      if (!result.missing.empty())
        std::cerr << "isp: skipped " << result.missing.size()
                  << " (scope, size) pairs without a threshold\n";
      emit(c.output, [&](std::ostream& out) { write_measurements_csv(out, result.measurements); });
    } else if (validate_cmd->parsed()) {
      const auto corpus = load_filtered(c.input, c.max_size);
      ValidationOptions vo;
      vo.fractions = parse_fractions(fractions);
      vo.max_size = c.max_size;
      vo.seed = c.seed;
      vo.repeats = repeats;
      vo.probabilities_from_training = train_probs;
      vo.threads = c.threads;
      const auto results = validate(corpus, vo);
      emit(c.output, [&](std::ostream& out) { write_validation_csv(out, results); });
    } else if (synth_cmd->parsed()) {
      std::ifstream sin(spec_path);
      if (!sin) throw std::runtime_error("cannot open " + spec_path);
      const auto spec = dsl::spec_from_json(nlohmann::json::parse(sin));
      const auto corpus = load_corpus(c.input);
      const auto family = load_family(family_path);
      const auto models = subset_models(corpus, family, synth_size, c.threads);
      SynthesisOptions so;
      so.max_size = synth_size;
      so.schedule.step_log10 = step;
      so.schedule.max_rounds = max_rounds;
      so.schedule.prune = !no_prune;
      so.threads = c.threads;
      const auto report = synthesize(spec, family, models, so);
      emit(c.output, [&](std::ostream& out) { out << report_to_json(report).dump(2) << '\n'; });
    }
  } catch (const UsageError& e) {
    std::cerr << "isp: usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "isp: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
