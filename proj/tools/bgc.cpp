// bgc: command-line front end for the complexity / generalization pipeline.
//
// Exit codes: 0 success, 1 validation error (bad input, bad flags),
// 2 numerical failure.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "bgc/complexity.hpp"
#include "bgc/dataset.hpp"
#include "bgc/error.hpp"
#include "bgc/features.hpp"
#include "bgc/generalize.hpp"
#include "bgc/linear_head.hpp"
#include "bgc/pipeline.hpp"
#include "bgc/roa.hpp"
#include "bgc/stats.hpp"
#include "bgc/svg.hpp"
#include "bgc/synthworld.hpp"

namespace fs = std::filesystem;

namespace {

enum class LogLevel { Quiet = 0, Warn = 1, Info = 2, Debug = 3 };

LogLevel log_level() {
  const char* env = std::getenv("BGC_LOG");
  if (!env) return LogLevel::Warn;
  const std::string v = env;
  if (v == "0" || v == "quiet") return LogLevel::Quiet;
  if (v == "2" || v == "info") return LogLevel::Info;
  if (v == "3" || v == "debug") return LogLevel::Debug;
  return LogLevel::Warn;
}

void log(LogLevel level, const std::string& msg) {
  static const LogLevel current = log_level();
  if (level <= current) std::cerr << "[bgc] " << msg << '\n';
}

/// Runs one stage, prefixing errors with the stage and its input.
template <typename F>
auto stage(const std::string& name, const std::string& input, F&& fn) -> decltype(fn()) {
  log(LogLevel::Info, name + (input.empty() ? "" : " <- " + input));
  try {
    return fn();
  } catch (const bgc::Error& e) {
    throw bgc::Error(e.family(), name + (input.empty() ? "" : " (" + input + ")") + ": " + e.what());
  } catch (const fs::filesystem_error& e) {
    throw bgc::InputError( name + ": " + e.what());
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw bgc::InputError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

std::string iso_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_run_info(const fs::path& dir, const std::string& command, double seconds) {
  bgc::write_json({{"command", command},
                   {"version", bgc::kToolVersion},
                   {"timestamp", iso_timestamp()},
                   {"elapsed_seconds", seconds}},
                  dir / "run_info.json");
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fixed(double v, int digits = 3) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

std::string describe(const bgc::MaybeCorrelation& c) {
  if (!c.value) return "undefined (" + c.error + ")";
  return "rho " + fixed(c.value->rho) + ", p " + fixed(c.value->p, 4);
}

/// Reads two numeric columns from a CSV; a non-numeric first line is a header.
void read_xy_csv(const fs::path& path, std::vector<double>& x, std::vector<double>& y) {
  std::ifstream is(path);
  if (!is) throw bgc::InputError("cannot open '" + path.string() + "'");
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (comma == std::string::npos) throw bgc::InputError(where + ": expected 'x,y'");
    const std::string a = line.substr(0, comma);
    std::string b = line.substr(comma + 1);
    if (const auto next = b.find(','); next != std::string::npos) b.resize(next);
    double xv = 0, yv = 0;
    try {
      std::size_t ua = 0, ub = 0;
      xv = std::stod(a, &ua);
      yv = std::stod(b, &ub);
      if (ua != a.size() || ub != b.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      if (x.empty() && line_no == 1) continue;  // header
      throw bgc::InputError(where + ": cannot parse '" + line + "' as two numbers");
    }
    x.push_back(xv);
    y.push_back(yv);
  }
}

struct MdlFlags {
  double tau = 0.01;
  int patience = 2;
  std::optional<double> epsilon;
  bool no_gain = false;

  bgc::MdlConfig config() const {
    bgc::MdlConfig c;
    c.gain_threshold = no_gain ? std::nullopt : std::optional<double>(tau);
    c.patience = patience;
    c.error_cap = epsilon;
    c.validate();
    return c;
  }

  void attach(CLI::App* cmd) {
    cmd->add_option("--mdl-tau", tau, "accuracy-gain threshold of the stopping rule")
        ->capture_default_str();
    cmd->add_option("--mdl-patience", patience, "consecutive low-gain steps before stopping")
        ->capture_default_str();
    cmd->add_option("--mdl-epsilon", epsilon, "error cap; stop once 1 - accuracy falls below it");
    cmd->add_flag("--no-gain-rule", no_gain, "disable the gain rule (requires --mdl-epsilon)");
  }
};

struct TrainFlags {
  int epochs = 500;
  double lr = 0.5;
  double l2 = 1e-4;

  bgc::TrainConfig config() const {
    bgc::TrainConfig t;
    t.epochs = epochs;
    t.learning_rate = lr;
    t.l2_penalty = l2;
    t.validate();
    return t;
  }

  void attach(CLI::App* cmd) {
    cmd->add_option("--epochs", epochs, "training epochs of the linear head")->capture_default_str();
    cmd->add_option("--lr", lr, "learning rate")->capture_default_str();
    cmd->add_option("--l2", l2, "L2 penalty")->capture_default_str();
  }
};

bgc::WorldSpec load_spec(const std::string& path, std::optional<std::uint64_t> seed) {
  bgc::WorldSpec spec = path.empty() ? bgc::default_world_spec() : bgc::read_world_spec(path);
  if (seed) spec.seed = *seed;
  spec.validate();
  return spec;
}

// ---- commands -------------------------------------------------------------------

struct SynthArgs {
  std::string spec, out;
  std::optional<std::uint64_t> seed;
};

int cmd_synth(const SynthArgs& a) {
  const auto spec = stage("spec", a.spec, [&] { return load_spec(a.spec, a.seed); });
  ensure_dir(a.out);
  const auto world = stage("generate", "", [&] { return bgc::generate(spec); });
  stage("write world", a.out, [&] { return bgc::write_world(world, a.out); });
  const auto bench =
      stage("benchmark", "", [&] { return bgc::make_benchmark(world.truth, spec.seed); });
  bgc::write_json(bgc::benchmark_to_json(bench, world.truth.names()), fs::path(a.out) / "benchmark.json");
  std::size_t images = 0;
  for (const auto& c : world.concepts) images += c.images.size();
  std::cout << "synth: " << world.concepts.size() << " concepts, " << images << " images, "
            << bench.similarity.size() << " similarity items, " << bench.rules.size()
            << " rule items -> " << a.out << '\n';
  return 0;
}

struct FeaturesArgs {
  std::string manifest, out;
  unsigned jobs = 1;
};

int cmd_features(const FeaturesArgs& a) {
  const auto images = stage("load images", a.manifest, [&] { return bgc::load_images(a.manifest); });
  const auto set = stage("extract", a.manifest,
                         [&] { return bgc::extract_activation_set(images, a.jobs); });
  ensure_dir(a.out);
  const auto m = bgc::read_manifest(a.manifest);
  stage("write dataset", a.out, [&] { return bgc::save_dataset(set, a.out, "features:" + m.name); });
  std::cout << "features: " << set.sample_count() << " samples x " << set.attribute_count()
            << " attributes, " << set.concept_count() << " concepts -> " << a.out << '\n';
  return 0;
}

struct RoaArgs {
  std::string dataset, prior, out;
};

int cmd_roa(const RoaArgs& a) {
  const auto set = stage("load dataset", a.dataset, [&] { return bgc::load_dataset(a.dataset); });
  std::vector<double> prior;
  if (!a.prior.empty())
    prior = stage("prior", a.prior, [&] { return bgc::read_prior_csv(a.prior, set.concept_names); });
  const auto roa = stage("roa", a.dataset, [&] { return bgc::compute_roa(set, prior); });
  ensure_dir(a.out);
  const fs::path out(a.out);
  bgc::write_roa_csv(roa, set.concept_names, out / "roa.csv");
  bgc::write_tensor(bgc::roa_tensor(roa), out / "roa.bgc");
  std::cout << "roa: " << roa.attribute_count() << " attributes x " << roa.concept_count()
            << " concepts -> " << (out / "roa.csv").string() << '\n';
  for (std::size_t c = 0; c < set.concept_count(); ++c) {
    const auto rank = bgc::rank_attributes(roa, static_cast<int>(c));
    std::cout << "  " << set.concept_names[c] << ": top attribute " << rank[0] << " ("
              << fixed(roa.scores(rank[0], c)) << ")\n";
  }
  return 0;
}

struct ComplexityArgs {
  std::string dataset, images, prior, out;
  TrainFlags train;
  MdlFlags mdl;
};

int cmd_complexity(const ComplexityArgs& a) {
  const auto set = stage("load dataset", a.dataset, [&] { return bgc::load_dataset(a.dataset); });
  const auto tc = stage("train config", "", [&] { return a.train.config(); });
  const auto mc = stage("mdl config", "", [&] { return a.mdl.config(); });
  std::vector<double> prior;
  if (!a.prior.empty())
    prior = stage("prior", a.prior, [&] { return bgc::read_prior_csv(a.prior, set.concept_names); });
  const auto head = stage("train", a.dataset, [&] { return bgc::train(set, tc); });
  const auto roa = stage("roa", a.dataset, [&] { return bgc::compute_roa(set, prior); });
  auto cx = stage("subjective complexity", a.dataset,
                  [&] { return bgc::subjective_complexity(head, set, roa, mc); });
  if (!a.images.empty()) {
    const auto imgs = stage("load images", a.images, [&] { return bgc::load_images(a.images); });
    stage("visual complexity", a.images, [&] {
      for (auto& c : cx) {
        const auto it = std::find_if(imgs.begin(), imgs.end(),
                                     [&](const bgc::ConceptImages& ci) { return ci.name == c.name; });
        if (it == imgs.end())
          throw bgc::ManifestError("concept '" + c.name + "' missing from the image manifest");
        c.visual_bits = bgc::visual_complexity(it->images);
      }
      return 0;
    });
  }
  ensure_dir(a.out);
  const fs::path out(a.out);
  bgc::save_head(head, out / "head");
  bgc::write_accuracy_csv(cx, out / "accuracy.csv");
  std::ofstream os(out / "complexity.csv", std::ios::trunc);
  os << "concept,subjective_len,stop_rule,visual_bits\n";
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& c : cx) {
    os << c.name << ',' << c.subjective_len << ',' << bgc::stop_rule_name(c.rule) << ','
       << (c.visual_bits ? bgc::csv_number(*c.visual_bits) : "") << '\n';
    rows.push_back({{"name", c.name},
                    {"subjective_len", c.subjective_len},
                    {"stop_rule", bgc::stop_rule_name(c.rule)},
                    {"visual_bits", c.visual_bits ? bgc::json_number(*c.visual_bits)
                                                  : nlohmann::json(nullptr)},
                    {"ranking", c.ranking},
                    {"accuracy_curve", c.accuracy_curve}});
  }
  bgc::write_json({{"tool", "bgc"}, {"version", bgc::kToolVersion}, {"concepts", rows}},
                  out / "complexity.json");
  std::cout << "complexity: head trained for " << head.training_log.size() << " epochs (accuracy "
            << fixed(head.training_log.back().accuracy) << ")\n";
  for (const auto& c : cx)
    std::cout << "  " << c.name << ": L = " << c.subjective_len << " ("
              << bgc::stop_rule_name(c.rule) << ")"
              << (c.visual_bits ? ", " + fixed(*c.visual_bits) + " bits" : std::string()) << '\n';
  return 0;
}

struct GeneralizeArgs {
  std::string dataset, benchmark, out;
};

int cmd_generalize(const GeneralizeArgs& a) {
  const auto set = stage("load dataset", a.dataset, [&] { return bgc::load_dataset(a.dataset); });
  const auto bench = stage("benchmark", a.benchmark,
                           [&] { return bgc::read_benchmark(a.benchmark, set.concept_names); });
  const auto ev = stage("evaluate", a.benchmark, [&] {
    return bgc::eval_benchmark(bgc::concept_embedding(set), bench);
  });
  ensure_dir(a.out);
  const fs::path out(a.out);
  auto names = [&](const std::vector<int>& ids) {
    std::string s;
    for (std::size_t i = 0; i < ids.size(); ++i) s += (i ? " " : "") + set.concept_names[static_cast<std::size_t>(ids[i])];
    return s;
  };
  std::ofstream sim(out / "similarity_items.csv", std::ios::trunc);
  sim << "item,query,predicted,truth,rho,p,excluded\n";
  for (std::size_t i = 0; i < ev.similarity.size(); ++i) {
    const auto& s = ev.similarity[i];
    sim << i << ',' << set.concept_names[static_cast<std::size_t>(bench.similarity[i].query)] << ','
        << names(s.predicted) << ',' << names(bench.similarity[i].truth) << ','
        << bgc::csv_number(s.rho) << ',' << bgc::csv_number(s.p) << ',' << s.excluded << '\n';
  }
  std::ofstream rule(out / "rule_items.csv", std::ios::trunc);
  rule << "item,c1,c2,c3,predicted,truth,rho,p,excluded\n";
  for (std::size_t i = 0; i < ev.rules.size(); ++i) {
    const auto& s = ev.rules[i];
    const auto& it = bench.rules[i];
    rule << i << ',' << set.concept_names[static_cast<std::size_t>(it.c1)] << ','
         << set.concept_names[static_cast<std::size_t>(it.c2)] << ','
         << set.concept_names[static_cast<std::size_t>(it.c3)] << ',' << names(s.predicted) << ','
         << names(it.truth) << ',' << bgc::csv_number(s.rho) << ',' << bgc::csv_number(s.p) << ','
         << s.excluded << '\n';
  }
  bgc::write_json({{"tool", "bgc"},
                   {"version", bgc::kToolVersion},
                   {"similarity_mean_rho", bgc::json_number(ev.similarity_mean_rho)},
                   {"rule_mean_rho", bgc::json_number(ev.rule_mean_rho)},
                   {"similarity_items", ev.similarity.size()},
                   {"rule_items", ev.rules.size()},
                   {"similarity_excluded", ev.similarity_excluded},
                   {"rule_excluded", ev.rule_excluded}},
                  out / "generalization.json");
  if (ev.similarity_excluded + ev.rule_excluded > 0)
    log(LogLevel::Warn, std::to_string(ev.similarity_excluded + ev.rule_excluded) +
                            " item(s) excluded for degenerate geometry");
  std::cout << "generalize: similarity mean rho " << fixed(ev.similarity_mean_rho) << " over "
            << ev.similarity.size() - ev.similarity_excluded << " items, rule mean rho "
            << fixed(ev.rule_mean_rho) << " over " << ev.rules.size() - ev.rule_excluded
            << " items\n";
  return 0;
}

struct TwoLinesArgs {
  std::string csv, out;
  double alpha = 0.05;
};

int cmd_twolines(const TwoLinesArgs& a) {
  std::vector<double> x, y;
  stage("read csv", a.csv, [&] {
    read_xy_csv(a.csv, x, y);
    return 0;
  });
  const auto t = stage("two lines", a.csv, [&] { return bgc::two_lines(x, y, a.alpha); });
  ensure_dir(a.out);
  const fs::path out(a.out);
  bgc::write_json(bgc::two_lines_to_json(t), out / "twolines.json");
  std::ofstream os(out / "twolines.csv", std::ios::trunc);
  os << "x,y,fit_left,fit_right\n";
  for (std::size_t i = 0; i < x.size(); ++i) {
    os << bgc::csv_number(x[i]) << ',' << bgc::csv_number(y[i]) << ',';
    if (x[i] <= t.breakpoint) os << bgc::csv_number(t.left.intercept + t.left.slope * x[i]);
    os << ',';
    if (x[i] >= t.breakpoint) os << bgc::csv_number(t.right.intercept + t.right.slope * x[i]);
    os << '\n';
  }
  bgc::two_lines_plot(x, y, t, "two-lines test", "x", "y").write(out / "twolines.svg");
  std::cout << "twolines: breakpoint " << bgc::csv_number(t.breakpoint) << ", left slope "
            << fixed(t.left.slope) << " (p " << fixed(t.left.p, 4) << "), right slope "
            << fixed(t.right.slope) << " (p " << fixed(t.right.p, 4) << "), inverted-U "
            << (t.inverted_u ? "yes" : "no") << '\n';
  return 0;
}

struct PipelineArgs {
  std::string spec, prior, out;
  std::optional<std::uint64_t> seed;
  double alpha = 0.05;
  unsigned jobs = 1;
  int epochs = 500;
  MdlFlags mdl;
};

int cmd_pipeline(const PipelineArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  bgc::PipelineConfig cfg;
  cfg.world = stage("spec", a.spec, [&] { return load_spec(a.spec, a.seed); });
  cfg.alpha = a.alpha;
  cfg.jobs = a.jobs;
  cfg.train.epochs = a.epochs;
  cfg.mdl = stage("mdl config", "", [&] { return a.mdl.config(); });
  auto world = stage("generate", "", [&] { return bgc::generate(cfg.world); });
  if (!a.prior.empty())
    cfg.prior = stage("prior", a.prior,
                      [&] { return bgc::read_prior_csv(a.prior, world.truth.names()); });
  const auto run = stage("pipeline", a.spec, [&] { return bgc::run_pipeline(cfg, std::move(world)); });
  const auto& r = run.report;

  ensure_dir(a.out);
  const fs::path out(a.out);
  bgc::write_json(bgc::report_to_json(r), out / "report.json");
  bgc::write_concept_csv(r, out / "concepts.csv");
  bgc::write_accuracy_csv(run.complexity, out / "accuracy.csv");
  bgc::write_json(bgc::benchmark_to_json(run.benchmark, run.world.truth.names()),
                  out / "benchmark.json");
  bgc::write_json(bgc::ground_truth_to_json(run.world.truth), out / "ground_truth.json");

  std::vector<double> bits, lens, sims, rules;
  for (const auto& c : r.concepts) {
    bits.push_back(c.visual_bits);
    lens.push_back(static_cast<double>(c.subjective_len));
    sims.push_back(c.similarity_rho);
    rules.push_back(c.rule_rho);
  }
  if (r.two_lines)
    bgc::two_lines_plot(bits, lens, *r.two_lines, "subjective vs visual complexity",
                        "visual complexity (bits)", "subjective complexity L")
        .write(out / "complexity.svg");
  bgc::SvgPlot ms("generalization score vs subjective complexity", "subjective complexity L",
                  "mean rank correlation");
  ms.add_points(lens, sims, "#1f77b4");
  ms.add_points(lens, rules, "#d62728");
  ms.write(out / "modeshift.svg");
  write_run_info(out, "pipeline", seconds_since(t0));

  std::cout << "pipeline: " << r.concepts.size() << " concepts, head accuracy "
            << fixed(r.final_accuracy) << " after " << r.epochs_run << " epochs\n";
  std::cout << "  tier  bits    L     sim    rule\n";
  for (const auto& t : r.tiers)
    std::cout << "  " << t.level << "     " << fixed(t.visual_bits_mean, 2) << "  "
              << fixed(t.subjective_len_mean, 2) << "  " << fixed(t.similarity_mean_rho, 2)
              << "  " << fixed(t.rule_mean_rho, 2) << '\n';
  if (r.two_lines)
    std::cout << "  two-lines: breakpoint " << fixed(r.two_lines->breakpoint) << ", slopes "
              << fixed(r.two_lines->left.slope) << " (p " << fixed(r.two_lines->left.p, 4)
              << ") / " << fixed(r.two_lines->right.slope) << " (p "
              << fixed(r.two_lines->right.p, 4) << "), inverted-U "
              << (r.two_lines->inverted_u ? "yes" : "no") << '\n';
  else
    std::cout << "  two-lines: " << r.two_lines_error << '\n';
  std::cout << "  similarity score vs L: " << describe(r.similarity_vs_len) << '\n';
  std::cout << "  rule score vs L:       " << describe(r.rule_vs_len) << '\n';
  std::cout << "  report -> " << (out / "report.json").string() << '\n';
  return 0;
}

struct SweepArgs {
  std::string spec, out;
  std::optional<std::uint64_t> seed;
  std::vector<int> epochs{50, 100, 200, 400};
  unsigned jobs = 1;
  MdlFlags mdl;
};

int cmd_epoch_sweep(const SweepArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  bgc::PipelineConfig cfg;
  cfg.world = stage("spec", a.spec, [&] { return load_spec(a.spec, a.seed); });
  cfg.jobs = a.jobs;
  cfg.mdl = stage("mdl config", "", [&] { return a.mdl.config(); });
  const auto sweep = stage("epoch sweep", a.spec, [&] { return bgc::epoch_sweep(cfg, a.epochs); });
  ensure_dir(a.out);
  const fs::path out(a.out);
  bgc::write_json(bgc::epoch_sweep_to_json(sweep, cfg), out / "epoch_sweep.json");
  bgc::write_epoch_csv(sweep, out / "epoch_sweep.csv");
  std::vector<double> x, ys, yr;
  for (const auto& p : sweep.points) {
    x.push_back(p.epochs);
    ys.push_back(p.similarity_mean_rho);
    yr.push_back(p.rule_mean_rho);
  }
  bgc::SvgPlot plot("mean rank correlation vs training epochs", "epochs", "mean rho");
  plot.add_polyline(x, ys, "#1f77b4");
  plot.add_polyline(x, yr, "#d62728");
  plot.write(out / "epoch_sweep.svg");
  write_run_info(out, "epoch-sweep", seconds_since(t0));
  std::cout << "epoch-sweep:\n  epochs  L_mean  sim     rule\n";
  for (const auto& p : sweep.points)
    std::cout << "  " << p.epochs << "\t  " << fixed(p.mean_subjective_len, 2) << "    "
              << fixed(p.similarity_mean_rho) << "  " << fixed(p.rule_mean_rho) << '\n';
  if (sweep.similarity_fit)
    std::cout << "  slope after dropping the first point: similarity "
              << bgc::csv_number(sweep.similarity_fit->slope) << " (p "
              << fixed(sweep.similarity_fit->p, 4) << "), rule "
              << bgc::csv_number(sweep.rule_fit->slope) << " (p " << fixed(sweep.rule_fit->p, 4)
              << ")\n";
  else
    std::cout << "  fit: " << sweep.fit_error << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian generalization and concept complexity pipeline"};
  app.set_version_flag("--version", std::string("bgc ") + bgc::kToolVersion);
  app.require_subcommand(1);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "generate a synthetic world and its benchmark");
  c_synth->add_option("--spec", synth.spec, "world spec JSON (default: built-in)");
  c_synth->add_option("--seed", synth.seed, "override the world spec seed");
  c_synth->add_option("--out", synth.out, "output directory")->required();

  FeaturesArgs feats;
  auto* c_feat = app.add_subcommand("features", "extract the 64-channel feature bank");
  c_feat->add_option("--manifest", feats.manifest, "images manifest")->required();
  c_feat->add_option("--out", feats.out, "output directory")->required();
  c_feat->add_option("--jobs", feats.jobs, "worker threads")->capture_default_str();

  RoaArgs roa;
  auto* c_roa = app.add_subcommand("roa", "representativeness of every attribute for every concept");
  c_roa->add_option("--dataset", roa.dataset, "activation manifest")->required();
  c_roa->add_option("--prior", roa.prior, "concept,weight CSV (default: uniform)");
  c_roa->add_option("--out", roa.out, "output directory")->required();

  ComplexityArgs cx;
  auto* c_cx = app.add_subcommand("complexity", "train the head and measure subjective complexity");
  c_cx->add_option("--dataset", cx.dataset, "activation manifest")->required();
  c_cx->add_option("--images", cx.images, "images manifest for visual complexity");
  c_cx->add_option("--prior", cx.prior, "concept,weight CSV (default: uniform)");
  c_cx->add_option("--out", cx.out, "output directory")->required();
  cx.train.attach(c_cx);
  cx.mdl.attach(c_cx);

  GeneralizeArgs gen;
  auto* c_gen = app.add_subcommand("generalize", "score a similarity/rule benchmark");
  c_gen->add_option("--dataset", gen.dataset, "activation manifest")->required();
  c_gen->add_option("--benchmark", gen.benchmark, "benchmark JSON")->required();
  c_gen->add_option("--out", gen.out, "output directory")->required();

  TwoLinesArgs tl;
  auto* c_tl = app.add_subcommand("twolines", "two-lines test for an inverted-U");
  c_tl->add_option("--csv", tl.csv, "x,y CSV")->required();
  c_tl->add_option("--alpha", tl.alpha, "significance level")->capture_default_str();
  c_tl->add_option("--out", tl.out, "output directory")->required();

  PipelineArgs pl;
  auto* c_pl = app.add_subcommand("pipeline", "run every stage on a synthetic world");
  c_pl->add_option("--spec", pl.spec, "world spec JSON (default: built-in)");
  c_pl->add_option("--seed", pl.seed, "override the world spec seed");
  c_pl->add_option("--out", pl.out, "output directory")->required();
  c_pl->add_option("--prior", pl.prior, "concept,weight CSV (default: uniform)");
  c_pl->add_option("--alpha", pl.alpha, "significance level")->capture_default_str();
  c_pl->add_option("--jobs", pl.jobs, "worker threads")->capture_default_str();
  c_pl->add_option("--epochs", pl.epochs, "training epochs of the linear head")->capture_default_str();
  pl.mdl.attach(c_pl);

  SweepArgs sw;
  auto* c_sw = app.add_subcommand("epoch-sweep", "rank correlations against training epochs");
  c_sw->add_option("--spec", sw.spec, "world spec JSON (default: built-in)");
  c_sw->add_option("--seed", sw.seed, "override the world spec seed");
  c_sw->add_option("--out", sw.out, "output directory")->required();
  c_sw->add_option("--epochs", sw.epochs, "comma-separated epoch budgets")
      ->delimiter(',')
      ->capture_default_str();
  c_sw->add_option("--jobs", sw.jobs, "worker threads")->capture_default_str();
  sw.mdl.attach(c_sw);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*c_synth) return cmd_synth(synth);
    if (*c_feat) return cmd_features(feats);
    if (*c_roa) return cmd_roa(roa);
    if (*c_cx) return cmd_complexity(cx);
    if (*c_gen) return cmd_generalize(gen);
    if (*c_tl) return cmd_twolines(tl);
    if (*c_pl) return cmd_pipeline(pl);
    if (*c_sw) return cmd_epoch_sweep(sw);
  } catch (const bgc::Error& e) {
    std::cerr << "bgc: " << e.what() << '\n';
    return e.family() == bgc::ErrorFamily::Numerical ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "bgc: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
