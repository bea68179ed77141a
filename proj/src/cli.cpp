#include "hl/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <sstream>

#include "hl/io.hpp"
#include "hl/stats.hpp"

namespace hl {

namespace fs = std::filesystem;

namespace {

template <typename T>
T parse_number(std::string_view text) {
  T value{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw std::invalid_argument("not a non-negative integer: '" + std::string(text) + "'");
  return value;
}

template <typename T>
std::vector<T> parse_list(std::string_view text) {
  if (text.empty()) throw std::invalid_argument("empty list");
  std::vector<T> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const std::string_view item = text.substr(0, comma);
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    if (item.empty()) throw std::invalid_argument("empty item in list");
    const auto dash = item.find('-');
    if (dash == std::string_view::npos) {
      out.push_back(parse_number<T>(item));
      continue;
    }
    const T lo = parse_number<T>(item.substr(0, dash));
    const T hi = parse_number<T>(item.substr(dash + 1));
    if (hi < lo) throw std::invalid_argument("descending range '" + std::string(item) + "'");
    for (T v = lo;; ++v) {
      out.push_back(v);
      if (v == hi) break;
    }
  }
  return out;
}

}  // namespace

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
  return parse_list<std::uint64_t>(text);
}

std::vector<std::size_t> parse_size_list(std::string_view text) {
  return parse_list<std::size_t>(text);
}

std::string format_seed_list(std::span<const std::uint64_t> seeds) {
  std::string out;
  for (std::size_t i = 0; i < seeds.size();) {
    std::size_t j = i;
    while (j + 1 < seeds.size() && seeds[j + 1] == seeds[j] + 1) ++j;
    if (!out.empty()) out += ',';
    out += std::to_string(seeds[i]);
    if (j > i) out += '-' + std::to_string(seeds[j]);
    i = j + 1;
  }
  return out;
}

std::vector<std::size_t> default_checkpoints(std::size_t n) {
  std::vector<std::size_t> out;
  for (std::size_t p = 1; p < n; p *= 2) out.push_back(p);
  if (n > 0) out.push_back(n);
  return out;
}

std::string config_hash(std::span<const std::string> canonical_args) {
  std::string joined;
  for (const auto& a : canonical_args) {
    joined += a;
    joined += '\x1f';
  }
  return to_hex(fnv1a64(joined));
}

std::string trace_csv(std::span<const TracePoint> trace) {
  std::string out = "n,sup_error,bound,grid_error_bound\n";
  for (const auto& t : trace)
    out += std::to_string(t.n) + ',' + format_real(t.sup_error) + ',' + format_real(t.bound) + ',' +
           format_real(t.grid_error_bound) + '\n';
  return out;
}

std::string trace_csv(std::span<const TracePoint> trace, double epsilon_witness) {
  std::string out = "n,sup_error,bound,grid_error_bound,epsilon_witness\n";
  const std::string eps = format_real(epsilon_witness);
  for (const auto& t : trace)
    out += std::to_string(t.n) + ',' + format_real(t.sup_error) + ',' + format_real(t.bound) + ',' +
           format_real(t.grid_error_bound) + ',' + eps + '\n';
  return out;
}

std::string boundary_csv(std::span<const Complex> points) {
  std::string out = "theta,re,im\n";
  const std::size_t M = points.size();
  for (std::size_t j = 0; j < M; ++j)
    out += format_real(2.0 * std::numbers::pi * double(j) / double(M)) + ',' +
           format_real(points[j].real()) + ',' + format_real(points[j].imag()) + '\n';
  return out;
}

std::string spectrum_csv(std::span<const SpectrumRow> rows) {
  std::string out = "seed,m,re_a,im_a,r,n\n";
  for (const auto& row : rows)
    for (Eigen::Index m = 0; m < row.spectrum.coeffs.size(); ++m)
      out += std::to_string(row.seed) + ',' + std::to_string(m) + ',' +
             format_real(row.spectrum.coeffs[m].real()) + ',' +
             format_real(row.spectrum.coeffs[m].imag()) + ',' + format_real(row.spectrum.r) + ',' +
             std::to_string(row.n) + '\n';
  return out;
}

std::string modesums_csv(std::span<const ModeSumRow> rows) {
  std::string out = "seed,m,re_M,im_M\n";
  for (const auto& row : rows)
    for (Eigen::Index m = 0; m < row.sums.sums.size(); ++m)
      out += std::to_string(row.seed) + ',' + std::to_string(m) + ',' +
             format_real(row.sums.sums[m].real()) + ',' + format_real(row.sums.sums[m].imag()) +
             '\n';
  return out;
}

namespace {

struct Options {
  std::string command;
  double alpha = 1.0;
  double c = 0.01;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  std::string seeds;
  double r = std::numeric_limits<double>::quiet_NaN();
  std::size_t grid = 0;
  std::size_t modes = 16;
  std::string particle = "slit";
  std::string checkpoints;
  std::string out;
  unsigned jobs = 0;
  double offset = 1e-4;
  std::size_t stride = 0;
  double c_max = kDefaultCapacityCap;
  std::string manifest;
};

class Run {
 public:
  Run(const Options& o, std::ostream& out) : o_(o), out_(out) {
    dir_ = o.out;
    if (dir_.empty()) {
      const char* env = std::getenv("HL_OUT");
      dir_ = env && *env ? fs::path(env) : fs::path("hl_out");
    }
  }

  void canonical(std::vector<std::string> args) { args_ = std::move(args); }

  void emit(const std::string& name, const std::string& contents) {
    if (!created_) {
      std::error_code ec;
      fs::create_directories(dir_, ec);
      if (ec)
        throw std::runtime_error("cannot create output directory '" + dir_.string() +
                                 "': " + ec.message());
      created_ = true;
    }
    write_text_file(dir_ / name, contents);
    files_.push_back(name);
  }

  const std::string& hash() {
    if (hash_.empty()) hash_ = config_hash(args_);
    return hash_;
  }

  void finish(nlohmann::json fields) {
    fields["subcommand"] = o_.command;
    fields["artifact_version"] = std::string(kArtifactVersion);
    fields["rng_algorithm"] = std::string(kRngAlgorithm);
    fields["config_hash"] = hash();
    fields["argv"] = args_;
    fields["files"] = files_;
    emit("manifest.json", fields.dump(2) + "\n");
    out_ << "wrote " << (dir_ / "manifest.json").string() << " (config " << hash() << ")\n";
  }

  const fs::path& dir() const { return dir_; }

 private:
  const Options& o_;
  std::ostream& out_;
  fs::path dir_;
  bool created_ = false;
  std::vector<std::string> args_;
  std::vector<std::string> files_;
  std::string hash_;
};

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

void check_common(const Options& o, bool needs_alpha) {
  if (needs_alpha) ScheduleParams{o.alpha, o.c, 0}.validate();
  require(o.c > 0 && std::isfinite(o.c), "c must be positive (got " + format_real(o.c) + ")");
  require(o.c <= o.c_max, "c = " + format_real(o.c) + " exceeds the capacity cap c_max = " +
                              format_real(o.c_max));
  parse_family(o.particle);
}

void check_grid(const Options& o) {
  require(o.r > 1.0, "r must exceed 1 (got " + format_real(o.r) + ")");
  require(is_power_of_two(o.grid), "grid must be a power of two (got " + std::to_string(o.grid) + ")");
}

std::vector<std::size_t> checkpoints_for(const Options& o) {
  std::vector<std::size_t> cps;
  if (!o.checkpoints.empty()) {
    cps = parse_size_list(o.checkpoints);
  } else if (o.command == "alpha0") {
    const std::size_t stride = o.stride ? o.stride : std::max<std::size_t>(1, o.n / 80);
    for (std::size_t k = stride; k <= o.n; k += stride) cps.push_back(k);
    if (cps.empty() || cps.back() != o.n) cps.push_back(o.n);
  } else {
    cps = default_checkpoints(o.n);
  }
  std::sort(cps.begin(), cps.end());
  cps.erase(std::unique(cps.begin(), cps.end()), cps.end());
  for (std::size_t k : cps)
    require(k >= 1 && k <= o.n,
            "checkpoints must lie in [1, n] = [1, " + std::to_string(o.n) + "] (got " +
                std::to_string(k) + ")");
  require(!cps.empty(), "at least one checkpoint is required");
  return cps;
}

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t x : v) s += (s.empty() ? "" : ",") + std::to_string(x);
  return s;
}

std::vector<std::uint64_t> seeds_for(const Options& o) {
  if (o.seeds.empty()) return {o.seed};
  auto seeds = parse_seed_list(o.seeds);
  std::vector<std::uint64_t> sorted = seeds;
  std::sort(sorted.begin(), sorted.end());
  require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
          "seed list has duplicates");
  return seeds;
}

int cmd_simulate(const Options& o, std::ostream& out) {
  check_common(o, true);
  check_grid(o);
  require(o.n >= 1, "n must be at least 1");
  const auto cps = checkpoints_for(o);
  Run run(o, out);
  run.canonical({"simulate", "--alpha", format_real(o.alpha), "--c", format_real(o.c), "--n",
                 std::to_string(o.n), "--seed", std::to_string(o.seed), "--r", format_real(o.r),
                 "--grid", std::to_string(o.grid), "--particle", o.particle, "--checkpoints",
                 join_sizes(cps), "--c-max", format_real(o.c_max)});
  const ClusterRealization real({o.alpha, o.c, o.n}, parse_family(o.particle), o.seed, o.c_max);
  const auto trace = sup_error_trace(real, o.r, o.grid, cps);
  run.emit("trace.csv", trace_csv(trace));
  run.finish({{"alpha", o.alpha}, {"c", o.c}, {"n", o.n}, {"family", o.particle},
              {"seed", o.seed}, {"r", o.r}, {"M", o.grid}});
  const auto& last = trace.back();
  out << "n = " << last.n << ": sup|M_n| = " << format_real(last.sup_error)
      << ", log n / sqrt n = " << format_real(last.bound) << "\n";
  return kExitOk;
}

EnsembleConfig ensemble_config(const Options& o, const std::vector<std::uint64_t>& seeds) {
  EnsembleConfig cfg;
  cfg.params = {o.alpha, o.c, o.n};
  cfg.family = parse_family(o.particle);
  cfg.seeds = seeds;
  cfg.r = o.r;
  cfg.grid = o.grid;
  cfg.m_max = o.modes;
  cfg.checkpoints = {o.n};
  cfg.jobs = o.jobs;
  return cfg;
}

void emit_spectra(Run& run, const EnsembleResult& res, std::ostream& err) {
  std::vector<SpectrumRow> spec;
  std::vector<ModeSumRow> sums;
  for (const auto& s : res.seeds) {
    if (!s.ok) {
      err << "seed " << s.seed << " failed: " << s.error << "\n";
      continue;
    }
    spec.push_back({s.seed, res.checkpoints.back(), s.spectra.back()});
    sums.push_back({s.seed, s.modes.back()});
  }
  run.emit("spectrum.csv", spectrum_csv(spec));
  run.emit("modesums.csv", modesums_csv(sums));
}

std::vector<std::string> spectral_args(const char* name, const Options& o,
                                       const std::vector<std::uint64_t>& seeds) {
  return {name, "--alpha", format_real(o.alpha), "--c", format_real(o.c), "--n",
          std::to_string(o.n), "--seeds", format_seed_list(seeds), "--r", format_real(o.r),
          "--grid", std::to_string(o.grid), "--modes", std::to_string(o.modes), "--particle",
          o.particle, "--c-max", format_real(o.c_max)};
}

nlohmann::json spectral_fields(const Options& o, const std::vector<std::uint64_t>& seeds) {
  return {{"alpha", o.alpha}, {"c", o.c},     {"n", o.n},         {"family", o.particle},
          {"seeds", seeds},   {"r", o.r},     {"M", o.grid},      {"m_max", o.modes}};
}

void check_spectral(const Options& o) {
  check_common(o, true);
  check_grid(o);
  require(o.n >= 1, "n must be at least 1");
  require(o.grid >= 4 * o.modes, "grid must be at least 4 * modes (grid " +
                                     std::to_string(o.grid) + ", modes " +
                                     std::to_string(o.modes) + ")");
}

int cmd_spectrum(const Options& o, std::ostream& out, std::ostream& err) {
  check_spectral(o);
  const auto seeds = seeds_for(o);
  Run run(o, out);
  run.canonical(spectral_args("spectrum", o, seeds));
  const auto res = run_ensemble(ensemble_config(o, seeds));
  emit_spectra(run, res, err);
  run.finish(spectral_fields(o, seeds));
  return kExitOk;
}

int cmd_ensemble(const Options& o, std::ostream& out, std::ostream& err) {
  check_spectral(o);
  const auto seeds = o.seeds.empty() ? std::vector<std::uint64_t>{} : seeds_for(o);
  Run run(o, out);
  run.canonical(spectral_args("ensemble", o, seeds));
  const auto res = run_ensemble(ensemble_config(o, seeds));
  emit_spectra(run, res, err);

  nlohmann::json report;
  report["config_hash"] = run.hash();
  report["seeds_ok"] = seeds.size() - res.failures();
  report["seeds_failed"] = res.failures();
  std::string text = "config " + run.hash() + "\n";
  const Eigen::MatrixXcd dft = res.dft_samples(0);
  const Eigen::MatrixXcd modes = res.mode_samples(0);
  ScheduleParams p{o.alpha, o.c, o.n};
  if (o.alpha > 0) {
    const CapacitySchedule sched(p);
    for (std::size_t m = 0; m <= o.modes; ++m)
      report["finite_n_variance"].push_back(finite_n_mode_variance(sched, o.n, m));
  }
  if (o.alpha > 0 && dft.rows() >= 50) {
    const auto vd = variance_report(dft, o.alpha);
    const auto vm = variance_report(modes, o.alpha);
    const auto cov = covariance_report(dft);
    report["variance_dft"] = to_json(vd);
    report["variance_modesums"] = to_json(vm);
    report["covariance_dft"] = to_json(cov);
    text += "\nLaurent coefficients of sqrt(n) M_n\n" + format_table(vd);
    text += "\nmode sums M(n, m)\n" + format_table(vm);
    text += "\nmax |off-diagonal correlation| = " + format_real(cov.max_abs_offdiag) +
            " (band " + format_real(cov.band) + ")\n";
    if (dft.rows() >= 100) {
      const auto norm = normality_report(dft);
      report["normality_dft"] = to_json(norm);
      text += "\nnormality\n" + format_table(norm);
    }
  } else {
    report["note"] = "statistical reports need alpha > 0 and at least 50 successful seeds";
    text += "no statistical report: need alpha > 0 and at least 50 successful seeds\n";
  }
  run.emit("report.json", report.dump(2) + "\n");
  run.emit("report.txt", text);
  run.finish(spectral_fields(o, seeds));
  out << text;
  return kExitOk;
}

int cmd_alpha0(const Options& o, std::ostream& out) {
  check_common(o, false);
  check_grid(o);
  require(o.n >= 1, "n must be at least 1");
  const auto cps = checkpoints_for(o);
  Run run(o, out);
  run.canonical({"alpha0", "--c", format_real(o.c), "--n", std::to_string(o.n), "--seed",
                 std::to_string(o.seed), "--r", format_real(o.r), "--grid", std::to_string(o.grid),
                 "--particle", o.particle, "--checkpoints", join_sizes(cps), "--c-max",
                 format_real(o.c_max)});
  const auto family = parse_family(o.particle);
  const ClusterRealization real({0.0, o.c, o.n}, family, o.seed, o.c_max);
  const auto trace = sup_error_trace(real, o.r, o.grid, cps);
  const auto witness = epsilon_witness(o.c, family);
  run.emit("trace.csv", trace_csv(trace, witness.epsilon));
  const double wmax = window_max(trace, o.n / 2, o.n);
  nlohmann::json summary = {{"epsilon_witness", witness.epsilon},
                            {"lambda_hat", witness.lambda_hat},
                            {"window", {o.n / 2, o.n}},
                            {"window_max_sup_error", wmax},
                            {"half_epsilon", 0.5 * witness.epsilon},
                            {"window_max_at_least_half_epsilon", wmax >= 0.5 * witness.epsilon}};
  run.emit("summary.json", summary.dump(2) + "\n");
  run.finish({{"alpha", 0.0}, {"c", o.c}, {"n", o.n}, {"family", o.particle}, {"seed", o.seed},
              {"r", o.r}, {"M", o.grid}});
  out << "epsilon witness " << format_real(witness.epsilon) << ", max sup error on ["
      << o.n / 2 << ", " << o.n << "] = " << format_real(wmax) << "\n";
  return kExitOk;
}

int cmd_schedule_check(const Options& o, std::ostream& out) {
  ScheduleParams{o.alpha, o.c, 0}.validate();
  require(o.n >= 1, "n must be at least 1");
  Run run(o, out);
  run.canonical({"schedule-check", "--alpha", format_real(o.alpha), "--c", format_real(o.c),
                 "--n", std::to_string(o.n)});
  const ScheduleParams p{o.alpha, o.c, o.n};
  std::ostringstream csv;
  write_schedule_csv(csv, CapacitySchedule(p), InftySchedule(p));
  run.emit("schedule.csv", csv.str());
  const auto rep = check_schedule(p, o.n);
  nlohmann::json j = {{"alpha", rep.alpha},
                      {"c", rep.c},
                      {"n_max", rep.n_max},
                      {"pairs_checked", rep.pairs_checked},
                      {"gap", {rep.min_gap, rep.max_gap}},
                      {"gap_limit", rep.gap_limit},
                      {"total_capacity", rep.total_capacity},
                      {"kappa_over_bound", {rep.min_kappa_ratio, rep.max_kappa_ratio}},
                      {"tilde_ratio", {rep.min_tilde_ratio, rep.max_tilde_ratio}},
                      {"tilde_ratio_limit", rep.tilde_ratio_limit},
                      {"passed", rep.passed()}};
  if (o.alpha > 0) {
    j["min_epsilon"] = rep.min_eps;
    j["max_epsilon_over_bound"] = rep.max_eps_ratio;
    j["max_power_bound_ratio"] = rep.max_power_ratio;
  }
  run.emit("check.json", j.dump(2) + "\n");
  run.finish({{"alpha", o.alpha}, {"c", o.c}, {"n", o.n}});
  out << "schedule inequalities " << (rep.passed() ? "hold" : "FAIL") << " up to n = " << o.n
      << "\n";
  return kExitOk;
}

int cmd_render(const Options& o, std::ostream& out) {
  check_common(o, true);
  require(o.offset > 0, "offset must be positive");
  require(o.grid >= 3, "grid must be at least 3");
  Run run(o, out);
  run.canonical({"render", "--alpha", format_real(o.alpha), "--c", format_real(o.c), "--n",
                 std::to_string(o.n), "--seed", std::to_string(o.seed), "--grid",
                 std::to_string(o.grid), "--particle", o.particle, "--offset",
                 format_real(o.offset), "--c-max", format_real(o.c_max)});
  const ClusterRealization real({o.alpha, o.c, o.n}, parse_family(o.particle), o.seed, o.c_max);
  const auto pts = boundary_trace(real, o.n, o.offset, o.grid);
  run.emit("boundary.csv", boundary_csv(pts));
  run.emit("cluster.svg", render_svg(pts));
  run.finish({{"alpha", o.alpha}, {"c", o.c}, {"n", o.n}, {"family", o.particle},
              {"seed", o.seed}, {"M", o.grid}});
  return kExitOk;
}

int dispatch(const Options& o, std::ostream& out, std::ostream& err);

int cmd_replay(const Options& o, std::ostream& out, std::ostream& err) {
  const auto manifest = nlohmann::json::parse(read_text_file(o.manifest));
  if (!manifest.contains("argv") || !manifest["argv"].is_array())
    throw std::invalid_argument("manifest '" + o.manifest + "' has no argv record");
  std::vector<std::string> args = manifest["argv"].get<std::vector<std::string>>();
  if (!o.out.empty()) {
    args.push_back("--out");
    args.push_back(o.out);
  }
  return run_cli(args, out, err);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Regularised Hastings-Levitov HL(alpha) cluster simulations", "hlsim"};
  app.require_subcommand(1);
  Options o;

  auto add_schedule = [&](CLI::App* s) {
    s->add_option("--alpha", o.alpha, "model exponent, 0 <= alpha < 2")->capture_default_str();
    s->add_option("--c", o.c, "base particle capacity")->capture_default_str();
    s->add_option("--n", o.n, "number of particles")->capture_default_str();
  };
  auto add_particle = [&](CLI::App* s) {
    s->add_option("--particle", o.particle, "particle family: slit | idealized")
        ->capture_default_str();
    s->add_option("--c-max", o.c_max, "largest admissible capacity")->capture_default_str();
  };
  auto add_out = [&](CLI::App* s) {
    s->add_option("--out", o.out, "output directory (default $HL_OUT or ./hl_out)");
  };

  auto* sim = app.add_subcommand("simulate", "sup-error trace of one realization");
  add_schedule(sim);
  sim->add_option("--seed", o.seed, "RNG seed")->capture_default_str();
  sim->add_option("--checkpoints", o.checkpoints, "comma list of n (default powers of two and n)");
  add_particle(sim);
  add_out(sim);

  auto* spec = app.add_subcommand("spectrum", "Laurent spectra and mode sums per seed");
  add_schedule(spec);
  spec->add_option("--seed", o.seed, "single RNG seed")->capture_default_str();
  spec->add_option("--seeds", o.seeds, "seed list, e.g. 0-99,120");
  spec->add_option("--modes", o.modes, "highest mode m_max")->capture_default_str();
  spec->add_option("--jobs", o.jobs, "worker threads (0 = all cores)");
  add_particle(spec);
  add_out(spec);

  auto* ens = app.add_subcommand("ensemble", "ensemble spectra with variance reports");
  add_schedule(ens);
  ens->add_option("--seeds", o.seeds, "seed list, e.g. 0-399");
  ens->add_option("--modes", o.modes, "highest mode m_max")->capture_default_str();
  ens->add_option("--jobs", o.jobs, "worker threads (0 = all cores)");
  add_particle(ens);
  add_out(ens);

  auto* a0 = app.add_subcommand("alpha0", "constant-capacity trace with the epsilon witness");
  a0->add_option("--c", o.c, "particle capacity")->capture_default_str();
  a0->add_option("--n", o.n, "number of particles")->capture_default_str();
  a0->add_option("--seed", o.seed, "RNG seed")->capture_default_str();
  a0->add_option("--checkpoints", o.checkpoints, "comma list of n (default every n/80)");
  a0->add_option("--stride", o.stride, "checkpoint spacing when --checkpoints is absent");
  add_particle(a0);
  add_out(a0);

  auto* sc = app.add_subcommand("schedule-check", "capacity schedule dump and inequality checks");
  add_schedule(sc);
  add_out(sc);

  auto* ren = app.add_subcommand("render", "cluster boundary as CSV and SVG");
  add_schedule(ren);
  ren->add_option("--seed", o.seed, "RNG seed")->capture_default_str();
  ren->add_option("--offset", o.offset, "sample the circle of radius 1 + offset")
      ->capture_default_str();
  add_particle(ren);
  add_out(ren);

  auto* rep = app.add_subcommand("replay", "re-run the command recorded in a manifest");
  rep->add_option("manifest", o.manifest, "manifest.json of an earlier run")->required();
  add_out(rep);

  // Subcommand-specific grid defaults.
  sim->add_option("--r", o.r, "evaluation radius, r > 1");
  sim->add_option("--grid", o.grid, "grid size M (power of two)");
  spec->add_option("--r", o.r, "evaluation radius, r > 1");
  spec->add_option("--grid", o.grid, "grid size M (power of two)");
  ens->add_option("--r", o.r, "evaluation radius, r > 1");
  ens->add_option("--grid", o.grid, "grid size M (power of two)");
  a0->add_option("--r", o.r, "evaluation radius, r > 1");
  a0->add_option("--grid", o.grid, "grid size M (power of two)");
  ren->add_option("--grid", o.grid, "boundary points");

  std::vector<const char*> argv{"hlsim"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(int(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  for (auto* s : app.get_subcommands()) o.command = s->get_name();
  const bool spectral = o.command == "spectrum" || o.command == "ensemble";
  if (std::isnan(o.r)) o.r = spectral ? 1.25 : 1.5;
  if (o.grid == 0) o.grid = o.command == "render" ? 2048 : spectral ? 512 : 1024;

  try {
    return dispatch(o, out, err);
  } catch (const NumericGuardError& e) {
    err << "numeric guard: " << e.what() << "\n";
    return kExitNumericGuard;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

namespace {

int dispatch(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.command == "simulate") return cmd_simulate(o, out);
  if (o.command == "spectrum") return cmd_spectrum(o, out, err);
  if (o.command == "ensemble") return cmd_ensemble(o, out, err);
  if (o.command == "alpha0") return cmd_alpha0(o, out);
  if (o.command == "schedule-check") return cmd_schedule_check(o, out);
  if (o.command == "render") return cmd_render(o, out);
  if (o.command == "replay") return cmd_replay(o, out, err);
  throw std::invalid_argument("unknown subcommand '" + o.command + "'");
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace hl
