// Command-line front end for the cltlab pipelines.
//
// Exit codes: 0 success, 2 configuration or precondition error, 3 resource
// or certification failure, 4 internal error. Every failure prints exactly
// one line `error: <Kind>: <message>` on stderr.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cltlab/cltlab.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace cltlab;

namespace {

// ---------------------------------------------------------------------------
// Formatting.

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return format_double(x);
}

// JSON writer with 17 significant digits for every float; non-finite
// values become null.
void write_json(std::ostream& os, const json& j, int indent = 0) {
  const std::string pad(static_cast<std::size_t>(indent), ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      std::size_t k = 0;
      for (auto it = j.begin(); it != j.end(); ++it, ++k) {
        os << pad << "  " << json(it.key()).dump() << ": ";
        write_json(os, it.value(), indent + 2);
        os << (k + 1 < j.size() ? ",\n" : "\n");
      }
      os << pad << "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      os << "[\n";
      for (std::size_t k = 0; k < j.size(); ++k) {
        os << pad << "  ";
        write_json(os, j[k], indent + 2);
        os << (k + 1 < j.size() ? ",\n" : "\n");
      }
      os << pad << "]";
      return;
    }
    case json::value_t::number_float: {
      const double x = j.get<double>();
      os << (std::isfinite(x) ? format_double(x) : "null");
      return;
    }
    default:
      os << j.dump();
  }
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

// ---------------------------------------------------------------------------
// Run configuration and output.

struct Common {
  std::string out;
  unsigned threads = default_thread_count();
  bool timing = false;
  int precision_bits = 0;  // 0: keep the default / environment value
  std::size_t cap = kDefaultAtomCap;
};

class Run {
 public:
  Run(std::string command, json config, const Common& common)
      : command_(std::move(command)), config_(std::move(config)), common_(common) {
    config_["command"] = command_;
    config_["precision_bits"] = precision_cap();
    config_["atom_cap"] = common_.cap;
    config_["timing"] = common_.timing;
    hash_ = hex64(fnv1a(config_.dump()));
  }

  std::string header() const {
    std::ostringstream os;
    os << "# cltlab " << kVersion << "\n";
    os << "# command " << command_ << "\n";
    os << "# config_hash fnv1a64:" << hash_ << "\n";
    os << "# config " << config_.dump() << "\n";
    os << "# modules";
    for (const auto& [name, v] : kModuleVersions) os << " " << name << "=" << v;
    os << "\n";
    return os.str();
  }

  json meta() const {
    json m;
    m["version"] = std::string(kVersion);
    m["config_hash"] = "fnv1a64:" + hash_;
    m["config"] = config_;
    json mods;
    for (const auto& [name, v] : kModuleVersions) mods[std::string(name)] = v;
    m["modules"] = mods;
    return m;
  }

  // CSV table: to stdout, and to <out>/<name> when an output directory is set.
  void emit_csv(const std::string& name, const std::string& body) const {
    const std::string text = header() + body;
    std::cout << text;
    write_file(name, text);
  }

  void emit_json(const std::string& name, json payload, bool to_stdout) const {
    json doc;
    doc["meta"] = meta();
    for (auto it = payload.begin(); it != payload.end(); ++it) doc[it.key()] = it.value();
    std::ostringstream os;
    write_json(os, doc);
    os << "\n";
    if (to_stdout) std::cout << os.str();
    write_file(name, os.str());
  }

 private:
  void write_file(const std::string& name, const std::string& text) const {
    if (common_.out.empty()) return;
    fs::create_directories(common_.out);
    const fs::path p = fs::path(common_.out) / name;
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ResourceError("IoError", "cannot write " + p.string());
    f << text;
  }

  std::string command_;
  json config_;
  Common common_;
  std::string hash_;
};

// ---------------------------------------------------------------------------
// Argument parsing helpers.

class ConfigError : public DomainError {
 public:
  explicit ConfigError(const std::string& what) : DomainError("ConfigError", what) {}
};

std::uint64_t parse_u64(const std::string& s) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    if (!s.empty() && s[0] == '-') throw std::invalid_argument("negative");
    v = std::stoull(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("not a non-negative integer: '" + s + "'");
  }
  if (used != s.size()) throw ConfigError("not a non-negative integer: '" + s + "'");
  return v;
}

/// "16,64,256" or "2^4..2^11".
std::vector<std::uint64_t> parse_n_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  const auto dots = text.find("..");
  if (dots != std::string::npos) {
    const std::string a = text.substr(0, dots), b = text.substr(dots + 2);
    if (a.rfind("2^", 0) != 0 || b.rfind("2^", 0) != 0) throw ConfigError("range must look like 2^a..2^b: " + text);
    const auto lo = parse_u64(a.substr(2)), hi = parse_u64(b.substr(2));
    if (lo > hi || hi > 62) throw ConfigError("bad power-of-two range: " + text);
    return powers_of_two(int(lo), int(hi));
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_u64(item));
  if (out.empty()) throw ConfigError("empty n list");
  return out;
}

void require_n_list(const std::vector<std::uint64_t>& ns) {
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (ns[i] < 1) throw ConfigError("precondition n >= 1 violated (n = " + std::to_string(ns[i]) + ")");
    if (i > 0 && ns[i] <= ns[i - 1]) throw ConfigError("precondition: n list must be strictly increasing");
  }
}

struct Base {
  DiscreteDist dist;
  std::optional<CharSpec> spec;
  std::string text;
};

/// prod:..., mix:..., or csv:<path> (distribution CSV).
Base load_base(const std::string& text) {
  if (text.rfind("csv:", 0) == 0) {
    std::ifstream f(text.substr(4));
    if (!f) throw ConfigError("cannot open base file " + text.substr(4));
    return {read_csv(f), std::nullopt, text};
  }
  const CharSpec spec = CharSpec::parse(text);
  return {to_distribution(spec), spec, text};
}

// ---------------------------------------------------------------------------
// Commands.

int cmd_delta(const Common& c, const std::string& base_text, std::uint64_t n, const std::string& target) {
  if (target != "phi" && target != "phi3") throw ConfigError("--target must be phi or phi3");
  if (n < 1) throw ConfigError("precondition n >= 1 violated (n = 0)");
  const Base base = load_base(base_text);
  const Run run("delta", {{"base", base_text}, {"n", n}, {"target", target}}, c);
  const DiscreteDist d = zn_dist(base.dist, n, c.cap);
  KolmogorovResult kd;
  if (target == "phi") {
    kd = kolmogorov_distance(d, NormalCdf());
  } else {
    kd = kolmogorov_distance(d, EdgeworthCdf(EdgeworthParams::from_moments(moments(base.dist), n)));
  }
  std::cout << "# n delta argmax side\n"
            << n << " " << num(kd.delta) << " " << num(kd.argmax) << " " << to_string(kd.side) << "\n";
  run.emit_json("delta.json",
                {{"n", n}, {"target", target}, {"delta", kd.delta}, {"argmax", kd.argmax},
                 {"side", to_string(kd.side)}},
                false);
  return 0;
}

int cmd_sweep(const Common& c, const std::string& base_text, const std::string& n_text, bool phi3) {
  const auto ns = parse_n_list(n_text);
  require_n_list(ns);
  const Base base = load_base(base_text);
  const Run run("sweep", {{"base", base_text}, {"n", ns}, {"phi3", phi3}}, c);
  SweepOptions opt;
  opt.threads = c.threads;
  opt.cap = c.cap;
  opt.force_phi3 = phi3;
  opt.timing = c.timing;
  const auto s = delta_sweep(base.dist, ns, base_text, opt);
  std::ostringstream csv;
  csv << "n,delta_phi,delta_phi3,argmax,seconds\n";
  json rows = json::array();
  for (const auto& r : s.rows) {
    csv << r.n << "," << num(r.delta_phi) << "," << (r.delta_phi3 ? num(*r.delta_phi3) : "") << ","
        << num(r.argmax) << "," << num(r.seconds) << "\n";
    json row{{"n", r.n}, {"delta_phi", r.delta_phi}, {"argmax", r.argmax}, {"side", to_string(r.side)},
             {"seconds", r.seconds}, {"p_zero", r.atom0_mass}, {"lower_bound_ok", r.lower_bound_ok}};
    if (r.delta_phi3) row["delta_phi3"] = *r.delta_phi3;
    rows.push_back(row);
  }
  run.emit_csv("sweep.csv", csv.str());
  run.emit_json("sweep.json",
                {{"base", s.base}, {"sigma2", s.sigma2}, {"alpha3", s.alpha3}, {"beta4", s.beta4}, {"rows", rows}},
                false);
  return 0;
}

// Reads `n` and one value column from a CSV written by sweep, disc or avg.
std::vector<std::pair<std::uint64_t, double>> read_series(const std::string& path, std::string& column) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open " + path);
  std::string line;
  std::vector<std::string> names;
  std::vector<std::pair<std::uint64_t, double>> pts;
  std::size_t n_col = 0, v_col = 0;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (names.empty()) {
      names = cells;
      auto find = [&](const std::string& name) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < names.size(); ++i)
          if (names[i] == name) return i;
        return std::nullopt;
      };
      const auto nc = find("n");
      if (!nc) throw ConfigError(path + ": no 'n' column");
      n_col = *nc;
      if (column.empty()) {
        for (const char* pref : {"delta_phi", "dstar", "average"})
          if (find(pref)) {
            column = pref;
            break;
          }
        if (column.empty()) throw ConfigError(path + ": no value column; pass --column");
      }
      const auto vc = find(column);
      if (!vc) throw ConfigError(path + ": no column '" + column + "'");
      v_col = *vc;
      continue;
    }
    if (cells.size() <= std::max(n_col, v_col) || cells[v_col].empty())
      throw ConfigError(path + ": missing value in row '" + line + "'");
    double v = 0.0;
    try {
      v = std::stod(cells[v_col]);
    } catch (const std::exception&) {
      throw ConfigError(path + ": bad number '" + cells[v_col] + "'");
    }
    pts.emplace_back(parse_u64(cells[n_col]), v);
  }
  return pts;
}

json fit_json(const RateFit& f) {
  json j{{"exponent", f.exponent}, {"logpow", f.logpow},           {"intercept", f.intercept},
         {"r2", f.r2},             {"rms", f.rms},                 {"power_exponent", f.power_exponent},
         {"power_r2", f.power_r2}, {"window", {f.n_min, f.n_max}}, {"points", f.points}};
  if (f.constrained)
    j["constrained"] = {{"exponent", f.constrained->exponent},
                        {"logpow", f.constrained->logpow},
                        {"intercept", f.constrained->intercept},
                        {"rms", f.constrained->rms}};
  return j;
}

int cmd_fit(const Common& c, const std::string& in, std::string column, std::optional<double> eta) {
  const auto pts = read_series(in, column);
  json cfg{{"in", fs::path(in).filename().string()}, {"column", column}};
  if (eta) cfg["eta"] = *eta;
  const Run run("fit", cfg, c);
  const auto f = rate_fit(pts, eta);
  run.emit_json("fit.json", {{"column", column}, {"fit", fit_json(f)}}, true);
  return 0;
}

int cmd_avg(const Common& c, const std::string& n_text, std::size_t grid) {
  const auto ns = parse_n_list(n_text);
  require_n_list(ns);
  if (grid < 1) throw ConfigError("precondition grid >= 1 violated");
  const Run run("avg", {{"n", ns}, {"grid", grid}}, c);
  std::ostringstream csv;
  csv << "n,average,ratio\n";
  json rows = json::array();
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (auto n : ns) {
    const auto r = avg_delta(n, grid, c.threads, c.cap);
    csv << n << "," << num(r.average) << "," << num(r.ratio) << "\n";
    rows.push_back({{"n", n}, {"average", r.average}, {"ratio", r.ratio}});
    lo = std::min(lo, r.ratio);
    hi = std::max(hi, r.ratio);
  }
  run.emit_csv("avg.csv", csv.str());
  run.emit_json("avg.json", {{"grid", grid}, {"rows", rows}, {"ratio_spread", hi / lo}}, false);
  return 0;
}

int cmd_disc(const Common& c, const std::string& alpha_text, const std::string& n_text) {
  const auto ns = parse_n_list(n_text);
  require_n_list(ns);
  const AlphaSpec alpha = AlphaSpec::parse(alpha_text);
  const Run run("disc", {{"alpha", alpha_text}, {"n", ns}}, c);
  const auto d = discrepancy_sweep(alpha, ns);
  std::ostringstream csv;
  csv << "n,dstar\n";
  for (const auto& [n, v] : d) csv << n << "," << num(v) << "\n";
  run.emit_csv("disc.csv", csv.str());
  return 0;
}

int cmd_cf(const Common& c, const std::string& spec_text, double t_max, std::size_t peaks, std::size_t samples,
           std::uint64_t seed) {
  if (!(t_max > 2.0)) throw ConfigError("precondition t_max > 2 violated");
  if (peaks < 3) throw ConfigError("precondition peaks >= 3 violated");
  const CharSpec spec = CharSpec::parse(spec_text);
  const Run run("cf", {{"spec", spec_text}, {"t_max", t_max}, {"peaks", peaks}, {"samples", samples}, {"seed", seed}},
                c);
  const auto g = growth_fit(spec, t_max, peaks);
  json sample = json::array();
  for (const auto& p : g.sample) sample.push_back({{"t", p.t}, {"one_minus_abs", p.one_minus_abs}});
  json growth{{"p_hat", g.p_hat},
              {"intercept", g.intercept},
              {"residual", g.residual},
              {"degenerate_lattice", g.degenerate_lattice},
              {"peaks_scanned", g.peaks_scanned},
              {"sample", sample}};
  if (g.q_hat) growth["q_hat"] = *g.q_hat;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(-10.0, 10.0);
  std::size_t violations = 0;
  double m_exp = INFINITY, m_lo = INFINITY, m_up = INFINITY;
  for (std::size_t i = 0; i < samples; ++i) {
    const auto r = ineq61_check(ux(rng));
    if (!r.pass) ++violations;
    m_exp = std::min(m_exp, r.margin_exp);
    m_lo = std::min(m_lo, r.margin_lower);
    m_up = std::min(m_up, r.margin_upper);
  }
  json ineq{{"samples", samples}, {"violations", violations}};
  if (samples > 0) ineq["min_margins"] = {{"exp", m_exp}, {"lower", m_lo}, {"upper", m_up}};
  run.emit_json("cf.json", {{"growth", growth}, {"ineq61", ineq}}, true);
  return violations == 0 ? 0 : 4;
}

int cmd_bounds(const Common& c, const std::string& base_text, const std::string& n_text, const std::string& cutoff,
               double p, double q, double a) {
  const auto ns = parse_n_list(n_text);
  require_n_list(ns);
  if (cutoff != "sqrt" && cutoff != "prop22") throw ConfigError("--cutoff must be sqrt or prop22");
  if (cutoff == "prop22") {
    if (!(p > 0.0) || !(a > 0.0)) throw ConfigError("precondition p > 0 and a > 0 violated");
    for (auto n : ns)
      if (n < 3) throw ConfigError("precondition n >= 3 violated for the prop22 cutoff");
  }
  const Base base = load_base(base_text);
  const Run run("bounds", {{"base", base_text}, {"n", ns}, {"cutoff", cutoff}, {"p", p}, {"q", q}, {"a", a}}, c);
  const TransformModel model = base.spec ? TransformModel::from_spec(*base.spec)
                                         : TransformModel::from_distribution(base.dist);
  struct Item {
    Lemma21Report r;
    double delta = 0.0;
  };
  std::vector<Item> items(ns.size());
  std::vector<std::exception_ptr> errors(ns.size());
  parallel_for(ns.size(), c.threads, [&](std::size_t i) {
    try {
      const double T = cutoff == "sqrt" ? std::sqrt(double(ns[i])) : prop22_cutoff(p, q, ns[i], a).T;
      items[i].r = lemma21_rhs(model, ns[i], T);
      items[i].delta = kolmogorov_distance(zn_dist(base.dist, ns[i], c.cap), NormalCdf()).delta;
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  json records = json::array();
  double lo = INFINITY, hi = 0.0;
  for (const auto& it : items) {
    const double ratio = it.r.rhs_total / it.delta;
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
    records.push_back({{"n", it.r.n},
                       {"T", it.r.T},
                       {"T0", it.r.T0},
                       {"moment_term", it.r.moment_term},
                       {"cutoff_term", it.r.cutoff_term},
                       {"tail_integral", it.r.tail_integral},
                       {"rhs_total", it.r.rhs_total},
                       {"non_decaying_tail", it.r.non_decaying_tail},
                       {"delta_n", it.delta},
                       {"ratio", ratio}});
  }
  run.emit_json("bounds.json",
                {{"records", records}, {"c_fit", records.empty() ? json(nullptr) : records[0]["ratio"]},
                 {"ratio_spread", hi / lo}},
                true);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cltlab: exact Kolmogorov distances, rates and Diophantine diagnostics"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  Common common;
  app.add_option("--out", common.out, "Output directory for CSV/JSON files");
  app.add_option("--threads", common.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--timing", common.timing, "Record wall-clock seconds per sweep row");
  app.add_option("--precision-bits", common.precision_bits, "Cap on certified precision (bits)");
  app.add_option("--cap", common.cap, "Maximum atoms per distribution")->check(CLI::PositiveNumber);

  std::string base, target = "phi", n_text, in, column, alpha, spec, cutoff = "sqrt";
  std::uint64_t n = 0, seed = 1;
  std::size_t grid = 256, peaks = 8, samples = 100000;
  double t_max = 1e4, p = 2.0, q = 0.0, a = 1.0;
  std::optional<double> eta;
  bool phi3 = false;

  auto* delta = app.add_subcommand("delta", "Kolmogorov distance of Z_n to Phi or Phi_3");
  delta->add_option("--base", base, "Base law: prod:..., mix:... or csv:<file>")->required();
  delta->add_option("--n", n, "Number of summands")->required();
  delta->add_option("--target", target, "phi or phi3");

  auto* sweep = app.add_subcommand("sweep", "Delta_n over a list of n");
  sweep->add_option("--base", base, "Base law")->required();
  sweep->add_option("--n", n_text, "n list: 16,64,256 or 2^4..2^11")->required();
  sweep->add_flag("--phi3", phi3, "Also report the distance to Phi_3 for symmetric bases");

  auto* fit = app.add_subcommand("fit", "Rate regression on a sweep/disc/avg CSV");
  fit->add_option("--in", in, "Input CSV")->required();
  fit->add_option("--column", column, "Value column (default: delta_phi, dstar or average)");
  fit->add_option("--eta", eta, "Also fit with the exponent pinned to -1/2 - 1/(2 eta)");

  auto* avg = app.add_subcommand("avg", "Average of Delta_n(alpha) over a midpoint alpha grid");
  avg->add_option("--n", n_text, "n list")->required();
  avg->add_option("--grid", grid, "Number of alpha grid points");

  auto* disc = app.add_subcommand("disc", "Star discrepancy of {k alpha}");
  disc->add_option("--alpha", alpha, "alpha: surd:a,b,c,d | cf:... | dec:... | rat:p/q")->required();
  disc->add_option("--n", n_text, "n list")->required();

  auto* cf = app.add_subcommand("cf", "Growth fit of 1 - |f| at its peaks and the cosine inequality suite");
  cf->add_option("--spec", spec, "Transform: prod:... or mix:...")->required();
  cf->add_option("--t-max", t_max, "Scan range");
  cf->add_option("--peaks", peaks, "Record peaks retained");
  cf->add_option("--samples", samples, "Random points for the cosine inequalities");
  cf->add_option("--seed", seed, "Seed for the random points");

  auto* bounds = app.add_subcommand("bounds", "Explicit Berry-Esseen bound across n with ratio diagnostics");
  bounds->add_option("--base", base, "Base law")->required();
  bounds->add_option("--n", n_text, "n list")->required();
  bounds->add_option("--cutoff", cutoff, "sqrt (T = sqrt n) or prop22");
  bounds->add_option("--p", p, "Growth exponent for the prop22 cutoff");
  bounds->add_option("--q", q, "Log exponent for the prop22 cutoff");
  bounds->add_option("--a", a, "Growth constant for the prop22 cutoff");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: ConfigError: " << one_line(e.what()) << "\n";
    return 2;
  }

  try {
    if (common.precision_bits != 0) set_precision_cap(common.precision_bits);
    if (*delta) return cmd_delta(common, base, n, target);
    if (*sweep) return cmd_sweep(common, base, n_text, phi3);
    if (*fit) return cmd_fit(common, in, column, eta);
    if (*avg) return cmd_avg(common, n_text, grid);
    if (*disc) return cmd_disc(common, alpha, n_text);
    if (*cf) return cmd_cf(common, spec, t_max, peaks, samples, seed);
    if (*bounds) return cmd_bounds(common, base, n_text, cutoff, p, q, a);
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.kind() << ": " << one_line(e.what()) << "\n";
    return 2;
  } catch (const ResourceError& e) {
    std::cerr << "error: " << e.kind() << ": " << one_line(e.what()) << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: Internal: " << one_line(e.what()) << "\n";
    return 4;
  }
  return 4;
}
