#include "lpsgd/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "lpsgd/csv.hpp"
#include "lpsgd/errors.hpp"

namespace lpsgd {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

struct Entry {
  std::string value;
  int line = 0;
};

// Keys are consumed as they are read; whatever remains at the end is either
// unknown or inapplicable to the selected modes.
class KeyValues {
 public:
  explicit KeyValues(std::string_view text) {
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const auto eol = text.find('\n', pos);
      std::string_view line =
          text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
      pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
      ++line_no;
      if (const auto hash = line.find('#'); hash != std::string_view::npos)
        line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string_view::npos)
        throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
      const std::string key(trim(line.substr(0, eq)));
      const std::string value(trim(line.substr(eq + 1)));
      if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
      if (value.empty())
        throw ConfigError("line " + std::to_string(line_no) + ": empty value for '" + key + "'");
      if (entries_.count(key))
        throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key +
                          "' (first set on line " + std::to_string(entries_[key].line) + ")");
      entries_[key] = {value, line_no};
    }
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  std::string take_string(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError("missing required key '" + key + "'");
    std::string v = it->second.value;
    last_line_ = it->second.line;
    entries_.erase(it);
    return v;
  }

  double take_double(const std::string& key) {
    const std::string v = take_string(key);
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size() || !std::isfinite(out))
      throw ConfigError(where() + "'" + key + "' is not a finite number: " + v);
    return out;
  }

  std::int64_t take_int(const std::string& key) {
    const std::string v = take_string(key);
    return parse_int(key, v);
  }

  std::uint64_t take_uint(const std::string& key) {
    const std::string v = take_string(key);
    std::uint64_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
      throw ConfigError(where() + "'" + key + "' is not an unsigned integer: " + v);
    return out;
  }

  std::vector<std::int64_t> take_int_list(const std::string& key) {
    const std::string v = take_string(key);
    std::vector<std::int64_t> out;
    std::string_view rest(v);
    while (true) {
      const auto comma = rest.find(',');
      const std::string item(trim(rest.substr(0, comma)));
      out.push_back(parse_int(key, item));
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    return out;
  }

  bool take_bool(const std::string& key) {
    const std::string v = take_string(key);
    if (v == "true") return true;
    if (v == "false") return false;
    throw ConfigError(where() + "'" + key + "' must be true or false");
  }

  void reject_leftovers() const {
    if (entries_.empty()) return;
    const auto& [key, entry] = *std::min_element(
        entries_.begin(), entries_.end(),
        [](const auto& a, const auto& b) { return a.second.line < b.second.line; });
    throw ConfigError("line " + std::to_string(entry.line) + ": unknown or inapplicable key '" +
                      key + "'");
  }

 private:
  std::string where() const { return "line " + std::to_string(last_line_) + ": "; }

  std::int64_t parse_int(const std::string& key, const std::string& v) const {
    std::int64_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || res.ec != std::errc{} || res.ptr != v.data() + v.size())
      throw ConfigError(where() + "'" + key + "' is not an integer: " + v);
    return out;
  }

  std::map<std::string, Entry> entries_;
  int last_line_ = 0;
};

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  KeyValues kv(text);
  ExperimentConfig cfg;

  cfg.problem.d = kv.take_int("d");
  cfg.problem.c = kv.take_double("c");
  cfg.problem.L = kv.take_double("L");
  cfg.problem.sigma = kv.take_double("sigma");
  cfg.problem.seed = kv.take_uint("problem_seed");
  if (cfg.problem.d < 1) throw ConfigError("'d' must be >= 1");
  if (!(cfg.problem.c > 0.0 && cfg.problem.c <= cfg.problem.L))
    throw ConfigError("require 0 < c <= L");
  if (cfg.problem.sigma < 0.0) throw ConfigError("'sigma' must be >= 0");

  const std::string shrink = kv.take_string("shrinkage");
  try {
    if (shrink == "synthetic") {
      const std::string law = kv.take_string("q_law");
      QLaw q_law;
      if (law == "constant") q_law = ConstantQ{kv.take_double("q")};
      else if (law == "uniform") q_law = UniformQ{kv.take_double("q_min"), kv.take_double("q_max")};
      else throw ConfigError("'q_law' must be constant or uniform");
      cfg.shrinkage = ShrinkageModel::synthetic(q_law, kv.take_double("sigma_eps_sq"));
    } else {
      cfg.shrinkage = ShrinkageModel::quantized(precision_from_name(shrink));
    }
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("shrinkage: ") + e.what());
  }

  const std::string sched = kv.take_string("schedule");
  if (sched == "fixed") {
    cfg.schedule = FixedStep{kv.take_double("alpha_bar")};
  } else if (sched == "diminishing") {
    cfg.schedule = DiminishingStep{kv.take_double("beta"), kv.take_double("gamma")};
  } else if (sched == "halving") {
    HalvingStep h{kv.take_double("alpha_1"), {}};
    const bool listed = kv.has("switch_iterations");
    const bool phased = kv.has("num_phases");
    if (listed == phased)
      throw ConfigError("halving schedule needs exactly one of switch_iterations, num_phases");
    if (listed) {
      h.switch_iterations = kv.take_int_list("switch_iterations");
      if (!std::is_sorted(h.switch_iterations.begin(), h.switch_iterations.end()))
        throw ConfigError("'switch_iterations' must be nondecreasing");
    } else {
      cfg.halving_phases = kv.take_int("num_phases");
      if (*cfg.halving_phases < 0) throw ConfigError("'num_phases' must be >= 0");
    }
    cfg.schedule = std::move(h);
  } else {
    throw ConfigError("'schedule' must be fixed, diminishing or halving");
  }

  cfg.K = kv.take_int("K");
  cfg.replications = kv.take_int("replications");
  cfg.base_seed = kv.take_uint("base_seed");
  cfg.initial_gap = kv.take_double("initial_gap");
  if (cfg.K < 1) throw ConfigError("'K' must be >= 1");
  if (cfg.replications < 1) throw ConfigError("'replications' must be >= 1");
  if (cfg.initial_gap < 0.0) throw ConfigError("'initial_gap' must be >= 0");
  if (kv.has("output")) cfg.output = kv.take_string("output");
  if (kv.has("allow_invalid")) cfg.allow_invalid = kv.take_bool("allow_invalid");

  kv.reject_leftovers();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string to_config_text(const ExperimentConfig& cfg) {
  std::ostringstream out;
  auto put = [&out](std::string_view key, const std::string& value) {
    out << key << " = " << value << '\n';
  };
  put("d", std::to_string(cfg.problem.d));
  put("c", format_double(cfg.problem.c));
  put("L", format_double(cfg.problem.L));
  put("sigma", format_double(cfg.problem.sigma));
  put("problem_seed", std::to_string(cfg.problem.seed));

  if (const auto* fq = std::get_if<FormatQuantization>(&cfg.shrinkage.mode())) {
    put("shrinkage", fq->cfg.name());
  } else {
    const auto& s = cfg.shrinkage.synthetic_params();
    put("shrinkage", "synthetic");
    if (const auto* cq = std::get_if<ConstantQ>(&s.q_law)) {
      put("q_law", "constant");
      put("q", format_double(cq->q));
    } else {
      const auto& uq = std::get<UniformQ>(s.q_law);
      put("q_law", "uniform");
      put("q_min", format_double(uq.q_min));
      put("q_max", format_double(uq.q_max));
    }
    put("sigma_eps_sq", format_double(s.sigma_eps_sq));
  }

  if (const auto* f = std::get_if<FixedStep>(&cfg.schedule)) {
    put("schedule", "fixed");
    put("alpha_bar", format_double(f->alpha_bar));
  } else if (const auto* dm = std::get_if<DiminishingStep>(&cfg.schedule)) {
    put("schedule", "diminishing");
    put("beta", format_double(dm->beta));
    put("gamma", format_double(dm->gamma));
  } else {
    const auto& h = std::get<HalvingStep>(cfg.schedule);
    put("schedule", "halving");
    put("alpha_1", format_double(h.alpha_1));
    if (cfg.halving_phases) {
      put("num_phases", std::to_string(*cfg.halving_phases));
    } else {
      std::string list;
      for (std::size_t i = 0; i < h.switch_iterations.size(); ++i)
        list += (i ? "," : "") + std::to_string(h.switch_iterations[i]);
      put("switch_iterations", list);
    }
  }

  put("K", std::to_string(cfg.K));
  put("replications", std::to_string(cfg.replications));
  put("base_seed", std::to_string(cfg.base_seed));
  put("initial_gap", format_double(cfg.initial_gap));
  if (!cfg.output.empty()) put("output", cfg.output);
  if (cfg.allow_invalid) put("allow_invalid", "true");
  return out.str();
}

}  // namespace lpsgd
