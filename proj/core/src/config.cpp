#include "mbridge/config.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <type_traits>

#include "mbridge/types.hpp"

namespace mbridge {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error("config key '" + std::string(key) + "': cannot parse '" + std::string(text) + "'");
  }
  return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "on") return true;
  if (text == "false" || text == "0" || text == "off") return false;
  throw Error("config key '" + std::string(key) + "': expected true/false, got '" +
              std::string(text) + "'");
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

// Ordered field table shared by reading and writing.
struct Field {
  const char* key;
  std::function<void(PipelineConfig&, std::string_view)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

template <typename T>
Field number_field(const char* key, T PipelineConfig::*member) {
  return {key,
          [key, member](PipelineConfig& c, std::string_view v) {
            c.*member = parse_number<T>(key, v);
          },
          [member](const PipelineConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return format_double(c.*member);
            } else {
              return std::to_string(c.*member);
            }
          }};
}

Field bool_field(const char* key, bool PipelineConfig::*member) {
  return {key,
          [key, member](PipelineConfig& c, std::string_view v) { c.*member = parse_bool(key, v); },
          [member](const PipelineConfig& c) { return std::string(c.*member ? "true" : "false"); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      number_field("kappa", &PipelineConfig::kappa),
      number_field("top_k", &PipelineConfig::top_k),
      number_field("rho", &PipelineConfig::rho),
      number_field("lambda_reg", &PipelineConfig::lambda_reg),
      number_field("sinkhorn_max_iters", &PipelineConfig::sinkhorn_max_iters),
      number_field("sinkhorn_tol", &PipelineConfig::sinkhorn_tol),
      number_field("tau", &PipelineConfig::tau),
      number_field("mu", &PipelineConfig::mu),
      number_field("gamma", &PipelineConfig::gamma),
      number_field("sigma", &PipelineConfig::sigma),
      number_field("alpha", &PipelineConfig::alpha),
      number_field("beta1", &PipelineConfig::beta1),
      number_field("beta2", &PipelineConfig::beta2),
      number_field("dbscan_eps", &PipelineConfig::dbscan_eps),
      number_field("dbscan_min_pts", &PipelineConfig::dbscan_min_pts),
      number_field("warmup_epochs", &PipelineConfig::warmup_epochs),
      number_field("total_epochs", &PipelineConfig::total_epochs),
      number_field("batch_p", &PipelineConfig::batch_p),
      number_field("batch_k", &PipelineConfig::batch_k),
      number_field("iters_per_epoch", &PipelineConfig::iters_per_epoch),
      number_field("learning_rate", &PipelineConfig::learning_rate),
      number_field("seed", &PipelineConfig::seed),
      number_field("threads", &PipelineConfig::threads),
      bool_field("use_npc", &PipelineConfig::use_npc),
      bool_field("use_nrl", &PipelineConfig::use_nrl),
      bool_field("use_otpm", &PipelineConfig::use_otpm),
      bool_field("use_mhl", &PipelineConfig::use_mhl),
  };
  return table;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error("invalid config: " + what);
}

}  // namespace

void PipelineConfig::validate() const {
  require(kappa >= 1, "kappa must be >= 1");
  require(top_k >= 1, "top_k must be >= 1");
  require(rho > 0.0 && rho < 1.0, "rho must lie in (0, 1)");
  require(lambda_reg > 0.0, "lambda_reg must be positive");
  require(sinkhorn_max_iters >= 1, "sinkhorn_max_iters must be >= 1");
  require(sinkhorn_tol > 0.0, "sinkhorn_tol must be positive");
  require(tau > 0.0, "tau must be positive");
  require(mu >= 0.0 && mu <= 1.0, "mu must lie in [0, 1]");
  require(gamma > 0.0, "gamma must be positive");
  require(sigma > 0.0, "sigma must be positive");
  require(alpha >= 0.0 && alpha <= 1.0, "alpha must lie in [0, 1]");
  require(beta1 >= 0.0 && beta2 >= 0.0, "loss weights must be non-negative");
  require(dbscan_eps > 0.0, "dbscan_eps must be positive");
  require(dbscan_min_pts >= 1, "dbscan_min_pts must be >= 1");
  require(warmup_epochs >= 0 && total_epochs >= 0, "epoch counts must be non-negative");
  require(batch_p >= 1 && batch_k >= 1, "batch_p and batch_k must be >= 1");
  require(batch_p * batch_k >= 2, "a batch needs at least two samples");
  require(iters_per_epoch >= 0, "iters_per_epoch must be non-negative");
  require(learning_rate >= 0.0, "learning_rate must be non-negative");
  require(threads >= 1, "threads must be >= 1");
  require(!(use_mhl && !use_otpm), "MHL requires OTPM");
}

void apply_config_entry(PipelineConfig& cfg, std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  for (const Field& f : fields()) {
    if (key == f.key) {
      f.set(cfg, value);
      return;
    }
  }
  throw Error("unknown config key '" + std::string(key) + "'");
}

PipelineConfig parse_config(std::istream& in, PipelineConfig base) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) {
      view = view.substr(0, hash);
    }
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw Error("config line " + std::to_string(line_no) + ": expected key = value");
    }
    apply_config_entry(base, view.substr(0, eq), view.substr(eq + 1));
  }
  return base;
}

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  return parse_config(in, base);
}

void write_config(std::ostream& out, const PipelineConfig& cfg) {
  for (const Field& f : fields()) out << f.key << " = " << f.get(cfg) << '\n';
}

std::string to_string(const PipelineConfig& cfg) {
  std::ostringstream out;
  write_config(out, cfg);
  return out.str();
}

}  // namespace mbridge
