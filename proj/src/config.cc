#include "uib/config.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include "uib/error.h"

namespace uib {
namespace {

constexpr const char* kSections[] = {"synth",   "model",     "train",
                                     "request", "method",    "uib",
                                     "solver",  "baselines", "experiment",
                                     "trace"};

std::string_view Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Thrown by value readers; the caller adds the line number.
struct BadValue {
  std::string what;
};

double ReadDouble(std::string_view v) {
  double out = 0.0;
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size() || !std::isfinite(out)) {
    throw BadValue{"expected a finite number, got '" + std::string(v) + "'"};
  }
  return out;
}

std::uint64_t ReadUnsigned(std::string_view v) {
  std::uint64_t out = 0;
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size() || v.empty()) {
    throw BadValue{"expected a non-negative integer, got '" + std::string(v) +
                   "'"};
  }
  return out;
}

bool ReadBool(std::string_view v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw BadValue{"expected true or false, got '" + std::string(v) + "'"};
}

std::vector<std::size_t> ReadList(std::string_view v) {
  std::vector<std::size_t> out;
  if (Trim(v).empty()) return out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = v.find(',', pos);
    const std::string_view item =
        Trim(v.substr(pos, comma == std::string_view::npos ? v.npos
                                                            : comma - pos));
    out.push_back(ReadUnsigned(item));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

template <typename Fn>
auto ReadEnum(Fn parse, std::string_view v) {
  try {
    return parse(v);
  } catch (const Error& e) {
    throw BadValue{e.what()};
  }
}

std::string WriteDouble(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::string WriteList(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ", ";
    out += std::to_string(v[i]);
  }
  return out;
}

struct Field {
  const char* section;
  const char* key;
  std::function<void(std::string_view)> set;
  std::function<std::string()> get;
};

// The single table of config keys, bound to `c`; drives parsing and
// serialization alike.
std::vector<Field> Fields(ExperimentConfig& c) {
  auto dbl = [](const char* s, const char* k, double& x) {
    return Field{s, k, [&x](std::string_view v) { x = ReadDouble(v); },
                 [&x] { return WriteDouble(x); }};
  };
  auto count = [](const char* s, const char* k, std::size_t& x) {
    return Field{s, k,
                 [&x](std::string_view v) {
                   x = static_cast<std::size_t>(ReadUnsigned(v));
                 },
                 [&x] { return std::to_string(x); }};
  };
  auto index_set = [&c](const char* k, bool theta) {
    return Field{
        "uib", k,
        [&c, theta](std::string_view v) {
          if (!c.uib.index_sets) c.uib.index_sets = IndexSets{};
          (theta ? c.uib.index_sets->s_theta : c.uib.index_sets->s_r) =
              v == "default" ? std::vector<std::size_t>{} : ReadList(v);
        },
        [&c, theta] {
          if (!c.uib.index_sets) return std::string("default");
          return WriteList(theta ? c.uib.index_sets->s_theta
                                 : c.uib.index_sets->s_r);
        }};
  };

  return {
      count("synth", "num_samples", c.synth.num_samples),
      count("synth", "num_classes", c.synth.num_classes),
      count("synth", "core_dim", c.synth.core_dim),
      count("synth", "bias_dim", c.synth.bias_dim),
      dbl("synth", "bias_strength", c.synth.bias_strength),
      dbl("synth", "class_separation", c.synth.class_separation),

      {"model", "architecture",
       [&c](std::string_view v) {
         c.model.architecture = ReadEnum(ParseArchitecture, v);
       },
       [&c] { return std::string(ArchitectureName(c.model.architecture)); }},
      count("model", "hidden_width", c.model.hidden_width),
      dbl("model", "l2_strength", c.model.l2_strength),

      count("train", "epochs", c.train.epochs),
      count("train", "batch_size", c.train.batch_size),
      dbl("train", "learning_rate", c.train.learning_rate),
      dbl("train", "refine_grad_tol", c.train.refine_grad_tol),

      {"request", "mode",
       [&c](std::string_view v) {
         c.request.mode = ReadEnum(ParseRequestMode, v);
       },
       [&c] { return std::string(RequestModeName(c.request.mode)); }},
      dbl("request", "budget_fraction", c.request.budget_fraction),
      {"request", "budget_denominator",
       [&c](std::string_view v) {
         c.request.denominator = ReadEnum(ParseBudgetDenominator, v);
       },
       [&c] {
         return std::string(BudgetDenominatorName(c.request.denominator));
       }},
      {"request", "replacement",
       [&c](std::string_view v) {
         c.request.replacement = ReadEnum(ParseReplacementPolicy, v);
       },
       [&c] {
         return std::string(ReplacementPolicyName(c.request.replacement));
       }},

      {"method", "name",
       [&c](std::string_view v) { c.method = ReadEnum(ParseMethod, v); },
       [&c] { return std::string(MethodName(c.method)); }},

      dbl("uib", "beta", c.uib.beta),
      dbl("uib", "reg_strength", c.uib.reg_strength),
      dbl("uib", "threshold", c.uib.threshold),
      count("uib", "samples_k", c.uib.samples_k),
      count("uib", "iterations", c.uib.iterations),
      {"uib", "sampler",
       [&c](std::string_view v) {
         c.uib.sampler = ReadEnum(ParseSamplerKind, v);
       },
       [&c] { return std::string(SamplerKindName(c.uib.sampler)); }},
      dbl("uib", "sigma_p", c.uib.scales.sigma_p),
      dbl("uib", "sigma_q", c.uib.scales.sigma_q),
      index_set("s_theta", true),
      index_set("s_r", false),
      {"uib", "single_slice",
       [&c](std::string_view v) { c.uib.single_slice = ReadBool(v); },
       [&c] { return std::string(c.uib.single_slice ? "true" : "false"); }},

      {"solver", "kind",
       [&c](std::string_view v) {
         c.solver.kind = ReadEnum(ParseSolverKind, v);
       },
       [&c] { return std::string(SolverKindName(c.solver.kind)); }},
      {"solver", "damping",
       [&c](std::string_view v) {
         c.solver.cg_damping = c.solver.lissa.damping = ReadDouble(v);
       },
       [&c] { return WriteDouble(c.solver.cg_damping); }},
      dbl("solver", "scale", c.solver.lissa.scale),
      count("solver", "depth", c.solver.lissa.depth),
      count("solver", "repeats", c.solver.lissa.repeats),
      dbl("solver", "lissa_tol", c.solver.lissa.tol),
      dbl("solver", "cg_tol", c.solver.cg_tol),
      {"solver", "cg_max_iter",
       [&c](std::string_view v) {
         c.solver.cg_max_iter = static_cast<int>(ReadUnsigned(v));
       },
       [&c] { return std::to_string(c.solver.cg_max_iter); }},
      {"solver", "max_retries",
       [&c](std::string_view v) {
         c.solver.max_retries = static_cast<int>(ReadUnsigned(v));
       },
       [&c] { return std::to_string(c.solver.max_retries); }},

      count("baselines", "ft_epochs", c.baselines.ft_epochs),
      count("baselines", "ga_steps", c.baselines.ga_steps),
      dbl("baselines", "ga_lr", c.baselines.ga_lr),
      dbl("baselines", "sr_noise_scale", c.baselines.sr_noise_scale),

      count("experiment", "trials", c.trials),
      {"experiment", "seed",
       [&c](std::string_view v) { c.seed = ReadUnsigned(v); },
       [&c] { return std::to_string(c.seed); }},
      {"experiment", "output_dir",
       [&c](std::string_view v) { c.output_dir = std::string(v); },
       [&c] { return c.output_dir; }},

      {"trace", "iterations",
       [&c](std::string_view v) { c.trace_iterations = ReadList(v); },
       [&c] { return WriteList(c.trace_iterations); }},
  };
}

[[noreturn]] void Invalid(const std::string& field, const std::string& msg) {
  throw Error(ErrorCode::kValidationError, field + " " + msg);
}

}  // namespace

std::string_view MethodName(Method m) {
  switch (m) {
    case Method::kRetrain: return "retrain";
    case Method::kFineTune: return "ft";
    case Method::kGradientAscent: return "ga";
    case Method::kScrub: return "sr";
    case Method::kIf: return "if";
    case Method::kUibIf: return "uib_if";
  }
  return "uib_if";
}

Method ParseMethod(std::string_view name) {
  for (Method m : {Method::kRetrain, Method::kFineTune,
                   Method::kGradientAscent, Method::kScrub, Method::kIf,
                   Method::kUibIf}) {
    if (MethodName(m) == name) return m;
  }
  throw Error(ErrorCode::kInvalidConfig,
              "unknown method '" + std::string(name) + "'");
}

void ExperimentConfig::Validate() const {
  if (synth.num_samples < 2) Invalid("synth.num_samples", "must be >= 2");
  if (synth.num_classes < 2) Invalid("synth.num_classes", "must be >= 2");
  if (synth.core_dim < 1) Invalid("synth.core_dim", "must be >= 1");
  if (synth.bias_dim < 1) Invalid("synth.bias_dim", "must be >= 1");
  if (!(synth.bias_strength >= 0.0)) {
    Invalid("synth.bias_strength", "must be >= 0");
  }
  if (!(synth.class_separation >= 0.0)) {
    Invalid("synth.class_separation", "must be >= 0");
  }
  if (model.architecture == Architecture::kMlp && model.hidden_width < 1) {
    Invalid("model.hidden_width", "must be >= 1 for mlp");
  }
  if (!(model.l2_strength >= 0.0)) Invalid("model.l2_strength", "must be >= 0");
  if (model.input_dim != synth.num_features()) {
    Invalid("model.input_dim", "must equal synth core_dim + bias_dim");
  }
  if (model.num_classes != synth.num_classes) {
    Invalid("model.num_classes", "must equal synth.num_classes");
  }
  if (train.batch_size < 1) Invalid("train.batch_size", "must be >= 1");
  if (!(train.learning_rate > 0.0)) {
    Invalid("train.learning_rate", "must be > 0");
  }
  if (!(train.refine_grad_tol >= 0.0)) {
    Invalid("train.refine_grad_tol", "must be >= 0");
  }
  if (!(request.budget_fraction > 0.0 && request.budget_fraction <= 1.0)) {
    Invalid("request.budget_fraction", "must be in (0, 1]");
  }
  if (!(uib.beta >= 0.0)) Invalid("uib.beta", "must be >= 0");
  if (!(uib.reg_strength >= 0.0)) Invalid("uib.reg_strength", "must be >= 0");
  if (!(uib.threshold > 0.0 && uib.threshold <= 1.0)) {
    Invalid("uib.threshold", "must be in (0, 1]");
  }
  if (uib.samples_k < 1) Invalid("uib.samples_k", "must be >= 1");
  if (uib.iterations < 1) Invalid("uib.iterations", "must be >= 1");
  if (!(uib.scales.sigma_p > 0.0)) Invalid("uib.sigma_p", "must be > 0");
  if (!(uib.scales.sigma_q > 0.0)) Invalid("uib.sigma_q", "must be > 0");
  if (uib.index_sets) {
    const std::size_t layers = uib.single_slice ? 1 : model.LayerCount();
    try {
      ValidateIndexSets(*uib.index_sets, layers);
    } catch (const Error& e) {
      Invalid("uib.s_theta/uib.s_r", e.what());
    }
  }
  if (!(solver.cg_damping >= 0.0)) Invalid("solver.damping", "must be >= 0");
  if (!(solver.lissa.scale > 0.0)) Invalid("solver.scale", "must be > 0");
  if (solver.lissa.depth < 1) Invalid("solver.depth", "must be >= 1");
  if (solver.lissa.repeats < 1) Invalid("solver.repeats", "must be >= 1");
  if (!(solver.lissa.tol > 0.0)) Invalid("solver.lissa_tol", "must be > 0");
  if (!(solver.cg_tol > 0.0)) Invalid("solver.cg_tol", "must be > 0");
  if (solver.cg_max_iter < 1) Invalid("solver.cg_max_iter", "must be >= 1");
  if (!(baselines.ga_lr >= 0.0)) Invalid("baselines.ga_lr", "must be >= 0");
  if (!(baselines.sr_noise_scale >= 0.0)) {
    Invalid("baselines.sr_noise_scale", "must be >= 0");
  }
  if (trials < 1) Invalid("experiment.trials", "must be >= 1");
  if (output_dir.empty()) Invalid("experiment.output_dir", "must be non-empty");
  for (std::size_t t : trace_iterations) {
    if (t < 1) Invalid("trace.iterations", "entries must be >= 1");
  }
}

ExperimentConfig ParseConfig(std::string_view text) {
  ExperimentConfig cfg;
  const std::vector<Field> fields = Fields(cfg);
  std::set<std::string> seen;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto fail = [&](const std::string& msg) {
    throw Error(ErrorCode::kParseError,
                "line " + std::to_string(line_no) + ": " + msg);
  };

  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(
        pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = Trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header");
      section = std::string(Trim(line.substr(1, line.size() - 2)));
      bool known = false;
      for (const char* s : kSections) known = known || section == s;
      if (!known) fail("unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail("expected 'key = value'");
    if (section.empty()) fail("key outside of any section");
    const std::string key(Trim(line.substr(0, eq)));
    const std::string_view value = Trim(line.substr(eq + 1));
    const std::string full = section + "." + key;

    const Field* field = nullptr;
    for (const Field& f : fields) {
      if (section == f.section && key == f.key) field = &f;
    }
    if (field == nullptr) fail("unknown key " + full);
    if (!seen.insert(full).second) fail("repeated key " + full);
    try {
      field->set(value);
    } catch (const BadValue& e) {
      fail(full + ": " + e.what);
    }
  }

  cfg.model.input_dim = cfg.synth.num_features();
  cfg.model.num_classes = cfg.synth.num_classes;
  if (!seen.count("solver.scale")) {
    cfg.solver.lissa.scale = DefaultLissaScale(cfg.model.architecture);
  }
  if (cfg.uib.index_sets) {
    const IndexSets defaults = DefaultIndexSets(
        cfg.uib.single_slice ? 1 : cfg.model.LayerCount());
    if (cfg.uib.index_sets->s_theta.empty()) {
      cfg.uib.index_sets->s_theta = defaults.s_theta;
    }
    if (cfg.uib.index_sets->s_r.empty()) {
      cfg.uib.index_sets->s_r = defaults.s_r;
    }
  }
  cfg.Validate();
  return cfg;
}

ExperimentConfig LoadConfigFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return ParseConfig(text.str());
}

std::string SerializeConfig(const ExperimentConfig& cfg) {
  ExperimentConfig copy = cfg;
  const std::vector<Field> fields = Fields(copy);
  std::string out;
  std::string section;
  for (const Field& f : fields) {
    if (section != f.section) {
      if (!section.empty()) out += '\n';
      section = f.section;
      out += "[" + section + "]\n";
    }
    const std::string value = f.get();
    out += std::string(f.key) + (value.empty() ? " =" : " = ") + value + "\n";
  }
  return out;
}

}  // namespace uib
