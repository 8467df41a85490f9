#include "causalembed/harness/config.hpp"

#include <fstream>
#include <sstream>

#include "causalembed/errors.hpp"
#include "causalembed/serialize.hpp"

namespace causalembed::harness {

std::string experiment_kind_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::backdoor_dsprite: return "backdoor-dsprite";
    case ExperimentKind::frontdoor_dsprite: return "frontdoor-dsprite";
    case ExperimentKind::discrete_toy: return "discrete-toy";
    case ExperimentKind::csv_backdoor: return "csv-backdoor";
  }
  return "unknown";
}

ExperimentKind experiment_kind_from_name(const std::string& name) {
  if (name == "backdoor-dsprite") return ExperimentKind::backdoor_dsprite;
  if (name == "frontdoor-dsprite") return ExperimentKind::frontdoor_dsprite;
  if (name == "discrete-toy") return ExperimentKind::discrete_toy;
  if (name == "csv-backdoor") return ExperimentKind::csv_backdoor;
  throw ConfigError("unknown experiment kind '" + name + "'");
}

double ExperimentConfig::resolved_confounder_weight() const {
  if (dgp.confounder_weight) return *dgp.confounder_weight;
  return kind == ExperimentKind::frontdoor_dsprite ? 5.0 : 1.0;
}

double ExperimentConfig::resolved_u_half_range() const {
  if (dgp.u_half_range) return *dgp.u_half_range;
  return kind == ExperimentKind::frontdoor_dsprite ? 1.5 : 1.0;
}

std::size_t ExperimentConfig::resolved_grid_side() const {
  if (queries.grid_side) return *queries.grid_side;
  return kind == ExperimentKind::frontdoor_dsprite ? 11 : 3;
}

void ExperimentConfig::validate() const {
  if (replications < 1) {
    throw ConfigError("experiment.replications must be >= 1");
  }
  if (workers < 1) {
    throw ConfigError("experiment.workers must be >= 1");
  }
  if (dgp.n < 1) {
    throw ConfigError("dgp.n must be >= 1");
  }
  if (stage1.ridge_lambda && !(*stage1.ridge_lambda > 0.0)) {
    throw ConfigError("stage1.ridge_lambda must be > 0");
  }
  if (stage1.epochs < 1 || stage2.epochs < 1) {
    throw ConfigError("epochs must be >= 1");
  }
  if (stage1.output_activation != "identity" &&
      stage1.output_activation != "ramp") {
    throw ConfigError("stage1.output_activation must be identity or ramp");
  }
  if (stage2.sample_split != "none" && stage2.sample_split != "half") {
    throw ConfigError("stage2.sample_split must be none or half");
  }
  if (dgp.sprite != "square" && dgp.sprite != "gaussian-blob") {
    throw ConfigError("dgp.sprite must be square or gaussian-blob");
  }
  if (kind == ExperimentKind::csv_backdoor) {
    if (dgp.csv_path.empty()) {
      throw ConfigError("csv-backdoor requires dgp.csv_path");
    }
    if (queries.ate_points.empty() && queries.att_pairs.empty()) {
      throw ConfigError("csv-backdoor requires queries.ate_points or "
                        "queries.att_pairs");
    }
  } else {
    if (resolved_grid_side() < 1) {
      throw ConfigError("queries.grid_side must be >= 1");
    }
  }
  if (queries.grid_min < 0.0 || queries.grid_max > 1.0 ||
      queries.grid_min > queries.grid_max) {
    throw ConfigError("queries grid range must satisfy 0 <= min <= max <= 1");
  }
  if (queries.mc_samples < 2) {
    throw ConfigError("queries.mc_samples must be >= 2");
  }
}

namespace {

std::string join_dims(const std::vector<std::size_t>& dims) {
  std::string out;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(dims[i]);
  }
  return out;
}

std::vector<std::size_t> parse_dims(const std::string& value,
                                    const std::string& context) {
  std::vector<std::size_t> dims;
  std::string token;
  std::istringstream in(value);
  while (std::getline(in, token, ',')) {
    if (token.empty()) continue;
    try {
      dims.push_back(std::stoul(token));
    } catch (const std::exception&) {
      throw ConfigError(context + ": bad width '" + token + "'");
    }
  }
  return dims;
}

std::vector<double> parse_point(const std::string& token,
                                const std::string& context) {
  std::vector<double> point;
  std::string cell;
  std::istringstream in(token);
  while (std::getline(in, cell, ',')) {
    point.push_back(parse_double(cell, context));
  }
  if (point.empty()) {
    throw ConfigError(context + ": empty point");
  }
  return point;
}

std::string format_point(const std::vector<double>& point) {
  std::string out;
  for (std::size_t i = 0; i < point.size(); ++i) {
    if (i) out += ',';
    out += format_double(point[i]);
  }
  return out;
}

bool parse_bool(const std::string& value, const std::string& context) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError(context + ": expected true or false, got '" + value +
                    "'");
}

}  // namespace

std::string ExperimentConfig::canonical() const {
  std::ostringstream out;
  out << "[experiment]\n";
  out << "kind = " << experiment_kind_name(kind) << '\n';
  out << "replications = " << replications << '\n';
  out << "base_seed = " << base_seed << '\n';
  out << "workers = " << workers << '\n';
  out << "\n[dgp]\n";
  out << "n = " << dgp.n << '\n';
  out << "resolution = " << dgp.resolution << '\n';
  out << "sprite = " << dgp.sprite << '\n';
  out << "sprite_half_width = " << format_double(dgp.sprite_half_width)
      << '\n';
  out << "pixel_noise_std = " << format_double(dgp.pixel_noise_std) << '\n';
  out << "backdoor_noise_std = " << format_double(dgp.backdoor_noise_std)
      << '\n';
  out << "mediator_noise_std = " << format_double(dgp.mediator_noise_std)
      << '\n';
  out << "outcome_noise_std = " << format_double(dgp.outcome_noise_std)
      << '\n';
  out << "confounder_weight = " << format_double(resolved_confounder_weight())
      << '\n';
  out << "u_half_range = " << format_double(resolved_u_half_range()) << '\n';
  out << "toy_graph = " << dgp::toy_graph_name(dgp.toy_graph) << '\n';
  out << "toy_seed = " << dgp.toy_seed << '\n';
  if (!dgp.csv_path.empty()) out << "csv_path = " << dgp.csv_path << '\n';
  out << "\n[stage1]\n";
  out << "treatment_dim = " << stage1.treatment_dim << '\n';
  out << "covariate_dim = " << stage1.covariate_dim << '\n';
  out << "confounder_dim = " << stage1.confounder_dim << '\n';
  out << "hidden = " << join_dims(stage1.hidden) << '\n';
  out << "image_hidden = " << join_dims(stage1.image_hidden) << '\n';
  out << "output_activation = " << stage1.output_activation << '\n';
  out << "ridge_lambda = "
      << (stage1.ridge_lambda ? format_double(*stage1.ridge_lambda)
                              : std::string("auto"))
      << '\n';
  out << "epochs = " << stage1.epochs << '\n';
  out << "minibatch = " << stage1.minibatch << '\n';
  out << "learning_rate = " << format_double(stage1.learning_rate) << '\n';
  out << "train_features = " << (stage1.train_features ? "true" : "false")
      << '\n';
  out << "\n[stage2]\n";
  out << "hidden = " << join_dims(stage2.hidden) << '\n';
  out << "image_hidden = " << join_dims(stage2.image_hidden) << '\n';
  out << "epochs = " << stage2.epochs << '\n';
  out << "minibatch = " << stage2.minibatch << '\n';
  out << "learning_rate = " << format_double(stage2.learning_rate) << '\n';
  out << "weight_decay = " << format_double(stage2.weight_decay) << '\n';
  out << "sample_split = " << stage2.sample_split << '\n';
  out << "\n[queries]\n";
  if (kind != ExperimentKind::csv_backdoor &&
      kind != ExperimentKind::discrete_toy) {
    out << "grid_side = " << resolved_grid_side() << '\n';
    out << "grid_min = " << format_double(queries.grid_min) << '\n';
    out << "grid_max = " << format_double(queries.grid_max) << '\n';
  }
  if (kind == ExperimentKind::frontdoor_dsprite) {
    out << "aprime_pos_x = " << format_double(queries.aprime_pos_x) << '\n';
    out << "aprime_pos_y = " << format_double(queries.aprime_pos_y) << '\n';
    out << "mc_samples = " << queries.mc_samples << '\n';
  }
  if (!queries.ate_points.empty()) {
    out << "ate_points =";
    for (const auto& p : queries.ate_points) out << ' ' << format_point(p);
    out << '\n';
  }
  if (!queries.att_pairs.empty()) {
    out << "att_pairs =";
    for (const auto& [a, ap] : queries.att_pairs) {
      out << ' ' << format_point(a) << ':' << format_point(ap);
    }
    out << '\n';
  }
  out << "\n[output]\n";
  out << "dir = " << output_dir << '\n';
  return out.str();
}

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& source) {
  ExperimentConfig config;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    // Strip comments and whitespace.
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t");
    line = line.substr(first, last - first + 1);

    const std::string where =
        source + ":" + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError(where + ": unterminated section header");
      }
      section = line.substr(1, line.size() - 2);
      if (section != "experiment" && section != "dgp" &&
          section != "stage1" && section != "stage2" &&
          section != "queries" && section != "output") {
        throw ConfigError(where + ": unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(where + ": expected key = value");
    }
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    const auto key_end = key.find_last_not_of(" \t");
    key = key.substr(0, key_end == std::string::npos ? 0 : key_end + 1);
    const auto value_begin = value.find_first_not_of(" \t");
    value = value_begin == std::string::npos ? "" : value.substr(value_begin);
    if (key.empty()) {
      throw ConfigError(where + ": empty key");
    }
    const std::string field = section + "." + key;

    try {
      if (section == "experiment") {
        if (key == "kind") config.kind = experiment_kind_from_name(value);
        else if (key == "replications") config.replications = std::stoul(value);
        else if (key == "base_seed") config.base_seed = std::stoull(value);
        else if (key == "workers") config.workers = std::stoul(value);
        else throw ConfigError(where + ": unknown key " + field);
      } else if (section == "dgp") {
        if (key == "n") config.dgp.n = std::stoul(value);
        else if (key == "resolution") config.dgp.resolution = std::stoul(value);
        else if (key == "sprite") config.dgp.sprite = value;
        else if (key == "sprite_half_width")
          config.dgp.sprite_half_width = parse_double(value, where);
        else if (key == "pixel_noise_std")
          config.dgp.pixel_noise_std = parse_double(value, where);
        else if (key == "backdoor_noise_std")
          config.dgp.backdoor_noise_std = parse_double(value, where);
        else if (key == "mediator_noise_std")
          config.dgp.mediator_noise_std = parse_double(value, where);
        else if (key == "outcome_noise_std")
          config.dgp.outcome_noise_std = parse_double(value, where);
        else if (key == "confounder_weight")
          config.dgp.confounder_weight = parse_double(value, where);
        else if (key == "u_half_range")
          config.dgp.u_half_range = parse_double(value, where);
        else if (key == "toy_graph")
          config.dgp.toy_graph = dgp::toy_graph_from_name(value);
        else if (key == "toy_seed") config.dgp.toy_seed = std::stoull(value);
        else if (key == "csv_path") config.dgp.csv_path = value;
        else throw ConfigError(where + ": unknown key " + field);
      } else if (section == "stage1") {
        if (key == "treatment_dim")
          config.stage1.treatment_dim = std::stoul(value);
        else if (key == "covariate_dim")
          config.stage1.covariate_dim = std::stoul(value);
        else if (key == "confounder_dim")
          config.stage1.confounder_dim = std::stoul(value);
        else if (key == "hidden")
          config.stage1.hidden = parse_dims(value, where);
        else if (key == "image_hidden")
          config.stage1.image_hidden = parse_dims(value, where);
        else if (key == "output_activation")
          config.stage1.output_activation = value;
        else if (key == "ridge_lambda") {
          if (value == "auto") config.stage1.ridge_lambda.reset();
          else config.stage1.ridge_lambda = parse_double(value, where);
        } else if (key == "epochs") config.stage1.epochs = std::stoul(value);
        else if (key == "minibatch")
          config.stage1.minibatch = std::stoul(value);
        else if (key == "learning_rate")
          config.stage1.learning_rate = parse_double(value, where);
        else if (key == "train_features")
          config.stage1.train_features = parse_bool(value, where);
        else throw ConfigError(where + ": unknown key " + field);
      } else if (section == "stage2") {
        if (key == "hidden") config.stage2.hidden = parse_dims(value, where);
        else if (key == "image_hidden")
          config.stage2.image_hidden = parse_dims(value, where);
        else if (key == "epochs") config.stage2.epochs = std::stoul(value);
        else if (key == "minibatch")
          config.stage2.minibatch = std::stoul(value);
        else if (key == "learning_rate")
          config.stage2.learning_rate = parse_double(value, where);
        else if (key == "weight_decay")
          config.stage2.weight_decay = parse_double(value, where);
        else if (key == "sample_split") config.stage2.sample_split = value;
        else throw ConfigError(where + ": unknown key " + field);
      } else if (section == "queries") {
        if (key == "grid_side") config.queries.grid_side = std::stoul(value);
        else if (key == "grid_min")
          config.queries.grid_min = parse_double(value, where);
        else if (key == "grid_max")
          config.queries.grid_max = parse_double(value, where);
        else if (key == "aprime_pos_x")
          config.queries.aprime_pos_x = parse_double(value, where);
        else if (key == "aprime_pos_y")
          config.queries.aprime_pos_y = parse_double(value, where);
        else if (key == "mc_samples")
          config.queries.mc_samples = std::stoul(value);
        else if (key == "ate_points") {
          std::istringstream points(value);
          std::string token;
          while (points >> token) {
            config.queries.ate_points.push_back(parse_point(token, where));
          }
        } else if (key == "att_pairs") {
          std::istringstream pairs(value);
          std::string token;
          while (pairs >> token) {
            const auto colon = token.find(':');
            if (colon == std::string::npos) {
              throw ConfigError(where + ": att pair '" + token +
                                "' must be a:a'");
            }
            config.queries.att_pairs.emplace_back(
                parse_point(token.substr(0, colon), where),
                parse_point(token.substr(colon + 1), where));
          }
        } else throw ConfigError(where + ": unknown key " + field);
      } else if (section == "output") {
        if (key == "dir") config.output_dir = value;
        else throw ConfigError(where + ": unknown key " + field);
      } else {
        throw ConfigError(where + ": key " + key + " outside any section");
      }
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(where + ": bad value for " + field + " (" +
                        e.what() + ")");
    }
  }
  config.validate();
  return config;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open config file '" + path + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path);
}

}  // namespace causalembed::harness
