#include "ccgan/config.hpp"

#include "ccgan/format.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "ccgan/errors.hpp"

namespace ccgan {

namespace {

std::string trim(const std::string& s) {
  const std::size_t first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return std::string();
  const std::size_t last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& value, const std::string& where, const std::string& key) {
  T v{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError(where + ": value '" + value + "' for key '" + key + "' is not valid");
  }
  return v;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value,
                    const std::string& where) {
  if (key == "task") {
    task_dir = value;
  } else if (key == "target") {
    target_domain = value;
  } else if (key == "out_dir") {
    out_dir = value;
  } else if (key == "arm") {
    arm = arm_from_string(value);
  } else if (key == "seed") {
    train.seed = parse_number<std::uint64_t>(value, where, key);
  } else if (key == "batch_size") {
    train.batch_size = parse_number<int>(value, where, key);
  } else if (key == "total_steps") {
    train.total_steps = parse_number<long>(value, where, key);
  } else if (key == "disc_steps_per_gen_step") {
    train.disc_steps_per_gen_step = parse_number<int>(value, where, key);
  } else if (key == "eval_every") {
    train.eval_every = parse_number<long>(value, where, key);
  } else if (key == "base_lr") {
    train.base_lr = parse_number<double>(value, where, key);
  } else if (key == "lr_decay_every") {
    train.lr_decay_every = parse_number<int>(value, where, key);
  } else if (key == "lambda_cgan") {
    weights.cgan = parse_number<double>(value, where, key);
  } else if (key == "lambda_cyc") {
    weights.cyc = parse_number<double>(value, where, key);
  } else if (key == "lambda_uni") {
    weights.uni = parse_number<double>(value, where, key);
  } else if (key == "lambda_task") {
    weights.task = parse_number<double>(value, where, key);
  } else {
    throw ConfigError(where + ": unknown configuration key '" + key + "'");
  }
}

RunConfig RunConfig::parse(const std::string& text, const std::string& origin) {
  RunConfig config;
  std::istringstream in(text);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(where + ": expected key=value, got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty configuration key");
    config.set(key, value, where);
  }
  config.validate();
  return config;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str(), path);
}

void RunConfig::validate() const {
  train.validate();
  weights.validate();
}

std::string RunConfig::dump() const {
  std::ostringstream out;
  out << "# run configuration (key=value; '#' starts a comment)\n";
  out << "task=" << task_dir << '\n';
  out << "target=" << target_domain << '\n';
  out << "out_dir=" << out_dir << '\n';
  out << "arm=" << to_string(arm) << '\n';
  out << "seed=" << train.seed << '\n';
  out << "batch_size=" << train.batch_size << '\n';
  out << "total_steps=" << train.total_steps << '\n';
  out << "disc_steps_per_gen_step=" << train.disc_steps_per_gen_step << '\n';
  out << "eval_every=" << train.eval_every << '\n';
  out << "base_lr=" << format_double(train.base_lr) << '\n';
  out << "lr_decay_every=" << train.lr_decay_every << '\n';
  out << "lambda_cgan=" << format_double(weights.cgan) << '\n';
  out << "lambda_cyc=" << format_double(weights.cyc) << '\n';
  out << "lambda_uni=" << format_double(weights.uni) << '\n';
  out << "lambda_task=" << format_double(weights.task) << '\n';
  return out.str();
}

void RunConfig::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open config file for writing: " + path);
  out << dump();
  if (!out) throw DataError("failed writing config file: " + path);
}

ExperimentConfig RunConfig::experiment() const {
  ExperimentConfig config;
  config.arm = arm;
  config.train = train;
  config.weights = weights;
  config.out_dir = out_dir;
  return config;
}

}  // namespace ccgan
