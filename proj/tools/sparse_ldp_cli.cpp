// Copyright 2026 The sparse_ldp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line harness: simulate, amplify, project, gen.
//
// Exit codes: 0 success, 1 invalid configuration or input, 2 some grid points
// failed (rows for the remaining points are still written).

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sparse_ldp.hpp"

namespace {

using namespace sparse_ldp;

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitPartial = 2;

enum class Format { kCsv, kJsonl };

struct OutputOptions {
  std::string path;
  std::string format = "csv";
};

// Flat `key = value` file whose keys are the subcommand's long option names.
// Options already given on the command line keep their values.
void add_config_option(CLI::App& app, std::string& path) {
  app.add_option("--config", path, "Key-value config file; command-line flags take precedence")
      ->check(CLI::ExistingFile);
}

void apply_config(CLI::App& app, const std::string& path) {
  if (path.empty()) return;
  for (const auto& item : CLI::ConfigINI().from_file(path)) {
    std::string key = item.name;
    std::replace(key.begin(), key.end(), '_', '-');
    if (!item.parents.empty() || key == "config") throw ParameterError("unsupported config key: " + item.fullname());
    CLI::Option* opt = app.get_option_no_throw("--" + key);
    if (opt == nullptr) throw ParameterError("unknown config key: " + item.name);
    if (opt->count() > 0) continue;
    if (opt->get_type_size() == 0) {
      if (item.inputs.size() != 1) throw ParameterError("flag " + item.name + " takes one value");
      const std::string& v = item.inputs.front();
      if (v == "true" || v == "1" || v == "on") {
        opt->add_result(std::string("true"));
      } else if (!(v == "false" || v == "0" || v == "off")) {
        throw ParameterError("flag " + item.name + " expects true or false");
      } else {
        continue;
      }
    } else {
      opt->add_result(item.inputs);
    }
    opt->run_callback();
  }
}

void add_output_options(CLI::App& app, OutputOptions& out) {
  app.add_option("-o,--output", out.path, "Output file (default: stdout)");
  app.add_option("--format", out.format, "csv or jsonl")->check(CLI::IsMember({"csv", "jsonl"}));
}

// Opens the requested sink; stdout when no path is given.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*file_) throw ParameterError("cannot open output file " + path);
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

std::string json_number(double v) { return std::isfinite(v) ? format_number(v) : "null"; }

std::string json_value(const CoordinateValue& v) {
  if (const auto* u = std::get_if<std::uint64_t>(&v)) return std::to_string(*u);
  if (const auto* d = std::get_if<double>(&v)) return json_number(*d);
  return nlohmann::json(std::get<std::string>(v)).dump();
}

void write_jsonl(std::ostream& out, std::span<const ReportRow> rows) {
  for (const auto& row : rows) {
    out << '{';
    for (const auto& [key, value] : row.coordinates) out << nlohmann::json(key).dump() << ':' << json_value(value) << ',';
    out << "\"metric\":" << nlohmann::json(row.metric).dump() << ",\"value\":" << json_number(row.value)
        << ",\"repetitions\":" << row.repetitions << ",\"seed\":" << row.seed << "}\n";
  }
}

void write_rows(const OutputOptions& options, std::span<const ReportRow> rows) {
  Sink sink(options.path);
  if (options.format == "jsonl") {
    write_jsonl(sink.stream(), rows);
  } else {
    write_csv(sink.stream(), rows);
  }
  sink.stream().flush();
}

int report_failures(const std::vector<PointFailure>& failures) {
  for (const auto& f : failures) std::cerr << "point failed: " << f.point << ": " << f.message << '\n';
  return failures.empty() ? kExitOk : kExitPartial;
}

template <typename T, typename Parse>
std::vector<T> parse_all(const std::vector<std::string>& names, Parse parse) {
  std::vector<T> out;
  for (const auto& name : names) out.push_back(parse(name));
  return out;
}

// simulate ------------------------------------------------------------------

struct SimulateOptions {
  ExperimentConfig config;
  std::optional<std::uint64_t> master_seed;
  std::vector<std::string> mechanisms{"collision"};
  std::vector<std::string> metrics{"tve", "mae"};
  std::string target = "frequency";
  std::string projection = "on";
  std::string report = "raw_mean";
  bool full_grid = false;
  std::string config_path;
  OutputOptions output;
};

void setup_simulate(CLI::App& app, SimulateOptions& o) {
  auto& c = o.config;
  add_config_option(app, o.config_path);
  app.add_option("--master-seed", o.master_seed, "Master seed for data and randomization (required)");
  app.add_option("--n", c.n, "Numbers of users")->delimiter(',');
  app.add_option("--d", c.d, "Dimensions")->delimiter(',');
  app.add_option("--s", c.s, "Sparsities")->delimiter(',');
  app.add_option("--epsilon", c.epsilon, "Local privacy budgets")->delimiter(',');
  app.add_option("--mechanisms", o.mechanisms, "collision, coco, privkv, pckv_grr, pckv_agrr")->delimiter(',');
  app.add_option("--repetitions", c.repetitions, "Repetitions per grid point");
  app.add_option("--metrics", o.metrics, "tve, mae")->delimiter(',');
  app.add_option("--target", o.target, "frequency, mean or nonmissing");
  app.add_option("--projection", o.projection, "on or off")->check(CLI::IsMember({"on", "off"}));
  app.add_option("--report", o.report, "raw_mean or mean_log");
  app.add_option("--threads", c.threads, "Worker threads");
  app.add_flag("--full-grid", o.full_grid,
               "Use the full grid: n {1e4, 1e5}, d {256, 512}, s {4, 8, 16, 32}, nine budgets");
  add_output_options(app, o.output);
}

int run_simulate(CLI::App& app, SimulateOptions& o) {
  apply_config(app, o.config_path);
  if (!o.master_seed) throw ParameterError("--master-seed is required");
  auto& c = o.config;
  if (o.full_grid) {
    c.n = {10000, 100000};
    c.d = {256, 512};
    c.s = {4, 8, 16, 32};
    c.epsilon = {0.001, 0.01, 0.1, 0.2, 0.4, 0.8, 1.0, 1.5, 2.0};
  }
  c.master_seed = *o.master_seed;
  c.mechanisms = parse_all<Mechanism>(o.mechanisms, parse_mechanism);
  c.metrics = parse_all<Metric>(o.metrics, parse_metric);
  c.target = parse_target(o.target);
  c.projection = o.projection == "on";
  c.report = parse_reporting(o.report);
  c.validate();
  const auto result = run_experiment(c);
  write_rows(o.output, result.rows);
  return report_failures(result.failures);
}

// amplify -------------------------------------------------------------------

struct AmplifyOptions {
  AmplificationSweep sweep;
  std::vector<std::string> bounds{"collision", "generic_clone", "efmrtt"};
  std::optional<double> alpha;
  std::optional<double> divergence_at;
  bool quiet = false;
  std::string config_path;
  OutputOptions output;
};

void setup_amplify(CLI::App& app, AmplifyOptions& o) {
  auto& s = o.sweep;
  add_config_option(app, o.config_path);
  app.add_option("--n", s.n, "Batch sizes")->delimiter(',');
  app.add_option("--s", s.s, "Sparsities (sets Collision's range t*)")->delimiter(',');
  app.add_option("--epsilon", s.epsilon, "Local privacy budgets")->delimiter(',');
  app.add_option("--delta", s.delta, "Target delta");
  app.add_option("--bounds", o.bounds, "collision, generic_clone, efmrtt")->delimiter(',');
  app.add_option("--tolerance", s.tolerance, "Binary-search tolerance on eps_c");
  app.add_option("--threads", s.threads, "Worker threads");
  app.add_option("--alpha", o.alpha, "Query a custom mixture weight instead of the named bounds");
  app.add_option("--divergence-at", o.divergence_at,
                 "With --alpha: report the divergence at this eps_c instead of searching");
  app.add_flag("--quiet", o.quiet, "Suppress the closed-form bound's validity note");
  add_output_options(app, o.output);
}

// Rows for a custom alpha: eps_c per (n, epsilon), or the divergence at a fixed eps_c.
ExperimentResult run_alpha_query(const AmplifyOptions& o) {
  o.sweep.validate();
  ExperimentResult result;
  for (const auto n : o.sweep.n) {
    for (const auto eps : o.sweep.epsilon) {
      std::vector<std::pair<std::string, CoordinateValue>> coords{
          {"bound", std::string("custom")}, {"n", n}, {"epsilon", eps}, {"alpha", *o.alpha}, {"delta", o.sweep.delta}};
      if (o.divergence_at) {
        const auto r = pq_divergence(AmplificationQuery{n, eps, *o.alpha, o.sweep.delta}, *o.divergence_at);
        coords.emplace_back("eps_c", *o.divergence_at);
        result.rows.push_back({coords, "delta", r.delta(), 1, 0});
        result.rows.push_back({coords, "delta_forward", r.delta_forward, 1, 0});
        result.rows.push_back({coords, "delta_backward", r.delta_backward, 1, 0});
        result.rows.push_back({coords, "truncation_mass", r.truncation_mass, 1, 0});
      } else {
        const double eps_c = amplified_epsilon(n, eps, *o.alpha, o.sweep.delta, o.sweep.tolerance);
        result.rows.push_back({coords, "eps_c", eps_c, 1, 0});
        result.rows.push_back({coords, "log2_ratio", std::log2(eps / std::max(eps_c, o.sweep.tolerance)), 1, 0});
      }
    }
  }
  return result;
}

int run_amplify(CLI::App& app, AmplifyOptions& o) {
  apply_config(app, o.config_path);
  if (o.divergence_at && !o.alpha) throw ParameterError("--divergence-at requires --alpha");
  if (o.alpha) {
    write_rows(o.output, run_alpha_query(o).rows);
    return kExitOk;
  }
  o.sweep.bounds = parse_all<Bound>(o.bounds, parse_bound);
  if (!o.quiet && std::find(o.sweep.bounds.begin(), o.sweep.bounds.end(), Bound::kEfmrtt) != o.sweep.bounds.end()) {
    std::cerr << "note: efmrtt rows use the closed form without checking its range of validity "
                 "(caveat=validity_unchecked)\n";
  }
  const auto result = run_amplification_sweep(o.sweep);
  write_rows(o.output, result.rows);
  return report_failures(result.failures);
}

// project -------------------------------------------------------------------

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        fields.back() += '"';
        ++k;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back() += c;
    }
  }
  if (quoted) throw ParameterError("unterminated quote in CSV line: " + line);
  return fields;
}

std::string join_csv_line(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t k = 0; k < fields.size(); ++k) {
    if (k > 0) out += ',';
    out += detail::csv_field(fields[k]);
  }
  return out;
}

struct ProjectOptions {
  std::string input = "-";
  std::string column = "value";
  std::vector<std::string> group_by;
  double total = 1.0;
  std::string output;
};

void setup_project(CLI::App& app, ProjectOptions& o) {
  app.add_option("-i,--input", o.input, "CSV of estimates with a header row (default: stdin)");
  app.add_option("--column", o.column, "Column holding the estimates");
  app.add_option("--group-by", o.group_by, "Columns identifying one estimate vector")->delimiter(',');
  app.add_option("--total", o.total, "Simplex total, e.g. s for event frequencies")->required();
  app.add_option("-o,--output", o.output, "Output file (default: stdout)");
}

// Appends a `projected` column; rows sharing the group-by values form one vector.
int run_project(const ProjectOptions& o) {
  std::ifstream file;
  if (o.input != "-") {
    file.open(o.input);
    if (!file) throw ParameterError("cannot open input file " + o.input);
  }
  std::istream& in = o.input == "-" ? std::cin : file;
  std::string line;
  if (!std::getline(in, line)) throw ParameterError("empty input");
  const auto header = split_csv_line(line);
  const auto index_of = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ParameterError("no column named " + name);
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t value_column = index_of(o.column);
  std::vector<std::size_t> key_columns;
  for (const auto& g : o.group_by) key_columns.push_back(index_of(g));

  std::vector<std::vector<std::string>> rows;
  std::map<std::vector<std::string>, std::vector<std::size_t>> groups;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != header.size()) throw ParameterError("row width differs from header: " + line);
    std::vector<std::string> key;
    for (const auto k : key_columns) key.push_back(fields[k]);
    groups[key].push_back(rows.size());
    rows.push_back(std::move(fields));
  }
  if (rows.empty()) throw ParameterError("no data rows");
  std::vector<double> projected(rows.size());
  for (const auto& [key, members] : groups) {
    std::vector<double> values;
    for (const auto r : members) {
      std::size_t used = 0;
      const std::string& text = rows[r][value_column];
      double v = 0;
      try {
        v = std::stod(text, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != text.size() || text.empty()) throw ParameterError("not a number: " + text);
      values.push_back(v);
    }
    const auto w = project_onto_scaled_simplex(values, o.total);
    for (std::size_t k = 0; k < members.size(); ++k) projected[members[k]] = w[k];
  }
  Sink sink(o.output);
  auto out_header = header;
  out_header.emplace_back("projected");
  sink.stream() << join_csv_line(out_header) << '\n';
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto fields = rows[r];
    fields.push_back(format_number(projected[r]));
    sink.stream() << join_csv_line(fields) << '\n';
  }
  sink.stream().flush();
  return kExitOk;
}

// gen -----------------------------------------------------------------------

struct GenOptions {
  std::uint64_t n = 1000;
  std::uint32_t d = 64;
  std::uint32_t s = 8;
  std::optional<std::uint64_t> seed;
  std::string config_path;
  OutputOptions output;
};

void setup_gen(CLI::App& app, GenOptions& o) {
  add_config_option(app, o.config_path);
  app.add_option("--n", o.n, "Number of users");
  app.add_option("--d", o.d, "Dimension");
  app.add_option("--s", o.s, "Non-zero entries per user");
  app.add_option("--seed", o.seed, "Dataset seed (required)");
  add_output_options(app, o.output);
}

// One line per non-zero entry (CSV) or one object per user (JSON lines).
int run_gen(CLI::App& app, GenOptions& o) {
  apply_config(app, o.config_path);
  if (!o.seed) throw ParameterError("--seed is required");
  const auto data = gen_synthetic(o.n, o.d, o.s, *o.seed);
  Sink sink(o.output.path);
  auto& out = sink.stream();
  if (o.output.format == "jsonl") {
    for (std::size_t i = 0; i < data.size(); ++i) {
      nlohmann::json support = nlohmann::json::array();
      for (const auto& e : data[i].support()) support.push_back({e.index, to_int(e.sign)});
      out << nlohmann::json{{"user", i}, {"d", o.d}, {"support", support}}.dump() << '\n';
    }
  } else {
    out << "user,index,value\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
      for (const auto& e : data[i].support()) out << i << ',' << e.index << ',' << to_int(e.sign) << '\n';
    }
  }
  out.flush();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse-vector LDP mechanisms: simulation and shuffle accounting"};
  app.require_subcommand(1);

  SimulateOptions simulate;
  AmplifyOptions amplify;
  ProjectOptions project;
  GenOptions gen;
  auto* simulate_cmd = app.add_subcommand("simulate", "Run an experiment grid and report error metrics");
  auto* amplify_cmd = app.add_subcommand("amplify", "Shuffle amplification sweeps and queries");
  auto* project_cmd = app.add_subcommand("project", "Project estimate vectors onto the scaled simplex");
  auto* gen_cmd = app.add_subcommand("gen", "Dump a synthetic sparse ternary dataset");
  setup_simulate(*simulate_cmd, simulate);
  setup_amplify(*amplify_cmd, amplify);
  setup_project(*project_cmd, project);
  setup_gen(*gen_cmd, gen);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (*simulate_cmd) return run_simulate(*simulate_cmd, simulate);
    if (*amplify_cmd) return run_amplify(*amplify_cmd, amplify);
    if (*project_cmd) return run_project(project);
    if (*gen_cmd) return run_gen(*gen_cmd, gen);
  } catch (const ParameterError& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  return kExitInvalid;
}
