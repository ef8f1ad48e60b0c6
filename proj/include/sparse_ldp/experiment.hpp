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
#pragma once

// Synthetic data, experiment grids and amplification sweeps.
//
// Every random draw is derived from one master seed: the dataset of grid
// point p, repetition r comes from prf(master, p, r), and each mechanism
// randomizes that dataset with its own stream keyed off the same value, so
// all mechanisms at a grid point see identical data.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "sparse_ldp/accountant.hpp"
#include "sparse_ldp/aggregate.hpp"
#include "sparse_ldp/baselines.hpp"
#include "sparse_ldp/coco.hpp"
#include "sparse_ldp/collision.hpp"
#include "sparse_ldp/error.hpp"
#include "sparse_ldp/hash.hpp"
#include "sparse_ldp/rng.hpp"
#include "sparse_ldp/vector.hpp"

namespace sparse_ldp {

// n independent s-sparse vectors: support uniform over s-subsets of [d],
// signs fair.
inline std::vector<TernaryVector> gen_synthetic(std::uint64_t n, std::uint32_t d, std::uint32_t s,
                                                std::uint64_t seed) {
  detail::require(s >= 1 && s <= d, "need 1 <= s <= d");
  Rng rng = make_rng(seed);
  std::vector<TernaryVector> out;
  out.reserve(n);
  std::vector<std::uint32_t> chosen;
  for (std::uint64_t i = 0; i < n; ++i) {
    chosen.clear();
    // Floyd's subset sampling.
    for (std::uint32_t j = d - s + 1; j <= d; ++j) {
      const auto pick = static_cast<std::uint32_t>(uniform_below(rng, j)) + 1;
      chosen.push_back(std::find(chosen.begin(), chosen.end(), pick) == chosen.end() ? pick : j);
    }
    std::sort(chosen.begin(), chosen.end());
    std::vector<SupportEntry> support;
    support.reserve(s);
    for (const auto j : chosen) support.push_back({j, fair_coin(rng) ? Sign::kPlus : Sign::kMinus});
    out.emplace_back(d, std::move(support));
  }
  return out;
}

enum class Mechanism : std::uint8_t { kCollision, kCoco, kPrivKV, kPckvGrr, kPckvAgrr };
enum class Target : std::uint8_t { kFrequency, kMean, kNonmissing };
enum class Metric : std::uint8_t { kTve, kMae };
enum class Reporting : std::uint8_t { kRawMean, kMeanLog };

inline const char* to_string(Mechanism m) {
  switch (m) {
    case Mechanism::kCollision: return "collision";
    case Mechanism::kCoco: return "coco";
    case Mechanism::kPrivKV: return "privkv";
    case Mechanism::kPckvGrr: return "pckv_grr";
    case Mechanism::kPckvAgrr: return "pckv_agrr";
  }
  return "?";
}

inline const char* to_string(Target t) {
  switch (t) {
    case Target::kFrequency: return "frequency";
    case Target::kMean: return "mean";
    case Target::kNonmissing: return "nonmissing";
  }
  return "?";
}

inline const char* to_string(Metric m) { return m == Metric::kTve ? "tve" : "mae"; }
inline const char* to_string(Reporting r) { return r == Reporting::kRawMean ? "raw_mean" : "mean_log"; }

template <typename Enum, std::size_t N>
Enum parse_enum(const std::string& text, const Enum (&values)[N], const char* what) {
  for (const auto v : values) {
    if (text == to_string(v)) return v;
  }
  throw ParameterError(std::string("unknown ") + what + ": " + text);
}

inline Mechanism parse_mechanism(const std::string& s) {
  static constexpr Mechanism kAll[] = {Mechanism::kCollision, Mechanism::kCoco, Mechanism::kPrivKV,
                                       Mechanism::kPckvGrr, Mechanism::kPckvAgrr};
  return parse_enum(s, kAll, "mechanism");
}
inline Target parse_target(const std::string& s) {
  static constexpr Target kAll[] = {Target::kFrequency, Target::kMean, Target::kNonmissing};
  return parse_enum(s, kAll, "target");
}
inline Metric parse_metric(const std::string& s) {
  static constexpr Metric kAll[] = {Metric::kTve, Metric::kMae};
  return parse_enum(s, kAll, "metric");
}
inline Reporting parse_reporting(const std::string& s) {
  static constexpr Reporting kAll[] = {Reporting::kRawMean, Reporting::kMeanLog};
  return parse_enum(s, kAll, "report mode");
}

struct ExperimentConfig {
  std::vector<std::uint64_t> n{10000, 20000};
  std::vector<std::uint32_t> d{64, 128, 256};
  std::vector<std::uint32_t> s{8};
  std::vector<double> epsilon{1.0};
  std::vector<Mechanism> mechanisms{Mechanism::kCollision};
  std::uint32_t repetitions = 100;
  std::uint64_t master_seed = 0;
  std::vector<Metric> metrics{Metric::kTve, Metric::kMae};
  Target target = Target::kFrequency;
  bool projection = true;
  Reporting report = Reporting::kRawMean;
  unsigned threads = 1;

  void validate() const {
    detail::require(!n.empty() && !d.empty() && !s.empty() && !epsilon.empty(), "grid lists must be non-empty");
    detail::require(!mechanisms.empty(), "at least one mechanism is required");
    detail::require(!metrics.empty(), "at least one metric is required");
    detail::require(repetitions >= 1, "repetitions must be positive");
    detail::require(threads >= 1, "threads must be positive");
    for (const auto v : n) detail::require(v >= 1, "n must be positive");
    for (const auto v : d) detail::require(v >= 1, "d must be positive");
    for (const auto v : s) detail::require(v >= 1, "s must be positive");
    for (const auto v : epsilon) detail::require(std::isfinite(v) && v > 0, "epsilon must be positive");
  }
};

using CoordinateValue = std::variant<std::uint64_t, double, std::string>;

struct ReportRow {
  std::vector<std::pair<std::string, CoordinateValue>> coordinates;
  std::string metric;
  double value = 0;
  std::uint32_t repetitions = 0;
  std::uint64_t seed = 0;
};

struct PointFailure {
  std::string point;
  std::string message;
};

struct ExperimentResult {
  std::vector<ReportRow> rows;
  std::vector<PointFailure> failures;
};

// Hash range each mechanism uses at a grid point; 0 for the baselines.
inline std::uint32_t default_range(Mechanism m, std::uint32_t s, double epsilon, Target target) {
  switch (m) {
    case Mechanism::kCollision: return collision_optimal_t(s, epsilon);
    case Mechanism::kCoco:
      return coco_choose_t(s, epsilon, target == Target::kNonmissing ? CocoTarget::kNonmissing : CocoTarget::kMean);
    default: return 0;
  }
}

// Estimates for one repetition, before and after projection.
struct RepetitionEstimate {
  std::vector<double> raw;
  std::vector<double> projected;
};

namespace detail {

inline std::vector<double> select_target(const FrequencyEstimate& f, Target target) {
  if (target == Target::kFrequency) return f.values;
  const auto m = MeanEstimate::from_frequency(f);
  return target == Target::kMean ? m.mean : *m.nonmissing;
}

inline std::vector<double> truth_for(std::span<const TernaryVector> data, Target target) {
  return select_target(FrequencyEstimate{true_frequencies(data), data.size()}, target);
}

}  // namespace detail

// Randomizes `data` with `mechanism` and aggregates; `stream` seeds both the
// hash keys and the randomizer.
inline RepetitionEstimate estimate_once(std::span<const TernaryVector> data, Mechanism mechanism, std::uint32_t s,
                                        double epsilon, Target target, std::uint64_t stream) {
  detail::require(!data.empty(), "empty dataset");
  const std::uint32_t d = data.front().dimension();
  const std::uint64_t n = data.size();
  Rng rng = make_rng(prf(stream, 0x524e47ULL));
  const std::uint64_t hash_master = prf(stream, 0x48415348ULL);
  FrequencyEstimate f;
  std::optional<MeanEstimate> direct;
  switch (mechanism) {
    case Mechanism::kCollision: {
      const auto params = CollisionParams::make(d, s, epsilon, default_range(mechanism, s, epsilon, target));
      std::vector<PrivateView> views;
      views.reserve(n);
      for (std::uint64_t i = 0; i < n; ++i) {
        views.push_back(collision_randomize(data[i], draw_user_hash(hash_master, i, HashKind::kSingle, params.base.t),
                                            params, rng));
      }
      f = collision_frequencies(count_event_hits(views, d, params.base.t, HashKind::kSingle), params);
      break;
    }
    case Mechanism::kCoco: {
      const MechanismParams params{d, s, epsilon, default_range(mechanism, s, epsilon, target)};
      std::vector<PrivateView> views;
      views.reserve(n);
      for (std::uint64_t i = 0; i < n; ++i) {
        views.push_back(coco_randomize(data[i], draw_user_hash(hash_master, i, HashKind::kPaired, params.t), params, rng));
      }
      direct = coco_estimates(count_event_hits(views, d, params.t, HashKind::kPaired), params);
      f = coco_frequencies(*direct, n);
      break;
    }
    case Mechanism::kPrivKV: {
      const BaselineParams params{d, s, epsilon, BaselineKind::kPrivKV};
      std::vector<PrivkvReport> reports;
      reports.reserve(n);
      for (const auto& x : data) reports.push_back(privkv_randomize(x, params, rng));
      f = FrequencyEstimate{baseline_frequency_estimates<PrivkvReport>(reports, params), n};
      break;
    }
    case Mechanism::kPckvGrr:
    case Mechanism::kPckvAgrr: {
      const BaselineParams params{
          d, s, epsilon, mechanism == Mechanism::kPckvGrr ? BaselineKind::kPckvGrr : BaselineKind::kPckvAgrr};
      std::vector<PckvReport> reports;
      reports.reserve(n);
      for (const auto& x : data) reports.push_back(pckv_randomize(x, params, rng));
      f = FrequencyEstimate{baseline_frequency_estimates<PckvReport>(reports, params), n};
      break;
    }
  }
  RepetitionEstimate out;
  if (direct && target != Target::kFrequency) {
    out.raw = target == Target::kMean ? direct->mean : *direct->nonmissing;
  } else {
    out.raw = detail::select_target(f, target);
  }
  out.projected = detail::select_target(project_to_simplex(f, s), target);
  return out;
}

// Runs `count` independent jobs on `threads` workers; results land by index.
inline void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& job) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t k = 0; k < count; ++k) job(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < std::min<std::size_t>(threads, count); ++w) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < count; k = next++) {
        try {
          job(k);
        } catch (...) {
          errors[k] = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

inline std::uint64_t repetition_seed(std::uint64_t master_seed, std::uint64_t point, std::uint64_t rep) {
  return prf(master_seed, point, rep);
}

inline ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  struct Point {
    std::uint64_t n;
    std::uint32_t d;
    std::uint32_t s;
    double epsilon;
  };
  std::vector<Point> points;
  for (const auto n : config.n)
    for (const auto d : config.d)
      for (const auto s : config.s)
        for (const auto eps : config.epsilon) points.push_back({n, d, s, eps});

  struct Cell {
    std::vector<std::vector<double>> raw;  // [metric][rep]
    std::vector<std::vector<double>> projected;
    std::string error;
  };
  const std::size_t mechs = config.mechanisms.size();
  std::vector<Cell> cells(points.size() * mechs);
  for (auto& c : cells) {
    c.raw.assign(config.metrics.size(), std::vector<double>(config.repetitions));
    c.projected = c.raw;
  }

  const auto job = [&](std::size_t task) {
    const std::size_t p = task / config.repetitions;
    const std::uint32_t rep = static_cast<std::uint32_t>(task % config.repetitions);
    const Point& pt = points[p];
    const std::uint64_t seed = repetition_seed(config.master_seed, p, rep);
    std::vector<TernaryVector> data;
    try {
      data = gen_synthetic(pt.n, pt.d, pt.s, seed);
    } catch (const std::exception& e) {
      for (std::size_t m = 0; m < mechs; ++m) cells[p * mechs + m].error = e.what();
      return;
    }
    const auto truth = detail::truth_for(data, config.target);
    for (std::size_t m = 0; m < mechs; ++m) {
      Cell& cell = cells[p * mechs + m];
      try {
        const auto est = estimate_once(data, config.mechanisms[m], pt.s, pt.epsilon, config.target,
                                       prf(seed, static_cast<std::uint64_t>(config.mechanisms[m]) + 1));
        for (std::size_t k = 0; k < config.metrics.size(); ++k) {
          const auto metric = config.metrics[k] == Metric::kTve ? tve : mae;
          cell.raw[k][rep] = metric(est.raw, truth);
          cell.projected[k][rep] = metric(est.projected, truth);
        }
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
    }
  };
  parallel_for(points.size() * config.repetitions, config.threads, job);

  const auto summarize = [&](const std::vector<double>& values) {
    double sum = 0.0;
    for (const auto v : values) sum += config.report == Reporting::kMeanLog ? std::log(v) : v;
    return sum / static_cast<double>(values.size());
  };

  ExperimentResult result;
  for (std::size_t p = 0; p < points.size(); ++p) {
    const Point& pt = points[p];
    for (std::size_t m = 0; m < mechs; ++m) {
      const Cell& cell = cells[p * mechs + m];
      const Mechanism mech = config.mechanisms[m];
      std::vector<std::pair<std::string, CoordinateValue>> coords{
          {"mechanism", std::string(to_string(mech))},
          {"target", std::string(to_string(config.target))},
          {"n", pt.n},
          {"d", static_cast<std::uint64_t>(pt.d)},
          {"s", static_cast<std::uint64_t>(pt.s)},
          {"epsilon", pt.epsilon},
          {"t", static_cast<std::uint64_t>(0)},
          {"projection", std::string(config.projection ? "on" : "off")},
          {"report", std::string(to_string(config.report))},
      };
      if (!cell.error.empty()) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "mechanism=%s n=%llu d=%u s=%u epsilon=%.17g", to_string(mech),
                      static_cast<unsigned long long>(pt.n), pt.d, pt.s, pt.epsilon);
        result.failures.push_back({buf, cell.error});
        continue;
      }
      coords[6].second = static_cast<std::uint64_t>(default_range(mech, pt.s, pt.epsilon, config.target));
      for (std::size_t k = 0; k < config.metrics.size(); ++k) {
        const std::string name = to_string(config.metrics[k]);
        if (config.projection) {
          result.rows.push_back({coords, name, summarize(cell.projected[k]), config.repetitions, config.master_seed});
          result.rows.push_back({coords, name + "_raw", summarize(cell.raw[k]), config.repetitions, config.master_seed});
        } else {
          result.rows.push_back({coords, name, summarize(cell.raw[k]), config.repetitions, config.master_seed});
        }
      }
    }
  }
  return result;
}

enum class Bound : std::uint8_t { kCollision, kGenericClone, kEfmrtt };

inline const char* to_string(Bound b) {
  switch (b) {
    case Bound::kCollision: return "collision";
    case Bound::kGenericClone: return "generic_clone";
    case Bound::kEfmrtt: return "efmrtt";
  }
  return "?";
}

inline Bound parse_bound(const std::string& s) {
  static constexpr Bound kAll[] = {Bound::kCollision, Bound::kGenericClone, Bound::kEfmrtt};
  return parse_enum(s, kAll, "bound");
}

struct AmplificationSweep {
  std::vector<std::uint64_t> n{10000};
  std::vector<std::uint32_t> s{4};
  std::vector<double> epsilon{0.5, 1.0, 2.0};
  double delta = 1e-6;
  std::vector<Bound> bounds{Bound::kCollision, Bound::kGenericClone, Bound::kEfmrtt};
  double tolerance = 1e-4;
  unsigned threads = 1;

  void validate() const {
    detail::require(!n.empty() && !s.empty() && !epsilon.empty() && !bounds.empty(), "sweep lists must be non-empty");
    detail::require(delta > 0 && delta < 1, "delta must lie in (0, 1)");
    detail::require(tolerance > 0, "tolerance must be positive");
    detail::require(threads >= 1, "threads must be positive");
  }
};

// Amplified budget under one bound; t is Collision's default range.
inline double amplified_budget(Bound bound, std::uint64_t n, std::uint32_t s, double epsilon, double delta,
                               double tolerance) {
  switch (bound) {
    case Bound::kCollision:
      return amplified_epsilon(n, epsilon, collision_alpha(s, epsilon, collision_optimal_t(s, epsilon)), delta,
                               tolerance);
    case Bound::kGenericClone:
      return amplified_epsilon(n, epsilon, generic_clone_alpha(epsilon), delta, tolerance);
    case Bound::kEfmrtt:
      return efmrtt_closed_form(epsilon, delta, n);
  }
  return epsilon;
}

// Rows eps_c and log2_ratio = log2(epsilon / eps_c) per grid point and bound;
// eps_c is floored at the search tolerance inside the logarithm.
inline ExperimentResult run_amplification_sweep(const AmplificationSweep& sweep) {
  sweep.validate();
  struct Task {
    std::uint64_t n;
    std::uint32_t s;
    double epsilon;
    Bound bound;
  };
  std::vector<Task> tasks;
  for (const auto n : sweep.n)
    for (const auto s : sweep.s)
      for (const auto eps : sweep.epsilon)
        for (const auto b : sweep.bounds) tasks.push_back({n, s, eps, b});
  std::vector<double> values(tasks.size(), 0.0);
  std::vector<std::string> errors(tasks.size());
  parallel_for(tasks.size(), sweep.threads, [&](std::size_t k) {
    const Task& task = tasks[k];
    try {
      values[k] = amplified_budget(task.bound, task.n, task.s, task.epsilon, sweep.delta, sweep.tolerance);
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  });
  ExperimentResult result;
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    const Task& task = tasks[k];
    if (!errors[k].empty()) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "bound=%s n=%llu s=%u epsilon=%.17g", to_string(task.bound),
                    static_cast<unsigned long long>(task.n), task.s, task.epsilon);
      result.failures.push_back({buf, errors[k]});
      continue;
    }
    std::vector<std::pair<std::string, CoordinateValue>> coords{
        {"bound", std::string(to_string(task.bound))},
        {"n", task.n},
        {"s", static_cast<std::uint64_t>(task.s)},
        {"epsilon", task.epsilon},
        {"t", static_cast<std::uint64_t>(task.epsilon > 0 ? collision_optimal_t(task.s, task.epsilon) : 0)},
        {"delta", sweep.delta},
        {"caveat", std::string(task.bound == Bound::kEfmrtt ? "validity_unchecked" : "none")},
    };
    const double floored = std::max(values[k], sweep.tolerance);
    result.rows.push_back({coords, "eps_c", values[k], 1, 0});
    result.rows.push_back({coords, "log2_ratio", std::log2(task.epsilon / floored), 1, 0});
  }
  return result;
}

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_coordinate(const CoordinateValue& v) {
  if (const auto* u = std::get_if<std::uint64_t>(&v)) return std::to_string(*u);
  if (const auto* d = std::get_if<double>(&v)) return format_number(*d);
  return std::get<std::string>(v);
}

namespace detail {
inline std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string quoted = "\"";
  for (const char c : text) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + "\"";
}
}  // namespace detail

// Header row from the first row's coordinate keys, then one line per row.
inline void write_csv(std::ostream& out, std::span<const ReportRow> rows) {
  if (rows.empty()) return;
  for (const auto& [key, value] : rows.front().coordinates) out << detail::csv_field(key) << ',';
  out << "metric,value,repetitions,seed\n";
  for (const auto& row : rows) {
    for (const auto& [key, value] : row.coordinates) out << detail::csv_field(format_coordinate(value)) << ',';
    out << detail::csv_field(row.metric) << ',' << format_number(row.value) << ',' << row.repetitions << ','
        << row.seed << '\n';
  }
}

}  // namespace sparse_ldp
