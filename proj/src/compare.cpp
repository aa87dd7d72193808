#include "hhnas/compare.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "hhnas/error.hpp"

namespace hhnas {

using nlohmann::json;

std::string PolicySpec::label() const {
  if (mode != PolicyMode::FixedProb)
    return to_string(mode);
  std::ostringstream out;
  out << "fixed_prob(" << fixed_prob << ")";
  return out.str();
}

PolicySpec policy_spec_from_string(const std::string &text) {
  PolicySpec spec;
  if (text == "adaptive") {
    spec.mode = PolicyMode::Adaptive;
    return spec;
  }
  if (text == "random_search") {
    spec.mode = PolicyMode::RandomSearch;
    return spec;
  }
  const std::string prefix = "fixed_prob";
  if (text.rfind(prefix, 0) == 0) {
    std::string arg = text.substr(prefix.size());
    if (!arg.empty() && (arg.front() == ':' || arg.front() == '('))
      arg.erase(0, 1);
    if (!arg.empty() && arg.back() == ')')
      arg.pop_back();
    spec.mode = PolicyMode::FixedProb;
    if (!arg.empty()) {
      try {
        std::size_t used = 0;
        spec.fixed_prob = std::stod(arg, &used);
        if (used != arg.size())
          throw std::invalid_argument(arg);
      } catch (const std::exception &) {
        throw ConfigError("policy", "bad probability in '" + text + "'");
      }
    }
    if (!(spec.fixed_prob >= 0.0 && spec.fixed_prob <= 1.0))
      throw ConfigError("policy", "probability out of [0, 1] in '" + text + "'");
    return spec;
  }
  throw ConfigError("policy", "unknown policy '" + text + "'");
}

Quartiles quartiles(std::vector<double> values) {
  if (values.empty())
    return {};
  std::sort(values.begin(), values.end());
  auto at = [&](double q) {
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    if (lo == hi)
      return values[lo];
    // Any weight on an unreached (+inf) entry makes the quantile unreached.
    if (std::isinf(values[hi]))
      return values[hi];
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  return {at(0.25), at(0.5), at(0.75)};
}

namespace {

CellResult run_cell(const SearchSpace &space, const EvaluatorFactory &factory,
                    const PolicySpec &policy, std::uint64_t seed,
                    std::uint64_t iterations, double threshold, EngineConfig cfg) {
  CellResult cell;
  cell.seed = seed;
  cfg.iterations = iterations;
  cfg.seed = seed;
  cfg.policy.mode = policy.mode;
  cfg.policy.fixed_prob = policy.fixed_prob;
  try {
    auto evaluator = factory(seed);
    cell.run = run_search(space, *evaluator, cfg);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto &r : cell.run.history) {
      best = std::max(best, r.reward);
      cell.best_by_iteration.push_back(best);
      if (!cell.iterations_to_threshold && best >= threshold)
        cell.iterations_to_threshold = r.iteration;
    }
  } catch (const std::exception &e) {
    cell.error = e.what();
  }
  return cell;
}

} // namespace

ComparisonReport compare_policies(const SearchSpace &space,
                                  const EvaluatorFactory &factory,
                                  const std::vector<PolicySpec> &policies,
                                  const std::vector<std::uint64_t> &seeds,
                                  std::uint64_t iterations, double threshold,
                                  const EngineConfig &base, unsigned threads) {
  if (seeds.size() < 2)
    throw ConfigError("bench/seeds", "at least two seeds are required");
  if (policies.empty())
    throw ConfigError("bench/policies", "at least one policy is required");

  ComparisonReport report;
  report.threshold = threshold;
  report.iterations = iterations;
  report.policies.resize(policies.size());
  for (std::size_t p = 0; p < policies.size(); ++p) {
    report.policies[p].policy = policies[p];
    report.policies[p].cells.resize(seeds.size());
  }

  const std::size_t total = policies.size() * seeds.size();
  if (threads == 0)
    threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, total));

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t job = next++; job < total; job = next++) {
      const auto p = job / seeds.size();
      const auto s = job % seeds.size();
      report.policies[p].cells[s] =
          run_cell(space, factory, policies[p], seeds[s], iterations, threshold, base);
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t)
    pool.emplace_back(worker);
  worker();
  for (auto &t : pool)
    t.join();

  for (auto &pr : report.policies) {
    std::vector<double> itt;
    for (const auto &cell : pr.cells) {
      if (cell.error) {
        ++pr.failed;
        continue;
      }
      if (cell.iterations_to_threshold) {
        ++pr.reached;
        itt.push_back(static_cast<double>(*cell.iterations_to_threshold));
      } else {
        itt.push_back(std::numeric_limits<double>::infinity());
      }
    }
    pr.iterations_to_threshold = quartiles(itt);
    for (std::uint64_t i = 0; i < iterations; ++i) {
      std::vector<double> column;
      for (const auto &cell : pr.cells) {
        if (!cell.error && i < cell.best_by_iteration.size())
          column.push_back(cell.best_by_iteration[i]);
      }
      pr.best_curve.push_back(quartiles(std::move(column)));
    }
  }
  return report;
}

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string itt_text(double v, std::uint64_t n) {
  if (std::isinf(v))
    return "not reached (" + std::to_string(n) + ")";
  std::ostringstream out;
  out << v;
  return out.str();
}

} // namespace

json comparison_to_json(const ComparisonReport &report) {
  json policies = json::array();
  for (const auto &pr : report.policies) {
    json cells = json::array();
    for (const auto &cell : pr.cells) {
      json c{{"seed", cell.seed}};
      if (cell.error) {
        c["error"] = *cell.error;
      } else {
        c["best_reward"] = cell.run.best_reward;
        c["iterations_to_threshold"] =
            cell.iterations_to_threshold ? json(*cell.iterations_to_threshold) : json(nullptr);
      }
      cells.push_back(std::move(c));
    }
    json curve = json::array();
    for (const auto &q : pr.best_curve)
      curve.push_back({q.q1, q.median, q.q3});
    const auto &itt = pr.iterations_to_threshold;
    policies.push_back(json{{"policy", pr.policy.label()},
                            {"reached", pr.reached},
                            {"failed", pr.failed},
                            {"iterations_to_threshold",
                             {{"q1", finite_or_null(itt.q1)},
                              {"median", finite_or_null(itt.median)},
                              {"q3", finite_or_null(itt.q3)}}},
                            {"best_curve", std::move(curve)},
                            {"cells", std::move(cells)}});
  }
  return json{{"threshold", report.threshold},
              {"iterations", report.iterations},
              {"policies", std::move(policies)}};
}

std::string comparison_csv(const ComparisonReport &report) {
  std::ostringstream out;
  out << "policy,reached,failed,itt_q1,itt_median,itt_q3,final_best_q1,final_best_median,"
         "final_best_q3\n";
  for (const auto &pr : report.policies) {
    const auto &itt = pr.iterations_to_threshold;
    const Quartiles last = pr.best_curve.empty() ? Quartiles{} : pr.best_curve.back();
    out << pr.policy.label() << ',' << pr.reached << ',' << pr.failed << ','
        << itt_text(itt.q1, report.iterations) << ','
        << itt_text(itt.median, report.iterations) << ','
        << itt_text(itt.q3, report.iterations) << ',' << json(last.q1).dump() << ','
        << json(last.median).dump() << ',' << json(last.q3).dump() << '\n';
  }
  return out.str();
}

std::string comparison_curve_csv(const ComparisonReport &report) {
  std::ostringstream out;
  out << "iteration";
  for (const auto &pr : report.policies) {
    const auto l = pr.policy.label();
    out << ',' << l << "_q1," << l << "_median," << l << "_q3";
  }
  out << '\n';
  for (std::uint64_t i = 0; i < report.iterations; ++i) {
    out << i + 1;
    for (const auto &pr : report.policies) {
      const auto &q = pr.best_curve[i];
      out << ',' << json(q.q1).dump() << ',' << json(q.median).dump() << ','
          << json(q.q3).dump();
    }
    out << '\n';
  }
  return out.str();
}

std::string comparison_table(const ComparisonReport &report) {
  std::ostringstream out;
  out << "threshold " << report.threshold << ", " << report.iterations
      << " iterations\n";
  out << std::left << std::setw(20) << "policy" << std::setw(10) << "reached"
      << std::setw(26) << "iters-to-threshold (med)" << std::setw(24)
      << "IQR" << "final best (med [IQR])\n";
  for (const auto &pr : report.policies) {
    const auto &itt = pr.iterations_to_threshold;
    const Quartiles last = pr.best_curve.empty() ? Quartiles{} : pr.best_curve.back();
    std::ostringstream reached, iqr, best;
    reached << pr.reached << "/" << pr.cells.size() - pr.failed;
    iqr << "[" << itt_text(itt.q1, report.iterations) << ", "
        << itt_text(itt.q3, report.iterations) << "]";
    best << std::fixed << std::setprecision(4) << last.median << " [" << last.q1 << ", "
         << last.q3 << "]";
    out << std::left << std::setw(20) << pr.policy.label() << std::setw(10) << reached.str()
        << std::setw(26) << itt_text(itt.median, report.iterations) << std::setw(24)
        << iqr.str() << best.str();
    if (pr.failed)
      out << "  (" << pr.failed << " failed)";
    out << '\n';
  }
  return out.str();
}

} // namespace hhnas
