#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hhnas/adaptive_stats.hpp"
#include "hhnas/rng.hpp"
#include "hhnas/search_space.hpp"

namespace hhnas {

enum class Action { Flip, Plus, Minus };

const char *to_string(Action a) noexcept;
Action action_from_string(const std::string &s);

enum class ContinuousMutation { MeanRelative, ValueRelative };

/// How features are chosen for mutation.
///   Adaptive   - P(s) from the Q-table, actions by Q ratio, Q updated.
///   FixedProb  - constant P(s) = fixed_prob, 50/50 actions, no Q updates.
///   RandomSearch - every iteration samples a fresh uniform candidate.
enum class PolicyMode { Adaptive, FixedProb, RandomSearch };

struct MutationPolicyConfig {
  double max_prob = 0.5;
  std::optional<double> macro_max_prob;
  std::optional<double> micro_max_prob;
  double q_init = 1.0;
  double q_floor = 0.05;
  double q_learning_rate = 1.0;
  ContinuousMutation continuous_mutation = ContinuousMutation::MeanRelative;
  PolicyMode mode = PolicyMode::Adaptive;
  double fixed_prob = 0.5;

  double macro_cap() const { return macro_max_prob.value_or(max_prob); }
  double micro_cap() const { return micro_max_prob.value_or(max_prob); }
  void validate() const;
};

const char *to_string(ContinuousMutation m) noexcept;
const char *to_string(PolicyMode m) noexcept;
ContinuousMutation continuous_mutation_from_string(const std::string &s);
PolicyMode policy_mode_from_string(const std::string &s);

/// Q-values per (feature, action). Binary features carry a single Flip
/// entry; discrete and continuous carry Plus and Minus. Each feature belongs
/// to a normalization group (the macro bits, or one architecture's micro
/// features), and P(s) is normalized by the largest cumulative Q in s's group.
class QTable {
public:
  struct Entry {
    std::string group;
    bool binary = false;
    double flip = 0.0;
    double plus = 0.0;
    double minus = 0.0;

    bool operator==(const Entry &) const = default;
  };

  void add_feature(const std::string &id, const std::string &group, ParamKind kind,
                   double q_init);

  bool contains(const std::string &id) const { return entries_.count(id) != 0; }
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t size() const noexcept { return entries_.size(); }

  const Entry &entry(const std::string &id) const;
  double q(const std::string &id, Action a) const;
  void set_q(const std::string &id, Action a, double value);

  const std::map<std::string, Entry> &entries() const noexcept { return entries_; }

  bool operator==(const QTable &) const = default;

private:
  Entry &mutable_entry(const std::string &id);
  std::map<std::string, Entry> entries_;
};

/// One table entry per non-fixed macro bit and per micro feature of every
/// architecture, all initialized to q_init.
QTable make_q_table(const SearchSpace &space, double q_init);

/// Q(s) = Σ_a Q(s, a).
double cumulative_q(const QTable &table, const std::string &feature);

/// P(s) = Q(s) / max_{s' in group(s)} Q(s') · max_prob.
double mutation_probability(const QTable &table, const std::string &feature,
                            double max_prob);

/// Flip for binary features (no draw); otherwise Plus with probability
/// Q(s,+)/(Q(s,+)+Q(s,−)) using exactly one uniform draw.
Action select_action(const QTable &table, const std::string &feature, Rng &rng);

/// Q(s,a) ← max(q_floor, Q(s,a) + η·delta) for every mutated pair.
struct MutationRecord;
void update_q_values(QTable &table, const MutationRecord &record, double delta,
                     const MutationPolicyConfig &cfg);

/// Stable digest of all Q-values, for trajectory records.
std::string q_digest(const QTable &table);

struct MutationEntry {
  std::string feature_id;
  std::string name;
  bool macro = false;
  Action action = Action::Flip;
  double old_value = 0.0;
  double new_value = 0.0;
  std::optional<double> offset;

  bool operator==(const MutationEntry &) const = default;
};

/// Features whose mutation fired this iteration, in draw order.
struct MutationRecord {
  std::vector<MutationEntry> entries;

  bool empty() const noexcept { return entries.empty(); }
  bool operator==(const MutationRecord &) const = default;
};

/// Returns (new value, sampled offset x for continuous features).
/// `gauss` must be non-null exactly when spec.kind is Continuous.
std::pair<double, std::optional<double>>
mutate_value(const ParamSpec &spec, double current, Action action,
             const GaussianState *gauss, Rng &rng,
             ContinuousMutation mode = ContinuousMutation::MeanRelative);

/// Decides whether a feature mutates this iteration. The default draws one
/// uniform and fires when it falls below p.
using FireFn = std::function<bool(const std::string &feature_id, double p, Rng &rng)>;

bool default_fire(const std::string &feature_id, double p, Rng &rng);

using ArchStore = std::map<ArchIndex, MicroValues>;

/// Mutation probability of a feature under the configured policy mode.
double feature_probability(const QTable &table, const std::string &feature,
                           bool macro, const MutationPolicyConfig &cfg);

/// Macro bits (in order) may flip, the architecture is re-decoded and, if it
/// changed, micro values resume from `arch_store` (or initials). Then each
/// micro feature of the resulting architecture may mutate, in declaration
/// order. Draw order per feature: fire, action, offset.
std::pair<Candidate, MutationRecord>
mutate_candidate(const SearchSpace &space, const Candidate &cand,
                 const QTable &table, const GaussianStore &gauss_store,
                 const ArchStore &arch_store, const MutationPolicyConfig &cfg,
                 Rng &rng, const FireFn &fire = default_fire);

/// Uniformly random in-bounds candidate (random-search baseline).
Candidate sample_uniform_candidate(const SearchSpace &space, std::uint64_t iteration,
                                   Rng &rng);

} // namespace hhnas
