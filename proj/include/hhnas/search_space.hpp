#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace hhnas {

enum class ParamKind { Binary, Discrete, Continuous };

const char *to_string(ParamKind kind) noexcept;
ParamKind param_kind_from_string(const std::string &text);

/// One mutable (or fixed) feature. Binary and discrete values are stored as
/// integral doubles so every feature shares one value type.
struct ParamSpec {
  std::string name;
  ParamKind kind = ParamKind::Continuous;
  double lower = 0.0;
  double upper = 1.0;
  double initial = 0.0;
  bool fixed = false;

  bool operator==(const ParamSpec &) const = default;
};

using ArchIndex = std::uint32_t;
using MacroVector = std::vector<std::uint8_t>;
using MicroValues = std::map<std::string, double>;

struct Candidate {
  MacroVector macro_vector;
  ArchIndex arch_index = 0;
  MicroValues micro_values;
  std::uint64_t iteration = 0;

  bool operator==(const Candidate &) const = default;
};

/// Reads the bits as a base-2 number, first bit most significant.
std::uint64_t decode_arch_index(std::span<const std::uint8_t> macro_vector);

/// Decodes only the non-fixed bits. Throws ValidationError(FixedBitViolation)
/// when a fixed bit differs from its declared initial value.
ArchIndex effective_arch_index(std::span<const std::uint8_t> macro_vector,
                               std::span<const ParamSpec> specs);

/// Hierarchical space: binary macro vector plus one micro parameter list per
/// effective architecture index. Immutable after construction.
class SearchSpace {
public:
  SearchSpace(std::vector<ParamSpec> macro_params,
              std::map<ArchIndex, std::vector<ParamSpec>> micro_params);

  std::span<const ParamSpec> macro_params() const noexcept {
    return macro_params_;
  }
  std::span<const ParamSpec> micro_params(ArchIndex arch) const;
  const std::map<ArchIndex, std::vector<ParamSpec>> &all_micro_params() const noexcept {
    return micro_params_;
  }

  std::size_t free_bit_count() const noexcept { return free_bits_; }
  std::size_t arch_count() const noexcept { return std::size_t{1} << free_bits_; }

  const ParamSpec *find_micro(ArchIndex arch, const std::string &name) const;

private:
  std::vector<ParamSpec> macro_params_;
  std::map<ArchIndex, std::vector<ParamSpec>> micro_params_;
  std::size_t free_bits_ = 0;
};

void validate_spec(const ParamSpec &spec, const std::string &scope);

/// Throws ValidationError on the first violated Candidate invariant.
void validate_candidate(const SearchSpace &space, const Candidate &cand);

Candidate initial_candidate(const SearchSpace &space);

/// Micro values of `arch` set to their declared initials.
MicroValues initial_micro_values(const SearchSpace &space, ArchIndex arch);

// Feature identifiers shared by the Q-table, Gaussian store and records.
std::string macro_feature_id(const std::string &name);
std::string micro_feature_id(ArchIndex arch, const std::string &name);
std::string macro_group();
std::string micro_group(ArchIndex arch);

} // namespace hhnas
